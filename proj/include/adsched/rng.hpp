#pragma once
#include <cmath>
#include <cstdint>
#include <random>

namespace adsched {

inline uint64_t splitmix64(uint64_t& state) {
    uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Combine a master seed with stream ids into an independent stream seed.
inline uint64_t mix_seed(uint64_t master, uint64_t id_a, uint64_t id_b = 0, uint64_t id_c = 0) {
    uint64_t s = master;
    uint64_t h = splitmix64(s);
    s ^= id_a + 0x9e3779b97f4a7c15ULL;
    h ^= splitmix64(s);
    s ^= id_b + 0xc2b2ae3d27d4eb4fULL;
    h ^= splitmix64(s);
    s ^= id_c + 0x165667b19e3779f9ULL;
    h ^= splitmix64(s);
    return h;
}

// Seeded random stream. The engine is the standardized mt19937_64 sequence and
// all distributions are sampled by explicit algorithms below, so a given seed
// reproduces the same draws on any conforming platform.
class RngStream {
  public:
    explicit RngStream(uint64_t seed) : eng_(seed) {}

    static RngStream derive(uint64_t master, uint64_t id_a, uint64_t id_b = 0, uint64_t id_c = 0) {
        return RngStream(mix_seed(master, id_a, id_b, id_c));
    }

    uint64_t raw() { return eng_(); }

    // uniform in [0, 1)
    double uniform() { return double(eng_() >> 11) * 0x1.0p-53; }

    double uniform_range(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // unbiased integer in [0, n)
    int uniform_int(int n) {
        const uint64_t bound = ~uint64_t(0) - (~uint64_t(0) % uint64_t(n));
        uint64_t r;
        do {
            r = eng_();
        } while (r >= bound);
        return int(r % uint64_t(n));
    }

    // index sampled by inverse cdf; weights must be nonnegative, roughly summing to 1
    int categorical(const double* p, int n) {
        double u = uniform();
        double acc = 0.0;
        for (int i = 0; i < n; ++i) {
            acc += p[i];
            if (u < acc) return i;
        }
        return n - 1;
    }

    long long poisson(double mean) { return mean < 30.0 ? poisson_inversion(mean) : poisson_ptrs(mean); }

  private:
    std::mt19937_64 eng_;

    long long poisson_inversion(double mean) {
        // sequential search on the cdf; fine for small means
        const double expm = std::exp(-mean);
        long long k = 0;
        double p = expm, cdf = expm;
        double u = uniform();
        while (u > cdf) {
            ++k;
            p *= mean / double(k);
            cdf += p;
            if (k > 2000) break;  // cdf saturated numerically
        }
        return k;
    }

    // Hormann's transformed rejection (PTRS), valid for mean >= 10
    long long poisson_ptrs(double mean) {
        const double slam = std::sqrt(mean);
        const double loglam = std::log(mean);
        const double b = 0.931 + 2.53 * slam;
        const double a = -0.059 + 0.02483 * b;
        const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
        const double vr = 0.9277 - 3.6224 / (b - 2.0);
        for (;;) {
            double u = uniform() - 0.5;
            double v = uniform();
            double us = 0.5 - std::fabs(u);
            double kf = std::floor((2.0 * a / us + b) * u + mean + 0.43);
            if (us >= 0.07 && v <= vr) return (long long)kf;
            if (kf < 0.0 || (us < 0.013 && v > us)) continue;
            double k = kf;
            if (std::log(v * inv_alpha / (a / (us * us) + b)) <=
                k * loglam - mean - std::lgamma(k + 1.0))
                return (long long)kf;
        }
    }
};

}  // namespace adsched
