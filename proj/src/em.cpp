#include "adsched/em.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "adsched/parallel.hpp"
#include "adsched/rng.hpp"

namespace adsched {

void CountSeries::validate() const {
    if (counts.size() < 2) throw std::invalid_argument("series needs at least 2 samples");
    for (Obs c : counts)
        if (c < 0) throw std::invalid_argument("counts must be nonnegative");
    if (!timestamps.empty() && timestamps.size() != counts.size())
        throw std::invalid_argument("timestamp column length mismatch");
}

namespace {

struct EStep {
    double loglik = 0.0;
    std::vector<Vec> gamma;  // T x S
    Mat xi_sum;              // S x S
};

// Scaled forward-backward; logb(t, i) = log emission of counts[t] in state i.
EStep forward_backward(const Mat& P, const Vec& pi0, const Mat& logb) {
    const int T = logb.rows;
    const int S = logb.cols;
    EStep es;
    es.gamma.assign(T, Vec(S, 0.0));
    es.xi_sum = Mat(S, S, 0.0);

    Mat b(T, S);
    Vec shift(T);
    for (int t = 0; t < T; ++t) {
        double m = -std::numeric_limits<double>::infinity();
        for (int i = 0; i < S; ++i) m = std::max(m, logb(t, i));
        shift[t] = m;
        for (int i = 0; i < S; ++i) b(t, i) = std::exp(logb(t, i) - m);
    }

    Mat alpha(T, S);
    Vec c(T);
    double ll = 0.0;
    for (int i = 0; i < S; ++i) alpha(0, i) = pi0[i] * b(0, i);
    c[0] = 0.0;
    for (int i = 0; i < S; ++i) c[0] += alpha(0, i);
    if (!(c[0] > 0.0)) throw std::runtime_error("zero-probability observation during EM");
    for (int i = 0; i < S; ++i) alpha(0, i) /= c[0];
    ll += std::log(c[0]) + shift[0];
    for (int t = 1; t < T; ++t) {
        double ct = 0.0;
        for (int j = 0; j < S; ++j) {
            double pred = 0.0;
            for (int i = 0; i < S; ++i) pred += alpha(t - 1, i) * P(i, j);
            double v = pred * b(t, j);
            alpha(t, j) = v;
            ct += v;
        }
        if (!(ct > 0.0)) throw std::runtime_error("zero-probability observation during EM");
        for (int j = 0; j < S; ++j) alpha(t, j) /= ct;
        c[t] = ct;
        ll += std::log(ct) + shift[t];
    }
    es.loglik = ll;

    Mat beta(T, S);
    for (int i = 0; i < S; ++i) beta(T - 1, i) = 1.0;
    for (int t = T - 2; t >= 0; --t) {
        for (int i = 0; i < S; ++i) {
            double s = 0.0;
            for (int j = 0; j < S; ++j) s += P(i, j) * b(t + 1, j) * beta(t + 1, j);
            beta(t, i) = s / c[t + 1];
        }
    }
    for (int t = 0; t < T; ++t)
        for (int i = 0; i < S; ++i) es.gamma[t][i] = alpha(t, i) * beta(t, i);
    for (int t = 0; t + 1 < T; ++t)
        for (int i = 0; i < S; ++i) {
            double ai = alpha(t, i);
            if (ai == 0.0) continue;
            for (int j = 0; j < S; ++j)
                es.xi_sum(i, j) += ai * P(i, j) * b(t + 1, j) * beta(t + 1, j) / c[t + 1];
        }
    return es;
}

Mat diag_dominant_transition(int S) {
    Mat P(S, S, 0.0);
    for (int i = 0; i < S; ++i) {
        for (int j = 0; j < S; ++j) P(i, j) = S == 1 ? 1.0 : 0.1 / double(S - 1);
        if (S > 1) P(i, i) = 0.9;
    }
    return P;
}

// Permutation that orders states by descending Poisson mean (or ascending
// expected symbol index for categorical models, symbol 0 being the top bin).
std::vector<int> state_order(const Vec& score) {
    std::vector<int> ord(score.size());
    std::iota(ord.begin(), ord.end(), 0);
    std::stable_sort(ord.begin(), ord.end(), [&](int a, int b) { return score[a] > score[b]; });
    return ord;
}

void permute_model(HmmModel& m, const std::vector<int>& ord) {
    const int S = m.S;
    Mat P2(S, S);
    Vec pi2(S);
    for (int i = 0; i < S; ++i) {
        pi2[i] = m.pi0[ord[i]];
        for (int j = 0; j < S; ++j) P2(i, j) = m.P(ord[i], ord[j]);
    }
    m.P = std::move(P2);
    m.pi0 = std::move(pi2);
    if (m.emission == EmissionKind::Poisson) {
        Vec g2(S);
        for (int i = 0; i < S; ++i) g2[i] = m.g[ord[i]];
        m.g = std::move(g2);
    } else {
        Mat B2(S, m.B.cols);
        for (int i = 0; i < S; ++i)
            for (int j = 0; j < m.B.cols; ++j) B2(i, j) = m.B(ord[i], j);
        m.B = std::move(B2);
    }
}

void renormalize_rows(Mat& m) {
    for (int i = 0; i < m.rows; ++i) {
        double s = 0.0;
        for (int j = 0; j < m.cols; ++j) s += m(i, j);
        if (s > 0.0)
            for (int j = 0; j < m.cols; ++j) m(i, j) /= s;
    }
}

int poisson_free_params(int S) { return S * (S - 1) + S + (S - 1); }
int categorical_free_params(int S, int M) { return S * (S - 1) + S * (M - 1) + (S - 1); }

bool detect_rank_deficiency(const HmmModel& m, const std::vector<Vec>& gamma) {
    const int S = m.S;
    if (S <= 1) return false;
    for (int i = 0; i < S; ++i)
        for (int j = i + 1; j < S; ++j) {
            if (m.emission == EmissionKind::Poisson) {
                if (std::fabs(m.g[i] - m.g[j]) <= 1e-6 * std::max(1.0, std::fabs(m.g[i])))
                    return true;
            } else {
                double d = 0.0;
                for (int k = 0; k < m.B.cols; ++k) d += std::fabs(m.B(i, k) - m.B(j, k));
                if (d <= 1e-8) return true;
            }
        }
    Vec occ(S, 0.0);
    for (const Vec& gt : gamma)
        for (int i = 0; i < S; ++i) occ[i] += gt[i];
    for (int i = 0; i < S; ++i)
        if (occ[i] < 1e-3) return true;
    return false;
}

}  // namespace

FitResult fit_em(const CountSeries& series, int S, uint64_t seed, double tol, int max_iters) {
    series.validate();
    if (S < 1) throw std::invalid_argument("S must be >= 1");
    if (int(series.counts.size()) <= S) throw std::invalid_argument("series shorter than S");
    const int T = int(series.counts.size());

    // quantile-block means as initial emission rates, highest block first
    std::vector<Obs> sorted = series.counts;
    std::sort(sorted.begin(), sorted.end(), std::greater<Obs>());
    Vec g(S);
    RngStream rng = RngStream::derive(seed, 0xe111);
    for (int i = 0; i < S; ++i) {
        size_t lo = size_t(i) * T / S, hi = size_t(i + 1) * T / S;
        double m = 0.0;
        for (size_t t = lo; t < hi; ++t) m += double(sorted[t]);
        m /= double(hi - lo);
        g[i] = std::max(1e-6, m * (1.0 + 0.1 * (rng.uniform() - 0.5)));
    }
    Mat P = diag_dominant_transition(S);
    Vec pi0(S, 1.0 / S);

    FitResult res;
    double prev_ll = -std::numeric_limits<double>::infinity();
    std::vector<Vec> last_gamma;
    Vec logg(S);
    Mat logb(T, S);
    int it = 0;
    for (; it < max_iters; ++it) {
        for (int i = 0; i < S; ++i) logg[i] = std::log(g[i]);
        for (int t = 0; t < T; ++t) {
            const double y = double(series.counts[t]);
            const double lgy = std::lgamma(y + 1.0);
            for (int i = 0; i < S; ++i) logb(t, i) = y * logg[i] - g[i] - lgy;
        }
        EStep es = forward_backward(P, pi0, logb);
        if (es.loglik < prev_ll - 1e-8 * (1.0 + std::fabs(prev_ll)))
            throw std::logic_error("EM log-likelihood decreased");
        const bool done =
            it > 0 && (es.loglik - prev_ll) < tol * std::max(1.0, std::fabs(es.loglik));
        prev_ll = es.loglik;
        last_gamma = std::move(es.gamma);

        // M-step
        Mat Pn = es.xi_sum;
        for (int i = 0; i < S; ++i) {
            double rs = 0.0;
            for (int j = 0; j < S; ++j) rs += Pn(i, j);
            if (rs > 0.0)
                for (int j = 0; j < S; ++j) Pn(i, j) /= rs;
            else
                for (int j = 0; j < S; ++j) Pn(i, j) = P(i, j);
        }
        Vec num(S, 0.0), den(S, 0.0);
        for (int t = 0; t < T; ++t)
            for (int i = 0; i < S; ++i) {
                num[i] += last_gamma[t][i] * double(series.counts[t]);
                den[i] += last_gamma[t][i];
            }
        for (int i = 0; i < S; ++i)
            if (den[i] > 0.0) g[i] = std::max(1e-8, num[i] / den[i]);
        P = std::move(Pn);
        pi0 = last_gamma[0];
        double psum = sum(pi0);
        for (double& v : pi0) v /= psum;

        if (done) {
            res.converged = true;
            ++it;
            break;
        }
    }
    res.iterations = it;

    // log-likelihood of the returned parameters
    for (int i = 0; i < S; ++i) logg[i] = std::log(g[i]);
    for (int t = 0; t < T; ++t) {
        const double y = double(series.counts[t]);
        const double lgy = std::lgamma(y + 1.0);
        for (int i = 0; i < S; ++i) logb(t, i) = y * logg[i] - g[i] - lgy;
    }
    EStep fin = forward_backward(P, pi0, logb);
    res.loglik = fin.loglik;

    renormalize_rows(P);
    HmmModel model = HmmModel::poisson(std::move(P), std::move(pi0), std::move(g));
    permute_model(model, state_order(model.g));
    res.rank_deficient = detect_rank_deficiency(model, fin.gamma);
    res.model = std::move(model);
    const int k = poisson_free_params(S);
    res.aic = -2.0 * res.loglik + 2.0 * k;
    res.bic = -2.0 * res.loglik + k * std::log(double(T));
    return res;
}

FitResult fit_em_categorical(const std::vector<Obs>& symbols, int S, int num_symbols,
                             uint64_t seed, double tol, int max_iters) {
    if (S < 1) throw std::invalid_argument("S must be >= 1");
    if (num_symbols < 2) throw std::invalid_argument("need at least 2 symbols");
    if (int(symbols.size()) <= S) throw std::invalid_argument("series shorter than S");
    for (Obs y : symbols)
        if (y < 0 || y >= num_symbols) throw std::invalid_argument("symbol out of range");
    const int T = int(symbols.size());
    const int M = num_symbols;

    RngStream rng = RngStream::derive(seed, 0xe112);
    Mat B(S, M);
    for (int i = 0; i < S; ++i) {
        double rs = 0.0;
        for (int j = 0; j < M; ++j) {
            B(i, j) = 0.5 + rng.uniform();
            rs += B(i, j);
        }
        for (int j = 0; j < M; ++j) B(i, j) /= rs;
    }
    Mat P = diag_dominant_transition(S);
    Vec pi0(S, 1.0 / S);

    FitResult res;
    double prev_ll = -std::numeric_limits<double>::infinity();
    Mat logb(T, S);
    std::vector<Vec> last_gamma;
    int it = 0;
    for (; it < max_iters; ++it) {
        for (int t = 0; t < T; ++t)
            for (int i = 0; i < S; ++i) {
                double p = B(i, int(symbols[t]));
                logb(t, i) = p > 0.0 ? std::log(p) : -745.0;
            }
        EStep es = forward_backward(P, pi0, logb);
        if (es.loglik < prev_ll - 1e-8 * (1.0 + std::fabs(prev_ll)))
            throw std::logic_error("EM log-likelihood decreased");
        const bool done =
            it > 0 && (es.loglik - prev_ll) < tol * std::max(1.0, std::fabs(es.loglik));
        prev_ll = es.loglik;
        last_gamma = std::move(es.gamma);

        Mat Pn = es.xi_sum;
        for (int i = 0; i < S; ++i) {
            double rs = 0.0;
            for (int j = 0; j < S; ++j) rs += Pn(i, j);
            if (rs > 0.0)
                for (int j = 0; j < S; ++j) Pn(i, j) /= rs;
            else
                for (int j = 0; j < S; ++j) Pn(i, j) = P(i, j);
        }
        Mat Bn(S, M, 0.0);
        Vec den(S, 0.0);
        for (int t = 0; t < T; ++t)
            for (int i = 0; i < S; ++i) {
                Bn(i, int(symbols[t])) += last_gamma[t][i];
                den[i] += last_gamma[t][i];
            }
        for (int i = 0; i < S; ++i) {
            if (den[i] > 0.0)
                for (int j = 0; j < M; ++j) Bn(i, j) /= den[i];
            else
                for (int j = 0; j < M; ++j) Bn(i, j) = B(i, j);
        }
        P = std::move(Pn);
        B = std::move(Bn);
        pi0 = last_gamma[0];
        double psum = sum(pi0);
        for (double& v : pi0) v /= psum;
        if (done) {
            res.converged = true;
            ++it;
            break;
        }
    }
    res.iterations = it;

    for (int t = 0; t < T; ++t)
        for (int i = 0; i < S; ++i) {
            double p = B(i, int(symbols[t]));
            logb(t, i) = p > 0.0 ? std::log(p) : -745.0;
        }
    EStep fin = forward_backward(P, pi0, logb);
    res.loglik = fin.loglik;

    renormalize_rows(P);
    renormalize_rows(B);
    HmmModel model = HmmModel::categorical(std::move(P), std::move(pi0), std::move(B));
    // order by ascending expected symbol index: symbol 0 is the top bin
    Vec score(S, 0.0);
    for (int i = 0; i < S; ++i)
        for (int j = 0; j < M; ++j) score[i] -= model.B(i, j) * double(j);
    permute_model(model, state_order(score));
    res.rank_deficient = detect_rank_deficiency(model, fin.gamma);
    res.model = std::move(model);
    const int k = categorical_free_params(S, M);
    res.aic = -2.0 * res.loglik + 2.0 * k;
    res.bic = -2.0 * res.loglik + k * std::log(double(T));
    return res;
}

SelectResult select_model(const CountSeries& series, const std::vector<int>& s_range,
                          uint64_t seed, int restarts, double tol, int max_iters, int threads) {
    if (s_range.empty()) throw std::invalid_argument("empty model-order range");
    struct Slot {
        FitResult fit;
        bool set = false;
    };
    std::vector<Slot> best(s_range.size());
    parallel_for(int(s_range.size()), threads, [&](int lo, int hi) {
        for (int k = lo; k < hi; ++k) {
            const int S = s_range[k];
            for (int j = 0; j < restarts; ++j) {
                FitResult f =
                    fit_em(series, S, mix_seed(seed, uint64_t(S), uint64_t(j)), tol, max_iters);
                if (!best[k].set || f.loglik > best[k].fit.loglik) {
                    best[k].fit = std::move(f);
                    best[k].set = true;
                }
            }
        }
    });
    SelectResult out;
    int arg = 0;
    for (size_t k = 0; k < s_range.size(); ++k) {
        out.scores.push_back(
            {s_range[k], best[k].fit.loglik, best[k].fit.aic, best[k].fit.bic});
        if (best[k].fit.bic < best[arg].fit.bic) arg = int(k);
    }
    out.best = best[arg].fit;
    return out;
}

namespace {

// Emission cdf and pmf at one count, per state.
void emission_cdf_pmf(const HmmModel& m, Obs y, Vec& cdf, Vec& pmf) {
    const int S = m.S;
    cdf.assign(S, 0.0);
    pmf.assign(S, 0.0);
    if (m.emission == EmissionKind::Categorical) {
        for (int i = 0; i < S; ++i) {
            for (Obs k = 0; k <= y && k < m.B.cols; ++k) cdf[i] += m.B(i, int(k));
            pmf[i] = y < m.B.cols ? m.B(i, int(y)) : 0.0;
        }
        return;
    }
    for (int i = 0; i < S; ++i) {
        double p = std::exp(-m.g[i]);
        double acc = 0.0;
        for (Obs k = 0;; ++k) {
            if (k > 0) p *= m.g[i] / double(k);
            if (k == y) {
                pmf[i] = p;
                acc += p;
                break;
            }
            acc += p;
        }
        cdf[i] = std::min(1.0, acc);
    }
}

}  // namespace

PseudoResiduals pseudo_residuals(const HmmModel& model, const CountSeries& series) {
    series.validate();
    const int T = int(series.counts.size());
    PseudoResiduals out;
    out.z.reserve(T);
    Vec pred = model.pi0;  // law of the state emitting the first sample
    Vec cdf, pmf;
    for (int t = 0; t < T; ++t) {
        const Obs y = series.counts[t];
        emission_cdf_pmf(model, y, cdf, pmf);
        double f_hi = 0.0, f_mass = 0.0;
        for (int i = 0; i < model.S; ++i) {
            f_hi += pred[i] * cdf[i];
            f_mass += pred[i] * pmf[i];
        }
        double f_lo = f_hi - f_mass;
        if (!(f_mass > 0.0)) out.outliers.push_back(t);
        double u = 0.5 * (f_lo + f_hi);
        u = std::min(1.0 - 1e-15, std::max(1e-15, u));
        out.z.push_back(normal_quantile(u));

        Vec post(model.S);
        double s = 0.0;
        for (int i = 0; i < model.S; ++i) {
            post[i] = pred[i] * pmf[i];
            s += post[i];
        }
        if (s > 0.0)
            for (double& v : post) v /= s;
        else
            post = pred;  // impossible observation: keep the prediction
        pred = transpose_mul(model.P, post);
    }
    std::vector<double> sorted = out.z;
    std::sort(sorted.begin(), sorted.end());
    out.qq.reserve(T);
    for (int k = 0; k < T; ++k)
        out.qq.push_back({normal_quantile((k + 0.5) / double(T)), sorted[k]});
    return out;
}

QuantizeResult quantize(const std::vector<Obs>& counts, int levels) {
    if (levels < 2) throw std::invalid_argument("levels must be >= 2");
    if (counts.empty()) throw std::invalid_argument("empty series");
    std::vector<Obs> sorted = counts;
    std::sort(sorted.begin(), sorted.end());
    std::vector<Obs> thr(levels - 1);
    for (int k = 1; k < levels; ++k)
        thr[k - 1] = sorted[size_t(k) * sorted.size() / levels];
    QuantizeResult out;
    out.symbols.reserve(counts.size());
    std::vector<char> seen(levels, 0);
    for (Obs y : counts) {
        int s = 0;
        for (int k = 0; k < levels - 1; ++k)
            if (y < thr[k]) ++s;
        out.symbols.push_back(s);
        seen[s] = 1;
    }
    for (char c : seen) out.occupied_bins += c;
    return out;
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw std::domain_error("quantile argument must lie in (0, 1)");
    // Acklam's rational approximation with one Halley refinement
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    const double plow = 0.02425, phigh = 1.0 - plow;
    double x;
    if (p < plow) {
        double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= phigh) {
        double q = p - 0.5, r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        double q = std::sqrt(-2.0 * std::log(1.0 - p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    constexpr double sqrt_two_pi = 2.506628274631000502;
    double e = normal_cdf(x) - p;
    double u = e * sqrt_two_pi * std::exp(x * x / 2.0);
    x = x - u / (1.0 + x * u / 2.0);
    return x;
}

}  // namespace adsched
