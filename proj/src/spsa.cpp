#include "adsched/spsa.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "adsched/parallel.hpp"
#include "adsched/rng.hpp"

namespace adsched {

void SpsaConfig::validate() const {
    if (!(kappa > 0.5 && kappa <= 1.0)) throw std::invalid_argument("kappa must lie in (0.5, 1]");
    if (!(epsilon > 0.0 && varsigma > 0.0 && mu > 0.0 && upsilon > 0.0))
        throw std::invalid_argument("gain constants must be positive");
    if (N < 1) throw std::invalid_argument("rollout horizon must be >= 1");
    if (batch < 1) throw std::invalid_argument("batch must be >= 1");
    if (iterations < 0) throw std::invalid_argument("iterations must be >= 0");
    if (restarts < 1) throw std::invalid_argument("restarts must be >= 1");
}

GainPair gain_schedule(const SpsaConfig& cfg, int n) {
    if (n < 0) throw std::domain_error("n must be >= 0");
    return {cfg.epsilon * std::pow(double(n) + 1.0 + cfg.varsigma, -cfg.kappa),
            cfg.mu * std::pow(double(n) + 1.0, -cfg.upsilon)};
}

double estimate_reward(const StopProblem& problem, const LinearThresholdPolicy& policy, int N,
                       int batch, uint64_t seed, Completion completion) {
    if (batch < 1) throw std::domain_error("batch must be >= 1");
    if (N < problem.L) throw std::domain_error("horizon shorter than the number of stops");
    Policy pol = policy;
    return evaluate(problem, pol, N, batch, seed, completion).mean;
}

Mat spsa_gradient(const std::function<double(const Mat&)>& objective, const Mat& phi, double c,
                  uint64_t seed) {
    if (!(c > 0.0)) throw std::domain_error("perturbation size must be positive");
    RngStream rng(seed);
    Mat omega(phi.rows, phi.cols);
    for (double& v : omega.data) v = rng.uniform() < 0.5 ? -1.0 : 1.0;
    Mat up = phi, dn = phi;
    for (size_t i = 0; i < phi.data.size(); ++i) {
        up.data[i] += c * omega.data[i];
        dn.data[i] -= c * omega.data[i];
    }
    const double diff = (objective(up) - objective(dn)) / (2.0 * c);
    Mat grad(phi.rows, phi.cols);
    for (size_t i = 0; i < phi.data.size(); ++i) grad.data[i] = diff * omega.data[i];
    return grad;
}

Mat spsa_step(const Mat& phi, const Mat& gradient, double a) {
    if (!(a >= 0.0)) throw std::domain_error("step size must be nonnegative");
    Mat next = phi;
    for (size_t i = 0; i < phi.data.size(); ++i) next.data[i] += a * gradient.data[i];
    return next;
}

namespace {

// Row 1 columns S-2 and S-1 enter the policy map squared; everything else is
// an angle inside sin^2.
Mat initial_phi(int L, int S, RngStream& rng) {
    Mat phi(L, S - 1);
    const double half_pi = std::acos(0.0);
    for (int l = 0; l < L; ++l)
        for (int j = 0; j < S - 1; ++j) {
            bool magnitude = (l == 0) && (j >= S - 3);
            phi(l, j) = magnitude ? rng.uniform_range(0.0, 2.0)
                                  : rng.uniform_range(0.0, half_pi);
        }
    return phi;
}

}  // namespace

OptimizationTrace optimize(const StopProblem& problem, const SpsaConfig& cfg, int threads) {
    problem.validate();
    cfg.validate();
    const int S = problem.model.S;
    const int L = problem.L;
    if (S < 2) throw std::invalid_argument("linear threshold search needs S >= 2");

    auto objective = [&](const Mat& phi, uint64_t eval_seed) {
        return estimate_reward(problem, phi_to_theta(phi), cfg.N, cfg.batch, eval_seed,
                               cfg.completion);
    };

    struct Local {
        std::vector<OptimizationTrace::Entry> entries;
        Mat best_phi;
        double best_J = -std::numeric_limits<double>::infinity();
    };
    std::vector<Local> locals(cfg.restarts);

    parallel_for(cfg.restarts, threads, [&](int lo, int hi) {
        for (int rs = lo; rs < hi; ++rs) {
            Local& loc = locals[rs];
            RngStream init_rng = RngStream::derive(cfg.seed, 0x1a17, uint64_t(rs));
            Mat phi = initial_phi(L, S, init_rng);
            for (int n = 0;; ++n) {
                LinearThresholdPolicy pol = phi_to_theta(phi);
                if (!check_mlr_constraints(pol).ok || !check_subset_constraints(pol).ok)
                    throw std::logic_error("infeasible iterate escaped the parametrization");
                uint64_t eval_seed = mix_seed(cfg.seed, 0xe7a1, uint64_t(rs), uint64_t(n));
                double J = estimate_reward(problem, pol, cfg.N, cfg.batch, eval_seed,
                                           cfg.completion);
                loc.entries.push_back({rs, n, J, phi});
                if (J > loc.best_J) {
                    loc.best_J = J;
                    loc.best_phi = phi;
                }
                if (n == cfg.iterations) break;
                GainPair gains = gain_schedule(cfg, n);
                uint64_t pert_seed = mix_seed(cfg.seed, 0x9e2b, uint64_t(rs), uint64_t(n));
                uint64_t omega_seed = mix_seed(cfg.seed, 0x03e9, uint64_t(rs), uint64_t(n));
                Mat grad = spsa_gradient(
                    [&](const Mat& ph) { return objective(ph, pert_seed); }, phi, gains.c,
                    omega_seed);
                phi = spsa_step(phi, grad, gains.a);
            }
        }
    });

    OptimizationTrace trace;
    double best = -std::numeric_limits<double>::infinity();
    for (int rs = 0; rs < cfg.restarts; ++rs) {
        for (auto& e : locals[rs].entries) trace.entries.push_back(std::move(e));
        if (locals[rs].best_J > best) {
            best = locals[rs].best_J;
            trace.best_phi = locals[rs].best_phi;
        }
    }
    trace.best_J = best;
    trace.best_policy = phi_to_theta(trace.best_phi);
    trace.refined_J = estimate_reward(problem, trace.best_policy, cfg.N, cfg.batch * 10,
                                      mix_seed(cfg.seed, 0xf1a1), cfg.completion);
    return trace;
}

}  // namespace adsched
