#pragma once
#include <cstdint>
#include <functional>
#include <vector>

#include "adsched/sim.hpp"

namespace adsched {

// Gain schedule and rollout sizes for the policy-gradient search.
// a_n = epsilon (n+1+varsigma)^-kappa with 0.5 < kappa <= 1,
// c_n = mu (n+1)^-upsilon.
struct SpsaConfig {
    double epsilon = 0.6;
    double varsigma = 10.0;
    double kappa = 0.602;
    double mu = 1.0;
    double upsilon = 0.101;
    int N = 200;              // rollout horizon
    int batch = 500;          // rollouts per objective evaluation
    int iterations = 300;     // gradient updates per restart
    int restarts = 10;
    uint64_t seed = 1;
    Completion completion = Completion::Truncate;

    void validate() const;
};

struct GainPair {
    double a;
    double c;
};
GainPair gain_schedule(const SpsaConfig& cfg, int n);

/// Mean discounted reward of the policy over a seeded batch of finite-horizon
/// rollouts. Sessions that place fewer than L stops contribute per the
/// completion rule.
double estimate_reward(const StopProblem& problem, const LinearThresholdPolicy& policy, int N,
                       int batch, uint64_t seed, Completion completion = Completion::Truncate);

/// Two-sided simultaneous-perturbation gradient estimate along a random +-1
/// direction. The same evaluator is called at phi + c w and phi - c w, so any
/// common random numbers it uses are shared between the two sides.
Mat spsa_gradient(const std::function<double(const Mat&)>& objective, const Mat& phi, double c,
                  uint64_t seed);

// Ascent step (the objective is a reward).
Mat spsa_step(const Mat& phi, const Mat& gradient, double a);

struct OptimizationTrace {
    struct Entry {
        int restart;
        int iteration;
        double J;
        Mat phi;
    };
    std::vector<Entry> entries;
    Mat best_phi;
    LinearThresholdPolicy best_policy;
    double best_J = 0.0;     // best objective estimate seen during the search
    double refined_J = 0.0;  // best policy re-evaluated with a 10x batch
};

/// Multi-restart SPSA search for the best feasible linear threshold policy.
/// Restarts run independently (optionally on several threads) from distinct
/// random initial parameters; results are merged in restart order, so the
/// trace depends only on the config.
OptimizationTrace optimize(const StopProblem& problem, const SpsaConfig& cfg, int threads = 1);

}  // namespace adsched
