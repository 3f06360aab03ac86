#pragma once
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "adsched/linear_policy.hpp"
#include "adsched/stopping.hpp"

namespace adsched {

// Stops at the fixed mid-roll slots round(k N / (L+1)), k = 1..L.
struct PeriodicPolicy {
    int horizon = 0;
    int stops = 0;
    std::vector<int> slots() const;
};

// Stops at L distinct slots drawn uniformly from {0..N-1}; the draw is a
// function of (policy seed, rollout seed) so paired rollouts stay paired.
struct RandomPolicy {
    int horizon = 0;
    int stops = 0;
    uint64_t seed = 0;
    std::vector<int> slots(uint64_t rollout_seed) const;
};

// Acts by comparing the interpolated Q values of a grid solution; ties stop.
struct GridDpPolicy {
    std::shared_ptr<const GridSolution> solution;
    std::shared_ptr<const BeliefGrid> grid;
    Action decide(int stops_remaining, const Vec& pi) const;
};

using Policy = std::variant<GridDpPolicy, LinearThresholdPolicy, PeriodicPolicy, RandomPolicy>;

struct StopRecord {
    int t;
    int state;
    double reward;  // undiscounted r(X_t)
};

struct RolloutResult {
    std::vector<StopRecord> stops;
    double total = 0.0;  // sum of rho^t * reward over stops
    bool all_stops_placed = false;
};

// Completion rule for rollouts that place fewer than L stops by the horizon.
enum class Completion { Truncate, Discard };

/// Simulates one session of N decision epochs. The trajectory depends only on
/// the seed, never on the policy, so equal seeds give paired comparisons.
/// Belief-based policies act on pi0 at t = 0 and on the filtered posterior
/// afterwards; the filter carries across stops unchanged.
RolloutResult rollout(const StopProblem& problem, const Policy& policy, int N, uint64_t seed);

// Per-step trace of a single rollout, for diagnostics exports.
struct RolloutTraceRow {
    int t;
    int state;
    Obs obs;  // -1 at t = 0 (no observation before the first transition)
    Vec belief;
    int stops_remaining;
    int action;
};
std::vector<RolloutTraceRow> rollout_trace(const StopProblem& problem, const Policy& policy, int N,
                                           uint64_t seed);

struct Evaluation {
    double mean = 0.0;
    double stderr_ = 0.0;
    int batch = 0;
};

Evaluation evaluate(const StopProblem& problem, const Policy& policy, int N, int batch,
                    uint64_t master_seed, Completion completion = Completion::Truncate);

struct ComparisonReport {
    struct Row {
        std::string name;
        double mean;
        double stderr_;
        int batch;
        uint64_t seed;
    };
    struct Ratio {
        std::string a, b;
        double value;
    };
    std::vector<Row> rows;
    std::vector<Ratio> ratios;  // all ordered pairs
    int horizon = 0;
};

/// Paired-seed Monte-Carlo comparison: every policy sees the same batch of
/// simulated sessions.
ComparisonReport compare(const StopProblem& problem,
                         const std::vector<std::pair<std::string, Policy>>& policies, int N,
                         int batch, uint64_t seed, int threads = 1);

struct DetectionResult {
    std::optional<int> stop_time;  // nullopt = series exhausted without stopping
    std::vector<Vec> belief_path;  // belief before acting at each t
};

struct DetectOptions {
    int grid_resolution = 200;
    double tol = 1e-8;
    int max_iters = 5000;
};

/// Single-stop change detector: solves the L = 1 problem for the 2-state
/// model and runs the filter over a recorded observation series, stopping the
/// first time the posterior enters the stopping set.
DetectionResult detect_change(const HmmModel& model, const Vec& reward,
                              const std::vector<Obs>& observations, double rho,
                              const DetectOptions& opts = {});

}  // namespace adsched
