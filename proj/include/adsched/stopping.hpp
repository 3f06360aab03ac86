#pragma once
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "adsched/hmm.hpp"

namespace adsched {

// Multiple-stopping POMDP instance: schedule L ads, collecting r(X) at each
// stop, under discount rho. The reward vector may optionally vary with the
// number of stops remaining (r_by_l[l-1] overrides r).
struct StopProblem {
    HmmModel model;
    Vec r;
    int L = 1;
    double rho = 0.9;
    std::vector<Vec> r_by_l;  // optional, size L when present

    const Vec& reward_for(int stops_remaining) const {
        return r_by_l.empty() ? r : r_by_l[size_t(stops_remaining - 1)];
    }
    void validate() const;
};

struct AssumptionWitness {
    std::string assumption;  // "A1".."A4"
    std::string detail;      // human-readable inequality with 1-based state indices
};

// Result of checking (A1) r decreasing, (A2) emission TP2 (g decreasing for
// Poisson), (A3) P TP2, (A4) (I - rho P') r decreasing.
struct AssumptionReport {
    bool a1 = false, a2 = false, a3 = false, a4 = false;
    std::vector<AssumptionWitness> witnesses;
    bool all() const { return a1 && a2 && a3 && a4; }
    std::string summary() const;
};

AssumptionReport check_assumptions(const StopProblem& problem);

/// Smallest count Y_max such that every state's emission puts mass at least
/// 1 - mass_tol on {0..Y_max}. Categorical emissions return M-1 (no
/// truncation). The DP folds the residual tail into the Y_max bucket so the
/// truncated emission rows still sum to one exactly.
Obs truncate_observations(const HmmModel& model, double mass_tol = 1e-10);

// Regular grid on the belief simplex: all compositions (k_1..k_S) of M,
// mapped to beliefs k / M.
struct BeliefGrid {
    int S = 0, M = 0;
    std::vector<std::vector<int>> comps;
    std::vector<Vec> beliefs;

    static BeliefGrid regular(int S, int M);
    size_t size() const { return comps.size(); }
    int index_of(const std::vector<int>& comp) const;  // -1 when absent

  private:
    std::unordered_map<uint64_t, int> lookup_;
    uint64_t key(const std::vector<int>& comp) const;
};

// Barycentric stencil of the Freudenthal cell containing a belief: at most S
// grid vertices with convex weights.
struct InterpStencil {
    static constexpr int kMax = 8;
    int idx[kMax];
    double w[kMax];
    int n = 0;
};

InterpStencil simplex_stencil(const BeliefGrid& grid, const Vec& pi);
double interpolate(const BeliefGrid& grid, const Vec& table, const Vec& pi);

// Value-iteration output on the grid. Tables are indexed by stops remaining
// l = 1..L and grid-point index; V[0] is identically zero.
struct GridSolution {
    int S = 0, M = 0, L = 0;
    double rho = 0.0, tol = 0.0;
    int iterations = 0;
    double residual = 0.0;
    bool converged = false;

    std::vector<Vec> V;                        // V[l], l = 0..L
    std::vector<Vec> W;                        // W[l-1] = V[l] - V[l-1], l = 1..L
    std::vector<Vec> q_stop, q_cont;           // [l-1]
    std::vector<std::vector<uint8_t>> policy;  // [l-1], action 1 = Stop, 2 = Continue
    std::vector<std::vector<uint8_t>> stop_sets;  // [l-1], 1 when the policy stops
};

struct ValueIterOptions {
    double tol = 1e-6;
    int max_iters = 2000;
    double mass_tol = 1e-10;
    int threads = 1;
    bool force_large_state_space = false;  // lifts the S <= 4 practicality guard
};

/// Successive approximation of the multiple-stopping Bellman recursion on a
/// belief grid, with off-grid posteriors handled by simplicial interpolation.
GridSolution value_iteration(const StopProblem& problem, const BeliefGrid& grid,
                             const ValueIterOptions& opts = {});

std::vector<std::vector<uint8_t>> extract_stopping_sets(const GridSolution& sol);

struct StructureCheck {
    bool ok = true;
    std::vector<std::string> violations;
};

/// S^{l-1} subset of S^l for every l.
StructureCheck verify_nested(const GridSolution& sol);

/// Along every grid line to e_1 the action switches at most once, from
/// Continue to Stop as gamma grows; reversed along lines to e_S.
StructureCheck verify_threshold_on_lines(const GridSolution& sol, const BeliefGrid& grid);

/// V is MLR-monotone in the belief and W = V(.,l) - V(.,l-1) is nonincreasing
/// in l, both within tol.
StructureCheck verify_monotone_value(const GridSolution& sol, const BeliefGrid& grid,
                                     double tol = 1e-9);

}  // namespace adsched
