#pragma once
#include <cstdint>
#include <vector>

#include "adsched/errors.hpp"
#include "adsched/linalg.hpp"

namespace adsched {

// Observed value: a viewer count for Poisson emission, a symbol index for
// categorical emission.
using Obs = long long;

// Belief = point on the S-simplex, the posterior over engagement states.
// State 1 (index 0) is the highest-engagement state throughout.
using Belief = Vec;

enum class EmissionKind { Poisson, Categorical };

// S-state Markov chain observed through state-dependent viewer counts.
// Immutable after construction; safe to share across threads.
struct HmmModel {
    int S = 0;
    Mat P;        // S x S row-stochastic transitions
    Vec pi0;      // initial law
    EmissionKind emission = EmissionKind::Poisson;
    Vec g;        // Poisson mean viewers per state
    Mat B;        // S x M categorical observation matrix

    static HmmModel poisson(Mat P, Vec pi0, Vec g);
    static HmmModel categorical(Mat P, Vec pi0, Mat B);

    int num_symbols() const { return emission == EmissionKind::Categorical ? B.cols : -1; }
    void validate() const;  // throws std::invalid_argument on any broken invariant
};

void validate_belief(const Belief& pi, int S, double tol = 1e-10);

/// B(i, y): emission probability of y in state i. Poisson pmf is evaluated in
/// log space so large counts and means do not overflow.
double obs_likelihood(const HmmModel& model, int state, Obs y);
double log_obs_likelihood(const HmmModel& model, int state, Obs y);

// One-step predictor P' pi.
Vec predict(const HmmModel& model, const Belief& pi);

struct FilterStep {
    Belief posterior;
    double normalizer;  // sigma(pi, y)
};

/// Bayesian filter update T(pi, y) = B_y P' pi / sigma(pi, y).
/// Throws FilterDegeneracyError when sigma(pi, y) == 0.
FilterStep belief_update(const HmmModel& model, const Belief& pi, Obs y);

struct Trajectory {
    std::vector<int> states;
    std::vector<Obs> obs;  // obs[t] emitted by states[t]
};

/// Samples X_0 ~ pi0, X_{t+1} ~ P(X_t, .), Y_t ~ emission(X_t).
/// Deterministic for a given seed.
Trajectory sample_trajectory(const HmmModel& model, int horizon, uint64_t seed);

/// Totally positive of order 2: every 2x2 minor is nonnegative (within tol).
bool is_tp2(const Mat& a, double tol = 1e-12);

/// Monotone likelihood ratio order: p1 >=_r p2 iff p1(j) p2(i) <= p2(j) p1(i)
/// for all i < j. Under this state indexing p1 >=_r p2 means p1 leans toward
/// the high-engagement states; e_1 is MLR-maximal.
bool mlr_geq(const Vec& p1, const Vec& p2, double tol = 1e-12);

/// First-order stochastic dominance toward state 1: tail sums of p1 are
/// smaller, i.e. sum_{i>=j} p1(i) <= sum_{i>=j} p2(i) for all j.
bool fosd_geq(const Vec& p1, const Vec& p2, double tol = 1e-12);

enum class SimplexVertex { BestState, WorstState };  // e_1 resp. e_S

/// Point (1-gamma) pibar + gamma e on the line joining a simplex vertex to a
/// point pibar on the opposite face (pibar(1) = 0 for e_1 lines, pibar(S) = 0
/// for e_S lines).
Vec line_point(SimplexVertex endpoint, const Vec& pibar, double gamma);

}  // namespace adsched
