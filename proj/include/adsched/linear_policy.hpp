#pragma once
#include <string>
#include <vector>

#include "adsched/linalg.hpp"

namespace adsched {

enum class Action : int { Stop = 1, Continue = 2 };

// Linear threshold policy over beliefs: with l stops remaining, stop iff
//   pi(2) + sum_{i=1}^{S-2} theta_l(i) pi(i+2) - theta_l(S-1) <= 0.
// theta has one row per stop level and S-1 coefficients per row. S = 1
// degenerates to an empty row and an always-stop decision; for S = 2 the
// single coefficient is the intercept theta_l(S-1).
struct LinearThresholdPolicy {
    int L = 0, S = 0;
    Mat theta;  // L x (S-1)
    Mat phi;    // optional generator parameters, empty when unknown

    void validate_shape() const;
};

Action decide(const LinearThresholdPolicy& policy, int stops_remaining, const Vec& pi);

// Signed decision value; Stop iff <= 0.
double decision_value(const LinearThresholdPolicy& policy, int stops_remaining, const Vec& pi);

/// Maps free parameters phi (L x (S-1)) onto a feasible threshold policy.
/// Row 1 carries the two squared magnitudes (intercept and the pivot
/// coefficient); every other slot acts through sin^2 factors accumulated down
/// the rows, which keeps rows nonincreasing across l. The image satisfies both
/// constraint sets below for any input.
LinearThresholdPolicy phi_to_theta(const Mat& phi);

struct ConstraintCheck {
    bool ok = true;
    std::vector<std::string> violations;
};

/// Coefficient conditions for the policy to be MLR-decreasing on lines to e_1
/// and to e_S: all coefficients nonnegative, theta_l(S-2) >= 1 (when S >= 3)
/// and dominating the earlier coefficients.
ConstraintCheck check_mlr_constraints(const LinearThresholdPolicy& policy);

/// Nesting conditions across stop levels: intercepts equal for all l and the
/// remaining coefficients nonincreasing as l grows.
ConstraintCheck check_subset_constraints(const LinearThresholdPolicy& policy);

}  // namespace adsched
