#include "adsched/linear_policy.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace adsched {

namespace {
constexpr double kTol = 1e-12;
}

void LinearThresholdPolicy::validate_shape() const {
    if (L < 1 || S < 1) throw std::invalid_argument("policy needs L >= 1 and S >= 1");
    if (theta.rows != L || theta.cols != S - 1)
        throw std::invalid_argument("theta must be L x (S-1)");
    if (!phi.empty() && (phi.rows != L || phi.cols != S - 1))
        throw std::invalid_argument("phi must be L x (S-1) when present");
    for (double v : theta.data)
        if (!std::isfinite(v)) throw std::invalid_argument("theta entries must be finite");
}

double decision_value(const LinearThresholdPolicy& policy, int stops_remaining, const Vec& pi) {
    if (stops_remaining < 1 || stops_remaining > policy.L)
        throw std::domain_error("stops_remaining out of range");
    if (int(pi.size()) != policy.S) throw std::invalid_argument("belief dimension mismatch");
    const int S = policy.S;
    if (S == 1) return 0.0;  // always stop
    const int row = stops_remaining - 1;
    double v = pi[1];
    for (int i = 0; i + 2 < S; ++i) v += policy.theta(row, i) * pi[i + 2];
    v -= policy.theta(row, S - 2);
    return v;
}

Action decide(const LinearThresholdPolicy& policy, int stops_remaining, const Vec& pi) {
    return decision_value(policy, stops_remaining, pi) <= 0.0 ? Action::Stop : Action::Continue;
}

LinearThresholdPolicy phi_to_theta(const Mat& phi) {
    LinearThresholdPolicy pol;
    pol.L = phi.rows;
    pol.S = phi.cols + 1;
    pol.phi = phi;
    pol.theta = Mat(phi.rows, phi.cols, 0.0);
    const int L = pol.L;
    const int S = pol.S;
    if (L < 1) throw std::invalid_argument("phi needs at least one row");
    if (S == 1) return pol;

    const int last = S - 2;  // column of theta_l(S-1), the intercept
    const double intercept = phi(0, last) * phi(0, last);
    for (int l = 0; l < L; ++l) pol.theta(l, last) = intercept;

    if (S >= 3) {
        const int pivot = S - 3;  // column of theta_l(S-2)
        const double mag = phi(0, pivot) * phi(0, pivot);
        std::vector<double> cum(std::max(0, pivot), 1.0);
        double prod = 1.0;
        for (int l = 0; l < L; ++l) {
            if (l >= 1) {
                double s = std::sin(phi(l, pivot));
                prod *= s * s;
            }
            const double a = 1.0 + mag * prod;
            pol.theta(l, pivot) = a;
            for (int i = 0; i < pivot; ++i) {
                double s = std::sin(phi(l, i));
                cum[i] *= s * s;
                pol.theta(l, i) = a * cum[i];
            }
        }
    }
    return pol;
}

ConstraintCheck check_mlr_constraints(const LinearThresholdPolicy& policy) {
    policy.validate_shape();
    ConstraintCheck chk;
    const int S = policy.S;
    if (S == 1) return chk;
    auto fail = [&](int l, const std::string& what) {
        chk.ok = false;
        std::ostringstream oss;
        oss << "l=" << l + 1 << ": " << what;
        chk.violations.push_back(oss.str());
    };
    for (int l = 0; l < policy.L; ++l) {
        if (policy.theta(l, S - 2) < -kTol) fail(l, "theta_l(S-1) must be >= 0");
        for (int i = 0; i + 2 < S; ++i)
            if (policy.theta(l, i) < -kTol) fail(l, "theta_l(i) must be >= 0 for i <= S-2");
        if (S >= 3) {
            if (policy.theta(l, S - 3) < 1.0 - kTol) fail(l, "theta_l(S-2) must be >= 1");
            for (int i = 0; i + 3 < S; ++i)
                if (policy.theta(l, i) > policy.theta(l, S - 3) + kTol)
                    fail(l, "theta_l(i) must not exceed theta_l(S-2) for i < S-2");
        }
    }
    return chk;
}

ConstraintCheck check_subset_constraints(const LinearThresholdPolicy& policy) {
    policy.validate_shape();
    ConstraintCheck chk;
    const int S = policy.S;
    if (S == 1) return chk;
    for (int l = 1; l < policy.L; ++l) {
        if (std::fabs(policy.theta(l - 1, S - 2) - policy.theta(l, S - 2)) > kTol) {
            chk.ok = false;
            std::ostringstream oss;
            oss << "intercepts differ between l=" << l << " and l=" << l + 1;
            chk.violations.push_back(oss.str());
        }
        for (int i = 0; i + 2 < S; ++i) {
            if (policy.theta(l - 1, i) < policy.theta(l, i) - kTol) {
                chk.ok = false;
                std::ostringstream oss;
                oss << "theta(" << l << "," << i + 1 << ") < theta(" << l + 1 << "," << i + 1
                    << "): coefficients must be nonincreasing in l";
                chk.violations.push_back(oss.str());
            }
        }
    }
    return chk;
}

}  // namespace adsched
