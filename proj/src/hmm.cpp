#include "adsched/hmm.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "adsched/rng.hpp"

namespace adsched {

namespace {
constexpr double kStochTol = 1e-12;

void require(bool ok, const std::string& msg) {
    if (!ok) throw std::invalid_argument(msg);
}
}  // namespace

HmmModel HmmModel::poisson(Mat P, Vec pi0, Vec g) {
    HmmModel m;
    m.S = P.rows;
    m.P = std::move(P);
    m.pi0 = std::move(pi0);
    m.emission = EmissionKind::Poisson;
    m.g = std::move(g);
    m.validate();
    return m;
}

HmmModel HmmModel::categorical(Mat P, Vec pi0, Mat B) {
    HmmModel m;
    m.S = P.rows;
    m.P = std::move(P);
    m.pi0 = std::move(pi0);
    m.emission = EmissionKind::Categorical;
    m.B = std::move(B);
    m.validate();
    return m;
}

void HmmModel::validate() const {
    require(S >= 1, "model must have at least one state");
    require(P.rows == S && P.cols == S, "transition matrix must be S x S");
    require(is_row_stochastic(P, kStochTol), "transition matrix rows must sum to 1");
    require(int(pi0.size()) == S, "pi0 dimension must match S");
    require(is_prob_vector(pi0, kStochTol), "pi0 must be a probability vector");
    if (emission == EmissionKind::Poisson) {
        require(int(g.size()) == S, "g must have one mean per state");
        for (double v : g) require(v > 0.0 && std::isfinite(v), "Poisson means must be positive");
    } else {
        require(B.rows == S && B.cols >= 1, "categorical B must have S rows");
        require(is_row_stochastic(B, kStochTol), "categorical B rows must sum to 1");
    }
}

void validate_belief(const Belief& pi, int S, double tol) {
    if (int(pi.size()) != S) throw std::invalid_argument("belief dimension mismatch");
    if (!is_prob_vector(pi, tol)) throw std::invalid_argument("belief must be a probability vector");
}

double log_obs_likelihood(const HmmModel& model, int state, Obs y) {
    if (state < 0 || state >= model.S) throw std::domain_error("state index out of range");
    if (y < 0) throw std::domain_error("observation must be nonnegative");
    if (model.emission == EmissionKind::Poisson) {
        const double gi = model.g[state];
        return double(y) * std::log(gi) - gi - std::lgamma(double(y) + 1.0);
    }
    if (y >= model.B.cols) throw std::domain_error("symbol index out of range");
    double p = model.B(state, int(y));
    return p > 0.0 ? std::log(p) : -std::numeric_limits<double>::infinity();
}

double obs_likelihood(const HmmModel& model, int state, Obs y) {
    if (model.emission == EmissionKind::Categorical) {
        if (state < 0 || state >= model.S) throw std::domain_error("state index out of range");
        if (y < 0 || y >= model.B.cols) throw std::domain_error("symbol index out of range");
        return model.B(state, int(y));
    }
    return std::exp(log_obs_likelihood(model, state, y));
}

Vec predict(const HmmModel& model, const Belief& pi) { return transpose_mul(model.P, pi); }

FilterStep belief_update(const HmmModel& model, const Belief& pi, Obs y) {
    validate_belief(pi, model.S);
    Vec pred = transpose_mul(model.P, pi);
    Vec post(model.S);
    double sigma = 0.0;
    for (int i = 0; i < model.S; ++i) {
        post[i] = pred[i] * obs_likelihood(model, i, y);
        sigma += post[i];
    }
    if (!(sigma > 0.0)) {
        std::ostringstream oss;
        oss << "filter degeneracy: observation " << y << " has zero probability under the model";
        throw FilterDegeneracyError(oss.str());
    }
    for (double& v : post) v /= sigma;
    return FilterStep{std::move(post), sigma};
}

Trajectory sample_trajectory(const HmmModel& model, int horizon, uint64_t seed) {
    if (horizon < 1) throw std::invalid_argument("horizon must be >= 1");
    RngStream rng(seed);
    Trajectory tr;
    tr.states.resize(horizon);
    tr.obs.resize(horizon);
    int x = rng.categorical(model.pi0.data(), model.S);
    for (int t = 0; t < horizon; ++t) {
        if (t > 0) x = rng.categorical(&model.P.data[size_t(x) * model.S], model.S);
        tr.states[t] = x;
        if (model.emission == EmissionKind::Poisson)
            tr.obs[t] = rng.poisson(model.g[x]);
        else
            tr.obs[t] = rng.categorical(&model.B.data[size_t(x) * model.B.cols], model.B.cols);
    }
    return tr;
}

bool is_tp2(const Mat& a, double tol) {
    for (int i1 = 0; i1 < a.rows; ++i1)
        for (int i2 = i1 + 1; i2 < a.rows; ++i2)
            for (int j1 = 0; j1 < a.cols; ++j1)
                for (int j2 = j1 + 1; j2 < a.cols; ++j2)
                    if (a(i1, j1) * a(i2, j2) - a(i1, j2) * a(i2, j1) < -tol) return false;
    return true;
}

bool mlr_geq(const Vec& p1, const Vec& p2, double tol) {
    if (p1.size() != p2.size()) throw std::invalid_argument("mlr_geq: dimension mismatch");
    const int n = int(p1.size());
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if (p1[j] * p2[i] > p2[j] * p1[i] + tol) return false;
    return true;
}

bool fosd_geq(const Vec& p1, const Vec& p2, double tol) {
    if (p1.size() != p2.size()) throw std::invalid_argument("fosd_geq: dimension mismatch");
    double t1 = 0.0, t2 = 0.0;
    for (int j = int(p1.size()) - 1; j >= 0; --j) {
        t1 += p1[j];
        t2 += p2[j];
        if (t1 > t2 + tol) return false;
    }
    return true;
}

Vec line_point(SimplexVertex endpoint, const Vec& pibar, double gamma) {
    const int S = int(pibar.size());
    if (S < 1) throw std::invalid_argument("line_point: empty pibar");
    validate_belief(pibar, S);
    if (gamma < 0.0 || gamma > 1.0) throw std::domain_error("gamma must lie in [0, 1]");
    const int vi = endpoint == SimplexVertex::BestState ? 0 : S - 1;
    if (std::fabs(pibar[vi]) > 1e-12)
        throw std::domain_error("pibar must lie on the face opposite the line endpoint");
    Vec out(S);
    for (int i = 0; i < S; ++i) out[i] = (1.0 - gamma) * pibar[i];
    out[vi] += gamma;
    return out;
}

}  // namespace adsched
