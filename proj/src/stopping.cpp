#include "adsched/stopping.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "adsched/parallel.hpp"

namespace adsched {

void StopProblem::validate() const {
    model.validate();
    if (int(r.size()) != model.S) throw std::invalid_argument("reward dimension must match S");
    for (double v : r)
        if (!std::isfinite(v)) throw std::invalid_argument("reward entries must be finite");
    if (L < 1) throw std::invalid_argument("L must be >= 1");
    if (!(rho >= 0.0 && rho <= 1.0)) throw std::invalid_argument("rho must lie in [0, 1]");
    if (!r_by_l.empty()) {
        if (int(r_by_l.size()) != L) throw std::invalid_argument("r_by_l must have L entries");
        for (const Vec& v : r_by_l)
            if (int(v.size()) != model.S) throw std::invalid_argument("r_by_l entry dimension mismatch");
    }
}

namespace {

constexpr double kOrderTol = 1e-12;

void check_nonincreasing(const Vec& v, const char* name, const char* assumption, bool& flag,
                         std::vector<AssumptionWitness>& wit) {
    flag = true;
    for (size_t i = 0; i + 1 < v.size(); ++i) {
        if (v[i + 1] > v[i] + kOrderTol) {
            flag = false;
            std::ostringstream oss;
            oss << name << "(" << i + 1 << ") = " << v[i] << " < " << name << "(" << i + 2
                << ") = " << v[i + 1];
            wit.push_back({assumption, oss.str()});
        }
    }
}

void check_tp2(const Mat& a, const char* name, const char* assumption, bool& flag,
               std::vector<AssumptionWitness>& wit) {
    flag = true;
    for (int i1 = 0; i1 < a.rows; ++i1)
        for (int i2 = i1 + 1; i2 < a.rows; ++i2)
            for (int j1 = 0; j1 < a.cols; ++j1)
                for (int j2 = j1 + 1; j2 < a.cols; ++j2) {
                    double minor = a(i1, j1) * a(i2, j2) - a(i1, j2) * a(i2, j1);
                    if (minor < -kOrderTol) {
                        flag = false;
                        std::ostringstream oss;
                        oss << name << " minor at rows (" << i1 + 1 << "," << i2 + 1 << ") cols ("
                            << j1 + 1 << "," << j2 + 1 << ") = " << minor;
                        wit.push_back({assumption, oss.str()});
                    }
                }
}

}  // namespace

AssumptionReport check_assumptions(const StopProblem& problem) {
    AssumptionReport rep;
    const HmmModel& m = problem.model;
    check_nonincreasing(problem.r, "r", "A1", rep.a1, rep.witnesses);
    if (m.emission == EmissionKind::Poisson)
        check_nonincreasing(m.g, "g", "A2", rep.a2, rep.witnesses);
    else
        check_tp2(m.B, "B", "A2", rep.a2, rep.witnesses);
    check_tp2(m.P, "P", "A3", rep.a3, rep.witnesses);
    // A4: (I - rho P') r has decreasing elements
    Vec ptr = transpose_mul(m.P, problem.r);
    Vec a4v(m.S);
    for (int i = 0; i < m.S; ++i) a4v[i] = problem.r[i] - problem.rho * ptr[i];
    check_nonincreasing(a4v, "(I-rho*P')r", "A4", rep.a4, rep.witnesses);
    return rep;
}

std::string AssumptionReport::summary() const {
    std::ostringstream oss;
    oss << "A1 (reward decreasing): " << (a1 ? "ok" : "VIOLATED") << "\n"
        << "A2 (emission TP2): " << (a2 ? "ok" : "VIOLATED") << "\n"
        << "A3 (transitions TP2): " << (a3 ? "ok" : "VIOLATED") << "\n"
        << "A4 ((I-rho*P')r decreasing): " << (a4 ? "ok" : "VIOLATED") << "\n";
    for (const auto& w : witnesses) oss << "  " << w.assumption << ": " << w.detail << "\n";
    return oss.str();
}

Obs truncate_observations(const HmmModel& model, double mass_tol) {
    if (model.emission == EmissionKind::Categorical) return model.B.cols - 1;
    Obs ymax = 0;
    for (int i = 0; i < model.S; ++i) {
        const double gi = model.g[i];
        const double target = 1.0 - mass_tol;
        const Obs bound = Obs(gi + 200.0 * std::sqrt(gi) + 1000.0);
        double cdf = 0.0;
        Obs y = 0;
        for (; y <= bound; ++y) {
            cdf += std::exp(double(y) * std::log(gi) - gi - std::lgamma(double(y) + 1.0));
            if (cdf >= target) break;
        }
        ymax = std::max(ymax, std::min(y, bound));
    }
    return ymax;
}

BeliefGrid BeliefGrid::regular(int S, int M) {
    if (S < 1 || M < 1) throw std::invalid_argument("grid needs S >= 1 and M >= 1");
    BeliefGrid grid;
    grid.S = S;
    grid.M = M;
    std::vector<int> comp(S, 0);
    // lexicographic enumeration of compositions of M into S parts
    std::function<void(int, int)> rec = [&](int pos, int left) {
        if (pos == S - 1) {
            comp[pos] = left;
            grid.comps.push_back(comp);
            return;
        }
        for (int k = 0; k <= left; ++k) {
            comp[pos] = k;
            rec(pos + 1, left - k);
        }
    };
    rec(0, M);
    grid.beliefs.reserve(grid.comps.size());
    for (size_t p = 0; p < grid.comps.size(); ++p) {
        Vec b(S);
        for (int i = 0; i < S; ++i) b[i] = double(grid.comps[p][i]) / double(M);
        grid.beliefs.push_back(std::move(b));
        grid.lookup_.emplace(grid.key(grid.comps[p]), int(p));
    }
    return grid;
}

uint64_t BeliefGrid::key(const std::vector<int>& comp) const {
    uint64_t k = 0;
    for (int v : comp) k = k * uint64_t(M + 1) + uint64_t(v);
    return k;
}

int BeliefGrid::index_of(const std::vector<int>& comp) const {
    if (int(comp.size()) != S) return -1;
    auto it = lookup_.find(key(comp));
    return it == lookup_.end() ? -1 : it->second;
}

InterpStencil simplex_stencil(const BeliefGrid& grid, const Vec& pi) {
    const int S = grid.S;
    if (int(pi.size()) != S) throw std::invalid_argument("stencil: belief dimension mismatch");
    if (S > InterpStencil::kMax) throw std::domain_error("stencil: too many states");
    InterpStencil st;
    if (S == 1) {
        st.idx[0] = 0;
        st.w[0] = 1.0;
        st.n = 1;
        return st;
    }
    const int D = S - 1;
    const double M = double(grid.M);
    // cumulative coordinates turn the simplex cell search into a cube problem
    double c[InterpStencil::kMax];
    int base[InterpStencil::kMax];
    double frac[InterpStencil::kMax];
    double acc = 0.0;
    for (int i = 0; i < D; ++i) {
        acc += pi[i] * M;
        double ci = std::min(std::max(acc, 0.0), M);
        if (i > 0) ci = std::max(ci, c[i - 1]);
        c[i] = ci;
        double fl = std::floor(ci);
        if (fl > M - 1.0 && ci < M) fl = M - 1.0;
        base[i] = int(fl);
        frac[i] = ci - fl;
    }
    // order by descending fraction; ties resolved toward larger index so the
    // cumulative vertices stay nondecreasing
    int ord[InterpStencil::kMax];
    std::iota(ord, ord + D, 0);
    std::sort(ord, ord + D, [&](int a, int b) {
        if (frac[a] != frac[b]) return frac[a] > frac[b];
        return a > b;
    });

    int z[InterpStencil::kMax];
    for (int i = 0; i < D; ++i) z[i] = base[i];
    std::vector<int> comp(S);
    auto push_vertex = [&](double weight) {
        if (weight <= 1e-15) return;
        comp[0] = z[0];
        for (int i = 1; i < D; ++i) comp[i] = z[i] - z[i - 1];
        comp[S - 1] = grid.M - z[D - 1];
        int idx = grid.index_of(comp);
        if (idx < 0) throw std::logic_error("stencil vertex fell outside the grid");
        st.idx[st.n] = idx;
        st.w[st.n] = weight;
        ++st.n;
    };

    push_vertex(1.0 - frac[ord[0]]);
    for (int k = 0; k < D; ++k) {
        z[ord[k]] += 1;
        double w = (k + 1 < D) ? frac[ord[k]] - frac[ord[k + 1]] : frac[ord[D - 1]];
        push_vertex(w);
    }
    // renormalize away the dropped slivers
    double tot = 0.0;
    for (int i = 0; i < st.n; ++i) tot += st.w[i];
    if (tot > 0.0)
        for (int i = 0; i < st.n; ++i) st.w[i] /= tot;
    return st;
}

double interpolate(const BeliefGrid& grid, const Vec& table, const Vec& pi) {
    InterpStencil st = simplex_stencil(grid, pi);
    double v = 0.0;
    for (int i = 0; i < st.n; ++i) v += st.w[i] * table[st.idx[i]];
    return v;
}

namespace {

// Precomputed posterior stencils: for each grid point, the observation
// normalizers sigma(pi, y) and interpolation stencils of T(pi, y). These are
// iteration-invariant, so the sweep reduces to weighted table lookups.
struct DpPrecompute {
    int entries_per_point = 0;  // observations kept per point (fixed for Poisson)
    std::vector<int> offset;    // per point start index
    std::vector<int> count;     // per point entry count
    std::vector<double> sigma;
    std::vector<double> w;    // stride S
    std::vector<int> idx;     // stride S
    int stride = 0;
};

DpPrecompute precompute_transitions(const StopProblem& problem, const BeliefGrid& grid,
                                    double mass_tol, int threads) {
    const HmmModel& m = problem.model;
    const int S = m.S;
    const Obs ymax = truncate_observations(m, mass_tol);
    const int nobs = int(ymax) + 1;

    // truncated emission table with the tail folded into the last bucket
    Mat emis(S, nobs, 0.0);
    for (int i = 0; i < S; ++i) {
        double acc = 0.0;
        for (int y = 0; y + 1 < nobs; ++y) {
            double p = obs_likelihood(m, i, y);
            emis(i, y) = p;
            acc += p;
        }
        emis(i, nobs - 1) = std::max(0.0, 1.0 - acc);
    }

    const int n = int(grid.size());
    DpPrecompute pre;
    pre.stride = S;
    pre.offset.resize(n);
    pre.count.resize(n);
    // worst case every observation kept
    std::vector<std::vector<double>> sig_rows(n);
    std::vector<std::vector<double>> w_rows(n);
    std::vector<std::vector<int>> idx_rows(n);

    parallel_for(n, threads, [&](int lo, int hi) {
        Vec post(S);
        for (int p = lo; p < hi; ++p) {
            Vec pred = transpose_mul(m.P, grid.beliefs[p]);
            auto& sr = sig_rows[p];
            auto& wr = w_rows[p];
            auto& ir = idx_rows[p];
            for (int y = 0; y < nobs; ++y) {
                double sigma = 0.0;
                for (int i = 0; i < S; ++i) {
                    post[i] = emis(i, y) * pred[i];
                    sigma += post[i];
                }
                if (!(sigma > 0.0)) continue;
                for (int i = 0; i < S; ++i) post[i] /= sigma;
                InterpStencil st = simplex_stencil(grid, post);
                sr.push_back(sigma);
                size_t at = wr.size();
                wr.resize(at + S, 0.0);
                ir.resize(at + S, 0);
                for (int v = 0; v < st.n; ++v) {
                    wr[at + v] = st.w[v];
                    ir[at + v] = st.idx[v];
                }
            }
        }
    });

    size_t total = 0;
    for (int p = 0; p < n; ++p) {
        pre.offset[p] = int(total);
        pre.count[p] = int(sig_rows[p].size());
        total += sig_rows[p].size();
    }
    pre.sigma.reserve(total);
    pre.w.reserve(total * S);
    pre.idx.reserve(total * S);
    for (int p = 0; p < n; ++p) {
        pre.sigma.insert(pre.sigma.end(), sig_rows[p].begin(), sig_rows[p].end());
        pre.w.insert(pre.w.end(), w_rows[p].begin(), w_rows[p].end());
        pre.idx.insert(pre.idx.end(), idx_rows[p].begin(), idx_rows[p].end());
    }
    return pre;
}

// E(p) = sum_y sigma(pi_p, y) * interp(table, T(pi_p, y))
void expected_next(const DpPrecompute& pre, const Vec& table, int threads, Vec& out) {
    const int n = int(pre.offset.size());
    const int S = pre.stride;
    parallel_for(n, threads, [&](int lo, int hi) {
        for (int p = lo; p < hi; ++p) {
            const int off = pre.offset[p];
            const int cnt = pre.count[p];
            double e = 0.0;
            for (int k = 0; k < cnt; ++k) {
                const double* wk = &pre.w[size_t(off + k) * S];
                const int* ik = &pre.idx[size_t(off + k) * S];
                double acc = 0.0;
                for (int v = 0; v < S; ++v) acc += wk[v] * table[ik[v]];
                e += pre.sigma[off + k] * acc;
            }
            out[p] = e;
        }
    });
}

}  // namespace

GridSolution value_iteration(const StopProblem& problem, const BeliefGrid& grid,
                             const ValueIterOptions& opts) {
    problem.validate();
    const HmmModel& m = problem.model;
    if (grid.S != m.S) throw std::invalid_argument("grid dimension must match the model");
    if (m.S >= 5 && !opts.force_large_state_space)
        throw std::domain_error(
            "grid value iteration is impractical for S >= 5 states; "
            "use the linear-threshold optimizer instead or force explicitly");

    const int n = int(grid.size());
    const int L = problem.L;
    const double rho = problem.rho;
    const int threads = std::max(1, opts.threads);

    DpPrecompute pre = precompute_transitions(problem, grid, opts.mass_tol, threads);

    // stop rewards r' pi per level
    std::vector<Vec> rpi(L + 1, Vec(n, 0.0));
    for (int l = 1; l <= L; ++l) {
        const Vec& rl = problem.reward_for(l);
        for (int p = 0; p < n; ++p) rpi[l][p] = dot(rl, grid.beliefs[p]);
    }

    // start from the value of stopping l times in a row
    std::vector<Vec> V(L + 1, Vec(n, 0.0));
    {
        std::vector<Mat> powers(L);
        powers[0] = identity(m.S);
        for (int j = 1; j < L; ++j) powers[j] = matmul(powers[j - 1], m.P);
        for (int l = 1; l <= L; ++l) {
            Vec coef(m.S, 0.0);
            double rj = 1.0;
            for (int j = 0; j < l; ++j) {
                Vec term = mul(powers[j], problem.reward_for(l - j));
                for (int i = 0; i < m.S; ++i) coef[i] += rj * term[i];
                rj *= rho;
            }
            for (int p = 0; p < n; ++p) V[l][p] = dot(coef, grid.beliefs[p]);
        }
    }

    std::vector<Vec> Vnext(L + 1, Vec(n, 0.0));
    std::vector<Vec> E(L + 1, Vec(n, 0.0));  // E[0] stays zero: V(., 0) = 0
    double residual = std::numeric_limits<double>::infinity();
    int iters = 0;
    while (iters < opts.max_iters) {
        for (int l = 1; l <= L; ++l) expected_next(pre, V[l], threads, E[l]);
        double delta = 0.0;
        for (int l = 1; l <= L; ++l) {
            for (int p = 0; p < n; ++p) {
                double qs = rpi[l][p] + rho * E[l - 1][p];
                double qc = rho * E[l][p];
                double v = qs >= qc ? qs : qc;
                double d = std::fabs(v - V[l][p]);
                if (d > delta) delta = d;
                Vnext[l][p] = v;
            }
        }
        for (int l = 1; l <= L; ++l) V[l].swap(Vnext[l]);
        ++iters;
        residual = delta;
        if (residual < opts.tol) break;
    }

    GridSolution sol;
    sol.S = m.S;
    sol.M = grid.M;
    sol.L = L;
    sol.rho = rho;
    sol.tol = opts.tol;
    sol.iterations = iters;
    sol.residual = residual;
    sol.converged = residual < opts.tol;

    // one synchronized backup so V, Q, policy and W come from the same pass
    sol.V.assign(L + 1, Vec(n, 0.0));
    sol.W.assign(L, Vec(n, 0.0));
    sol.q_stop.assign(L, Vec(n, 0.0));
    sol.q_cont.assign(L, Vec(n, 0.0));
    sol.policy.assign(L, std::vector<uint8_t>(n, 2));
    for (int l = 1; l <= L; ++l) expected_next(pre, V[l], threads, E[l]);
    for (int l = 1; l <= L; ++l) {
        for (int p = 0; p < n; ++p) {
            double qs = rpi[l][p] + rho * E[l - 1][p];
            double qc = rho * E[l][p];
            sol.q_stop[l - 1][p] = qs;
            sol.q_cont[l - 1][p] = qc;
            sol.policy[l - 1][p] = qs >= qc ? 1 : 2;  // ties stop
            sol.V[l][p] = qs >= qc ? qs : qc;
        }
        for (int p = 0; p < n; ++p) sol.W[l - 1][p] = sol.V[l][p] - sol.V[l - 1][p];
    }
    sol.stop_sets = extract_stopping_sets(sol);
    return sol;
}

std::vector<std::vector<uint8_t>> extract_stopping_sets(const GridSolution& sol) {
    std::vector<std::vector<uint8_t>> sets(sol.policy.size());
    for (size_t l = 0; l < sol.policy.size(); ++l) {
        sets[l].resize(sol.policy[l].size());
        for (size_t p = 0; p < sol.policy[l].size(); ++p)
            sets[l][p] = sol.policy[l][p] == 1 ? 1 : 0;
    }
    return sets;
}

namespace {
std::string comp_str(const std::vector<int>& comp) {
    std::ostringstream oss;
    oss << "(";
    for (size_t i = 0; i < comp.size(); ++i) oss << (i ? "," : "") << comp[i];
    oss << ")";
    return oss.str();
}
}  // namespace

StructureCheck verify_nested(const GridSolution& sol) {
    StructureCheck chk;
    for (int l = 2; l <= sol.L; ++l) {
        const auto& inner = sol.policy[l - 2];
        const auto& outer = sol.policy[l - 1];
        for (size_t p = 0; p < inner.size(); ++p) {
            if (inner[p] == 1 && outer[p] != 1) {
                chk.ok = false;
                std::ostringstream oss;
                oss << "point " << p << " stops at l=" << l - 1 << " but not at l=" << l;
                chk.violations.push_back(oss.str());
            }
        }
    }
    return chk;
}

namespace {

// Groups grid points lying on a common line through the given vertex.
// Key = the direction of the residual coordinates reduced by their gcd.
std::map<std::vector<int>, std::vector<std::pair<int, int>>> line_groups(const BeliefGrid& grid,
                                                                         bool toward_best) {
    std::map<std::vector<int>, std::vector<std::pair<int, int>>> groups;
    const int S = grid.S;
    for (size_t p = 0; p < grid.size(); ++p) {
        const auto& k = grid.comps[p];
        std::vector<int> rest;
        int along;  // coordinate that grows toward the vertex
        if (toward_best) {
            rest.assign(k.begin() + 1, k.end());
            along = k[0];
        } else {
            rest.assign(k.begin(), k.end() - 1);
            along = k[S - 1];
        }
        int g = 0;
        for (int v : rest) g = std::gcd(g, v);
        if (g == 0) continue;  // the vertex itself, appended to every group below
        for (int& v : rest) v /= g;
        groups[rest].push_back({along, int(p)});
    }
    return groups;
}

}  // namespace

StructureCheck verify_threshold_on_lines(const GridSolution& sol, const BeliefGrid& grid) {
    StructureCheck chk;
    const int S = grid.S;
    std::vector<int> e1(S, 0), eS(S, 0);
    e1[0] = grid.M;
    eS[S - 1] = grid.M;
    const int e1_idx = grid.index_of(e1);
    const int eS_idx = grid.index_of(eS);

    for (int family = 0; family < 2; ++family) {
        const bool toward_best = family == 0;
        auto groups = line_groups(grid, toward_best);
        for (auto& [dir, members] : groups) {
            std::sort(members.begin(), members.end());
            members.push_back({grid.M, toward_best ? e1_idx : eS_idx});
            for (int l = 1; l <= sol.L; ++l) {
                const auto& act = sol.policy[l - 1];
                for (size_t i = 0; i + 1 < members.size(); ++i) {
                    uint8_t a = act[members[i].second];
                    uint8_t b = act[members[i + 1].second];
                    // toward e_1 the action may only drop 2 -> 1; toward e_S
                    // it may only rise 1 -> 2
                    bool bad = toward_best ? (a == 1 && b == 2) : (a == 2 && b == 1);
                    if (bad) {
                        chk.ok = false;
                        std::ostringstream oss;
                        oss << (toward_best ? "e1" : "eS") << " line, l=" << l << ": action "
                            << int(a) << "->" << int(b) << " between "
                            << comp_str(grid.comps[members[i].second]) << " and "
                            << comp_str(grid.comps[members[i + 1].second]);
                        chk.violations.push_back(oss.str());
                    }
                }
            }
        }
    }
    return chk;
}

StructureCheck verify_monotone_value(const GridSolution& sol, const BeliefGrid& grid, double tol) {
    StructureCheck chk;
    const int n = int(grid.size());
    for (int p1 = 0; p1 < n; ++p1) {
        for (int p2 = 0; p2 < n; ++p2) {
            if (p1 == p2) continue;
            if (!mlr_geq(grid.beliefs[p1], grid.beliefs[p2])) continue;
            for (int l = 1; l <= sol.L; ++l) {
                if (sol.V[l][p1] < sol.V[l][p2] - tol) {
                    chk.ok = false;
                    std::ostringstream oss;
                    oss << "V(.," << l << ") not MLR-monotone: " << comp_str(grid.comps[p1])
                        << " -> " << sol.V[l][p1] << " vs " << comp_str(grid.comps[p2]) << " -> "
                        << sol.V[l][p2];
                    chk.violations.push_back(oss.str());
                }
            }
        }
    }
    for (int l = 2; l <= sol.L; ++l) {
        for (int p = 0; p < n; ++p) {
            if (sol.W[l - 1][p] > sol.W[l - 2][p] + tol) {
                chk.ok = false;
                std::ostringstream oss;
                oss << "W not decreasing in l at point " << comp_str(grid.comps[p]) << ": W(l="
                    << l << ") = " << sol.W[l - 1][p] << " > W(l=" << l - 1
                    << ") = " << sol.W[l - 2][p];
                chk.violations.push_back(oss.str());
            }
        }
    }
    return chk;
}

}  // namespace adsched
