#include "adsched/sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>

#include "adsched/parallel.hpp"
#include "adsched/rng.hpp"

namespace adsched {

std::vector<int> PeriodicPolicy::slots() const {
    std::set<int> s;
    for (int k = 1; k <= stops; ++k) {
        int t = int(std::lround(double(k) * horizon / double(stops + 1)));
        if (t >= 0 && t < horizon) s.insert(t);
    }
    return std::vector<int>(s.begin(), s.end());
}

std::vector<int> RandomPolicy::slots(uint64_t rollout_seed) const {
    RngStream rng = RngStream::derive(seed, rollout_seed, 0x7a0d);
    int n = std::min(stops, horizon);
    // partial Fisher-Yates over {0..horizon-1}
    std::vector<int> pool(horizon);
    for (int i = 0; i < horizon; ++i) pool[i] = i;
    for (int i = 0; i < n; ++i) {
        int j = i + rng.uniform_int(horizon - i);
        std::swap(pool[i], pool[j]);
    }
    std::vector<int> out(pool.begin(), pool.begin() + n);
    std::sort(out.begin(), out.end());
    return out;
}

Action GridDpPolicy::decide(int stops_remaining, const Vec& pi) const {
    if (!solution || !grid) throw std::invalid_argument("grid policy missing tables");
    if (stops_remaining < 1 || stops_remaining > solution->L)
        throw std::domain_error("stops_remaining out of range");
    InterpStencil st = simplex_stencil(*grid, pi);
    double qs = 0.0, qc = 0.0;
    const Vec& vs = solution->q_stop[stops_remaining - 1];
    const Vec& vc = solution->q_cont[stops_remaining - 1];
    for (int i = 0; i < st.n; ++i) {
        qs += st.w[i] * vs[st.idx[i]];
        qc += st.w[i] * vc[st.idx[i]];
    }
    return qs >= qc ? Action::Stop : Action::Continue;
}

namespace {

struct ScheduleLookup {
    std::vector<int> slots;
    bool contains(int t) const { return std::binary_search(slots.begin(), slots.end(), t); }
};

// Visitor-free dispatch; the policy set is small and fixed.
struct Decider {
    const Policy& policy;
    ScheduleLookup schedule;
    bool belief_based;

    Decider(const Policy& p, int N, uint64_t rollout_seed) : policy(p) {
        (void)N;
        if (const auto* per = std::get_if<PeriodicPolicy>(&p)) {
            schedule.slots = per->slots();
            belief_based = false;
        } else if (const auto* rnd = std::get_if<RandomPolicy>(&p)) {
            schedule.slots = rnd->slots(rollout_seed);
            belief_based = false;
        } else {
            belief_based = true;
        }
    }

    Action act(int t, int stops_remaining, const Vec& belief) const {
        if (const auto* dp = std::get_if<GridDpPolicy>(&policy))
            return dp->decide(stops_remaining, belief);
        if (const auto* lin = std::get_if<LinearThresholdPolicy>(&policy))
            return decide(*lin, stops_remaining, belief);
        return schedule.contains(t) ? Action::Stop : Action::Continue;
    }
};

}  // namespace

RolloutResult rollout(const StopProblem& problem, const Policy& policy, int N, uint64_t seed) {
    if (N < 1) throw std::invalid_argument("rollout horizon must be >= 1");
    const HmmModel& m = problem.model;
    RngStream chain = RngStream::derive(seed, 0x5eed);
    Decider decider(policy, N, seed);

    RolloutResult res;
    Vec belief = m.pi0;
    int x = chain.categorical(m.pi0.data(), m.S);
    int l = problem.L;
    double rhopow = 1.0;
    for (int t = 0; t < N && l > 0; ++t) {
        if (t > 0) {
            x = chain.categorical(&m.P.data[size_t(x) * m.S], m.S);
            Obs y = m.emission == EmissionKind::Poisson
                        ? chain.poisson(m.g[x])
                        : Obs(chain.categorical(&m.B.data[size_t(x) * m.B.cols], m.B.cols));
            if (decider.belief_based) belief = belief_update(m, belief, y).posterior;
        }
        if (decider.act(t, l, belief) == Action::Stop) {
            double rew = problem.reward_for(l)[x];
            res.stops.push_back({t, x, rew});
            res.total += rhopow * rew;
            --l;
        }
        rhopow *= problem.rho;
    }
    res.all_stops_placed = (l == 0);
    return res;
}

std::vector<RolloutTraceRow> rollout_trace(const StopProblem& problem, const Policy& policy, int N,
                                           uint64_t seed) {
    if (N < 1) throw std::invalid_argument("rollout horizon must be >= 1");
    const HmmModel& m = problem.model;
    RngStream chain = RngStream::derive(seed, 0x5eed);
    Decider decider(policy, N, seed);

    std::vector<RolloutTraceRow> rows;
    Vec belief = m.pi0;
    int x = chain.categorical(m.pi0.data(), m.S);
    int l = problem.L;
    for (int t = 0; t < N; ++t) {
        Obs y = -1;
        if (t > 0) {
            x = chain.categorical(&m.P.data[size_t(x) * m.S], m.S);
            y = m.emission == EmissionKind::Poisson
                    ? chain.poisson(m.g[x])
                    : Obs(chain.categorical(&m.B.data[size_t(x) * m.B.cols], m.B.cols));
            belief = belief_update(m, belief, y).posterior;
        }
        int action = 2;
        if (l > 0 && decider.act(t, l, belief) == Action::Stop) {
            action = 1;
            --l;
        }
        rows.push_back({t, x, y, belief, action == 1 ? l + 1 : l, action});
    }
    return rows;
}

Evaluation evaluate(const StopProblem& problem, const Policy& policy, int N, int batch,
                    uint64_t master_seed, Completion completion) {
    if (batch < 1) throw std::domain_error("batch must be >= 1");
    double s = 0.0, s2 = 0.0;
    int kept = 0;
    for (int i = 0; i < batch; ++i) {
        RolloutResult r = rollout(problem, policy, N, mix_seed(master_seed, uint64_t(i)));
        if (completion == Completion::Discard && !r.all_stops_placed) continue;
        s += r.total;
        s2 += r.total * r.total;
        ++kept;
    }
    Evaluation ev;
    ev.batch = kept;
    if (kept == 0) return ev;
    ev.mean = s / kept;
    if (kept > 1) {
        double var = (s2 - kept * ev.mean * ev.mean) / (kept - 1);
        ev.stderr_ = std::sqrt(std::max(0.0, var) / kept);
    }
    return ev;
}

ComparisonReport compare(const StopProblem& problem,
                         const std::vector<std::pair<std::string, Policy>>& policies, int N,
                         int batch, uint64_t seed, int threads) {
    if (policies.size() < 2) throw std::invalid_argument("compare needs at least two policies");
    ComparisonReport rep;
    rep.horizon = N;
    const int np = int(policies.size());
    std::vector<Vec> totals(np, Vec(batch, 0.0));
    // rollout i uses the same seed for every policy (common random numbers)
    parallel_for(batch, threads, [&](int lo, int hi) {
        for (int i = lo; i < hi; ++i) {
            uint64_t s = mix_seed(seed, uint64_t(i));
            for (int p = 0; p < np; ++p)
                totals[p][i] = rollout(problem, policies[p].second, N, s).total;
        }
    });
    for (int p = 0; p < np; ++p) {
        double mean = sum(totals[p]) / batch;
        double var = 0.0;
        for (double v : totals[p]) var += (v - mean) * (v - mean);
        var = batch > 1 ? var / (batch - 1) : 0.0;
        rep.rows.push_back({policies[p].first, mean, std::sqrt(var / batch), batch, seed});
    }
    for (int a = 0; a < np; ++a)
        for (int b = 0; b < np; ++b) {
            if (a == b) continue;
            double rb = rep.rows[b].mean;
            rep.ratios.push_back({rep.rows[a].name, rep.rows[b].name,
                                  rb != 0.0 ? rep.rows[a].mean / rb
                                            : std::numeric_limits<double>::quiet_NaN()});
        }
    return rep;
}

DetectionResult detect_change(const HmmModel& model, const Vec& reward,
                              const std::vector<Obs>& observations, double rho,
                              const DetectOptions& opts) {
    if (model.S != 2) throw std::invalid_argument("change detection expects a 2-state model");
    if (int(reward.size()) != 2) throw std::invalid_argument("reward must have 2 entries");
    StopProblem problem{model, reward, 1, rho, {}};
    problem.validate();
    auto grid = std::make_shared<BeliefGrid>(BeliefGrid::regular(2, opts.grid_resolution));
    ValueIterOptions vopts;
    vopts.tol = opts.tol;
    vopts.max_iters = opts.max_iters;
    auto sol = std::make_shared<GridSolution>(value_iteration(problem, *grid, vopts));
    GridDpPolicy dp{sol, grid};

    DetectionResult res;
    Vec belief = model.pi0;
    res.belief_path.push_back(belief);
    if (dp.decide(1, belief) == Action::Stop) {
        res.stop_time = 0;
        return res;
    }
    int t = 0;
    for (Obs y : observations) {
        ++t;
        belief = belief_update(model, belief, y).posterior;
        res.belief_path.push_back(belief);
        if (dp.decide(1, belief) == Action::Stop) {
            res.stop_time = t;
            return res;
        }
    }
    return res;  // no detection
}

}  // namespace adsched
