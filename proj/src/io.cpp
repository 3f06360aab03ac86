#include "adsched/io.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace adsched {
namespace io {

using nlohmann::json;

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open file: " + path);
    std::ostringstream oss;
    oss << in.rdbuf();
    return oss.str();
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write file: " + path);
    out << text;
}

json mat_to_json(const Mat& m) { return json(m.data); }

Mat mat_from_json(const json& j, int rows, int cols, const char* what) {
    if (!j.is_array() || int(j.size()) != rows * cols)
        throw InputError(std::string(what) + ": expected " + std::to_string(rows * cols) +
                         " row-major entries");
    Mat m(rows, cols);
    for (int i = 0; i < rows * cols; ++i) m.data[i] = j[i].get<double>();
    return m;
}

Vec vec_from_json(const json& j, const char* what) {
    if (!j.is_array()) throw InputError(std::string(what) + ": expected an array");
    Vec v;
    v.reserve(j.size());
    for (const auto& e : j) v.push_back(e.get<double>());
    return v;
}

}  // namespace

std::string model_to_json(const HmmModel& model) {
    json j;
    j["S"] = model.S;
    j["P"] = mat_to_json(model.P);
    j["pi0"] = json(model.pi0);
    json em;
    if (model.emission == EmissionKind::Poisson) {
        em["kind"] = "poisson";
        em["g"] = json(model.g);
    } else {
        em["kind"] = "categorical";
        em["M"] = model.B.cols;
        em["B"] = mat_to_json(model.B);
    }
    j["emission"] = em;
    return j.dump(2) + "\n";
}

HmmModel model_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw InputError(std::string("model document: ") + e.what());
    }
    try {
        int S = j.at("S").get<int>();
        Mat P = mat_from_json(j.at("P"), S, S, "P");
        Vec pi0 = vec_from_json(j.at("pi0"), "pi0");
        const json& em = j.at("emission");
        std::string kind = em.at("kind").get<std::string>();
        if (kind == "poisson")
            return HmmModel::poisson(std::move(P), std::move(pi0), vec_from_json(em.at("g"), "g"));
        if (kind == "categorical") {
            int M = em.at("M").get<int>();
            return HmmModel::categorical(std::move(P), std::move(pi0),
                                         mat_from_json(em.at("B"), S, M, "B"));
        }
        throw InputError("emission kind must be \"poisson\" or \"categorical\"");
    } catch (const json::exception& e) {
        throw InputError(std::string("model document: ") + e.what());
    }
}

void save_model(const std::string& path, const HmmModel& model) {
    write_file(path, model_to_json(model));
}

HmmModel load_model(const std::string& path) { return model_from_json(read_file(path)); }

std::string policy_to_json(const LinearThresholdPolicy& policy) {
    json j;
    j["L"] = policy.L;
    j["S"] = policy.S;
    j["theta"] = mat_to_json(policy.theta);
    if (!policy.phi.empty()) j["phi"] = mat_to_json(policy.phi);
    return j.dump(2) + "\n";
}

LinearThresholdPolicy policy_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw InputError(std::string("policy document: ") + e.what());
    }
    LinearThresholdPolicy pol;
    try {
        pol.L = j.at("L").get<int>();
        pol.S = j.at("S").get<int>();
        if (pol.L < 1 || pol.S < 1) throw InputError("policy document: bad dimensions");
        pol.theta = mat_from_json(j.at("theta"), pol.L, pol.S - 1, "theta");
        if (j.contains("phi")) pol.phi = mat_from_json(j.at("phi"), pol.L, pol.S - 1, "phi");
    } catch (const json::exception& e) {
        throw InputError(std::string("policy document: ") + e.what());
    }
    pol.validate_shape();
    ConstraintCheck mlr = check_mlr_constraints(pol);
    ConstraintCheck sub = check_subset_constraints(pol);
    if (!mlr.ok || !sub.ok) {
        std::string msg = "policy file violates threshold constraints:";
        for (const auto& v : mlr.violations) msg += "\n  " + v;
        for (const auto& v : sub.violations) msg += "\n  " + v;
        throw InputError(msg);
    }
    return pol;
}

void save_policy(const std::string& path, const LinearThresholdPolicy& policy) {
    write_file(path, policy_to_json(policy));
}

LinearThresholdPolicy load_policy(const std::string& path) {
    return policy_from_json(read_file(path));
}

void write_solution_csv(const std::string& path, const BeliefGrid& grid, const GridSolution& sol) {
    std::ostringstream oss;
    oss << "l";
    for (int i = 1; i <= grid.S; ++i) oss << ",pi_" << i;
    oss << ",V,Q_stop,Q_continue,action\n";
    for (int l = 1; l <= sol.L; ++l)
        for (size_t p = 0; p < grid.size(); ++p) {
            oss << l;
            for (int i = 0; i < grid.S; ++i) oss << "," << fmt(grid.beliefs[p][i]);
            oss << "," << fmt(sol.V[l][p]) << "," << fmt(sol.q_stop[l - 1][p]) << ","
                << fmt(sol.q_cont[l - 1][p]) << "," << int(sol.policy[l - 1][p]) << "\n";
        }
    write_file(path, oss.str());
}

void write_stopset_csv(const std::string& path, const BeliefGrid& grid, const GridSolution& sol,
                       int l) {
    if (l < 1 || l > sol.L) throw std::domain_error("stop-set level out of range");
    std::ostringstream oss;
    for (int i = 1; i <= grid.S; ++i) oss << (i > 1 ? "," : "") << "pi_" << i;
    oss << ",stop\n";
    for (size_t p = 0; p < grid.size(); ++p) {
        for (int i = 0; i < grid.S; ++i) oss << (i ? "," : "") << fmt(grid.beliefs[p][i]);
        oss << "," << int(sol.stop_sets[l - 1][p]) << "\n";
    }
    write_file(path, oss.str());
}

void write_trace_csv(const std::string& path, const OptimizationTrace& trace) {
    std::ostringstream oss;
    oss << "restart,iteration,J";
    int cols = trace.best_phi.rows * trace.best_phi.cols;
    for (int i = 0; i < cols; ++i) oss << ",phi_" << i + 1;
    oss << "\n";
    for (const auto& e : trace.entries) {
        oss << e.restart << "," << e.iteration << "," << fmt(e.J);
        for (double v : e.phi.data) oss << "," << fmt(v);
        oss << "\n";
    }
    write_file(path, oss.str());
}

void write_comparison_csv(const std::string& path, const ComparisonReport& rep) {
    std::ostringstream oss;
    oss << "policy,mean,stderr,batch,seed\n";
    for (const auto& r : rep.rows)
        oss << r.name << "," << fmt(r.mean) << "," << fmt(r.stderr_) << "," << r.batch << ","
            << r.seed << "\n";
    write_file(path, oss.str());
}

void write_ratios_csv(const std::string& path, const ComparisonReport& rep) {
    std::ostringstream oss;
    oss << "policy_a,policy_b,ratio\n";
    for (const auto& r : rep.ratios)
        oss << r.a << "," << r.b << "," << fmt(r.value) << "\n";
    write_file(path, oss.str());
}

void write_chart_csv(const std::string& path, const ComparisonReport& rep) {
    std::ostringstream oss;
    oss << "policy,mean\n";
    for (const auto& r : rep.rows) oss << r.name << "," << fmt(r.mean) << "\n";
    write_file(path, oss.str());
}

void write_scores_csv(const std::string& path, const std::vector<ScoreRow>& scores) {
    std::ostringstream oss;
    oss << "S,loglik,AIC,BIC\n";
    for (const auto& s : scores)
        oss << s.S << "," << fmt(s.loglik) << "," << fmt(s.aic) << "," << fmt(s.bic) << "\n";
    write_file(path, oss.str());
}

void write_qq_csv(const std::string& path, const PseudoResiduals& pr) {
    std::ostringstream oss;
    oss << "theoretical_quantile,sample_quantile\n";
    for (const auto& [th, sa] : pr.qq) oss << fmt(th) << "," << fmt(sa) << "\n";
    write_file(path, oss.str());
}

void write_belief_path_csv(const std::string& path, const std::vector<Vec>& path_beliefs) {
    std::ostringstream oss;
    oss << "t";
    if (!path_beliefs.empty())
        for (size_t i = 1; i <= path_beliefs[0].size(); ++i) oss << ",pi_" << i;
    oss << "\n";
    for (size_t t = 0; t < path_beliefs.size(); ++t) {
        oss << t;
        for (double v : path_beliefs[t]) oss << "," << fmt(v);
        oss << "\n";
    }
    write_file(path, oss.str());
}

void write_rollout_trace_csv(const std::string& path, const std::vector<RolloutTraceRow>& rows) {
    std::ostringstream oss;
    oss << "t,state,observation";
    if (!rows.empty())
        for (size_t i = 1; i <= rows[0].belief.size(); ++i) oss << ",pi_" << i;
    oss << ",stops_remaining,action\n";
    for (const auto& r : rows) {
        oss << r.t << "," << r.state + 1 << "," << r.obs;
        for (double v : r.belief) oss << "," << fmt(v);
        oss << "," << r.stops_remaining << "," << r.action << "\n";
    }
    write_file(path, oss.str());
}

void write_series_csv(const std::string& path, const std::vector<Obs>& counts) {
    std::ostringstream oss;
    oss << "viewers\n";
    for (Obs c : counts) oss << c << "\n";
    write_file(path, oss.str());
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur += ch;
        }
    }
    out.push_back(cur);
    return out;
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    return s;
}

}  // namespace

CountSeries load_count_series_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open file: " + path);
    std::string line;
    if (!std::getline(in, line)) throw InputError(path + ": empty file");
    auto header = split_csv_line(line);
    int viewers_col = -1, ts_col = -1;
    for (size_t i = 0; i < header.size(); ++i) {
        std::string h = lower(header[i]);
        if (h == "viewers" || h == "count" || h == "counts") viewers_col = int(i);
        if (h == "timestamp" || h == "time" || h == "t") ts_col = int(i);
    }
    if (viewers_col < 0) throw InputError(path + ": line 1: no \"viewers\" column in header");
    CountSeries series;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        auto cells = split_csv_line(line);
        if (int(cells.size()) <= viewers_col || (ts_col >= 0 && int(cells.size()) <= ts_col))
            throw InputError(path + ": line " + std::to_string(lineno) + ": too few columns");
        try {
            size_t pos = 0;
            const std::string& cell = cells[viewers_col];
            long long v = std::stoll(cell, &pos);
            if (pos != cell.size() || v < 0) throw std::invalid_argument(cell);
            series.counts.push_back(v);
            if (ts_col >= 0) series.timestamps.push_back(std::stod(cells[ts_col]));
        } catch (const std::exception&) {
            throw InputError(path + ": line " + std::to_string(lineno) +
                             ": expected a nonnegative integer viewer count");
        }
    }
    if (series.counts.size() < 2)
        throw InputError(path + ": need at least 2 samples");
    return series;
}

GridSolution solution_from_csv(const std::string& path, const BeliefGrid& grid) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open file: " + path);
    std::string line;
    if (!std::getline(in, line)) throw InputError(path + ": empty file");
    auto header = split_csv_line(line);
    const int S = grid.S;
    if (int(header.size()) != S + 5 || lower(header[0]) != "l")
        throw InputError(path + ": not a grid-solution export");

    GridSolution sol;
    sol.S = S;
    sol.M = grid.M;
    sol.rho = 0.0;
    sol.converged = true;
    const int n = int(grid.size());
    int maxl = 0;
    struct Row {
        int l, p;
        double v, qs, qc;
        int action;
    };
    std::vector<Row> rows;
    std::vector<int> comp(S);
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        auto cells = split_csv_line(line);
        if (int(cells.size()) != S + 5)
            throw InputError(path + ": line " + std::to_string(lineno) + ": wrong column count");
        try {
            Row r;
            r.l = std::stoi(cells[0]);
            for (int i = 0; i < S; ++i) {
                double pi = std::stod(cells[1 + i]);
                double k = pi * grid.M;
                comp[i] = int(std::lround(k));
                if (std::fabs(k - comp[i]) > 1e-6)
                    throw InputError(path + ": line " + std::to_string(lineno) +
                                     ": belief is not on the declared grid");
            }
            r.p = grid.index_of(comp);
            if (r.p < 0)
                throw InputError(path + ": line " + std::to_string(lineno) +
                                 ": belief is not on the declared grid");
            r.v = std::stod(cells[S + 1]);
            r.qs = std::stod(cells[S + 2]);
            r.qc = std::stod(cells[S + 3]);
            r.action = std::stoi(cells[S + 4]);
            maxl = std::max(maxl, r.l);
            rows.push_back(r);
        } catch (const InputError&) {
            throw;
        } catch (const std::exception&) {
            throw InputError(path + ": line " + std::to_string(lineno) + ": malformed row");
        }
    }
    if (maxl < 1 || int(rows.size()) != maxl * n)
        throw InputError(path + ": incomplete grid-solution export");
    sol.L = maxl;
    sol.V.assign(maxl + 1, Vec(n, 0.0));
    sol.W.assign(maxl, Vec(n, 0.0));
    sol.q_stop.assign(maxl, Vec(n, 0.0));
    sol.q_cont.assign(maxl, Vec(n, 0.0));
    sol.policy.assign(maxl, std::vector<uint8_t>(n, 2));
    for (const Row& r : rows) {
        if (r.l < 1 || r.l > maxl) throw InputError(path + ": stop level out of range");
        sol.V[r.l][r.p] = r.v;
        sol.q_stop[r.l - 1][r.p] = r.qs;
        sol.q_cont[r.l - 1][r.p] = r.qc;
        sol.policy[r.l - 1][r.p] = uint8_t(r.action);
    }
    for (int l = 1; l <= maxl; ++l)
        for (int p = 0; p < n; ++p) sol.W[l - 1][p] = sol.V[l][p] - sol.V[l - 1][p];
    sol.stop_sets = extract_stopping_sets(sol);
    return sol;
}

}  // namespace io
}  // namespace adsched
