#pragma once
#include <string>
#include <vector>

#include "adsched/em.hpp"
#include "adsched/linear_policy.hpp"
#include "adsched/sim.hpp"
#include "adsched/spsa.hpp"
#include "adsched/stopping.hpp"

namespace adsched {
namespace io {

// Thrown on unreadable or malformed input files; the CLI maps it to exit 2.
struct InputError : std::runtime_error {
    explicit InputError(const std::string& what) : std::runtime_error(what) {}
};

// Model document: {S, P row-major, pi0, emission:{kind, g|B}}. Doubles are
// serialized with shortest round-trip representation, so save/load is
// bit-exact.
std::string model_to_json(const HmmModel& model);
HmmModel model_from_json(const std::string& text);
void save_model(const std::string& path, const HmmModel& model);
HmmModel load_model(const std::string& path);

// Policy document: {L, S, theta row-major, phi optional}. Loading re-validates
// both feasibility predicates and rejects infeasible files.
std::string policy_to_json(const LinearThresholdPolicy& policy);
LinearThresholdPolicy policy_from_json(const std::string& text);
void save_policy(const std::string& path, const LinearThresholdPolicy& policy);
LinearThresholdPolicy load_policy(const std::string& path);

// CSV exports. All files use a header row, comma delimiter, '.' decimal and
// LF line endings; doubles print with %.17g so reruns are byte-identical.
void write_solution_csv(const std::string& path, const BeliefGrid& grid, const GridSolution& sol);
void write_stopset_csv(const std::string& path, const BeliefGrid& grid, const GridSolution& sol,
                       int l);
void write_trace_csv(const std::string& path, const OptimizationTrace& trace);
void write_comparison_csv(const std::string& path, const ComparisonReport& rep);
void write_ratios_csv(const std::string& path, const ComparisonReport& rep);
void write_chart_csv(const std::string& path, const ComparisonReport& rep);
void write_scores_csv(const std::string& path, const std::vector<ScoreRow>& scores);
void write_qq_csv(const std::string& path, const PseudoResiduals& pr);
void write_belief_path_csv(const std::string& path, const std::vector<Vec>& path_beliefs);
void write_rollout_trace_csv(const std::string& path, const std::vector<RolloutTraceRow>& rows);
void write_series_csv(const std::string& path, const std::vector<Obs>& counts);

// Reads a count series; needs a "viewers" column, accepts an optional
// "timestamp" column. Errors cite the offending line number.
CountSeries load_count_series_csv(const std::string& path);

// GridSolution round-trip through the CSV export; M must match the export.
GridSolution solution_from_csv(const std::string& path, const BeliefGrid& grid);

std::string fmt(double v);

}  // namespace io
}  // namespace adsched
