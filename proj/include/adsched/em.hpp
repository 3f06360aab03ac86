#pragma once
#include <cstdint>
#include <vector>

#include "adsched/hmm.hpp"

namespace adsched {

// Viewer-count series, optionally timestamped (uniform sampling assumed).
struct CountSeries {
    Vec timestamps;  // may be empty
    std::vector<Obs> counts;
    void validate() const;
};

struct FitResult {
    HmmModel model;
    double loglik = 0.0;
    double aic = 0.0;
    double bic = 0.0;
    int iterations = 0;
    bool converged = false;
    // set when states collapse (duplicate emission parameters or an
    // effectively unoccupied state), e.g. constant data fit with S > 1
    bool rank_deficient = false;
};

/// Baum-Welch fit of a Poisson-emission chain. Scaled forward-backward keeps
/// everything finite for any counts; the log-likelihood is nondecreasing
/// across iterations. States are relabeled so the fitted means decrease
/// (state 1 = highest engagement). The seed only jitters the initial
/// parameters, so restarts explore different local maxima.
FitResult fit_em(const CountSeries& series, int S, uint64_t seed, double tol = 1e-7,
                 int max_iters = 500);

/// Same machinery for categorical (quantized) symbol series.
FitResult fit_em_categorical(const std::vector<Obs>& symbols, int S, int num_symbols,
                             uint64_t seed, double tol = 1e-7, int max_iters = 500);

struct ScoreRow {
    int S;
    double loglik, aic, bic;
};

struct SelectResult {
    FitResult best;  // BIC-minimizing model
    std::vector<ScoreRow> scores;
};

/// Fits every state count in s_range (best of `restarts` seeded fits each)
/// and picks the BIC minimizer.
SelectResult select_model(const CountSeries& series, const std::vector<int>& s_range,
                          uint64_t seed, int restarts = 5, double tol = 1e-7,
                          int max_iters = 500, int threads = 1);

struct PseudoResiduals {
    std::vector<double> z;                           // normal pseudo-residuals per time step
    std::vector<std::pair<double, double>> qq;       // (theoretical, sample) quantile pairs
    std::vector<int> outliers;                       // indices with zero predictive mass
};

/// One-step-ahead probability-integral-transform residuals under the filtered
/// predictive law, mid-point convention for the discrete jump, mapped through
/// the standard normal quantile.
PseudoResiduals pseudo_residuals(const HmmModel& model, const CountSeries& series);

struct QuantizeResult {
    std::vector<Obs> symbols;  // 0 = highest-count bin
    int occupied_bins = 0;
};

/// Empirical-quantile binning into `levels` symbols; the highest counts map
/// to symbol 0.
QuantizeResult quantize(const std::vector<Obs>& counts, int levels);

double normal_cdf(double z);
double normal_quantile(double p);

}  // namespace adsched
