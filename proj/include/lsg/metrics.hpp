#pragma once

#include <cstdint>
#include <vector>

#include "lsg/data.hpp"
#include "lsg/model.hpp"
#include "lsg/tensor.hpp"

namespace lsg {

struct EvalConfig {
    std::size_t samples = 100;
    std::vector<double> levels = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
    std::size_t stride = 0;  // 0 selects non-overlapping windows (stride = H)
    std::uint64_t seed = 0;
    // > 0 replaces the decoder's scale head with this constant (data scale);
    // used to evaluate the homoscedastic MSE variant at its residual RMSE.
    double sigma_const = 0.0;
};

struct EvalResult {
    double crps = 0.0;  // mean over windows, pooled over (t, c) within each
    double nmae = 0.0;  // mean over windows; point forecast is mean-mode mu
    double qice = 0.0;  // mean over windows
    std::vector<double> per_step_crps;  // [H], mean over windows and channels
    std::vector<double> per_step_nmae;  // [H], pooled across windows per step
    // Mean-mode predicted scale, channel-averaged, horizon windows
    // concatenated; trace_index holds the absolute time index of each entry
    // so the trace can be aligned against a generator's sigma series.
    std::vector<double> sigma_trace;
    std::vector<std::size_t> trace_index;
    std::size_t windows = 0;
    std::size_t sample_count = 0;
    std::vector<double> quantile_levels;
};

// Energy-form CRPS estimator averaged over (t, c) cells:
//   (1/S) sum_s |x_s - x|  -  (1/(2 S^2)) sum_{s,s'} |x_s - x_{s'}|
// The pairwise term uses the sorted-order identity, so a cell costs
// O(S log S). samples is [S x T x C], truth [T x C]; S >= 2.
double crps_samples(const Tensor& samples, const Tensor& truth);

// sum |truth - point| / sum |truth|; identically-zero truth is undefined.
double nmae(const Tensor& point, const Tensor& truth);

// Mean absolute gap between nominal level q and the fraction of cells whose
// truth falls at or below the empirical q-quantile of the S samples
// (linear interpolation between order statistics). S >= 10.
double qice(const Tensor& samples, const Tensor& truth,
            const std::vector<double>& levels);

// Pearson correlation between a predicted scale trace and the generator's
// sigma trace. Same shape, >= 2 points, both non-constant.
double volatility_recovery(const Tensor& sigma_hat, const Tensor& sigma_true);

// Quantile of an ascending-sorted sample set by linear interpolation
// between order statistics (the same rule qice applies per cell).
double sample_quantile_sorted(const std::vector<double>& sorted, double q);

// Walks the split at the configured stride, draws `samples` Monte-Carlo
// paths per window from the substream (seed, window index), and aggregates
// the metric trio as unweighted means over windows.
EvalResult evaluate(const ModelParams& params, const Dataset& split,
                    const EvalConfig& cfg);

}  // namespace lsg
