#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "lsg/data.hpp"
#include "lsg/model.hpp"
#include "lsg/objective.hpp"

namespace lsg {

struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct TrainConfig {
    double lr = 1e-3;
    std::size_t batch_size = 32;
    std::size_t max_epochs = 50;
    std::size_t patience = 10;  // consecutive non-improving epochs tolerated
    double beta = 1.0;          // KL weight
    std::uint64_t seed = 0;
    AdamConfig adam;
    double grad_clip = 0.0;     // 0 = off; > 0 clips the global gradient norm
    LossKind loss = LossKind::nll;
    void validate() const;
};

// First/second-moment accumulators keyed like the parameter map.
struct AdamState {
    std::map<std::string, Tensor> m;
    std::map<std::string, Tensor> v;
    std::size_t t = 0;
};

struct EpochRecord {
    std::size_t epoch = 0;  // 1-based
    LossBreakdown train;    // mean over training windows
    LossBreakdown val;      // mean-mode, mean over validation windows
    double elapsed_s = 0.0;
};

struct TrainReport {
    std::vector<EpochRecord> epochs;
    std::size_t best_epoch = 0;  // 1-based; argmin of validation total
    bool stopped_early = false;
    double wall_time_s = 0.0;
    // RMSE of mean-mode prediction residuals on the training windows,
    // measured with the returned parameters; the constant scale the MSE
    // variant reports at evaluation. 0 for the NLL objective.
    double sigma_const = 0.0;
};

// One bias-corrected Adam step over every named parameter; optional
// global-norm clipping runs first. State is created on first use.
void adam_step(ModelParams& params, const std::map<std::string, Tensor>& grads,
               AdamState& state, const TrainConfig& cfg);

using EpochCallback = std::function<void(const EpochRecord&)>;

// Mini-batch training with seeded shuffling, epoch-level validation in mean
// mode, and early stopping; returns the best-validation parameter snapshot.
std::pair<ModelParams, TrainReport> train(const ModelConfig& mc, const TrainConfig& tc,
                                          const Dataset& train_ds, const Dataset& val_ds,
                                          const EpochCallback& on_epoch = {});

// One line-delimited record per epoch for the training log.
std::string epoch_log_line(const EpochRecord& rec);

}  // namespace lsg
