#pragma once

#include <string>

#include "lsg/model.hpp"
#include "lsg/objective.hpp"

namespace lsg {

struct CheckpointMeta {
    LossKind loss = LossKind::nll;
    double sigma_const = 0.0;  // constant evaluation scale of the MSE variant
};

struct Checkpoint {
    ModelParams params;
    CheckpointMeta meta;
};

// Single JSON document: format/version header, ModelConfig, meta, and every
// parameter as {shape, row-major values} with doubles rendered as decimal
// strings at 17 significant digits. Keys are sorted, the round trip is
// bit-faithful, and re-saving a loaded checkpoint reproduces the bytes.
void save_checkpoint(const ModelParams& params, const CheckpointMeta& meta,
                     const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace lsg
