#pragma once

#include "lsg/graph.hpp"
#include "lsg/tensor.hpp"

// Reversible instance normalization. Statistics are per-window, per-channel,
// computed from the look-back only (population variance, std floored at
// eps). There are no learned affine parameters. Location denormalizes as
// mu*std + mean; scale denormalizes multiplicatively as sigma*std.

namespace lsg {

struct InstanceStats {
    Tensor mean;  // [C]
    Tensor std;   // [C], entries >= eps
    double eps = 1e-5;
};

InstanceStats revin_fit(const Tensor& lookback, double eps = 1e-5);

Tensor revin_normalize(const Tensor& x, const InstanceStats& stats);
Tensor revin_denorm_location(const Tensor& mu_norm, const InstanceStats& stats);
// Requires sigma_norm > 0 elementwise.
Tensor revin_denorm_scale(const Tensor& sigma_norm, const InstanceStats& stats);

// Graph counterparts used inside the loss; stats enter as constants.
ad::Value revin_denorm_location(ad::Value mu_norm, const InstanceStats& stats);
ad::Value revin_denorm_scale(ad::Value sigma_norm, const InstanceStats& stats);

} // namespace lsg
