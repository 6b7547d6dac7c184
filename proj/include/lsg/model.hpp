#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "lsg/data.hpp"
#include "lsg/graph.hpp"
#include "lsg/revin.hpp"
#include "lsg/rng.hpp"
#include "lsg/tensor.hpp"

// The LSG-VAE network. Channel-independent patch encoder with shared
// weights, mean-pooled posterior over channels, one affine projection from
// flattened past latents to future latents, and a single dual-head decoder
// (location + softplus scale) shared between reconstruction and prediction.

namespace lsg {

struct ModelConfig {
    std::size_t L = 96;            // look-back length
    std::size_t H = 96;            // horizon length
    std::size_t C = 1;             // channels
    std::size_t P = 24;            // patch length
    std::size_t D = 256;           // latent dimension
    std::size_t enc_layers = 3;    // MLP depth (encoder and decoder trunk)
    std::size_t hidden_width = 256;
    std::size_t channel_embed = 16;
    double xi = 1e-6;              // decoder scale floor
    double revin_eps = 1e-5;

    std::size_t N() const { return (L + P - 1) / P; }  // past patch count
    std::size_t M() const { return (H + P - 1) / P; }  // future patch count
    void validate() const;
};

// Named parameter collection with a deterministic name -> shape mapping;
// the map ordering doubles as the serialization key order.
struct ModelParams {
    ModelConfig config;
    std::map<std::string, Tensor> tensors;

    Tensor& at(const std::string& name);
    const Tensor& at(const std::string& name) const;
};

struct LatentState {
    Tensor mu_z;     // [N x D]
    Tensor sigma_z;  // [N x D], positive
    Tensor z_past;   // [N x D] = mu_z + noise (.) sigma_z
    Tensor z_future; // [M x D]
    Tensor noise;    // the recorded eps [N x D]
};

struct PredictiveDistribution {
    Tensor mu;     // [T x C], data scale
    Tensor sigma;  // [T x C], positive, data scale
};

enum class ForwardMode { train, mean, sample };

struct ForwardResult {
    PredictiveDistribution recon;  // over the look-back, [L x C]
    PredictiveDistribution pred;   // over the horizon, [H x C]
    LatentState latent;
    InstanceStats stats;
};

// The full name -> shape table; the serialization contract for checkpoints.
std::map<std::string, std::vector<std::size_t>> param_shapes(const ModelConfig& cfg);

// Closed-form parameter count (documented in the README):
//   encoder  P*W + W + (layers-1)*(W*W + W) + 2*(W*D + D)
//   project  (N*D)*(M*D) + M*D
//   decoder  C*E + (D+E)*W + W + (layers-1)*(W*W + W) + W*2P + 2P
std::size_t param_count(const ModelConfig& cfg);

// Weights ~ U(-1/sqrt(fan_in), +1/sqrt(fan_in)), biases zero except the
// scale half of the decoder output bias, set to softplus^-1(1) = log(e-1)
// so the initial sigma is ~1 in normalized space. Parameters are drawn in
// name order from Rng(seed).
ModelParams init_params(const ModelConfig& cfg, std::uint64_t seed);

// Differentiable forward pass recorded on the caller's tape. Parameter
// leaves are created with requires_grad, keyed by name in `leaves`.
struct GraphForward {
    ad::Value recon_mu, recon_sigma;  // [L x C] denormalized
    ad::Value pred_mu, pred_sigma;    // [H x C] denormalized
    ad::Value mu_z, sigma_z;          // [N x D] pooled posterior
    ad::Value z_past, z_future;       // [N x D], [M x D]
    std::map<std::string, ad::Value> leaves;
    InstanceStats stats;
};
GraphForward build_forward(ad::Tape& tape, const ModelParams& params,
                           const SeriesWindow& window, const Tensor& noise,
                           bool params_require_grad = true);

// Plain forward pass. rng supplies latent noise in train/sample mode and
// may be null in mean mode (noise = 0).
ForwardResult forward(const ModelParams& params, const SeriesWindow& window,
                      ForwardMode mode, Rng* rng);

// The latent dynamics in isolation: one affine map of the flattened past
// grid, reshaped to [M x D]. Matches build_forward bit for bit.
Tensor evolve(const ModelParams& params, const Tensor& z_past);

// S Monte-Carlo horizon paths, shape [S x H x C]. Each path re-samples the
// posterior latent (unless with_latent_noise is off) and adds sigma-scaled
// observation noise around mu (unless with_obs_noise is off).
Tensor sample_paths(const ModelParams& params, const SeriesWindow& window, std::size_t S,
                    Rng& rng, bool with_obs_noise = true, bool with_latent_noise = true);

} // namespace lsg
