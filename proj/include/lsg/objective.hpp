#pragma once

#include "lsg/graph.hpp"
#include "lsg/model.hpp"
#include "lsg/tensor.hpp"

// The composite heteroscedastic objective: Gaussian NLL over the
// reconstruction and prediction spans plus a beta-weighted KL term, all in
// denormalized data scale. The homoscedastic MSE variant backs the
// ablation. Analytic helpers (attenuation weight, optimal sigma) exist for
// the closed-form theory tests.

namespace lsg {

// Which likelihood the composite objective uses; mse is the homoscedastic
// ablation variant (KL term retained in both).
enum class LossKind { nll, mse };

struct LossBreakdown {
    double rec_nll = 0.0;
    double pred_nll = 0.0;
    double kl = 0.0;
    double total = 0.0;
    double beta = 1.0;
};

// (1/(T*C)) sum[ log sigma + (u - mu)^2 / (2 sigma^2) ]
double gaussian_nll(const Tensor& u, const Tensor& mu, const Tensor& sigma);

// KL(N(mu, diag sigma^2) || N(0, I)) = 0.5 sum(sigma^2 + mu^2 - 1 - 2 log sigma),
// summed over all latent entries.
double kl_diag_gauss(const Tensor& mu_z, const Tensor& sigma_z);

LossBreakdown composite_loss(const PredictiveDistribution& recon,
                             const PredictiveDistribution& pred, const SeriesWindow& window,
                             const LatentState& latent, double beta);

// Mean squared error over one span.
double mean_squared(const Tensor& u, const Tensor& point);
// Reconstruction-span MSE + prediction-span MSE (sigma heads ignored).
double mse_loss(const PredictiveDistribution& recon, const PredictiveDistribution& pred,
                const SeriesWindow& window);

// Per-entry gradient of gaussian_nll w.r.t. mu: -(u - mu) / sigma^2 / (T*C).
Tensor attenuation_weight(const Tensor& u, const Tensor& mu, const Tensor& sigma);

// Elementwise |u - mu| floored at xi; the NLL minimizer over sigma.
Tensor optimal_sigma(const Tensor& u, const Tensor& mu, double xi = 1e-6);

// Graph forms, with the target u entering as a constant.
ad::Value gaussian_nll_graph(const Tensor& u, ad::Value mu, ad::Value sigma);
ad::Value kl_diag_gauss_graph(ad::Value mu_z, ad::Value sigma_z);
ad::Value mean_squared_graph(const Tensor& u, ad::Value point);

// total = rec + pred + beta * kl on the tape; components returned so the
// training loop can log a LossBreakdown without re-evaluation.
struct GraphLoss {
    ad::Value rec, pred, kl, total;
};
GraphLoss composite_loss_graph(const GraphForward& fwd, const SeriesWindow& window,
                               double beta);
GraphLoss mse_loss_graph(const GraphForward& fwd, const SeriesWindow& window, double beta);

} // namespace lsg
