#include "lsg/objective.hpp"

#include <algorithm>
#include <cmath>

#include "lsg/errors.hpp"

namespace lsg {

namespace {

void require_same_shape(const char* op, const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b))
        throw shape_error(std::string(op) + ": shape mismatch " + a.shape_str() + " vs " +
                          b.shape_str());
}

void require_positive(const char* op, const Tensor& sigma) {
    for (std::size_t i = 0; i < sigma.size(); ++i)
        if (!(sigma[i] > 0.0))
            throw contract_error(std::string(op) + ": sigma must be positive, got " +
                                 std::to_string(sigma[i]));
}

} // namespace

double gaussian_nll(const Tensor& u, const Tensor& mu, const Tensor& sigma) {
    require_same_shape("gaussian_nll", u, mu);
    require_same_shape("gaussian_nll", u, sigma);
    require_positive("gaussian_nll", sigma);
    double acc = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        const double r = u[i] - mu[i];
        acc += std::log(sigma[i]) + r * r / (2.0 * sigma[i] * sigma[i]);
    }
    const double val = acc / static_cast<double>(u.size());
    if (!std::isfinite(val)) throw numeric_error("gaussian_nll produced a non-finite value");
    return val;
}

double kl_diag_gauss(const Tensor& mu_z, const Tensor& sigma_z) {
    require_same_shape("kl_diag_gauss", mu_z, sigma_z);
    require_positive("kl_diag_gauss", sigma_z);
    double acc = 0.0;
    for (std::size_t i = 0; i < mu_z.size(); ++i) {
        const double s2 = sigma_z[i] * sigma_z[i];
        acc += s2 + mu_z[i] * mu_z[i] - 1.0 - std::log(s2);
    }
    const double val = 0.5 * acc;
    if (!std::isfinite(val)) throw numeric_error("kl_diag_gauss produced a non-finite value");
    return val;
}

LossBreakdown composite_loss(const PredictiveDistribution& recon,
                             const PredictiveDistribution& pred, const SeriesWindow& window,
                             const LatentState& latent, double beta) {
    LossBreakdown out;
    out.beta = beta;
    out.rec_nll = gaussian_nll(window.lookback, recon.mu, recon.sigma);
    out.pred_nll = gaussian_nll(window.horizon, pred.mu, pred.sigma);
    out.kl = kl_diag_gauss(latent.mu_z, latent.sigma_z);
    out.total = out.rec_nll + out.pred_nll + beta * out.kl;
    return out;
}

double mean_squared(const Tensor& u, const Tensor& point) {
    require_same_shape("mean_squared", u, point);
    double acc = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        const double r = u[i] - point[i];
        acc += r * r;
    }
    return acc / static_cast<double>(u.size());
}

double mse_loss(const PredictiveDistribution& recon, const PredictiveDistribution& pred,
                const SeriesWindow& window) {
    return mean_squared(window.lookback, recon.mu) + mean_squared(window.horizon, pred.mu);
}

Tensor attenuation_weight(const Tensor& u, const Tensor& mu, const Tensor& sigma) {
    require_same_shape("attenuation_weight", u, mu);
    require_same_shape("attenuation_weight", u, sigma);
    require_positive("attenuation_weight", sigma);
    Tensor out(u.shape());
    const double inv_count = 1.0 / static_cast<double>(u.size());
    for (std::size_t i = 0; i < u.size(); ++i)
        out[i] = -(u[i] - mu[i]) / (sigma[i] * sigma[i]) * inv_count;
    return out;
}

Tensor optimal_sigma(const Tensor& u, const Tensor& mu, double xi) {
    require_same_shape("optimal_sigma", u, mu);
    Tensor out(u.shape());
    for (std::size_t i = 0; i < u.size(); ++i)
        out[i] = std::max(std::fabs(u[i] - mu[i]), xi);
    return out;
}

ad::Value gaussian_nll_graph(const Tensor& u, ad::Value mu, ad::Value sigma) {
    require_same_shape("gaussian_nll", u, mu.val());
    require_same_shape("gaussian_nll", u, sigma.val());
    require_positive("gaussian_nll", sigma.val());
    ad::Tape& t = *mu.tape;
    ad::Value uc = t.constant(u);
    ad::Value resid = ad::sub(uc, mu);
    ad::Value quad = ad::div(ad::square(resid), ad::mul_scalar(ad::square(sigma), 2.0));
    return ad::mean_all(ad::add(ad::log(sigma), quad));
}

ad::Value kl_diag_gauss_graph(ad::Value mu_z, ad::Value sigma_z) {
    require_same_shape("kl_diag_gauss", mu_z.val(), sigma_z.val());
    require_positive("kl_diag_gauss", sigma_z.val());
    // 0.5 * sum(sigma^2 + mu^2 - 1 - 2 log sigma)
    ad::Value s2 = ad::square(sigma_z);
    ad::Value inner = ad::sub(ad::add(s2, ad::square(mu_z)),
                              ad::add_scalar(ad::mul_scalar(ad::log(sigma_z), 2.0), 1.0));
    return ad::mul_scalar(ad::sum_all(inner), 0.5);
}

ad::Value mean_squared_graph(const Tensor& u, ad::Value point) {
    require_same_shape("mean_squared", u, point.val());
    ad::Tape& t = *point.tape;
    return ad::mean_all(ad::square(ad::sub(t.constant(u), point)));
}

GraphLoss composite_loss_graph(const GraphForward& fwd, const SeriesWindow& window,
                               double beta) {
    GraphLoss out;
    out.rec = gaussian_nll_graph(window.lookback, fwd.recon_mu, fwd.recon_sigma);
    out.pred = gaussian_nll_graph(window.horizon, fwd.pred_mu, fwd.pred_sigma);
    out.kl = kl_diag_gauss_graph(fwd.mu_z, fwd.sigma_z);
    out.total = ad::add(ad::add(out.rec, out.pred), ad::mul_scalar(out.kl, beta));
    return out;
}

GraphLoss mse_loss_graph(const GraphForward& fwd, const SeriesWindow& window, double beta) {
    GraphLoss out;
    out.rec = mean_squared_graph(window.lookback, fwd.recon_mu);
    out.pred = mean_squared_graph(window.horizon, fwd.pred_mu);
    out.kl = kl_diag_gauss_graph(fwd.mu_z, fwd.sigma_z);
    out.total = ad::add(ad::add(out.rec, out.pred), ad::mul_scalar(out.kl, beta));
    return out;
}

} // namespace lsg
