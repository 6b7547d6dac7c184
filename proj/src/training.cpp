#include "lsg/training.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <string>

#include "lsg/errors.hpp"
#include "lsg/kernels.hpp"
#include "lsg/rng.hpp"

namespace lsg {

namespace k = kernels;

void TrainConfig::validate() const {
    if (!(lr > 0.0)) throw config_error("lr must be positive");
    if (batch_size < 1) throw config_error("batch_size must be at least 1");
    if (max_epochs < 1) throw config_error("max_epochs must be at least 1");
    if (patience > max_epochs)
        throw config_error("patience must not exceed max_epochs");
    if (!(beta >= 0.0)) throw config_error("beta must be non-negative");
    if (grad_clip < 0.0) throw config_error("grad_clip must be non-negative");
    if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0) ||
        !(adam.beta2 >= 0.0 && adam.beta2 < 1.0) || !(adam.eps > 0.0))
        throw config_error("adam moments need beta1, beta2 in [0,1) and eps > 0");
}

void adam_step(ModelParams& params, const std::map<std::string, Tensor>& grads,
               AdamState& state, const TrainConfig& cfg) {
    if (grads.size() != params.tensors.size())
        throw contract_error("adam_step: gradient map does not match parameters");
    for (const auto& [name, g] : grads) {
        auto it = params.tensors.find(name);
        if (it == params.tensors.end())
            throw contract_error("adam_step: gradient for unknown parameter '" + name + "'");
        if (!g.same_shape(it->second))
            throw contract_error("adam_step: gradient shape mismatch for '" + name + "'");
        for (std::size_t i = 0; i < g.size(); ++i)
            if (!std::isfinite(g[i]))
                throw train_error("non-finite gradient for parameter '" + name + "'");
    }

    // optional global-norm clip, applied before the moment updates
    double scale = 1.0;
    if (cfg.grad_clip > 0.0) {
        double sq = 0.0;
        for (const auto& [name, g] : grads) sq += k::sumsq(g.data(), g.size());
        const double norm = std::sqrt(sq);
        if (norm > cfg.grad_clip) scale = cfg.grad_clip / norm;
    }

    if (state.m.empty()) {
        for (const auto& [name, p] : params.tensors) {
            state.m.emplace(name, Tensor::zeros(p.shape()));
            state.v.emplace(name, Tensor::zeros(p.shape()));
        }
    }
    ++state.t;
    const double bc1 = 1.0 - std::pow(cfg.adam.beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(cfg.adam.beta2, static_cast<double>(state.t));

    Tensor scaled;
    for (auto& [name, p] : params.tensors) {
        const Tensor* g = &grads.at(name);
        if (scale != 1.0) {
            scaled = *g;
            k::mul_scalar(scaled.data(), scale, scaled.data(), scaled.size());
            g = &scaled;
        }
        k::adam_update(p.data(), state.m.at(name).data(), state.v.at(name).data(),
                       g->data(), p.size(), cfg.lr, cfg.adam.beta1, cfg.adam.beta2,
                       cfg.adam.eps, bc1, bc2);
    }
}

namespace {

LossBreakdown validation_loss(const ModelParams& params,
                              const std::vector<SeriesWindow>& wins,
                              const TrainConfig& tc) {
    LossBreakdown acc;
    acc.beta = tc.beta;
    for (const SeriesWindow& w : wins) {
        ForwardResult f = forward(params, w, ForwardMode::mean, nullptr);
        if (tc.loss == LossKind::nll) {
            LossBreakdown lb = composite_loss(f.recon, f.pred, w, f.latent, tc.beta);
            acc.rec_nll += lb.rec_nll;
            acc.pred_nll += lb.pred_nll;
            acc.kl += lb.kl;
            acc.total += lb.total;
        } else {
            const double rec = mean_squared(w.lookback, f.recon.mu);
            const double pred = mean_squared(w.horizon, f.pred.mu);
            const double kl = kl_diag_gauss(f.latent.mu_z, f.latent.sigma_z);
            acc.rec_nll += rec;
            acc.pred_nll += pred;
            acc.kl += kl;
            acc.total += rec + pred + tc.beta * kl;
        }
    }
    const double inv = 1.0 / static_cast<double>(wins.size());
    acc.rec_nll *= inv;
    acc.pred_nll *= inv;
    acc.kl *= inv;
    acc.total *= inv;
    return acc;
}

}  // namespace

std::pair<ModelParams, TrainReport> train(const ModelConfig& mc, const TrainConfig& tc,
                                          const Dataset& train_ds, const Dataset& val_ds,
                                          const EpochCallback& on_epoch) {
    using clock = std::chrono::steady_clock;
    mc.validate();
    tc.validate();
    const std::vector<SeriesWindow> wtr = windows(train_ds, mc.L, mc.H, 1);
    const std::vector<SeriesWindow> wva = windows(val_ds, mc.L, mc.H, 1);
    if (wtr.empty()) throw train_error("training split yields no look-back+horizon window");
    if (wva.empty()) throw train_error("validation split yields no look-back+horizon window");

    ModelParams params = init_params(mc, tc.seed);
    AdamState opt;
    // dedicated streams: shuffling must not perturb the model-noise draws
    Rng shuffle_rng = Rng::substream(tc.seed, 1);
    Rng noise_rng = Rng::substream(tc.seed, 2);

    TrainReport report;
    ModelParams best = params;
    double best_val = std::numeric_limits<double>::infinity();
    std::size_t bad = 0;
    const auto t0 = clock::now();

    for (std::size_t epoch = 1; epoch <= tc.max_epochs; ++epoch) {
        const auto e0 = clock::now();
        const std::vector<std::size_t> perm = shuffle_rng.permutation(wtr.size());
        LossBreakdown train_acc;
        train_acc.beta = tc.beta;

        for (std::size_t b = 0; b < perm.size(); b += tc.batch_size) {
            const std::size_t bend = std::min(b + tc.batch_size, perm.size());
            std::map<std::string, Tensor> grads;
            for (std::size_t kk = b; kk < bend; ++kk) {
                const SeriesWindow& w = wtr[perm[kk]];
                const Tensor noise = noise_rng.normal_tensor({mc.N(), mc.D});
                try {
                    ad::Tape tape;
                    GraphForward fwd = build_forward(tape, params, w, noise);
                    GraphLoss gl = (tc.loss == LossKind::nll)
                                       ? composite_loss_graph(fwd, w, tc.beta)
                                       : mse_loss_graph(fwd, w, tc.beta);
                    tape.backward(gl.total);
                    train_acc.rec_nll += gl.rec.val().item();
                    train_acc.pred_nll += gl.pred.val().item();
                    train_acc.kl += gl.kl.val().item();
                    train_acc.total += gl.total.val().item();
                    for (const auto& [name, leaf] : fwd.leaves) {
                        const Tensor& g = tape.grad(leaf);
                        auto it = grads.find(name);
                        if (it == grads.end())
                            grads.emplace(name, g);
                        else
                            k::add(it->second.data(), g.data(), it->second.data(), g.size());
                    }
                } catch (const numeric_error& e) {
                    throw train_error("non-finite loss in epoch " + std::to_string(epoch) +
                                      ", batch starting at " + std::to_string(b) +
                                      ", window " + std::to_string(perm[kk]) + ": " +
                                      e.what());
                }
            }
            const double inv = 1.0 / static_cast<double>(bend - b);
            for (auto& [name, g] : grads)
                k::mul_scalar(g.data(), inv, g.data(), g.size());
            adam_step(params, grads, opt, tc);
        }

        EpochRecord rec;
        rec.epoch = epoch;
        rec.train = train_acc;
        const double inv = 1.0 / static_cast<double>(wtr.size());
        rec.train.rec_nll *= inv;
        rec.train.pred_nll *= inv;
        rec.train.kl *= inv;
        rec.train.total *= inv;
        rec.val = validation_loss(params, wva, tc);
        if (!std::isfinite(rec.val.total))
            throw train_error("non-finite validation loss in epoch " + std::to_string(epoch));
        rec.elapsed_s = std::chrono::duration<double>(clock::now() - e0).count();
        report.epochs.push_back(rec);
        if (on_epoch) on_epoch(rec);

        if (rec.val.total < best_val) {
            best_val = rec.val.total;
            best = params;
            report.best_epoch = epoch;
            bad = 0;
        } else {
            ++bad;
            if (bad > tc.patience) {
                report.stopped_early = true;
                break;
            }
        }
    }
    report.wall_time_s = std::chrono::duration<double>(clock::now() - t0).count();

    if (tc.loss == LossKind::mse) {
        // constant evaluation scale: RMSE of mean-mode horizon residuals on
        // the training windows under the returned parameters
        double ss = 0.0;
        std::size_t n = 0;
        for (const SeriesWindow& w : wtr) {
            ForwardResult f = forward(best, w, ForwardMode::mean, nullptr);
            for (std::size_t i = 0; i < w.horizon.size(); ++i) {
                const double d = w.horizon[i] - f.pred.mu[i];
                ss += d * d;
            }
            n += w.horizon.size();
        }
        report.sigma_const = std::max(std::sqrt(ss / static_cast<double>(n)), mc.xi);
    }
    return {std::move(best), std::move(report)};
}

std::string epoch_log_line(const EpochRecord& rec) {
    char buf[320];
    std::snprintf(buf, sizeof buf,
                  "{\"epoch\":%zu,\"rec_nll\":%.9g,\"pred_nll\":%.9g,\"kl\":%.9g,"
                  "\"total\":%.9g,\"val_total\":%.9g,\"elapsed_s\":%.3f}",
                  rec.epoch, rec.train.rec_nll, rec.train.pred_nll, rec.train.kl,
                  rec.train.total, rec.val.total, rec.elapsed_s);
    return buf;
}

}  // namespace lsg
