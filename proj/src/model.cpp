#include "lsg/model.hpp"

#include <cmath>
#include <cstdio>

#include "lsg/errors.hpp"
#include "lsg/kernels.hpp"

namespace lsg {

namespace {

constexpr double kLatentSigmaFloor = 1e-6;

std::string idx2(const char* prefix, std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%s%02zu", prefix, i);
    return buf;
}

} // namespace

void ModelConfig::validate() const {
    if (L < 1 || H < 1 || C < 1 || P < 1 || D < 1 || enc_layers < 1 || hidden_width < 1 ||
        channel_embed < 1)
        throw config_error("model config: all dimensions must be positive");
    if (!(xi > 0.0)) throw config_error("model config: xi must be positive");
    if (!(revin_eps > 0.0)) throw config_error("model config: revin_eps must be positive");
}

Tensor& ModelParams::at(const std::string& name) {
    auto it = tensors.find(name);
    if (it == tensors.end()) throw contract_error("unknown parameter: " + name);
    return it->second;
}

const Tensor& ModelParams::at(const std::string& name) const {
    auto it = tensors.find(name);
    if (it == tensors.end()) throw contract_error("unknown parameter: " + name);
    return it->second;
}

std::size_t param_count(const ModelConfig& cfg) {
    const std::size_t W = cfg.hidden_width, D = cfg.D, P = cfg.P, E = cfg.channel_embed;
    const std::size_t N = cfg.N(), M = cfg.M();
    std::size_t n = 0;
    n += P * W + W;                                    // encoder input layer
    n += (cfg.enc_layers - 1) * (W * W + W);           // encoder hidden layers
    n += 2 * (W * D + D);                              // posterior heads
    n += (N * D) * (M * D) + M * D;                    // latent projection
    n += cfg.C * E;                                    // channel embedding
    n += (D + E) * W + W;                              // decoder input layer
    n += (cfg.enc_layers - 1) * (W * W + W);           // decoder hidden layers
    n += W * 2 * P + 2 * P;                            // dual-head output layer
    return n;
}

std::map<std::string, std::vector<std::size_t>> param_shapes(const ModelConfig& cfg) {
    cfg.validate();
    const std::size_t W = cfg.hidden_width, D = cfg.D, P = cfg.P, E = cfg.channel_embed;
    const std::size_t N = cfg.N(), M = cfg.M();

    std::map<std::string, std::vector<std::size_t>> s;
    s[idx2("enc.w", 0)] = {P, W};
    s[idx2("enc.b", 0)] = {W};
    for (std::size_t i = 1; i < cfg.enc_layers; ++i) {
        s[idx2("enc.w", i)] = {W, W};
        s[idx2("enc.b", i)] = {W};
    }
    s["enc.mu_w"] = {W, D};
    s["enc.mu_b"] = {D};
    s["enc.sig_w"] = {W, D};
    s["enc.sig_b"] = {D};
    s["proj.w"] = {N * D, M * D};
    s["proj.b"] = {M * D};
    s["dec.embed"] = {cfg.C, E};
    s[idx2("dec.w", 0)] = {D + E, W};
    s[idx2("dec.b", 0)] = {W};
    for (std::size_t i = 1; i < cfg.enc_layers; ++i) {
        s[idx2("dec.w", i)] = {W, W};
        s[idx2("dec.b", i)] = {W};
    }
    s["dec.out_w"] = {W, 2 * P};
    s["dec.out_b"] = {2 * P};
    return s;
}

ModelParams init_params(const ModelConfig& cfg, std::uint64_t seed) {
    const std::size_t P = cfg.P, E = cfg.channel_embed;

    ModelParams params;
    params.config = cfg;
    auto& t = params.tensors;
    for (const auto& [name, shape] : param_shapes(cfg)) t[name] = Tensor(shape);

    // Fill in name order so the draw sequence is part of the contract.
    Rng rng(seed);
    for (auto& [name, tensor] : t) {
        const bool is_weight = name.find(".w") != std::string::npos ||
                               name.find("_w") != std::string::npos ||
                               name == "dec.embed";
        if (!is_weight) continue;  // biases stay zero
        const std::size_t fan_in = name == "dec.embed" ? E : tensor.rows();
        const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
        for (std::size_t i = 0; i < tensor.size(); ++i)
            tensor[i] = rng.uniform(-bound, bound);
    }
    // scale half of the output bias: softplus^-1(1) = log(e - 1)
    Tensor& out_b = t["dec.out_b"];
    const double sp_inv_1 = std::log(std::exp(1.0) - 1.0);
    for (std::size_t p = P; p < 2 * P; ++p) out_b[p] = sp_inv_1;

    std::size_t total = 0;
    for (const auto& [name, tensor] : t) total += tensor.size();
    if (total != param_count(cfg))
        throw contract_error("parameter count mismatch: built " + std::to_string(total) +
                             ", formula gives " + std::to_string(param_count(cfg)));
    return params;
}

namespace {

// Channel-major patch matrix: row (c*N + n) holds patch n of channel c.
Tensor channel_major_patches(const PatchGrid& grid) {
    const std::size_t N = grid.N, P = grid.P, C = grid.C;
    Tensor out({C * N, P});
    for (std::size_t c = 0; c < C; ++c)
        for (std::size_t n = 0; n < N; ++n)
            for (std::size_t p = 0; p < P; ++p)
                out.at2(c * N + n, p) = grid.patches[(n * P + p) * C + c];
    return out;
}

ad::Value mlp(ad::Value x, const std::map<std::string, ad::Value>& leaves, const char* prefix,
              std::size_t layers) {
    ad::Value h = x;
    for (std::size_t i = 0; i < layers; ++i) {
        const ad::Value& w = leaves.at(idx2((std::string(prefix) + ".w").c_str(), i));
        const ad::Value& b = leaves.at(idx2((std::string(prefix) + ".b").c_str(), i));
        h = ad::relu(ad::add(ad::matmul(h, w), b));
    }
    return h;
}

// Mean over channels of a [(C*N) x D] channel-major stack -> [N x D].
ad::Value pool_channels(ad::Value x, std::size_t C, std::size_t N) {
    if (C == 1) return x;
    std::vector<std::size_t> sizes(C, N);
    std::vector<ad::Value> parts = ad::split(x, 0, sizes);
    ad::Value acc = parts[0];
    for (std::size_t c = 1; c < C; ++c) acc = ad::add(acc, parts[c]);
    return ad::mul_scalar(acc, 1.0 / static_cast<double>(C));
}

// Repeat each row of a [C x E] matrix K times -> [(C*K) x E].
ad::Value repeat_rows(ad::Value e, std::size_t C, std::size_t E, std::size_t K) {
    if (K == 1) return e;
    std::vector<ad::Value> copies(K, e);
    return ad::reshape(ad::concat(copies, 1), {C * K, E});
}

// Tile a [K x D] latent block C times along rows -> [(C*K) x D].
ad::Value tile_block(ad::Value z, std::size_t C) {
    if (C == 1) return z;
    std::vector<ad::Value> copies(C, z);
    return ad::concat(copies, 0);
}

struct DecodedSpan {
    ad::Value mu_norm;     // [T x C]
    ad::Value sigma_norm;  // [T x C]
};

// Shared dual-head decoder over K latent rows, cropped to rows
// [row0, row0+T) of the K*P-step patch span and unflattened time-major.
DecodedSpan decode_span(ad::Value z, std::size_t K, const ModelConfig& cfg,
                        const std::map<std::string, ad::Value>& leaves, std::size_t row0,
                        std::size_t T) {
    const std::size_t C = cfg.C, D = cfg.D, E = cfg.channel_embed, P = cfg.P;
    ad::Value zt = tile_block(z, C);                       // [(C*K) x D]
    ad::Value et = repeat_rows(leaves.at("dec.embed"), C, E, K);
    ad::Value h = mlp(ad::concat({zt, et}, 1), leaves, "dec", cfg.enc_layers);
    ad::Value out = ad::add(ad::matmul(h, leaves.at("dec.out_w")), leaves.at("dec.out_b"));
    std::vector<ad::Value> halves = ad::split(out, 1, {P, P});
    ad::Value sigma = ad::add_scalar(ad::softplus(halves[1]), cfg.xi);

    auto to_time_major = [&](ad::Value block) {
        // [(C*K) x P] -> rows of one channel side by side -> [T' x C]
        ad::Value by_channel = ad::reshape(block, {C, K * P});
        ad::Value tm = ad::transpose(by_channel);  // [(K*P) x C]
        if (row0 == 0 && T == K * P) return tm;
        return ad::slice_rows(tm, row0, row0 + T);
    };
    return {to_time_major(halves[0]), to_time_major(sigma)};
}

} // namespace

GraphForward build_forward(ad::Tape& tape, const ModelParams& params,
                           const SeriesWindow& window, const Tensor& noise,
                           bool params_require_grad) {
    const ModelConfig& cfg = params.config;
    cfg.validate();
    const std::size_t N = cfg.N(), M = cfg.M();
    if (window.lookback.rank() != 2 || window.lookback.rows() != cfg.L ||
        window.lookback.cols() != cfg.C)
        throw shape_error("forward: lookback is " + window.lookback.shape_str() +
                          ", config expects [" + std::to_string(cfg.L) + "x" +
                          std::to_string(cfg.C) + "]");
    if (noise.rank() != 2 || noise.rows() != N || noise.cols() != cfg.D)
        throw shape_error("forward: latent noise must be [N x D] = [" + std::to_string(N) +
                          "x" + std::to_string(cfg.D) + "], got " + noise.shape_str());

    GraphForward fwd;
    fwd.stats = revin_fit(window.lookback, cfg.revin_eps);
    const Tensor normalized = revin_normalize(window.lookback, fwd.stats);
    const PatchGrid grid = patch(normalized, cfg.P);

    for (const auto& [name, tensor] : params.tensors)
        fwd.leaves.emplace(name, tape.leaf(tensor, params_require_grad));

    // ---- encoder ----
    ad::Value pm = tape.constant(channel_major_patches(grid));  // [(C*N) x P]
    ad::Value h = mlp(pm, fwd.leaves, "enc", cfg.enc_layers);
    ad::Value mu_cn =
        ad::add(ad::matmul(h, fwd.leaves.at("enc.mu_w")), fwd.leaves.at("enc.mu_b"));
    ad::Value sig_cn = ad::add_scalar(
        ad::softplus(
            ad::add(ad::matmul(h, fwd.leaves.at("enc.sig_w")), fwd.leaves.at("enc.sig_b"))),
        kLatentSigmaFloor);

    fwd.mu_z = pool_channels(mu_cn, cfg.C, N);
    fwd.sigma_z = pool_channels(sig_cn, cfg.C, N);

    // ---- reparameterization ----
    fwd.z_past = ad::add(fwd.mu_z, ad::mul(tape.constant(noise), fwd.sigma_z));

    // ---- latent dynamics: one affine map over the flattened past ----
    ad::Value flat = ad::reshape(fwd.z_past, {1, N * cfg.D});
    ad::Value proj =
        ad::add(ad::matmul(flat, fwd.leaves.at("proj.w")), fwd.leaves.at("proj.b"));
    fwd.z_future = ad::reshape(proj, {M, cfg.D});

    // ---- shared decoder on both spans ----
    const std::size_t pad = N * cfg.P - cfg.L;  // padded prefix to drop
    DecodedSpan recon = decode_span(fwd.z_past, N, cfg, fwd.leaves, pad, cfg.L);
    DecodedSpan pred = decode_span(fwd.z_future, M, cfg, fwd.leaves, 0, cfg.H);

    fwd.recon_mu = revin_denorm_location(recon.mu_norm, fwd.stats);
    fwd.recon_sigma = revin_denorm_scale(recon.sigma_norm, fwd.stats);
    fwd.pred_mu = revin_denorm_location(pred.mu_norm, fwd.stats);
    fwd.pred_sigma = revin_denorm_scale(pred.sigma_norm, fwd.stats);
    return fwd;
}

ForwardResult forward(const ModelParams& params, const SeriesWindow& window,
                      ForwardMode mode, Rng* rng) {
    const ModelConfig& cfg = params.config;
    Tensor noise;
    if (mode == ForwardMode::mean) {
        noise = Tensor::zeros({cfg.N(), cfg.D});
    } else {
        if (rng == nullptr)
            throw contract_error("forward: train/sample mode requires an rng");
        noise = rng->normal_tensor({cfg.N(), cfg.D});
    }

    ad::Tape tape;
    GraphForward fwd = build_forward(tape, params, window, noise, false);

    ForwardResult out;
    out.recon.mu = fwd.recon_mu.val();
    out.recon.sigma = fwd.recon_sigma.val();
    out.pred.mu = fwd.pred_mu.val();
    out.pred.sigma = fwd.pred_sigma.val();
    out.latent.mu_z = fwd.mu_z.val();
    out.latent.sigma_z = fwd.sigma_z.val();
    out.latent.z_past = fwd.z_past.val();
    out.latent.z_future = fwd.z_future.val();
    out.latent.noise = std::move(noise);
    out.stats = fwd.stats;
    return out;
}

Tensor evolve(const ModelParams& params, const Tensor& z_past) {
    const ModelConfig& cfg = params.config;
    const std::size_t N = cfg.N(), M = cfg.M(), D = cfg.D;
    if (z_past.rank() != 2 || z_past.rows() != N || z_past.cols() != D)
        throw shape_error("evolve: z_past must be [" + std::to_string(N) + "x" +
                          std::to_string(D) + "], got " + z_past.shape_str());
    const Tensor& w = params.at("proj.w");
    const Tensor& b = params.at("proj.b");
    Tensor out({1, M * D});
    kernels::matmul(z_past.data(), w.data(), out.data(), 1, N * D, M * D);
    kernels::add(out.data(), b.data(), out.data(), M * D);
    return Tensor({M, D}, out.vec());
}

Tensor sample_paths(const ModelParams& params, const SeriesWindow& window, std::size_t S,
                    Rng& rng, bool with_obs_noise, bool with_latent_noise) {
    if (S < 1) throw contract_error("sample_paths: S must be >= 1");
    const ModelConfig& cfg = params.config;
    Tensor paths({S, cfg.H, cfg.C});
    const std::size_t span = cfg.H * cfg.C;
    for (std::size_t s = 0; s < S; ++s) {
        ForwardResult f = with_latent_noise
                              ? forward(params, window, ForwardMode::sample, &rng)
                              : forward(params, window, ForwardMode::mean, nullptr);
        if (with_obs_noise) {
            const Tensor eps = rng.normal_tensor({cfg.H, cfg.C});
            for (std::size_t i = 0; i < span; ++i)
                paths[s * span + i] = f.pred.mu[i] + f.pred.sigma[i] * eps[i];
        } else {
            for (std::size_t i = 0; i < span; ++i) paths[s * span + i] = f.pred.mu[i];
        }
    }
    return paths;
}

} // namespace lsg
