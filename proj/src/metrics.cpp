#include "lsg/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "lsg/errors.hpp"

namespace lsg {

namespace {

void check_sample_block(const Tensor& samples, const Tensor& truth, const char* op) {
    if (samples.rank() != 3)
        throw shape_error(std::string(op) + ": samples must be [S x T x C]");
    if (truth.rank() != 2)
        throw shape_error(std::string(op) + ": truth must be [T x C]");
    if (samples.shape()[1] != truth.rows() || samples.shape()[2] != truth.cols())
        throw shape_error(std::string(op) + ": samples and truth disagree on [T x C]");
}

// One cell of the energy-form estimator; sorts xs in place. The pairwise
// sum over sorted values collapses to sum_i x_(i) * (2i + 1 - S), which is
// half of sum_{s,s'} |x_s - x_{s'}|.
double crps_cell(std::vector<double>& xs, double x) {
    std::sort(xs.begin(), xs.end());
    const double S = static_cast<double>(xs.size());
    double abs_term = 0.0;
    double pair_half = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        abs_term += std::fabs(xs[i] - x);
        pair_half += xs[i] * (2.0 * static_cast<double>(i) + 1.0 - S);
    }
    return abs_term / S - pair_half / (S * S);
}

void gather_cell(const Tensor& samples, std::size_t cell, std::size_t span,
                 std::vector<double>& out) {
    const double* base = samples.data();
    for (std::size_t s = 0; s < out.size(); ++s) out[s] = base[s * span + cell];
}

bool is_constant(const Tensor& t) {
    for (std::size_t i = 1; i < t.size(); ++i)
        if (t[i] != t[0]) return false;
    return true;
}

}  // namespace

double sample_quantile_sorted(const std::vector<double>& sorted, double q) {
    if (sorted.empty()) throw contract_error("sample_quantile_sorted: empty sample set");
    if (!(q >= 0.0 && q <= 1.0))
        throw contract_error("sample_quantile_sorted: level outside [0, 1]");
    const double h = q * static_cast<double>(sorted.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(h);
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

double crps_samples(const Tensor& samples, const Tensor& truth) {
    check_sample_block(samples, truth, "crps_samples");
    const std::size_t S = samples.shape()[0];
    if (S < 2) throw contract_error("crps_samples: need at least 2 samples");
    const std::size_t span = truth.size();
    std::vector<double> xs(S);
    double acc = 0.0;
    for (std::size_t cell = 0; cell < span; ++cell) {
        gather_cell(samples, cell, span, xs);
        acc += crps_cell(xs, truth[cell]);
    }
    return acc / static_cast<double>(span);
}

double nmae(const Tensor& point, const Tensor& truth) {
    if (!point.same_shape(truth))
        throw shape_error("nmae: forecast and truth shapes differ");
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        num += std::fabs(truth[i] - point[i]);
        den += std::fabs(truth[i]);
    }
    if (den == 0.0) throw metric_error("nmae undefined: truth is identically zero");
    return num / den;
}

double qice(const Tensor& samples, const Tensor& truth,
            const std::vector<double>& levels) {
    check_sample_block(samples, truth, "qice");
    const std::size_t S = samples.shape()[0];
    if (S < 10) throw contract_error("qice: need at least 10 samples");
    if (levels.empty()) throw contract_error("qice: need at least one level");
    for (double q : levels)
        if (!(q >= 0.0 && q <= 1.0))
            throw contract_error("qice: levels must lie in [0, 1]");

    const std::size_t span = truth.size();
    std::vector<double> xs(S);
    std::vector<std::size_t> covered(levels.size(), 0);
    for (std::size_t cell = 0; cell < span; ++cell) {
        gather_cell(samples, cell, span, xs);
        std::sort(xs.begin(), xs.end());
        for (std::size_t k = 0; k < levels.size(); ++k)
            if (truth[cell] <= sample_quantile_sorted(xs, levels[k])) ++covered[k];
    }
    double acc = 0.0;
    for (std::size_t k = 0; k < levels.size(); ++k) {
        const double coverage =
            static_cast<double>(covered[k]) / static_cast<double>(span);
        acc += std::fabs(coverage - levels[k]);
    }
    return acc / static_cast<double>(levels.size());
}

double volatility_recovery(const Tensor& sigma_hat, const Tensor& sigma_true) {
    if (!sigma_hat.same_shape(sigma_true))
        throw shape_error("volatility_recovery: trace shapes differ");
    const std::size_t n = sigma_hat.size();
    if (n < 2) throw contract_error("volatility_recovery: need at least 2 points");
    if (is_constant(sigma_hat) || is_constant(sigma_true))
        throw metric_error("volatility_recovery undefined: zero-variance trace");

    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        ma += sigma_hat[i];
        mb += sigma_true[i];
    }
    ma /= static_cast<double>(n);
    mb /= static_cast<double>(n);
    double cab = 0.0, caa = 0.0, cbb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double da = sigma_hat[i] - ma;
        const double db = sigma_true[i] - mb;
        cab += da * db;
        caa += da * da;
        cbb += db * db;
    }
    if (caa == 0.0 || cbb == 0.0)
        throw metric_error("volatility_recovery undefined: zero-variance trace");
    return std::clamp(cab / (std::sqrt(caa) * std::sqrt(cbb)), -1.0, 1.0);
}

EvalResult evaluate(const ModelParams& params, const Dataset& split,
                    const EvalConfig& cfg) {
    const ModelConfig& mc = params.config;
    if (split.C() != mc.C)
        throw shape_error("evaluate: dataset has " + std::to_string(split.C()) +
                          " channels but the model expects " + std::to_string(mc.C));
    const std::size_t stride = cfg.stride ? cfg.stride : mc.H;
    std::vector<SeriesWindow> wins = windows(split, mc.L, mc.H, stride);
    if (wins.empty())
        throw metric_error("evaluate: split shorter than one look-back + horizon");

    EvalResult r;
    r.sample_count = cfg.samples;
    r.quantile_levels = cfg.levels;
    r.windows = wins.size();
    r.per_step_crps.assign(mc.H, 0.0);
    r.per_step_nmae.assign(mc.H, 0.0);
    r.sigma_trace.reserve(wins.size() * mc.H);
    r.trace_index.reserve(wins.size() * mc.H);
    std::vector<double> step_err(mc.H, 0.0);
    std::vector<double> step_mag(mc.H, 0.0);

    if (cfg.sigma_const < 0.0)
        throw contract_error("evaluate: sigma_const must be non-negative");

    std::vector<double> xs(cfg.samples);
    const std::size_t span = mc.H * mc.C;
    for (std::size_t i = 0; i < wins.size(); ++i) {
        const SeriesWindow& w = wins[i];
        Rng rng = Rng::substream(cfg.seed, i);
        Tensor paths = sample_paths(params, w, cfg.samples, rng,
                                    /*with_obs_noise=*/cfg.sigma_const == 0.0);
        ForwardResult f = forward(params, w, ForwardMode::mean, nullptr);
        if (cfg.sigma_const > 0.0) {
            // homoscedastic override: constant observation scale everywhere
            for (std::size_t k = 0; k < paths.size(); ++k)
                paths[k] += cfg.sigma_const * rng.normal();
            for (std::size_t k = 0; k < f.pred.sigma.size(); ++k)
                f.pred.sigma[k] = cfg.sigma_const;
        }

        r.crps += crps_samples(paths, w.horizon);
        r.nmae += nmae(f.pred.mu, w.horizon);
        r.qice += qice(paths, w.horizon, cfg.levels);

        for (std::size_t t = 0; t < mc.H; ++t) {
            double sig = 0.0;
            for (std::size_t c = 0; c < mc.C; ++c) {
                const std::size_t cell = t * mc.C + c;
                gather_cell(paths, cell, span, xs);
                r.per_step_crps[t] += crps_cell(xs, w.horizon[cell]);
                step_err[t] += std::fabs(w.horizon[cell] - f.pred.mu[cell]);
                step_mag[t] += std::fabs(w.horizon[cell]);
                sig += f.pred.sigma[cell];
            }
            r.sigma_trace.push_back(sig / static_cast<double>(mc.C));
            r.trace_index.push_back(split.start_offset + w.origin_index + mc.L + t);
        }
    }

    const double nw = static_cast<double>(wins.size());
    r.crps /= nw;
    r.nmae /= nw;
    r.qice /= nw;
    for (std::size_t t = 0; t < mc.H; ++t) {
        r.per_step_crps[t] /= nw * static_cast<double>(mc.C);
        if (step_mag[t] == 0.0)
            throw metric_error("nmae undefined at horizon step " + std::to_string(t) +
                               ": truth is identically zero");
        r.per_step_nmae[t] = step_err[t] / step_mag[t];
    }
    return r;
}

}  // namespace lsg
