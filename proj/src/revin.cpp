#include "lsg/revin.hpp"

#include <algorithm>
#include <cmath>

#include "lsg/errors.hpp"

namespace lsg {

InstanceStats revin_fit(const Tensor& lookback, double eps) {
    if (lookback.rank() != 2)
        throw shape_error("revin_fit: expected [L x C], got " + lookback.shape_str());
    if (!(eps > 0.0)) throw contract_error("revin_fit: eps must be positive");
    const std::size_t L = lookback.rows(), C = lookback.cols();

    InstanceStats s;
    s.eps = eps;
    s.mean = Tensor({C});
    s.std = Tensor({C});
    for (std::size_t c = 0; c < C; ++c) {
        double m = 0.0;
        for (std::size_t t = 0; t < L; ++t) m += lookback.at2(t, c);
        m /= static_cast<double>(L);
        double var = 0.0;
        for (std::size_t t = 0; t < L; ++t) {
            const double d = lookback.at2(t, c) - m;
            var += d * d;
        }
        var /= static_cast<double>(L);
        s.mean[c] = m;
        s.std[c] = std::max(std::sqrt(var), eps);
    }
    return s;
}

namespace {

void check_channels(const char* op, const Tensor& x, const InstanceStats& stats) {
    if (x.rank() != 2)
        throw shape_error(std::string(op) + ": expected [T x C], got " + x.shape_str());
    if (x.cols() != stats.mean.size())
        throw shape_error(std::string(op) + ": stats for " + std::to_string(stats.mean.size()) +
                          " channels, input has " + std::to_string(x.cols()));
}

} // namespace

Tensor revin_normalize(const Tensor& x, const InstanceStats& stats) {
    check_channels("revin_normalize", x, stats);
    Tensor out(x.shape());
    const std::size_t C = x.cols();
    for (std::size_t t = 0; t < x.rows(); ++t)
        for (std::size_t c = 0; c < C; ++c)
            out.at2(t, c) = (x.at2(t, c) - stats.mean[c]) / stats.std[c];
    return out;
}

Tensor revin_denorm_location(const Tensor& mu_norm, const InstanceStats& stats) {
    check_channels("revin_denorm_location", mu_norm, stats);
    Tensor out(mu_norm.shape());
    const std::size_t C = mu_norm.cols();
    for (std::size_t t = 0; t < mu_norm.rows(); ++t)
        for (std::size_t c = 0; c < C; ++c)
            out.at2(t, c) = mu_norm.at2(t, c) * stats.std[c] + stats.mean[c];
    return out;
}

Tensor revin_denorm_scale(const Tensor& sigma_norm, const InstanceStats& stats) {
    check_channels("revin_denorm_scale", sigma_norm, stats);
    for (std::size_t i = 0; i < sigma_norm.size(); ++i)
        if (!(sigma_norm[i] > 0.0))
            throw contract_error("revin_denorm_scale: sigma must be positive, got " +
                                 std::to_string(sigma_norm[i]));
    Tensor out(sigma_norm.shape());
    const std::size_t C = sigma_norm.cols();
    for (std::size_t t = 0; t < sigma_norm.rows(); ++t)
        for (std::size_t c = 0; c < C; ++c) out.at2(t, c) = sigma_norm.at2(t, c) * stats.std[c];
    return out;
}

ad::Value revin_denorm_location(ad::Value mu_norm, const InstanceStats& stats) {
    check_channels("revin_denorm_location", mu_norm.val(), stats);
    ad::Tape& t = *mu_norm.tape;
    ad::Value std_row = t.constant(stats.std);
    ad::Value mean_row = t.constant(stats.mean);
    return ad::add(ad::mul(mu_norm, std_row), mean_row);
}

ad::Value revin_denorm_scale(ad::Value sigma_norm, const InstanceStats& stats) {
    check_channels("revin_denorm_scale", sigma_norm.val(), stats);
    const Tensor& sv = sigma_norm.val();
    for (std::size_t i = 0; i < sv.size(); ++i)
        if (!(sv[i] > 0.0))
            throw contract_error("revin_denorm_scale: sigma must be positive, got " +
                                 std::to_string(sv[i]));
    return ad::mul(sigma_norm, sigma_norm.tape->constant(stats.std));
}

} // namespace lsg
