#include "lsg/data.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "lsg/errors.hpp"
#include "lsg/rng.hpp"

namespace lsg {

namespace {

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

std::string strip(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.push_back("");
    return out;
}

} // namespace

Dataset load_csv(const std::string& path, const CsvOptions& options) {
    std::ifstream in(path);
    if (!in) throw data_error("cannot open " + path);

    std::string line;
    if (!std::getline(in, line)) throw data_error(path + ": empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::vector<std::string> header = split_line(line);
    if (header.empty()) throw data_error(path + ": empty header row");

    std::size_t first_col = 0;
    const std::string head0 = lower(strip(header[0]));
    if (options.skip_first_column || head0 == "date" || head0 == "index") first_col = 1;
    if (header.size() <= first_col)
        throw data_error(path + ": no value columns after skipping the leading column");
    const std::size_t C = header.size() - first_col;

    Dataset ds;
    for (std::size_t c = first_col; c < header.size(); ++c)
        ds.channel_names.push_back(strip(header[c]));

    std::vector<double> data;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (strip(line).empty()) continue;
        ++row;
        const std::vector<std::string> cells = split_line(line);
        if (cells.size() != header.size())
            throw data_error(path + ": row " + std::to_string(row) + " has " +
                             std::to_string(cells.size()) + " cells, header has " +
                             std::to_string(header.size()));
        for (std::size_t c = first_col; c < cells.size(); ++c) {
            const std::string cell = strip(cells[c]);
            double v = 0.0;
            std::size_t consumed = 0;
            try {
                v = std::stod(cell, &consumed);
            } catch (const std::exception&) {
                consumed = 0;
            }
            if (consumed != cell.size() || cell.empty() || !std::isfinite(v))
                throw data_error(path + ": unparseable cell at row " + std::to_string(row) +
                                 ", column " + std::to_string(c + 1) + ": \"" + cell + "\"");
            data.push_back(v);
        }
    }
    if (row == 0) throw data_error(path + ": no data rows");

    ds.values = Tensor({row, C}, std::move(data));
    return ds;
}

void save_csv(const Dataset& ds, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw data_error("cannot write " + path);
    out << "index";
    for (const std::string& n : ds.channel_names) out << ',' << n;
    out << '\n';
    out.precision(17);
    for (std::size_t t = 0; t < ds.T(); ++t) {
        out << (ds.start_offset + t);
        for (std::size_t c = 0; c < ds.C(); ++c) out << ',' << ds.values.at2(t, c);
        out << '\n';
    }
    if (!out) throw data_error("write failed: " + path);
}

std::array<Dataset, 3> chrono_split(const Dataset& ds, double train, double val, double test,
                                    std::size_t min_len) {
    if (!(train > 0.0) || !(val > 0.0) || !(test > 0.0))
        throw config_error("split ratios must all be positive");
    if (std::fabs(train + val + test - 1.0) > 1e-9)
        throw config_error("split ratios must sum to 1, got " +
                           std::to_string(train + val + test));

    const std::size_t T = ds.T();
    const auto b1 = static_cast<std::size_t>(std::floor(train * static_cast<double>(T)));
    const auto b2 = static_cast<std::size_t>(std::floor((train + val) * static_cast<double>(T)));
    const std::size_t lens[3] = {b1, b2 - b1, T - b2};
    const std::size_t begins[3] = {0, b1, b2};

    std::array<Dataset, 3> out;
    for (int i = 0; i < 3; ++i) {
        if (lens[i] < std::max<std::size_t>(min_len, 1))
            throw config_error("split segment " + std::to_string(i) + " has " +
                               std::to_string(lens[i]) + " rows, need at least " +
                               std::to_string(std::max<std::size_t>(min_len, 1)));
        const std::size_t C = ds.C();
        Tensor seg({lens[i], C});
        std::memcpy(seg.data(), ds.values.data() + begins[i] * C,
                    lens[i] * C * sizeof(double));
        out[i].values = std::move(seg);
        out[i].channel_names = ds.channel_names;
        out[i].frequency_label = ds.frequency_label;
        out[i].start_offset = ds.start_offset + begins[i];
    }
    return out;
}

std::vector<SeriesWindow> windows(const Dataset& ds, std::size_t L, std::size_t H,
                                  std::size_t stride) {
    if (L < 1 || H < 1 || stride < 1)
        throw config_error("windows: L, H, stride must all be >= 1");
    std::vector<SeriesWindow> out;
    const std::size_t T = ds.T(), C = ds.C();
    if (T < L + H) return out;
    for (std::size_t origin = 0; origin + L + H <= T; origin += stride) {
        SeriesWindow w;
        w.origin_index = origin;
        w.lookback = Tensor({L, C});
        w.horizon = Tensor({H, C});
        std::memcpy(w.lookback.data(), ds.values.data() + origin * C, L * C * sizeof(double));
        std::memcpy(w.horizon.data(), ds.values.data() + (origin + L) * C,
                    H * C * sizeof(double));
        out.push_back(std::move(w));
    }
    return out;
}

PatchGrid patch(const Tensor& lookback, std::size_t P) {
    if (P < 1) throw config_error("patch: P must be >= 1");
    if (lookback.rank() != 2)
        throw shape_error("patch: lookback must be [L x C], got " + lookback.shape_str());
    const std::size_t L = lookback.rows(), C = lookback.cols();
    const std::size_t N = (L + P - 1) / P;
    const std::size_t pad = N * P - L;

    PatchGrid g;
    g.N = N;
    g.P = P;
    g.C = C;
    g.L = L;
    g.patches = Tensor({N, P, C});
    for (std::size_t i = 0; i < N * P; ++i) {
        // padded row index i maps to source row max(i - pad, 0): the first
        // pad rows repeat row 0
        const std::size_t src = i < pad ? 0 : i - pad;
        std::memcpy(g.patches.data() + i * C, lookback.data() + src * C, C * sizeof(double));
    }
    return g;
}

Tensor unpatch(const PatchGrid& grid) {
    const std::size_t pad = grid.N * grid.P - grid.L;
    Tensor out({grid.L, grid.C});
    std::memcpy(out.data(), grid.patches.data() + pad * grid.C,
                grid.L * grid.C * sizeof(double));
    return out;
}

double synthetic_sigma(const SyntheticSpec& spec, std::size_t i) {
    if (spec.kind == SyntheticSpec::Kind::regime_switching) {
        return (i / spec.regime_len) % 2 == 0 ? 0.1 : 1.0;
    }
    const double t = static_cast<double>(i) * spec.dt;
    return 0.5 + 0.4 * std::cos(t);
}

std::pair<Dataset, Tensor> gen_synthetic(const SyntheticSpec& spec) {
    if (spec.length == 0) throw config_error("gen_synthetic: length must be positive");
    if (!(spec.dt > 0.0)) throw config_error("gen_synthetic: dt must be positive");
    if (spec.kind == SyntheticSpec::Kind::regime_switching && spec.regime_len == 0)
        throw config_error("gen_synthetic: regime_len must be positive");

    Rng rng(spec.seed);
    Tensor series({spec.length, 1});
    Tensor sigma({spec.length});
    for (std::size_t i = 0; i < spec.length; ++i) {
        const double t = static_cast<double>(i) * spec.dt;
        const double s = synthetic_sigma(spec, i);
        sigma[i] = s;
        series[i] = std::sin(t) + s * rng.normal();
    }

    Dataset ds;
    ds.values = std::move(series);
    ds.channel_names = {"value"};
    ds.frequency_label = "synthetic";
    return {std::move(ds), std::move(sigma)};
}

Standardizer Standardizer::fit(const Dataset& train, double eps) {
    const std::size_t T = train.T(), C = train.C();
    Standardizer s;
    s.mean = Tensor({C});
    s.std = Tensor({C});
    for (std::size_t c = 0; c < C; ++c) {
        double m = 0.0;
        for (std::size_t t = 0; t < T; ++t) m += train.values.at2(t, c);
        m /= static_cast<double>(T);
        double var = 0.0;
        for (std::size_t t = 0; t < T; ++t) {
            const double d = train.values.at2(t, c) - m;
            var += d * d;
        }
        var /= static_cast<double>(T);
        s.mean[c] = m;
        s.std[c] = std::max(std::sqrt(var), eps);
    }
    return s;
}

Standardizer Standardizer::identity(std::size_t C) {
    Standardizer s;
    s.mean = Tensor::zeros({C});
    s.std = Tensor::full({C}, 1.0);
    return s;
}

Dataset Standardizer::apply(const Dataset& ds) const {
    if (ds.C() != mean.size())
        throw shape_error("standardizer fitted for " + std::to_string(mean.size()) +
                          " channels, dataset has " + std::to_string(ds.C()));
    Dataset out = ds;
    for (std::size_t t = 0; t < ds.T(); ++t)
        for (std::size_t c = 0; c < ds.C(); ++c)
            out.values.at2(t, c) = (ds.values.at2(t, c) - mean[c]) / std[c];
    return out;
}

Tensor Standardizer::invert(const Tensor& x) const {
    Tensor out = x;
    const std::size_t C = out.cols();
    if (C != mean.size()) throw shape_error("invert: channel count mismatch");
    for (std::size_t t = 0; t < out.rows(); ++t)
        for (std::size_t c = 0; c < C; ++c) out.at2(t, c) = x.at2(t, c) * std[c] + mean[c];
    return out;
}

Tensor Standardizer::invert_scale(const Tensor& s) const {
    Tensor out = s;
    const std::size_t C = out.cols();
    if (C != mean.size()) throw shape_error("invert_scale: channel count mismatch");
    for (std::size_t t = 0; t < out.rows(); ++t)
        for (std::size_t c = 0; c < C; ++c) out.at2(t, c) = s.at2(t, c) * std[c];
    return out;
}

} // namespace lsg
