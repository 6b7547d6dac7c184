#include "lsg/checkpoint.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <vector>

#include "json.hpp"
#include "lsg/errors.hpp"

namespace lsg {

namespace {

using nlohmann::json;

constexpr const char* kFormat = "lsg-checkpoint";
constexpr int kVersion = 1;

// %.17g round-trips every finite double exactly through strtod
std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

double parse17(const json& j, const std::string& key) {
    if (!j.is_string())
        throw checkpoint_error("checkpoint field '" + key + "' must be a decimal string");
    const std::string& s = j.get_ref<const std::string&>();
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size())
        throw checkpoint_error("checkpoint field '" + key + "': unparseable value '" + s +
                               "'");
    if (!std::isfinite(v))
        throw checkpoint_error("checkpoint field '" + key + "': non-finite value '" + s +
                               "'");
    return v;
}

json build_document(const ModelParams& params, const CheckpointMeta& meta) {
    const ModelConfig& cfg = params.config;
    json j;
    j["format"] = kFormat;
    j["version"] = kVersion;
    json m;
    m["L"] = cfg.L;
    m["H"] = cfg.H;
    m["C"] = cfg.C;
    m["P"] = cfg.P;
    m["D"] = cfg.D;
    m["enc_layers"] = cfg.enc_layers;
    m["hidden_width"] = cfg.hidden_width;
    m["channel_embed"] = cfg.channel_embed;
    m["xi"] = fmt17(cfg.xi);
    m["revin_eps"] = fmt17(cfg.revin_eps);
    j["model"] = m;
    j["loss"] = meta.loss == LossKind::nll ? "nll" : "mse";
    j["sigma_const"] = fmt17(meta.sigma_const);

    json ps = json::object();
    for (const auto& [name, t] : params.tensors) {
        json e;
        e["shape"] = t.shape();
        json vals = json::array();
        for (std::size_t i = 0; i < t.size(); ++i) vals.push_back(fmt17(t[i]));
        e["values"] = std::move(vals);
        ps[name] = std::move(e);
    }
    j["params"] = std::move(ps);
    return j;
}

}  // namespace

void save_checkpoint(const ModelParams& params, const CheckpointMeta& meta,
                     const std::string& path) {
    params.config.validate();
    const json j = build_document(params, meta);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw checkpoint_error("cannot open '" + path + "' for writing");
    out << j.dump() << '\n';
    out.flush();
    if (!out) throw checkpoint_error("write failed for '" + path + "'");
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw checkpoint_error("cannot open checkpoint '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw checkpoint_error("malformed checkpoint '" + path + "': " + e.what());
    }

    Checkpoint ck;
    try {
        if (!j.is_object() || j.value("format", std::string()) != kFormat)
            throw checkpoint_error("'" + path + "' is not a checkpoint file");
        if (j.value("version", -1) != kVersion)
            throw checkpoint_error("unsupported checkpoint version in '" + path + "'");

        const json& m = j.at("model");
        ModelConfig cfg;
        cfg.L = m.at("L").get<std::size_t>();
        cfg.H = m.at("H").get<std::size_t>();
        cfg.C = m.at("C").get<std::size_t>();
        cfg.P = m.at("P").get<std::size_t>();
        cfg.D = m.at("D").get<std::size_t>();
        cfg.enc_layers = m.at("enc_layers").get<std::size_t>();
        cfg.hidden_width = m.at("hidden_width").get<std::size_t>();
        cfg.channel_embed = m.at("channel_embed").get<std::size_t>();
        cfg.xi = parse17(m.at("xi"), "model.xi");
        cfg.revin_eps = parse17(m.at("revin_eps"), "model.revin_eps");
        try {
            cfg.validate();
        } catch (const config_error& e) {
            throw checkpoint_error(std::string("checkpoint model config invalid: ") +
                                   e.what());
        }

        const std::string loss = j.at("loss").get<std::string>();
        if (loss == "nll")
            ck.meta.loss = LossKind::nll;
        else if (loss == "mse")
            ck.meta.loss = LossKind::mse;
        else
            throw checkpoint_error("checkpoint field 'loss': unknown kind '" + loss + "'");
        ck.meta.sigma_const = parse17(j.at("sigma_const"), "sigma_const");
        if (ck.meta.sigma_const < 0.0)
            throw checkpoint_error("checkpoint field 'sigma_const' must be non-negative");

        const json& ps = j.at("params");
        if (!ps.is_object()) throw checkpoint_error("checkpoint field 'params' must be an object");
        const auto shapes = param_shapes(cfg);
        for (const auto& [name, e] : ps.items())
            if (shapes.find(name) == shapes.end())
                throw checkpoint_error("unexpected parameter '" + name + "' in checkpoint");

        ck.params.config = cfg;
        for (const auto& [name, shape] : shapes) {
            if (!ps.contains(name))
                throw checkpoint_error("checkpoint is missing parameter '" + name + "'");
            const json& e = ps.at(name);
            const auto got = e.at("shape").get<std::vector<std::size_t>>();
            if (got != shape)
                throw checkpoint_error("parameter '" + name + "' has the wrong shape");
            Tensor t(shape);
            const json& vals = e.at("values");
            if (!vals.is_array() || vals.size() != t.size())
                throw checkpoint_error("parameter '" + name + "' has " +
                                       std::to_string(vals.is_array() ? vals.size() : 0) +
                                       " values, expected " + std::to_string(t.size()));
            for (std::size_t i = 0; i < t.size(); ++i)
                t[i] = parse17(vals[i], "params." + name + "[" + std::to_string(i) + "]");
            ck.params.tensors.emplace(name, std::move(t));
        }
    } catch (const json::exception& e) {
        throw checkpoint_error("invalid checkpoint '" + path + "': " + e.what());
    }
    return ck;
}

}  // namespace lsg
