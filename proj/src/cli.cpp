#include "lsg/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "lsg/checkpoint.hpp"
#include "lsg/data.hpp"
#include "lsg/errors.hpp"
#include "lsg/metrics.hpp"
#include "lsg/model.hpp"
#include "lsg/training.hpp"

namespace lsg {

namespace {

using nlohmann::json;

int log_level() {
    const char* v = std::getenv("LSG_LOG");
    if (!v) return 1;
    const std::string s(v);
    if (s == "quiet" || s == "0") return 0;
    if (s == "debug" || s == "2") return 2;
    return 1;
}

void info(const std::string& msg) {
    if (log_level() >= 1) std::cerr << msg << '\n';
}

void debug(const std::string& msg) {
    if (log_level() >= 2) std::cerr << msg << '\n';
}

struct DataSpec {
    std::string csv;
    bool skip_first_column = false;
    SyntheticSpec synth;  // used when csv is empty
};

struct SplitSpec {
    double train = 0.7;
    double val = 0.1;
    double test = 0.2;
};

struct RunConfig {
    DataSpec data;
    SplitSpec splits;
    bool standardize = true;
    ModelConfig model;
    TrainConfig train;
    EvalConfig eval;
    std::string out = "run";
    std::string checkpoint;
    std::size_t origin = 0;
    bool origin_set = false;
};

// which model-shape flags the user gave explicitly (checkpoint compatibility)
struct Provided {
    bool L = false, H = false, P = false, D = false;
};

void expect_keys(const json& j, std::initializer_list<const char*> allowed,
                 const std::string& ctx) {
    for (const auto& item : j.items()) {
        bool ok = false;
        for (const char* a : allowed) ok |= (item.key() == a);
        if (!ok)
            throw config_error("unknown config key '" + ctx + "." + item.key() + "'");
    }
}

SyntheticSpec::Kind parse_kind(const std::string& s) {
    if (s == "regime" || s == "regime_switching") return SyntheticSpec::Kind::regime_switching;
    if (s == "periodic") return SyntheticSpec::Kind::periodic;
    throw config_error("unknown synthetic kind '" + s + "' (regime|periodic)");
}

LossKind parse_loss(const std::string& s) {
    if (s == "nll") return LossKind::nll;
    if (s == "mse") return LossKind::mse;
    throw config_error("unknown loss '" + s + "' (nll|mse)");
}

RunConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open config file '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw config_error("malformed config '" + path + "': " + e.what());
    }

    RunConfig rc;
    try {
        expect_keys(j, {"data", "splits", "standardize", "model", "train", "eval", "out",
                        "checkpoint", "origin"},
                    "");
        if (j.contains("data")) {
            const json& d = j["data"];
            expect_keys(d, {"csv", "skip_first_column", "synthetic"}, "data");
            if (d.contains("csv") && d.contains("synthetic"))
                throw config_error("config data: give either 'csv' or 'synthetic', not both");
            rc.data.csv = d.value("csv", "");
            rc.data.skip_first_column = d.value("skip_first_column", false);
            if (d.contains("synthetic")) {
                const json& s = d["synthetic"];
                expect_keys(s, {"kind", "length", "dt", "seed", "regime_len"},
                            "data.synthetic");
                rc.data.synth.kind = parse_kind(s.value("kind", "regime"));
                rc.data.synth.length = s.value("length", rc.data.synth.length);
                rc.data.synth.dt = s.value("dt", rc.data.synth.dt);
                rc.data.synth.seed = s.value("seed", rc.data.synth.seed);
                rc.data.synth.regime_len = s.value("regime_len", rc.data.synth.regime_len);
            }
        }
        if (j.contains("splits")) {
            const json& s = j["splits"];
            expect_keys(s, {"train", "val", "test"}, "splits");
            rc.splits.train = s.value("train", rc.splits.train);
            rc.splits.val = s.value("val", rc.splits.val);
            rc.splits.test = s.value("test", rc.splits.test);
        }
        rc.standardize = j.value("standardize", true);
        if (j.contains("model")) {
            const json& m = j["model"];
            expect_keys(m, {"L", "H", "C", "P", "D", "enc_layers", "hidden_width",
                            "channel_embed", "xi", "revin_eps"},
                        "model");
            rc.model.L = m.value("L", rc.model.L);
            rc.model.H = m.value("H", rc.model.H);
            rc.model.C = m.value("C", rc.model.C);
            rc.model.P = m.value("P", rc.model.P);
            rc.model.D = m.value("D", rc.model.D);
            rc.model.enc_layers = m.value("enc_layers", rc.model.enc_layers);
            rc.model.hidden_width = m.value("hidden_width", rc.model.hidden_width);
            rc.model.channel_embed = m.value("channel_embed", rc.model.channel_embed);
            rc.model.xi = m.value("xi", rc.model.xi);
            rc.model.revin_eps = m.value("revin_eps", rc.model.revin_eps);
        }
        if (j.contains("train")) {
            const json& t = j["train"];
            expect_keys(t, {"lr", "batch_size", "max_epochs", "patience", "beta", "seed",
                            "grad_clip", "loss", "adam_beta1", "adam_beta2", "adam_eps"},
                        "train");
            rc.train.lr = t.value("lr", rc.train.lr);
            rc.train.batch_size = t.value("batch_size", rc.train.batch_size);
            rc.train.max_epochs = t.value("max_epochs", rc.train.max_epochs);
            rc.train.patience = t.value("patience", rc.train.patience);
            rc.train.beta = t.value("beta", rc.train.beta);
            rc.train.seed = t.value("seed", rc.train.seed);
            rc.train.grad_clip = t.value("grad_clip", rc.train.grad_clip);
            rc.train.loss = parse_loss(t.value("loss", "nll"));
            rc.train.adam.beta1 = t.value("adam_beta1", rc.train.adam.beta1);
            rc.train.adam.beta2 = t.value("adam_beta2", rc.train.adam.beta2);
            rc.train.adam.eps = t.value("adam_eps", rc.train.adam.eps);
        }
        if (j.contains("eval")) {
            const json& e = j["eval"];
            expect_keys(e, {"samples", "levels", "stride", "seed"}, "eval");
            rc.eval.samples = e.value("samples", rc.eval.samples);
            rc.eval.stride = e.value("stride", rc.eval.stride);
            rc.eval.seed = e.value("seed", rc.eval.seed);
            if (e.contains("levels"))
                rc.eval.levels = e["levels"].get<std::vector<double>>();
        }
        rc.out = j.value("out", rc.out);
        rc.checkpoint = j.value("checkpoint", rc.checkpoint);
        if (j.contains("origin")) {
            rc.origin = j["origin"].get<std::size_t>();
            rc.origin_set = true;
        }
    } catch (const json::exception& e) {
        throw config_error("invalid config '" + path + "': " + e.what());
    }
    return rc;
}

json resolved_json(const RunConfig& rc) {
    json j;
    json d;
    if (!rc.data.csv.empty()) {
        d["csv"] = rc.data.csv;
        if (rc.data.skip_first_column) d["skip_first_column"] = true;
    } else {
        json s;
        s["kind"] = rc.data.synth.kind == SyntheticSpec::Kind::regime_switching
                        ? "regime"
                        : "periodic";
        s["length"] = rc.data.synth.length;
        s["dt"] = rc.data.synth.dt;
        s["seed"] = rc.data.synth.seed;
        s["regime_len"] = rc.data.synth.regime_len;
        d["synthetic"] = s;
    }
    j["data"] = d;
    j["splits"] = {{"train", rc.splits.train}, {"val", rc.splits.val},
                   {"test", rc.splits.test}};
    j["standardize"] = rc.standardize;
    j["model"] = {{"L", rc.model.L},
                  {"H", rc.model.H},
                  {"C", rc.model.C},
                  {"P", rc.model.P},
                  {"D", rc.model.D},
                  {"enc_layers", rc.model.enc_layers},
                  {"hidden_width", rc.model.hidden_width},
                  {"channel_embed", rc.model.channel_embed},
                  {"xi", rc.model.xi},
                  {"revin_eps", rc.model.revin_eps}};
    j["train"] = {{"lr", rc.train.lr},
                  {"batch_size", rc.train.batch_size},
                  {"max_epochs", rc.train.max_epochs},
                  {"patience", rc.train.patience},
                  {"beta", rc.train.beta},
                  {"seed", rc.train.seed},
                  {"grad_clip", rc.train.grad_clip},
                  {"loss", rc.train.loss == LossKind::nll ? "nll" : "mse"},
                  {"adam_beta1", rc.train.adam.beta1},
                  {"adam_beta2", rc.train.adam.beta2},
                  {"adam_eps", rc.train.adam.eps}};
    j["eval"] = {{"samples", rc.eval.samples},
                 {"levels", rc.eval.levels},
                 {"stride", rc.eval.stride},
                 {"seed", rc.eval.seed}};
    j["out"] = rc.out;
    if (!rc.checkpoint.empty()) j["checkpoint"] = rc.checkpoint;
    if (rc.origin_set) j["origin"] = rc.origin;
    return j;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw data_error("cannot open '" + path + "' for writing");
    out << text;
    out.flush();
    if (!out) throw data_error("write failed for '" + path + "'");
}

std::string out_path(const RunConfig& rc, const std::string& name) {
    return (std::filesystem::path(rc.out) / name).string();
}

void prepare_out(const RunConfig& rc) {
    std::error_code ec;
    std::filesystem::create_directories(rc.out, ec);
    if (ec) throw data_error("cannot create output directory '" + rc.out + "'");
    write_text(out_path(rc, "config.json"), resolved_json(rc).dump(2) + "\n");
}

Dataset load_data(const RunConfig& rc) {
    if (!rc.data.csv.empty()) {
        CsvOptions opt;
        opt.skip_first_column = rc.data.skip_first_column;
        return load_csv(rc.data.csv, opt);
    }
    return gen_synthetic(rc.data.synth).first;
}

struct SplitData {
    Dataset train, val, test;
    Standardizer scaler;
};

SplitData split_and_scale(const RunConfig& rc, const Dataset& ds) {
    auto parts = chrono_split(ds, rc.splits.train, rc.splits.val, rc.splits.test);
    SplitData sd;
    sd.scaler = rc.standardize ? Standardizer::fit(parts[0]) : Standardizer::identity(ds.C());
    sd.train = sd.scaler.apply(parts[0]);
    sd.val = sd.scaler.apply(parts[1]);
    sd.test = sd.scaler.apply(parts[2]);
    return sd;
}

void require_windows(const Dataset& ds, const ModelConfig& mc, const char* which) {
    if (ds.T() < mc.L + mc.H)
        throw config_error(std::string(which) + " split has " + std::to_string(ds.T()) +
                           " rows; need at least L+H = " + std::to_string(mc.L + mc.H));
}

Checkpoint need_checkpoint(const RunConfig& rc) {
    if (rc.checkpoint.empty())
        throw config_error("this command needs --checkpoint (or 'checkpoint' in the config)");
    return load_checkpoint(rc.checkpoint);
}

void check_compat(const Checkpoint& ck, const Dataset& ds, const RunConfig& rc,
                  const Provided& given) {
    const ModelConfig& cc = ck.params.config;
    if (ds.C() != cc.C)
        throw config_error("compatibility error: checkpoint expects C=" +
                           std::to_string(cc.C) + " channels but the data has C=" +
                           std::to_string(ds.C()));
    auto clash = [](const char* name, std::size_t ck_v, std::size_t given_v) {
        throw config_error(std::string("compatibility error: checkpoint has ") + name +
                           "=" + std::to_string(ck_v) + " but the flag gave " +
                           std::to_string(given_v));
    };
    if (given.L && rc.model.L != cc.L) clash("L", cc.L, rc.model.L);
    if (given.H && rc.model.H != cc.H) clash("H", cc.H, rc.model.H);
    if (given.P && rc.model.P != cc.P) clash("P", cc.P, rc.model.P);
    if (given.D && rc.model.D != cc.D) clash("D", cc.D, rc.model.D);
}

// ---- commands -------------------------------------------------------------

int cmd_synth(RunConfig& rc) {
    if (!rc.data.csv.empty())
        throw config_error("synth generates data; drop the csv data source");
    prepare_out(rc);
    auto [ds, sigma] = gen_synthetic(rc.data.synth);
    save_csv(ds, out_path(rc, "series.csv"));
    Dataset strace;
    strace.values = Tensor({sigma.size(), 1});
    for (std::size_t i = 0; i < sigma.size(); ++i) strace.values.at2(i, 0) = sigma[i];
    strace.channel_names = {"sigma"};
    save_csv(strace, out_path(rc, "sigma.csv"));
    info("synth: wrote " + std::to_string(ds.T()) + " rows to " + out_path(rc, "series.csv"));
    return 0;
}

int cmd_train(RunConfig& rc) {
    Dataset ds = load_data(rc);
    rc.model.C = ds.C();
    rc.model.validate();
    rc.train.validate();
    SplitData sd = split_and_scale(rc, ds);
    require_windows(sd.train, rc.model, "train");
    require_windows(sd.val, rc.model, "val");
    prepare_out(rc);

    std::ofstream log(out_path(rc, "train.log"), std::ios::binary);
    if (!log) throw data_error("cannot open training log for writing");
    auto [params, report] =
        train(rc.model, rc.train, sd.train, sd.val, [&](const EpochRecord& rec) {
            const std::string line = epoch_log_line(rec);
            log << line << '\n';
            log.flush();
            info(line);
        });

    CheckpointMeta meta;
    meta.loss = rc.train.loss;
    meta.sigma_const = report.sigma_const;
    save_checkpoint(params, meta, out_path(rc, "checkpoint.json"));

    json r;
    r["best_epoch"] = report.best_epoch;
    r["stopped_early"] = report.stopped_early;
    r["wall_time_s"] = report.wall_time_s;
    r["sigma_const"] = report.sigma_const;
    r["epochs"] = json::array();
    for (const EpochRecord& e : report.epochs)
        r["epochs"].push_back({{"epoch", e.epoch},
                               {"rec", e.train.rec_nll},
                               {"pred", e.train.pred_nll},
                               {"kl", e.train.kl},
                               {"total", e.train.total},
                               {"val_total", e.val.total}});
    write_text(out_path(rc, "report.json"), r.dump(2) + "\n");
    info("train: best epoch " + std::to_string(report.best_epoch) + ", checkpoint at " +
         out_path(rc, "checkpoint.json"));
    return 0;
}

int cmd_eval(RunConfig& rc, const Provided& given) {
    Checkpoint ck = need_checkpoint(rc);
    Dataset ds = load_data(rc);
    check_compat(ck, ds, rc, given);
    rc.model = ck.params.config;
    SplitData sd = split_and_scale(rc, ds);
    require_windows(sd.test, ck.params.config, "test");
    prepare_out(rc);

    EvalConfig ec = rc.eval;
    if (ck.meta.loss == LossKind::mse) ec.sigma_const = ck.meta.sigma_const;
    EvalResult r = evaluate(ck.params, sd.test, ec);

    json out;
    out["crps"] = r.crps;
    out["nmae"] = r.nmae;
    out["qice"] = r.qice;
    out["windows"] = r.windows;
    out["samples"] = r.sample_count;
    out["levels"] = r.quantile_levels;
    out["per_step_crps"] = r.per_step_crps;
    out["per_step_nmae"] = r.per_step_nmae;
    out["sigma_trace"] = r.sigma_trace;
    out["trace_index"] = r.trace_index;
    if (ck.meta.loss == LossKind::mse) out["sigma_const"] = ck.meta.sigma_const;

    // synthetic ground truth available: report how well the predicted scale
    // trace tracks the generator's sigma
    if (rc.data.csv.empty() && ds.C() == 1 && ec.sigma_const == 0.0) {
        Tensor sigma_true = gen_synthetic(rc.data.synth).second;
        Tensor hat({r.sigma_trace.size()});
        Tensor truth({r.sigma_trace.size()});
        for (std::size_t i = 0; i < r.sigma_trace.size(); ++i) {
            hat[i] = r.sigma_trace[i];
            truth[i] = sigma_true[r.trace_index[i]];
        }
        try {
            out["volatility_rho"] = volatility_recovery(hat, truth);
        } catch (const metric_error& e) {
            info(std::string("volatility_rho unavailable: ") + e.what());
        }
    }
    write_text(out_path(rc, "eval.json"), out.dump(2) + "\n");
    info("eval: crps=" + std::to_string(r.crps) + " nmae=" + std::to_string(r.nmae) +
         " qice=" + std::to_string(r.qice));
    return 0;
}

int cmd_forecast(RunConfig& rc, const Provided& given) {
    Checkpoint ck = need_checkpoint(rc);
    Dataset raw = load_data(rc);
    check_compat(ck, raw, rc, given);
    const ModelConfig& mc = ck.params.config;
    auto parts = chrono_split(raw, rc.splits.train, rc.splits.val, rc.splits.test);
    Standardizer sz =
        rc.standardize ? Standardizer::fit(parts[0]) : Standardizer::identity(raw.C());
    Dataset ds = sz.apply(raw);

    const std::size_t T = ds.T();
    if (!rc.origin_set) {
        rc.origin = T;
        rc.origin_set = true;
    }
    if (rc.origin < mc.L || rc.origin > T)
        throw config_error("origin " + std::to_string(rc.origin) +
                           " out of range: need L=" + std::to_string(mc.L) +
                           " history and origin <= " + std::to_string(T));
    prepare_out(rc);

    SeriesWindow w;
    w.lookback = Tensor({mc.L, mc.C});
    w.horizon = Tensor::zeros({mc.H, mc.C});
    for (std::size_t t = 0; t < mc.L; ++t)
        for (std::size_t c = 0; c < mc.C; ++c)
            w.lookback.at2(t, c) = ds.values.at2(rc.origin - mc.L + t, c);

    ForwardResult f = forward(ck.params, w, ForwardMode::mean, nullptr);
    Rng rng = Rng::substream(rc.eval.seed, rc.origin);
    const std::size_t S = rc.eval.samples;
    const bool homosced = ck.meta.loss == LossKind::mse;
    Tensor paths = sample_paths(ck.params, w, S, rng, /*with_obs_noise=*/!homosced);
    if (homosced)
        for (std::size_t i = 0; i < paths.size(); ++i)
            paths[i] += ck.meta.sigma_const * rng.normal();

    const std::vector<double> qs = {0.05, 0.25, 0.5, 0.75, 0.95};
    std::string csv = "t,channel,truth,mu,sigma,q05,q25,q50,q75,q95\n";
    char buf[64];
    std::vector<double> cell(S);
    for (std::size_t t = 0; t < mc.H; ++t) {
        for (std::size_t c = 0; c < mc.C; ++c) {
            const std::size_t abs_t = rc.origin + t;
            csv += std::to_string(abs_t) + "," + std::to_string(c) + ",";
            if (abs_t < T) {
                std::snprintf(buf, sizeof buf, "%.17g", raw.values.at2(abs_t, c));
                csv += buf;
            }
            const double scale = sz.std[c];
            const double shift = sz.mean[c];
            const double mu = f.pred.mu.at2(t, c) * scale + shift;
            const double sg =
                (homosced ? ck.meta.sigma_const : f.pred.sigma.at2(t, c)) * scale;
            std::snprintf(buf, sizeof buf, ",%.17g,%.17g", mu, sg);
            csv += buf;
            for (std::size_t s = 0; s < S; ++s)
                cell[s] = paths[(s * mc.H + t) * mc.C + c];
            std::sort(cell.begin(), cell.end());
            for (double q : qs) {
                std::snprintf(buf, sizeof buf, ",%.17g",
                              sample_quantile_sorted(cell, q) * scale + shift);
                csv += buf;
            }
            csv += "\n";
        }
    }
    write_text(out_path(rc, "forecast.csv"), csv);
    info("forecast: wrote " + std::to_string(mc.H) + " steps from origin " +
         std::to_string(rc.origin));
    return 0;
}

int cmd_ablate(RunConfig& rc) {
    Dataset ds = load_data(rc);
    rc.model.C = ds.C();
    rc.model.validate();
    rc.train.validate();
    SplitData sd = split_and_scale(rc, ds);
    require_windows(sd.train, rc.model, "train");
    require_windows(sd.val, rc.model, "val");
    require_windows(sd.test, rc.model, "test");
    prepare_out(rc);

    json rows = json::array();
    double crps_nll = 0.0, crps_mse = 0.0;
    for (LossKind kind : {LossKind::nll, LossKind::mse}) {
        TrainConfig tc = rc.train;
        tc.loss = kind;  // identical seed and data for both variants
        const char* name = kind == LossKind::nll ? "lsg-nll" : "vanilla-mse";
        debug(std::string("ablate: training ") + name);
        auto [params, report] = train(rc.model, tc, sd.train, sd.val);
        CheckpointMeta meta;
        meta.loss = kind;
        meta.sigma_const = report.sigma_const;
        save_checkpoint(params, meta,
                        out_path(rc, std::string(name) + ".checkpoint.json"));
        EvalConfig ec = rc.eval;
        if (kind == LossKind::mse) ec.sigma_const = report.sigma_const;
        EvalResult r = evaluate(params, sd.test, ec);
        rows.push_back({{"name", name},
                        {"crps", r.crps},
                        {"nmae", r.nmae},
                        {"qice", r.qice},
                        {"best_epoch", report.best_epoch},
                        {"sigma_const", report.sigma_const}});
        (kind == LossKind::nll ? crps_nll : crps_mse) = r.crps;
        info(std::string("ablate: ") + name + " crps=" + std::to_string(r.crps));
    }
    json out;
    out["seed"] = rc.train.seed;
    out["rows"] = rows;
    out["nll_beats_mse"] = crps_nll < crps_mse;
    write_text(out_path(rc, "ablate.json"), out.dump(2) + "\n");
    return 0;
}

}  // namespace

int run_cli(int argc, char** argv) {
    CLI::App app{"lsgvae: probabilistic time-series forecasting with a location-scale Gaussian VAE"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path, data_path, out_dir, kind_str, loss_str, checkpoint_path;
    std::uint64_t seed = 0;
    std::size_t lookback = 0, horizon = 0, patch = 0, latent = 0, batch = 0,
                max_epochs = 0, samples = 0, stride = 0, length = 0, regime_len = 0,
                origin = 0;
    long long patience = -1;
    double lr = 0.0, beta = -1.0, dt = 0.0;

    auto* o_config = app.add_option("--config", config_path, "JSON config file");
    auto* o_data = app.add_option("--data", data_path, "CSV data file");
    auto* o_out = app.add_option("--out", out_dir, "output directory");
    auto* o_seed = app.add_option("--seed", seed, "master seed (data, training, eval)");
    auto* o_lookback = app.add_option("--lookback", lookback, "look-back length L");
    auto* o_horizon = app.add_option("--horizon", horizon, "forecast horizon H");
    auto* o_patch = app.add_option("--patch", patch, "patch length P");
    auto* o_latent = app.add_option("--latent-dim", latent, "latent dimension D");
    auto* o_lr = app.add_option("--lr", lr, "learning rate");
    auto* o_batch = app.add_option("--batch", batch, "batch size");
    auto* o_epochs =
        app.add_option("--max-epochs,--epochs", max_epochs, "maximum training epochs");
    auto* o_patience = app.add_option("--patience", patience, "early-stopping patience");
    auto* o_beta = app.add_option("--beta", beta, "KL weight");
    auto* o_samples = app.add_option("--samples", samples, "Monte-Carlo sample count");
    auto* o_stride = app.add_option("--stride", stride, "evaluation window stride");
    auto* o_kind = app.add_option("--kind", kind_str, "synthetic kind (regime|periodic)");
    auto* o_length = app.add_option("--length", length, "synthetic series length");
    auto* o_dt = app.add_option("--dt", dt, "synthetic time step");
    auto* o_regime = app.add_option("--regime-len", regime_len, "regime block length");
    auto* o_checkpoint = app.add_option("--checkpoint", checkpoint_path, "checkpoint file");
    auto* o_origin = app.add_option("--origin", origin, "forecast origin index");
    auto* o_loss = app.add_option("--loss", loss_str, "training loss (nll|mse)");

    auto* sub_synth = app.add_subcommand("synth", "generate a synthetic series");
    auto* sub_train = app.add_subcommand("train", "train a model");
    auto* sub_eval = app.add_subcommand("eval", "evaluate a checkpoint on the test split");
    auto* sub_forecast = app.add_subcommand("forecast", "emit per-step forecast quantiles");
    auto* sub_ablate = app.add_subcommand("ablate", "compare the NLL and MSE variants");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        RunConfig rc;
        if (o_config->count()) rc = parse_config_file(config_path);
        if (o_data->count()) {
            rc.data.csv = data_path;
        }
        if (o_out->count()) rc.out = out_dir;
        if (o_seed->count()) {
            rc.train.seed = seed;
            rc.eval.seed = seed;
            rc.data.synth.seed = seed;
        }
        Provided given;
        if (o_lookback->count()) {
            rc.model.L = lookback;
            given.L = true;
        }
        if (o_horizon->count()) {
            rc.model.H = horizon;
            given.H = true;
        }
        if (o_patch->count()) {
            rc.model.P = patch;
            given.P = true;
        }
        if (o_latent->count()) {
            rc.model.D = latent;
            given.D = true;
        }
        if (o_lr->count()) rc.train.lr = lr;
        if (o_batch->count()) rc.train.batch_size = batch;
        if (o_epochs->count()) rc.train.max_epochs = max_epochs;
        if (o_patience->count()) {
            if (patience < 0) throw config_error("patience must be non-negative");
            rc.train.patience = static_cast<std::size_t>(patience);
        }
        if (o_beta->count()) rc.train.beta = beta;
        if (o_samples->count()) rc.eval.samples = samples;
        if (o_stride->count()) rc.eval.stride = stride;
        if (o_kind->count()) rc.data.synth.kind = parse_kind(kind_str);
        if (o_length->count()) rc.data.synth.length = length;
        if (o_dt->count()) rc.data.synth.dt = dt;
        if (o_regime->count()) rc.data.synth.regime_len = regime_len;
        if (o_checkpoint->count()) rc.checkpoint = checkpoint_path;
        if (o_origin->count()) {
            rc.origin = origin;
            rc.origin_set = true;
        }
        if (o_loss->count()) rc.train.loss = parse_loss(loss_str);

        if (sub_synth->parsed()) return cmd_synth(rc);
        if (sub_train->parsed()) return cmd_train(rc);
        if (sub_eval->parsed()) return cmd_eval(rc, given);
        if (sub_forecast->parsed()) return cmd_forecast(rc, given);
        if (sub_ablate->parsed()) return cmd_ablate(rc);
        throw config_error("no subcommand selected");
    } catch (const config_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const data_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const checkpoint_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const metric_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << '\n';
        return 1;
    }
}

}  // namespace lsg
