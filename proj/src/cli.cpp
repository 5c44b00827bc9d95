#include "ram/cli.hpp"

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "ram/audit.hpp"
#include "ram/checkpoint.hpp"
#include "ram/degrade.hpp"
#include "ram/errors.hpp"
#include "ram/features.hpp"
#include "ram/gradcheck.hpp"
#include "ram/image.hpp"
#include "ram/metrics.hpp"
#include "ram/nn.hpp"
#include "ram/tape.hpp"

namespace ram {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!known.count(it.key())) throw ConfigError("unknown key '" + it.key() + "' in " + where);
}

std::string get_string(const json& j, const char* key, const std::string& where, const std::string& fallback) {
    if (!j.contains(key)) return fallback;
    if (!j.at(key).is_string()) throw ConfigError(where + "." + key + " must be a string");
    return j.at(key).get<std::string>();
}

}  // namespace

void RunConfig::validate() const {
    model.validate();
    train.validate();
    if (output.dir.empty()) throw ConfigError("output.dir must not be empty");
}

json to_json(const RunConfig& c) {
    json j;
    j["model"] = to_json(c.model);
    j["train"] = to_json(c.train);
    j["data"] = {{"train_manifest", c.data.train_manifest}, {"eval_manifest", c.data.eval_manifest}};
    j["output"] = {{"dir", c.output.dir}};
    return j;
}

RunConfig run_config_from_json(const json& j) {
    reject_unknown(j, {"model", "train", "data", "output"}, "config");
    RunConfig c;
    if (j.contains("model")) {
        c.model = ram_config_from_json(j.at("model"));
        c.explicit_model = true;
    }
    if (j.contains("train")) c.train = train_config_from_json(j.at("train"));
    if (j.contains("data")) {
        const json& d = j.at("data");
        reject_unknown(d, {"train_manifest", "eval_manifest"}, "data");
        c.data.train_manifest = get_string(d, "train_manifest", "data", "");
        c.data.eval_manifest = get_string(d, "eval_manifest", "data", "");
    }
    if (j.contains("output")) {
        const json& o = j.at("output");
        reject_unknown(o, {"dir"}, "output");
        c.output.dir = get_string(o, "dir", "output", c.output.dir);
    }
    c.validate();
    return c;
}

RunConfig load_run_config(const fs::path& path) {
    std::ifstream f(path);
    if (!f) throw DataError("cannot open config '" + path.string() + "'");
    json j;
    try {
        j = json::parse(f);
    } catch (const json::parse_error& e) {
        throw ConfigError("config '" + path.string() + "' is not valid JSON: " + e.what());
    }
    return run_config_from_json(j);
}

PadMode pad_mode_from_string(const std::string& s) {
    if (s == "auto") return PadMode::automatic;
    if (s == "strict") return PadMode::strict;
    throw ConfigError("--pad must be auto or strict, got '" + s + "'");
}

template <typename T>
Tensor<T> restore(const RamModel<T>& m, const Tensor<T>& img, PadMode pad) {
    NoGradScope<T> no_grad;
    const Shape& s = img.shape();
    const std::size_t ph = (8 - s.h % 8) % 8, pw = (8 - s.w % 8) % 8;
    if (ph == 0 && pw == 0) return forward(m, img);
    if (pad == PadMode::strict)
        throw DimensionError("image is " + std::to_string(s.h) + "x" + std::to_string(s.w) +
                             "; height and width must be multiples of 8 (use --pad auto)");
    if (ph >= s.h || pw >= s.w)
        throw DimensionError("image " + std::to_string(s.h) + "x" + std::to_string(s.w) + " is too small to pad");
    const Tensor<T> out = forward(m, reflect_pad(img, 0, ph, 0, pw));
    return crop(out, 0, 0, s.h, s.w);
}

template Tensor<float> restore<float>(const RamModel<float>&, const Tensor<float>&, PadMode);
template Tensor<double> restore<double>(const RamModel<double>&, const Tensor<double>&, PadMode);

namespace {

struct Io {
    std::ostream& out;
    std::ostream& err;
};

void echo_config(const Io& io, const json& effective, const std::optional<fs::path>& dir) {
    io.err << "effective config:\n" << effective.dump(2) << "\n";
    if (dir) {
        fs::create_directories(*dir);
        std::ofstream f(*dir / "effective_config.json");
        f << effective.dump(2) << "\n";
        if (!f) throw DataError("cannot write " + (*dir / "effective_config.json").string());
    }
}

RunConfig config_or_default(const std::string& path) {
    if (path.empty()) {
        RunConfig c;
        c.validate();
        return c;
    }
    return load_run_config(path);
}

// A checkpoint alone carries its own model config. When the run config also
// names a model, that architecture is built and the checkpoint must fit it.
RamModel<float> load_model(const RunConfig& cfg, const std::string& checkpoint, const Io& io) {
    if (checkpoint.empty()) {
        io.err << "warning: no --checkpoint given; using freshly initialized weights\n";
        return build<float>(cfg.model);
    }
    if (cfg.explicit_model) {
        RamModel<float> m = build<float>(cfg.model);
        load_weights_into(m, checkpoint);
        return m;
    }
    return load_checkpoint<float>(checkpoint).model;
}

std::vector<fs::path> expand_inputs(const std::vector<std::string>& inputs) {
    std::vector<fs::path> files;
    for (const auto& in : inputs) {
        if (fs::is_directory(in)) {
            std::vector<fs::path> found;
            for (const auto& e : fs::directory_iterator(in))
                if (e.is_regular_file() && e.path().extension() == ".png") found.push_back(e.path());
            std::sort(found.begin(), found.end());
            files.insert(files.end(), found.begin(), found.end());
        } else {
            files.emplace_back(in);
        }
    }
    return files;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    f << text;
    if (!f) throw DataError("cannot write '" + path.string() + "'");
}

// ---------------------------------------------------------------- train

struct TrainArgs {
    std::string config, manifest, output, resume;
    std::optional<std::size_t> steps;
    std::optional<std::uint64_t> seed;
};

int cmd_train(const TrainArgs& a, const Io& io) {
    RunConfig cfg = config_or_default(a.config);
    if (!a.manifest.empty()) cfg.data.train_manifest = a.manifest;
    if (!a.output.empty()) cfg.output.dir = a.output;
    if (a.steps) cfg.train.steps = *a.steps;
    if (a.seed) cfg.train.seed = *a.seed;
    cfg.validate();
    if (cfg.data.train_manifest.empty()) throw ConfigError("train: no manifest (data.train_manifest or --manifest)");

    TrainState<float> state;
    RamModel<float> model;
    if (!a.resume.empty()) {
        Checkpoint<float> ck = load_checkpoint<float>(a.resume);
        if (cfg.explicit_model && !(ck.model.cfg == cfg.model))
            throw ConfigError("train: --resume checkpoint was built with a different model config");
        if (!ck.has_optimizer) throw FormatError("train: checkpoint '" + a.resume + "' has no optimizer state");
        cfg.model = ck.model.cfg;
        model = std::move(ck.model);
        state = std::move(ck.state);
    } else {
        model = build<float>(cfg.model);
    }
    const fs::path dir = cfg.output.dir;
    echo_config(io, to_json(cfg), dir);

    const auto pairs = load_pairs(read_manifest(cfg.data.train_manifest), cfg.train.patch);
    io.err << "training on " << pairs.size() << " pairs, steps " << state.step << " -> " << cfg.train.steps << "\n";

    const fs::path log_path = dir / "loss.csv";
    std::ofstream log;
    if (state.step == 0) {
        log.open(log_path, std::ios::trunc);
        log << "step,loss\n";
    } else {
        log.open(log_path, std::ios::app);
    }
    if (!log) throw DataError("cannot write '" + log_path.string() + "'");

    TrainHooks hooks;
    const auto t0 = std::chrono::steady_clock::now();
    hooks.on_step = [&](std::size_t step, double loss) {
        char line[64];
        std::snprintf(line, sizeof line, "%zu,%.9e\n", step, loss);
        log << line;
        if (step % 50 == 0 || step == cfg.train.steps) {
            const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            io.err << "step " << step << " loss " << loss << " (" << std::fixed << std::setprecision(1) << secs
                   << " s)\n"
                   << std::defaultfloat;
        }
    };
    hooks.on_checkpoint = [&](std::size_t step) {
        char name[64];
        std::snprintf(name, sizeof name, "ckpt_%06zu.bin", step);
        log.flush();
        save_checkpoint(dir / name, model, &state);
    };
    train(model, state, pairs, cfg.train, hooks);
    log.close();
    const fs::path final_path = dir / "final.ckpt";
    save_checkpoint(final_path, model, &state);
    io.out << json{{"checkpoint", final_path.string()}, {"steps", state.step}, {"loss_log", log_path.string()}}.dump()
           << "\n";
    return 0;
}

// ---------------------------------------------------------------- infer

struct InferArgs {
    std::string config, checkpoint, output, pad = "auto";
    std::vector<std::string> inputs;
};

int cmd_infer(const InferArgs& a, const Io& io) {
    const RunConfig cfg = config_or_default(a.config);
    const PadMode pad = pad_mode_from_string(a.pad);
    const fs::path dir = a.output.empty() ? fs::path(cfg.output.dir) : fs::path(a.output);
    json effective = to_json(cfg);
    effective["infer"] = {{"checkpoint", a.checkpoint}, {"pad", a.pad}, {"inputs", a.inputs}};
    echo_config(io, effective, dir);
    const RamModel<float> model = load_model(cfg, a.checkpoint, io);

    json report = json::array();
    for (const auto& in : expand_inputs(a.inputs)) {
        const Tensor<float> img = load_image<float>(in);
        const auto t0 = std::chrono::steady_clock::now();
        const Tensor<float> restored = restore(model, img, pad);
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const fs::path dst = dir / in.filename();
        save_image(dst, restored);
        report.push_back({{"input", in.string()},
                          {"output", dst.string()},
                          {"height", img.shape().h},
                          {"width", img.shape().w},
                          {"seconds", secs}});
    }
    io.out << report.dump(2) << "\n";
    return 0;
}

// ---------------------------------------------------------------- eval

struct EvalArgs {
    std::string config, checkpoint, manifest, report, pad = "auto";
};

int cmd_eval(const EvalArgs& a, const Io& io) {
    RunConfig cfg = config_or_default(a.config);
    if (!a.manifest.empty()) cfg.data.eval_manifest = a.manifest;
    if (cfg.data.eval_manifest.empty()) throw ConfigError("eval: no manifest (data.eval_manifest or --manifest)");
    const PadMode pad = pad_mode_from_string(a.pad);
    json effective = to_json(cfg);
    effective["eval"] = {{"checkpoint", a.checkpoint}, {"pad", a.pad}, {"report", a.report}};
    echo_config(io, effective, std::nullopt);
    const RamModel<float> model = load_model(cfg, a.checkpoint, io);

    std::vector<ImageScore> scores;
    std::size_t missing = 0;
    for (const auto& e : read_manifest(cfg.data.eval_manifest)) {
        bool ok = true;
        for (const fs::path& p : {e.degraded, e.clean})
            if (!fs::is_regular_file(p)) {
                io.err << "missing: " << p.string() << "\n";
                ok = false;
            }
        if (!ok) {
            ++missing;
            continue;
        }
        const Tensor<float> degraded = load_image<float>(e.degraded);
        const Tensor<float> clean = load_image<float>(e.clean);
        if (!(degraded.shape() == clean.shape()))
            throw DataError("eval: '" + e.degraded.string() + "' and '" + e.clean.string() + "' differ in size");
        // Score the 8-bit result, exactly what infer would write to disk.
        const Tensor<float> restored = image_to_tensor<float>(tensor_to_image(restore(model, degraded, pad)));
        ImageScore s;
        s.id = e.degraded.filename().string();
        s.kind = to_string(e.kind);
        s.psnr = psnr(restored, clean);
        s.ssim = ssim(restored, clean);
        s.input_psnr = psnr(degraded, clean);
        s.input_ssim = ssim(degraded, clean);
        scores.push_back(s);
    }
    json report = scores.empty() ? json{{"aggregate", nullptr}, {"groups", json::object()}, {"per_image", json::array()}}
                                 : metric_report(scores);
    report["missing"] = missing;
    if (!a.report.empty()) {
        if (fs::path(a.report).has_parent_path()) fs::create_directories(fs::path(a.report).parent_path());
        write_text(a.report, report.dump(2) + "\n");
    }
    io.out << report.dump(2) << "\n";
    if (missing) {
        io.err << missing << " manifest entr" << (missing == 1 ? "y" : "ies") << " had missing files\n";
        return 2;
    }
    return 0;
}

// ---------------------------------------------------------------- degrade

struct DegradeArgs {
    std::size_t synthetic = 0;
    std::vector<std::size_t> size{128, 128};
    std::string clean, output, manifest, spec;
    std::vector<std::string> kinds;
    std::uint64_t seed = 0;
};

int cmd_degrade(const DegradeArgs& a, const Io& io) {
    if (a.output.empty()) throw ConfigError("degrade: --output is required");
    if (a.synthetic > 0) {
        if (a.size.size() != 2) throw ConfigError("degrade: --size takes H W");
        const json effective = {{"synthetic", a.synthetic}, {"size", a.size}, {"seed", a.seed}, {"output", a.output}};
        echo_config(io, effective, std::nullopt);
        write_synthetic_set(a.output, a.synthetic, a.size[0], a.size[1], a.seed);
        io.out << json{{"written", a.synthetic}, {"dir", a.output}}.dump() << "\n";
        return 0;
    }
    if (a.clean.empty()) throw ConfigError("degrade: give --synthetic N or --clean DIR");
    std::vector<DegradationSpec> specs;
    if (!a.spec.empty()) {
        std::ifstream f(a.spec);
        if (!f) throw DataError("cannot open spec file '" + a.spec + "'");
        json j;
        try {
            j = json::parse(f);
        } catch (const json::parse_error& e) {
            throw ConfigError("spec file '" + a.spec + "' is not valid JSON: " + e.what());
        }
        if (!j.is_array()) j = json::array({j});
        for (const auto& s : j) specs.push_back(degradation_spec_from_json(s));
    }
    for (const auto& k : a.kinds) {
        DegradationSpec s;
        s.kind = degradation_kind_from_string(k);
        s.seed = a.seed;
        specs.push_back(s);
    }
    if (specs.empty()) throw ConfigError("degrade: no degradations (--kinds or --spec)");
    for (auto& s : specs) s.validate();
    const fs::path manifest = a.manifest.empty() ? fs::path(a.output) / "manifest.json" : fs::path(a.manifest);
    json effective = {{"clean", a.clean}, {"output", a.output}, {"manifest", manifest.string()}};
    effective["specs"] = json::array();
    for (const auto& s : specs) effective["specs"].push_back(to_json(s));
    echo_config(io, effective, std::nullopt);
    const auto entries = make_pair_set(a.clean, specs, a.output, manifest);
    io.out << json{{"pairs", entries.size()}, {"manifest", manifest.string()}}.dump() << "\n";
    return 0;
}

// ---------------------------------------------------------------- count

struct CountArgs {
    std::string config;
    std::vector<std::size_t> hw{224, 224};
    bool as_json = false;
};

int cmd_count(const CountArgs& a, const Io& io) {
    const RunConfig cfg = config_or_default(a.config);
    if (a.hw.size() != 2) throw ConfigError("count: --hw takes H W");
    json effective = {{"model", to_json(cfg.model)}, {"hw", a.hw}};
    echo_config(io, effective, std::nullopt);
    const json audit = audit_json(cfg.model, a.hw[0], a.hw[1]);
    if (a.as_json) {
        io.out << audit.dump(2) << "\n";
        return 0;
    }
    char line[160];
    io.out << "module                     params            FLOPs\n";
    std::map<std::string, std::uint64_t> flops;
    for (const auto& m : audit["flops"]["modules"]) flops[m["module"].get<std::string>()] = m["flops"].get<std::uint64_t>();
    for (const auto& m : audit["params"]["modules"]) {
        const std::string name = m["module"].get<std::string>();
        std::snprintf(line, sizeof line, "%-20s %12llu %16llu\n", name.c_str(),
                      static_cast<unsigned long long>(m["params"].get<std::uint64_t>()),
                      static_cast<unsigned long long>(flops[name]));
        io.out << line;
    }
    std::snprintf(line, sizeof line, "%-20s %12llu %16llu\n", "total",
                  static_cast<unsigned long long>(audit["params"]["total"].get<std::uint64_t>()),
                  static_cast<unsigned long long>(audit["flops"]["total"].get<std::uint64_t>()));
    io.out << line;
    std::snprintf(line, sizeof line, "params %.3fM, FLOPs @%zux%zu %.2fG\n",
                  audit["params"]["total"].get<double>() / 1e6, a.hw[0], a.hw[1],
                  audit["flops"]["total"].get<double>() / 1e9);
    io.out << line;
    const json& r = audit["attention_ratio"];
    std::snprintf(line, sizeof line, "attention FLOP ratio vs full-channel variant (%s): %.6f (closed form %.6f)\n",
                  r["mode"].get<std::string>().c_str(), r["measured"].get<double>(), r["predicted"].get<double>());
    io.out << line;
    return 0;
}

// ---------------------------------------------------------------- gradcheck

struct GradcheckArgs {
    GradCheckOptions opt;
    bool as_json = false;
    bool list = false;
};

int cmd_gradcheck(const GradcheckArgs& a, const Io& io) {
    if (a.list) {
        for (const auto& n : gradcheck_case_names()) io.out << n << "\n";
        return 0;
    }
    const json effective = {{"size", a.opt.size},
                            {"seed", a.opt.seed},
                            {"corrupt", a.opt.corrupt_op},
                            {"filter", a.opt.filter},
                            {"max_coords", a.opt.max_coords},
                            {"tolerance", kGradTolerance}};
    echo_config(io, effective, std::nullopt);
    const auto t0 = std::chrono::steady_clock::now();
    const auto results = run_gradcheck(a.opt);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (results.empty()) throw ConfigError("gradcheck: filter '" + a.opt.filter + "' matches no case");
    std::size_t failed = 0;
    json cases = json::array();
    for (const auto& r : results) {
        failed += !r.pass;
        cases.push_back({{"name", r.name},
                         {"pass", r.pass},
                         {"max_rel_error", r.max_rel_error},
                         {"worst_tensor", r.worst_tensor},
                         {"tensors", r.tensors},
                         {"coords", r.coords}});
    }
    if (a.as_json) {
        io.out << json{{"cases", cases}, {"failed", failed}, {"seconds", secs}}.dump(2) << "\n";
    } else {
        char line[200];
        for (const auto& r : results) {
            std::snprintf(line, sizeof line, "%-26s %s  rel %.3e  worst %s\n", r.name.c_str(), r.pass ? "PASS" : "FAIL",
                          r.max_rel_error, r.worst_tensor.c_str());
            io.out << line;
        }
        std::snprintf(line, sizeof line, "%zu cases, %zu failed, %.1f s\n", results.size(), failed, secs);
        io.out << line;
    }
    for (const auto& r : results)
        if (!r.pass) io.err << "gradient mismatch in op '" << r.name << "' (" << r.worst_tensor << ")\n";
    return failed ? 3 : 0;
}

// ---------------------------------------------------------------- dump-features

struct DumpArgs {
    std::string config, checkpoint, input, clean, output;
    std::vector<std::string> taps;
};

int cmd_dump(const DumpArgs& a, const Io& io) {
    const RunConfig cfg = config_or_default(a.config);
    const fs::path dir = a.output.empty() ? fs::path(cfg.output.dir) : fs::path(a.output);
    const RamModel<float> model = load_model(cfg, a.checkpoint, io);
    std::vector<std::string> taps = a.taps;
    if (taps.size() == 1 && taps[0] == "all") taps = block_ids(model);
    json effective = to_json(cfg);
    effective["model"] = to_json(model.cfg);
    effective["dump_features"] = {{"checkpoint", a.checkpoint}, {"input", a.input}, {"clean", a.clean}, {"taps", taps}};
    echo_config(io, effective, dir);

    const Tensor<float> img = load_image<float>(a.input);
    std::optional<Tensor<float>> clean;
    if (!a.clean.empty()) clean = load_image<float>(a.clean);
    const auto written = dump_features(model, img, taps, dir, clean);
    json files = json::array();
    for (const auto& p : written) files.push_back(p.string());
    io.out << json{{"files", files}}.dump(2) << "\n";
    return 0;
}

void apply_thread_env() {
    const char* env = std::getenv("RAM_THREADS");
    if (!env || !*env) return;
    char* end = nullptr;
    const long n = std::strtol(env, &end, 10);
    if (*end != '\0' || n < 1) throw ConfigError(std::string("RAM_THREADS must be a positive integer, got '") + env + "'");
    omp_set_num_threads(static_cast<int>(n));
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    const Io io{out, err};
    CLI::App app{"RAM image restoration: training, inference, evaluation and auditing", "ram"};
    app.require_subcommand(1);

    TrainArgs ta;
    auto* train_cmd = app.add_subcommand("train", "Train a model from a manifest of degraded/clean pairs");
    train_cmd->add_option("--config", ta.config, "Run config JSON");
    train_cmd->add_option("--manifest", ta.manifest, "Training manifest (overrides data.train_manifest)");
    train_cmd->add_option("--output", ta.output, "Output directory (overrides output.dir)");
    train_cmd->add_option("--steps", ta.steps, "Total steps (overrides train.steps)");
    train_cmd->add_option("--seed", ta.seed, "Training seed (overrides train.seed)");
    train_cmd->add_option("--resume", ta.resume, "Checkpoint with optimizer state to continue from");

    InferArgs ia;
    auto* infer_cmd = app.add_subcommand("infer", "Restore PNG images");
    infer_cmd->add_option("--config", ia.config, "Run config JSON");
    infer_cmd->add_option("--checkpoint", ia.checkpoint, "Model checkpoint");
    infer_cmd->add_option("--input", ia.inputs, "PNG files or directories")->required();
    infer_cmd->add_option("--output", ia.output, "Output directory (overrides output.dir)");
    infer_cmd->add_option("--pad", ia.pad, "auto: reflect-pad to a multiple of 8; strict: reject")
        ->check(CLI::IsMember({"auto", "strict"}));

    EvalArgs ea;
    auto* eval_cmd = app.add_subcommand("eval", "Score restorations of a manifest with PSNR/SSIM");
    eval_cmd->add_option("--config", ea.config, "Run config JSON");
    eval_cmd->add_option("--checkpoint", ea.checkpoint, "Model checkpoint");
    eval_cmd->add_option("--manifest", ea.manifest, "Evaluation manifest (overrides data.eval_manifest)");
    eval_cmd->add_option("--report", ea.report, "Also write the JSON report here");
    eval_cmd->add_option("--pad", ea.pad, "auto or strict")->check(CLI::IsMember({"auto", "strict"}));

    DegradeArgs da;
    auto* degrade_cmd = app.add_subcommand("degrade", "Generate synthetic clean images or degraded pair sets");
    degrade_cmd->add_option("--synthetic", da.synthetic, "Write N synthetic clean images");
    degrade_cmd->add_option("--size", da.size, "Synthetic image size H W")->expected(2);
    degrade_cmd->add_option("--clean", da.clean, "Directory of clean PNGs to degrade");
    degrade_cmd->add_option("--kinds", da.kinds, "Degradations with default parameters")
        ->delimiter(',')
        ->check(CLI::IsMember({"noise", "rain", "haze", "blur", "lowlight"}));
    degrade_cmd->add_option("--spec", da.spec, "JSON file with one degradation spec or an array of them");
    degrade_cmd->add_option("--seed", da.seed, "Seed for --kinds and --synthetic");
    degrade_cmd->add_option("--output", da.output, "Output directory")->required();
    degrade_cmd->add_option("--manifest", da.manifest, "Manifest path (default <output>/manifest.json)");

    CountArgs ca;
    auto* count_cmd = app.add_subcommand("count", "Parameter and FLOP audit");
    count_cmd->add_option("--config", ca.config, "Run config JSON");
    count_cmd->add_option("--hw", ca.hw, "Input height and width")->expected(2);
    count_cmd->add_flag("--json", ca.as_json, "Machine-readable output");

    GradcheckArgs ga;
    auto* grad_cmd = app.add_subcommand("gradcheck", "Finite-difference gradient suite");
    grad_cmd->add_option("--size", ga.opt.size, "Spatial size of op-level inputs")->check(CLI::Range(4, 64));
    grad_cmd->add_option("--seed", ga.opt.seed, "Seed");
    grad_cmd->add_option("--corrupt", ga.opt.corrupt_op, "Scale this op's backward by 1.5 (negative control)");
    grad_cmd->add_option("--filter", ga.opt.filter, "Only cases whose name contains this");
    grad_cmd->add_option("--max-coords", ga.opt.max_coords, "Sampled coordinates per large tensor");
    grad_cmd->add_flag("--json", ga.as_json, "Machine-readable output");
    grad_cmd->add_flag("--list", ga.list, "List the registered cases and exit");

    DumpArgs fa;
    auto* dump_cmd = app.add_subcommand("dump-features", "Write gated-path feature maps and an error map");
    dump_cmd->add_option("--config", fa.config, "Run config JSON");
    dump_cmd->add_option("--checkpoint", fa.checkpoint, "Model checkpoint");
    dump_cmd->add_option("--input", fa.input, "Degraded PNG (height and width multiples of 8)")->required();
    dump_cmd->add_option("--clean", fa.clean, "Clean PNG for error.png");
    dump_cmd->add_option("--taps", fa.taps, "Block ids such as enc1.0,dec1.0,ref.0 or 'all'")
        ->delimiter(',')
        ->required();
    dump_cmd->add_option("--output", fa.output, "Output directory (overrides output.dir)");

    try {
        std::vector<std::string> rev(args.rbegin(), args.rend());
        app.parse(rev);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err) == 0 ? 0 : 1;
    }

    try {
        apply_thread_env();
        if (*train_cmd) return cmd_train(ta, io);
        if (*infer_cmd) return cmd_infer(ia, io);
        if (*eval_cmd) return cmd_eval(ea, io);
        if (*degrade_cmd) return cmd_degrade(da, io);
        if (*count_cmd) return cmd_count(ca, io);
        if (*grad_cmd) return cmd_gradcheck(ga, io);
        if (*dump_cmd) return cmd_dump(fa, io);
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return e.exit_code();
    } catch (const fs::filesystem_error& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}

}  // namespace ram
