#include "ram/config.hpp"

#include <cmath>
#include <set>

#include "ram/errors.hpp"

namespace ram {

BlockFlags variant_flags(char variant) {
    BlockFlags f;
    switch (variant) {
        case 'a': f.split_mode = SplitMode::full; f.gate_enabled = false; f.cross_sigmoid_enabled = false; break;
        case 'b': f.split_mode = SplitMode::interleaved; f.gate_enabled = false; f.cross_sigmoid_enabled = false; break;
        case 'c': f.split_mode = SplitMode::contiguous; f.gate_enabled = true; f.cross_sigmoid_enabled = false; break;
        case 'd': f.split_mode = SplitMode::interleaved; f.gate_enabled = true; f.cross_sigmoid_enabled = false; break;
        case 'e': break;
        default: throw ConfigError(std::string("unknown block variant '") + variant + "'");
    }
    return f;
}

SplitSizes RamConfig::split_sizes(std::size_t path_channels) const {
    const double hidden = static_cast<double>(r_expan * path_channels);
    auto slice = [&](double ratio, const char* name) {
        const double v = hidden * ratio;
        const double r = std::round(v);
        if (ratio < 0 || std::abs(v - r) > 1e-9)
            throw ConfigError(std::string("split ratio for ") + name + " gives non-integer width " +
                              std::to_string(v) + " at hidden " + std::to_string(hidden));
        return static_cast<std::size_t>(r);
    };
    return SplitSizes{slice(split.gamma, "gamma"), slice(split.beta, "beta"), slice(split.alpha, "alpha")};
}

void RamConfig::validate() const {
    if (base_channels == 0 || base_channels % 2 != 0)
        throw ConfigError("base_channels must be a positive even number, got " + std::to_string(base_channels));
    for (std::size_t i = 0; i < 4; ++i) {
        if (depths[i] == 0) throw ConfigError("depths[" + std::to_string(i) + "] must be >= 1");
        if (heads[i] == 0) throw ConfigError("heads[" + std::to_string(i) + "] must be >= 1");
    }
    if (r_expan == 0) throw ConfigError("r_expan must be >= 1");
    if (ffn_factor == 0) throw ConfigError("ffn_factor must be >= 1");
    if (!(tau_init > 0)) throw ConfigError("tau_init must be positive");
    if (std::abs(split.gamma + split.beta + split.alpha - 1.0) > 1e-9)
        throw ConfigError("split ratios must sum to 1");

    for (std::size_t level = 0; level < 4; ++level) {
        const std::size_t c = width(level);
        const std::size_t path = path_width(c);
        if (flags.split_mode != SplitMode::full && c % 2 != 0)
            throw ConfigError("level " + std::to_string(level + 1) + " width " + std::to_string(c) + " is odd");
        if (path % heads[level] != 0)
            throw ConfigError("heads[" + std::to_string(level) + "]=" + std::to_string(heads[level]) +
                              " does not divide attention width " + std::to_string(path));
        if (flags.gate_enabled) {
            const SplitSizes s = split_sizes(path);
            if (s.gamma != 0 && s.gamma != path)
                throw ConfigError("gamma slice width " + std::to_string(s.gamma) + " must equal the gate path width " +
                                  std::to_string(path) + " (or be 0)");
            if (s.beta + s.alpha == 0) throw ConfigError("beta and alpha slices cannot both be empty");
        }
    }
    if (!flags.gate_enabled && flags.split_mode == SplitMode::full && flags.cross_sigmoid_enabled)
        throw ConfigError("cross-sigmoid needs two paths; full split without gate has one");
}

RamConfig tiny_config(std::size_t channels, std::uint64_t seed) {
    RamConfig cfg;
    cfg.base_channels = channels;
    cfg.depths = {1, 1, 1, 1};
    cfg.refinement_depth = 1;
    cfg.seed = seed;
    return cfg;
}

std::string to_string(SplitMode m) {
    switch (m) {
        case SplitMode::interleaved: return "interleaved";
        case SplitMode::contiguous: return "contiguous";
        case SplitMode::full: return "full";
    }
    return "?";
}
std::string to_string(AttentionMode m) { return m == AttentionMode::channel ? "channel" : "spatial"; }
std::string to_string(GateActivation m) { return m == GateActivation::gelu ? "gelu" : "sigmoid"; }
std::string to_string(TempGranularity m) {
    return m == TempGranularity::scalar ? "scalar" : "per_channel_mapped";
}

namespace {

template <typename E>
E parse_enum(const nlohmann::json& j, const char* key, std::initializer_list<E> options) {
    const std::string s = j.get<std::string>();
    for (E e : options)
        if (to_string(e) == s) return e;
    throw ConfigError(std::string("invalid value '") + s + "' for " + key);
}

void reject_unknown(const nlohmann::json& j, const std::set<std::string>& known, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!known.count(it.key())) throw ConfigError("unknown key '" + it.key() + "' in " + where);
}

}  // namespace

nlohmann::json to_json(const RamConfig& cfg) {
    nlohmann::json j;
    j["base_channels"] = cfg.base_channels;
    j["depths"] = cfg.depths;
    j["refinement_depth"] = cfg.refinement_depth;
    j["heads"] = cfg.heads;
    j["r_expan"] = cfg.r_expan;
    j["ffn_factor"] = cfg.ffn_factor;
    j["split_ratio"] = {{"gamma", cfg.split.gamma}, {"beta", cfg.split.beta}, {"alpha", cfg.split.alpha}};
    j["tau_init"] = cfg.tau_init;
    j["split_mode"] = to_string(cfg.flags.split_mode);
    j["gate_enabled"] = cfg.flags.gate_enabled;
    j["cross_sigmoid_enabled"] = cfg.flags.cross_sigmoid_enabled;
    j["attention_mode"] = to_string(cfg.flags.attention_mode);
    j["gate_activation"] = to_string(cfg.flags.gate_activation);
    j["temp_granularity"] = to_string(cfg.flags.temp_granularity);
    j["seed"] = cfg.seed;
    return j;
}

RamConfig ram_config_from_json(const nlohmann::json& j) {
    static const std::set<std::string> known = {
        "base_channels", "depths", "refinement_depth", "heads", "r_expan", "ffn_factor", "split_ratio",
        "tau_init", "split_mode", "gate_enabled", "cross_sigmoid_enabled", "attention_mode",
        "gate_activation", "temp_granularity", "seed", "variant"};
    reject_unknown(j, known, "model");
    RamConfig cfg;
    try {
        if (j.contains("variant")) {
            const std::string v = j.at("variant").get<std::string>();
            if (v.size() != 1) throw ConfigError("variant must be one of a..e");
            cfg.flags = variant_flags(v[0]);
        }
        if (j.contains("base_channels")) cfg.base_channels = j.at("base_channels").get<std::size_t>();
        if (j.contains("depths")) cfg.depths = j.at("depths").get<std::array<std::size_t, 4>>();
        if (j.contains("refinement_depth")) cfg.refinement_depth = j.at("refinement_depth").get<std::size_t>();
        if (j.contains("heads")) cfg.heads = j.at("heads").get<std::array<std::size_t, 4>>();
        if (j.contains("r_expan")) cfg.r_expan = j.at("r_expan").get<std::size_t>();
        if (j.contains("ffn_factor")) cfg.ffn_factor = j.at("ffn_factor").get<std::size_t>();
        if (j.contains("split_ratio")) {
            const auto& s = j.at("split_ratio");
            reject_unknown(s, {"gamma", "beta", "alpha"}, "model.split_ratio");
            if (s.contains("gamma")) cfg.split.gamma = s.at("gamma").get<double>();
            if (s.contains("beta")) cfg.split.beta = s.at("beta").get<double>();
            if (s.contains("alpha")) cfg.split.alpha = s.at("alpha").get<double>();
        }
        if (j.contains("tau_init")) cfg.tau_init = j.at("tau_init").get<double>();
        if (j.contains("split_mode"))
            cfg.flags.split_mode = parse_enum(j.at("split_mode"), "split_mode",
                                              {SplitMode::interleaved, SplitMode::contiguous, SplitMode::full});
        if (j.contains("gate_enabled")) cfg.flags.gate_enabled = j.at("gate_enabled").get<bool>();
        if (j.contains("cross_sigmoid_enabled"))
            cfg.flags.cross_sigmoid_enabled = j.at("cross_sigmoid_enabled").get<bool>();
        if (j.contains("attention_mode"))
            cfg.flags.attention_mode =
                parse_enum(j.at("attention_mode"), "attention_mode", {AttentionMode::channel, AttentionMode::spatial});
        if (j.contains("gate_activation"))
            cfg.flags.gate_activation = parse_enum(j.at("gate_activation"), "gate_activation",
                                                   {GateActivation::gelu, GateActivation::sigmoid});
        if (j.contains("temp_granularity"))
            cfg.flags.temp_granularity =
                parse_enum(j.at("temp_granularity"), "temp_granularity",
                           {TempGranularity::scalar, TempGranularity::per_channel_mapped});
        if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("model config: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

}  // namespace ram
