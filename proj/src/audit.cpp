#include "ram/audit.hpp"

#include <string>

#include "ram/errors.hpp"

namespace ram {

namespace {

using u64 = std::uint64_t;

template <typename T>
u64 conv_flops(const ConvWeights<T>& w, u64 out_plane) {
    const u64 macs = out_plane * w.c_out() * (w.c_in() / w.groups) * w.k() * w.k();
    return 2 * macs + (w.bias ? out_plane * w.c_out() : 0);
}

struct Tally {
    u64 flops = 0;
    u64 attention_core = 0;
};

template <typename T>
void attention_flops(const AttentionWeights<T>& w, u64 hw, Tally& t) {
    const u64 P = w.qkv.c_in(), heads = w.heads, ch = P / heads;
    t.flops += conv_flops(w.qkv, hw) + conv_flops(w.qkv_dw, hw) + conv_flops(w.project, hw);
    u64 core = 0, score_elems = 0;
    if (w.mode == AttentionMode::channel) {
        t.flops += 2 * kFlopsPerStatistic * P * hw;  // L2 normalize q and k
        core = 2 * (2 * heads * ch * ch * hw);
        score_elems = heads * ch * ch;
    } else {
        core = 2 * (2 * heads * hw * hw * ch);
        score_elems = heads * hw * hw;
    }
    // 1/sqrt(d) and per-head temperature, then softmax.
    t.flops += core + 2 * score_elems + kFlopsPerTranscendental * score_elems;
    t.attention_core += core;
}

template <typename T>
void gated_flops(const GatedDaWeights<T>& w, u64 hw, Tally& t) {
    const u64 P = w.expand.c_in();
    const SplitSizes& s = w.split;
    t.flops += kFlopsPerTranscendental * P * hw;  // layer_norm
    t.flops += kFlopsPerStatistic * P * hw;       // mean, std
    t.flops += P + kFlopsPerTranscendental * P;   // sigmoid(mu + sd)
    t.flops += conv_flops(w.expand, hw);
    if (s.alpha) {
        const u64 rows = w.granularity == TempGranularity::scalar ? 1 : s.alpha;
        t.flops += 2 * rows * P + rows;  // constant mapping conv, times tau
        t.flops += conv_flops(*w.depth, hw) + s.alpha * hw;
    }
    t.flops += conv_flops(w.gate_combine, hw);
    if (s.gamma) t.flops += kFlopsPerTranscendental * s.gamma * hw + P * hw;
    t.flops += P * hw + conv_flops(w.project, hw);
}

template <typename T>
void dab_flops(const DabWeights<T>& w, u64 hw, Tally& t) {
    const u64 C = w.channels();
    attention_flops(w.attn, hw, t);
    if (w.gate) gated_flops(*w.gate, hw, t);
    const bool two_paths = !(w.flags.split_mode == SplitMode::full && !w.gate);
    if (two_paths && w.flags.cross_sigmoid_enabled) {
        const u64 path = w.attn.qkv.c_in();
        t.flops += 2 * (kFlopsPerTranscendental + 1) * path * hw;
    }
    t.flops += conv_flops(w.fuse, hw) + C * hw;
    const u64 hidden = w.ffn.contract.c_in();
    t.flops += kFlopsPerTranscendental * C * hw + conv_flops(w.ffn.expand, hw) + conv_flops(w.ffn.depthwise, hw);
    t.flops += kFlopsPerTranscendental * hidden * hw + hidden * hw + conv_flops(w.ffn.contract, hw);
    t.flops += C * hw;
}

template <typename T>
u64 blocks_flops(const std::vector<DabWeights<T>>& blocks, u64 hw, Tally& t) {
    const u64 before = t.flops;
    for (const auto& b : blocks) dab_flops(b, hw, t);
    return t.flops - before;
}

}  // namespace

template <typename T>
ParamReport count_params(const RamModel<T>& m) {
    ParamReport r;
    RamModel<T>::visit(m, [&](const std::string& name, const Tensor<T>& t) {
        const std::string module = name.substr(0, name.find('.'));
        if (r.modules.empty() || r.modules.back().module != module) r.modules.push_back({module, 0});
        r.modules.back().value += t.numel();
        r.total += t.numel();
    });
    return r;
}

template <typename T>
FlopReport count_flops(const RamModel<T>& m, std::size_t height, std::size_t width) {
    if (height == 0 || width == 0 || height % 8 != 0 || width % 8 != 0)
        throw DimensionError("count_flops: " + std::to_string(height) + "x" + std::to_string(width) +
                             " is not a positive multiple of 8");
    FlopReport r;
    Tally t;
    auto add = [&](const std::string& module, u64 v) {
        r.modules.push_back({module, v});
        r.total += v;
    };
    auto plane = [&](std::size_t level) -> u64 { return u64(height >> level) * u64(width >> level); };

    add("patch_embed", conv_flops(m.patch_embed, plane(0)));
    for (std::size_t l = 0; l < 4; ++l) {
        const std::string lvl = std::to_string(l + 1);
        add("enc" + lvl, blocks_flops(m.encoder[l], plane(l), t));
        if (l < 3) add("down" + lvl, conv_flops(m.down[l], plane(l + 1)));
    }
    for (std::size_t l = 3; l-- > 0;) {
        const std::string lvl = std::to_string(l + 1);
        add("up" + lvl, conv_flops(m.up[l], plane(l + 1)));
        add("skip" + lvl, conv_flops(m.skip_merge[l], plane(l)));
        add("dec" + lvl, blocks_flops(m.decoder[l], plane(l), t));
    }
    add("ref", blocks_flops(m.refinement, plane(0), t));
    add("head", conv_flops(m.head, plane(0)) + 3 * plane(0));
    r.attention_core = t.attention_core;
    return r;
}

double attention_core_ratio(const RamConfig& cfg, std::size_t height, std::size_t width) {
    RamConfig full = cfg;
    const BlockFlags a = variant_flags('a');
    full.flags.split_mode = a.split_mode;
    full.flags.gate_enabled = a.gate_enabled;
    full.flags.cross_sigmoid_enabled = a.cross_sigmoid_enabled;
    const u64 split_core = count_flops(build<float>(cfg), height, width).attention_core;
    const u64 full_core = count_flops(build<float>(full), height, width).attention_core;
    return static_cast<double>(split_core) / static_cast<double>(full_core);
}

double predicted_attention_ratio(AttentionMode mode) {
    return mode == AttentionMode::channel ? 0.25 : 0.5;
}

nlohmann::json audit_json(const RamConfig& cfg, std::size_t height, std::size_t width) {
    const RamModel<float> m = build<float>(cfg);
    const ParamReport p = count_params(m);
    const FlopReport f = count_flops(m, height, width);
    nlohmann::json j;
    j["params"]["total"] = p.total;
    for (const auto& e : p.modules) j["params"]["modules"].push_back({{"module", e.module}, {"params", e.value}});
    j["flops"]["height"] = height;
    j["flops"]["width"] = width;
    j["flops"]["total"] = f.total;
    j["flops"]["attention_core"] = f.attention_core;
    for (const auto& e : f.modules) j["flops"]["modules"].push_back({{"module", e.module}, {"flops", e.value}});
    const double ratio = cfg.flags.split_mode == SplitMode::full ? 1.0 : attention_core_ratio(cfg, height, width);
    j["attention_ratio"] = {{"mode", to_string(cfg.flags.attention_mode)},
                            {"measured", ratio},
                            {"predicted", cfg.flags.split_mode == SplitMode::full
                                              ? 1.0
                                              : predicted_attention_ratio(cfg.flags.attention_mode)}};
    return j;
}

#define RAM_INSTANTIATE_AUDIT(T)                                   \
    template ParamReport count_params<T>(const RamModel<T>&);      \
    template FlopReport count_flops<T>(const RamModel<T>&, std::size_t, std::size_t);

RAM_INSTANTIATE_AUDIT(float)
RAM_INSTANTIATE_AUDIT(double)

}  // namespace ram
