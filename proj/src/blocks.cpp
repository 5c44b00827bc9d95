#include "ram/blocks.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <tuple>
#include <vector>

#include "ram/errors.hpp"
#include "ram/ops.hpp"

namespace ram {

double ParamInit::uniform() {
    // 53 high bits -> [0, 1); identical on every platform, unlike
    // std::uniform_real_distribution.
    return static_cast<double>(rng_() >> 11) * 0x1.0p-53;
}

double ParamInit::truncated_normal(double stddev) {
    for (;;) {
        const double u1 = 1.0 - uniform();  // (0, 1]
        const double u2 = uniform();
        const double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
        if (std::abs(z) <= 2.0) return z * stddev;
    }
}

template <typename T>
Tensor<T> ParamInit::normal_tensor(Shape shape, double stddev) {
    std::vector<T> v(shape.numel());
    for (auto& e : v) e = static_cast<T>(truncated_normal(stddev));
    return Tensor<T>(shape, std::move(v));
}

template <typename T>
ConvWeights<T> make_conv(ParamInit& init, std::size_t c_in, std::size_t c_out, std::size_t k, std::size_t groups,
                         bool bias) {
    if (groups == 0 || c_in % groups != 0 || c_out % groups != 0)
        throw ConfigError("conv groups " + std::to_string(groups) + " must divide " + std::to_string(c_in) + " -> " +
                          std::to_string(c_out));
    ConvWeights<T> w;
    w.kernel = init.normal_tensor<T>(Shape{c_out, c_in / groups, k, k});
    if (bias) w.bias = Tensor<T>(Shape{1, c_out, 1, 1}, T(0));
    w.padding = k / 2;
    w.groups = groups;
    return w;
}

template <typename T>
NormWeights<T> make_norm(std::size_t channels) {
    return NormWeights<T>{Tensor<T>(Shape{1, channels, 1, 1}, T(1)), Tensor<T>(Shape{1, channels, 1, 1}, T(0))};
}

template <typename T>
AttentionWeights<T> make_attention(ParamInit& init, std::size_t channels, std::size_t heads, AttentionMode mode) {
    if (heads == 0 || channels % heads != 0)
        throw ConfigError(std::to_string(heads) + " heads do not divide " + std::to_string(channels) + " channels");
    AttentionWeights<T> w;
    w.qkv = make_conv<T>(init, channels, 3 * channels, 1);
    w.qkv_dw = make_conv<T>(init, 3 * channels, 3 * channels, 3, 3 * channels);
    w.project = make_conv<T>(init, channels, channels, 1);
    w.temperature = Tensor<T>(Shape{1, heads, 1, 1}, T(1));
    w.heads = heads;
    w.mode = mode;
    return w;
}

template <typename T>
GatedDaWeights<T> make_gated_da(ParamInit& init, std::size_t channels, const RamConfig& cfg) {
    GatedDaWeights<T> w;
    w.split = cfg.split_sizes(channels);
    if (w.split.gamma != 0 && w.split.gamma != channels)
        throw ConfigError("gamma slice must be 0 or " + std::to_string(channels) + " wide");
    w.norm = make_norm<T>(channels);
    w.expand = make_conv<T>(init, channels, w.split.total(), 1);
    if (w.split.alpha > 0) w.depth = make_conv<T>(init, w.split.alpha, w.split.alpha, 3, w.split.alpha);
    w.gate_combine = make_conv<T>(init, w.split.beta + w.split.alpha, channels, 1);
    w.project = make_conv<T>(init, channels, channels, 1);
    w.tau = Tensor<T>(Shape{1, 1, 1, 1}, static_cast<T>(cfg.tau_init));
    w.activation = cfg.flags.gate_activation;
    w.granularity = cfg.flags.temp_granularity;
    return w;
}

template <typename T>
FfnWeights<T> make_ffn(ParamInit& init, std::size_t channels, std::size_t factor) {
    const std::size_t hidden = factor * channels;
    FfnWeights<T> w;
    w.norm = make_norm<T>(channels);
    w.expand = make_conv<T>(init, channels, 2 * hidden, 1);
    w.depthwise = make_conv<T>(init, 2 * hidden, 2 * hidden, 3, 2 * hidden);
    w.contract = make_conv<T>(init, hidden, channels, 1);
    return w;
}

template <typename T>
DabWeights<T> make_dab(ParamInit& init, std::size_t channels, std::size_t heads, const RamConfig& cfg) {
    const BlockFlags& f = cfg.flags;
    if (f.split_mode != SplitMode::full && channels % 2 != 0)
        throw ConfigError("split block needs an even width, got " + std::to_string(channels));
    const std::size_t path = cfg.path_width(channels);
    DabWeights<T> w;
    w.flags = f;
    w.attn = make_attention<T>(init, path, heads, f.attention_mode);
    if (f.gate_enabled) w.gate = make_gated_da<T>(init, path, cfg);
    const bool single_path = f.split_mode == SplitMode::full && !f.gate_enabled;
    w.fuse = make_conv<T>(init, single_path ? channels : 2 * path, channels, 1);
    w.ffn = make_ffn<T>(init, channels, cfg.ffn_factor);
    return w;
}

template <typename T>
ConvWeights<T> temperature_mapping(std::size_t channels, std::size_t alpha_width, TempGranularity granularity) {
    ConvWeights<T> w;
    if (granularity == TempGranularity::scalar) {
        w.kernel = Tensor<T>(Shape{1, channels, 1, 1}, T(1) / static_cast<T>(channels));
        return w;
    }
    // Row j averages the input channels whose share of the unit interval
    // overlaps [j / alpha_width, (j + 1) / alpha_width), weighted by overlap.
    std::vector<T> k(alpha_width * channels, T(0));
    for (std::size_t j = 0; j < alpha_width; ++j) {
        const std::size_t lo = j * channels, hi = (j + 1) * channels;
        for (std::size_t c = 0; c < channels; ++c) {
            const std::size_t clo = c * alpha_width, chi = (c + 1) * alpha_width;
            const std::size_t a = std::max(lo, clo), b = std::min(hi, chi);
            if (b > a) k[j * channels + c] = static_cast<T>(b - a) / static_cast<T>(channels);
        }
    }
    w.kernel = Tensor<T>(Shape{alpha_width, channels, 1, 1}, std::move(k));
    return w;
}

template <typename T>
Tensor<T> attention_forward(const Tensor<T>& x, const AttentionWeights<T>& w) {
    const Shape s = x.shape();
    const std::size_t P = s.c;
    if (w.heads == 0 || P % w.heads != 0)
        throw DimensionError("attention: " + std::to_string(w.heads) + " heads do not divide " + std::to_string(P) +
                             " channels");
    if (w.qkv.c_in() != P) throw DimensionError("attention: weights expect " + std::to_string(w.qkv.c_in()) +
                                                " channels, input has " + std::to_string(P));
    const std::size_t ch = P / w.heads, hw = s.plane();

    const Tensor<T> qkv = conv2d(conv2d(x, w.qkv), w.qkv_dw);
    auto parts = split_channels(qkv, {P, P, P});
    const Shape heads_shape{s.n, w.heads, ch, hw};
    Tensor<T> q = reshape(parts[0], heads_shape);
    Tensor<T> k = reshape(parts[1], heads_shape);
    const Tensor<T> v = reshape(parts[2], heads_shape);

    const T inv_sqrt_d = T(1) / std::sqrt(static_cast<T>(ch));
    Tensor<T> out;
    if (w.mode == AttentionMode::channel) {
        q = l2_normalize(q);
        k = l2_normalize(k);
        Tensor<T> score = mul(scale(matmul(q, k, false, true), inv_sqrt_d), w.temperature);
        out = matmul(softmax(score, 3), v);  // (N, heads, ch, hw)
    } else {
        Tensor<T> score = mul(scale(matmul(q, k, true, false), inv_sqrt_d), w.temperature);
        out = matmul(v, softmax(score, 3), false, true);  // (N, heads, ch, hw)
    }
    return conv2d(reshape(out, s), w.project);
}

template <typename T>
Tensor<T> gated_da_forward(const Tensor<T>& x, const GatedDaWeights<T>& w, GatedDaTrace<T>* trace) {
    const std::size_t P = x.shape().c;
    const SplitSizes& sz = w.split;
    if (w.expand.c_in() != P)
        throw DimensionError("gated_da: weights expect " + std::to_string(w.expand.c_in()) + " channels, input has " +
                             std::to_string(P));
    if (w.expand.c_out() != sz.total())
        throw DimensionError("gated_da: split sizes sum to " + std::to_string(sz.total()) + " but expand gives " +
                             std::to_string(w.expand.c_out()));
    if (sz.gamma != 0 && sz.gamma != P) throw DimensionError("gated_da: gamma slice must be 0 or the path width");
    if ((sz.alpha > 0) != w.depth.has_value()) throw DimensionError("gated_da: depthwise conv missing for alpha");

    const Tensor<T> xh = layer_norm(x, w.norm);
    const ChannelStats<T> st = channel_stats(xh);
    const Tensor<T> stat_scale = sigmoid(add(st.mean, st.std));  // (N, P, 1, 1)

    const Tensor<T> f = conv2d(xh, w.expand);
    std::vector<std::size_t> widths;
    for (std::size_t wd : {sz.gamma, sz.beta, sz.alpha})
        if (wd > 0) widths.push_back(wd);
    const auto parts = split_channels(f, widths);
    std::size_t next = 0;
    const Tensor<T> gamma = sz.gamma ? parts[next++] : Tensor<T>();
    const Tensor<T> beta = sz.beta ? parts[next++] : Tensor<T>();
    const Tensor<T> alpha = sz.alpha ? parts[next++] : Tensor<T>();

    std::vector<Tensor<T>> mix;
    if (sz.beta) mix.push_back(beta);
    Tensor<T> tau_adj;
    if (sz.alpha) {
        const Tensor<T> mapped = conv2d(stat_scale, temperature_mapping<T>(P, sz.alpha, w.granularity));
        tau_adj = mul(mapped, w.tau);
        mix.push_back(mul(conv2d(alpha, *w.depth), tau_adj));
    }
    Tensor<T> gated = conv2d(mix.size() == 1 ? mix.front() : concat_channels(mix), w.gate_combine);
    if (sz.gamma) {
        const Tensor<T> act = w.activation == GateActivation::gelu ? gelu(gamma) : sigmoid(gamma);
        gated = mul(act, gated);
    }
    Tensor<T> out = conv2d(add(gated, x), w.project);
    if (trace) *trace = GatedDaTrace<T>{gamma, beta, alpha, tau_adj, out};
    return out;
}

template <typename T>
std::pair<Tensor<T>, Tensor<T>> cross_sigmoid(const Tensor<T>& att, const Tensor<T>& gate) {
    if (!(att.shape() == gate.shape()))
        throw DimensionError("cross_sigmoid: " + att.shape().str() + " vs " + gate.shape().str());
    return {add(att, sigmoid(gate)), add(gate, sigmoid(att))};
}

template <typename T>
Tensor<T> ffn_forward(const Tensor<T>& x, const FfnWeights<T>& w) {
    const Tensor<T> h = conv2d(conv2d(layer_norm(x, w.norm), w.expand), w.depthwise);
    const std::size_t half = h.shape().c / 2;
    const auto parts = split_channels(h, {half, half});
    return conv2d(mul(gelu(parts[0]), parts[1]), w.contract);
}

template <typename T>
Tensor<T> dab_forward(const Tensor<T>& x, const DabWeights<T>& w, DabTrace<T>* trace) {
    const std::size_t C = x.shape().c;
    if (C != w.channels())
        throw DimensionError("dab: block width " + std::to_string(w.channels()) + ", input has " + std::to_string(C) +
                             " channels");
    const BlockFlags& f = w.flags;
    Tensor<T> att_in, gate_in;
    switch (f.split_mode) {
        case SplitMode::interleaved: std::tie(att_in, gate_in) = interleaved_split(x); break;
        case SplitMode::contiguous: {
            if (C % 2 != 0) throw DimensionError("dab: contiguous split needs even channels");
            auto halves = split_channels(x, {C / 2, C / 2});
            att_in = halves[0];
            gate_in = halves[1];
            break;
        }
        case SplitMode::full: att_in = gate_in = x; break;
    }

    Tensor<T> att = attention_forward(att_in, w.attn);
    std::optional<GatedDaTrace<T>> gtrace;
    Tensor<T> fuse_in;
    if (f.split_mode == SplitMode::full && !w.gate) {
        fuse_in = att;
        if (trace) *trace = DabTrace<T>{att, Tensor<T>(), std::nullopt};
    } else {
        Tensor<T> gate;
        if (w.gate) {
            GatedDaTrace<T> gt;
            gate = gated_da_forward(gate_in, *w.gate, trace ? &gt : nullptr);
            if (trace) gtrace = gt;
        } else {
            gate = gate_in;
        }
        if (trace) *trace = DabTrace<T>{att, gate, gtrace};
        if (f.cross_sigmoid_enabled) std::tie(att, gate) = cross_sigmoid(att, gate);
        fuse_in = concat_channels<T>({att, gate});
    }
    const Tensor<T> fused = add(conv2d(fuse_in, w.fuse), x);
    return add(ffn_forward(fused, w.ffn), fused);
}

#define RAM_INSTANTIATE_BLOCKS(T)                                                                              \
    template Tensor<T> ParamInit::normal_tensor<T>(Shape, double);                                             \
    template ConvWeights<T> make_conv<T>(ParamInit&, std::size_t, std::size_t, std::size_t, std::size_t, bool); \
    template NormWeights<T> make_norm<T>(std::size_t);                                                         \
    template AttentionWeights<T> make_attention<T>(ParamInit&, std::size_t, std::size_t, AttentionMode);       \
    template GatedDaWeights<T> make_gated_da<T>(ParamInit&, std::size_t, const RamConfig&);                    \
    template FfnWeights<T> make_ffn<T>(ParamInit&, std::size_t, std::size_t);                                  \
    template DabWeights<T> make_dab<T>(ParamInit&, std::size_t, std::size_t, const RamConfig&);                \
    template ConvWeights<T> temperature_mapping<T>(std::size_t, std::size_t, TempGranularity);                 \
    template Tensor<T> attention_forward<T>(const Tensor<T>&, const AttentionWeights<T>&);                     \
    template Tensor<T> gated_da_forward<T>(const Tensor<T>&, const GatedDaWeights<T>&, GatedDaTrace<T>*);      \
    template std::pair<Tensor<T>, Tensor<T>> cross_sigmoid<T>(const Tensor<T>&, const Tensor<T>&);             \
    template Tensor<T> ffn_forward<T>(const Tensor<T>&, const FfnWeights<T>&);                                 \
    template Tensor<T> dab_forward<T>(const Tensor<T>&, const DabWeights<T>&, DabTrace<T>*);

RAM_INSTANTIATE_BLOCKS(float)
RAM_INSTANTIATE_BLOCKS(double)

}  // namespace ram
