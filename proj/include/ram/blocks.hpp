#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <utility>

#include "ram/config.hpp"
#include "ram/nn.hpp"
#include "ram/tensor.hpp"

namespace ram {

// Q/K/V generators (1x1 conv then 3x3 depthwise), output projection and a
// learnable per-head temperature of shape (1, heads, 1, 1).
template <typename T>
struct AttentionWeights {
    ConvWeights<T> qkv;
    ConvWeights<T> qkv_dw;
    ConvWeights<T> project;
    Tensor<T> temperature;
    std::size_t heads = 1;
    AttentionMode mode = AttentionMode::channel;

    template <class Self, class F>
    static void visit(Self& self, const std::string& prefix, F&& f) {
        ConvWeights<T>::visit(self.qkv, prefix + "qkv.", f);
        ConvWeights<T>::visit(self.qkv_dw, prefix + "qkv_dw.", f);
        ConvWeights<T>::visit(self.project, prefix + "project.", f);
        f(prefix + "temperature", self.temperature);
    }
};

// Parameters of the gated degradation-adaption path. `depth` is absent
// when the alpha slice is empty.
template <typename T>
struct GatedDaWeights {
    NormWeights<T> norm;
    ConvWeights<T> expand;                 // 1x1, C -> hidden
    std::optional<ConvWeights<T>> depth;   // 3x3 depthwise over alpha
    ConvWeights<T> gate_combine;           // 1x1, beta + alpha -> C
    ConvWeights<T> project;                // 1x1, C -> C
    Tensor<T> tau;                         // (1,1,1,1), initial temperature
    SplitSizes split;                      // (gamma, beta, alpha) widths
    GateActivation activation = GateActivation::gelu;
    TempGranularity granularity = TempGranularity::scalar;

    template <class Self, class F>
    static void visit(Self& self, const std::string& prefix, F&& f) {
        NormWeights<T>::visit(self.norm, prefix + "norm.", f);
        ConvWeights<T>::visit(self.expand, prefix + "expand.", f);
        if (self.depth) ConvWeights<T>::visit(*self.depth, prefix + "depth.", f);
        ConvWeights<T>::visit(self.gate_combine, prefix + "gate_combine.", f);
        ConvWeights<T>::visit(self.project, prefix + "project.", f);
        f(prefix + "tau", self.tau);
    }
};

// Gated-dconv feed-forward: 1x1 C -> 2fC, 3x3 depthwise, gelu(x1) * x2,
// 1x1 fC -> C.
template <typename T>
struct FfnWeights {
    NormWeights<T> norm;
    ConvWeights<T> expand;
    ConvWeights<T> depthwise;
    ConvWeights<T> contract;

    template <class Self, class F>
    static void visit(Self& self, const std::string& prefix, F&& f) {
        NormWeights<T>::visit(self.norm, prefix + "norm.", f);
        ConvWeights<T>::visit(self.expand, prefix + "expand.", f);
        ConvWeights<T>::visit(self.depthwise, prefix + "depthwise.", f);
        ConvWeights<T>::visit(self.contract, prefix + "contract.", f);
    }
};

// One degradation adaptation block.
template <typename T>
struct DabWeights {
    AttentionWeights<T> attn;
    std::optional<GatedDaWeights<T>> gate;  // present iff flags.gate_enabled
    ConvWeights<T> fuse;
    FfnWeights<T> ffn;
    BlockFlags flags;

    std::size_t channels() const { return fuse.c_out(); }

    template <class Self, class F>
    static void visit(Self& self, const std::string& prefix, F&& f) {
        AttentionWeights<T>::visit(self.attn, prefix + "attn.", f);
        if (self.gate) GatedDaWeights<T>::visit(*self.gate, prefix + "gate.", f);
        ConvWeights<T>::visit(self.fuse, prefix + "fuse.", f);
        FfnWeights<T>::visit(self.ffn, prefix + "ffn.", f);
    }
};

// Intermediate activations of one gated path, kept for feature dumps.
template <typename T>
struct GatedDaTrace {
    Tensor<T> gamma, beta, alpha;
    Tensor<T> tau_adj;
    Tensor<T> output;
};

// Deterministic parameter initializer: truncated normal (std 0.02, cut at
// 2 std) drawn with Box-Muller from a 64-bit Mersenne Twister.
class ParamInit {
public:
    explicit ParamInit(std::uint64_t seed) : rng_(seed) {}
    double uniform();  // [0, 1)
    double truncated_normal(double stddev);

    template <typename T>
    Tensor<T> normal_tensor(Shape shape, double stddev = 0.02);

private:
    std::mt19937_64 rng_;
};

template <typename T>
ConvWeights<T> make_conv(ParamInit& init, std::size_t c_in, std::size_t c_out, std::size_t k, std::size_t groups = 1,
                         bool bias = true);
template <typename T>
NormWeights<T> make_norm(std::size_t channels);
template <typename T>
AttentionWeights<T> make_attention(ParamInit& init, std::size_t channels, std::size_t heads, AttentionMode mode);
template <typename T>
GatedDaWeights<T> make_gated_da(ParamInit& init, std::size_t channels, const RamConfig& cfg);
template <typename T>
FfnWeights<T> make_ffn(ParamInit& init, std::size_t channels, std::size_t factor);
// Block of width `channels` using cfg.flags and the given head count.
template <typename T>
DabWeights<T> make_dab(ParamInit& init, std::size_t channels, std::size_t heads, const RamConfig& cfg);

// Channel-transposed (or spatial, per w.mode) multi-head attention.
template <typename T>
Tensor<T> attention_forward(const Tensor<T>& x, const AttentionWeights<T>& w);

// Gated degradation adaption:
//   xh = norm(x); (mu, sd) = channel_stats(xh); scale = sigmoid(mu + sd)
//   tau_adj = tau * map(scale); (g, b, a) = split(expand(xh))
//   a' = depthwise(a) * tau_adj; gated = act(g) * gate_combine(concat(b, a'))
//   out = project(gated + x)
template <typename T>
Tensor<T> gated_da_forward(const Tensor<T>& x, const GatedDaWeights<T>& w, GatedDaTrace<T>* trace = nullptr);

// (att + sigmoid(gate), gate + sigmoid(att))
template <typename T>
std::pair<Tensor<T>, Tensor<T>> cross_sigmoid(const Tensor<T>& att, const Tensor<T>& gate);

// FFN(norm(x)), without the outer residual.
template <typename T>
Tensor<T> ffn_forward(const Tensor<T>& x, const FfnWeights<T>& w);

// Pre-fusion path outputs, for isolation checks and dumps.
template <typename T>
struct DabTrace {
    Tensor<T> att_out;
    Tensor<T> gate_out;
    std::optional<GatedDaTrace<T>> gated;
};

template <typename T>
Tensor<T> dab_forward(const Tensor<T>& x, const DabWeights<T>& w, DabTrace<T>* trace = nullptr);

// Constant (α_w x C) or (1 x C) averaging kernel that carries per-channel
// temperature scales onto the alpha slice.
template <typename T>
ConvWeights<T> temperature_mapping(std::size_t channels, std::size_t alpha_width, TempGranularity granularity);

}  // namespace ram
