#pragma once

#include <cstddef>
#include <optional>
#include <string>

#include "ram/tensor.hpp"

namespace ram {

// kernel: (c_out, c_in / groups, k, k); bias: (1, c_out, 1, 1).
template <typename T>
struct ConvWeights {
    Tensor<T> kernel;
    std::optional<Tensor<T>> bias;
    std::size_t stride = 1;
    std::size_t padding = 0;
    std::size_t groups = 1;

    std::size_t c_out() const { return kernel.shape().n; }
    std::size_t c_in() const { return kernel.shape().c * groups; }
    std::size_t k() const { return kernel.shape().h; }

    template <class Self, class F>
    static void visit(Self& self, const std::string& prefix, F&& f) {
        f(prefix + "kernel", self.kernel);
        if (self.bias) f(prefix + "bias", *self.bias);
    }
};

// Per-channel affine pair, both (1, C, 1, 1).
template <typename T>
struct NormWeights {
    Tensor<T> gamma;
    Tensor<T> beta;

    template <class Self, class F>
    static void visit(Self& self, const std::string& prefix, F&& f) {
        f(prefix + "gamma", self.gamma);
        f(prefix + "beta", self.beta);
    }
};

inline constexpr double kNormEps = 1e-6;

// Cross-correlation with zero padding; differentiable in x, kernel, bias.
template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const ConvWeights<T>& w);

// Normalizes across channels at every pixel (eps 1e-6), then applies the
// per-channel affine.
template <typename T>
Tensor<T> layer_norm(const Tensor<T>& x, const NormWeights<T>& w, double eps = kNormEps);

// 2x2 pixel unshuffle: (N,C,H,W) -> (N,4C,H/2,W/2), channel c*4 + dy*2 + dx.
template <typename T>
Tensor<T> space_to_depth(const Tensor<T>& x);
// Inverse of space_to_depth: (N,4C,H,W) -> (N,C,2H,2W).
template <typename T>
Tensor<T> depth_to_space(const Tensor<T>& x);

// space_to_depth then a 1x1 conv 4C -> 2C.
template <typename T>
Tensor<T> downsample(const Tensor<T>& x, const ConvWeights<T>& w);
// 1x1 conv C -> 2C then depth_to_space: (N,C,H,W) -> (N,C/2,2H,2W).
template <typename T>
Tensor<T> upsample(const Tensor<T>& x, const ConvWeights<T>& w);

// Mirror padding without edge repetition (not differentiable).
template <typename T>
Tensor<T> reflect_pad(const Tensor<T>& x, std::size_t top, std::size_t bottom, std::size_t left,
                      std::size_t right);
template <typename T>
Tensor<T> crop(const Tensor<T>& x, std::size_t top, std::size_t left, std::size_t height, std::size_t width);

// Index into [0, n) under mirror reflection (…2 1 0 1 2…).
std::size_t reflect_index(std::ptrdiff_t i, std::size_t n);

}  // namespace ram
