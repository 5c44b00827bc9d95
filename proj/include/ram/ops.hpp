#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "ram/tape.hpp"
#include "ram/tensor.hpp"

// Differentiable tensor operations. Every op records itself on the active
// GradTape<T> (if any input is tracked) and throws NumericError when it
// produces a non-finite value.

namespace ram {

enum class ElementwiseOp { add, sub, mul, sigmoid, gelu };

// Binary ops accept `b` with each extent equal to a's or 1 (per-channel
// (N,C,1,1), per-sample (N,1,1,1), ...). Unary ops ignore `b`.
template <typename T>
Tensor<T> elementwise(ElementwiseOp op, const Tensor<T>& a, const Tensor<T>* b = nullptr);

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> scale(const Tensor<T>& a, T factor);
template <typename T>
Tensor<T> sigmoid(const Tensor<T>& a);
// Exact (erf) GELU.
template <typename T>
Tensor<T> gelu(const Tensor<T>& a);
// |a|, subgradient 0 at 0.
template <typename T>
Tensor<T> abs(const Tensor<T>& a);

// Batched product over the (h, w) matrices of a (N,G,M,K) and b (N,G,K,P)
// tensors. `trans_*` means the stored matrix is the transpose of the operand.
template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b, bool trans_a = false, bool trans_b = false);

// Max-subtracted softmax along `axis` (1, 2 or 3).
template <typename T>
Tensor<T> softmax(const Tensor<T>& x, int axis);

template <typename T>
struct ChannelStats {
    Tensor<T> mean;  // (N,C,1,1)
    Tensor<T> std;   // (N,C,1,1), sqrt(var + eps)
};

inline constexpr double kStatsEps = 1e-6;

// Per (sample, channel) mean and population std over H*W.
template <typename T>
ChannelStats<T> channel_stats(const Tensor<T>& x, double eps = kStatsEps);

// x / max(||x||, eps) along the last axis (w).
template <typename T>
Tensor<T> l2_normalize(const Tensor<T>& x, double eps = 1e-12);

// Even channels -> first, odd channels -> second. Requires even C.
template <typename T>
std::pair<Tensor<T>, Tensor<T>> interleaved_split(const Tensor<T>& x);
template <typename T>
Tensor<T> interleaved_merge(const Tensor<T>& even, const Tensor<T>& odd);

template <typename T>
Tensor<T> concat_channels(const std::vector<Tensor<T>>& parts);
template <typename T>
std::vector<Tensor<T>> split_channels(const Tensor<T>& x, const std::vector<std::size_t>& sizes);

template <typename T>
Tensor<T> reshape(const Tensor<T>& x, Shape shape);

// Scalar (1,1,1,1) reductions.
template <typename T>
Tensor<T> sum(const Tensor<T>& x);
template <typename T>
Tensor<T> mean(const Tensor<T>& x);

}  // namespace ram
