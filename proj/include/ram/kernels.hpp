#pragma once

#include <cstddef>

// Raw compute kernels on contiguous NCHW buffers.
//
// `ram::kernels` holds the OpenMP-parallel versions used by the ops.
// `ram::kernels::reference` holds plain serial loops with the same
// signatures; tests compare the two and `bench_kernels` times them.
//
// Parallel kernels split work only across independent outputs (batch x
// channel rows), and every output element is reduced in a fixed order, so
// results do not depend on the thread count.
//
// Kernels whose name ends in `_acc` add into their output buffer.

namespace ram::kernels {

struct ConvGeometry {
    std::size_t n = 1, c_in = 1, h = 1, w = 1;
    std::size_t c_out = 1, k = 1, stride = 1, pad = 0, groups = 1;

    std::size_t h_out() const { return (h + 2 * pad - k) / stride + 1; }
    std::size_t w_out() const { return (w + 2 * pad - k) / stride + 1; }
    std::size_t cin_per_group() const { return c_in / groups; }
    std::size_t cout_per_group() const { return c_out / groups; }
};

// y = conv(x, weight) + bias; bias may be null.
template <typename T>
void conv2d_forward(const ConvGeometry& g, const T* x, const T* weight, const T* bias, T* y);
// grad_x += conv^T(grad_y, weight)
template <typename T>
void conv2d_backward_input_acc(const ConvGeometry& g, const T* grad_y, const T* weight, T* grad_x);
// grad_w += sum_n,pixels grad_y * x ; grad_b += sum grad_y (either may be null)
template <typename T>
void conv2d_backward_params_acc(const ConvGeometry& g, const T* grad_y, const T* x, T* grad_w,
                                T* grad_b);

// c[b] = op(a[b]) * op(b[b]) for `batch` independent matrices.
// op(a) is (m x k), op(b) is (k x p); a transposed operand is stored as its
// transpose (k x m / p x k).
template <typename T>
void matmul(std::size_t batch, std::size_t m, std::size_t k, std::size_t p, const T* a, bool trans_a,
            const T* b, bool trans_b, T* c);
// Same, accumulating into c.
template <typename T>
void matmul_acc(std::size_t batch, std::size_t m, std::size_t k, std::size_t p, const T* a,
                bool trans_a, const T* b, bool trans_b, T* c);

// Binary elementwise op with `b` broadcast: b_index = (n % bn, c % bc, ...)
// where each b extent is 1 or equal to the a extent.
enum class BinaryOp { add, sub, mul };
template <typename T>
void broadcast_binary(BinaryOp op, const std::size_t a_shape[4], const T* a, const std::size_t b_shape[4],
                      const T* b, T* y);

// sum-reduce `grad` of a's shape into b's broadcast shape, optionally
// multiplied elementwise by `other` (same shape as grad); adds into out.
template <typename T>
void broadcast_reduce_acc(const std::size_t a_shape[4], const T* grad, const T* other,
                          const std::size_t b_shape[4], T* out);

namespace reference {

template <typename T>
void conv2d_forward(const ConvGeometry& g, const T* x, const T* weight, const T* bias, T* y);
template <typename T>
void conv2d_backward_input_acc(const ConvGeometry& g, const T* grad_y, const T* weight, T* grad_x);
template <typename T>
void conv2d_backward_params_acc(const ConvGeometry& g, const T* grad_y, const T* x, T* grad_w,
                                T* grad_b);
template <typename T>
void matmul(std::size_t batch, std::size_t m, std::size_t k, std::size_t p, const T* a, bool trans_a,
            const T* b, bool trans_b, T* c);
template <typename T>
void broadcast_binary(BinaryOp op, const std::size_t a_shape[4], const T* a, const std::size_t b_shape[4],
                      const T* b, T* y);

}  // namespace reference
}  // namespace ram::kernels
