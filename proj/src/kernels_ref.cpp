// Serial reference kernels: direct loops, no tiling, no OpenMP.

#include "ram/kernels.hpp"

namespace ram::kernels::reference {
namespace {
using isize = std::ptrdiff_t;

inline bool inside(isize v, std::size_t extent) { return v >= 0 && v < static_cast<isize>(extent); }
}  // namespace

template <typename T>
void conv2d_forward(const ConvGeometry& g, const T* x, const T* weight, const T* bias, T* y) {
    const std::size_t ho = g.h_out(), wo = g.w_out();
    const std::size_t cin_g = g.cin_per_group(), cout_g = g.cout_per_group();
    for (std::size_t n = 0; n < g.n; ++n)
        for (std::size_t co = 0; co < g.c_out; ++co)
            for (std::size_t oy = 0; oy < ho; ++oy)
                for (std::size_t ox = 0; ox < wo; ++ox) {
                    T acc = bias ? bias[co] : T(0);
                    for (std::size_t cl = 0; cl < cin_g; ++cl) {
                        const std::size_t ci = (co / cout_g) * cin_g + cl;
                        for (std::size_t ky = 0; ky < g.k; ++ky)
                            for (std::size_t kx = 0; kx < g.k; ++kx) {
                                const isize iy = static_cast<isize>(oy * g.stride + ky) - static_cast<isize>(g.pad);
                                const isize ix = static_cast<isize>(ox * g.stride + kx) - static_cast<isize>(g.pad);
                                if (!inside(iy, g.h) || !inside(ix, g.w)) continue;
                                acc += weight[((co * cin_g + cl) * g.k + ky) * g.k + kx] *
                                       x[((n * g.c_in + ci) * g.h + static_cast<std::size_t>(iy)) * g.w +
                                         static_cast<std::size_t>(ix)];
                            }
                    }
                    y[((n * g.c_out + co) * ho + oy) * wo + ox] = acc;
                }
}

template <typename T>
void conv2d_backward_input_acc(const ConvGeometry& g, const T* grad_y, const T* weight, T* grad_x) {
    const std::size_t ho = g.h_out(), wo = g.w_out();
    const std::size_t cin_g = g.cin_per_group(), cout_g = g.cout_per_group();
    for (std::size_t n = 0; n < g.n; ++n)
        for (std::size_t co = 0; co < g.c_out; ++co)
            for (std::size_t oy = 0; oy < ho; ++oy)
                for (std::size_t ox = 0; ox < wo; ++ox) {
                    const T gy = grad_y[((n * g.c_out + co) * ho + oy) * wo + ox];
                    for (std::size_t cl = 0; cl < cin_g; ++cl) {
                        const std::size_t ci = (co / cout_g) * cin_g + cl;
                        for (std::size_t ky = 0; ky < g.k; ++ky)
                            for (std::size_t kx = 0; kx < g.k; ++kx) {
                                const isize iy = static_cast<isize>(oy * g.stride + ky) - static_cast<isize>(g.pad);
                                const isize ix = static_cast<isize>(ox * g.stride + kx) - static_cast<isize>(g.pad);
                                if (!inside(iy, g.h) || !inside(ix, g.w)) continue;
                                grad_x[((n * g.c_in + ci) * g.h + static_cast<std::size_t>(iy)) * g.w +
                                       static_cast<std::size_t>(ix)] +=
                                    gy * weight[((co * cin_g + cl) * g.k + ky) * g.k + kx];
                            }
                    }
                }
}

template <typename T>
void conv2d_backward_params_acc(const ConvGeometry& g, const T* grad_y, const T* x, T* grad_w, T* grad_b) {
    const std::size_t ho = g.h_out(), wo = g.w_out();
    const std::size_t cin_g = g.cin_per_group(), cout_g = g.cout_per_group();
    for (std::size_t n = 0; n < g.n; ++n)
        for (std::size_t co = 0; co < g.c_out; ++co)
            for (std::size_t oy = 0; oy < ho; ++oy)
                for (std::size_t ox = 0; ox < wo; ++ox) {
                    const T gy = grad_y[((n * g.c_out + co) * ho + oy) * wo + ox];
                    if (grad_b) grad_b[co] += gy;
                    if (!grad_w) continue;
                    for (std::size_t cl = 0; cl < cin_g; ++cl) {
                        const std::size_t ci = (co / cout_g) * cin_g + cl;
                        for (std::size_t ky = 0; ky < g.k; ++ky)
                            for (std::size_t kx = 0; kx < g.k; ++kx) {
                                const isize iy = static_cast<isize>(oy * g.stride + ky) - static_cast<isize>(g.pad);
                                const isize ix = static_cast<isize>(ox * g.stride + kx) - static_cast<isize>(g.pad);
                                if (!inside(iy, g.h) || !inside(ix, g.w)) continue;
                                grad_w[((co * cin_g + cl) * g.k + ky) * g.k + kx] +=
                                    gy * x[((n * g.c_in + ci) * g.h + static_cast<std::size_t>(iy)) * g.w +
                                           static_cast<std::size_t>(ix)];
                            }
                    }
                }
}

template <typename T>
void matmul(std::size_t batch, std::size_t m, std::size_t k, std::size_t p, const T* a, bool trans_a,
            const T* b, bool trans_b, T* c) {
    for (std::size_t bi = 0; bi < batch; ++bi)
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < p; ++j) {
                T acc = 0;
                for (std::size_t kk = 0; kk < k; ++kk) {
                    const T av = trans_a ? a[bi * m * k + kk * m + i] : a[bi * m * k + i * k + kk];
                    const T bv = trans_b ? b[bi * k * p + j * k + kk] : b[bi * k * p + kk * p + j];
                    acc += av * bv;
                }
                c[bi * m * p + i * p + j] = acc;
            }
}

template <typename T>
void broadcast_binary(BinaryOp op, const std::size_t as[4], const T* a, const std::size_t bs[4], const T* b, T* y) {
    for (std::size_t n = 0; n < as[0]; ++n)
        for (std::size_t c = 0; c < as[1]; ++c)
            for (std::size_t h = 0; h < as[2]; ++h)
                for (std::size_t w = 0; w < as[3]; ++w) {
                    const std::size_t i = ((n * as[1] + c) * as[2] + h) * as[3] + w;
                    const std::size_t bi = (((bs[0] == 1 ? 0 : n) * bs[1] + (bs[1] == 1 ? 0 : c)) * bs[2] +
                                            (bs[2] == 1 ? 0 : h)) * bs[3] + (bs[3] == 1 ? 0 : w);
                    switch (op) {
                        case BinaryOp::add: y[i] = a[i] + b[bi]; break;
                        case BinaryOp::sub: y[i] = a[i] - b[bi]; break;
                        case BinaryOp::mul: y[i] = a[i] * b[bi]; break;
                    }
                }
}

#define RAM_INSTANTIATE_REFERENCE(T)                                                                       \
    template void conv2d_forward<T>(const ConvGeometry&, const T*, const T*, const T*, T*);                \
    template void conv2d_backward_input_acc<T>(const ConvGeometry&, const T*, const T*, T*);               \
    template void conv2d_backward_params_acc<T>(const ConvGeometry&, const T*, const T*, T*, T*);          \
    template void matmul<T>(std::size_t, std::size_t, std::size_t, std::size_t, const T*, bool, const T*,  \
                            bool, T*);                                                                     \
    template void broadcast_binary<T>(BinaryOp, const std::size_t[4], const T*, const std::size_t[4],      \
                                      const T*, T*);

RAM_INSTANTIATE_REFERENCE(float)
RAM_INSTANTIATE_REFERENCE(double)

}  // namespace ram::kernels::reference
