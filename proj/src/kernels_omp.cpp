#include <algorithm>
#include <cstdint>
#include <cstring>
#include <vector>

#include "ram/kernels.hpp"

namespace ram::kernels {
namespace {

using isize = std::ptrdiff_t;

// Fixed 8-lane accumulation; the order is independent of thread count.
template <typename T>
inline T dot(const T* a, const T* b, std::size_t n) {
    T lane[8] = {};
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8)
        for (std::size_t j = 0; j < 8; ++j) lane[j] += a[i + j] * b[i + j];
    T tail = 0;
    for (; i < n; ++i) tail += a[i] * b[i];
    return ((lane[0] + lane[1]) + (lane[2] + lane[3])) + ((lane[4] + lane[5]) + (lane[6] + lane[7])) + tail;
}

template <typename T>
inline T dot_strided(const T* a, const T* b, std::size_t n, std::size_t b_stride) {
    T s = 0;
    for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i * b_stride];
    return s;
}

template <typename T>
inline void axpy(T alpha, const T* x, T* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

// Output columns [lo, hi) whose input column ox*stride + kx - pad is in range.
inline void valid_cols(const ConvGeometry& g, std::size_t kx, isize& lo, isize& hi) {
    const isize s = static_cast<isize>(g.stride);
    const isize off = static_cast<isize>(kx) - static_cast<isize>(g.pad);
    const isize wo = static_cast<isize>(g.w_out());
    // ox*s + off >= 0  ->  ox >= ceil(-off / s)
    lo = off >= 0 ? 0 : (-off + s - 1) / s;
    // ox*s + off <= w-1 ->  ox <= floor((w-1-off)/s)
    const isize top = static_cast<isize>(g.w) - 1 - off;
    hi = top < 0 ? 0 : std::min(wo, top / s + 1);
    if (hi < lo) hi = lo;
}

inline bool pointwise(const ConvGeometry& g) { return g.k == 1 && g.stride == 1 && g.pad == 0; }

}  // namespace

template <typename T>
void conv2d_forward(const ConvGeometry& g, const T* x, const T* weight, const T* bias, T* y) {
    const std::size_t ho = g.h_out(), wo = g.w_out(), plane_out = ho * wo, plane_in = g.h * g.w;
    const std::size_t cin_g = g.cin_per_group(), cout_g = g.cout_per_group(), kk = g.k * g.k;
    const isize rows = static_cast<isize>(g.n * g.c_out);

#pragma omp parallel for schedule(static)
    for (isize r = 0; r < rows; ++r) {
        const std::size_t n = static_cast<std::size_t>(r) / g.c_out, co = static_cast<std::size_t>(r) % g.c_out;
        T* yp = y + static_cast<std::size_t>(r) * plane_out;
        std::fill(yp, yp + plane_out, bias ? bias[co] : T(0));
        const std::size_t ci0 = (co / cout_g) * cin_g;
        for (std::size_t cl = 0; cl < cin_g; ++cl) {
            const T* xp = x + (n * g.c_in + ci0 + cl) * plane_in;
            const T* wk = weight + (co * cin_g + cl) * kk;
            if (pointwise(g)) {
                axpy(wk[0], xp, yp, plane_out);
                continue;
            }
            for (std::size_t ky = 0; ky < g.k; ++ky) {
                for (std::size_t kx = 0; kx < g.k; ++kx) {
                    const T wv = wk[ky * g.k + kx];
                    isize lo, hi;
                    valid_cols(g, kx, lo, hi);
                    const isize off = static_cast<isize>(kx) - static_cast<isize>(g.pad);
                    for (std::size_t oy = 0; oy < ho; ++oy) {
                        const isize iy = static_cast<isize>(oy * g.stride + ky) - static_cast<isize>(g.pad);
                        if (iy < 0 || iy >= static_cast<isize>(g.h)) continue;
                        const T* xrow = xp + static_cast<std::size_t>(iy) * g.w;
                        T* yrow = yp + oy * wo;
                        if (g.stride == 1) {
                            for (isize ox = lo; ox < hi; ++ox) yrow[ox] += wv * xrow[ox + off];
                        } else {
                            for (isize ox = lo; ox < hi; ++ox)
                                yrow[ox] += wv * xrow[ox * static_cast<isize>(g.stride) + off];
                        }
                    }
                }
            }
        }
    }
}

template <typename T>
void conv2d_backward_input_acc(const ConvGeometry& g, const T* grad_y, const T* weight, T* grad_x) {
    const std::size_t ho = g.h_out(), wo = g.w_out(), plane_out = ho * wo, plane_in = g.h * g.w;
    const std::size_t cin_g = g.cin_per_group(), cout_g = g.cout_per_group(), kk = g.k * g.k;
    const isize rows = static_cast<isize>(g.n * g.c_in);

#pragma omp parallel for schedule(static)
    for (isize r = 0; r < rows; ++r) {
        const std::size_t n = static_cast<std::size_t>(r) / g.c_in, ci = static_cast<std::size_t>(r) % g.c_in;
        const std::size_t grp = ci / cin_g, cl = ci % cin_g;
        T* gx = grad_x + static_cast<std::size_t>(r) * plane_in;
        for (std::size_t j = 0; j < cout_g; ++j) {
            const std::size_t co = grp * cout_g + j;
            const T* gy = grad_y + (n * g.c_out + co) * plane_out;
            const T* wk = weight + (co * cin_g + cl) * kk;
            if (pointwise(g)) {
                axpy(wk[0], gy, gx, plane_in);
                continue;
            }
            for (std::size_t ky = 0; ky < g.k; ++ky) {
                for (std::size_t kx = 0; kx < g.k; ++kx) {
                    const T wv = wk[ky * g.k + kx];
                    isize lo, hi;
                    valid_cols(g, kx, lo, hi);
                    const isize off = static_cast<isize>(kx) - static_cast<isize>(g.pad);
                    for (std::size_t oy = 0; oy < ho; ++oy) {
                        const isize iy = static_cast<isize>(oy * g.stride + ky) - static_cast<isize>(g.pad);
                        if (iy < 0 || iy >= static_cast<isize>(g.h)) continue;
                        T* gxrow = gx + static_cast<std::size_t>(iy) * g.w;
                        const T* gyrow = gy + oy * wo;
                        if (g.stride == 1) {
                            for (isize ox = lo; ox < hi; ++ox) gxrow[ox + off] += wv * gyrow[ox];
                        } else {
                            for (isize ox = lo; ox < hi; ++ox)
                                gxrow[ox * static_cast<isize>(g.stride) + off] += wv * gyrow[ox];
                        }
                    }
                }
            }
        }
    }
}

template <typename T>
void conv2d_backward_params_acc(const ConvGeometry& g, const T* grad_y, const T* x, T* grad_w,
                                T* grad_b) {
    const std::size_t ho = g.h_out(), wo = g.w_out(), plane_out = ho * wo, plane_in = g.h * g.w;
    const std::size_t cin_g = g.cin_per_group(), cout_g = g.cout_per_group(), kk = g.k * g.k;
    const isize couts = static_cast<isize>(g.c_out);

#pragma omp parallel for schedule(static)
    for (isize coi = 0; coi < couts; ++coi) {
        const std::size_t co = static_cast<std::size_t>(coi);
        const std::size_t ci0 = (co / cout_g) * cin_g;
        if (grad_b) {
            T acc = 0;
            for (std::size_t n = 0; n < g.n; ++n) {
                const T* gy = grad_y + (n * g.c_out + co) * plane_out;
                T lane[8] = {};
                std::size_t i = 0;
                for (; i + 8 <= plane_out; i += 8)
                    for (std::size_t j = 0; j < 8; ++j) lane[j] += gy[i + j];
                T s = 0;
                for (; i < plane_out; ++i) s += gy[i];
                acc += ((lane[0] + lane[1]) + (lane[2] + lane[3])) + ((lane[4] + lane[5]) + (lane[6] + lane[7])) + s;
            }
            grad_b[co] += acc;
        }
        if (!grad_w) continue;
        for (std::size_t cl = 0; cl < cin_g; ++cl) {
            T* gw = grad_w + (co * cin_g + cl) * kk;
            if (pointwise(g)) {
                T acc = 0;
                for (std::size_t n = 0; n < g.n; ++n)
                    acc += dot(grad_y + (n * g.c_out + co) * plane_out, x + (n * g.c_in + ci0 + cl) * plane_in,
                               plane_out);
                gw[0] += acc;
                continue;
            }
            for (std::size_t ky = 0; ky < g.k; ++ky) {
                for (std::size_t kx = 0; kx < g.k; ++kx) {
                    isize lo, hi;
                    valid_cols(g, kx, lo, hi);
                    const isize off = static_cast<isize>(kx) - static_cast<isize>(g.pad);
                    T acc = 0;
                    for (std::size_t n = 0; n < g.n; ++n) {
                        const T* gy = grad_y + (n * g.c_out + co) * plane_out;
                        const T* xp = x + (n * g.c_in + ci0 + cl) * plane_in;
                        for (std::size_t oy = 0; oy < ho; ++oy) {
                            const isize iy = static_cast<isize>(oy * g.stride + ky) - static_cast<isize>(g.pad);
                            if (iy < 0 || iy >= static_cast<isize>(g.h) || hi <= lo) continue;
                            const T* xrow = xp + static_cast<std::size_t>(iy) * g.w;
                            const T* gyrow = gy + oy * wo;
                            const auto cnt = static_cast<std::size_t>(hi - lo);
                            if (g.stride == 1)
                                acc += dot(gyrow + lo, xrow + lo + off, cnt);
                            else
                                acc += dot_strided(gyrow + lo, xrow + lo * static_cast<isize>(g.stride) + off, cnt,
                                                   g.stride);
                        }
                    }
                    gw[ky * g.k + kx] += acc;
                }
            }
        }
    }
}

namespace {

template <typename T, bool Accumulate>
void matmul_impl(std::size_t batch, std::size_t m, std::size_t k, std::size_t p, const T* a, bool trans_a,
                 const T* b, bool trans_b, T* c) {
    const isize rows = static_cast<isize>(batch * m);
#pragma omp parallel for schedule(static)
    for (isize r = 0; r < rows; ++r) {
        const std::size_t bi = static_cast<std::size_t>(r) / m, i = static_cast<std::size_t>(r) % m;
        const T* ab = a + bi * m * k;
        const T* bb = b + bi * k * p;
        T* crow = c + bi * m * p + i * p;
        if (!Accumulate) std::fill(crow, crow + p, T(0));

        // Row i of op(a), contiguous.
        std::vector<T> gathered;
        const T* arow = ab + i * k;
        if (trans_a) {
            gathered.resize(k);
            for (std::size_t kk = 0; kk < k; ++kk) gathered[kk] = ab[kk * m + i];
            arow = gathered.data();
        }
        if (trans_b) {
            for (std::size_t j = 0; j < p; ++j) crow[j] += dot(arow, bb + j * k, k);
        } else {
            for (std::size_t kk = 0; kk < k; ++kk) axpy(arow[kk], bb + kk * p, crow, p);
        }
    }
}

}  // namespace

template <typename T>
void matmul(std::size_t batch, std::size_t m, std::size_t k, std::size_t p, const T* a, bool trans_a,
            const T* b, bool trans_b, T* c) {
    matmul_impl<T, false>(batch, m, k, p, a, trans_a, b, trans_b, c);
}

template <typename T>
void matmul_acc(std::size_t batch, std::size_t m, std::size_t k, std::size_t p, const T* a, bool trans_a,
                const T* b, bool trans_b, T* c) {
    matmul_impl<T, true>(batch, m, k, p, a, trans_a, b, trans_b, c);
}

template <typename T>
void broadcast_binary(BinaryOp op, const std::size_t as[4], const T* a, const std::size_t bs[4], const T* b,
                      T* y) {
    const std::size_t plane = as[2] * as[3];
    const bool same = as[0] == bs[0] && as[1] == bs[1] && as[2] == bs[2] && as[3] == bs[3];
    const bool per_plane = bs[2] == 1 && bs[3] == 1;
    const isize rows = static_cast<isize>(as[0] * as[1]);

#pragma omp parallel for schedule(static)
    for (isize r = 0; r < rows; ++r) {
        const std::size_t n = static_cast<std::size_t>(r) / as[1], c = static_cast<std::size_t>(r) % as[1];
        const T* ap = a + static_cast<std::size_t>(r) * plane;
        T* yp = y + static_cast<std::size_t>(r) * plane;
        const std::size_t bn = bs[0] == 1 ? 0 : n, bc = bs[1] == 1 ? 0 : c;
        if (same || per_plane) {
            const T* bp = b + (bn * bs[1] + bc) * bs[2] * bs[3];
            if (same) {
                switch (op) {
                    case BinaryOp::add: for (std::size_t i = 0; i < plane; ++i) yp[i] = ap[i] + bp[i]; break;
                    case BinaryOp::sub: for (std::size_t i = 0; i < plane; ++i) yp[i] = ap[i] - bp[i]; break;
                    case BinaryOp::mul: for (std::size_t i = 0; i < plane; ++i) yp[i] = ap[i] * bp[i]; break;
                }
            } else {
                const T v = bp[0];
                switch (op) {
                    case BinaryOp::add: for (std::size_t i = 0; i < plane; ++i) yp[i] = ap[i] + v; break;
                    case BinaryOp::sub: for (std::size_t i = 0; i < plane; ++i) yp[i] = ap[i] - v; break;
                    case BinaryOp::mul: for (std::size_t i = 0; i < plane; ++i) yp[i] = ap[i] * v; break;
                }
            }
            continue;
        }
        for (std::size_t h = 0; h < as[2]; ++h) {
            for (std::size_t w = 0; w < as[3]; ++w) {
                const std::size_t bi = ((bn * bs[1] + bc) * bs[2] + (bs[2] == 1 ? 0 : h)) * bs[3] + (bs[3] == 1 ? 0 : w);
                const T av = ap[h * as[3] + w], bv = b[bi];
                yp[h * as[3] + w] = op == BinaryOp::add ? av + bv : op == BinaryOp::sub ? av - bv : av * bv;
            }
        }
    }
}

template <typename T>
void broadcast_reduce_acc(const std::size_t as[4], const T* grad, const T* other, const std::size_t bs[4], T* out) {
    for (std::size_t n = 0; n < as[0]; ++n)
        for (std::size_t c = 0; c < as[1]; ++c)
            for (std::size_t h = 0; h < as[2]; ++h)
                for (std::size_t w = 0; w < as[3]; ++w) {
                    const std::size_t i = ((n * as[1] + c) * as[2] + h) * as[3] + w;
                    const std::size_t bi = (((bs[0] == 1 ? 0 : n) * bs[1] + (bs[1] == 1 ? 0 : c)) * bs[2] +
                                            (bs[2] == 1 ? 0 : h)) * bs[3] + (bs[3] == 1 ? 0 : w);
                    out[bi] += other ? grad[i] * other[i] : grad[i];
                }
}

#define RAM_INSTANTIATE_KERNELS(T)                                                                        \
    template void conv2d_forward<T>(const ConvGeometry&, const T*, const T*, const T*, T*);               \
    template void conv2d_backward_input_acc<T>(const ConvGeometry&, const T*, const T*, T*);              \
    template void conv2d_backward_params_acc<T>(const ConvGeometry&, const T*, const T*, T*, T*);         \
    template void matmul<T>(std::size_t, std::size_t, std::size_t, std::size_t, const T*, bool, const T*, \
                            bool, T*);                                                                    \
    template void matmul_acc<T>(std::size_t, std::size_t, std::size_t, std::size_t, const T*, bool,       \
                                const T*, bool, T*);                                                      \
    template void broadcast_binary<T>(BinaryOp, const std::size_t[4], const T*, const std::size_t[4],     \
                                      const T*, T*);                                                      \
    template void broadcast_reduce_acc<T>(const std::size_t[4], const T*, const T*, const std::size_t[4], T*);

RAM_INSTANTIATE_KERNELS(float)
RAM_INSTANTIATE_KERNELS(double)

}  // namespace ram::kernels
