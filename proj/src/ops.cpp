#include "ram/ops.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "ram/kernels.hpp"

namespace ram {
namespace {

template <typename T>
Tensor<T> finish(const char* op, Shape shape, std::vector<T> data) {
    require_finite<T>(data, op);
    return Tensor<T>(shape, std::move(data));
}

void dims(const Shape& s, std::size_t out[4]) {
    out[0] = s.n;
    out[1] = s.c;
    out[2] = s.h;
    out[3] = s.w;
}

void check_broadcast(const char* op, const Shape& a, const Shape& b) {
    const std::size_t as[4] = {a.n, a.c, a.h, a.w}, bs[4] = {b.n, b.c, b.h, b.w};
    for (int i = 0; i < 4; ++i)
        if (bs[i] != as[i] && bs[i] != 1)
            throw DimensionError(std::string(op) + ": shape " + b.str() + " does not broadcast to " + a.str());
}

template <typename T>
Tensor<T> binary(kernels::BinaryOp op, const char* name, const Tensor<T>& a, const Tensor<T>& b) {
    check_broadcast(name, a.shape(), b.shape());
    std::size_t as[4], bs[4];
    dims(a.shape(), as);
    dims(b.shape(), bs);
    std::vector<T> y(a.numel());
    kernels::broadcast_binary(op, as, a.ptr(), bs, b.ptr(), y.data());
    auto out = finish<T>(name, a.shape(), std::move(y));
    if (!any_tracked<T>({&a, &b})) return out;
    return record_op<T>(name, out, {&a, &b}, [a, b, op](const T* g, std::vector<T*>& gin) {
        std::size_t as[4], bs[4];
        dims(a.shape(), as);
        dims(b.shape(), bs);
        const std::size_t n = a.numel();
        if (gin[0]) {
            if (op == kernels::BinaryOp::mul) {
                // grad_a = g * broadcast(b)
                std::vector<T> bb(n);
                std::vector<T> ones(n, T(1));
                kernels::broadcast_binary(kernels::BinaryOp::mul, as, ones.data(), bs, b.ptr(), bb.data());
                for (std::size_t i = 0; i < n; ++i) gin[0][i] += g[i] * bb[i];
            } else {
                for (std::size_t i = 0; i < n; ++i) gin[0][i] += g[i];
            }
        }
        if (gin[1]) {
            if (op == kernels::BinaryOp::mul) {
                kernels::broadcast_reduce_acc(as, g, a.ptr(), bs, gin[1]);
            } else if (op == kernels::BinaryOp::add) {
                kernels::broadcast_reduce_acc<T>(as, g, nullptr, bs, gin[1]);
            } else {
                std::vector<T> neg(b.numel(), T(0));
                kernels::broadcast_reduce_acc<T>(as, g, nullptr, bs, neg.data());
                for (std::size_t i = 0; i < neg.size(); ++i) gin[1][i] -= neg[i];
            }
        }
    });
}

template <typename T>
inline T gelu_value(T x) {
    return T(0.5) * x * (T(1) + std::erf(x / std::sqrt(T(2))));
}

template <typename T>
inline T gelu_slope(T x) {
    const T cdf = T(0.5) * (T(1) + std::erf(x / std::sqrt(T(2))));
    const T pdf = std::exp(T(-0.5) * x * x) / std::sqrt(T(2) * T(M_PI));
    return cdf + x * pdf;
}

}  // namespace

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
    return binary(kernels::BinaryOp::add, "add", a, b);
}

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
    return binary(kernels::BinaryOp::sub, "sub", a, b);
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
    return binary(kernels::BinaryOp::mul, "mul", a, b);
}

template <typename T>
Tensor<T> scale(const Tensor<T>& a, T factor) {
    std::vector<T> y(a.numel());
    const auto x = a.data();
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = x[i] * factor;
    auto out = finish<T>("scale", a.shape(), std::move(y));
    if (!any_tracked<T>({&a})) return out;
    return record_op<T>("scale", out, {&a}, [factor, n = a.numel()](const T* g, std::vector<T*>& gin) {
        for (std::size_t i = 0; i < n; ++i) gin[0][i] += g[i] * factor;
    });
}

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& a) {
    std::vector<T> y(a.numel());
    const auto x = a.data();
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(y.size()); ++i)
        y[static_cast<std::size_t>(i)] = T(1) / (T(1) + std::exp(-x[static_cast<std::size_t>(i)]));
    auto out = finish<T>("sigmoid", a.shape(), std::move(y));
    if (!any_tracked<T>({&a})) return out;
    return record_op<T>("sigmoid", out, {&a}, [out](const T* g, std::vector<T*>& gin) {
        const auto s = out.data();
        for (std::size_t i = 0; i < s.size(); ++i) gin[0][i] += g[i] * s[i] * (T(1) - s[i]);
    });
}

template <typename T>
Tensor<T> gelu(const Tensor<T>& a) {
    std::vector<T> y(a.numel());
    const auto x = a.data();
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(y.size()); ++i)
        y[static_cast<std::size_t>(i)] = gelu_value(x[static_cast<std::size_t>(i)]);
    auto out = finish<T>("gelu", a.shape(), std::move(y));
    if (!any_tracked<T>({&a})) return out;
    return record_op<T>("gelu", out, {&a}, [a](const T* g, std::vector<T*>& gin) {
        const auto x = a.data();
        for (std::size_t i = 0; i < x.size(); ++i) gin[0][i] += g[i] * gelu_slope(x[i]);
    });
}

template <typename T>
Tensor<T> abs(const Tensor<T>& a) {
    std::vector<T> y(a.numel());
    const auto x = a.data();
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = std::abs(x[i]);
    auto out = finish<T>("abs", a.shape(), std::move(y));
    if (!any_tracked<T>({&a})) return out;
    return record_op<T>("abs", out, {&a}, [a](const T* g, std::vector<T*>& gin) {
        const auto x = a.data();
        for (std::size_t i = 0; i < x.size(); ++i)
            gin[0][i] += x[i] > T(0) ? g[i] : x[i] < T(0) ? -g[i] : T(0);
    });
}

template <typename T>
Tensor<T> elementwise(ElementwiseOp op, const Tensor<T>& a, const Tensor<T>* b) {
    const bool binary_op = op == ElementwiseOp::add || op == ElementwiseOp::sub || op == ElementwiseOp::mul;
    if (binary_op && !b) throw DimensionError("elementwise: binary op needs a second operand");
    switch (op) {
        case ElementwiseOp::add: return add(a, *b);
        case ElementwiseOp::sub: return sub(a, *b);
        case ElementwiseOp::mul: return mul(a, *b);
        case ElementwiseOp::sigmoid: return sigmoid(a);
        case ElementwiseOp::gelu: return gelu(a);
    }
    throw DimensionError("elementwise: unknown op");
}

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b, bool trans_a, bool trans_b) {
    const Shape& as = a.shape();
    const Shape& bs = b.shape();
    if (as.n != bs.n || as.c != bs.c)
        throw DimensionError("matmul: batch extents differ " + as.str() + " vs " + bs.str());
    const std::size_t m = trans_a ? as.w : as.h, k = trans_a ? as.h : as.w;
    const std::size_t kb = trans_b ? bs.w : bs.h, p = trans_b ? bs.h : bs.w;
    if (k != kb) throw DimensionError("matmul: inner extents differ " + as.str() + " vs " + bs.str());
    const std::size_t batch = as.n * as.c;
    std::vector<T> y(batch * m * p);
    kernels::matmul(batch, m, k, p, a.ptr(), trans_a, b.ptr(), trans_b, y.data());
    const Shape out_shape{as.n, as.c, m, p};
    auto out = finish<T>("matmul", out_shape, std::move(y));
    if (!any_tracked<T>({&a, &b})) return out;
    return record_op<T>("matmul", out, {&a, &b},
                        [a, b, trans_a, trans_b, batch, m, k, p](const T* g, std::vector<T*>& gin) {
        // c = op(A) op(B), g = dL/dc (m x p)
        if (gin[0]) {
            if (!trans_a)  // dA = g op(B)^T  (m x k)
                kernels::matmul_acc(batch, m, p, k, g, false, b.ptr(), !trans_b, gin[0]);
            else  // stored A is (k x m): dA = op(B) g^T
                kernels::matmul_acc(batch, k, p, m, b.ptr(), trans_b, g, true, gin[0]);
        }
        if (gin[1]) {
            if (!trans_b)  // dB = op(A)^T g  (k x p)
                kernels::matmul_acc(batch, k, m, p, a.ptr(), !trans_a, g, false, gin[1]);
            else  // stored B is (p x k): dB = g^T op(A)
                kernels::matmul_acc(batch, p, m, k, g, true, a.ptr(), trans_a, gin[1]);
        }
    });
}

namespace {
struct AxisLayout {
    std::size_t outer, length, inner;
};

AxisLayout axis_layout(const Shape& s, int axis) {
    const std::size_t d[4] = {s.n, s.c, s.h, s.w};
    if (axis < 1 || axis > 3) throw DimensionError("softmax: axis must be 1, 2 or 3");
    AxisLayout l{1, d[axis], 1};
    for (int i = 0; i < axis; ++i) l.outer *= d[i];
    for (int i = axis + 1; i < 4; ++i) l.inner *= d[i];
    return l;
}
}  // namespace

template <typename T>
Tensor<T> softmax(const Tensor<T>& x, int axis) {
    const AxisLayout l = axis_layout(x.shape(), axis);
    std::vector<T> y(x.numel());
    const T* xp = x.ptr();
    const auto lines = static_cast<std::ptrdiff_t>(l.outer * l.inner);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t li = 0; li < lines; ++li) {
        const std::size_t o = static_cast<std::size_t>(li) / l.inner, in = static_cast<std::size_t>(li) % l.inner;
        const std::size_t base = o * l.length * l.inner + in;
        T mx = xp[base];
        for (std::size_t j = 1; j < l.length; ++j) mx = std::max(mx, xp[base + j * l.inner]);
        T total = 0;
        for (std::size_t j = 0; j < l.length; ++j) {
            const T e = std::exp(xp[base + j * l.inner] - mx);
            y[base + j * l.inner] = e;
            total += e;
        }
        for (std::size_t j = 0; j < l.length; ++j) y[base + j * l.inner] /= total;
    }
    auto out = finish<T>("softmax", x.shape(), std::move(y));
    if (!any_tracked<T>({&x})) return out;
    return record_op<T>("softmax", out, {&x}, [out, l](const T* g, std::vector<T*>& gin) {
        const T* s = out.ptr();
        for (std::size_t o = 0; o < l.outer; ++o)
            for (std::size_t in = 0; in < l.inner; ++in) {
                const std::size_t base = o * l.length * l.inner + in;
                T dotv = 0;
                for (std::size_t j = 0; j < l.length; ++j) dotv += g[base + j * l.inner] * s[base + j * l.inner];
                for (std::size_t j = 0; j < l.length; ++j) {
                    const std::size_t idx = base + j * l.inner;
                    gin[0][idx] += s[idx] * (g[idx] - dotv);
                }
            }
    });
}

template <typename T>
ChannelStats<T> channel_stats(const Tensor<T>& x, double eps) {
    const Shape& s = x.shape();
    const std::size_t plane = s.plane(), rows = s.n * s.c;
    if (plane == 0) throw DimensionError("channel_stats: empty spatial extent");
    std::vector<T> mu(rows), sd(rows);
    const T* xp = x.ptr();
    for (std::size_t r = 0; r < rows; ++r) {
        const T* row = xp + r * plane;
        T acc = 0;
        for (std::size_t i = 0; i < plane; ++i) acc += row[i];
        const T m = acc / static_cast<T>(plane);
        T var = 0;
        for (std::size_t i = 0; i < plane; ++i) var += (row[i] - m) * (row[i] - m);
        var /= static_cast<T>(plane);
        mu[r] = m;
        sd[r] = std::sqrt(var + static_cast<T>(eps));
    }
    const Shape stat_shape{s.n, s.c, 1, 1};
    auto mean_t = finish<T>("channel_stats", stat_shape, std::move(mu));
    auto std_t = finish<T>("channel_stats", stat_shape, std::move(sd));
    if (!any_tracked<T>({&x})) return {mean_t, std_t};

    auto mean_out = record_op<T>("channel_stats.mean", mean_t, {&x}, [plane, rows](const T* g, std::vector<T*>& gin) {
        for (std::size_t r = 0; r < rows; ++r) {
            const T v = g[r] / static_cast<T>(plane);
            for (std::size_t i = 0; i < plane; ++i) gin[0][r * plane + i] += v;
        }
    });
    auto std_out = record_op<T>("channel_stats.std", std_t, {&x},
                                [x, mean_t, std_t, plane, rows](const T* g, std::vector<T*>& gin) {
        const T* xp = x.ptr();
        for (std::size_t r = 0; r < rows; ++r) {
            const T m = mean_t.at(r);
            const T coef = g[r] / (static_cast<T>(plane) * std_t.at(r));
            for (std::size_t i = 0; i < plane; ++i) gin[0][r * plane + i] += coef * (xp[r * plane + i] - m);
        }
    });
    return {mean_out, std_out};
}

template <typename T>
Tensor<T> l2_normalize(const Tensor<T>& x, double eps) {
    const Shape& s = x.shape();
    const std::size_t len = s.w, rows = s.n * s.c * s.h;
    std::vector<T> y(x.numel()), norms(rows);
    const T* xp = x.ptr();
    for (std::size_t r = 0; r < rows; ++r) {
        T acc = 0;
        for (std::size_t i = 0; i < len; ++i) acc += xp[r * len + i] * xp[r * len + i];
        const T nrm = std::max(std::sqrt(acc), static_cast<T>(eps));
        norms[r] = nrm;
        for (std::size_t i = 0; i < len; ++i) y[r * len + i] = xp[r * len + i] / nrm;
    }
    auto out = finish<T>("l2_normalize", s, std::move(y));
    if (!any_tracked<T>({&x})) return out;
    return record_op<T>("l2_normalize", out, {&x},
                        [out, norms = std::move(norms), len, rows, eps](const T* g, std::vector<T*>& gin) {
        const T* yp = out.ptr();
        for (std::size_t r = 0; r < rows; ++r) {
            const T nrm = norms[r];
            if (nrm <= static_cast<T>(eps)) {
                for (std::size_t i = 0; i < len; ++i) gin[0][r * len + i] += g[r * len + i] / nrm;
                continue;
            }
            T proj = 0;
            for (std::size_t i = 0; i < len; ++i) proj += g[r * len + i] * yp[r * len + i];
            for (std::size_t i = 0; i < len; ++i)
                gin[0][r * len + i] += (g[r * len + i] - yp[r * len + i] * proj) / nrm;
        }
    });
}

namespace {

// Copies channel planes: dst channel j <- src channel map[j].
template <typename T>
void gather_planes(const Shape& src_shape, const T* src, std::size_t dst_c, const std::vector<std::size_t>& map,
                   T* dst) {
    const std::size_t plane = src_shape.plane();
    for (std::size_t n = 0; n < src_shape.n; ++n)
        for (std::size_t j = 0; j < dst_c; ++j)
            std::copy_n(src + (n * src_shape.c + map[j]) * plane, plane, dst + (n * dst_c + j) * plane);
}

template <typename T>
void scatter_planes_acc(const Shape& dst_shape, T* dst, std::size_t src_c, const std::vector<std::size_t>& map,
                        const T* src) {
    const std::size_t plane = dst_shape.plane();
    for (std::size_t n = 0; n < dst_shape.n; ++n)
        for (std::size_t j = 0; j < src_c; ++j) {
            T* d = dst + (n * dst_shape.c + map[j]) * plane;
            const T* s = src + (n * src_c + j) * plane;
            for (std::size_t i = 0; i < plane; ++i) d[i] += s[i];
        }
}

template <typename T>
Tensor<T> select_channels(const char* op, const Tensor<T>& x, std::vector<std::size_t> map) {
    const Shape& s = x.shape();
    const Shape os{s.n, map.size(), s.h, s.w};
    std::vector<T> y(os.numel());
    gather_planes(s, x.ptr(), map.size(), map, y.data());
    Tensor<T> out(os, std::move(y));
    if (!any_tracked<T>({&x})) return out;
    return record_op<T>(op, out, {&x}, [s, map = std::move(map)](const T* g, std::vector<T*>& gin) {
        scatter_planes_acc(s, gin[0], map.size(), map, g);
    });
}

}  // namespace

template <typename T>
std::pair<Tensor<T>, Tensor<T>> interleaved_split(const Tensor<T>& x) {
    const std::size_t c = x.shape().c;
    if (c % 2 != 0) throw DimensionError("interleaved_split: channel count " + std::to_string(c) + " is odd");
    std::vector<std::size_t> even(c / 2), odd(c / 2);
    for (std::size_t k = 0; k < c / 2; ++k) {
        even[k] = 2 * k;
        odd[k] = 2 * k + 1;
    }
    return {select_channels("interleaved_split.even", x, std::move(even)),
            select_channels("interleaved_split.odd", x, std::move(odd))};
}

template <typename T>
Tensor<T> interleaved_merge(const Tensor<T>& even, const Tensor<T>& odd) {
    const Shape& s = even.shape();
    if (!(s == odd.shape())) throw DimensionError("interleaved_merge: shapes differ " + s.str() + " vs " + odd.shape().str());
    const Shape os{s.n, 2 * s.c, s.h, s.w};
    const std::size_t plane = s.plane();
    std::vector<T> y(os.numel());
    for (std::size_t n = 0; n < s.n; ++n)
        for (std::size_t k = 0; k < s.c; ++k) {
            std::copy_n(even.ptr() + (n * s.c + k) * plane, plane, y.data() + (n * os.c + 2 * k) * plane);
            std::copy_n(odd.ptr() + (n * s.c + k) * plane, plane, y.data() + (n * os.c + 2 * k + 1) * plane);
        }
    Tensor<T> out(os, std::move(y));
    if (!any_tracked<T>({&even, &odd})) return out;
    return record_op<T>("interleaved_merge", out, {&even, &odd}, [s, os, plane](const T* g, std::vector<T*>& gin) {
        for (std::size_t n = 0; n < s.n; ++n)
            for (std::size_t k = 0; k < s.c; ++k)
                for (int part = 0; part < 2; ++part) {
                    if (!gin[part]) continue;
                    const T* src = g + (n * os.c + 2 * k + part) * plane;
                    T* dst = gin[part] + (n * s.c + k) * plane;
                    for (std::size_t i = 0; i < plane; ++i) dst[i] += src[i];
                }
    });
}

template <typename T>
Tensor<T> concat_channels(const std::vector<Tensor<T>>& parts) {
    if (parts.empty()) throw DimensionError("concat_channels: no inputs");
    const Shape& s0 = parts.front().shape();
    std::size_t total = 0;
    for (const auto& p : parts) {
        const Shape& s = p.shape();
        if (s.n != s0.n || s.h != s0.h || s.w != s0.w)
            throw DimensionError("concat_channels: extents differ " + s0.str() + " vs " + s.str());
        total += s.c;
    }
    const Shape os{s0.n, total, s0.h, s0.w};
    const std::size_t plane = s0.plane();
    std::vector<T> y(os.numel());
    std::vector<std::size_t> offsets;
    std::size_t off = 0;
    for (const auto& p : parts) {
        offsets.push_back(off);
        const std::size_t c = p.shape().c;
        for (std::size_t n = 0; n < os.n; ++n)
            std::copy_n(p.ptr() + n * c * plane, c * plane, y.data() + (n * total + off) * plane);
        off += c;
    }
    Tensor<T> out(os, std::move(y));
    std::vector<const Tensor<T>*> inputs;
    for (const auto& p : parts) inputs.push_back(&p);
    if (!active_tape<T>()) return out;
    std::vector<std::size_t> widths;
    for (const auto& p : parts) widths.push_back(p.shape().c);
    return record_op<T>("concat_channels", out, inputs,
                        [os, plane, offsets, widths](const T* g, std::vector<T*>& gin) {
        for (std::size_t k = 0; k < widths.size(); ++k) {
            if (!gin[k]) continue;
            const std::size_t c = widths[k];
            for (std::size_t n = 0; n < os.n; ++n) {
                const T* src = g + (n * os.c + offsets[k]) * plane;
                T* dst = gin[k] + n * c * plane;
                for (std::size_t i = 0; i < c * plane; ++i) dst[i] += src[i];
            }
        }
    });
}

template <typename T>
std::vector<Tensor<T>> split_channels(const Tensor<T>& x, const std::vector<std::size_t>& sizes) {
    const std::size_t total = std::accumulate(sizes.begin(), sizes.end(), std::size_t{0});
    if (total != x.shape().c)
        throw DimensionError("split_channels: sizes sum to " + std::to_string(total) + ", tensor has " +
                             std::to_string(x.shape().c) + " channels");
    std::vector<Tensor<T>> parts;
    std::size_t off = 0;
    for (const std::size_t width : sizes) {
        std::vector<std::size_t> map(width);
        std::iota(map.begin(), map.end(), off);
        parts.push_back(select_channels("split_channels", x, std::move(map)));
        off += width;
    }
    return parts;
}

template <typename T>
Tensor<T> reshape(const Tensor<T>& x, Shape shape) {
    Tensor<T> out = x.reshaped(shape);
    if (!any_tracked<T>({&x})) return out;
    return record_op<T>("reshape", out, {&x}, [n = x.numel()](const T* g, std::vector<T*>& gin) {
        for (std::size_t i = 0; i < n; ++i) gin[0][i] += g[i];
    });
}

template <typename T>
Tensor<T> sum(const Tensor<T>& x) {
    T acc = 0;
    for (const T v : x.data()) acc += v;
    auto out = finish<T>("sum", Shape{1, 1, 1, 1}, std::vector<T>{acc});
    if (!any_tracked<T>({&x})) return out;
    return record_op<T>("sum", out, {&x}, [n = x.numel()](const T* g, std::vector<T*>& gin) {
        for (std::size_t i = 0; i < n; ++i) gin[0][i] += g[0];
    });
}

template <typename T>
Tensor<T> mean(const Tensor<T>& x) {
    if (x.numel() == 0) throw DimensionError("mean of empty tensor");
    T acc = 0;
    for (const T v : x.data()) acc += v;
    const T inv = T(1) / static_cast<T>(x.numel());
    auto out = finish<T>("mean", Shape{1, 1, 1, 1}, std::vector<T>{acc * inv});
    if (!any_tracked<T>({&x})) return out;
    return record_op<T>("mean", out, {&x}, [n = x.numel(), inv](const T* g, std::vector<T*>& gin) {
        for (std::size_t i = 0; i < n; ++i) gin[0][i] += g[0] * inv;
    });
}

#define RAM_INSTANTIATE_OPS(T)                                                                        \
    template Tensor<T> elementwise<T>(ElementwiseOp, const Tensor<T>&, const Tensor<T>*);              \
    template Tensor<T> add<T>(const Tensor<T>&, const Tensor<T>&);                                     \
    template Tensor<T> sub<T>(const Tensor<T>&, const Tensor<T>&);                                     \
    template Tensor<T> mul<T>(const Tensor<T>&, const Tensor<T>&);                                     \
    template Tensor<T> scale<T>(const Tensor<T>&, T);                                                  \
    template Tensor<T> sigmoid<T>(const Tensor<T>&);                                                   \
    template Tensor<T> gelu<T>(const Tensor<T>&);                                                      \
    template Tensor<T> abs<T>(const Tensor<T>&);                                                       \
    template Tensor<T> matmul<T>(const Tensor<T>&, const Tensor<T>&, bool, bool);                      \
    template Tensor<T> softmax<T>(const Tensor<T>&, int);                                              \
    template ChannelStats<T> channel_stats<T>(const Tensor<T>&, double);                               \
    template Tensor<T> l2_normalize<T>(const Tensor<T>&, double);                                      \
    template std::pair<Tensor<T>, Tensor<T>> interleaved_split<T>(const Tensor<T>&);                   \
    template Tensor<T> interleaved_merge<T>(const Tensor<T>&, const Tensor<T>&);                       \
    template Tensor<T> concat_channels<T>(const std::vector<Tensor<T>>&);                              \
    template std::vector<Tensor<T>> split_channels<T>(const Tensor<T>&, const std::vector<std::size_t>&); \
    template Tensor<T> reshape<T>(const Tensor<T>&, Shape);                                            \
    template Tensor<T> sum<T>(const Tensor<T>&);                                                       \
    template Tensor<T> mean<T>(const Tensor<T>&);

RAM_INSTANTIATE_OPS(float)
RAM_INSTANTIATE_OPS(double)

}  // namespace ram
