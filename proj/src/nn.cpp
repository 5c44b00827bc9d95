#include "ram/nn.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "ram/kernels.hpp"
#include "ram/tape.hpp"

namespace ram {

template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const ConvWeights<T>& w) {
    const Shape& xs = x.shape();
    const Shape& ks = w.kernel.shape();
    if (w.groups == 0 || w.stride == 0) throw DimensionError("conv2d: groups and stride must be positive");
    if (ks.h != ks.w) throw DimensionError("conv2d: kernel must be square, got " + ks.str());
    if (ks.n % w.groups != 0) throw DimensionError("conv2d: groups do not divide output channels");
    if (ks.c * w.groups != xs.c)
        throw DimensionError("conv2d: input has " + std::to_string(xs.c) + " channels, kernel expects " +
                             std::to_string(ks.c * w.groups));
    if (xs.h + 2 * w.padding < ks.h || xs.w + 2 * w.padding < ks.w)
        throw DimensionError("conv2d: input " + xs.str() + " smaller than kernel " + ks.str());
    if (w.bias && w.bias->numel() != ks.n) throw DimensionError("conv2d: bias size mismatch");

    kernels::ConvGeometry g;
    g.n = xs.n;
    g.c_in = xs.c;
    g.h = xs.h;
    g.w = xs.w;
    g.c_out = ks.n;
    g.k = ks.h;
    g.stride = w.stride;
    g.pad = w.padding;
    g.groups = w.groups;
    const Shape ys{xs.n, ks.n, g.h_out(), g.w_out()};
    std::vector<T> y(ys.numel());
    kernels::conv2d_forward(g, x.ptr(), w.kernel.ptr(), w.bias ? w.bias->ptr() : nullptr, y.data());
    require_finite<T>(y, "conv2d");
    Tensor<T> out(ys, std::move(y));

    const Tensor<T> kernel = w.kernel;
    const Tensor<T> bias = w.bias ? *w.bias : Tensor<T>();
    const bool has_bias = w.bias.has_value();
    if (!any_tracked<T>({&x, &kernel, &bias})) return out;
    return record_op<T>("conv2d", out, {&x, &kernel, &bias},
                        [x, kernel, g, has_bias](const T* gy, std::vector<T*>& gin) {
        if (gin[0]) kernels::conv2d_backward_input_acc(g, gy, kernel.ptr(), gin[0]);
        T* gb = has_bias ? gin[2] : nullptr;
        if (gin[1] || gb) kernels::conv2d_backward_params_acc(g, gy, x.ptr(), gin[1], gb);
    });
}

template <typename T>
Tensor<T> layer_norm(const Tensor<T>& x, const NormWeights<T>& w, double eps) {
    const Shape& s = x.shape();
    if (w.gamma.numel() != s.c || w.beta.numel() != s.c)
        throw DimensionError("layer_norm: affine size does not match " + std::to_string(s.c) + " channels");
    const std::size_t plane = s.plane(), C = s.c;
    std::vector<T> y(x.numel()), xhat(x.numel()), inv_std(s.n * plane);
    const T* xp = x.ptr();
    const T* gamma = w.gamma.ptr();
    const T* beta = w.beta.ptr();
    std::vector<T> mu(plane), var(plane);
    for (std::size_t n = 0; n < s.n; ++n) {
        const T* xn = xp + n * C * plane;
        std::fill(mu.begin(), mu.end(), T(0));
        std::fill(var.begin(), var.end(), T(0));
        for (std::size_t c = 0; c < C; ++c)
            for (std::size_t p = 0; p < plane; ++p) mu[p] += xn[c * plane + p];
        for (std::size_t p = 0; p < plane; ++p) mu[p] /= static_cast<T>(C);
        for (std::size_t c = 0; c < C; ++c)
            for (std::size_t p = 0; p < plane; ++p) {
                const T d = xn[c * plane + p] - mu[p];
                var[p] += d * d;
            }
        T* inv = inv_std.data() + n * plane;
        for (std::size_t p = 0; p < plane; ++p)
            inv[p] = T(1) / std::sqrt(var[p] / static_cast<T>(C) + static_cast<T>(eps));
        for (std::size_t c = 0; c < C; ++c) {
            T* xh = xhat.data() + (n * C + c) * plane;
            T* yp = y.data() + (n * C + c) * plane;
            for (std::size_t p = 0; p < plane; ++p) {
                xh[p] = (xn[c * plane + p] - mu[p]) * inv[p];
                yp[p] = xh[p] * gamma[c] + beta[c];
            }
        }
    }
    require_finite<T>(y, "layer_norm");
    Tensor<T> out(s, std::move(y));
    if (!any_tracked<T>({&x, &w.gamma, &w.beta})) return out;
    return record_op<T>("layer_norm", out, {&x, &w.gamma, &w.beta},
                        [s, gamma_t = w.gamma, xhat = std::move(xhat), inv_std = std::move(inv_std)](
                            const T* g, std::vector<T*>& gin) {
        const std::size_t plane = s.plane(), C = s.c;
        const T* gamma = gamma_t.ptr();
        std::vector<T> m1(plane), m2(plane);
        for (std::size_t n = 0; n < s.n; ++n) {
            const std::size_t base = n * C * plane;
            if (gin[1] || gin[2])
                for (std::size_t c = 0; c < C; ++c) {
                    T sg = 0, sgx = 0;
                    for (std::size_t p = 0; p < plane; ++p) {
                        sg += g[base + c * plane + p];
                        sgx += g[base + c * plane + p] * xhat[base + c * plane + p];
                    }
                    if (gin[1]) gin[1][c] += sgx;
                    if (gin[2]) gin[2][c] += sg;
                }
            if (!gin[0]) continue;
            std::fill(m1.begin(), m1.end(), T(0));
            std::fill(m2.begin(), m2.end(), T(0));
            for (std::size_t c = 0; c < C; ++c)
                for (std::size_t p = 0; p < plane; ++p) {
                    const T gh = g[base + c * plane + p] * gamma[c];
                    m1[p] += gh;
                    m2[p] += gh * xhat[base + c * plane + p];
                }
            const T invc = T(1) / static_cast<T>(C);
            const T* inv = inv_std.data() + n * plane;
            for (std::size_t c = 0; c < C; ++c)
                for (std::size_t p = 0; p < plane; ++p) {
                    const std::size_t i = base + c * plane + p;
                    const T gh = g[i] * gamma[c];
                    gin[0][i] += inv[p] * (gh - m1[p] * invc - xhat[i] * m2[p] * invc);
                }
        }
    });
}

namespace {

// dst[n, c*4 + dy*2 + dx, y, x] <-> src[n, c, 2y + dy, 2x + dx]
template <typename T, bool ToDepth, bool Accumulate>
void shuffle(const Shape& wide, const T* src, T* dst) {
    // `wide` is the (N, C, H, W) full-resolution shape.
    const std::size_t ho = wide.h / 2, wo = wide.w / 2;
    for (std::size_t n = 0; n < wide.n; ++n)
        for (std::size_t c = 0; c < wide.c; ++c)
            for (std::size_t dy = 0; dy < 2; ++dy)
                for (std::size_t dx = 0; dx < 2; ++dx) {
                    const std::size_t dc = c * 4 + dy * 2 + dx;
                    for (std::size_t y = 0; y < ho; ++y)
                        for (std::size_t x = 0; x < wo; ++x) {
                            const std::size_t wi = ((n * wide.c + c) * wide.h + 2 * y + dy) * wide.w + 2 * x + dx;
                            const std::size_t di = ((n * wide.c * 4 + dc) * ho + y) * wo + x;
                            if constexpr (ToDepth) {
                                if constexpr (Accumulate) dst[di] += src[wi]; else dst[di] = src[wi];
                            } else {
                                if constexpr (Accumulate) dst[wi] += src[di]; else dst[wi] = src[di];
                            }
                        }
                }
}

}  // namespace

template <typename T>
Tensor<T> space_to_depth(const Tensor<T>& x) {
    const Shape& s = x.shape();
    if (s.h % 2 != 0 || s.w % 2 != 0)
        throw DimensionError("space_to_depth: spatial extents of " + s.str() + " must be even");
    const Shape os{s.n, 4 * s.c, s.h / 2, s.w / 2};
    std::vector<T> y(os.numel());
    shuffle<T, true, false>(s, x.ptr(), y.data());
    Tensor<T> out(os, std::move(y));
    if (!any_tracked<T>({&x})) return out;
    return record_op<T>("space_to_depth", out, {&x}, [s](const T* g, std::vector<T*>& gin) {
        shuffle<T, false, true>(s, g, gin[0]);
    });
}

template <typename T>
Tensor<T> depth_to_space(const Tensor<T>& x) {
    const Shape& s = x.shape();
    if (s.c % 4 != 0) throw DimensionError("depth_to_space: channels of " + s.str() + " not divisible by 4");
    const Shape wide{s.n, s.c / 4, s.h * 2, s.w * 2};
    std::vector<T> y(wide.numel());
    shuffle<T, false, false>(wide, x.ptr(), y.data());
    Tensor<T> out(wide, std::move(y));
    if (!any_tracked<T>({&x})) return out;
    return record_op<T>("depth_to_space", out, {&x}, [wide](const T* g, std::vector<T*>& gin) {
        shuffle<T, true, true>(wide, g, gin[0]);
    });
}

template <typename T>
Tensor<T> downsample(const Tensor<T>& x, const ConvWeights<T>& w) {
    if (w.k() != 1 || w.c_in() != 4 * x.shape().c || w.c_out() != 2 * x.shape().c)
        throw DimensionError("downsample: expects a 1x1 conv " + std::to_string(4 * x.shape().c) + "->" +
                             std::to_string(2 * x.shape().c));
    return conv2d(space_to_depth(x), w);
}

template <typename T>
Tensor<T> upsample(const Tensor<T>& x, const ConvWeights<T>& w) {
    if (w.k() != 1 || w.c_in() != x.shape().c || w.c_out() != 2 * x.shape().c)
        throw DimensionError("upsample: expects a 1x1 conv " + std::to_string(x.shape().c) + "->" +
                             std::to_string(2 * x.shape().c));
    return depth_to_space(conv2d(x, w));
}

std::size_t reflect_index(std::ptrdiff_t i, std::size_t n) {
    if (n == 1) return 0;
    const auto period = static_cast<std::ptrdiff_t>(2 * (n - 1));
    std::ptrdiff_t m = i % period;
    if (m < 0) m += period;
    return static_cast<std::size_t>(m < static_cast<std::ptrdiff_t>(n) ? m : period - m);
}

template <typename T>
Tensor<T> reflect_pad(const Tensor<T>& x, std::size_t top, std::size_t bottom, std::size_t left,
                      std::size_t right) {
    const Shape& s = x.shape();
    const Shape os{s.n, s.c, s.h + top + bottom, s.w + left + right};
    std::vector<T> y(os.numel());
    for (std::size_t nc = 0; nc < s.n * s.c; ++nc)
        for (std::size_t yy = 0; yy < os.h; ++yy) {
            const std::size_t sy = reflect_index(static_cast<std::ptrdiff_t>(yy) - static_cast<std::ptrdiff_t>(top), s.h);
            for (std::size_t xx = 0; xx < os.w; ++xx) {
                const std::size_t sx =
                    reflect_index(static_cast<std::ptrdiff_t>(xx) - static_cast<std::ptrdiff_t>(left), s.w);
                y[(nc * os.h + yy) * os.w + xx] = x.ptr()[(nc * s.h + sy) * s.w + sx];
            }
        }
    return Tensor<T>(os, std::move(y));
}

template <typename T>
Tensor<T> crop(const Tensor<T>& x, std::size_t top, std::size_t left, std::size_t height, std::size_t width) {
    const Shape& s = x.shape();
    if (top + height > s.h || left + width > s.w) throw DimensionError("crop: window outside " + s.str());
    const Shape os{s.n, s.c, height, width};
    std::vector<T> y(os.numel());
    for (std::size_t nc = 0; nc < s.n * s.c; ++nc)
        for (std::size_t yy = 0; yy < height; ++yy)
            std::copy_n(x.ptr() + (nc * s.h + top + yy) * s.w + left, width, y.data() + (nc * height + yy) * width);
    return Tensor<T>(os, std::move(y));
}

#define RAM_INSTANTIATE_NN(T)                                                                          \
    template Tensor<T> conv2d<T>(const Tensor<T>&, const ConvWeights<T>&);                              \
    template Tensor<T> layer_norm<T>(const Tensor<T>&, const NormWeights<T>&, double);                  \
    template Tensor<T> space_to_depth<T>(const Tensor<T>&);                                             \
    template Tensor<T> depth_to_space<T>(const Tensor<T>&);                                             \
    template Tensor<T> downsample<T>(const Tensor<T>&, const ConvWeights<T>&);                          \
    template Tensor<T> upsample<T>(const Tensor<T>&, const ConvWeights<T>&);                            \
    template Tensor<T> reflect_pad<T>(const Tensor<T>&, std::size_t, std::size_t, std::size_t, std::size_t); \
    template Tensor<T> crop<T>(const Tensor<T>&, std::size_t, std::size_t, std::size_t, std::size_t);

RAM_INSTANTIATE_NN(float)
RAM_INSTANTIATE_NN(double)

}  // namespace ram
