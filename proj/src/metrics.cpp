#include "ram/metrics.hpp"

#include <array>
#include <cmath>
#include <map>

#include "ram/errors.hpp"

namespace ram {

namespace {

template <typename T>
void check_pair(const Tensor<T>& a, const Tensor<T>& b, const char* what) {
    if (!(a.shape() == b.shape()))
        throw DimensionError(std::string(what) + ": shape " + a.shape().str() + " vs " + b.shape().str());
    if (a.numel() == 0) throw DimensionError(std::string(what) + ": empty image");
}

std::array<double, kSsimWindow> gaussian_window() {
    std::array<double, kSsimWindow> g{};
    double total = 0;
    const double r = double(kSsimWindow / 2);
    for (std::size_t i = 0; i < kSsimWindow; ++i) {
        const double d = double(i) - r;
        g[i] = std::exp(-d * d / (2 * kSsimSigma * kSsimSigma));
        total += g[i];
    }
    for (double& v : g) v /= total;
    return g;
}

}  // namespace

template <typename T>
double psnr(const Tensor<T>& a, const Tensor<T>& b, double peak) {
    check_pair(a, b, "psnr");
    double se = 0;
    for (std::size_t i = 0; i < a.numel(); ++i) {
        const double d = double(a.ptr()[i]) - double(b.ptr()[i]);
        se += d * d;
    }
    const double mse = se / double(a.numel());
    if (mse == 0) return kPsnrCap;
    return std::min(kPsnrCap, 10.0 * std::log10(peak * peak / mse));
}

template <typename T>
double ssim(const Tensor<T>& a, const Tensor<T>& b, double peak) {
    check_pair(a, b, "ssim");
    const Shape& s = a.shape();
    if (s.h < kSsimWindow || s.w < kSsimWindow)
        throw DimensionError("ssim: image " + std::to_string(s.h) + "x" + std::to_string(s.w) + " smaller than the " +
                             std::to_string(kSsimWindow) + "x" + std::to_string(kSsimWindow) + " window");
    const auto g = gaussian_window();
    const double c1 = (0.01 * peak) * (0.01 * peak), c2 = (0.03 * peak) * (0.03 * peak);
    const std::size_t oh = s.h - kSsimWindow + 1, ow = s.w - kSsimWindow + 1;

    // Separable filtering of x, y, x^2, y^2, xy: rows first, then columns.
    double total = 0;
    std::vector<double> rows(5 * s.h * ow);
    for (std::size_t nc = 0; nc < s.n * s.c; ++nc) {
        const T* x = a.ptr() + nc * s.plane();
        const T* y = b.ptr() + nc * s.plane();
        for (std::size_t r = 0; r < s.h; ++r)
            for (std::size_t c = 0; c < ow; ++c) {
                double m[5] = {0, 0, 0, 0, 0};
                for (std::size_t k = 0; k < kSsimWindow; ++k) {
                    const double xv = double(x[r * s.w + c + k]), yv = double(y[r * s.w + c + k]);
                    m[0] += g[k] * xv;
                    m[1] += g[k] * yv;
                    m[2] += g[k] * xv * xv;
                    m[3] += g[k] * yv * yv;
                    m[4] += g[k] * xv * yv;
                }
                for (std::size_t q = 0; q < 5; ++q) rows[(q * s.h + r) * ow + c] = m[q];
            }
        double plane_sum = 0;
        for (std::size_t r = 0; r < oh; ++r)
            for (std::size_t c = 0; c < ow; ++c) {
                double m[5] = {0, 0, 0, 0, 0};
                for (std::size_t k = 0; k < kSsimWindow; ++k)
                    for (std::size_t q = 0; q < 5; ++q) m[q] += g[k] * rows[(q * s.h + r + k) * ow + c];
                const double mx = m[0], my = m[1];
                const double vx = m[2] - mx * mx, vy = m[3] - my * my, cov = m[4] - mx * my;
                plane_sum += ((2 * mx * my + c1) * (2 * cov + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
            }
        total += plane_sum / double(oh * ow);
    }
    return total / double(s.n * s.c);
}

nlohmann::json metric_report(const std::vector<ImageScore>& scores) {
    struct Acc {
        double psnr = 0, ssim = 0, in_psnr = 0, in_ssim = 0;
        std::size_t count = 0;
        void add(const ImageScore& s) {
            psnr += s.psnr;
            ssim += s.ssim;
            in_psnr += s.input_psnr;
            in_ssim += s.input_ssim;
            ++count;
        }
        nlohmann::json json() const {
            const double n = count ? double(count) : 1.0;
            return {{"count", count},           {"psnr", psnr / n},          {"ssim", ssim / n},
                    {"input_psnr", in_psnr / n}, {"input_ssim", in_ssim / n}, {"psnr_gain", (psnr - in_psnr) / n}};
        }
    };
    Acc all;
    std::map<std::string, Acc> groups;
    nlohmann::json per = nlohmann::json::array();
    for (const auto& s : scores) {
        all.add(s);
        groups[s.kind].add(s);
        per.push_back({{"id", s.id},
                       {"kind", s.kind},
                       {"psnr", s.psnr},
                       {"ssim", s.ssim},
                       {"input_psnr", s.input_psnr},
                       {"input_ssim", s.input_ssim}});
    }
    nlohmann::json j;
    j["aggregate"] = all.json();
    j["groups"] = nlohmann::json::object();
    for (const auto& [k, acc] : groups) j["groups"][k] = acc.json();
    j["per_image"] = per;
    return j;
}

template double psnr<float>(const Tensor<float>&, const Tensor<float>&, double);
template double psnr<double>(const Tensor<double>&, const Tensor<double>&, double);
template double ssim<float>(const Tensor<float>&, const Tensor<float>&, double);
template double ssim<double>(const Tensor<double>&, const Tensor<double>&, double);

}  // namespace ram
