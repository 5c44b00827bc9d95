#pragma once

#include <string>
#include <vector>

#include "ram/tensor.hpp"
#include "json.hpp"

namespace ram {

inline constexpr double kPsnrCap = 100.0;

// 10 log10(peak^2 / MSE) over every element; identical inputs give kPsnrCap.
template <typename T>
double psnr(const Tensor<T>& a, const Tensor<T>& b, double peak = 1.0);

// Single-scale SSIM with an 11x11 Gaussian window (sigma 1.5), K1 = 0.01,
// K2 = 0.03, averaged over valid window positions, channels and samples.
template <typename T>
double ssim(const Tensor<T>& a, const Tensor<T>& b, double peak = 1.0);

inline constexpr std::size_t kSsimWindow = 11;
inline constexpr double kSsimSigma = 1.5;

struct ImageScore {
    std::string id;
    std::string kind;
    double psnr = 0, ssim = 0;
    double input_psnr = 0, input_ssim = 0;  // degraded input vs clean
};

// {aggregate, groups: {kind: {...}}, per_image: [...]}. Aggregates are
// arithmetic means in input order.
nlohmann::json metric_report(const std::vector<ImageScore>& scores);

}  // namespace ram
