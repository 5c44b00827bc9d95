#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "ram/tensor.hpp"

namespace ram {

// 8-bit interleaved pixels, 1 (gray) or 3 (RGB) channels.
struct PngImage {
    std::size_t width = 0, height = 0, channels = 3;
    std::vector<std::uint8_t> pixels;
};

// Decodes any PNG into RGB (or gray when `gray` is set). FormatError on failure.
PngImage read_png(const std::filesystem::path& path, bool gray = false);
void write_png(const std::filesystem::path& path, const PngImage& img);

// (1, 3, H, W) tensor with values v / 255.
template <typename T>
Tensor<T> image_to_tensor(const PngImage& img);
// Sample `n` of a (N, 3, H, W) tensor, mapped with round(clamp(v, 0, 1) * 255).
template <typename T>
PngImage tensor_to_image(const Tensor<T>& t, std::size_t n = 0);

template <typename T>
Tensor<T> load_image(const std::filesystem::path& path) {
    return image_to_tensor<T>(read_png(path));
}
template <typename T>
void save_image(const std::filesystem::path& path, const Tensor<T>& t) {
    write_png(path, tensor_to_image(t));
}

// Min-max normalized grayscale rendering of an H x W plane; a constant plane
// becomes mid-gray (128).
PngImage plane_to_gray(const std::vector<double>& plane, std::size_t height, std::size_t width);

}  // namespace ram
