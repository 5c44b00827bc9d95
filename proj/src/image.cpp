#include "ram/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <string>

#include "ram/errors.hpp"

namespace ram {

PngImage read_png(const std::filesystem::path& path, bool gray) {
    png_image img;
    std::memset(&img, 0, sizeof img);
    img.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&img, path.c_str()))
        throw FormatError("cannot decode PNG '" + path.string() + "': " + img.message);
    img.format = gray ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
    PngImage out;
    out.width = img.width;
    out.height = img.height;
    out.channels = gray ? 1 : 3;
    out.pixels.resize(PNG_IMAGE_SIZE(img));
    if (!png_image_finish_read(&img, nullptr, out.pixels.data(), 0, nullptr)) {
        const std::string msg = img.message;
        png_image_free(&img);
        throw FormatError("cannot decode PNG '" + path.string() + "': " + msg);
    }
    return out;
}

void write_png(const std::filesystem::path& path, const PngImage& img) {
    if (img.channels != 1 && img.channels != 3) throw DimensionError("write_png: 1 or 3 channels required");
    if (img.pixels.size() != img.width * img.height * img.channels)
        throw DimensionError("write_png: pixel buffer does not match " + std::to_string(img.width) + "x" +
                             std::to_string(img.height));
    png_image out;
    std::memset(&out, 0, sizeof out);
    out.version = PNG_IMAGE_VERSION;
    out.width = static_cast<png_uint_32>(img.width);
    out.height = static_cast<png_uint_32>(img.height);
    out.format = img.channels == 1 ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
    if (!png_image_write_to_file(&out, path.c_str(), 0, img.pixels.data(), 0, nullptr))
        throw DataError("cannot write PNG '" + path.string() + "': " + out.message);
}

template <typename T>
Tensor<T> image_to_tensor(const PngImage& img) {
    if (img.channels != 3) throw DimensionError("image_to_tensor: RGB image required");
    const std::size_t plane = img.width * img.height;
    std::vector<T> v(3 * plane);
    for (std::size_t p = 0; p < plane; ++p)
        for (std::size_t c = 0; c < 3; ++c) v[c * plane + p] = static_cast<T>(img.pixels[p * 3 + c]) / T(255);
    return Tensor<T>(Shape{1, 3, img.height, img.width}, std::move(v));
}

template <typename T>
PngImage tensor_to_image(const Tensor<T>& t, std::size_t n) {
    const Shape& s = t.shape();
    if (s.c != 3 || n >= s.n) throw DimensionError("tensor_to_image: expected (N,3,H,W), got " + s.str());
    PngImage img;
    img.width = s.w;
    img.height = s.h;
    img.channels = 3;
    img.pixels.resize(3 * s.plane());
    const T* src = t.ptr() + n * 3 * s.plane();
    for (std::size_t c = 0; c < 3; ++c)
        for (std::size_t p = 0; p < s.plane(); ++p) {
            const double v = std::clamp(static_cast<double>(src[c * s.plane() + p]), 0.0, 1.0);
            img.pixels[p * 3 + c] = static_cast<std::uint8_t>(std::lround(v * 255.0));
        }
    return img;
}

PngImage plane_to_gray(const std::vector<double>& plane, std::size_t height, std::size_t width) {
    if (plane.size() != height * width) throw DimensionError("plane_to_gray: size mismatch");
    PngImage img;
    img.width = width;
    img.height = height;
    img.channels = 1;
    img.pixels.assign(plane.size(), 128);
    if (plane.empty()) return img;
    const auto [lo, hi] = std::minmax_element(plane.begin(), plane.end());
    const double range = *hi - *lo;
    if (!(range > 1e-12 * std::max(1.0, std::abs(*hi)))) return img;
    for (std::size_t i = 0; i < plane.size(); ++i)
        img.pixels[i] = static_cast<std::uint8_t>(std::lround((plane[i] - *lo) / range * 255.0));
    return img;
}

template Tensor<float> image_to_tensor<float>(const PngImage&);
template Tensor<double> image_to_tensor<double>(const PngImage&);
template PngImage tensor_to_image<float>(const Tensor<float>&, std::size_t);
template PngImage tensor_to_image<double>(const Tensor<double>&, std::size_t);

}  // namespace ram
