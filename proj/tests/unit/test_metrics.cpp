#include <cmath>

#include "doctest.h"
#include "oracles/reference.hpp"
#include "ram/degrade.hpp"
#include "ram/image.hpp"
#include "ram/metrics.hpp"
#include "ram/ops.hpp"
#include "support.hpp"

using ram::Shape;
using T1 = ram::Tensor<double>;

TEST_SUITE("metrics") {

TEST_CASE("psnr unit values") {
    const T1 a = test::random_tensor(Shape{1, 3, 8, 8}, 1, 0, 1);
    CHECK(ram::psnr(a, a) == ram::kPsnrCap);
    CHECK(ram::psnr(T1(Shape{1, 3, 4, 4}, 0.0), T1(Shape{1, 3, 4, 4}, 0.1)) == doctest::Approx(20.0).epsilon(1e-12));
    CHECK(ram::psnr(T1(Shape{1, 3, 4, 4}, 0.0), T1(Shape{1, 3, 4, 4}, 1.0 / 255.0)) ==
          doctest::Approx(48.1308036087).epsilon(1e-10));
    CHECK(ram::psnr(T1(Shape{1, 1, 2, 2}, 0.0), T1(Shape{1, 1, 2, 2}, 25.5), 255.0) ==
          doctest::Approx(20.0).epsilon(1e-12));
}

TEST_CASE("psnr is symmetric and falls as noise grows") {
    const T1 img = ram::synthetic_image<double>(32, 32, 2);
    const T1 b = test::random_tensor(img.shape(), 3, 0, 1);
    CHECK(ram::psnr(img, b) == ram::psnr(b, img));
    double prev = ram::kPsnrCap;
    for (double sigma : {1.0, 5.0, 15.0, 40.0}) {
        const T1 noisy = ram::add(img, ram::noise_residual<double>(img.shape(), sigma, 4));
        const double p = ram::psnr(img, noisy);
        CHECK(p < prev);
        prev = p;
    }
}

TEST_CASE("ssim unit values") {
    const T1 a = test::random_tensor(Shape{1, 3, 16, 16}, 5, 0, 1);
    CHECK(ram::ssim(a, a) == doctest::Approx(1.0).epsilon(1e-12));
    std::vector<double> inv = a.to_vector();
    for (auto& v : inv) v = 1.0 - v;
    CHECK(ram::ssim(a, T1(a.shape(), inv)) <= 0.0);
}

TEST_CASE("ssim matches the windowed reference on a fixed pair") {
    const T1 a = test::random_tensor(Shape{1, 3, 16, 16}, 6, 0, 1);
    std::vector<double> bv = a.to_vector();
    const T1 noise = test::random_tensor(a.shape(), 7, -0.2, 0.2);
    for (std::size_t i = 0; i < bv.size(); ++i) bv[i] = std::clamp(bv[i] + noise.at(i), 0.0, 1.0);
    const T1 b(a.shape(), bv);
    CHECK(std::abs(ram::ssim(a, b) - oracle::ssim(a.to_vector(), bv, 3, 16, 16, 1.0)) <= 1e-6);
}

TEST_CASE("metric argument checks") {
    CHECK_THROWS_AS(ram::ssim(T1(Shape{1, 3, 10, 16}, 0.5), T1(Shape{1, 3, 10, 16}, 0.5)), ram::DimensionError);
    CHECK_THROWS_AS(ram::psnr(T1(Shape{1, 3, 4, 4}, 0.5), T1(Shape{1, 3, 4, 5}, 0.5)), ram::DimensionError);
}

TEST_CASE("metric report aggregates and groups") {
    std::vector<ram::ImageScore> scores{{"a", "noise", 30.0, 0.8, 20.0, 0.5},
                                        {"b", "rain", 25.0, 0.7, 22.0, 0.6},
                                        {"c", "noise", 31.5, 0.9, 21.0, 0.4}};
    const auto r = ram::metric_report(scores);
    CHECK(r["aggregate"]["count"] == 3);
    CHECK(std::abs(r["aggregate"]["psnr"].get<double>() - (30.0 + 25.0 + 31.5) / 3) <= 1e-9);
    CHECK(std::abs(r["aggregate"]["ssim"].get<double>() - (0.8 + 0.7 + 0.9) / 3) <= 1e-9);
    CHECK(std::abs(r["aggregate"]["psnr_gain"].get<double>() - (86.5 - 63.0) / 3) <= 1e-9);
    CHECK(r["groups"].size() == 2);
    CHECK(std::abs(r["groups"]["noise"]["psnr"].get<double>() - 30.75) <= 1e-9);
    CHECK(r["groups"]["rain"]["count"] == 1);
    CHECK(r["per_image"].size() == 3);
    CHECK(r["per_image"][2]["id"] == "c");
}

TEST_CASE("8-bit PNG round trip is lossless") {
    test::TempDir dir("png");
    ram::PngImage img{5, 3, 3, {}};
    for (std::size_t i = 0; i < 45; ++i) img.pixels.push_back(static_cast<std::uint8_t>(i * 37 % 256));
    CHECK(ram::tensor_to_image(ram::image_to_tensor<double>(img)).pixels == img.pixels);
    CHECK(ram::tensor_to_image(ram::image_to_tensor<float>(img)).pixels == img.pixels);
    ram::write_png(dir / "x.png", img);
    const auto back = ram::read_png(dir / "x.png");
    CHECK(back.width == 5);
    CHECK(back.height == 3);
    CHECK(back.pixels == img.pixels);
    CHECK_THROWS_AS(ram::read_png(dir / "missing.png"), ram::FormatError);
}

TEST_CASE("constant planes render mid-gray") {
    const auto g = ram::plane_to_gray(std::vector<double>(6, 3.0), 2, 3);
    for (auto v : g.pixels) CHECK(v == 128);
    const auto r = ram::plane_to_gray({0.0, 1.0, 2.0, 4.0}, 2, 2);
    CHECK(r.pixels.front() == 0);
    CHECK(r.pixels.back() == 255);
}

}  // TEST_SUITE
