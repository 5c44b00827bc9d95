#include <cmath>

#include "doctest.h"
#include "oracles/reference.hpp"
#include "ram/blocks.hpp"
#include "ram/nn.hpp"
#include "ram/ops.hpp"
#include "support.hpp"

using ram::Shape;
using T1 = ram::Tensor<double>;

namespace {

ram::ConvWeights<double> conv_weights(std::size_t cin, std::size_t cout, std::size_t k, std::size_t groups,
                                      std::uint64_t seed, bool bias = true) {
    ram::ConvWeights<double> w;
    w.kernel = test::random_tensor(Shape{cout, cin / groups, k, k}, seed);
    if (bias) w.bias = test::random_tensor(Shape{1, cout, 1, 1}, seed + 1);
    w.padding = k / 2;
    w.groups = groups;
    return w;
}

ram::NormWeights<double> unit_norm(std::size_t c) {
    return {T1(Shape{1, c, 1, 1}, 1.0), T1(Shape{1, c, 1, 1}, 0.0)};
}

}  // namespace

TEST_SUITE("nn_ops") {

TEST_CASE("1x1 conv on a single pixel is w*x + b") {
    ram::ConvWeights<double> w;
    w.kernel = T1(Shape{1, 1, 1, 1}, 2.5);
    w.bias = T1(Shape{1, 1, 1, 1}, -0.75);
    CHECK(ram::conv2d(T1::scalar(3.0), w).item() == 2.5 * 3.0 - 0.75);
}

TEST_CASE("3x3 centre-tap identity kernel reproduces the input") {
    const std::size_t C = 3;
    std::vector<double> k(C * C * 9, 0.0);
    for (std::size_t c = 0; c < C; ++c) k[(c * C + c) * 9 + 4] = 1.0;
    ram::ConvWeights<double> w;
    w.kernel = T1(Shape{C, C, 3, 3}, k);
    w.padding = 1;
    const T1 x = test::random_tensor(Shape{2, C, 7, 5}, 3);
    CHECK(test::bit_equal(ram::conv2d(x, w), x));
}

TEST_CASE("conv2d matches the direct loop oracle") {
    SUBCASE("depthwise 3x3 on 1x4x8x8") {
        const auto w = conv_weights(4, 4, 3, 4, 11);
        const T1 x = test::random_tensor(Shape{1, 4, 8, 8}, 12);
        CHECK(test::max_abs_diff(ram::conv2d(x, w).to_vector(), oracle::conv(oracle::from(x), w).v) <= 1e-12);
    }
    SUBCASE("grouped, strided, dense") {
        for (std::size_t groups : {1u, 2u}) {
            auto w = conv_weights(4, 6, 3, groups, 20 + groups);
            w.stride = 2;
            const T1 x = test::random_tensor(Shape{2, 4, 9, 7}, 13);
            const T1 y = ram::conv2d(x, w);
            CHECK(y.shape() == Shape{2, 6, 5, 4});
            CHECK(test::max_abs_diff(y.to_vector(), oracle::conv(oracle::from(x), w).v) <= 1e-12);
        }
    }
}

TEST_CASE("conv2d output extent follows floor((H + 2p - k) / s) + 1") {
    auto w = conv_weights(2, 2, 3, 1, 1);
    w.padding = 0;
    w.stride = 2;
    CHECK(ram::conv2d(test::random_tensor(Shape{1, 2, 10, 9}, 2), w).shape() == Shape{1, 2, 4, 4});
}

TEST_CASE("conv2d rejects channel and extent mismatches") {
    const auto w = conv_weights(4, 4, 3, 1, 1);
    CHECK_THROWS_AS(ram::conv2d(test::random_tensor(Shape{1, 3, 8, 8}, 1), w), ram::DimensionError);
    auto tight = conv_weights(1, 1, 3, 1, 1);
    tight.padding = 0;
    CHECK_THROWS_AS(ram::conv2d(test::random_tensor(Shape{1, 1, 2, 2}, 1), tight), ram::DimensionError);
}

TEST_CASE("conv2d is linear without bias") {
    const auto w = conv_weights(3, 5, 3, 1, 31, false);
    const T1 x = test::random_tensor(Shape{1, 3, 6, 6}, 32), y = test::random_tensor(Shape{1, 3, 6, 6}, 33);
    const double a = 0.7, b = -1.3;
    const T1 lhs = ram::conv2d(ram::add(ram::scale(x, a), ram::scale(y, b)), w);
    const T1 rhs = ram::add(ram::scale(ram::conv2d(x, w), a), ram::scale(ram::conv2d(y, w), b));
    double num = 0, den = 0;
    for (std::size_t i = 0; i < lhs.numel(); ++i) {
        num += std::pow(lhs.at(i) - rhs.at(i), 2);
        den += std::pow(rhs.at(i), 2);
    }
    CHECK(std::sqrt(num / den) <= 1e-10);
}

TEST_CASE("depthwise conv never mixes channels") {
    const auto w = conv_weights(6, 6, 3, 6, 41);
    const T1 x = test::random_tensor(Shape{1, 6, 5, 5}, 42);
    const T1 base = ram::conv2d(x, w);
    for (std::size_t j = 0; j < 6; ++j) {
        auto v = x.to_vector();
        for (std::size_t p = 0; p < 25; ++p) v[j * 25 + p] += 0.5;
        const T1 y = ram::conv2d(T1(x.shape(), v), w);
        for (std::size_t c = 0; c < 6; ++c) {
            bool same = true;
            for (std::size_t p = 0; p < 25; ++p) same = same && y.at(c * 25 + p) == base.at(c * 25 + p);
            CHECK(same == (c != j));
        }
    }
}

TEST_CASE("layer_norm examples") {
    SUBCASE("constant across channels gives zeros") {
        std::vector<double> v(4 * 9);
        for (std::size_t p = 0; p < 9; ++p)
            for (std::size_t c = 0; c < 4; ++c) v[c * 9 + p] = double(p) * 0.3 - 1;
        const T1 y = ram::layer_norm(T1(Shape{1, 4, 3, 3}, v), unit_norm(4));
        for (double e : y.data()) CHECK(e == 0.0);
    }
    SUBCASE("gamma 0, beta c gives c") {
        ram::NormWeights<double> nw{T1(Shape{1, 3, 1, 1}, 0.0), T1(Shape{1, 3, 1, 1}, 1.25)};
        const T1 y = ram::layer_norm(test::random_tensor(Shape{2, 3, 4, 4}, 5), nw);
        for (double e : y.data()) CHECK(e == 1.25);
    }
    SUBCASE("per-pixel statistics of the normalized output") {
        const T1 x = test::random_tensor(Shape{2, 8, 5, 5}, 6, -3, 3);
        const T1 y = ram::layer_norm(x, unit_norm(8));
        for (std::size_t n = 0; n < 2; ++n)
            for (std::size_t p = 0; p < 25; ++p) {
                double m = 0, q = 0;
                for (std::size_t c = 0; c < 8; ++c) m += y.at((n * 8 + c) * 25 + p);
                m /= 8;
                for (std::size_t c = 0; c < 8; ++c) q += std::pow(y.at((n * 8 + c) * 25 + p) - m, 2);
                CHECK(std::abs(m) <= 1e-6);
                CHECK(std::abs(q / 8 - 1) <= 1e-4);
            }
    }
    SUBCASE("matches the oracle with a non-trivial affine") {
        ram::NormWeights<double> nw{test::random_tensor(Shape{1, 5, 1, 1}, 7), test::random_tensor(Shape{1, 5, 1, 1}, 8)};
        const T1 x = test::random_tensor(Shape{1, 5, 4, 6}, 9);
        CHECK(test::max_abs_diff(ram::layer_norm(x, nw).to_vector(), oracle::layer_norm(oracle::from(x), nw).v) <=
              1e-12);
    }
    CHECK_THROWS_AS(ram::layer_norm(test::random_tensor(Shape{1, 4, 2, 2}, 1), unit_norm(3)), ram::DimensionError);
}

TEST_CASE("layer_norm is invariant to per-pixel affine rescaling across channels") {
    const T1 x = test::random_tensor(Shape{1, 6, 4, 4}, 10);
    std::vector<double> v = x.to_vector();
    for (std::size_t p = 0; p < 16; ++p) {
        const double a = 0.5 + 0.1 * double(p), b = -2.0 + 0.25 * double(p);
        for (std::size_t c = 0; c < 6; ++c) v[c * 16 + p] = a * v[c * 16 + p] + b;
    }
    const T1 y0 = ram::layer_norm(x, unit_norm(6)), y1 = ram::layer_norm(T1(x.shape(), v), unit_norm(6));
    // The 1e-6 epsilon makes the invariance approximate for a != 1.
    CHECK(test::max_abs_diff(y0, y1) <= 1e-4);
}

TEST_CASE("space_to_depth of a 2x2 checkerboard gives constant channels") {
    std::vector<double> v(8 * 8);
    for (std::size_t y = 0; y < 8; ++y)
        for (std::size_t x = 0; x < 8; ++x) v[y * 8 + x] = double((x + y) % 2);
    const T1 s = ram::space_to_depth(T1(Shape{1, 1, 8, 8}, v));
    CHECK(s.shape() == Shape{1, 4, 4, 4});
    for (std::size_t c = 0; c < 4; ++c) {
        const double expect = double(((c / 2) + (c % 2)) % 2);  // channel = dy*2 + dx
        for (std::size_t p = 0; p < 16; ++p) CHECK(s.at(c * 16 + p) == expect);
    }
    const T1 x = test::random_tensor(Shape{2, 3, 6, 4}, 3);
    CHECK(test::bit_equal(ram::depth_to_space(ram::space_to_depth(x)), x));
}

TEST_CASE("down/upsample shapes") {
    ram::ParamInit init(1);
    const auto down = ram::make_conv<double>(init, 16, 8, 1);
    const auto up = ram::make_conv<double>(init, 8, 16, 1);
    const T1 x = test::random_tensor(Shape{1, 4, 8, 8}, 2);
    const T1 d = ram::downsample(x, down);
    CHECK(d.shape() == Shape{1, 8, 4, 4});
    CHECK(ram::upsample(d, up).shape() == x.shape());
    CHECK_THROWS_AS(ram::downsample(test::random_tensor(Shape{1, 4, 7, 8}, 2), down), ram::DimensionError);
}

TEST_CASE("reflect padding and crop") {
    const T1 x(Shape{1, 1, 1, 4}, std::vector<double>{1, 2, 3, 4});
    const T1 p = ram::reflect_pad(x, 0, 0, 2, 3);
    const std::vector<double> expect{3, 2, 1, 2, 3, 4, 3, 2, 1};
    CHECK(p.to_vector() == expect);
    CHECK(test::bit_equal(ram::crop(p, 0, 2, 1, 4), x));
    CHECK(ram::reflect_index(-1, 5) == 1);
    CHECK(ram::reflect_index(5, 5) == 3);
}

TEST_CASE("make_conv initialization") {
    ram::ParamInit a(9), b(9);
    const auto w1 = ram::make_conv<double>(a, 4, 6, 3, 2);
    const auto w2 = ram::make_conv<double>(b, 4, 6, 3, 2);
    CHECK(test::bit_equal(w1.kernel, w2.kernel));
    CHECK(w1.kernel.shape() == Shape{6, 2, 3, 3});
    CHECK(w1.padding == 1);
    for (double v : w1.bias->data()) CHECK(v == 0.0);
    for (double v : w1.kernel.data()) CHECK(std::abs(v) <= 0.04);
}

}  // TEST_SUITE
