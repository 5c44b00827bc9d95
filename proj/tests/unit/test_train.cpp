#include <cmath>
#include <fstream>

#include "doctest.h"
#include "ram/checkpoint.hpp"
#include "ram/degrade.hpp"
#include "ram/model.hpp"
#include "ram/ops.hpp"
#include "ram/train.hpp"
#include "support.hpp"

using ram::Shape;
using T1 = ram::Tensor<double>;
using F1 = ram::Tensor<float>;

namespace {

std::vector<ram::TrainPair> toy_pairs(std::size_t count, std::size_t size) {
    std::vector<ram::TrainPair> out;
    for (std::size_t i = 0; i < count; ++i) {
        const F1 clean = ram::synthetic_image<float>(size, size, 10 + i);
        ram::DegradationSpec s;
        s.seed = 20 + i;
        out.push_back({"p" + std::to_string(i), ram::degrade(clean, s), clean});
    }
    return out;
}

ram::TrainConfig toy_train(std::size_t steps) {
    ram::TrainConfig c;
    c.steps = steps;
    c.batch = 2;
    c.patch = 16;
    c.lr = 1e-3;
    c.seed = 3;
    return c;
}

bool same_params(const ram::RamModel<float>& a, const ram::RamModel<float>& b) {
    const auto pa = ram::model_parameters(a), pb = ram::model_parameters(b);
    if (pa.size() != pb.size()) return false;
    for (std::size_t i = 0; i < pa.size(); ++i)
        if (!test::bit_equal(pa[i], pb[i])) return false;
    return true;
}

std::string error_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const ram::FormatError& e) {
        return e.what();
    }
    return "";
}

}  // namespace

TEST_SUITE("trainer") {

TEST_CASE("l1 loss examples and subgradient") {
    ram::GradTape<double> tape;
    ram::TapeScope<double> scope(tape);
    const T1 pred = tape.watch(T1(Shape{1, 1, 1, 3}, std::vector<double>{1.0, 2.0, 5.0}));
    const T1 target(Shape{1, 1, 1, 3}, std::vector<double>{0.0, 4.0, 5.0});
    const T1 loss = ram::l1_loss(pred, target);
    CHECK(loss.item() == doctest::Approx(1.0));
    tape.backward(loss);
    const auto g = tape.grad(pred).to_vector();
    CHECK(g[0] == doctest::Approx(1.0 / 3));
    CHECK(g[1] == doctest::Approx(-1.0 / 3));
    CHECK(g[2] == 0.0);
    CHECK_THROWS_AS(ram::l1_loss(pred, T1(Shape{1, 1, 1, 2}, 0.0)), ram::DimensionError);
}

TEST_CASE("adam step examples") {
    ram::TrainConfig cfg;
    cfg.lr = 0.01;
    SUBCASE("zero gradient leaves the parameter alone") {
        std::vector<T1> p{T1(Shape{1, 2, 1, 1}, 1.5)};
        auto st = ram::AdamState<double>::zeros_like(p);
        ram::adam_step(p, {T1(Shape{1, 2, 1, 1}, 0.0)}, st, cfg);
        CHECK(p[0].to_vector() == std::vector<double>{1.5, 1.5});
        CHECK(st.t == 1);
    }
    SUBCASE("first step moves by lr against the gradient sign") {
        std::vector<T1> p{T1(Shape{1, 3, 1, 1}, 0.0)};
        auto st = ram::AdamState<double>::zeros_like(p);
        ram::adam_step(p, {T1(Shape{1, 3, 1, 1}, std::vector<double>{4.0, -0.5, 1e-3})}, st, cfg);
        CHECK(p[0].at(0) == doctest::Approx(-0.01).epsilon(1e-6));
        CHECK(p[0].at(1) == doctest::Approx(0.01).epsilon(1e-6));
        CHECK(p[0].at(2) == doctest::Approx(-0.01).epsilon(1e-4));
    }
    SUBCASE("minimizes a quadratic") {
        cfg.lr = 0.05;
        std::vector<T1> p{T1::scalar(-2.0)};
        auto st = ram::AdamState<double>::zeros_like(p);
        for (int i = 0; i < 2000; ++i) {
            ram::GradTape<double> tape;
            ram::TapeScope<double> scope(tape);
            const T1 w = tape.watch(p[0]);
            const T1 d = ram::add(w, T1::scalar(-3.0));
            tape.backward(ram::mul(d, d));
            ram::adam_step(p, {tape.grad(w)}, st, cfg);
        }
        CHECK(std::abs(p[0].item() - 3.0) <= 1e-2);
    }
    SUBCASE("count mismatch") {
        std::vector<T1> p{T1::scalar(1.0)};
        auto st = ram::AdamState<double>::zeros_like(p);
        CHECK_THROWS_AS(ram::adam_step(p, {}, st, cfg), ram::DimensionError);
    }
}

TEST_CASE("train config validation and json") {
    ram::TrainConfig c;
    c.patch = 12;
    CHECK_THROWS_AS(c.validate(), ram::ConfigError);
    c = {};
    c.loss = "l2";
    CHECK_THROWS_AS(c.validate(), ram::ConfigError);
    c = toy_train(7);
    CHECK(ram::train_config_from_json(ram::to_json(c)) == c);
    CHECK_THROWS_AS(ram::train_config_from_json({{"stepz", 3}}), ram::ConfigError);
}

TEST_CASE("zero learning rate leaves weights untouched") {
    const auto pairs = toy_pairs(2, 24);
    auto cfg = toy_train(3);
    cfg.lr = 0.0;
    auto m = ram::build<float>(ram::tiny_config(4, 1));
    const auto before = m;
    ram::TrainState<float> st;
    ram::train(m, st, pairs, cfg);
    CHECK(same_params(m, before));
    CHECK(st.step == 3);
}

TEST_CASE("training is deterministic and resumes bit-exactly") {
    const auto pairs = toy_pairs(3, 24);
    const auto cfg = toy_train(6);
    auto run = [&](ram::RamModel<float>& m, ram::TrainState<float>& st, const ram::TrainConfig& c,
                   const ram::TrainHooks& h = {}) { return ram::train(m, st, pairs, c, h); };

    auto m1 = ram::build<float>(ram::tiny_config(4, 1)), m2 = m1;
    ram::TrainState<float> s1, s2;
    const auto l1 = run(m1, s1, cfg), l2 = run(m2, s2, cfg);
    CHECK(l1 == l2);
    CHECK(same_params(m1, m2));
    CHECK(l1.size() == 6);

    test::TempDir dir("resume");
    auto m3 = ram::build<float>(ram::tiny_config(4, 1));
    ram::TrainState<float> s3;
    auto ck = cfg;
    ck.checkpoint_every = 3;
    ram::TrainHooks hooks;
    hooks.on_checkpoint = [&](std::size_t step) { ram::save_checkpoint(dir / ("s" + std::to_string(step)), m3, &s3); };
    run(m3, s3, ck, hooks);
    CHECK(same_params(m3, m1));
    REQUIRE(std::filesystem::exists(dir / "s3"));

    auto loaded = ram::load_checkpoint<float>(dir / "s3");
    CHECK(loaded.has_optimizer);
    CHECK(loaded.state.step == 3);
    const auto tail = run(loaded.model, loaded.state, cfg);
    CHECK(same_params(loaded.model, m1));
    CHECK(tail == std::vector<double>(l1.begin() + 3, l1.end()));
}

TEST_CASE("overfitting a single pair lowers the loss") {
    auto pairs = toy_pairs(1, 16);
    auto cfg = toy_train(80);
    cfg.batch = 1;
    auto m = ram::build<float>(ram::tiny_config(4, 2));
    ram::TrainState<float> st;
    std::size_t calls = 0;
    ram::TrainHooks hooks;
    hooks.on_step = [&](std::size_t, double loss) {
        ++calls;
        CHECK(std::isfinite(loss));
    };
    const auto losses = ram::train(m, st, pairs, cfg, hooks);
    CHECK(calls == 80);
    auto mean = [&](std::size_t from) {
        double s = 0;
        for (std::size_t i = from; i < from + 10; ++i) s += losses[i];
        return s / 10;
    };
    CHECK(mean(70) < mean(0));
}

TEST_CASE("load_pairs skips unusable entries") {
    test::TempDir dir("pairs");
    ram::write_synthetic_set(dir / "clean", 2, 16, 16, 1);
    ram::DegradationSpec s;
    auto entries = ram::make_pair_set(dir / "clean", {s}, dir / "out", dir / "out" / "m.json");
    entries.push_back({dir / "missing.png", dir / "missing.png", ram::DegradationKind::noise, {}, 0});
    CHECK(ram::load_pairs(entries, 16).size() == 2);
    CHECK_THROWS_AS(ram::load_pairs(entries, 24), ram::DataError);
}

TEST_CASE("checkpoint round trip") {
    test::TempDir dir("ckpt");
    auto m = ram::build<float>(ram::tiny_config(4, 5));
    ram::TrainState<float> st;
    ram::train(m, st, toy_pairs(2, 16), toy_train(2));
    ram::save_checkpoint(dir / "a.ckpt", m, &st);

    const auto back = ram::load_checkpoint<float>(dir / "a.ckpt");
    CHECK(same_params(back.model, m));
    CHECK(back.model.cfg == m.cfg);
    CHECK(back.state.step == st.step);
    CHECK(back.state.rng_state == st.rng_state);
    CHECK(back.state.adam.t == st.adam.t);
    for (std::size_t i = 0; i < st.adam.m.size(); ++i) {
        CHECK(test::bit_equal(back.state.adam.m[i], st.adam.m[i]));
        CHECK(test::bit_equal(back.state.adam.v[i], st.adam.v[i]));
    }
    const F1 img = ram::synthetic_image<float>(16, 16, 1);
    CHECK(test::bit_equal(ram::forward(back.model, img), ram::forward(m, img)));

    std::uint64_t n = 0;
    for (const auto& p : ram::model_parameters(m)) n += p.numel();
    CHECK(ram::checkpoint_scalar_count(dir / "a.ckpt") == 3 * n);
    ram::save_checkpoint(dir / "w.ckpt", m);
    CHECK(ram::checkpoint_scalar_count(dir / "w.ckpt") == n);
    CHECK_FALSE(ram::load_checkpoint<float>(dir / "w.ckpt").has_optimizer);

    auto into = ram::build<float>(ram::tiny_config(4, 99));
    ram::load_weights_into(into, dir / "w.ckpt");
    CHECK(same_params(into, m));
    // Double-precision models read single-precision files.
    const auto wide = ram::load_checkpoint<double>(dir / "w.ckpt");
    CHECK(ram::model_parameters(wide.model).size() == ram::model_parameters(m).size());
}

TEST_CASE("corrupt checkpoints are rejected with the offending piece named") {
    test::TempDir dir("bad");
    const auto m = ram::build<float>(ram::tiny_config(4, 5));
    const auto path = dir / "w.ckpt";
    ram::save_checkpoint(path, m);
    const auto size = std::filesystem::file_size(path);

    SUBCASE("truncation") {
        std::filesystem::resize_file(path, size - 6);
        const std::string msg = error_of([&] { ram::load_checkpoint<float>(path); });
        CHECK(msg.find("head.bias") != std::string::npos);
    }
    SUBCASE("magic") {
        {
            std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
            f.write("NOTACKPT", 8);
        }
        CHECK(error_of([&] { ram::load_checkpoint<float>(path); }).find("magic") != std::string::npos);
    }
    SUBCASE("version") {
        {
            std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
            f.seekp(8);
            const char v[4] = {9, 0, 0, 0};
            f.write(v, 4);
        }
        CHECK(error_of([&] { ram::load_checkpoint<float>(path); }).find("version 9") != std::string::npos);
    }
    SUBCASE("shape mismatch against a built model") {
        auto wider = ram::build<float>(ram::tiny_config(8, 5));
        const std::string msg = error_of([&] { ram::load_weights_into(wider, path); });
        CHECK(msg.find("patch_embed.kernel") != std::string::npos);
    }
    CHECK_THROWS_AS(ram::load_checkpoint<float>(dir / "absent.ckpt"), ram::DataError);
}

}  // TEST_SUITE
