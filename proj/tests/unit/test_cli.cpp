#include <fstream>
#include <sstream>

#include "doctest.h"
#include "ram/audit.hpp"
#include "ram/checkpoint.hpp"
#include "ram/cli.hpp"
#include "ram/degrade.hpp"
#include "ram/image.hpp"
#include "ram/metrics.hpp"
#include "ram/model.hpp"
#include "support.hpp"

using ram::Shape;

namespace {

struct Run {
    int code;
    std::string out, err;
};

Run cli(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = ram::run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

void write_text(const std::filesystem::path& p, const std::string& s) {
    std::ofstream(p) << s;
}

// Checkpoint of a C=4 model whose output head is zero, so it restores
// every image to itself.
std::filesystem::path identity_checkpoint(const test::TempDir& dir) {
    auto m = ram::build<float>(ram::tiny_config(4, 1));
    m.head.kernel = ram::Tensor<float>(m.head.kernel.shape(), 0.0f);
    m.head.bias = ram::Tensor<float>(m.head.bias->shape(), 0.0f);
    const auto path = dir / "identity.ckpt";
    ram::save_checkpoint(path, m);
    return path;
}

void write_noise_png(const std::filesystem::path& p, std::size_t h, std::size_t w, std::uint64_t seed) {
    ram::save_image(p, test::random_tensor<float>(Shape{1, 3, h, w}, seed, 0, 1));
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("usage errors exit with code 1") {
    CHECK(cli({}).code == 1);
    CHECK(cli({"frobnicate"}).code == 1);
    CHECK(cli({"count", "--hw", "224"}).code == 1);
    CHECK(cli({"gradcheck", "--size", "2"}).code == 1);
    CHECK(cli({"--help"}).code == 0);
}

TEST_CASE("config problems exit with code 1") {
    test::TempDir dir("cfg");
    write_text(dir / "bad_key.json", R"({"model": {"base_channels": 8, "colour": 1}})");
    const auto r = cli({"count", "--config", (dir / "bad_key.json").string()});
    CHECK(r.code == 1);
    CHECK(r.err.find("colour") != std::string::npos);
    write_text(dir / "bad_value.json", R"({"model": {"base_channels": 7}})");
    CHECK(cli({"count", "--config", (dir / "bad_value.json").string()}).code == 1);
    CHECK(cli({"count", "--config", (dir / "absent.json").string()}).code != 0);
}

TEST_CASE("count --json equals the library audit") {
    const auto r = cli({"count", "--json"});
    REQUIRE(r.code == 0);
    const auto j = nlohmann::json::parse(r.out);
    const ram::RamConfig cfg;
    const auto m = ram::build<float>(cfg);
    CHECK(j["params"]["total"].get<std::uint64_t>() == ram::count_params(m).total);
    CHECK(j["flops"]["total"].get<std::uint64_t>() == ram::count_flops(m, 224, 224).total);
    CHECK(j["flops"]["height"] == 224);

    const auto big = nlohmann::json::parse(cli({"count", "--json", "--hw", "448", "448"}).out);
    const double ratio = big["flops"]["total"].get<double>() / j["flops"]["total"].get<double>();
    CHECK(ratio == doctest::Approx(4.0).epsilon(1e-3));

    const auto table = cli({"count"});
    CHECK(table.code == 0);
    CHECK(table.out.find("patch_embed") != std::string::npos);
    CHECK(table.out.find("attention") != std::string::npos);
}

TEST_CASE("infer honours the padding mode") {
    test::TempDir dir("pad");
    const auto ckpt = identity_checkpoint(dir);
    write_noise_png(dir / "odd.png", 100, 100, 1);

    const auto strict = cli({"infer", "--checkpoint", ckpt.string(), "--input", (dir / "odd.png").string(), "--output",
                             (dir / "s").string(), "--pad", "strict"});
    CHECK(strict.code == 1);

    const auto autom = cli({"infer", "--checkpoint", ckpt.string(), "--input", (dir / "odd.png").string(), "--output",
                            (dir / "a").string(), "--pad", "auto"});
    REQUIRE(autom.code == 0);
    const auto out = ram::read_png(dir / "a" / "odd.png");
    CHECK(out.width == 100);
    CHECK(out.height == 100);
    // Zero head: the global residual passes the input through untouched.
    CHECK(out.pixels == ram::read_png(dir / "odd.png").pixels);
}

TEST_CASE("infer over a directory writes one output per input") {
    test::TempDir dir("batch");
    const auto ckpt = identity_checkpoint(dir);
    std::filesystem::create_directories(dir / "in");
    for (int i = 0; i < 3; ++i) write_noise_png(dir / "in" / ("img" + std::to_string(i) + ".png"), 16, 24, 10 + i);
    const auto r = cli({"infer", "--checkpoint", ckpt.string(), "--input", (dir / "in").string(), "--output",
                        (dir / "out").string()});
    REQUIRE(r.code == 0);
    const auto report = nlohmann::json::parse(r.out);
    CHECK(report.size() == 3);
    for (int i = 0; i < 3; ++i) {
        const std::string name = "img" + std::to_string(i) + ".png";
        CHECK(ram::read_png(dir / "out" / name).pixels == ram::read_png(dir / "in" / name).pixels);
    }
}

TEST_CASE("eval of an identity model on clean pairs hits the caps") {
    test::TempDir dir("eval");
    const auto ckpt = identity_checkpoint(dir);
    ram::write_synthetic_set(dir / "clean", 2, 16, 16, 3);
    nlohmann::json manifest = nlohmann::json::array();
    for (const char* kind : {"noise", "rain"})
        for (int i = 0; i < 2; ++i) {
            const std::string p = "clean/clean_000" + std::to_string(i) + ".png";
            manifest.push_back({{"degraded", p}, {"clean", p}, {"kind", kind}, {"params", nlohmann::json::object()},
                                {"seed", 0}});
        }
    write_text(dir / "m.json", manifest.dump());

    const auto r = cli({"eval", "--checkpoint", ckpt.string(), "--manifest", (dir / "m.json").string(), "--report",
                        (dir / "report.json").string()});
    REQUIRE(r.code == 0);
    const auto rep = nlohmann::json::parse(r.out);
    CHECK(rep["aggregate"]["psnr"].get<double>() == ram::kPsnrCap);
    CHECK(rep["aggregate"]["ssim"].get<double>() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(rep["groups"].size() == 2);
    double sum = 0;
    for (const auto& e : rep["per_image"]) sum += e["psnr"].get<double>();
    CHECK(std::abs(rep["aggregate"]["psnr"].get<double>() - sum / 4) <= 1e-9);
    CHECK(std::filesystem::exists(dir / "report.json"));

    manifest.push_back({{"degraded", "clean/nope.png"}, {"clean", "clean/nope.png"}, {"kind", "haze"},
                        {"params", nlohmann::json::object()}, {"seed", 0}});
    write_text(dir / "m2.json", manifest.dump());
    const auto missing = cli({"eval", "--checkpoint", ckpt.string(), "--manifest", (dir / "m2.json").string()});
    CHECK(missing.code == 2);
    CHECK(missing.err.find("nope.png") != std::string::npos);
    CHECK(nlohmann::json::parse(missing.out)["per_image"].size() == 4);
}

TEST_CASE("gradcheck reports a corrupted op by name") {
    const auto ok = cli({"gradcheck", "--filter", "layer_norm"});
    CHECK(ok.code == 0);
    const auto bad = cli({"gradcheck", "--filter", "conv2d_1x1", "--corrupt", "conv2d"});
    CHECK(bad.code == 3);
    CHECK(bad.err.find("gradient mismatch in op 'conv2d_1x1'") != std::string::npos);
    CHECK(cli({"gradcheck", "--filter", "no_such_case"}).code == 1);
}

TEST_CASE("degrade, train and dump-features run end to end") {
    test::TempDir dir("e2e");
    const auto d = dir.path().string();
    REQUIRE(cli({"degrade", "--synthetic", "2", "--size", "16", "16", "--output", d + "/clean"}).code == 0);
    REQUIRE(cli({"degrade", "--clean", d + "/clean", "--kinds", "noise,haze", "--output", d + "/pairs"}).code == 0);
    CHECK(ram::read_manifest(dir / "pairs" / "manifest.json").size() == 4);

    write_text(dir / "run.json", R"({"model": {"base_channels": 4, "depths": [1, 1, 1, 1]},
                                     "train": {"steps": 3, "batch": 1, "patch": 16}})");
    const auto t = cli({"train", "--config", d + "/run.json", "--manifest", d + "/pairs/manifest.json", "--output",
                        d + "/run"});
    REQUIRE(t.code == 0);
    CHECK(std::filesystem::exists(dir / "run" / "final.ckpt"));
    CHECK(std::filesystem::exists(dir / "run" / "effective_config.json"));
    std::ifstream log(dir / "run" / "loss.csv");
    std::string line;
    std::size_t lines = 0;
    while (std::getline(log, line)) ++lines;
    CHECK(lines == 4);

    const auto img = ram::read_manifest(dir / "pairs" / "manifest.json")[0];
    const auto f = cli({"dump-features", "--checkpoint", d + "/run/final.ckpt", "--input", img.degraded.string(),
                        "--clean", img.clean.string(), "--taps", "enc1.0", "--output", d + "/feat"});
    CHECK(f.code == 0);
    CHECK(std::filesystem::exists(dir / "feat" / "enc1.0_alpha.png"));
    CHECK(std::filesystem::exists(dir / "feat" / "error.png"));
    CHECK(cli({"dump-features", "--checkpoint", d + "/run/final.ckpt", "--input", img.degraded.string(), "--taps",
               "nowhere", "--output", d + "/feat"})
              .code == 1);
}

TEST_CASE("mismatched config and checkpoint name the tensor") {
    test::TempDir dir("mismatch");
    const auto ckpt = identity_checkpoint(dir);
    write_noise_png(dir / "x.png", 16, 16, 4);
    write_text(dir / "wide.json", R"({"model": {"base_channels": 8, "depths": [1, 1, 1, 1]}})");
    const auto r = cli({"infer", "--config", (dir / "wide.json").string(), "--checkpoint", ckpt.string(), "--input",
                        (dir / "x.png").string(), "--output", (dir / "o").string()});
    CHECK(r.code == 2);
    CHECK(r.err.find("patch_embed.kernel") != std::string::npos);
}

TEST_CASE("run config round trips and rejects unknown sections") {
    ram::RunConfig c;
    c.model.base_channels = 16;
    c.train.steps = 9;
    c.output.dir = "x";
    const auto back = ram::run_config_from_json(ram::to_json(c));
    CHECK(back.model == c.model);
    CHECK(back.train == c.train);
    CHECK(back.output == c.output);
    CHECK_THROWS_AS(ram::run_config_from_json({{"extras", 1}}), ram::ConfigError);
    CHECK_THROWS_AS(ram::pad_mode_from_string("maybe"), ram::ConfigError);
}

}  // TEST_SUITE
