#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ram/tensor.hpp"
#include "json.hpp"

namespace ram {

enum class DegradationKind { noise, rain, haze, blur, lowlight };
enum class BlurKind { gaussian, motion };

std::string to_string(DegradationKind k);
DegradationKind degradation_kind_from_string(const std::string& s);

// Only the fields of `kind` are used. Ranges are enforced by validate().
struct DegradationSpec {
    DegradationKind kind = DegradationKind::noise;
    // noise: standard deviation on the 0-255 scale, (0, 255].
    double sigma = 25.0;
    // rain: number of streaks, streak length (px), angle from vertical
    // (degrees, |angle| <= 60) and additive intensity in (0, 1].
    std::size_t streaks = 40;
    double length = 12.0;
    double angle = 10.0;
    double intensity = 0.6;
    // haze: t = exp(-beta * d) with d a smooth random field in [0, 1];
    // beta = 0 gives t = 1. Atmospheric light airlight in [0.7, 1].
    double beta = 1.2;
    double airlight = 0.85;
    // blur: gaussian (blur_sigma) or linear motion (motion_length, angle).
    BlurKind blur = BlurKind::gaussian;
    double blur_sigma = 1.5;
    double motion_length = 7.0;
    // lowlight: gain * img^gamma.
    double gamma = 2.0;
    double gain = 0.6;
    std::uint64_t seed = 0;

    void validate() const;  // ConfigError on out-of-range params
};

// Kind-specific parameters only, plus "kind" and "seed".
nlohmann::json to_json(const DegradationSpec& s);
DegradationSpec degradation_spec_from_json(const nlohmann::json& j);

// Stateless counter-based generator: value i depends only on (seed, i).
class CounterRng {
public:
    explicit CounterRng(std::uint64_t seed) : seed_(seed) {}
    std::uint64_t bits(std::uint64_t counter) const;
    double uniform(std::uint64_t counter) const;  // [0, 1)
    // Box-Muller over counters (2i, 2i + 1).
    double normal(std::uint64_t i) const;

private:
    std::uint64_t seed_;
};

// SplitMix64 finalizer; also used to derive per-image seeds.
std::uint64_t mix64(std::uint64_t x);
std::uint64_t derive_seed(std::uint64_t global_seed, std::uint64_t index);

// Additive Gaussian residual, sigma / 255 scaled, before clipping.
template <typename T>
Tensor<T> noise_residual(Shape shape, double sigma, std::uint64_t seed);

// img: (N, 3, H, W) in [0, 1]. Output in [0, 1], deterministic in (img, spec).
template <typename T>
Tensor<T> degrade(const Tensor<T>& img, const DegradationSpec& spec);

// Normalized blur kernel (odd size) as used by degrade.
std::vector<double> blur_kernel(const DegradationSpec& spec, std::size_t& size);

// Procedural clean image (smooth shading, shapes, stripes) in [0.05, 0.95].
template <typename T>
Tensor<T> synthetic_image(std::size_t height, std::size_t width, std::uint64_t seed);

struct ManifestEntry {
    std::filesystem::path degraded;
    std::filesystem::path clean;
    DegradationKind kind = DegradationKind::noise;
    nlohmann::json params;
    std::uint64_t seed = 0;
};

// Degrades every decodable PNG in clean_dir (sorted by name) with each spec
// and writes the results to out_dir plus a JSON manifest. Paths in the
// manifest are relative to the manifest's directory. Returns the entries.
std::vector<ManifestEntry> make_pair_set(const std::filesystem::path& clean_dir,
                                         const std::vector<DegradationSpec>& specs,
                                         const std::filesystem::path& out_dir,
                                         const std::filesystem::path& manifest);

// Entries with paths resolved against the manifest's directory.
std::vector<ManifestEntry> read_manifest(const std::filesystem::path& manifest);

// Writes `count` synthetic clean PNGs named clean_XXXX.png.
void write_synthetic_set(const std::filesystem::path& dir, std::size_t count, std::size_t height,
                         std::size_t width, std::uint64_t seed);

}  // namespace ram
