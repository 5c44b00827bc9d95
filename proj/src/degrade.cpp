#include "ram/degrade.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numbers>

#include "ram/errors.hpp"
#include "ram/image.hpp"
#include "ram/nn.hpp"

namespace ram {

namespace fs = std::filesystem;

std::string to_string(DegradationKind k) {
    switch (k) {
        case DegradationKind::noise: return "noise";
        case DegradationKind::rain: return "rain";
        case DegradationKind::haze: return "haze";
        case DegradationKind::blur: return "blur";
        case DegradationKind::lowlight: return "lowlight";
    }
    return "?";
}

DegradationKind degradation_kind_from_string(const std::string& s) {
    for (auto k : {DegradationKind::noise, DegradationKind::rain, DegradationKind::haze, DegradationKind::blur,
                   DegradationKind::lowlight})
        if (to_string(k) == s) return k;
    throw ConfigError("unknown degradation kind '" + s + "'");
}

namespace {

void check_range(double v, double lo, double hi, bool lo_open, const char* name) {
    const bool ok = (lo_open ? v > lo : v >= lo) && v <= hi;
    if (!ok || !std::isfinite(v))
        throw ConfigError(std::string(name) + " = " + std::to_string(v) + " outside " + (lo_open ? "(" : "[") +
                          std::to_string(lo) + ", " + std::to_string(hi) + "]");
}

}  // namespace

void DegradationSpec::validate() const {
    switch (kind) {
        case DegradationKind::noise: check_range(sigma, 0, 255, true, "sigma"); break;
        case DegradationKind::rain:
            if (streaks == 0 || streaks > 100000) throw ConfigError("streaks must be in [1, 100000]");
            check_range(length, 1, 256, false, "length");
            check_range(angle, -60, 60, false, "angle");
            check_range(intensity, 0, 1, true, "intensity");
            break;
        case DegradationKind::haze:
            check_range(beta, 0, 5, false, "beta");
            check_range(airlight, 0.7, 1.0, false, "airlight");
            break;
        case DegradationKind::blur:
            if (blur == BlurKind::gaussian) {
                check_range(blur_sigma, 0, 10, true, "blur_sigma");
            } else {
                check_range(motion_length, 1, 51, false, "motion_length");
                check_range(angle, -180, 180, false, "angle");
            }
            break;
        case DegradationKind::lowlight:
            check_range(gamma, 0, 5, true, "gamma");
            check_range(gain, 0, 1, true, "gain");
            break;
    }
}

nlohmann::json to_json(const DegradationSpec& s) {
    nlohmann::json j;
    j["kind"] = to_string(s.kind);
    switch (s.kind) {
        case DegradationKind::noise: j["sigma"] = s.sigma; break;
        case DegradationKind::rain:
            j["streaks"] = s.streaks;
            j["length"] = s.length;
            j["angle"] = s.angle;
            j["intensity"] = s.intensity;
            break;
        case DegradationKind::haze:
            j["beta"] = s.beta;
            j["airlight"] = s.airlight;
            break;
        case DegradationKind::blur:
            j["blur"] = s.blur == BlurKind::gaussian ? "gaussian" : "motion";
            if (s.blur == BlurKind::gaussian) {
                j["blur_sigma"] = s.blur_sigma;
            } else {
                j["motion_length"] = s.motion_length;
                j["angle"] = s.angle;
            }
            break;
        case DegradationKind::lowlight:
            j["gamma"] = s.gamma;
            j["gain"] = s.gain;
            break;
    }
    j["seed"] = s.seed;
    return j;
}

DegradationSpec degradation_spec_from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("kind")) throw ConfigError("degradation spec needs a 'kind'");
    DegradationSpec s;
    try {
        s.kind = degradation_kind_from_string(j.at("kind").get<std::string>());
        for (auto it = j.begin(); it != j.end(); ++it) {
            const std::string& k = it.key();
            const auto& v = it.value();
            if (k == "kind") continue;
            else if (k == "seed") s.seed = v.get<std::uint64_t>();
            else if (k == "sigma") s.sigma = v.get<double>();
            else if (k == "streaks") s.streaks = v.get<std::size_t>();
            else if (k == "length") s.length = v.get<double>();
            else if (k == "angle") s.angle = v.get<double>();
            else if (k == "intensity") s.intensity = v.get<double>();
            else if (k == "beta") s.beta = v.get<double>();
            else if (k == "airlight") s.airlight = v.get<double>();
            else if (k == "blur") {
                const auto b = v.get<std::string>();
                if (b != "gaussian" && b != "motion") throw ConfigError("blur must be gaussian or motion");
                s.blur = b == "gaussian" ? BlurKind::gaussian : BlurKind::motion;
            } else if (k == "blur_sigma") s.blur_sigma = v.get<double>();
            else if (k == "motion_length") s.motion_length = v.get<double>();
            else if (k == "gamma") s.gamma = v.get<double>();
            else if (k == "gain") s.gain = v.get<double>();
            else throw ConfigError("unknown degradation parameter '" + k + "'");
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("degradation spec: ") + e.what());
    }
    s.validate();
    return s;
}

std::uint64_t mix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t global_seed, std::uint64_t index) {
    return mix64(mix64(global_seed) ^ (index * 0xD1B54A32D192ED03ull));
}

std::uint64_t CounterRng::bits(std::uint64_t counter) const {
    return mix64(seed_ ^ mix64(counter));
}

double CounterRng::uniform(std::uint64_t counter) const {
    return static_cast<double>(bits(counter) >> 11) * 0x1.0p-53;
}

double CounterRng::normal(std::uint64_t i) const {
    const double u1 = 1.0 - uniform(2 * i);  // (0, 1]
    const double u2 = uniform(2 * i + 1);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

template <typename T>
Tensor<T> noise_residual(Shape shape, double sigma, std::uint64_t seed) {
    const CounterRng rng(seed);
    std::vector<T> v(shape.numel());
    const double s = sigma / 255.0;
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<T>(s * rng.normal(i));
    return Tensor<T>(shape, std::move(v));
}

std::vector<double> blur_kernel(const DegradationSpec& spec, std::size_t& size) {
    std::vector<double> k;
    if (spec.blur == BlurKind::gaussian) {
        const std::size_t r = static_cast<std::size_t>(std::ceil(3.0 * spec.blur_sigma));
        size = 2 * r + 1;
        k.resize(size * size);
        for (std::size_t y = 0; y < size; ++y)
            for (std::size_t x = 0; x < size; ++x) {
                const double dy = double(y) - double(r), dx = double(x) - double(r);
                k[y * size + x] = std::exp(-(dx * dx + dy * dy) / (2 * spec.blur_sigma * spec.blur_sigma));
            }
    } else {
        const std::size_t r = static_cast<std::size_t>(std::ceil(spec.motion_length / 2.0));
        size = 2 * r + 1;
        k.assign(size * size, 0.0);
        const double a = spec.angle * std::numbers::pi / 180.0;
        const double dx = std::cos(a), dy = std::sin(a);
        // Supersampled segment centred on the kernel, bilinear splats.
        const int steps = static_cast<int>(std::ceil(spec.motion_length * 8));
        for (int i = 0; i <= steps; ++i) {
            const double t = (double(i) / steps - 0.5) * (spec.motion_length - 1);
            const double fx = double(r) + t * dx, fy = double(r) + t * dy;
            const auto x0 = static_cast<std::size_t>(std::floor(fx)), y0 = static_cast<std::size_t>(std::floor(fy));
            const double wx = fx - double(x0), wy = fy - double(y0);
            auto splat = [&](std::size_t x, std::size_t y, double w) {
                if (x < size && y < size) k[y * size + x] += w;
            };
            splat(x0, y0, (1 - wx) * (1 - wy));
            splat(x0 + 1, y0, wx * (1 - wy));
            splat(x0, y0 + 1, (1 - wx) * wy);
            splat(x0 + 1, y0 + 1, wx * wy);
        }
    }
    double total = 0;
    for (double v : k) total += v;
    for (double& v : k) v /= total;
    return k;
}

namespace {

template <typename T>
void check_image(const Tensor<T>& img) {
    if (img.shape().c != 3) throw DimensionError("degrade: expected 3 channels, got " + img.shape().str());
    for (T v : img.data())
        if (!(v >= T(0) && v <= T(1))) throw DataError("degrade: input pixel outside [0, 1]");
}

template <typename T>
T clip01(double v) {
    return static_cast<T>(std::clamp(v, 0.0, 1.0));
}

template <typename T>
std::vector<T> apply_rain(const Tensor<T>& img, const DegradationSpec& s) {
    const Shape& sh = img.shape();
    const CounterRng rng(s.seed);
    std::vector<double> mask(sh.plane(), 0.0);
    for (std::size_t k = 0; k < s.streaks; ++k) {
        const std::uint64_t base = 8 * k;
        const double x0 = rng.uniform(base) * double(sh.w);
        const double y0 = rng.uniform(base + 1) * double(sh.h);
        const double len = s.length * (0.6 + 0.4 * rng.uniform(base + 2));
        const double ang = (s.angle + (rng.uniform(base + 3) - 0.5) * 10.0) * std::numbers::pi / 180.0;
        const double amp = s.intensity * (0.5 + 0.5 * rng.uniform(base + 4));
        const double dx = std::sin(ang) * len, dy = std::cos(ang) * len;
        const double x1 = x0 + dx, y1 = y0 + dy;
        const double len2 = dx * dx + dy * dy;
        // Coverage falls off linearly with distance to the segment (1 px).
        const auto lo_x = static_cast<std::ptrdiff_t>(std::floor(std::min(x0, x1) - 1));
        const auto hi_x = static_cast<std::ptrdiff_t>(std::ceil(std::max(x0, x1) + 1));
        const auto lo_y = static_cast<std::ptrdiff_t>(std::floor(std::min(y0, y1) - 1));
        const auto hi_y = static_cast<std::ptrdiff_t>(std::ceil(std::max(y0, y1) + 1));
        for (std::ptrdiff_t y = std::max<std::ptrdiff_t>(lo_y, 0); y <= hi_y && y < std::ptrdiff_t(sh.h); ++y)
            for (std::ptrdiff_t x = std::max<std::ptrdiff_t>(lo_x, 0); x <= hi_x && x < std::ptrdiff_t(sh.w); ++x) {
                const double px = double(x) + 0.5 - x0, py = double(y) + 0.5 - y0;
                const double t = std::clamp((px * dx + py * dy) / len2, 0.0, 1.0);
                const double ex = px - t * dx, ey = py - t * dy;
                const double cover = 1.0 - std::sqrt(ex * ex + ey * ey);
                if (cover > 0) {
                    double& m = mask[std::size_t(y) * sh.w + std::size_t(x)];
                    m = std::max(m, amp * cover);
                }
            }
    }
    std::vector<T> out(img.numel());
    const T* src = img.ptr();
    for (std::size_t nc = 0; nc < sh.n * sh.c; ++nc)
        for (std::size_t p = 0; p < sh.plane(); ++p)
            out[nc * sh.plane() + p] = clip01<T>(double(src[nc * sh.plane() + p]) + mask[p]);
    return out;
}

template <typename T>
std::vector<T> apply_haze(const Tensor<T>& img, const DegradationSpec& s) {
    const Shape& sh = img.shape();
    const CounterRng rng(s.seed);
    double grid[4][4];
    for (std::size_t i = 0; i < 16; ++i) grid[i / 4][i % 4] = rng.uniform(i);
    std::vector<double> t(sh.plane());
    for (std::size_t y = 0; y < sh.h; ++y)
        for (std::size_t x = 0; x < sh.w; ++x) {
            const double gy = sh.h > 1 ? 3.0 * double(y) / double(sh.h - 1) : 0.0;
            const double gx = sh.w > 1 ? 3.0 * double(x) / double(sh.w - 1) : 0.0;
            const std::size_t iy = std::min<std::size_t>(static_cast<std::size_t>(gy), 2);
            const std::size_t ix = std::min<std::size_t>(static_cast<std::size_t>(gx), 2);
            const double fy = gy - double(iy), fx = gx - double(ix);
            const double d = (1 - fy) * ((1 - fx) * grid[iy][ix] + fx * grid[iy][ix + 1]) +
                             fy * ((1 - fx) * grid[iy + 1][ix] + fx * grid[iy + 1][ix + 1]);
            t[y * sh.w + x] = std::exp(-s.beta * d);
        }
    std::vector<T> out(img.numel());
    const T* src = img.ptr();
    for (std::size_t nc = 0; nc < sh.n * sh.c; ++nc)
        for (std::size_t p = 0; p < sh.plane(); ++p) {
            const double v = double(src[nc * sh.plane() + p]);
            out[nc * sh.plane() + p] = clip01<T>(v * t[p] + s.airlight * (1.0 - t[p]));
        }
    return out;
}

template <typename T>
std::vector<T> apply_blur(const Tensor<T>& img, const DegradationSpec& s) {
    const Shape& sh = img.shape();
    std::size_t size = 0;
    const std::vector<double> k = blur_kernel(s, size);
    const std::ptrdiff_t r = std::ptrdiff_t(size / 2);
    std::vector<T> out(img.numel());
    for (std::size_t nc = 0; nc < sh.n * sh.c; ++nc) {
        const T* src = img.ptr() + nc * sh.plane();
        T* dst = out.data() + nc * sh.plane();
        for (std::size_t y = 0; y < sh.h; ++y)
            for (std::size_t x = 0; x < sh.w; ++x) {
                // Accumulate deviations from the centre pixel so a constant
                // region reproduces its value exactly.
                const double centre = double(src[y * sh.w + x]);
                double acc = 0;
                for (std::ptrdiff_t ky = -r; ky <= r; ++ky) {
                    const std::size_t yy = reflect_index(std::ptrdiff_t(y) + ky, sh.h);
                    for (std::ptrdiff_t kx = -r; kx <= r; ++kx) {
                        const std::size_t xx = reflect_index(std::ptrdiff_t(x) + kx, sh.w);
                        acc += k[std::size_t(ky + r) * size + std::size_t(kx + r)] *
                               (double(src[yy * sh.w + xx]) - centre);
                    }
                }
                dst[y * sh.w + x] = clip01<T>(centre + acc);
            }
    }
    return out;
}

}  // namespace

template <typename T>
Tensor<T> degrade(const Tensor<T>& img, const DegradationSpec& spec) {
    spec.validate();
    check_image(img);
    const Shape& sh = img.shape();
    std::vector<T> out;
    switch (spec.kind) {
        case DegradationKind::noise: {
            const Tensor<T> res = noise_residual<T>(sh, spec.sigma, spec.seed);
            out.resize(img.numel());
            for (std::size_t i = 0; i < out.size(); ++i) out[i] = clip01<T>(double(img.ptr()[i]) + double(res.ptr()[i]));
            break;
        }
        case DegradationKind::rain: out = apply_rain(img, spec); break;
        case DegradationKind::haze: out = apply_haze(img, spec); break;
        case DegradationKind::blur: out = apply_blur(img, spec); break;
        case DegradationKind::lowlight:
            out.resize(img.numel());
            for (std::size_t i = 0; i < out.size(); ++i)
                out[i] = clip01<T>(spec.gain * std::pow(double(img.ptr()[i]), spec.gamma));
            break;
    }
    return Tensor<T>(sh, std::move(out));
}

template <typename T>
Tensor<T> synthetic_image(std::size_t height, std::size_t width, std::uint64_t seed) {
    const CounterRng rng(seed);
    std::uint64_t ctr = 0;
    auto u = [&] { return rng.uniform(ctr++); };
    const double H = double(height), W = double(width);
    std::vector<double> v(3 * height * width);
    for (std::size_t c = 0; c < 3; ++c) {
        const double a = 0.2 + 0.6 * u(), gx = (u() - 0.5) * 0.6, gy = (u() - 0.5) * 0.6;
        for (std::size_t y = 0; y < height; ++y)
            for (std::size_t x = 0; x < width; ++x)
                v[(c * height + y) * width + x] = a + gx * (double(x) / W - 0.5) + gy * (double(y) / H - 0.5);
    }
    // A few flat-coloured discs and rectangles give edges to restore.
    const std::size_t shapes = 3 + static_cast<std::size_t>(u() * 4);
    for (std::size_t s = 0; s < shapes; ++s) {
        const bool disc = u() < 0.5;
        const double cx = u() * W, cy = u() * H, rx = (0.08 + 0.2 * u()) * W, ry = (0.08 + 0.2 * u()) * H;
        const double col[3] = {u(), u(), u()};
        for (std::size_t y = 0; y < height; ++y)
            for (std::size_t x = 0; x < width; ++x) {
                const double dx = (double(x) + 0.5 - cx) / rx, dy = (double(y) + 0.5 - cy) / ry;
                const bool inside = disc ? dx * dx + dy * dy <= 1.0 : std::abs(dx) <= 1.0 && std::abs(dy) <= 1.0;
                if (inside)
                    for (std::size_t c = 0; c < 3; ++c) v[(c * height + y) * width + x] = col[c];
            }
    }
    const double freq = 2 * std::numbers::pi * (2 + 6 * u()) / W, theta = u() * std::numbers::pi;
    const double amp = 0.04 + 0.06 * u();
    std::vector<T> out(v.size());
    for (std::size_t c = 0; c < 3; ++c)
        for (std::size_t y = 0; y < height; ++y)
            for (std::size_t x = 0; x < width; ++x) {
                const std::size_t i = (c * height + y) * width + x;
                const double stripe = amp * std::sin(freq * (double(x) * std::cos(theta) + double(y) * std::sin(theta)));
                out[i] = static_cast<T>(std::clamp(v[i] + stripe, 0.05, 0.95));
            }
    return Tensor<T>(Shape{1, 3, height, width}, std::move(out));
}

namespace {

fs::path relative_to(const fs::path& p, const fs::path& base) {
    return fs::relative(fs::weakly_canonical(p), fs::weakly_canonical(base));
}

}  // namespace

std::vector<ManifestEntry> make_pair_set(const fs::path& clean_dir, const std::vector<DegradationSpec>& specs,
                                         const fs::path& out_dir, const fs::path& manifest) {
    if (specs.empty()) throw ConfigError("make_pair_set: no degradation specs");
    for (const auto& s : specs) s.validate();
    if (!fs::is_directory(clean_dir)) throw DataError("clean directory '" + clean_dir.string() + "' not found");
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(clean_dir))
        if (e.is_regular_file() && e.path().extension() == ".png") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    fs::create_directories(out_dir);
    const fs::path base = manifest.parent_path().empty() ? fs::path(".") : manifest.parent_path();
    fs::create_directories(base);

    std::vector<ManifestEntry> entries;
    nlohmann::json doc = nlohmann::json::array();
    for (std::size_t i = 0; i < files.size(); ++i) {
        Tensor<float> clean;
        try {
            clean = load_image<float>(files[i]);
        } catch (const Error& e) {
            std::cerr << "warning: skipping " << files[i].string() << ": " << e.what() << "\n";
            continue;
        }
        for (std::size_t j = 0; j < specs.size(); ++j) {
            DegradationSpec s = specs[j];
            s.seed = derive_seed(specs[j].seed, i);
            const fs::path out = out_dir / (files[i].stem().string() + "__" + to_string(s.kind) + std::to_string(j) + ".png");
            save_image(out, degrade(clean, s));
            ManifestEntry e{out, files[i], s.kind, to_json(s), s.seed};
            e.params.erase("kind");
            e.params.erase("seed");
            doc.push_back({{"degraded", relative_to(out, base).generic_string()},
                           {"clean", relative_to(files[i], base).generic_string()},
                           {"kind", to_string(s.kind)},
                           {"params", e.params},
                           {"seed", s.seed}});
            entries.push_back(std::move(e));
        }
    }
    if (entries.empty()) throw DataError("make_pair_set: no decodable images in '" + clean_dir.string() + "'");
    std::ofstream f(manifest);
    if (!f) throw DataError("cannot write manifest '" + manifest.string() + "'");
    f << doc.dump(2) << "\n";
    return entries;
}

std::vector<ManifestEntry> read_manifest(const fs::path& manifest) {
    std::ifstream f(manifest);
    if (!f) throw DataError("cannot open manifest '" + manifest.string() + "'");
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(f);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("manifest '" + manifest.string() + "': " + e.what());
    }
    if (!doc.is_array()) throw FormatError("manifest '" + manifest.string() + "' must be a JSON array");
    const fs::path base = manifest.parent_path();
    std::vector<ManifestEntry> out;
    for (const auto& j : doc) {
        try {
            ManifestEntry e;
            e.degraded = base / j.at("degraded").get<std::string>();
            e.clean = base / j.at("clean").get<std::string>();
            e.kind = degradation_kind_from_string(j.at("kind").get<std::string>());
            e.params = j.value("params", nlohmann::json::object());
            e.seed = j.value("seed", std::uint64_t{0});
            out.push_back(std::move(e));
        } catch (const nlohmann::json::exception& ex) {
            throw FormatError("manifest entry " + std::to_string(out.size()) + ": " + ex.what());
        }
    }
    if (out.empty()) throw DataError("manifest '" + manifest.string() + "' is empty");
    return out;
}

void write_synthetic_set(const fs::path& dir, std::size_t count, std::size_t height, std::size_t width,
                         std::uint64_t seed) {
    fs::create_directories(dir);
    for (std::size_t i = 0; i < count; ++i) {
        char name[32];
        std::snprintf(name, sizeof name, "clean_%04zu.png", i);
        save_image(dir / name, synthetic_image<float>(height, width, derive_seed(seed, i)));
    }
}

template Tensor<float> noise_residual<float>(Shape, double, std::uint64_t);
template Tensor<double> noise_residual<double>(Shape, double, std::uint64_t);
template Tensor<float> degrade<float>(const Tensor<float>&, const DegradationSpec&);
template Tensor<double> degrade<double>(const Tensor<double>&, const DegradationSpec&);
template Tensor<float> synthetic_image<float>(std::size_t, std::size_t, std::uint64_t);
template Tensor<double> synthetic_image<double>(std::size_t, std::size_t, std::uint64_t);

}  // namespace ram
