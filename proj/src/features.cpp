#include "ram/features.hpp"

#include <cmath>

#include "ram/errors.hpp"
#include "ram/image.hpp"
#include "ram/tape.hpp"

namespace ram {

template <typename T>
std::vector<double> channel_mean_plane(const Tensor<T>& t) {
    const Shape& s = t.shape();
    std::vector<double> plane(s.plane(), 0.0);
    if (s.c == 0) return plane;
    for (std::size_t c = 0; c < s.c; ++c)
        for (std::size_t p = 0; p < s.plane(); ++p) plane[p] += double(t.ptr()[c * s.plane() + p]);
    for (double& v : plane) v /= double(s.c);
    return plane;
}

template <typename T>
std::vector<std::filesystem::path> dump_features(const RamModel<T>& m, const Tensor<T>& img,
                                                 const std::vector<std::string>& taps,
                                                 const std::filesystem::path& dir,
                                                 const std::optional<Tensor<T>>& clean) {
    if (taps.empty()) throw ConfigError("dump_features: no taps given");
    if (!m.cfg.flags.gate_enabled) throw ConfigError("dump_features: the model has no gated path to inspect");
    NoGradScope<T> no_grad;
    ForwardProbe<T> probe;
    probe.taps.insert(taps.begin(), taps.end());
    const Tensor<T> out = forward(m, img, &probe);

    std::filesystem::create_directories(dir);
    std::vector<std::filesystem::path> written;
    auto emit = [&](const std::string& name, const std::vector<double>& plane, std::size_t h, std::size_t w) {
        const auto path = dir / (name + ".png");
        write_png(path, plane_to_gray(plane, h, w));
        written.push_back(path);
    };
    for (const auto& tap : taps) {
        const DabTrace<T>& tr = probe.traces.at(tap);
        const GatedDaTrace<T>& g = *tr.gated;
        const Shape s = g.output.shape();
        auto slice = [&](const Tensor<T>& t) {
            return t.numel() ? channel_mean_plane(t) : std::vector<double>(s.plane(), 0.0);
        };
        emit(tap + "_alpha", slice(g.alpha), s.h, s.w);
        emit(tap + "_beta", slice(g.beta), s.h, s.w);
        emit(tap + "_gamma", slice(g.gamma), s.h, s.w);
        emit(tap + "_mean", channel_mean_plane(g.output), s.h, s.w);
    }
    if (clean) {
        if (!(clean->shape() == out.shape()))
            throw DimensionError("dump_features: clean image " + clean->shape().str() + " vs output " +
                                 out.shape().str());
        const Shape& s = out.shape();
        std::vector<double> err(s.plane(), 0.0);
        for (std::size_t c = 0; c < s.c; ++c)
            for (std::size_t p = 0; p < s.plane(); ++p)
                err[p] += std::abs(double(out.ptr()[c * s.plane() + p]) - double(clean->ptr()[c * s.plane() + p])) /
                          double(s.c);
        emit("error", err, s.h, s.w);
    }
    return written;
}

template std::vector<double> channel_mean_plane<float>(const Tensor<float>&);
template std::vector<double> channel_mean_plane<double>(const Tensor<double>&);
template std::vector<std::filesystem::path> dump_features<float>(const RamModel<float>&, const Tensor<float>&,
                                                                 const std::vector<std::string>&,
                                                                 const std::filesystem::path&,
                                                                 const std::optional<Tensor<float>>&);
template std::vector<std::filesystem::path> dump_features<double>(const RamModel<double>&, const Tensor<double>&,
                                                                  const std::vector<std::string>&,
                                                                  const std::filesystem::path&,
                                                                  const std::optional<Tensor<double>>&);

}  // namespace ram
