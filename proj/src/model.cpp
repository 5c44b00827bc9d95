#include "ram/model.hpp"

#include <algorithm>
#include <array>
#include <string>
#include <vector>

#include "ram/errors.hpp"
#include "ram/ops.hpp"

namespace ram {

template <typename T>
RamModel<T> build(const RamConfig& cfg) {
    cfg.validate();
    ParamInit init(cfg.seed);
    RamModel<T> m;
    m.cfg = cfg;
    const std::size_t C = cfg.base_channels;
    m.patch_embed = make_conv<T>(init, 3, C, 3);
    for (std::size_t l = 0; l < 4; ++l) {
        for (std::size_t i = 0; i < cfg.depths[l]; ++i)
            m.encoder[l].push_back(make_dab<T>(init, cfg.width(l), cfg.heads[l], cfg));
        if (l < 3) m.down[l] = make_conv<T>(init, 4 * cfg.width(l), cfg.width(l + 1), 1);
    }
    for (std::size_t l = 3; l-- > 0;) {
        m.up[l] = make_conv<T>(init, cfg.width(l + 1), 2 * cfg.width(l + 1), 1);
        m.skip_merge[l] = make_conv<T>(init, 2 * cfg.width(l), cfg.width(l), 1);
        for (std::size_t i = 0; i < cfg.depths[l]; ++i)
            m.decoder[l].push_back(make_dab<T>(init, cfg.width(l), cfg.heads[l], cfg));
    }
    for (std::size_t i = 0; i < cfg.refinement_depth; ++i)
        m.refinement.push_back(make_dab<T>(init, C, cfg.heads[0], cfg));
    m.head = make_conv<T>(init, C, 3, 3);
    return m;
}

template <typename T>
std::vector<std::string> block_ids(const RamModel<T>& m) {
    std::vector<std::string> ids;
    for (std::size_t l = 0; l < 4; ++l)
        for (std::size_t i = 0; i < m.encoder[l].size(); ++i)
            ids.push_back("enc" + std::to_string(l + 1) + "." + std::to_string(i));
    for (std::size_t l = 3; l-- > 0;)
        for (std::size_t i = 0; i < m.decoder[l].size(); ++i)
            ids.push_back("dec" + std::to_string(l + 1) + "." + std::to_string(i));
    for (std::size_t i = 0; i < m.refinement.size(); ++i) ids.push_back("ref." + std::to_string(i));
    return ids;
}

namespace {

template <typename T>
Tensor<T> run_blocks(Tensor<T> x, const std::vector<DabWeights<T>>& blocks, const std::string& prefix,
                     ForwardProbe<T>* probe) {
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        const std::string id = prefix + std::to_string(i);
        if (probe && probe->taps.count(id)) {
            DabTrace<T> trace;
            x = dab_forward(x, blocks[i], &trace);
            probe->traces[id] = std::move(trace);
        } else {
            x = dab_forward(x, blocks[i]);
        }
    }
    return x;
}

}  // namespace

template <typename T>
Tensor<T> forward(const RamModel<T>& m, const Tensor<T>& img, ForwardProbe<T>* probe) {
    const Shape& s = img.shape();
    if (s.c != 3) throw DimensionError("forward: expected 3 input channels, got " + std::to_string(s.c));
    if (s.h % 8 != 0 || s.w % 8 != 0 || s.h == 0 || s.w == 0)
        throw DimensionError("forward: spatial size " + std::to_string(s.h) + "x" + std::to_string(s.w) +
                             " is not a multiple of 8");
    if (probe) {
        const auto ids = block_ids(m);
        for (const auto& t : probe->taps)
            if (std::find(ids.begin(), ids.end(), t) == ids.end()) throw ConfigError("unknown block id '" + t + "'");
    }

    std::array<Tensor<T>, 3> skips;
    Tensor<T> x = conv2d(img, m.patch_embed);
    for (std::size_t l = 0; l < 4; ++l) {
        x = run_blocks(x, m.encoder[l], "enc" + std::to_string(l + 1) + ".", probe);
        if (l < 3) {
            skips[l] = x;
            x = downsample(x, m.down[l]);
        }
    }
    for (std::size_t l = 3; l-- > 0;) {
        x = upsample(x, m.up[l]);
        x = conv2d(concat_channels<T>({x, skips[l]}), m.skip_merge[l]);
        x = run_blocks(x, m.decoder[l], "dec" + std::to_string(l + 1) + ".", probe);
    }
    x = run_blocks(x, m.refinement, "ref.", probe);
    return add(img, conv2d(x, m.head));
}

template <typename To, typename From>
RamModel<To> cast_model(const RamModel<From>& m) {
    std::vector<const Tensor<From>*> src;
    RamModel<From>::visit(m, [&](const std::string&, const Tensor<From>& t) { src.push_back(&t); });
    RamModel<To> out = build<To>(m.cfg);
    std::size_t i = 0;
    RamModel<To>::visit(out, [&](const std::string&, Tensor<To>& t) { t = cast<To>(*src[i++]); });
    return out;
}

#define RAM_INSTANTIATE_MODEL(T)                                                             \
    template RamModel<T> build<T>(const RamConfig&);                                         \
    template std::vector<std::string> block_ids<T>(const RamModel<T>&);                      \
    template Tensor<T> forward<T>(const RamModel<T>&, const Tensor<T>&, ForwardProbe<T>*);

RAM_INSTANTIATE_MODEL(float)
RAM_INSTANTIATE_MODEL(double)
template RamModel<double> cast_model<double, float>(const RamModel<float>&);
template RamModel<float> cast_model<float, double>(const RamModel<double>&);

}  // namespace ram
