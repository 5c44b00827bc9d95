#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "ram/blocks.hpp"
#include "ram/config.hpp"
#include "ram/nn.hpp"
#include "ram/tensor.hpp"

namespace ram {

// Four-level U-shaped restorer. Level l (0-based) runs at width C * 2^l and
// spatial scale 1 / 2^l. Index l of down/up/skip/decoder refers to the
// transition between level l and l + 1 (or the decoder stage at level l).
template <typename T>
struct RamModel {
    RamConfig cfg;
    ConvWeights<T> patch_embed;                       // 3x3, 3 -> C
    std::array<std::vector<DabWeights<T>>, 4> encoder;
    std::array<ConvWeights<T>, 3> down;               // level l -> l + 1
    std::array<ConvWeights<T>, 3> up;                 // level l + 1 -> l
    std::array<ConvWeights<T>, 3> skip_merge;         // 1x1, 2 C_l -> C_l
    std::array<std::vector<DabWeights<T>>, 3> decoder;
    std::vector<DabWeights<T>> refinement;
    ConvWeights<T> head;                              // 3x3, C -> 3

    // Calls f(name, tensor) for every learnable tensor in a fixed order.
    template <class Self, class F>
    static void visit(Self& self, F&& f) {
        ConvWeights<T>::visit(self.patch_embed, "patch_embed.", f);
        for (std::size_t l = 0; l < 4; ++l) {
            const std::string lvl = std::to_string(l + 1);
            for (std::size_t i = 0; i < self.encoder[l].size(); ++i)
                DabWeights<T>::visit(self.encoder[l][i], "enc" + lvl + "." + std::to_string(i) + ".", f);
            if (l < 3) ConvWeights<T>::visit(self.down[l], "down" + lvl + ".", f);
        }
        for (std::size_t l = 3; l-- > 0;) {
            const std::string lvl = std::to_string(l + 1);
            ConvWeights<T>::visit(self.up[l], "up" + lvl + ".", f);
            ConvWeights<T>::visit(self.skip_merge[l], "skip" + lvl + ".", f);
            for (std::size_t i = 0; i < self.decoder[l].size(); ++i)
                DabWeights<T>::visit(self.decoder[l][i], "dec" + lvl + "." + std::to_string(i) + ".", f);
        }
        for (std::size_t i = 0; i < self.refinement.size(); ++i)
            DabWeights<T>::visit(self.refinement[i], "ref." + std::to_string(i) + ".", f);
        ConvWeights<T>::visit(self.head, "head.", f);
    }
};

// Deterministic construction from cfg.seed. Throws ConfigError.
template <typename T>
RamModel<T> build(const RamConfig& cfg);

// Block identifiers in execution order: enc1.0 ... enc4.k, dec3.0 ...
// dec1.k, ref.0 ...
template <typename T>
std::vector<std::string> block_ids(const RamModel<T>& m);

// Collects pre-fusion traces of the named blocks during forward.
template <typename T>
struct ForwardProbe {
    std::set<std::string> taps;
    std::map<std::string, DabTrace<T>> traces;
};

// img: (N, 3, H, W) with H, W multiples of 8. Returns img + head(features).
template <typename T>
Tensor<T> forward(const RamModel<T>& m, const Tensor<T>& img, ForwardProbe<T>* probe = nullptr);

// Converts every parameter to another scalar type.
template <typename To, typename From>
RamModel<To> cast_model(const RamModel<From>& m);

}  // namespace ram
