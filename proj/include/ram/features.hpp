#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ram/model.hpp"
#include "ram/tensor.hpp"

namespace ram {

// Channel mean of sample 0 of an (N, C, H, W) tensor, as an H x W plane.
template <typename T>
std::vector<double> channel_mean_plane(const Tensor<T>& t);

// Runs forward on `img` and, for every tap (a block id from block_ids),
// writes <tap>_alpha.png, <tap>_beta.png, <tap>_gamma.png (channel means of
// the gated-path slices) and <tap>_mean.png (channel mean of the gated-path
// output) as min-max normalized grayscale. With `clean`, also writes
// error.png = channel mean of |forward(img) - clean|. Returns written paths.
template <typename T>
std::vector<std::filesystem::path> dump_features(const RamModel<T>& m, const Tensor<T>& img,
                                                 const std::vector<std::string>& taps,
                                                 const std::filesystem::path& dir,
                                                 const std::optional<Tensor<T>>& clean = std::nullopt);

}  // namespace ram
