#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ram/model.hpp"
#include "ram/train.hpp"

// Binary layout, all integers little-endian:
//   "RAMCKPT1" | u32 version | u64 len, config JSON | u64 step |
//   u64 len, RNG state | u64 adam step | u64 tensor count | tensors...
// Each tensor: u32 len, name | u8 precision (0 f32, 1 f64) | 4 x u64 dims |
// raw element bytes. Model tensors come first in parameter order, then
// "adam.m.<name>" and "adam.v.<name>" when optimizer state is present.

namespace ram {

inline constexpr std::uint32_t kCheckpointVersion = 1;

template <typename T>
struct Checkpoint {
    RamModel<T> model;
    TrainState<T> state;
    bool has_optimizer = false;
};

template <typename T>
void save_checkpoint(const std::filesystem::path& path, const RamModel<T>& model,
                     const TrainState<T>* state = nullptr);

// FormatError for bad magic/version, truncation (naming the tensor being
// read) and shape mismatches against the embedded config.
template <typename T>
Checkpoint<T> load_checkpoint(const std::filesystem::path& path);

// Loads only the weights into an already built model, checking every tensor
// shape against it.
template <typename T>
void load_weights_into(RamModel<T>& model, const std::filesystem::path& path);

// Number of scalars stored in the tensor table.
std::uint64_t checkpoint_scalar_count(const std::filesystem::path& path);

}  // namespace ram
