#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>

#include "json.hpp"

namespace ram {

// How a block partitions its input between the attention and gated paths.
enum class SplitMode { interleaved, contiguous, full };
enum class AttentionMode { channel, spatial };
enum class GateActivation { gelu, sigmoid };
// How the per-channel temperature scale reaches the alpha slice.
enum class TempGranularity { scalar, per_channel_mapped };

struct BlockFlags {
    SplitMode split_mode = SplitMode::interleaved;
    bool gate_enabled = true;
    bool cross_sigmoid_enabled = true;
    AttentionMode attention_mode = AttentionMode::channel;
    GateActivation gate_activation = GateActivation::gelu;
    TempGranularity temp_granularity = TempGranularity::scalar;

    bool operator==(const BlockFlags&) const = default;
};

// Ablation presets 'a'..'e':
//   a  full-channel attention only
//   b  interleaved split, no gate
//   c  contiguous split with gate
//   d  interleaved split with gate, no cross-sigmoid
//   e  full block
BlockFlags variant_flags(char variant);

// Fractions of the expanded hidden width given to the gamma/beta/alpha slices.
struct SplitRatio {
    double gamma = 0.5;
    double beta = 0.25;
    double alpha = 0.25;
    bool operator==(const SplitRatio&) const = default;
};

// Channel widths of the (gamma, beta, alpha) slices.
struct SplitSizes {
    std::size_t gamma = 0, beta = 0, alpha = 0;
    std::size_t total() const { return gamma + beta + alpha; }
    bool operator==(const SplitSizes&) const = default;
};

struct RamConfig {
    std::size_t base_channels = 32;
    std::array<std::size_t, 4> depths{1, 1, 2, 8};
    std::size_t refinement_depth = 1;
    std::array<std::size_t, 4> heads{1, 2, 4, 8};
    std::size_t r_expan = 2;
    std::size_t ffn_factor = 2;
    SplitRatio split;
    double tau_init = 1.0;
    BlockFlags flags;
    std::uint64_t seed = 0;

    // Width of encoder/decoder level `level` (0-based).
    std::size_t width(std::size_t level) const { return base_channels << level; }
    // Width seen by the attention / gated paths at a block of `channels`.
    std::size_t path_width(std::size_t channels) const {
        return flags.split_mode == SplitMode::full ? channels : channels / 2;
    }
    SplitSizes split_sizes(std::size_t path_channels) const;

    // Throws ConfigError describing the first violated invariant.
    void validate() const;

    bool operator==(const RamConfig&) const = default;
};

// Small configuration used by tests and the desk-scale training runs.
RamConfig tiny_config(std::size_t channels, std::uint64_t seed = 0);

std::string to_string(SplitMode m);
std::string to_string(AttentionMode m);
std::string to_string(GateActivation m);
std::string to_string(TempGranularity m);

nlohmann::json to_json(const RamConfig& cfg);
// Missing keys keep their defaults; unknown keys raise ConfigError.
RamConfig ram_config_from_json(const nlohmann::json& j);

}  // namespace ram
