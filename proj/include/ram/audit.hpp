#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "ram/config.hpp"
#include "ram/model.hpp"
#include "json.hpp"

namespace ram {

// FLOP convention: 2 per multiply-accumulate, 1 per bias add and per
// elementwise add/mul, 5 per element for softmax, GELU, sigmoid and
// layer_norm, 3 per element for channel statistics and L2 normalization.
// Reshapes, splits and concatenations are free.
inline constexpr std::uint64_t kFlopsPerTranscendental = 5;
inline constexpr std::uint64_t kFlopsPerStatistic = 3;

struct AuditEntry {
    std::string module;
    std::uint64_t value = 0;
};

struct ParamReport {
    std::uint64_t total = 0;
    std::vector<AuditEntry> modules;  // in parameter order; sums to total
};

struct FlopReport {
    std::uint64_t total = 0;
    std::vector<AuditEntry> modules;  // in execution order; sums to total
    // Q.K^T and score.V products of every attention layer.
    std::uint64_t attention_core = 0;
};

template <typename T>
ParamReport count_params(const RamModel<T>& m);

// Analytic count for one (3, H, W) image.
template <typename T>
FlopReport count_flops(const RamModel<T>& m, std::size_t height, std::size_t width);

// Attention-core FLOPs of cfg divided by those of the same config with
// full-channel blocks and no gate.
double attention_core_ratio(const RamConfig& cfg, std::size_t height, std::size_t width);

// Closed-form prediction of attention_core_ratio: halving the attention
// width scales the C_h x C_h score products by 1/4 and the HW x HW ones by 1/2.
double predicted_attention_ratio(AttentionMode mode);

// Full audit for the count command.
nlohmann::json audit_json(const RamConfig& cfg, std::size_t height, std::size_t width);

}  // namespace ram
