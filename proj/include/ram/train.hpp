#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "ram/degrade.hpp"
#include "ram/model.hpp"
#include "ram/tensor.hpp"
#include "json.hpp"

namespace ram {

struct TrainConfig {
    double lr = 3e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::size_t batch = 2;
    std::size_t patch = 64;
    std::size_t steps = 1000;
    std::uint64_t seed = 0;
    std::string loss = "l1";
    std::size_t checkpoint_every = 0;  // 0: only the final checkpoint

    void validate() const;
    bool operator==(const TrainConfig&) const = default;
};

nlohmann::json to_json(const TrainConfig& c);
TrainConfig train_config_from_json(const nlohmann::json& j);

// Mean absolute error (subgradient 0 at ties).
template <typename T>
Tensor<T> l1_loss(const Tensor<T>& pred, const Tensor<T>& target);

// First and second moments, one pair per parameter tensor, plus the number
// of completed steps.
template <typename T>
struct AdamState {
    std::vector<Tensor<T>> m, v;
    std::uint64_t t = 0;

    static AdamState zeros_like(const std::vector<Tensor<T>>& params);
};

// One bias-corrected Adam update of every parameter. Increments state.t.
template <typename T>
void adam_step(std::vector<Tensor<T>>& params, const std::vector<Tensor<T>>& grads, AdamState<T>& state,
               const TrainConfig& cfg);

// Parameter tensors of `m` in visit order, and the inverse.
template <typename T>
std::vector<Tensor<T>> model_parameters(const RamModel<T>& m);
template <typename T>
void set_model_parameters(RamModel<T>& m, const std::vector<Tensor<T>>& params);
template <typename T>
std::vector<std::string> parameter_names(const RamModel<T>& m);

// Training progress that a checkpoint needs to resume bit-exactly.
template <typename T>
struct TrainState {
    AdamState<T> adam;
    std::uint64_t step = 0;
    std::string rng_state;  // textual std::mt19937_64 state
};

struct TrainPair {
    std::string id;
    Tensor<float> degraded, clean;  // (1, 3, H, W)
};

// Loads manifest pairs, skipping (with a warning) unreadable ones and those
// smaller than `patch`. Throws DataError when nothing is usable.
std::vector<TrainPair> load_pairs(const std::vector<ManifestEntry>& entries, std::size_t patch);

struct TrainHooks {
    // Called after every step with (step, loss).
    std::function<void(std::size_t, double)> on_step;
    // Called when a checkpoint is due, with the step just completed.
    std::function<void(std::size_t)> on_checkpoint;
};

// Runs cfg.steps steps of aligned random crop -> forward -> loss -> backward
// -> Adam, starting from `state` (fresh when state.step == 0). Every
// parameter is checked for finiteness after each step (NumericError).
// Returns the per-step losses.
std::vector<double> train(RamModel<float>& model, TrainState<float>& state, const std::vector<TrainPair>& pairs,
                          const TrainConfig& cfg, const TrainHooks& hooks = {});

}  // namespace ram
