#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "ram/config.hpp"
#include "ram/model.hpp"
#include "ram/train.hpp"
#include "json.hpp"

namespace ram {

// The document accepted by --config. Every section is optional; missing
// fields take their defaults and unknown keys raise ConfigError.
struct RunConfig {
    RamConfig model;
    TrainConfig train;
    struct Data {
        std::string train_manifest;
        std::string eval_manifest;
        bool operator==(const Data&) const = default;
    } data;
    struct Output {
        std::string dir = "ram_out";
        bool operator==(const Output&) const = default;
    } output;
    // True when the source document carried a "model" section.
    bool explicit_model = false;

    void validate() const;
};

nlohmann::json to_json(const RunConfig& c);
RunConfig run_config_from_json(const nlohmann::json& j);
// Reads and validates a config file (FormatError on malformed JSON).
RunConfig load_run_config(const std::filesystem::path& path);

enum class PadMode { automatic, strict };
PadMode pad_mode_from_string(const std::string& s);

// Runs the model on an (N, 3, H, W) image of any size. Under `automatic`,
// the image is reflect-padded at the bottom/right to multiples of 8 and the
// output is cropped back; under `strict`, a non-multiple raises DimensionError.
template <typename T>
Tensor<T> restore(const RamModel<T>& m, const Tensor<T>& img, PadMode pad);

// Entry point of the `ram` tool. `args` excludes the program name.
// Returns the process exit code: 0 success, 1 usage/config, 2 data, 3 numeric.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ram
