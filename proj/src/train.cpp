#include "ram/train.hpp"

#include <cmath>
#include <iostream>
#include <random>
#include <set>
#include <sstream>

#include "ram/errors.hpp"
#include "ram/image.hpp"
#include "ram/ops.hpp"
#include "ram/tape.hpp"

namespace ram {

void TrainConfig::validate() const {
    if (!(lr >= 0) || !std::isfinite(lr)) throw ConfigError("train.lr must be finite and >= 0");
    if (!(beta1 >= 0 && beta1 < 1) || !(beta2 >= 0 && beta2 < 1)) throw ConfigError("train betas must be in [0, 1)");
    if (!(eps > 0)) throw ConfigError("train.eps must be positive");
    if (batch == 0) throw ConfigError("train.batch must be >= 1");
    if (patch == 0 || patch % 8 != 0) throw ConfigError("train.patch must be a positive multiple of 8");
    if (loss != "l1") throw ConfigError("train.loss '" + loss + "' unsupported (only l1)");
}

nlohmann::json to_json(const TrainConfig& c) {
    return {{"lr", c.lr},       {"betas", {c.beta1, c.beta2}}, {"eps", c.eps},   {"batch", c.batch},
            {"patch", c.patch}, {"steps", c.steps},            {"seed", c.seed}, {"loss", c.loss},
            {"checkpoint_every", c.checkpoint_every}};
}

TrainConfig train_config_from_json(const nlohmann::json& j) {
    static const std::set<std::string> known = {"lr",    "betas", "eps",  "batch",           "patch",
                                                "steps", "seed",  "loss", "checkpoint_every"};
    if (!j.is_object()) throw ConfigError("train must be a JSON object");
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!known.count(it.key())) throw ConfigError("unknown key '" + it.key() + "' in train");
    TrainConfig c;
    try {
        if (j.contains("lr")) c.lr = j.at("lr").get<double>();
        if (j.contains("betas")) {
            const auto b = j.at("betas").get<std::vector<double>>();
            if (b.size() != 2) throw ConfigError("train.betas needs two values");
            c.beta1 = b[0];
            c.beta2 = b[1];
        }
        if (j.contains("eps")) c.eps = j.at("eps").get<double>();
        if (j.contains("batch")) c.batch = j.at("batch").get<std::size_t>();
        if (j.contains("patch")) c.patch = j.at("patch").get<std::size_t>();
        if (j.contains("steps")) c.steps = j.at("steps").get<std::size_t>();
        if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
        if (j.contains("loss")) c.loss = j.at("loss").get<std::string>();
        if (j.contains("checkpoint_every")) c.checkpoint_every = j.at("checkpoint_every").get<std::size_t>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("train config: ") + e.what());
    }
    c.validate();
    return c;
}

template <typename T>
Tensor<T> l1_loss(const Tensor<T>& pred, const Tensor<T>& target) {
    if (!(pred.shape() == target.shape()))
        throw DimensionError("l1_loss: " + pred.shape().str() + " vs " + target.shape().str());
    return mean(abs(sub(pred, target)));
}

template <typename T>
AdamState<T> AdamState<T>::zeros_like(const std::vector<Tensor<T>>& params) {
    AdamState<T> s;
    for (const auto& p : params) {
        s.m.push_back(Tensor<T>::zeros(p.shape()));
        s.v.push_back(Tensor<T>::zeros(p.shape()));
    }
    return s;
}

template <typename T>
void adam_step(std::vector<Tensor<T>>& params, const std::vector<Tensor<T>>& grads, AdamState<T>& state,
               const TrainConfig& cfg) {
    if (grads.size() != params.size() || state.m.size() != params.size() || state.v.size() != params.size())
        throw DimensionError("adam_step: parameter, gradient and moment counts differ");
    state.t += 1;
    const double bc1 = 1.0 - std::pow(cfg.beta1, double(state.t));
    const double bc2 = 1.0 - std::pow(cfg.beta2, double(state.t));
    const T b1 = static_cast<T>(cfg.beta1), b2 = static_cast<T>(cfg.beta2);
    for (std::size_t i = 0; i < params.size(); ++i) {
        const std::size_t n = params[i].numel();
        if (grads[i].numel() != n || state.m[i].numel() != n)
            throw DimensionError("adam_step: shape mismatch at parameter " + std::to_string(i));
        std::vector<T> p = params[i].to_vector(), m = state.m[i].to_vector(), v = state.v[i].to_vector();
        const T* g = grads[i].ptr();
        for (std::size_t k = 0; k < n; ++k) {
            m[k] = b1 * m[k] + (T(1) - b1) * g[k];
            v[k] = b2 * v[k] + (T(1) - b2) * g[k] * g[k];
            const double mhat = double(m[k]) / bc1, vhat = double(v[k]) / bc2;
            p[k] = static_cast<T>(double(p[k]) - cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps));
        }
        require_finite<T>(p, "adam_step");
        params[i] = Tensor<T>(params[i].shape(), std::move(p));
        state.m[i] = Tensor<T>(params[i].shape(), std::move(m));
        state.v[i] = Tensor<T>(params[i].shape(), std::move(v));
    }
}

template <typename T>
std::vector<Tensor<T>> model_parameters(const RamModel<T>& m) {
    std::vector<Tensor<T>> out;
    RamModel<T>::visit(m, [&](const std::string&, const Tensor<T>& t) { out.push_back(t); });
    return out;
}

template <typename T>
void set_model_parameters(RamModel<T>& m, const std::vector<Tensor<T>>& params) {
    std::size_t i = 0;
    RamModel<T>::visit(m, [&](const std::string& name, Tensor<T>& t) {
        if (i >= params.size() || !(params[i].shape() == t.shape()))
            throw DimensionError("set_model_parameters: mismatch at '" + name + "'");
        t = params[i++];
    });
    if (i != params.size()) throw DimensionError("set_model_parameters: too many tensors");
}

template <typename T>
std::vector<std::string> parameter_names(const RamModel<T>& m) {
    std::vector<std::string> out;
    RamModel<T>::visit(m, [&](const std::string& name, const Tensor<T>&) { out.push_back(name); });
    return out;
}

std::vector<TrainPair> load_pairs(const std::vector<ManifestEntry>& entries, std::size_t patch) {
    std::vector<TrainPair> pairs;
    for (const auto& e : entries) {
        try {
            TrainPair p{e.degraded.filename().string(), load_image<float>(e.degraded), load_image<float>(e.clean)};
            if (!(p.degraded.shape() == p.clean.shape())) {
                std::cerr << "warning: skipping " << p.id << ": degraded and clean sizes differ\n";
                continue;
            }
            if (p.clean.shape().h < patch || p.clean.shape().w < patch) {
                std::cerr << "warning: skipping " << p.id << ": smaller than the " << patch << "px patch\n";
                continue;
            }
            pairs.push_back(std::move(p));
        } catch (const Error& ex) {
            std::cerr << "warning: skipping " << e.degraded.string() << ": " << ex.what() << "\n";
        }
    }
    if (pairs.empty()) throw DataError("no usable training pairs");
    return pairs;
}

namespace {

void copy_crop(const Tensor<float>& src, std::size_t top, std::size_t left, std::size_t patch, float* dst) {
    const Shape& s = src.shape();
    for (std::size_t c = 0; c < 3; ++c)
        for (std::size_t y = 0; y < patch; ++y) {
            const float* row = src.ptr() + (c * s.h + top + y) * s.w + left;
            std::copy(row, row + patch, dst + (c * patch + y) * patch);
        }
}

}  // namespace

std::vector<double> train(RamModel<float>& model, TrainState<float>& state, const std::vector<TrainPair>& pairs,
                          const TrainConfig& cfg, const TrainHooks& hooks) {
    cfg.validate();
    if (pairs.empty()) throw DataError("train: no training pairs");
    std::vector<Tensor<float>> params = model_parameters(model);
    if (state.adam.m.empty()) state.adam = AdamState<float>::zeros_like(params);
    std::mt19937_64 rng(cfg.seed);
    if (!state.rng_state.empty()) {
        std::istringstream in(state.rng_state);
        in >> rng;
        if (!in) throw FormatError("train: corrupt RNG state");
    }

    const std::size_t p = cfg.patch, B = cfg.batch;
    const Shape batch_shape{B, 3, p, p};
    std::vector<double> losses;
    while (state.step < cfg.steps) {
        // Portable sampling: raw 64-bit draws reduced modulo the range.
        std::vector<float> in(batch_shape.numel()), target(batch_shape.numel());
        for (std::size_t b = 0; b < B; ++b) {
            const TrainPair& pr = pairs[rng() % pairs.size()];
            const Shape& s = pr.clean.shape();
            const std::size_t top = rng() % (s.h - p + 1), left = rng() % (s.w - p + 1);
            copy_crop(pr.degraded, top, left, p, in.data() + b * 3 * p * p);
            copy_crop(pr.clean, top, left, p, target.data() + b * 3 * p * p);
        }
        const Tensor<float> x(batch_shape, std::move(in)), y(batch_shape, std::move(target));

        GradTape<float> tape;
        std::vector<Tensor<float>> grads;
        double loss_value = 0;
        {
            TapeScope<float> scope(tape);
            std::vector<Tensor<float>> watched;
            for (auto& t : params) watched.push_back(tape.watch(t));
            set_model_parameters(model, watched);
            const Tensor<float> loss = l1_loss(forward(model, x), y);
            loss_value = loss.item();
            tape.backward(loss);
            for (const auto& t : watched) grads.push_back(tape.grad(t));
        }
        adam_step(params, grads, state.adam, cfg);
        set_model_parameters(model, params);
        if (!std::isfinite(loss_value)) throw NumericError("train: non-finite loss at step " + std::to_string(state.step + 1));
        ++state.step;
        losses.push_back(loss_value);
        std::ostringstream out;
        out << rng;
        state.rng_state = out.str();
        if (hooks.on_step) hooks.on_step(state.step, loss_value);
        if (cfg.checkpoint_every && state.step % cfg.checkpoint_every == 0 && state.step < cfg.steps &&
            hooks.on_checkpoint)
            hooks.on_checkpoint(state.step);
    }
    std::ostringstream out;
    out << rng;
    state.rng_state = out.str();
    return losses;
}

#define RAM_INSTANTIATE_TRAIN(T)                                                                              \
    template Tensor<T> l1_loss<T>(const Tensor<T>&, const Tensor<T>&);                                        \
    template struct AdamState<T>;                                                                             \
    template void adam_step<T>(std::vector<Tensor<T>>&, const std::vector<Tensor<T>>&, AdamState<T>&,          \
                               const TrainConfig&);                                                           \
    template std::vector<Tensor<T>> model_parameters<T>(const RamModel<T>&);                                  \
    template void set_model_parameters<T>(RamModel<T>&, const std::vector<Tensor<T>>&);                       \
    template std::vector<std::string> parameter_names<T>(const RamModel<T>&);

RAM_INSTANTIATE_TRAIN(float)
RAM_INSTANTIATE_TRAIN(double)

}  // namespace ram
