#include "ram/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <random>

#include "ram/blocks.hpp"
#include "ram/degrade.hpp"
#include "ram/errors.hpp"
#include "ram/model.hpp"
#include "ram/nn.hpp"
#include "ram/ops.hpp"
#include "ram/tape.hpp"
#include "ram/train.hpp"

namespace ram {

template <typename T>
Tensor<T> finite_diff_grad(const std::function<T(const Tensor<T>&)>& f, const Tensor<T>& x,
                           const std::vector<std::size_t>& coords, double h) {
    std::vector<T> g(x.numel(), T(0));
    std::vector<T> probe = x.to_vector();
    for (std::size_t i : coords) {
        if (i >= probe.size()) throw DimensionError("finite_diff_grad: coordinate out of range");
        const T orig = probe[i];
        probe[i] = orig + static_cast<T>(h);
        const T up = f(Tensor<T>(x.shape(), probe));
        probe[i] = orig - static_cast<T>(h);
        const T down = f(Tensor<T>(x.shape(), probe));
        probe[i] = orig;
        g[i] = (up - down) / static_cast<T>(2 * h);
    }
    return Tensor<T>(x.shape(), std::move(g));
}

template <typename T>
Tensor<T> finite_diff_grad(const std::function<T(const Tensor<T>&)>& f, const Tensor<T>& x, double h) {
    std::vector<std::size_t> all(x.numel());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    return finite_diff_grad(f, x, all, h);
}

double relative_error(const Tensor<double>& a, const Tensor<double>& b, const std::vector<std::size_t>& coords) {
    if (a.numel() != b.numel()) throw DimensionError("relative_error: size mismatch");
    double diff = 0, na = 0, nb = 0;
    auto acc = [&](std::size_t i) {
        const double x = a.ptr()[i], y = b.ptr()[i];
        diff += (x - y) * (x - y);
        na += x * x;
        nb += y * y;
    };
    if (coords.empty())
        for (std::size_t i = 0; i < a.numel(); ++i) acc(i);
    else
        for (std::size_t i : coords) acc(i);
    return std::sqrt(diff) / std::max({std::sqrt(na), std::sqrt(nb), 1e-300});
}

namespace {

using D = double;
using TV = std::vector<Tensor<D>>;

struct Case {
    std::string name;
    std::function<TV(std::mt19937_64&, std::size_t)> inputs;
    std::function<TV(const TV&)> fn;
    // Parameter names for inputs 1.. of weight-driven cases.
    std::shared_ptr<std::vector<std::string>> labels = std::make_shared<std::vector<std::string>>();
};

double uniform(std::mt19937_64& rng, double lo, double hi) {
    return lo + (hi - lo) * static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

Tensor<D> rand_tensor(std::mt19937_64& rng, Shape s, double lo = -2.0, double hi = 2.0) {
    std::vector<D> v(s.numel());
    for (auto& e : v) e = uniform(rng, lo, hi);
    return Tensor<D>(s, std::move(v));
}

// Re-draws every parameter uniformly so gradients are well scaled; the
// temperatures stay positive.
template <class W, class Visit>
void randomize(W& w, std::mt19937_64& rng, double amp, Visit visit) {
    visit(w, [&](const std::string& name, Tensor<D>& t) {
        const bool positive = name.find("tau") != std::string::npos || name.find("temperature") != std::string::npos;
        t = positive ? rand_tensor(rng, t.shape(), 0.5, 1.5) : rand_tensor(rng, t.shape(), -amp, amp);
    });
}

template <class W>
auto struct_visitor() {
    return [](auto& w, auto&& f) { std::remove_cvref_t<decltype(w)>::visit(w, "", f); };
}

template <class W, class Visit>
TV flatten(const W& w, Visit visit, std::vector<std::string>& names) {
    TV out;
    names.clear();
    visit(w, [&](const std::string& name, const Tensor<D>& t) {
        out.push_back(t);
        names.push_back(name);
    });
    return out;
}

template <class W, class Visit>
W assign(W w, const TV& leaves, std::size_t offset, Visit visit) {
    std::size_t i = offset;
    visit(w, [&](const std::string&, Tensor<D>& t) { t = leaves.at(i++); });
    return w;
}

// Case over a weights struct W: inputs are {x, params...}.
template <class W>
Case weights_case(std::string name, Shape xs, std::function<W(ParamInit&)> make,
                  std::function<TV(const Tensor<D>&, const W&)> apply, double amp = 0.5) {
    auto proto = std::make_shared<W>();
    auto visit = struct_visitor<W>();
    Case c;
    c.name = std::move(name);
    auto labels = c.labels;
    c.inputs = [=](std::mt19937_64& rng, std::size_t) {
        ParamInit init(rng());
        *proto = make(init);
        randomize(*proto, rng, amp, visit);
        TV in{rand_tensor(rng, xs)};
        for (auto& t : flatten(*proto, visit, *labels)) in.push_back(t);
        return in;
    };
    c.fn = [=](const TV& in) { return apply(in[0], assign(*proto, in, 1, visit)); };
    return c;
}

Case simple(std::string name, std::function<TV(std::mt19937_64&, std::size_t)> inputs,
            std::function<TV(const TV&)> fn) {
    return Case{std::move(name), std::move(inputs), std::move(fn)};
}

RamConfig block_config(BlockFlags flags) {
    RamConfig cfg = tiny_config(8);
    cfg.flags = flags;
    return cfg;
}

std::vector<Case> registry() {
    std::vector<Case> cases;
    auto img = [](std::size_t n, std::size_t c) {
        return [=](std::mt19937_64& r, std::size_t s) { return TV{rand_tensor(r, Shape{n, c, s, s})}; };
    };
    auto img2 = [](Shape a_fn, Shape b_fn, bool spatial_a, bool spatial_b) {
        return [=](std::mt19937_64& r, std::size_t s) {
            Shape a = a_fn, b = b_fn;
            if (spatial_a) a.h = a.w = s;
            if (spatial_b) b.h = b.w = s;
            return TV{rand_tensor(r, a), rand_tensor(r, b)};
        };
    };
    const Shape pix{1, 3, 0, 0};

    cases.push_back(simple("add", img2(pix, pix, true, true), [](const TV& v) { return TV{add(v[0], v[1])}; }));
    cases.push_back(simple("add_broadcast", img2(Shape{2, 3, 0, 0}, Shape{1, 3, 1, 1}, true, false),
                           [](const TV& v) { return TV{add(v[0], v[1])}; }));
    cases.push_back(simple("sub", img2(pix, pix, true, true), [](const TV& v) { return TV{sub(v[0], v[1])}; }));
    cases.push_back(simple("mul", img2(pix, pix, true, true), [](const TV& v) { return TV{mul(v[0], v[1])}; }));
    cases.push_back(simple("mul_broadcast", img2(Shape{2, 3, 0, 0}, Shape{2, 1, 1, 1}, true, false),
                           [](const TV& v) { return TV{mul(v[0], v[1])}; }));
    cases.push_back(simple("scale", img(1, 3), [](const TV& v) { return TV{scale(v[0], 0.37)}; }));
    cases.push_back(simple("sigmoid", img(1, 3), [](const TV& v) { return TV{sigmoid(v[0])}; }));
    cases.push_back(simple("gelu", img(1, 3), [](const TV& v) { return TV{gelu(v[0])}; }));
    cases.push_back(simple("abs", img(1, 3), [](const TV& v) { return TV{abs(v[0])}; }));
    const std::pair<const char*, std::pair<bool, bool>> mm[] = {
        {"matmul", {false, false}}, {"matmul_ta", {true, false}}, {"matmul_tb", {false, true}}, {"matmul_tab", {true, true}}};
    for (const auto& [name, t] : mm) {
        const bool ta = t.first, tb = t.second;
        cases.push_back(simple(
            name,
            [=](std::mt19937_64& r, std::size_t) {
                const Shape a = ta ? Shape{1, 2, 5, 4} : Shape{1, 2, 4, 5};
                const Shape b = tb ? Shape{1, 2, 3, 5} : Shape{1, 2, 5, 3};
                return TV{rand_tensor(r, a), rand_tensor(r, b)};
            },
            [=](const TV& v) { return TV{matmul(v[0], v[1], ta, tb)}; }));
    }
    for (int axis : {1, 2, 3})
        cases.push_back(simple("softmax_axis" + std::to_string(axis), img(2, 3),
                               [axis](const TV& v) { return TV{softmax(v[0], axis)}; }));
    cases.push_back(simple("channel_stats", img(2, 3), [](const TV& v) {
        auto s = channel_stats(v[0]);
        return TV{s.mean, s.std};
    }));
    cases.push_back(simple("l2_normalize", img(1, 3), [](const TV& v) { return TV{l2_normalize(v[0])}; }));
    cases.push_back(simple("interleaved_split", img(1, 4), [](const TV& v) {
        auto [a, b] = interleaved_split(v[0]);
        return TV{a, b};
    }));
    cases.push_back(simple("interleaved_merge", img2(Shape{1, 2, 0, 0}, Shape{1, 2, 0, 0}, true, true),
                           [](const TV& v) { return TV{interleaved_merge(v[0], v[1])}; }));
    cases.push_back(simple("concat_channels", img2(Shape{1, 2, 0, 0}, Shape{1, 3, 0, 0}, true, true),
                           [](const TV& v) { return TV{concat_channels(v)}; }));
    cases.push_back(simple("split_channels", img(1, 8), [](const TV& v) { return split_channels(v[0], {2, 2, 4}); }));
    cases.push_back(simple("reshape", img(1, 4), [](const TV& v) {
        const Shape s = v[0].shape();
        return TV{reshape(v[0], Shape{1, 2, 2, s.plane()})};
    }));
    cases.push_back(simple("sum", img(1, 3), [](const TV& v) { return TV{sum(v[0])}; }));
    cases.push_back(simple("mean", img(1, 3), [](const TV& v) { return TV{mean(v[0])}; }));
    cases.push_back(simple("l1_loss", img2(pix, pix, true, true), [](const TV& v) { return TV{l1_loss(v[0], v[1])}; }));

    struct ConvSpec {
        const char* name;
        std::size_t cin, cout, k, groups, stride;
    };
    for (const ConvSpec cs : {ConvSpec{"conv2d", 3, 4, 3, 1, 1}, ConvSpec{"conv2d_1x1", 4, 5, 1, 1, 1},
                              ConvSpec{"conv2d_depthwise", 4, 4, 3, 4, 1}, ConvSpec{"conv2d_grouped", 4, 6, 3, 2, 1},
                              ConvSpec{"conv2d_strided", 3, 2, 3, 1, 2}}) {
        cases.push_back(weights_case<ConvWeights<D>>(
            cs.name, Shape{1, cs.cin, 6, 6},
            [cs](ParamInit& init) {
                auto w = make_conv<D>(init, cs.cin, cs.cout, cs.k, cs.groups);
                w.stride = cs.stride;
                return w;
            },
            [](const Tensor<D>& x, const ConvWeights<D>& w) { return TV{conv2d(x, w)}; }));
    }
    cases.push_back(weights_case<NormWeights<D>>(
        "layer_norm", Shape{2, 4, 5, 5}, [](ParamInit&) { return make_norm<D>(4); },
        [](const Tensor<D>& x, const NormWeights<D>& w) { return TV{layer_norm(x, w)}; }));
    cases.push_back(simple("space_to_depth", img(1, 2), [](const TV& v) { return TV{space_to_depth(v[0])}; }));
    cases.push_back(simple("depth_to_space", img(1, 8), [](const TV& v) { return TV{depth_to_space(v[0])}; }));
    cases.push_back(weights_case<ConvWeights<D>>(
        "downsample", Shape{1, 2, 6, 6}, [](ParamInit& init) { return make_conv<D>(init, 8, 4, 1); },
        [](const Tensor<D>& x, const ConvWeights<D>& w) { return TV{downsample(x, w)}; }));
    cases.push_back(weights_case<ConvWeights<D>>(
        "upsample", Shape{1, 4, 3, 3}, [](ParamInit& init) { return make_conv<D>(init, 4, 8, 1); },
        [](const Tensor<D>& x, const ConvWeights<D>& w) { return TV{upsample(x, w)}; }));
    cases.push_back(simple("cross_sigmoid", img2(Shape{1, 4, 0, 0}, Shape{1, 4, 0, 0}, true, true), [](const TV& v) {
        auto [a, b] = cross_sigmoid(v[0], v[1]);
        return TV{a, b};
    }));

    struct AttnSpec {
        const char* name;
        std::size_t channels, heads;
        AttentionMode mode;
    };
    for (const AttnSpec as : {AttnSpec{"attention_channel", 4, 1, AttentionMode::channel},
                              AttnSpec{"attention_channel_heads", 4, 2, AttentionMode::channel},
                              AttnSpec{"attention_spatial", 4, 2, AttentionMode::spatial}}) {
        cases.push_back(weights_case<AttentionWeights<D>>(
            as.name, Shape{1, as.channels, 5, 5},
            [as](ParamInit& init) { return make_attention<D>(init, as.channels, as.heads, as.mode); },
            [](const Tensor<D>& x, const AttentionWeights<D>& w) { return TV{attention_forward(x, w)}; }));
    }

    struct GateSpec {
        const char* name;
        TempGranularity gran;
        GateActivation act;
    };
    for (const GateSpec gs : {GateSpec{"gated_da", TempGranularity::scalar, GateActivation::gelu},
                              GateSpec{"gated_da_per_channel", TempGranularity::per_channel_mapped, GateActivation::gelu},
                              GateSpec{"gated_da_sigmoid", TempGranularity::scalar, GateActivation::sigmoid}}) {
        RamConfig cfg = tiny_config(8);
        cfg.flags.temp_granularity = gs.gran;
        cfg.flags.gate_activation = gs.act;
        cases.push_back(weights_case<GatedDaWeights<D>>(
            gs.name, Shape{1, 4, 6, 6}, [cfg](ParamInit& init) { return make_gated_da<D>(init, 4, cfg); },
            [](const Tensor<D>& x, const GatedDaWeights<D>& w) { return TV{gated_da_forward(x, w)}; }));
    }
    cases.push_back(weights_case<FfnWeights<D>>(
        "ffn", Shape{1, 4, 5, 5}, [](ParamInit& init) { return make_ffn<D>(init, 4, 2); },
        [](const Tensor<D>& x, const FfnWeights<D>& w) { return TV{ffn_forward(x, w)}; }));
    for (char v : {'a', 'b', 'c', 'd', 'e'}) {
        const RamConfig cfg = block_config(variant_flags(v));
        cases.push_back(weights_case<DabWeights<D>>(
            std::string("dab_variant_") + v, Shape{1, 8, 5, 5},
            [cfg](ParamInit& init) { return make_dab<D>(init, 8, 2, cfg); },
            [](const Tensor<D>& x, const DabWeights<D>& w) { return TV{dab_forward(x, w)}; }, 0.4));
    }

    // Whole network at C = 8 on an 8 x 8 image.
    {
        auto proto = std::make_shared<RamModel<D>>();
        auto visit = [](auto& m, auto&& f) { std::remove_cvref_t<decltype(m)>::visit(m, f); };
        Case c;
        c.name = "forward_c8";
        auto labels = c.labels;
        c.inputs = [=](std::mt19937_64& rng, std::size_t) {
            *proto = build<D>(tiny_config(8, rng()));
            randomize(*proto, rng, 0.3, visit);
            TV in{rand_tensor(rng, Shape{1, 3, 8, 8}, 0.0, 1.0)};
            for (auto& t : flatten(*proto, visit, *labels)) in.push_back(t);
            return in;
        };
        c.fn = [=](const TV& in) { return TV{forward(assign(*proto, in, 1, visit), in[0])}; };
        cases.push_back(std::move(c));
    }
    return cases;
}

D weighted_sum(const TV& outs, const TV& weights) {
    D total = 0;
    for (std::size_t k = 0; k < outs.size(); ++k)
        for (std::size_t i = 0; i < outs[k].numel(); ++i) total += outs[k].ptr()[i] * weights[k].ptr()[i];
    return total;
}

GradCheckResult run_case(const Case& c, const GradCheckOptions& opt, std::uint64_t case_seed) {
    std::mt19937_64 rng(case_seed);
    const TV inputs = c.inputs(rng, opt.size);

    TV outs;
    {
        NoGradScope<D> off;
        outs = c.fn(inputs);
    }
    TV weights;
    for (const auto& o : outs) weights.push_back(rand_tensor(rng, o.shape(), -1.0, 1.0));

    TV analytic;
    {
        GradTape<D> tape;
        if (!opt.corrupt_op.empty()) tape.inject_fault(opt.corrupt_op, 1.5);
        TapeScope<D> scope(tape);
        TV watched;
        for (const auto& t : inputs) watched.push_back(tape.watch(t));
        const TV y = c.fn(watched);
        Tensor<D> loss;
        for (std::size_t k = 0; k < y.size(); ++k) {
            const Tensor<D> term = sum(mul(y[k], weights[k]));
            loss = k == 0 ? term : add(loss, term);
        }
        tape.backward(loss);
        for (const auto& t : watched) analytic.push_back(tape.grad(t));
    }

    GradCheckResult r;
    r.name = c.name;
    NoGradScope<D> off;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        const std::size_t n = inputs[i].numel();
        std::vector<std::size_t> coords;
        if (n <= opt.max_coords) {
            for (std::size_t k = 0; k < n; ++k) coords.push_back(k);
        } else {
            for (std::size_t k = 0; k < n; ++k) coords.push_back(k);
            for (std::size_t k = 0; k < opt.max_coords; ++k) std::swap(coords[k], coords[k + rng() % (n - k)]);
            coords.resize(opt.max_coords);
        }
        const std::function<D(const Tensor<D>&)> f = [&](const Tensor<D>& probe) {
            TV in = inputs;
            in[i] = probe;
            return weighted_sum(c.fn(in), weights);
        };
        const Tensor<D> numeric = finite_diff_grad<D>(f, inputs[i], coords, 1e-4);
        const double err = relative_error(analytic[i], numeric, coords);
        ++r.tensors;
        r.coords += coords.size();
        if (err >= r.max_rel_error) {
            r.max_rel_error = err;
            if (i > 0 && c.labels->size() >= i) r.worst_tensor = (*c.labels)[i - 1];
            else r.worst_tensor = "input" + std::to_string(i);
        }
    }
    r.pass = r.max_rel_error <= kGradTolerance;
    return r;
}

}  // namespace

std::vector<std::string> gradcheck_case_names() {
    std::vector<std::string> names;
    for (const auto& c : registry()) names.push_back(c.name);
    return names;
}

std::vector<GradCheckResult> run_gradcheck(const GradCheckOptions& opt) {
    if (opt.size < 4) throw ConfigError("gradcheck size must be >= 4");
    std::vector<GradCheckResult> out;
    const auto cases = registry();
    for (std::size_t i = 0; i < cases.size(); ++i) {
        if (!opt.filter.empty() && cases[i].name.find(opt.filter) == std::string::npos) continue;
        out.push_back(run_case(cases[i], opt, derive_seed(opt.seed, i)));
    }
    return out;
}

template Tensor<float> finite_diff_grad<float>(const std::function<float(const Tensor<float>&)>&,
                                               const Tensor<float>&, double);
template Tensor<double> finite_diff_grad<double>(const std::function<double(const Tensor<double>&)>&,
                                                 const Tensor<double>&, double);
template Tensor<float> finite_diff_grad<float>(const std::function<float(const Tensor<float>&)>&,
                                               const Tensor<float>&, const std::vector<std::size_t>&, double);
template Tensor<double> finite_diff_grad<double>(const std::function<double(const Tensor<double>&)>&,
                                                 const Tensor<double>&, const std::vector<std::size_t>&, double);

}  // namespace ram
