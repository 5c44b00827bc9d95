#include "ram/checkpoint.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>

#include "ram/errors.hpp"

namespace ram {

namespace {

constexpr char kMagic[8] = {'R', 'A', 'M', 'C', 'K', 'P', 'T', '1'};

class Writer {
public:
    template <typename U>
    void put(U v) {
        static_assert(std::is_trivially_copyable_v<U>);
        unsigned char b[sizeof(U)];
        std::memcpy(b, &v, sizeof(U));
        if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(U));
        buf_.insert(buf_.end(), b, b + sizeof(U));
    }
    void put_bytes(const void* p, std::size_t n) {
        const auto* c = static_cast<const unsigned char*>(p);
        buf_.insert(buf_.end(), c, c + n);
    }
    void put_string(const std::string& s, bool short_len = false) {
        if (short_len) put<std::uint32_t>(static_cast<std::uint32_t>(s.size()));
        else put<std::uint64_t>(s.size());
        put_bytes(s.data(), s.size());
    }
    template <typename T>
    void put_tensor(const std::string& name, const Tensor<T>& t) {
        put_string(name, true);
        put<std::uint8_t>(static_cast<std::uint8_t>(precision_of<T>()));
        const Shape& s = t.shape();
        for (std::uint64_t d : {s.n, s.c, s.h, s.w}) put<std::uint64_t>(d);
        for (T v : t.data()) put<T>(v);
    }
    void write(const std::filesystem::path& path) const {
        std::ofstream f(path, std::ios::binary | std::ios::trunc);
        if (!f) throw DataError("cannot open '" + path.string() + "' for writing");
        f.write(reinterpret_cast<const char*>(buf_.data()), static_cast<std::streamsize>(buf_.size()));
        if (!f) throw DataError("write to '" + path.string() + "' failed");
    }

private:
    std::vector<unsigned char> buf_;
};

class Reader {
public:
    explicit Reader(const std::filesystem::path& path) : path_(path.string()) {
        std::ifstream f(path, std::ios::binary);
        if (!f) throw DataError("cannot open checkpoint '" + path_ + "'");
        buf_.assign(std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>());
    }
    // What is being read, for truncation messages.
    std::string context = "header";

    void need(std::size_t n) const {
        if (buf_.size() - pos_ < n)
            throw FormatError("checkpoint '" + path_ + "' truncated while reading " + context);
    }
    template <typename U>
    U get() {
        need(sizeof(U));
        unsigned char b[sizeof(U)];
        std::memcpy(b, buf_.data() + pos_, sizeof(U));
        if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(U));
        pos_ += sizeof(U);
        U v;
        std::memcpy(&v, b, sizeof(U));
        return v;
    }
    std::string get_string(bool short_len = false) {
        const std::uint64_t n = short_len ? get<std::uint32_t>() : get<std::uint64_t>();
        need(n);
        std::string s(buf_.data() + pos_, buf_.data() + pos_ + n);
        pos_ += n;
        return s;
    }
    bool at_end() const { return pos_ == buf_.size(); }
    const std::string& path() const { return path_; }

private:
    std::string path_;
    std::vector<char> buf_;
    std::size_t pos_ = 0;
};

struct RawTensor {
    Precision precision;
    Shape shape;
    std::vector<double> values;  // widened; float -> double is exact
};

struct Parsed {
    RamConfig cfg;
    std::uint64_t step = 0, adam_t = 0;
    std::string rng_state;
    std::vector<std::string> order;
    std::map<std::string, RawTensor> tensors;
};

Parsed parse(const std::filesystem::path& path) {
    Reader r(path);
    r.context = "magic";
    char magic[8];
    for (char& c : magic) c = r.get<char>();
    if (std::memcmp(magic, kMagic, 8) != 0) throw FormatError("'" + r.path() + "' is not a RAM checkpoint (bad magic)");
    r.context = "version";
    const auto version = r.get<std::uint32_t>();
    if (version != kCheckpointVersion)
        throw FormatError("checkpoint '" + r.path() + "' has version " + std::to_string(version) + ", expected " +
                          std::to_string(kCheckpointVersion));
    Parsed p;
    r.context = "config";
    const std::string cfg_text = r.get_string();
    try {
        p.cfg = ram_config_from_json(nlohmann::json::parse(cfg_text));
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("checkpoint '" + r.path() + "' has a corrupt config: " + e.what());
    }
    r.context = "training state";
    p.step = r.get<std::uint64_t>();
    p.rng_state = r.get_string();
    p.adam_t = r.get<std::uint64_t>();
    r.context = "tensor count";
    const auto count = r.get<std::uint64_t>();
    for (std::uint64_t i = 0; i < count; ++i) {
        r.context = "tensor #" + std::to_string(i) + " name";
        const std::string name = r.get_string(true);
        r.context = "tensor '" + name + "'";
        RawTensor t;
        const auto prec = r.get<std::uint8_t>();
        if (prec > 1) throw FormatError("tensor '" + name + "' has unknown precision tag " + std::to_string(prec));
        t.precision = static_cast<Precision>(prec);
        t.shape.n = r.get<std::uint64_t>();
        t.shape.c = r.get<std::uint64_t>();
        t.shape.h = r.get<std::uint64_t>();
        t.shape.w = r.get<std::uint64_t>();
        const std::size_t elem = t.precision == Precision::f32 ? 4 : 8;
        r.need(t.shape.numel() * elem);
        t.values.resize(t.shape.numel());
        for (double& v : t.values) v = t.precision == Precision::f32 ? double(r.get<float>()) : r.get<double>();
        if (p.tensors.count(name)) throw FormatError("checkpoint has duplicate tensor '" + name + "'");
        p.order.push_back(name);
        p.tensors.emplace(name, std::move(t));
    }
    if (!r.at_end()) throw FormatError("checkpoint '" + r.path() + "' has trailing bytes");
    return p;
}

template <typename T>
Tensor<T> take(const Parsed& p, const std::string& name, const Shape& expected) {
    auto it = p.tensors.find(name);
    if (it == p.tensors.end()) throw FormatError("checkpoint is missing tensor '" + name + "'");
    const RawTensor& raw = it->second;
    if (!(raw.shape == expected))
        throw FormatError("tensor '" + name + "' has shape " + raw.shape.str() + ", model expects " + expected.str());
    std::vector<T> v(raw.values.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<T>(raw.values[i]);
    return Tensor<T>(expected, std::move(v));
}

}  // namespace

template <typename T>
void save_checkpoint(const std::filesystem::path& path, const RamModel<T>& model, const TrainState<T>* state) {
    Writer w;
    w.put_bytes(kMagic, 8);
    w.put<std::uint32_t>(kCheckpointVersion);
    w.put_string(to_json(model.cfg).dump());
    w.put<std::uint64_t>(state ? state->step : 0);
    w.put_string(state ? state->rng_state : std::string());
    const bool with_adam = state && !state->adam.m.empty();
    w.put<std::uint64_t>(with_adam ? state->adam.t : 0);

    const auto names = parameter_names(model);
    const auto params = model_parameters(model);
    if (with_adam && (state->adam.m.size() != params.size() || state->adam.v.size() != params.size()))
        throw StateError("save_checkpoint: optimizer state does not match the model");
    w.put<std::uint64_t>(with_adam ? 3 * params.size() : params.size());
    for (std::size_t i = 0; i < params.size(); ++i) w.put_tensor(names[i], params[i]);
    if (with_adam) {
        for (std::size_t i = 0; i < params.size(); ++i) w.put_tensor("adam.m." + names[i], state->adam.m[i]);
        for (std::size_t i = 0; i < params.size(); ++i) w.put_tensor("adam.v." + names[i], state->adam.v[i]);
    }
    w.write(path);
}

template <typename T>
Checkpoint<T> load_checkpoint(const std::filesystem::path& path) {
    const Parsed p = parse(path);
    Checkpoint<T> ck;
    ck.model = build<T>(p.cfg);
    const auto names = parameter_names(ck.model);
    auto params = model_parameters(ck.model);
    for (std::size_t i = 0; i < params.size(); ++i) params[i] = take<T>(p, names[i], params[i].shape());
    set_model_parameters(ck.model, params);

    ck.has_optimizer = p.tensors.count("adam.m." + names.front()) > 0;
    const std::size_t expected = ck.has_optimizer ? 3 * names.size() : names.size();
    if (p.tensors.size() != expected) {
        for (const auto& n : p.order) {
            const std::string base = n.rfind("adam.", 0) == 0 ? n.substr(7) : n;
            if (std::find(names.begin(), names.end(), base) == names.end())
                throw FormatError("checkpoint has unexpected tensor '" + n + "'");
        }
        throw FormatError("checkpoint optimizer state is incomplete");
    }
    ck.state.step = p.step;
    ck.state.rng_state = p.rng_state;
    if (ck.has_optimizer) {
        ck.state.adam.t = p.adam_t;
        for (std::size_t i = 0; i < names.size(); ++i) {
            ck.state.adam.m.push_back(take<T>(p, "adam.m." + names[i], params[i].shape()));
            ck.state.adam.v.push_back(take<T>(p, "adam.v." + names[i], params[i].shape()));
        }
    }
    return ck;
}

template <typename T>
void load_weights_into(RamModel<T>& model, const std::filesystem::path& path) {
    const Parsed p = parse(path);
    const auto names = parameter_names(model);
    auto params = model_parameters(model);
    for (std::size_t i = 0; i < params.size(); ++i) params[i] = take<T>(p, names[i], params[i].shape());
    for (const auto& n : p.order)
        if (n.rfind("adam.", 0) != 0 && std::find(names.begin(), names.end(), n) == names.end())
            throw FormatError("checkpoint tensor '" + n + "' has no counterpart in the model");
    set_model_parameters(model, params);
}

std::uint64_t checkpoint_scalar_count(const std::filesystem::path& path) {
    const Parsed p = parse(path);
    std::uint64_t n = 0;
    for (const auto& [name, t] : p.tensors) n += t.shape.numel();
    return n;
}

template void save_checkpoint<float>(const std::filesystem::path&, const RamModel<float>&, const TrainState<float>*);
template void save_checkpoint<double>(const std::filesystem::path&, const RamModel<double>&,
                                      const TrainState<double>*);
template Checkpoint<float> load_checkpoint<float>(const std::filesystem::path&);
template Checkpoint<double> load_checkpoint<double>(const std::filesystem::path&);
template void load_weights_into<float>(RamModel<float>&, const std::filesystem::path&);
template void load_weights_into<double>(RamModel<double>&, const std::filesystem::path&);

}  // namespace ram
