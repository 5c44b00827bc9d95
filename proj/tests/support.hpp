#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <unistd.h>

#include "ram/tensor.hpp"

namespace test {

template <typename T = double>
ram::Tensor<T> random_tensor(ram::Shape s, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> d(lo, hi);
    std::vector<T> v(s.numel());
    for (auto& x : v) x = static_cast<T>(d(rng));
    return ram::Tensor<T>(s, std::move(v));
}

template <typename T>
double max_abs_diff(const ram::Tensor<T>& a, const ram::Tensor<T>& b) {
    double m = 0;
    for (std::size_t i = 0; i < a.numel(); ++i) m = std::max(m, std::abs(double(a.at(i)) - double(b.at(i))));
    return m;
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double m = 0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

template <typename T>
bool bit_equal(const ram::Tensor<T>& a, const ram::Tensor<T>& b) {
    if (!(a.shape() == b.shape())) return false;
    return std::equal(a.data().begin(), a.data().end(), b.data().begin());
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("ram_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& s) const { return path_ / s; }

private:
    std::filesystem::path path_;
};

// Overwrites every tensor visited with uniform values in [-amp, amp];
// names containing "tau" or "temperature" get [0.5, 1.5] instead.
template <class W, class Visit>
void randomize(W& w, Visit visit, std::uint64_t seed, double amp) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> d(-amp, amp), pos(0.5, 1.5);
    visit(w, [&](const std::string& name, auto& t) {
        using Tn = std::decay_t<decltype(t)>;
        using V = typename Tn::value_type;
        const bool positive = name.find("tau") != std::string::npos || name.find("temperature") != std::string::npos;
        std::vector<V> v(t.numel());
        for (auto& x : v) x = static_cast<V>(positive ? pos(rng) : d(rng));
        t = Tn(t.shape(), std::move(v));
    });
}

}  // namespace test
