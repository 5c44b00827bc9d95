#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "ram/errors.hpp"

namespace ram {

enum class Precision : std::uint8_t { f32 = 0, f64 = 1 };

struct Shape {
    std::size_t n = 0, c = 0, h = 0, w = 0;

    std::size_t numel() const { return n * c * h * w; }
    std::size_t plane() const { return h * w; }
    bool operator==(const Shape&) const = default;
    std::string str() const;
};

template <typename T>
constexpr Precision precision_of() {
    static_assert(std::is_same_v<T, float> || std::is_same_v<T, double>);
    return std::is_same_v<T, float> ? Precision::f32 : Precision::f64;
}

// Rank-4 NCHW value. The buffer is shared and never mutated after
// construction, so copies are cheap and safe to read from any thread.
// A tensor produced while a GradTape is active carries a handle to its
// node on that tape.
template <typename T>
class Tensor {
public:
    using value_type = T;

    Tensor() : data_(std::make_shared<const std::vector<T>>()) {}
    Tensor(Shape shape, std::vector<T> data);
    explicit Tensor(Shape shape, T fill = T(0));

    static Tensor zeros(Shape shape) { return Tensor(shape, T(0)); }
    static Tensor scalar(T v) { return Tensor(Shape{1, 1, 1, 1}, v); }

    const Shape& shape() const { return shape_; }
    std::size_t numel() const { return shape_.numel(); }
    std::span<const T> data() const { return {data_->data(), data_->size()}; }
    const T* ptr() const { return data_->data(); }
    std::vector<T> to_vector() const { return *data_; }

    T at(std::size_t i) const { return (*data_)[i]; }
    T operator()(std::size_t n, std::size_t c, std::size_t h, std::size_t w) const {
        return (*data_)[((n * shape_.c + c) * shape_.h + h) * shape_.w + w];
    }
    T item() const;

    Precision precision() const { return precision_of<T>(); }

    // Gradient-tape participation.
    int grad_id() const { return grad_id_; }
    std::uint64_t tape_uid() const { return tape_uid_; }
    Tensor with_grad_handle(int id, std::uint64_t tape_uid) const;
    Tensor detached() const;

    // Same buffer, new shape (numel must agree). Not tracked.
    Tensor reshaped(Shape shape) const;

    bool same_storage(const Tensor& other) const { return data_ == other.data_; }

private:
    Shape shape_{};
    std::shared_ptr<const std::vector<T>> data_;
    int grad_id_ = -1;
    std::uint64_t tape_uid_ = 0;
};

template <typename To, typename From>
Tensor<To> cast(const Tensor<From>& t) {
    if constexpr (std::is_same_v<To, From>) {
        return t.detached();
    } else {
        std::vector<To> out(t.numel());
        const auto src = t.data();
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<To>(src[i]);
        return Tensor<To>(t.shape(), std::move(out));
    }
}

// Throws NumericError naming `op` when any element is NaN/Inf.
template <typename T>
void require_finite(std::span<const T> values, const char* op);

extern template class Tensor<float>;
extern template class Tensor<double>;

}  // namespace ram
