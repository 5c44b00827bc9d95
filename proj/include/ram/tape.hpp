#pragma once

#include <cstdint>
#include <functional>
#include <initializer_list>
#include <string>
#include <vector>

#include "ram/tensor.hpp"

namespace ram {

// Reverse-mode gradient tape. Nodes are appended in construction order, so
// walking them backwards is a valid topological order. One tape per
// training step; a tape is single-owner and must not be shared between
// threads.
template <typename T>
class GradTape {
public:
    // Receives the gradient of the node output and one accumulation buffer
    // per input (nullptr when that input does not require a gradient).
    using Backward = std::function<void(const T* grad_out, std::vector<T*>& grad_in)>;

    GradTape();
    GradTape(const GradTape&) = delete;
    GradTape& operator=(const GradTape&) = delete;

    std::uint64_t uid() const { return uid_; }

    // Registers `t` as a leaf (parameter or input) and returns a tracked copy.
    Tensor<T> watch(const Tensor<T>& t);

    // True when `t` carries a node handle on this tape.
    bool tracks(const Tensor<T>& t) const { return t.grad_id() >= 0 && t.tape_uid() == uid_; }

    // Appends a node for `result` computed from `inputs`. Returns `result`
    // unchanged when no input is tracked on this tape.
    Tensor<T> record(const char* op, const Tensor<T>& result,
                     std::initializer_list<const Tensor<T>*> inputs, Backward backward);
    Tensor<T> record(const char* op, const Tensor<T>& result,
                     const std::vector<const Tensor<T>*>& inputs, Backward backward);

    // Accumulates d(loss)/d(node) for every node reachable from `loss`.
    // A tape supports exactly one backward pass.
    void backward(const Tensor<T>& loss);

    // Gradient of the last backward pass w.r.t. `t`; zeros when `t` was not
    // reached (or not tracked).
    Tensor<T> grad(const Tensor<T>& t) const;

    std::size_t size() const { return nodes_.size(); }
    bool backward_done() const { return done_; }

    // Test hook: scales the incoming gradient of every node whose op name
    // equals `op` by `factor` during backward.
    void inject_fault(std::string op, T factor = T(1.5)) {
        fault_op_ = std::move(op);
        fault_factor_ = factor;
    }

private:
    struct Node {
        const char* op;
        Shape shape;
        std::vector<int> inputs;  // -1 for untracked inputs
        Backward backward;
    };

    std::uint64_t uid_;
    std::vector<Node> nodes_;
    std::vector<std::vector<T>> grads_;
    bool done_ = false;
    std::string fault_op_;
    T fault_factor_ = T(1);
};

// Thread-local "current tape" used by the differentiable ops.
template <typename T>
GradTape<T>* active_tape();

// RAII activation of a tape for the current thread; restores the previous
// one on destruction.
template <typename T>
class TapeScope {
public:
    explicit TapeScope(GradTape<T>& tape);
    ~TapeScope();
    TapeScope(const TapeScope&) = delete;
    TapeScope& operator=(const TapeScope&) = delete;

private:
    GradTape<T>* previous_;
};

// Disables recording for the current thread while alive.
template <typename T>
class NoGradScope {
public:
    NoGradScope();
    ~NoGradScope();
    NoGradScope(const NoGradScope&) = delete;
    NoGradScope& operator=(const NoGradScope&) = delete;

private:
    GradTape<T>* previous_;
};

// Records `result` on the active tape, if any.
template <typename T>
Tensor<T> record_op(const char* op, const Tensor<T>& result,
                    std::initializer_list<const Tensor<T>*> inputs,
                    typename GradTape<T>::Backward backward) {
    if (auto* tape = active_tape<T>()) return tape->record(op, result, inputs, std::move(backward));
    return result;
}

template <typename T>
Tensor<T> record_op(const char* op, const Tensor<T>& result,
                    const std::vector<const Tensor<T>*>& inputs,
                    typename GradTape<T>::Backward backward) {
    if (auto* tape = active_tape<T>()) return tape->record(op, result, inputs, std::move(backward));
    return result;
}

// True when some input needs a gradient on the active tape; ops use it to
// skip saving state on inference paths.
template <typename T>
bool any_tracked(std::initializer_list<const Tensor<T>*> inputs) {
    auto* tape = active_tape<T>();
    if (!tape) return false;
    for (const auto* t : inputs)
        if (tape->tracks(*t)) return true;
    return false;
}

extern template class GradTape<float>;
extern template class GradTape<double>;
extern template class TapeScope<float>;
extern template class TapeScope<double>;
extern template class NoGradScope<float>;
extern template class NoGradScope<double>;

}  // namespace ram
