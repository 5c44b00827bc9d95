#include "ram/tensor.hpp"

#include <atomic>
#include <cmath>
#include <sstream>

#include "ram/tape.hpp"

namespace ram {

std::string Shape::str() const {
    std::ostringstream os;
    os << '(' << n << ',' << c << ',' << h << ',' << w << ')';
    return os.str();
}

template <typename T>
Tensor<T>::Tensor(Shape shape, std::vector<T> data) : shape_(shape) {
    if (data.size() != shape.numel())
        throw DimensionError("tensor buffer holds " + std::to_string(data.size()) +
                             " values, shape " + shape.str() + " needs " +
                             std::to_string(shape.numel()));
    data_ = std::make_shared<const std::vector<T>>(std::move(data));
}

template <typename T>
Tensor<T>::Tensor(Shape shape, T fill)
    : shape_(shape), data_(std::make_shared<const std::vector<T>>(shape.numel(), fill)) {}

template <typename T>
T Tensor<T>::item() const {
    if (numel() != 1) throw DimensionError("item() on tensor of shape " + shape_.str());
    return (*data_)[0];
}

template <typename T>
Tensor<T> Tensor<T>::with_grad_handle(int id, std::uint64_t tape_uid) const {
    Tensor out = *this;
    out.grad_id_ = id;
    out.tape_uid_ = tape_uid;
    return out;
}

template <typename T>
Tensor<T> Tensor<T>::detached() const {
    Tensor out = *this;
    out.grad_id_ = -1;
    out.tape_uid_ = 0;
    return out;
}

template <typename T>
Tensor<T> Tensor<T>::reshaped(Shape shape) const {
    if (shape.numel() != numel())
        throw DimensionError("cannot reshape " + shape_.str() + " to " + shape.str());
    Tensor out = detached();
    out.shape_ = shape;
    return out;
}

template <typename T>
void require_finite(std::span<const T> values, const char* op) {
    for (const T v : values)
        if (!std::isfinite(v)) throw NumericError(std::string(op) + ": non-finite result");
}

template class Tensor<float>;
template class Tensor<double>;
template void require_finite<float>(std::span<const float>, const char*);
template void require_finite<double>(std::span<const double>, const char*);

// ---------------------------------------------------------------------------
// GradTape

namespace {
std::atomic<std::uint64_t> next_tape_uid{1};

template <typename T>
GradTape<T>*& tape_slot() {
    thread_local GradTape<T>* slot = nullptr;
    return slot;
}
}  // namespace

template <typename T>
GradTape<T>* active_tape() {
    return tape_slot<T>();
}

template <typename T>
GradTape<T>::GradTape() : uid_(next_tape_uid.fetch_add(1)) {}

template <typename T>
Tensor<T> GradTape<T>::watch(const Tensor<T>& t) {
    if (done_) throw StateError("watch() after backward on the same tape");
    nodes_.push_back(Node{"leaf", t.shape(), {}, nullptr});
    return t.with_grad_handle(static_cast<int>(nodes_.size() - 1), uid_);
}

template <typename T>
Tensor<T> GradTape<T>::record(const char* op, const Tensor<T>& result,
                              std::initializer_list<const Tensor<T>*> inputs, Backward backward) {
    return record(op, result, std::vector<const Tensor<T>*>(inputs), std::move(backward));
}

template <typename T>
Tensor<T> GradTape<T>::record(const char* op, const Tensor<T>& result,
                              const std::vector<const Tensor<T>*>& inputs, Backward backward) {
    std::vector<int> ids;
    ids.reserve(inputs.size());
    bool any = false;
    for (const auto* in : inputs) {
        if (tracks(*in)) {
            ids.push_back(in->grad_id());
            any = true;
        } else {
            ids.push_back(-1);
        }
    }
    if (!any) return result.detached();
    if (done_) throw StateError(std::string(op) + ": recording on a tape after backward");
    nodes_.push_back(Node{op, result.shape(), std::move(ids), std::move(backward)});
    return result.with_grad_handle(static_cast<int>(nodes_.size() - 1), uid_);
}

template <typename T>
void GradTape<T>::backward(const Tensor<T>& loss) {
    if (done_) throw StateError("backward() called twice on the same tape");
    if (!tracks(loss)) throw StateError("backward(): loss is not tracked on this tape");
    if (loss.numel() != 1) throw DimensionError("backward(): loss must be a scalar, got " + loss.shape().str());
    done_ = true;

    grads_.assign(nodes_.size(), {});
    const auto root = static_cast<std::size_t>(loss.grad_id());
    grads_[root].assign(1, T(1));

    std::vector<T*> gin;
    for (std::size_t i = root + 1; i-- > 0;) {
        Node& node = nodes_[i];
        if (grads_[i].empty() || !node.backward) continue;
        if (!fault_op_.empty() && fault_op_ == node.op)
            for (auto& g : grads_[i]) g *= fault_factor_;
        gin.assign(node.inputs.size(), nullptr);
        for (std::size_t k = 0; k < node.inputs.size(); ++k) {
            const int id = node.inputs[k];
            if (id < 0) continue;
            auto& buf = grads_[static_cast<std::size_t>(id)];
            if (buf.empty()) buf.assign(nodes_[static_cast<std::size_t>(id)].shape.numel(), T(0));
            gin[k] = buf.data();
        }
        node.backward(grads_[i].data(), gin);
        // Interior gradients are no longer needed once propagated.
        node.backward = nullptr;
        if (!node.inputs.empty()) std::vector<T>().swap(grads_[i]);
    }
}

template <typename T>
Tensor<T> GradTape<T>::grad(const Tensor<T>& t) const {
    if (!tracks(t) || static_cast<std::size_t>(t.grad_id()) >= grads_.size() ||
        grads_[static_cast<std::size_t>(t.grad_id())].empty())
        return Tensor<T>::zeros(t.shape());
    return Tensor<T>(t.shape(), grads_[static_cast<std::size_t>(t.grad_id())]);
}

template <typename T>
TapeScope<T>::TapeScope(GradTape<T>& tape) : previous_(tape_slot<T>()) {
    tape_slot<T>() = &tape;
}

template <typename T>
TapeScope<T>::~TapeScope() {
    tape_slot<T>() = previous_;
}

template <typename T>
NoGradScope<T>::NoGradScope() : previous_(tape_slot<T>()) {
    tape_slot<T>() = nullptr;
}

template <typename T>
NoGradScope<T>::~NoGradScope() {
    tape_slot<T>() = previous_;
}

template GradTape<float>* active_tape<float>();
template GradTape<double>* active_tape<double>();
template class GradTape<float>;
template class GradTape<double>;
template class TapeScope<float>;
template class TapeScope<double>;
template class NoGradScope<float>;
template class NoGradScope<double>;

}  // namespace ram
