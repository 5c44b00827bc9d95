#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "ram/tensor.hpp"

namespace ram {

// Central differences (f(x + h e_i) - f(x - h e_i)) / 2h for every element.
template <typename T>
Tensor<T> finite_diff_grad(const std::function<T(const Tensor<T>&)>& f, const Tensor<T>& x, double h = 1e-4);

// Same, restricted to the given flat coordinates; other entries are zero.
template <typename T>
Tensor<T> finite_diff_grad(const std::function<T(const Tensor<T>&)>& f, const Tensor<T>& x,
                           const std::vector<std::size_t>& coords, double h = 1e-4);

// ||a - b|| / max(||a||, ||b||, 1e-300) over `coords` (all when empty).
double relative_error(const Tensor<double>& a, const Tensor<double>& b, const std::vector<std::size_t>& coords = {});

inline constexpr double kGradTolerance = 1e-4;

struct GradCheckOptions {
    std::size_t size = 6;        // spatial extent of op-level inputs
    std::uint64_t seed = 0;
    std::string corrupt_op;      // non-empty: scale this op's backward by 1.5
    std::string filter;          // non-empty: only cases whose name contains it
    std::size_t max_coords = 16; // sampled coordinates per tensor above this size
};

struct GradCheckResult {
    std::string name;
    double max_rel_error = 0;
    std::string worst_tensor;
    std::size_t tensors = 0;
    std::size_t coords = 0;
    bool pass = false;
};

// Names of every registered case, in run order.
std::vector<std::string> gradcheck_case_names();

// Runs the finite-difference suite in double precision. Each case builds
// loss = sum(out * R) for a fixed random R and compares tape gradients of
// every input and parameter tensor against central differences.
std::vector<GradCheckResult> run_gradcheck(const GradCheckOptions& opt);

}  // namespace ram
