#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "tdfb/tensor.hpp"

namespace tdfb {

using ScalarFn = std::function<double(const Matrix&)>;

/// Central-difference gradient of `f` at `x`, one entry per element of `x`.
/// Throws NumericalFailure naming the flat index if f is non-finite at a
/// perturbed point.
Matrix finite_diff_grad(const ScalarFn& f, const Matrix& x, double h = 1e-4);

/// Central differences at a subset of flat indices only. Useful when each
/// evaluation of `f` is expensive.
std::vector<double> finite_diff_grad_at(const ScalarFn& f, const Matrix& x,
                                        std::span<const std::size_t> indices,
                                        double h = 1e-4);

/// ||a - n|| / max(||a||, ||n||, 1e-12).
double relative_grad_error(const Matrix& analytic, const Matrix& numeric);
double relative_grad_error(std::span<const double> analytic,
                           std::span<const double> numeric);

}  // namespace tdfb
