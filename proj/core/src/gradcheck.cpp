#include "tdfb/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "tdfb/errors.hpp"

namespace tdfb {
namespace {

double central_difference(const ScalarFn& f, Matrix& probe, std::size_t i, double h) {
  const double saved = probe[i];
  probe[i] = saved + h;
  const double up = f(probe);
  probe[i] = saved - h;
  const double down = f(probe);
  probe[i] = saved;
  if (!std::isfinite(up) || !std::isfinite(down)) {
    throw NumericalFailure("finite_diff_grad: non-finite function value when perturbing index " +
                           std::to_string(i));
  }
  return (up - down) / (2.0 * h);
}

}  // namespace

Matrix finite_diff_grad(const ScalarFn& f, const Matrix& x, double h) {
  if (!(h > 0.0)) throw ContractViolation("finite_diff_grad: step h must be positive");
  Matrix probe = x;
  Matrix out(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.size(); ++i) {
    out[i] = central_difference(f, probe, i, h);
  }
  return out;
}

std::vector<double> finite_diff_grad_at(const ScalarFn& f, const Matrix& x,
                                        std::span<const std::size_t> indices, double h) {
  if (!(h > 0.0)) throw ContractViolation("finite_diff_grad_at: step h must be positive");
  Matrix probe = x;
  std::vector<double> out;
  out.reserve(indices.size());
  for (std::size_t i : indices) {
    if (i >= x.size()) throw ContractViolation("finite_diff_grad_at: index out of range");
    out.push_back(central_difference(f, probe, i, h));
  }
  return out;
}

double relative_grad_error(std::span<const double> analytic, std::span<const double> numeric) {
  if (analytic.size() != numeric.size()) {
    throw ContractViolation("relative_grad_error: length mismatch " +
                            std::to_string(analytic.size()) + " vs " +
                            std::to_string(numeric.size()));
  }
  double diff = 0.0, na = 0.0, nn = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    const double d = analytic[i] - numeric[i];
    diff += d * d;
    na += analytic[i] * analytic[i];
    nn += numeric[i] * numeric[i];
  }
  const double denom = std::max({std::sqrt(na), std::sqrt(nn), 1e-12});
  return std::sqrt(diff) / denom;
}

double relative_grad_error(const Matrix& analytic, const Matrix& numeric) {
  require_same_shape(analytic, numeric, "relative_grad_error");
  return relative_grad_error(analytic.values(), numeric.values());
}

}  // namespace tdfb
