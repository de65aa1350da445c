#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace tdfb {

/// Outcome of comparing one backward pass against central differences.
struct GradCheckResult {
  std::string name;
  double max_rel_error = 0.0;
  double tolerance = 1e-4;
  bool passed() const { return max_rel_error < tolerance; }
};

/// Names accepted by run_gradcheck, in execution order.
const std::vector<std::string>& gradcheck_names();

/// Runs one named check on seeded random data with h = 1e-4. Layer checks
/// cover parameter and input gradients; front-end checks spot-check a few
/// randomly chosen weights and input samples through the whole pipeline.
/// Throws ContractViolation for an unknown name.
GradCheckResult run_gradcheck(std::string_view name, std::uint64_t seed = 1);

std::vector<GradCheckResult> run_all_gradchecks(std::uint64_t seed = 1);

}  // namespace tdfb
