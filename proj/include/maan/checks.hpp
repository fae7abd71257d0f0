#pragma once

// Randomized property suite for the MAA operator: brute-force agreement,
// subset-size PMF rows, factorization, coefficient sum, partial order,
// suppression inequality and analytic gradients.

#include <cstdint>
#include <string>
#include <vector>

namespace maan {

struct VerifyConfig {
  int trials = 200;
  int max_t = 10;             // <= 20, brute force is exponential
  double tolerance = 1e-10;   // numeric identities
  double grad_tolerance = 1e-5;
  std::uint64_t seed = 0;
};

struct CheckResult {
  std::string name;
  double worst = 0.0;  // largest observed error (violation count for ordering checks)
  double tolerance = 0.0;
  bool passed = true;
};

struct VerifyReport {
  std::vector<CheckResult> checks;
  std::vector<std::string> warnings;
  bool passed = true;
};

/// Throws Config for trials < 0 or max_t outside [1, 20].
VerifyReport run_verify(const VerifyConfig& config);

std::string to_text(const VerifyReport& report);

}  // namespace maan
