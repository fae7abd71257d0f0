#pragma once

#include <span>
#include <vector>

#include "maan/maa.hpp"

namespace maan {

struct MaaGradients {
  Matrix grad_features;          // dL/dx_t, T x d
  std::vector<double> grad_probs;  // dL/dp_t
};

/// Gradients of <upstream, h> with respect to every x_t and p_t, obtained by
/// running the adjoint of the q/m recurrences over the stored tables.
/// O(T^2 d). Derivatives at p_t in {0,1} are the one-sided polynomial ones.
MaaGradients maa_backward(const AggregationTrace& trace, std::span<const double> upstream);

/// Compares maa_backward against central differences of <upstream, h> with
/// perturbation `step` on every p_t and x_{t,k}. Returns the largest
/// |analytic - numeric| / max(1, |analytic|).
///
/// Throws Precondition when step is outside (0, 1e-3] or some p_t lies within
/// `step` of {0,1}.
double finite_diff_check(const Matrix& features, std::span<const double> probs,
                         std::span<const double> upstream, double step,
                         MaaOptions options = {});

}  // namespace maan
