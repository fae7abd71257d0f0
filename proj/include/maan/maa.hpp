#pragma once

// Marginalized average aggregation (MAA).
//
// Given snippet features x_1..x_T and independent selection probabilities
// p_1..p_T, MAA returns E[ sum_i z_i x_i / sum_i z_i ] with z_i ~ Bernoulli(p_i).
// The empty selection contributes the zero vector (0/0 := 0).

#include <cstddef>
#include <span>
#include <vector>

#include "maan/matrix.hpp"

namespace maan {

/// Snippet features (T x d) with the duration of one snippet in seconds.
struct FeatureSequence {
  Matrix values;
  double snippet_duration = 1.0;

  std::size_t length() const noexcept { return values.rows(); }
  std::size_t dim() const noexcept { return values.cols(); }
};

/// Throws ContractViolation unless T >= 1, d >= 1 and every entry is finite.
void validate_features(const Matrix& features);
/// Throws ContractViolation unless every p is in [0,1] and the length matches.
void validate_probs(std::span<const double> probs, std::size_t expected_length);

inline constexpr std::size_t kMaxEnumerationLength = 25;

/// Exact expectation by enumerating all 2^T selections. T <= 25.
std::vector<double> maa_bruteforce(const Matrix& features, std::span<const double> probs);

struct MaaOptions {
  // Divide h by P(at least one selection) = 1 - prod(1 - p_t).
  bool renormalize = false;
};

/// Forward pass with the dynamic-programming tables retained for backprop.
///
/// q(t, i) = P(Z_t = i) for 0 <= i <= t, zero above the diagonal.
/// m(t, i) is the d-vector P(Z_t = i) * E[Y_t / Z_t | Z_t = i], with
/// m(t, 0) = 0. The unnormalized aggregate is the sum of row T of m.
class AggregationTrace {
 public:
  AggregationTrace(Matrix features, std::vector<double> probs, MaaOptions options);

  std::size_t length() const noexcept { return features_.rows(); }
  std::size_t dim() const noexcept { return features_.cols(); }

  const std::vector<double>& h() const noexcept { return h_; }
  const Matrix& q_table() const noexcept { return q_; }
  std::span<const double> m(std::size_t t, std::size_t i) const {
    return {m_.data() + (t * (length() + 1) + i) * dim(), dim()};
  }
  const Matrix& features() const noexcept { return features_; }
  const std::vector<double>& probs() const noexcept { return probs_; }
  const MaaOptions& options() const noexcept { return options_; }
  // 1 - prod(1 - p_t); the renormalization divisor.
  double selection_mass() const noexcept { return selection_mass_; }

 private:
  std::span<double> m_mut(std::size_t t, std::size_t i) {
    return {m_.data() + (t * (length() + 1) + i) * dim(), dim()};
  }

  Matrix features_;
  std::vector<double> probs_;
  MaaOptions options_;
  Matrix q_;
  std::vector<double> m_;
  std::vector<double> h_;
  double selection_mass_ = 0.0;
};

AggregationTrace maa_forward(const Matrix& features, std::span<const double> probs,
                             MaaOptions options = {});

/// Distribution of the number of selected snippets, P(Z_T = i), i = 0..T.
std::vector<double> subset_size_pmf(std::span<const double> probs);

struct EffectiveWeights {
  std::vector<double> c;       // c_i = E[1 / (1 + sum_{k != i} z_k)]
  std::vector<double> lambda;  // lambda_i = c_i * p_i
  double total = 0.0;          // sum_i lambda_i
};

/// Context coefficients via a leave-one-out subset-size DP per index; O(T^3).
EffectiveWeights context_coefficients(std::span<const double> probs);

/// Runs maa_forward on the T standard basis vectors of R^T. The aggregate is
/// exactly the effective weight vector lambda, independently of the
/// leave-one-out computation above.
std::vector<double> effective_weights_probe(std::span<const double> probs);

/// Indices (0-based) whose normalized context coefficient c_i / total is at
/// least 1 / sum_t p_t. Throws DegenerateInput when every p_t is zero.
std::vector<std::size_t> salient_index_set(const EffectiveWeights& weights,
                                           std::span<const double> probs);

}  // namespace maan
