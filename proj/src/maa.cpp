#include "maan/maa.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>

#include "maan/error.hpp"

namespace maan {

void validate_features(const Matrix& features) {
  require(features.rows() >= 1, "features: need at least one snippet");
  require(features.cols() >= 1, "features: need at least one dimension");
  for (double v : features.data())
    require(std::isfinite(v), "features: non-finite entry");
}

void validate_probs(std::span<const double> probs, std::size_t expected_length) {
  require(probs.size() == expected_length,
          "probs: length " + std::to_string(probs.size()) + " does not match " +
              std::to_string(expected_length) + " snippets");
  for (double p : probs)
    require(p >= 0.0 && p <= 1.0, "probs: value outside [0,1]");
}

std::vector<double> maa_bruteforce(const Matrix& features, std::span<const double> probs) {
  validate_features(features);
  validate_probs(probs, features.rows());
  const std::size_t T = features.rows();
  const std::size_t d = features.cols();
  if (T > kMaxEnumerationLength)
    fail(ErrorCode::EnumerationLimit,
         "maa_bruteforce: T=" + std::to_string(T) + " exceeds enumeration limit " +
             std::to_string(kMaxEnumerationLength));

  std::vector<double> h(d, 0.0);
  std::vector<double> subset_sum(d);
  const std::uint64_t configs = std::uint64_t{1} << T;
  // mask 0 is the empty selection and contributes nothing.
  for (std::uint64_t mask = 1; mask < configs; ++mask) {
    double weight = 1.0;
    std::size_t count = 0;
    std::fill(subset_sum.begin(), subset_sum.end(), 0.0);
    for (std::size_t t = 0; t < T; ++t) {
      if (mask >> t & 1U) {
        weight *= probs[t];
        ++count;
        axpy(1.0, features.row(t), subset_sum);
      } else {
        weight *= 1.0 - probs[t];
      }
    }
    if (weight == 0.0) continue;
    axpy(weight / static_cast<double>(count), subset_sum, h);
  }
  return h;
}

AggregationTrace::AggregationTrace(Matrix features, std::vector<double> probs,
                                   MaaOptions options)
    : features_(std::move(features)), probs_(std::move(probs)), options_(options) {
  validate_features(features_);
  validate_probs(probs_, features_.rows());
  const std::size_t T = length();
  const std::size_t d = dim();

  q_ = Matrix(T + 1, T + 1, 0.0);
  m_.assign((T + 1) * (T + 1) * d, 0.0);
  q_(0, 0) = 1.0;

  for (std::size_t t = 1; t <= T; ++t) {
    const double p = probs_[t - 1];
    const auto x = features_.row(t - 1);
    // q_0 has no "selected" branch; m_0 stays zero.
    q_(t, 0) = (1.0 - p) * q_(t - 1, 0);
    for (std::size_t i = 1; i <= t; ++i) {
      q_(t, i) = p * q_(t - 1, i - 1) + (1.0 - p) * q_(t - 1, i);
      // b_{i-1} = (i-1)/i blends the previous (i-1)-subset mean with x_t.
      const double b = static_cast<double>(i - 1) / static_cast<double>(i);
      const double x_coef = p * (1.0 - b) * q_(t - 1, i - 1);
      auto out = m_mut(t, i);
      const auto prev_shift = m(t - 1, i - 1);
      const auto prev_same = m(t - 1, i);
      for (std::size_t k = 0; k < d; ++k)
        out[k] = p * b * prev_shift[k] + x_coef * x[k] + (1.0 - p) * prev_same[k];
    }
  }

  h_.assign(d, 0.0);
  for (std::size_t i = 1; i <= T; ++i) axpy(1.0, m(T, i), h_);

  double none = 1.0;
  for (double p : probs_) none *= 1.0 - p;
  selection_mass_ = 1.0 - none;
  if (options_.renormalize) {
    if (selection_mass_ <= 0.0)
      fail(ErrorCode::DegenerateInput,
           "maa_forward: renormalized mode needs some p_t > 0");
    for (double& v : h_) v /= selection_mass_;
  }
}

AggregationTrace maa_forward(const Matrix& features, std::span<const double> probs,
                             MaaOptions options) {
  return AggregationTrace(features, std::vector<double>(probs.begin(), probs.end()),
                          options);
}

namespace {

// Poisson-binomial PMF of the given probabilities, skipping index `skip`.
std::vector<double> pmf_excluding(std::span<const double> probs, std::size_t skip) {
  std::vector<double> q(probs.size() + 1, 0.0);
  q[0] = 1.0;
  std::size_t n = 0;
  for (std::size_t t = 0; t < probs.size(); ++t) {
    if (t == skip) continue;
    const double p = probs[t];
    ++n;
    for (std::size_t i = n; i >= 1; --i) q[i] = p * q[i - 1] + (1.0 - p) * q[i];
    q[0] *= 1.0 - p;
  }
  q.resize(n + 1);
  return q;
}

}  // namespace

std::vector<double> subset_size_pmf(std::span<const double> probs) {
  require(!probs.empty(), "subset_size_pmf: need at least one probability");
  validate_probs(probs, probs.size());
  return pmf_excluding(probs, probs.size());
}

EffectiveWeights context_coefficients(std::span<const double> probs) {
  require(!probs.empty(), "context_coefficients: need at least one probability");
  validate_probs(probs, probs.size());
  const std::size_t T = probs.size();
  EffectiveWeights w;
  w.c.resize(T);
  w.lambda.resize(T);
  for (std::size_t i = 0; i < T; ++i) {
    const auto others = pmf_excluding(probs, i);
    double c = 0.0;
    for (std::size_t k = 0; k < others.size(); ++k)
      c += others[k] / static_cast<double>(k + 1);
    w.c[i] = c;
    w.lambda[i] = c * probs[i];
    w.total += w.lambda[i];
  }
  return w;
}

std::vector<double> effective_weights_probe(std::span<const double> probs) {
  require(!probs.empty(), "effective_weights_probe: need at least one probability");
  const std::size_t T = probs.size();
  Matrix basis(T, T, 0.0);
  for (std::size_t t = 0; t < T; ++t) basis(t, t) = 1.0;
  return maa_forward(basis, probs).h();
}

std::vector<std::size_t> salient_index_set(const EffectiveWeights& weights,
                                           std::span<const double> probs) {
  require(weights.c.size() == probs.size(), "salient_index_set: length mismatch");
  double mass = 0.0;
  for (double p : probs) mass += p;
  if (!(mass > 0.0) || !(weights.total > 0.0))
    fail(ErrorCode::DegenerateInput, "salient_index_set: all probabilities are zero");

  // Equality is admitted; the 1e-12 relative slack absorbs rounding when a
  // coefficient sits exactly on the threshold (e.g. uniform p).
  const double threshold = (1.0 / mass) * (1.0 - 1e-12);
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < probs.size(); ++i)
    if (weights.c[i] / weights.total >= threshold) out.push_back(i);
  return out;
}

}  // namespace maan
