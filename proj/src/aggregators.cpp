#include "maan/aggregators.hpp"

#include <algorithm>
#include <cmath>

#include "maan/error.hpp"
#include "maan/maa.hpp"
#include "maan/maa_grad.hpp"
#include "maan/rng.hpp"

namespace maan {

std::string_view to_string(AggregatorKind kind) noexcept {
  switch (kind) {
    case AggregatorKind::WeightedSum: return "stpn";
    case AggregatorKind::Dropout: return "dropout";
    case AggregatorKind::Norm: return "norm";
    case AggregatorKind::SoftMaxNorm: return "softmaxnorm";
    case AggregatorKind::MAA: return "maan";
  }
  return "unknown";
}

std::optional<AggregatorKind> parse_aggregator(std::string_view name) noexcept {
  for (auto kind : {AggregatorKind::WeightedSum, AggregatorKind::Dropout,
                    AggregatorKind::Norm, AggregatorKind::SoftMaxNorm, AggregatorKind::MAA})
    if (to_string(kind) == name) return kind;
  return std::nullopt;
}

namespace {

void check_lengths(const Matrix& features, std::span<const double> weights) {
  require(weights.size() == features.rows(),
          "aggregator: weight count does not match snippet count");
}

std::vector<double> combine(const Matrix& features, std::span<const double> coef) {
  std::vector<double> out(features.cols(), 0.0);
  for (std::size_t t = 0; t < features.rows(); ++t)
    if (coef[t] != 0.0) axpy(coef[t], features.row(t), out);
  return out;
}

double sum(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s;
}

}  // namespace

std::vector<double> weighted_sum(const Matrix& features, std::span<const double> weights) {
  check_lengths(features, weights);
  return combine(features, weights);
}

std::vector<double> dropout_mask(std::size_t length, double keep_prob, std::uint64_t seed) {
  require(keep_prob > 0.0 && keep_prob <= 1.0, "dropout: keep_prob must lie in (0,1]");
  Rng rng(seed);
  std::vector<double> mask(length);
  for (double& r : mask) r = uniform01(rng) < keep_prob ? 1.0 : 0.0;
  return mask;
}

std::vector<double> dropout_weighted_sum(const Matrix& features,
                                         std::span<const double> weights,
                                         double keep_prob, std::uint64_t seed) {
  check_lengths(features, weights);
  const auto mask = dropout_mask(weights.size(), keep_prob, seed);
  return combine(features, aggregation_coefficients(AggregatorKind::Dropout, weights, mask));
}

std::vector<double> normalized_average(const Matrix& features, std::span<const double> weights) {
  check_lengths(features, weights);
  return combine(features, aggregation_coefficients(AggregatorKind::Norm, weights));
}

std::vector<double> softmax(std::span<const double> weights) {
  require(!weights.empty(), "softmax: empty input");
  const double top = *std::max_element(weights.begin(), weights.end());
  std::vector<double> out(weights.size());
  double total = 0.0;
  for (std::size_t t = 0; t < weights.size(); ++t) {
    out[t] = std::exp(weights[t] - top);
    total += out[t];
  }
  for (double& v : out) v /= total;
  return out;
}

std::vector<double> softmax_average(const Matrix& features, std::span<const double> weights) {
  check_lengths(features, weights);
  return combine(features, softmax(weights));
}

std::vector<double> aggregation_coefficients(AggregatorKind kind,
                                             std::span<const double> weights,
                                             std::span<const double> mask) {
  switch (kind) {
    case AggregatorKind::WeightedSum:
      return {weights.begin(), weights.end()};
    case AggregatorKind::Dropout: {
      require(mask.size() == weights.size(), "dropout: mask length mismatch");
      std::vector<double> out(weights.size());
      for (std::size_t t = 0; t < out.size(); ++t) out[t] = mask[t] * weights[t];
      return out;
    }
    case AggregatorKind::Norm: {
      const double total = sum(weights);
      if (!(total > 0.0))
        fail(ErrorCode::DegenerateInput, "normalized_average: weights sum to zero");
      std::vector<double> out(weights.begin(), weights.end());
      for (double& v : out) v /= total;
      return out;
    }
    case AggregatorKind::SoftMaxNorm:
      return softmax(weights);
    case AggregatorKind::MAA:
      break;
  }
  fail(ErrorCode::ContractViolation, "aggregation_coefficients: not defined for MAA");
}

std::vector<double> aggregate(AggregatorKind kind, const Matrix& features,
                              std::span<const double> weights,
                              std::span<const double> mask) {
  check_lengths(features, weights);
  if (kind == AggregatorKind::MAA) return maa_forward(features, weights).h();
  return combine(features, aggregation_coefficients(kind, weights, mask));
}

AggregateBackward aggregate_backward(AggregatorKind kind, const Matrix& features,
                                     std::span<const double> weights,
                                     std::span<const double> aggregate_value,
                                     std::span<const double> upstream,
                                     std::span<const double> mask) {
  check_lengths(features, weights);
  require(upstream.size() == features.cols(), "aggregate_backward: upstream dimension");
  const std::size_t T = weights.size();
  AggregateBackward out{std::vector<double>(T, 0.0)};
  auto& g = out.grad_weights;

  switch (kind) {
    case AggregatorKind::WeightedSum:
      for (std::size_t t = 0; t < T; ++t) g[t] = dot(upstream, features.row(t));
      break;
    case AggregatorKind::Dropout:
      require(mask.size() == T, "dropout: mask length mismatch");
      for (std::size_t t = 0; t < T; ++t) g[t] = mask[t] * dot(upstream, features.row(t));
      break;
    case AggregatorKind::Norm: {
      // h = sum w x / S  =>  dh/dw_t = (x_t - h) / S
      const double total = sum(weights);
      const double uh = dot(upstream, aggregate_value);
      for (std::size_t t = 0; t < T; ++t)
        g[t] = (dot(upstream, features.row(t)) - uh) / total;
      break;
    }
    case AggregatorKind::SoftMaxNorm: {
      const auto a = softmax(weights);
      const double uh = dot(upstream, aggregate_value);
      for (std::size_t t = 0; t < T; ++t)
        g[t] = a[t] * (dot(upstream, features.row(t)) - uh);
      break;
    }
    case AggregatorKind::MAA:
      g = maa_backward(maa_forward(features, weights), upstream).grad_probs;
      break;
  }
  return out;
}

}  // namespace maan
