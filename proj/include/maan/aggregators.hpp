#pragma once

// Feature aggregators compared against MAA: weighted sum (STPN), dropout
// weighted sum, weighted average (Norm) and softmax-weighted average.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "maan/matrix.hpp"

namespace maan {

enum class AggregatorKind { WeightedSum, Dropout, Norm, SoftMaxNorm, MAA };

// CLI spelling: stpn, dropout, norm, softmaxnorm, maan.
std::string_view to_string(AggregatorKind kind) noexcept;
std::optional<AggregatorKind> parse_aggregator(std::string_view name) noexcept;

std::vector<double> weighted_sum(const Matrix& features, std::span<const double> weights);

/// Bernoulli(keep_prob) dropout mask from a generator seeded with `seed`.
std::vector<double> dropout_mask(std::size_t length, double keep_prob, std::uint64_t seed);

std::vector<double> dropout_weighted_sum(const Matrix& features,
                                         std::span<const double> weights,
                                         double keep_prob, std::uint64_t seed);

/// sum w_t x_t / sum w_t. Throws DegenerateInput when the weights sum to zero.
std::vector<double> normalized_average(const Matrix& features, std::span<const double> weights);

/// Max-subtracted softmax of the weights.
std::vector<double> softmax(std::span<const double> weights);
std::vector<double> softmax_average(const Matrix& features, std::span<const double> weights);

/// Weights actually multiplying each x_t in the aggregate for the baseline
/// kinds (identity, mask * w, w / sum w, softmax(w)). Not defined for MAA,
/// whose effective weights come from context_coefficients.
std::vector<double> aggregation_coefficients(AggregatorKind kind,
                                             std::span<const double> weights,
                                             std::span<const double> mask = {});

/// Forward/backward pair used by training. For Dropout, `mask` must hold the
/// sampled r_t; it is ignored for the other kinds. For MAA the weights are
/// the latent probabilities.
struct AggregateBackward {
  std::vector<double> grad_weights;
};

std::vector<double> aggregate(AggregatorKind kind, const Matrix& features,
                              std::span<const double> weights,
                              std::span<const double> mask = {});

/// d<upstream, aggregate>/d weights. `aggregate_value` is the forward output.
AggregateBackward aggregate_backward(AggregatorKind kind, const Matrix& features,
                                     std::span<const double> weights,
                                     std::span<const double> aggregate_value,
                                     std::span<const double> upstream,
                                     std::span<const double> mask = {});

}  // namespace maan
