#pragma once

// Weakly-supervised video classifier: attention MLP -> aggregator ->
// logistic classifier, trained with multi-label cross-entropy and Adam.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "maan/aggregators.hpp"
#include "maan/dataset.hpp"
#include "maan/matrix.hpp"
#include "maan/rng.hpp"

namespace maan {

struct AttentionParams {
  Matrix w1;               // hidden x d
  std::vector<double> b1;  // hidden
  std::vector<double> w2;  // hidden
  double b2 = 0.0;
  double leaky_slope = 0.01;

  std::size_t hidden() const noexcept { return w1.rows(); }
  std::size_t input_dim() const noexcept { return w1.cols(); }
  bool operator==(const AttentionParams&) const = default;
};

struct ClassifierParams {
  Matrix w;  // C x d, no bias
  bool operator==(const ClassifierParams&) const = default;
};

struct Model {
  AggregatorKind mode = AggregatorKind::MAA;
  AttentionParams attention;
  ClassifierParams classifier;
  int snippets_per_video = 20;  // T used for training and video-level scoring

  std::size_t num_classes() const noexcept { return classifier.w.rows(); }
  std::size_t feature_dim() const noexcept { return classifier.w.cols(); }
  bool operator==(const Model&) const = default;
};

struct TrainConfig {
  AggregatorKind mode = AggregatorKind::MAA;
  double learning_rate = 5e-4;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  int epochs = 400;
  int batch_size = 8;
  int hidden = 32;
  double leaky_slope = 0.01;
  double keep_prob = 0.5;  // Dropout mode only
  int snippets_per_video = 20;
  std::uint64_t seed = 0;
};

void validate(const TrainConfig& config);

/// Per-snippet sigmoid(w2 . leakyrelu(W1 x_t + b1) + b2).
std::vector<double> attention_scores(const Matrix& features, const AttentionParams& params);

/// Per-class sigmoid(w_c . aggregate).
std::vector<double> classify(std::span<const double> aggregate, const ClassifierParams& params);

/// Binary cross-entropy summed over classes; predictions are clamped to
/// [1e-12, 1 - 1e-12]. Throws ContractViolation for labels outside {0,1}.
double loss(std::span<const double> predictions, std::span<const int> labels);

/// Seeded uniform(+-sqrt(6 / (fan_in + fan_out))) initialization.
Model init_model(AggregatorKind mode, std::size_t feature_dim, std::size_t num_classes,
                 std::size_t hidden, double leaky_slope, int snippets_per_video,
                 std::uint64_t seed);

/// Flat parameter vector in a fixed order (w1, b1, w2, b2, classifier).
std::vector<double> pack(const Model& model);
void unpack(std::span<const double> flat, Model& model);

/// Loss of one video and its gradient with respect to pack(model).
/// `dropout_mask` is used only in Dropout mode.
struct LossAndGrad {
  double loss = 0.0;
  std::vector<double> grad;
};
LossAndGrad video_loss_and_grad(const Model& model, const Matrix& features,
                                std::span<const int> labels,
                                std::span<const double> dropout_mask = {});

/// Video-level aggregate used at inference. Dropout mode aggregates with the
/// plain weighted sum.
std::vector<double> inference_aggregate(const Model& model, const Matrix& features);

/// T snippets: the video is cut into T equal segments and one snippet is
/// drawn uniformly from each. Videos shorter than T are rejected.
std::vector<std::size_t> sample_snippets(std::size_t video_length, std::size_t count, Rng& rng);
/// Deterministic variant taking each segment's centre.
std::vector<std::size_t> centre_snippets(std::size_t video_length, std::size_t count);
Matrix gather_rows(const Matrix& m, std::span<const std::size_t> rows);

struct TrainResult {
  Model model;
  std::vector<double> loss_history;  // mean per-video loss of each epoch
};

/// Mini-batch Adam over the full graph. Deterministic for a fixed config.
/// Throws Divergence naming the (1-based) epoch if the loss or a parameter
/// becomes non-finite.
TrainResult train(const Dataset& dataset, const TrainConfig& config);

/// Video-level class probabilities from the centre-sampled snippets.
std::vector<double> video_probabilities(const Model& model, const Matrix& features);

/// Checkpoint: one JSON document with dims, mode and row-major parameters.
void save_model(const Model& model, const std::string& path);
Model load_model(const std::string& path);
std::string model_to_json(const Model& model);
Model model_from_json(const std::string& text, const std::string& origin);

}  // namespace maan
