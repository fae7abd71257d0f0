#pragma once

#include <span>
#include <string>
#include <vector>

#include "maan/evaluation.hpp"
#include "maan/matrix.hpp"
#include "maan/model.hpp"
#include "maan/proposal.hpp"

namespace maan {

/// scores(t, c) = snippet weight t * sigmoid(w_c . x_t).
struct ClassActivationSequence {
  Matrix scores;  // T x C
  double snippet_duration = 1.0;
};

/// CAS from latent probabilities p_t.
ClassActivationSequence cas_maan(const Matrix& features, std::span<const double> probs,
                                 const ClassifierParams& classifier,
                                 double snippet_duration = 1.0);
/// CAS from attention weights lambda_t.
ClassActivationSequence cas_stpn(const Matrix& features, std::span<const double> weights,
                                 const ClassifierParams& classifier,
                                 double snippet_duration = 1.0);

/// Maximal runs of snippets scoring strictly above
/// threshold_fraction * max(cas_column). Each run becomes
/// [first * dur, (last + 1) * dur] with the run's mean score as confidence.
std::vector<TemporalProposal> extract_proposals(std::span<const double> cas_column,
                                                double threshold_fraction,
                                                double snippet_duration, int class_id);

/// Greedy single-class NMS. Keeps proposals in order of confidence (ties:
/// earlier start, then shorter) and drops any whose IoU with a kept one is
/// >= iou_threshold. Output is in keep order.
std::vector<TemporalProposal> nms(std::vector<TemporalProposal> proposals, double iou_threshold);

struct LocalizeOptions {
  std::vector<double> threshold_fractions{0.2};
  double class_reject = 0.1;
  double nms_iou = 0.5;
};

void validate(const LocalizeOptions& options);

/// Per-snippet weights feeding the CAS: p_t for MAA, the aggregation
/// coefficients over the whole video for the baseline modes.
std::vector<double> cas_weights(const Model& model, const Matrix& features);

/// Full inference for one video: video-level class rejection, CAS per
/// surviving class, proposals at every threshold fraction, per-class NMS.
std::vector<TemporalProposal> localize(const Model& model, const Matrix& features,
                                       double snippet_duration, const std::string& video_id,
                                       const LocalizeOptions& options = {});

// One JSON record per line: {"video_id", "class_id", "start_s", "end_s", "confidence"}.
std::string proposals_to_jsonl(const std::vector<TemporalProposal>& proposals);
void save_proposals(const std::vector<TemporalProposal>& proposals, const std::string& path);
std::vector<TemporalProposal> load_proposals(const std::string& path);

}  // namespace maan
