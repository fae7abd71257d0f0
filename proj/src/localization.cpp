#include "maan/localization.hpp"

#include <algorithm>
#include <cmath>

#include "json_io.hpp"
#include "maan/error.hpp"

namespace maan {

namespace {

ClassActivationSequence make_cas(const Matrix& features, std::span<const double> weights,
                                 const ClassifierParams& classifier, double snippet_duration) {
  require(weights.size() == features.rows(), "cas: weight count does not match snippets");
  require(features.cols() == classifier.w.cols(), "cas: feature dimension mismatch");
  const std::size_t T = features.rows();
  const std::size_t C = classifier.w.rows();
  ClassActivationSequence cas{Matrix(T, C), snippet_duration};
  for (std::size_t t = 0; t < T; ++t) {
    const auto sig = classify(features.row(t), classifier);
    for (std::size_t c = 0; c < C; ++c) cas.scores(t, c) = weights[t] * sig[c];
  }
  return cas;
}

}  // namespace

ClassActivationSequence cas_maan(const Matrix& features, std::span<const double> probs,
                                 const ClassifierParams& classifier, double snippet_duration) {
  return make_cas(features, probs, classifier, snippet_duration);
}

ClassActivationSequence cas_stpn(const Matrix& features, std::span<const double> weights,
                                 const ClassifierParams& classifier, double snippet_duration) {
  return make_cas(features, weights, classifier, snippet_duration);
}

std::vector<TemporalProposal> extract_proposals(std::span<const double> cas_column,
                                                double threshold_fraction,
                                                double snippet_duration, int class_id) {
  require(!cas_column.empty(), "extract_proposals: empty CAS");
  require(threshold_fraction > 0.0 && threshold_fraction < 1.0,
          "extract_proposals: threshold fraction must lie in (0,1)");
  std::vector<TemporalProposal> out;
  const double top = *std::max_element(cas_column.begin(), cas_column.end());
  if (!(top > 0.0)) return out;
  const double threshold = threshold_fraction * top;

  const std::size_t T = cas_column.size();
  std::size_t t = 0;
  while (t < T) {
    if (!(cas_column[t] > threshold)) {
      ++t;
      continue;
    }
    const std::size_t first = t;
    double sum = 0.0;
    while (t < T && cas_column[t] > threshold) sum += cas_column[t++];
    TemporalProposal p;
    p.class_id = class_id;
    p.start_s = static_cast<double>(first) * snippet_duration;
    p.end_s = static_cast<double>(t) * snippet_duration;
    p.confidence = sum / static_cast<double>(t - first);
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<TemporalProposal> nms(std::vector<TemporalProposal> proposals, double iou_threshold) {
  require(iou_threshold > 0.0 && iou_threshold <= 1.0, "nms: IoU threshold must lie in (0,1]");
  if (proposals.empty()) return proposals;
  for (const auto& p : proposals)
    require(p.class_id == proposals.front().class_id, "nms: proposals span several classes");

  std::stable_sort(proposals.begin(), proposals.end(),
                   [](const TemporalProposal& a, const TemporalProposal& b) {
                     if (a.confidence != b.confidence) return a.confidence > b.confidence;
                     if (a.start_s != b.start_s) return a.start_s < b.start_s;
                     return a.end_s - a.start_s < b.end_s - b.start_s;
                   });
  std::vector<TemporalProposal> kept;
  for (auto& p : proposals) {
    const bool suppressed = std::any_of(kept.begin(), kept.end(), [&](const TemporalProposal& k) {
      return temporal_iou(p.start_s, p.end_s, k.start_s, k.end_s) >= iou_threshold;
    });
    if (!suppressed) kept.push_back(std::move(p));
  }
  return kept;
}

void validate(const LocalizeOptions& options) {
  const auto bad = [](const std::string& what) { fail(ErrorCode::Config, "localize: " + what); };
  if (options.threshold_fractions.empty()) bad("need at least one threshold fraction");
  for (double f : options.threshold_fractions)
    if (!(f > 0.0 && f < 1.0)) bad("threshold fractions must lie in (0,1)");
  if (!(options.class_reject >= 0.0 && options.class_reject <= 1.0))
    bad("class rejection threshold must lie in [0,1]");
  if (!(options.nms_iou > 0.0 && options.nms_iou <= 1.0)) bad("NMS IoU must lie in (0,1]");
}

std::vector<double> cas_weights(const Model& model, const Matrix& features) {
  const auto scores = attention_scores(features, model.attention);
  switch (model.mode) {
    case AggregatorKind::MAA:
    case AggregatorKind::WeightedSum:
    case AggregatorKind::Dropout:
      return scores;
    case AggregatorKind::Norm:
    case AggregatorKind::SoftMaxNorm:
      return aggregation_coefficients(model.mode, scores);
  }
  return scores;
}

std::vector<TemporalProposal> localize(const Model& model, const Matrix& features,
                                       double snippet_duration, const std::string& video_id,
                                       const LocalizeOptions& options) {
  validate(options);
  const auto video_probs = video_probabilities(model, features);
  const auto weights = cas_weights(model, features);
  const auto cas = model.mode == AggregatorKind::MAA
                       ? cas_maan(features, weights, model.classifier, snippet_duration)
                       : cas_stpn(features, weights, model.classifier, snippet_duration);

  std::vector<TemporalProposal> out;
  std::vector<double> column(features.rows());
  for (std::size_t c = 0; c < video_probs.size(); ++c) {
    if (video_probs[c] < options.class_reject) continue;
    for (std::size_t t = 0; t < column.size(); ++t) column[t] = cas.scores(t, c);
    std::vector<TemporalProposal> pooled;
    for (double fraction : options.threshold_fractions) {
      auto props = extract_proposals(column, fraction, snippet_duration, static_cast<int>(c));
      pooled.insert(pooled.end(), props.begin(), props.end());
    }
    for (auto& p : nms(std::move(pooled), options.nms_iou)) {
      p.video_id = video_id;
      out.push_back(std::move(p));
    }
  }
  return out;
}

std::string proposals_to_jsonl(const std::vector<TemporalProposal>& proposals) {
  std::string out;
  for (const auto& p : proposals) {
    nlohmann::json rec = {{"video_id", p.video_id},
                          {"class_id", p.class_id},
                          {"start_s", p.start_s},
                          {"end_s", p.end_s},
                          {"confidence", p.confidence}};
    out += rec.dump() + "\n";
  }
  return out;
}

void save_proposals(const std::vector<TemporalProposal>& proposals, const std::string& path) {
  io::write_file(path, proposals_to_jsonl(proposals));
}

std::vector<TemporalProposal> load_proposals(const std::string& path) {
  const auto records = io::parse_lines(io::read_file(path), path);
  std::vector<TemporalProposal> out;
  out.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    auto p = io::decode(path, "record " + std::to_string(i + 1), [&] {
      return TemporalProposal{r.at("video_id").get<std::string>(), r.at("class_id").get<int>(),
                              r.at("start_s").get<double>(), r.at("end_s").get<double>(),
                              r.at("confidence").get<double>()};
    });
    if (!(p.start_s < p.end_s))
      fail(ErrorCode::Parse, path + ": record " + std::to_string(i + 1) +
                                 ": start_s must precede end_s");
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace maan
