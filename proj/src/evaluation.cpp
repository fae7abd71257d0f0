#include "maan/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>

#include <json.hpp>

#include "maan/error.hpp"

namespace maan {

double temporal_iou(double a_start, double a_end, double b_start, double b_end) {
  require(a_start < a_end && b_start < b_end, "temporal_iou: degenerate interval");
  const double inter = std::min(a_end, b_end) - std::max(a_start, b_start);
  if (inter <= 0.0) return 0.0;
  const double uni = std::max(a_end, b_end) - std::min(a_start, b_start);
  return inter / uni;
}

double average_precision(std::span<const TemporalProposal> proposals,
                         std::span<const GroundTruthSegment> ground_truth,
                         double iou_threshold) {
  if (ground_truth.empty())
    fail(ErrorCode::DegenerateInput, "average_precision: no ground truth for this class");

  std::vector<std::size_t> order(proposals.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (proposals[a].confidence != proposals[b].confidence)
      return proposals[a].confidence > proposals[b].confidence;
    return proposals[a].start_s < proposals[b].start_s;
  });

  std::vector<bool> matched(ground_truth.size(), false);
  std::size_t hits = 0;
  double ap = 0.0;
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    const auto& p = proposals[order[rank]];
    double best = -1.0;
    std::size_t best_gt = 0;
    for (std::size_t g = 0; g < ground_truth.size(); ++g) {
      if (matched[g] || ground_truth[g].video_id != p.video_id) continue;
      const double iou = temporal_iou(p.start_s, p.end_s, ground_truth[g].start_s,
                                      ground_truth[g].end_s);
      if (iou > best) {
        best = iou;
        best_gt = g;
      }
    }
    if (best >= iou_threshold) {
      matched[best_gt] = true;
      ++hits;
      ap += static_cast<double>(hits) / static_cast<double>(rank + 1);
    }
  }
  return ap / static_cast<double>(ground_truth.size());
}

std::vector<double> mean_ap(const Matrix& ap) {
  require(ap.rows() >= 1, "mean_ap: need at least one class");
  std::vector<double> out(ap.cols(), 0.0);
  for (std::size_t c = 0; c < ap.rows(); ++c) axpy(1.0, ap.row(c), out);
  for (double& v : out) v /= static_cast<double>(ap.rows());
  return out;
}

ApReport evaluate(std::span<const TemporalProposal> proposals,
                  std::span<const GroundTruthSegment> ground_truth,
                  std::span<const double> iou_thresholds) {
  std::map<int, std::vector<GroundTruthSegment>> gt_by_class;
  for (const auto& g : ground_truth) gt_by_class[g.class_id].push_back(g);
  std::map<int, std::vector<TemporalProposal>> props_by_class;
  for (const auto& p : proposals) props_by_class[p.class_id].push_back(p);

  ApReport report;
  report.iou_thresholds.assign(iou_thresholds.begin(), iou_thresholds.end());
  report.ap = Matrix(gt_by_class.size(), iou_thresholds.size());
  std::size_t row = 0;
  for (const auto& [cls, gts] : gt_by_class) {
    report.class_ids.push_back(cls);
    const auto& props = props_by_class[cls];
    for (std::size_t k = 0; k < iou_thresholds.size(); ++k)
      report.ap(row, k) = average_precision(props, gts, iou_thresholds[k]);
    ++row;
  }
  report.mean_ap = mean_ap(report.ap);
  return report;
}

std::string report_text(const ApReport& report) {
  std::string out;
  char buf[64];
  out += "IoU     mAP     ";
  for (int c : report.class_ids) {
    std::snprintf(buf, sizeof buf, "class%-3d", c);
    out += buf;
  }
  out += "\n";
  for (std::size_t k = 0; k < report.iou_thresholds.size(); ++k) {
    std::snprintf(buf, sizeof buf, "%-7.2f %-7.4f ", report.iou_thresholds[k], report.mean_ap[k]);
    out += buf;
    for (std::size_t c = 0; c < report.class_ids.size(); ++c) {
      std::snprintf(buf, sizeof buf, "%-7.4f ", report.ap(c, k));
      out += buf;
    }
    out += "\n";
  }
  return out;
}

std::string report_jsonl(const ApReport& report) {
  std::string out;
  for (std::size_t k = 0; k < report.iou_thresholds.size(); ++k) {
    nlohmann::json per_class = nlohmann::json::object();
    for (std::size_t c = 0; c < report.class_ids.size(); ++c)
      per_class[std::to_string(report.class_ids[c])] = report.ap(c, k);
    nlohmann::json rec = {{"iou", report.iou_thresholds[k]},
                          {"map", report.mean_ap[k]},
                          {"ap", std::move(per_class)}};
    out += rec.dump() + "\n";
  }
  return out;
}

double segment_coverage(std::span<const TemporalProposal> proposals,
                        std::span<const GroundTruthSegment> ground_truth,
                        double snippet_duration) {
  require(snippet_duration > 0.0, "segment_coverage: snippet_duration must be positive");
  if (ground_truth.empty()) return 0.0;
  double total = 0.0;
  for (const auto& g : ground_truth) {
    const auto first = static_cast<long>(std::llround(g.start_s / snippet_duration));
    const auto last = static_cast<long>(std::llround(g.end_s / snippet_duration));  // exclusive
    long covered = 0;
    for (long t = first; t < last; ++t) {
      const double mid = (static_cast<double>(t) + 0.5) * snippet_duration;
      for (const auto& p : proposals) {
        if (p.video_id == g.video_id && p.class_id == g.class_id && p.start_s <= mid &&
            mid <= p.end_s) {
          ++covered;
          break;
        }
      }
    }
    total += last > first ? static_cast<double>(covered) / static_cast<double>(last - first) : 0.0;
  }
  return total / static_cast<double>(ground_truth.size());
}

}  // namespace maan
