#pragma once

// Detection metrics: temporal IoU, per-class average precision and mAP over
// IoU thresholds.

#include <span>
#include <string>
#include <vector>

#include "maan/dataset.hpp"
#include "maan/matrix.hpp"
#include "maan/proposal.hpp"

namespace maan {

/// |a n b| / |a u b|; 0 for disjoint intervals. Throws ContractViolation for
/// empty or reversed intervals.
double temporal_iou(double a_start, double a_end, double b_start, double b_end);

inline const std::vector<double>& thumos_iou_grid() {
  static const std::vector<double> grid{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
  return grid;
}
inline const std::vector<double>& activitynet_iou_grid() {
  static const std::vector<double> grid{0.5, 0.75, 0.95};
  return grid;
}

/// Non-interpolated AP for one class. Proposals are ranked by confidence
/// (ties: earlier start); each is matched to the unmatched ground-truth
/// segment of the same video with the highest IoU, if that IoU reaches the
/// threshold. Throws DegenerateInput when `ground_truth` is empty.
double average_precision(std::span<const TemporalProposal> proposals,
                         std::span<const GroundTruthSegment> ground_truth,
                         double iou_threshold);

struct ApReport {
  std::vector<double> iou_thresholds;
  std::vector<int> class_ids;  // ascending; classes with ground truth only
  Matrix ap;                   // classes x thresholds
  std::vector<double> mean_ap;  // per threshold
};

/// Mean over classes (rows of `ap`) for each threshold. Needs >= 1 class.
std::vector<double> mean_ap(const Matrix& ap);

/// AP for every class that has ground truth, at every threshold.
ApReport evaluate(std::span<const TemporalProposal> proposals,
                  std::span<const GroundTruthSegment> ground_truth,
                  std::span<const double> iou_thresholds);

std::string report_text(const ApReport& report);
/// One JSON record per threshold: {"iou", "map", "ap": {"<class>": value}}.
std::string report_jsonl(const ApReport& report);

/// Mean over ground-truth segments of the fraction of the segment's snippets
/// covered by some proposal of the same video and class.
double segment_coverage(std::span<const TemporalProposal> proposals,
                        std::span<const GroundTruthSegment> ground_truth,
                        double snippet_duration);

}  // namespace maan
