#pragma once

#include <string>
#include <vector>

#include "maan/matrix.hpp"

namespace maan {

struct GroundTruthSegment {
  std::string video_id;
  int class_id = 0;
  double start_s = 0.0;
  double end_s = 0.0;

  bool operator==(const GroundTruthSegment&) const = default;
};

struct Video {
  std::string video_id;
  Matrix features;          // T_full x d
  std::vector<int> labels;  // length C, entries in {0,1}
  double snippet_duration = 1.0;
  // Hidden segments; populated for generated data, never read by training.
  std::vector<GroundTruthSegment> segments;

  bool operator==(const Video&) const = default;
};

struct Dataset {
  std::string split;
  int num_classes = 0;
  int feature_dim = 0;
  std::vector<Video> videos;

  bool operator==(const Dataset&) const = default;
};

// Manifest document: {"format": "maan-dataset", "version": 1, "split",
// "num_classes", "feature_dim", "videos": [{"video_id", "snippet_duration",
// "labels", "features": [[...], ...]}]}. Segments are not written here.
void save_dataset(const Dataset& dataset, const std::string& path);
Dataset load_dataset(const std::string& path);

// Ground-truth document: {"format": "maan-ground-truth", "version": 1,
// "segments": [{"video_id", "class_id", "start_s", "end_s"}]}.
void save_ground_truth(const std::vector<GroundTruthSegment>& segments,
                       const std::string& path);
std::vector<GroundTruthSegment> load_ground_truth(const std::string& path);

std::vector<GroundTruthSegment> collect_segments(const Dataset& dataset);

}  // namespace maan
