#pragma once

#include <string>

namespace maan {

struct TemporalProposal {
  std::string video_id;
  int class_id = 0;
  double start_s = 0.0;
  double end_s = 0.0;
  double confidence = 0.0;

  bool operator==(const TemporalProposal&) const = default;
};

}  // namespace maan
