#pragma once

// Synthetic weak-supervision corpus: videos made of background snippets with
// planted action segments. Each segment is built around a class prototype,
// but its snippets fade towards the background prototype away from a random
// peak, so every action has easy (prototype-like) and hard (faint) parts.

#include <cstdint>
#include <string>

#include "maan/dataset.hpp"

namespace maan {

struct SynthConfig {
  int num_classes = 5;
  int feature_dim = 16;
  int train_videos_per_class = 40;
  int test_videos_per_class = 20;
  int snippets_per_video = 60;  // T_full
  int min_segments = 1;
  int max_segments = 2;
  int min_segment_length = 6;
  int max_segment_length = 14;
  double noise_sigma = 0.15;
  // Chord distance between the unit-norm background and class prototypes, in (0, 2).
  double background_separation = 1.0;
  // 0: every in-segment snippet equals its prototype; 1: the faintest
  // snippet of a segment is pure background.
  double salience_gradient = 0.8;
  double snippet_duration = 1.0;
  std::uint64_t seed = 0;
};

enum class Split { Train, Test };

/// Throws Config when the parameters are out of range or the requested
/// segments cannot be packed into a video without overlap.
void validate(const SynthConfig& config);

Dataset generate_dataset(const SynthConfig& config, Split split);

struct Prototypes {
  Matrix classes;  // C x d, unit rows
  std::vector<double> background;
};

/// Prototypes shared by both splits of a config.
Prototypes make_prototypes(const SynthConfig& config);

}  // namespace maan
