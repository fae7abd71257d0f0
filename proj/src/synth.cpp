#include "maan/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

#include "maan/error.hpp"
#include "maan/rng.hpp"

namespace maan {

namespace {

std::vector<double> random_unit(Rng& rng, int d) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> v(static_cast<std::size_t>(d));
  double norm = 0.0;
  do {
    for (double& x : v) x = normal(rng);
    norm = std::sqrt(dot(v, v));
  } while (norm < 1e-8);
  for (double& x : v) x /= norm;
  return v;
}

}  // namespace

void validate(const SynthConfig& c) {
  const auto bad = [](const std::string& what) { fail(ErrorCode::Config, "synth: " + what); };
  if (c.num_classes < 1) bad("num_classes must be >= 1");
  if (c.feature_dim < 2) bad("feature_dim must be >= 2");
  if (c.train_videos_per_class < 1 || c.test_videos_per_class < 1)
    bad("videos per class must be >= 1");
  if (c.min_segments < 1 || c.max_segments < c.min_segments) bad("bad segment count range");
  if (c.min_segment_length < 1 || c.max_segment_length < c.min_segment_length)
    bad("bad segment length range");
  if (!(c.noise_sigma >= 0.0)) bad("noise_sigma must be >= 0");
  // At 2 every class prototype would collapse onto -background.
  if (!(c.background_separation > 0.0 && c.background_separation < 2.0))
    bad("background_separation must lie in (0, 2)");
  if (!(c.salience_gradient >= 0.0 && c.salience_gradient <= 1.0))
    bad("salience_gradient must lie in [0, 1]");
  if (!(c.snippet_duration > 0.0)) bad("snippet_duration must be positive");
  // Segments are separated by at least one background snippet.
  const long needed = static_cast<long>(c.max_segments) * c.max_segment_length +
                      (c.max_segments - 1);
  if (c.snippets_per_video < needed)
    bad("cannot pack " + std::to_string(c.max_segments) + " segments of length " +
        std::to_string(c.max_segment_length) + " into " +
        std::to_string(c.snippets_per_video) + " snippets without overlap");
}

Prototypes make_prototypes(const SynthConfig& config) {
  validate(config);
  Rng rng = make_rng(config.seed, "synth.prototypes");
  const int d = config.feature_dim;
  Prototypes out;
  out.background = random_unit(rng, d);
  out.classes = Matrix(static_cast<std::size_t>(config.num_classes), static_cast<std::size_t>(d));
  // Rotate the background by the angle whose chord equals the separation,
  // towards a random direction orthogonal to it.
  const double angle = 2.0 * std::asin(config.background_separation / 2.0);
  for (int c = 0; c < config.num_classes; ++c) {
    std::vector<double> u;
    double norm = 0.0;
    do {
      u = random_unit(rng, d);
      axpy(-dot(u, out.background), out.background, u);
      norm = std::sqrt(dot(u, u));
    } while (norm < 1e-6);
    auto row = out.classes.row(static_cast<std::size_t>(c));
    for (int k = 0; k < d; ++k)
      row[static_cast<std::size_t>(k)] = std::cos(angle) * out.background[static_cast<std::size_t>(k)] +
                                         std::sin(angle) * u[static_cast<std::size_t>(k)] / norm;
  }
  return out;
}

Dataset generate_dataset(const SynthConfig& config, Split split) {
  const Prototypes protos = make_prototypes(config);
  const bool train = split == Split::Train;
  const int per_class = train ? config.train_videos_per_class : config.test_videos_per_class;
  const int count = per_class * config.num_classes;
  const std::size_t T = static_cast<std::size_t>(config.snippets_per_video);
  const std::size_t d = static_cast<std::size_t>(config.feature_dim);

  Dataset ds;
  ds.split = train ? "train" : "test";
  ds.num_classes = config.num_classes;
  ds.feature_dim = config.feature_dim;

  Rng rng = make_rng(config.seed, train ? "synth.train" : "synth.test");
  std::normal_distribution<double> noise(0.0, 1.0);

  for (int v = 0; v < count; ++v) {
    const int cls = v % config.num_classes;
    Video video;
    char id[32];
    std::snprintf(id, sizeof id, "%s_%04d", ds.split.c_str(), v);
    video.video_id = id;
    video.snippet_duration = config.snippet_duration;
    video.labels.assign(static_cast<std::size_t>(config.num_classes), 0);
    video.labels[static_cast<std::size_t>(cls)] = 1;
    video.features = Matrix(T, d);
    for (std::size_t t = 0; t < T; ++t)
      std::copy(protos.background.begin(), protos.background.end(), video.features.row(t).begin());

    const int k = std::uniform_int_distribution<int>(config.min_segments, config.max_segments)(rng);
    std::vector<int> lengths(static_cast<std::size_t>(k));
    int occupied = k - 1;
    for (int& len : lengths) {
      len = std::uniform_int_distribution<int>(config.min_segment_length,
                                               config.max_segment_length)(rng);
      occupied += len;
    }
    // Split the free snippets into k+1 gaps via sorted uniform cut points.
    const int free = config.snippets_per_video - occupied;
    std::vector<int> cuts(static_cast<std::size_t>(k));
    for (int& c : cuts) c = std::uniform_int_distribution<int>(0, free)(rng);
    std::sort(cuts.begin(), cuts.end());

    const auto& proto = protos.classes;
    int cursor = 0;
    int prev_cut = 0;
    for (int s = 0; s < k; ++s) {
      const auto si = static_cast<std::size_t>(s);
      cursor += cuts[si] - prev_cut + (s > 0 ? 1 : 0);
      prev_cut = cuts[si];
      const int len = lengths[si];
      const int peak = std::uniform_int_distribution<int>(0, len - 1)(rng);
      const int reach = std::max(peak, len - 1 - peak);
      for (int j = 0; j < len; ++j) {
        const double salience =
            reach == 0 ? 1.0
                       : 1.0 - config.salience_gradient * std::abs(j - peak) / static_cast<double>(reach);
        auto row = video.features.row(static_cast<std::size_t>(cursor + j));
        const auto target = proto.row(static_cast<std::size_t>(cls));
        for (std::size_t c = 0; c < d; ++c)
          row[c] = salience * target[c] + (1.0 - salience) * protos.background[c];
      }
      video.segments.push_back({video.video_id, cls, cursor * config.snippet_duration,
                                (cursor + len) * config.snippet_duration});
      cursor += len;
    }

    if (config.noise_sigma > 0.0)
      for (double& x : video.features.data()) x += config.noise_sigma * noise(rng);
    ds.videos.push_back(std::move(video));
  }
  return ds;
}

}  // namespace maan
