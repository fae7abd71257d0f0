#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <vector>

#include "maan/dataset.hpp"
#include "maan/error.hpp"
#include "maan/synth.hpp"

using namespace maan;

namespace {

bool throws_code(ErrorCode code, auto&& fn) {
  try {
    fn();
    return false;
  } catch (const Error& e) {
    return e.code() == code;
  }
}

bool in_segment(const Video& v, std::size_t t, int* cls = nullptr) {
  for (const auto& s : v.segments)
    if (static_cast<double>(t) + 0.5 > s.start_s / v.snippet_duration &&
        static_cast<double>(t) + 0.5 < s.end_s / v.snippet_duration) {
      if (cls) *cls = s.class_id;
      return true;
    }
  return false;
}

}  // namespace

TEST_CASE("prototypes are unit norm and separated from the background") {
  SynthConfig cfg;
  cfg.background_separation = 0.7;
  const auto p = make_prototypes(cfg);
  CHECK(std::sqrt(dot(p.background, p.background)) == doctest::Approx(1.0));
  for (std::size_t c = 0; c < p.classes.rows(); ++c) {
    const auto row = p.classes.row(c);
    CHECK(std::sqrt(dot(row, row)) == doctest::Approx(1.0));
    double dist = 0.0;
    for (std::size_t k = 0; k < row.size(); ++k) dist += std::pow(row[k] - p.background[k], 2);
    CHECK(std::sqrt(dist) == doctest::Approx(0.7));
  }
}

TEST_CASE("noise-free, gradient-free snippets equal their prototype") {
  SynthConfig cfg;
  cfg.noise_sigma = 0.0;
  cfg.salience_gradient = 0.0;
  cfg.train_videos_per_class = 4;
  const auto ds = generate_dataset(cfg, Split::Train);
  const auto p = make_prototypes(cfg);
  for (const auto& v : ds.videos)
    for (std::size_t t = 0; t < v.features.rows(); ++t) {
      int cls = -1;
      const auto row = v.features.row(t);
      if (in_segment(v, t, &cls)) {
        for (std::size_t k = 0; k < row.size(); ++k)
          CHECK(row[k] == p.classes(static_cast<std::size_t>(cls), k));
      } else {
        for (std::size_t k = 0; k < row.size(); ++k) CHECK(row[k] == p.background[k]);
      }
    }
}

TEST_CASE("nearest prototype labels every noise-free snippet correctly") {
  SynthConfig cfg;
  cfg.noise_sigma = 0.0;
  cfg.salience_gradient = 0.0;
  cfg.test_videos_per_class = 3;
  const auto ds = generate_dataset(cfg, Split::Test);
  const auto p = make_prototypes(cfg);
  for (const auto& v : ds.videos)
    for (std::size_t t = 0; t < v.features.rows(); ++t) {
      int truth = -1;
      in_segment(v, t, &truth);
      int best = -1;
      double best_d = std::numeric_limits<double>::infinity();
      const auto row = v.features.row(t);
      for (int c = -1; c < cfg.num_classes; ++c) {
        double dist = 0.0;
        for (std::size_t k = 0; k < row.size(); ++k) {
          const double ref = c < 0 ? p.background[k] : p.classes(static_cast<std::size_t>(c), k);
          dist += (row[k] - ref) * (row[k] - ref);
        }
        if (dist < best_d) best_d = dist, best = c;
      }
      CHECK(best == truth);
    }
}

TEST_CASE("layout invariants") {
  SynthConfig cfg;
  const auto ds = generate_dataset(cfg, Split::Train);
  CHECK(ds.videos.size() == 200);
  CHECK(ds.videos[0].video_id == "train_0000");
  std::vector<int> per_class(5, 0);
  for (const auto& v : ds.videos) {
    CHECK(v.features.rows() == 60);
    REQUIRE_FALSE(v.segments.empty());
    CHECK(v.segments.size() <= 2);
    for (std::size_t c = 0; c < 5; ++c) {
      bool has = false;
      for (const auto& s : v.segments) has |= s.class_id == static_cast<int>(c);
      CHECK(v.labels[c] == (has ? 1 : 0));
      per_class[c] += v.labels[c];
    }
    for (std::size_t i = 0; i < v.segments.size(); ++i) {
      const auto& s = v.segments[i];
      CHECK(s.start_s >= 0.0);
      CHECK(s.end_s <= 60.0);
      CHECK(s.end_s - s.start_s >= 6.0);
      CHECK(s.end_s - s.start_s <= 14.0);
      if (i > 0) CHECK(s.start_s > v.segments[i - 1].end_s);  // at least one gap snippet
    }
  }
  CHECK(per_class == std::vector<int>(5, 40));
}

TEST_CASE("balanced two-class split") {
  SynthConfig cfg;
  cfg.num_classes = 2;
  cfg.train_videos_per_class = 20;
  const auto ds = generate_dataset(cfg, Split::Train);
  int a = 0, b = 0;
  for (const auto& v : ds.videos) a += v.labels[0], b += v.labels[1];
  CHECK(a == 20);
  CHECK(b == 20);
}

TEST_CASE("determinism and split independence") {
  SynthConfig cfg;
  cfg.train_videos_per_class = 3;
  cfg.test_videos_per_class = 3;
  CHECK(generate_dataset(cfg, Split::Train) == generate_dataset(cfg, Split::Train));
  const auto train = generate_dataset(cfg, Split::Train);
  const auto test = generate_dataset(cfg, Split::Test);
  CHECK_FALSE(train.videos[0].features == test.videos[0].features);
  cfg.seed = 1;
  CHECK_FALSE(generate_dataset(cfg, Split::Train) == train);
}

TEST_CASE("config validation") {
  SynthConfig cfg;
  cfg.snippets_per_video = 28;  // needs 2 * 14 + 1
  CHECK(throws_code(ErrorCode::Config, [&] { generate_dataset(cfg, Split::Train); }));
  cfg.snippets_per_video = 29;
  CHECK_NOTHROW(validate(cfg));
  cfg.noise_sigma = -1.0;
  CHECK(throws_code(ErrorCode::Config, [&] { validate(cfg); }));
  cfg = {};
  cfg.salience_gradient = 1.5;
  CHECK(throws_code(ErrorCode::Config, [&] { validate(cfg); }));
  cfg = {};
  cfg.background_separation = 0.0;
  CHECK(throws_code(ErrorCode::Config, [&] { validate(cfg); }));
}

TEST_CASE("dataset and ground-truth files round-trip") {
  SynthConfig cfg;
  cfg.train_videos_per_class = 2;
  auto ds = generate_dataset(cfg, Split::Train);
  const auto dir = std::filesystem::temp_directory_path();
  const auto data_path = (dir / "maan_test_ds.json").string();
  const auto gt_path = (dir / "maan_test_gt.json").string();
  save_dataset(ds, data_path);
  save_ground_truth(collect_segments(ds), gt_path);
  auto back = load_dataset(data_path);
  for (auto& v : ds.videos) v.segments.clear();  // not part of the manifest
  CHECK(back == ds);
  const auto segs = load_ground_truth(gt_path);
  CHECK(segs == collect_segments(generate_dataset(cfg, Split::Train)));

  std::ofstream(data_path) << "{\"format\": \"maan-dataset\", \"version\": 1,\n \"videos\": [}";
  try {
    load_dataset(data_path);
    FAIL("expected a parse error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Parse);
    CHECK(std::string(e.what()).find(":2") != std::string::npos);
  }
  std::ofstream(data_path) << "{\"format\": \"maan-ground-truth\", \"version\": 1, \"segments\": []}";
  CHECK(throws_code(ErrorCode::Parse, [&] { load_dataset(data_path); }));
  std::filesystem::remove(data_path);
  std::filesystem::remove(gt_path);
  CHECK(throws_code(ErrorCode::Io, [&] { load_dataset(data_path); }));
}
