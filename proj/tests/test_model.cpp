#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <vector>

#include "maan/error.hpp"
#include "maan/model.hpp"
#include "maan/rng.hpp"

using namespace maan;

namespace {

Model micro_model(AggregatorKind mode, std::uint64_t seed) {
  // T=4, d=3, C=2 with random (not Xavier-scaled) parameters.
  Model m = init_model(mode, 3, 2, 5, 0.01, 4, seed);
  Rng rng = make_rng(seed, "test.micro");
  auto flat = pack(m);
  for (double& v : flat) v = uniform(rng, -1.0, 1.0);
  unpack(flat, m);
  return m;
}

// 160 videos of two classes. Every snippet of a class-c video sits near +-5 on
// the first two axes, so a mean of any subset is linearly separable.
Dataset separable_dataset(std::uint64_t seed) {
  Dataset ds;
  ds.split = "train";
  ds.num_classes = 2;
  ds.feature_dim = 4;
  Rng rng = make_rng(seed, "test.separable");
  for (int v = 0; v < 160; ++v) {
    Video video;
    video.video_id = "sep_" + std::to_string(v);
    const int c = v % 2;
    video.labels = {c == 0 ? 1 : 0, c == 1 ? 1 : 0};
    video.features = Matrix(24, 4);
    for (std::size_t t = 0; t < 24; ++t) {
      auto row = video.features.row(t);
      row[0] = (c == 0 ? 5.0 : -5.0) + uniform(rng, -0.5, 0.5);
      row[1] = -row[0];
      row[2] = uniform(rng, -0.5, 0.5);
      row[3] = uniform(rng, -0.5, 0.5);
    }
    ds.videos.push_back(std::move(video));
  }
  return ds;
}

bool throws_code(ErrorCode code, auto&& fn) {
  try {
    fn();
    return false;
  } catch (const Error& e) {
    return e.code() == code;
  }
}

}  // namespace

TEST_CASE("attention scores") {
  AttentionParams a{Matrix(4, 3, 0.0), std::vector<double>(4, 0.0), std::vector<double>(4, 0.0),
                    0.0, 0.01};
  const Matrix x{{1.0, 2.0, 3.0}, {-1.0, 0.0, 4.0}};
  for (double p : attention_scores(x, a)) CHECK(p == 0.5);

  double prev = 0.5;
  for (double b2 : {1.0, 2.0, 4.0, 8.0}) {
    a.b2 = b2;
    const double p = attention_scores(x, a)[0];
    CHECK(p > prev);
    prev = p;
  }

  const Model m = micro_model(AggregatorKind::MAA, 3);
  const Matrix y{{0.1, 0.2, 0.3}, {0.4, -0.5, 0.6}, {-0.7, 0.8, 0.9}};
  const Matrix y_perm{{-0.7, 0.8, 0.9}, {0.1, 0.2, 0.3}, {0.4, -0.5, 0.6}};
  const auto s = attention_scores(y, m.attention);
  const auto sp = attention_scores(y_perm, m.attention);
  CHECK(sp[0] == s[2]);
  CHECK(sp[1] == s[0]);
  CHECK(sp[2] == s[1]);

  CHECK_THROWS_AS(attention_scores(Matrix(2, 5), m.attention), Error);
}

TEST_CASE("classify") {
  const auto zero = classify(std::vector{1.0, 2.0}, ClassifierParams{Matrix(3, 2, 0.0)});
  for (double p : zero) CHECK(p == 0.5);
  CHECK(classify(std::vector{0.0, 5.0}, ClassifierParams{Matrix{{1.0, 0.0}}})[0] == 0.5);
  CHECK(classify(std::vector{1.0, 0.0}, ClassifierParams{Matrix{{50.0, 0.0}}})[0] ==
        doctest::Approx(1.0));
}

TEST_CASE("loss") {
  CHECK(loss(std::vector{0.5}, std::vector{1}) == doctest::Approx(std::log(2.0)));
  CHECK(loss(std::vector{1.0 - 1e-12}, std::vector{1}) == doctest::Approx(0.0));
  CHECK(loss(std::vector{0.9, 0.2}, std::vector{1, 0}) ==
        doctest::Approx(-std::log(0.9) - std::log(0.8)).epsilon(1e-14));
  CHECK(loss(std::vector{0.9, 0.2}, std::vector{1, 0}) == doctest::Approx(0.3285).epsilon(1e-4));
  // Clamping keeps saturated predictions finite.
  CHECK(std::isfinite(loss(std::vector{0.0}, std::vector{1})));
  CHECK(throws_code(ErrorCode::ContractViolation, [] { loss(std::vector{0.5}, std::vector{2}); }));
}

TEST_CASE("init is seeded and within the Xavier bound") {
  const Model a = init_model(AggregatorKind::MAA, 16, 5, 32, 0.01, 20, 7);
  const Model b = init_model(AggregatorKind::MAA, 16, 5, 32, 0.01, 20, 7);
  const Model c = init_model(AggregatorKind::MAA, 16, 5, 32, 0.01, 20, 8);
  CHECK(a == b);
  CHECK_FALSE(a == c);
  const double bound = std::sqrt(6.0 / (16 + 32));
  for (double v : a.attention.w1.data()) CHECK(std::abs(v) <= bound);
  CHECK(pack(a).size() == 32 * 16 + 32 + 32 + 1 + 5 * 16);
}

TEST_CASE("pack and unpack are inverse") {
  Model m = micro_model(AggregatorKind::Norm, 5);
  auto flat = pack(m);
  Model copy = init_model(AggregatorKind::Norm, 3, 2, 5, 0.01, 4, 99);
  unpack(flat, copy);
  CHECK(copy == m);
  flat.pop_back();
  CHECK_THROWS_AS(unpack(flat, copy), Error);
}

TEST_CASE("end-to-end gradients match central differences in every mode") {
  const Matrix x{{0.3, -0.8, 0.5}, {1.1, 0.2, -0.4}, {-0.6, 0.9, 0.7}, {0.05, -0.3, 1.2}};
  const std::vector<int> labels{1, 0};
  const std::vector<double> mask{1.0, 0.0, 1.0, 1.0};
  for (auto mode : {AggregatorKind::MAA, AggregatorKind::WeightedSum, AggregatorKind::Dropout,
                    AggregatorKind::Norm, AggregatorKind::SoftMaxNorm}) {
    CAPTURE(to_string(mode));
    for (std::uint64_t seed : {1u, 2u, 3u}) {
      Model m = micro_model(mode, seed);
      const auto lg = video_loss_and_grad(m, x, labels, mask);
      auto flat = pack(m);
      const double step = 1e-6;
      double worst = 0.0;
      for (std::size_t k = 0; k < flat.size(); ++k) {
        const double keep = flat[k];
        flat[k] = keep + step;
        unpack(flat, m);
        const double up = video_loss_and_grad(m, x, labels, mask).loss;
        flat[k] = keep - step;
        unpack(flat, m);
        const double down = video_loss_and_grad(m, x, labels, mask).loss;
        flat[k] = keep;
        const double num = (up - down) / (2 * step);
        worst = std::max(worst, std::abs(lg.grad[k] - num) / std::max(1.0, std::abs(num)));
      }
      unpack(flat, m);
      CHECK(worst <= 1e-4);
    }
  }
}

TEST_CASE("with attention saturated at one, MAA and Norm give the same classifier gradient") {
  Model maa = micro_model(AggregatorKind::MAA, 11);
  maa.attention.b2 = 100.0;  // sigmoid rounds to exactly 1
  Model norm = maa;
  norm.mode = AggregatorKind::Norm;
  const Matrix x{{0.3, -0.8, 0.5}, {1.1, 0.2, -0.4}, {-0.6, 0.9, 0.7}, {0.05, -0.3, 1.2}};
  const auto a = inference_aggregate(maa, x);
  const auto b = inference_aggregate(norm, x);
  for (std::size_t k = 0; k < 3; ++k) {
    double mean = 0.0;
    for (std::size_t t = 0; t < 4; ++t) mean += x(t, k) / 4.0;
    CHECK(std::abs(a[k] - mean) <= 1e-10);
    CHECK(std::abs(b[k] - mean) <= 1e-10);
  }
  const std::vector<int> labels{0, 1};
  const auto ga = video_loss_and_grad(maa, x, labels).grad;
  const auto gb = video_loss_and_grad(norm, x, labels).grad;
  const std::size_t cls_offset = ga.size() - 2 * 3;
  for (std::size_t k = cls_offset; k < ga.size(); ++k) CHECK(std::abs(ga[k] - gb[k]) <= 1e-10);
}

TEST_CASE("snippet sampling") {
  Rng rng = make_rng(1, "test.sample");
  for (int trial = 0; trial < 20; ++trial) {
    const auto idx = sample_snippets(60, 20, rng);
    REQUIRE(idx.size() == 20);
    for (std::size_t s = 0; s < 20; ++s) {
      CHECK(idx[s] >= s * 3);
      CHECK(idx[s] < (s + 1) * 3);
    }
  }
  CHECK(centre_snippets(60, 20)[0] == 1);
  CHECK(centre_snippets(20, 20)[19] == 19);
  CHECK(centre_snippets(5, 20).size() == 5);
  CHECK_THROWS_AS(sample_snippets(10, 20, rng), Error);

  const Matrix m{{1.0}, {2.0}, {3.0}};
  CHECK(gather_rows(m, std::vector<std::size_t>{2, 0}) == Matrix{{3.0}, {1.0}});
}

TEST_CASE("training") {
  const Dataset ds = separable_dataset(1);
  TrainConfig cfg;
  cfg.hidden = 8;

  SUBCASE("separable set: loss falls below 0.1 within 50 epochs") {
    cfg.epochs = 50;
    cfg.batch_size = 2;
    const auto r = train(ds, cfg);
    REQUIRE(r.loss_history.size() == 50);
    CHECK(r.loss_history[9] < r.loss_history[0]);
    CHECK(r.loss_history.back() < 0.1);
  }
  SUBCASE("epochs = 0 returns the initial parameters") {
    cfg.epochs = 0;
    const auto r = train(ds, cfg);
    CHECK(r.loss_history.empty());
    CHECK(r.model == init_model(cfg.mode, 4, 2, 8, cfg.leaky_slope, cfg.snippets_per_video, cfg.seed));
  }
  SUBCASE("deterministic in every mode") {
    cfg.epochs = 3;
    for (auto mode : {AggregatorKind::MAA, AggregatorKind::WeightedSum, AggregatorKind::Dropout,
                      AggregatorKind::Norm, AggregatorKind::SoftMaxNorm}) {
      cfg.mode = mode;
      const auto a = train(ds, cfg);
      const auto b = train(ds, cfg);
      CHECK(a.model == b.model);
      CHECK(a.loss_history == b.loss_history);
    }
  }
  SUBCASE("config errors") {
    cfg.learning_rate = 0.0;
    CHECK(throws_code(ErrorCode::Config, [&] { train(ds, cfg); }));
    cfg.learning_rate = 5e-4;
    cfg.adam_beta1 = 1.0;
    CHECK(throws_code(ErrorCode::Config, [&] { train(ds, cfg); }));
    cfg.adam_beta1 = 0.9;
    cfg.snippets_per_video = 100;
    CHECK(throws_code(ErrorCode::ContractViolation, [&] { train(ds, cfg); }));
  }
  SUBCASE("divergence names the epoch") {
    cfg.epochs = 2;
    cfg.learning_rate = 1e308;
    try {
      train(ds, cfg);
      FAIL("expected Divergence");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::Divergence);
      CHECK(std::string(e.what()).find("epoch 1") != std::string::npos);
    }
  }
}

TEST_CASE("checkpoint round-trips bit-exactly") {
  const Model m = micro_model(AggregatorKind::SoftMaxNorm, 21);
  CHECK(model_from_json(model_to_json(m), "memory") == m);
  const auto path = (std::filesystem::temp_directory_path() / "maan_test_model.json").string();
  save_model(m, path);
  CHECK(load_model(path) == m);
  std::filesystem::remove(path);

  CHECK(throws_code(ErrorCode::Io, [] { load_model("/nonexistent/dir/model.json"); }));
  CHECK(throws_code(ErrorCode::Parse, [] { model_from_json("{\"format\": \"maan-model\"", "x"); }));
  CHECK(throws_code(ErrorCode::Parse, [] { model_from_json("{\"format\": \"other\"}", "x"); }));
}

TEST_CASE("video probabilities") {
  const Model m = micro_model(AggregatorKind::MAA, 4);
  Matrix x(10, 3, 0.25);
  const auto p = video_probabilities(m, x);
  REQUIRE(p.size() == 2);
  for (double v : p) CHECK((v > 0.0 && v < 1.0));
}
