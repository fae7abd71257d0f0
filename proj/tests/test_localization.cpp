#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <vector>

#include "maan/error.hpp"
#include "maan/localization.hpp"

using namespace maan;

namespace {

TemporalProposal prop(double s, double e, double conf, int cls = 0) {
  return TemporalProposal{"v", cls, s, e, conf};
}

bool throws_code(ErrorCode code, auto&& fn) {
  try {
    fn();
    return false;
  } catch (const Error& e) {
    return e.code() == code;
  }
}

std::string temp_path(const char* name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("proposal extraction") {
  const std::vector cas{0.9, 0.8, 0.1, 0.7};
  const auto props = extract_proposals(cas, 0.2, 1.0, 3);
  REQUIRE(props.size() == 2);
  CHECK(props[0].start_s == 0.0);
  CHECK(props[0].end_s == 2.0);
  CHECK(props[0].confidence == doctest::Approx(0.85));
  CHECK(props[1].start_s == 3.0);
  CHECK(props[1].end_s == 4.0);
  CHECK(props[1].confidence == doctest::Approx(0.7));
  CHECK(props[1].class_id == 3);

  SUBCASE("scores equal to the threshold are excluded") {
    const auto p = extract_proposals(std::vector{1.0, 0.5, 1.0}, 0.5, 2.0, 0);
    REQUIRE(p.size() == 2);
    CHECK(p[1].start_s == 4.0);
    CHECK(p[1].end_s == 6.0);
  }
  SUBCASE("flat zero CAS yields nothing") {
    CHECK(extract_proposals(std::vector{0.0, 0.0}, 0.2, 1.0, 0).empty());
  }
  SUBCASE("constant positive CAS is one run") {
    CHECK(extract_proposals(std::vector(5, 0.4), 0.2, 1.0, 0).size() == 1);
  }
  SUBCASE("fraction outside (0,1)") {
    CHECK(throws_code(ErrorCode::ContractViolation,
                      [] { extract_proposals(std::vector{1.0}, 1.0, 1.0, 0); }));
  }
}

TEST_CASE("non-maximum suppression") {
  SUBCASE("IoU 1/3 at threshold 0.3 suppresses") {
    const auto kept = nms({prop(0, 10, 0.9), prop(5, 15, 0.8)}, 0.3);
    REQUIRE(kept.size() == 1);
    CHECK(kept[0].end_s == 10.0);
  }
  SUBCASE("IoU 1/3 at threshold 0.5 keeps both") {
    CHECK(nms({prop(0, 10, 0.9), prop(5, 15, 0.8)}, 0.5).size() == 2);
  }
  SUBCASE("ties prefer earlier start, then shorter") {
    const auto kept = nms({prop(5, 15, 0.5), prop(0, 12, 0.5), prop(0, 10, 0.5)}, 0.5);
    REQUIRE(kept.size() == 2);
    CHECK(kept[0].start_s == 0.0);
    CHECK(kept[0].end_s == 10.0);
    CHECK(kept[1].start_s == 5.0);
  }
  SUBCASE("disjoint proposals survive") {
    CHECK(nms({prop(0, 1, 0.1), prop(2, 3, 0.9), prop(4, 5, 0.5)}, 0.1).size() == 3);
  }
  SUBCASE("mixed classes are rejected") {
    CHECK(throws_code(ErrorCode::ContractViolation,
                      [] { nms({prop(0, 1, 0.5, 0), prop(0, 1, 0.5, 1)}, 0.5); }));
  }
}

TEST_CASE("class activation sequence") {
  const Matrix x{{1.0, 0.0}, {0.0, 1.0}};
  const ClassifierParams cls{Matrix{{0.0, 0.0}}};
  const auto cas = cas_maan(x, std::vector{0.2, 0.8}, cls, 0.5);
  CHECK(cas.scores(0, 0) == doctest::Approx(0.1));
  CHECK(cas.scores(1, 0) == doctest::Approx(0.4));
  CHECK(cas.snippet_duration == 0.5);
  CHECK_THROWS_AS(cas_stpn(x, std::vector{1.0}, cls), Error);
}

TEST_CASE("localize") {
  // Attention all one, class 0 fires on the first snippets.
  Model m = init_model(AggregatorKind::MAA, 2, 2, 1, 0.01, 4, 0);
  m.attention.w1 = Matrix(1, 2, 0.0);
  m.attention.w2 = {0.0};
  m.attention.b2 = 50.0;
  m.classifier.w = Matrix{{8.0, -8.0}, {-8.0, -8.0}};
  const Matrix x{{1.0, 0.0}, {1.0, 0.0}, {0.0, 1.0}, {0.0, 1.0}, {1.0, 0.0}, {0.0, 1.0}};

  const auto props = localize(m, x, 2.0, "vid", {});
  REQUIRE_FALSE(props.empty());
  for (const auto& p : props) {
    CHECK(p.class_id == 0);  // class 1 is rejected at video level
    CHECK(p.video_id == "vid");
  }
  CHECK(props[0].start_s == 0.0);
  CHECK(props[0].end_s == 4.0);

  SUBCASE("rejecting every class gives no proposals") {
    LocalizeOptions opts;
    opts.class_reject = 1.0;
    CHECK(localize(m, x, 1.0, "vid", opts).empty());
  }
  SUBCASE("several fractions are pooled before NMS") {
    LocalizeOptions opts;
    opts.threshold_fractions = {0.2, 0.15, 0.1, 0.05};
    CHECK(localize(m, x, 1.0, "vid", opts).size() == props.size());
  }
  SUBCASE("invalid options") {
    LocalizeOptions opts;
    opts.threshold_fractions = {};
    CHECK(throws_code(ErrorCode::Config, [&] { localize(m, x, 1.0, "vid", opts); }));
    opts.threshold_fractions = {0.2};
    opts.nms_iou = 0.0;
    CHECK(throws_code(ErrorCode::Config, [&] { localize(m, x, 1.0, "vid", opts); }));
  }
}

TEST_CASE("baseline CAS weights use the aggregation coefficients") {
  Model m = init_model(AggregatorKind::Norm, 2, 1, 3, 0.01, 4, 5);
  const Matrix x{{1.0, 0.0}, {0.0, 1.0}, {0.5, 0.5}};
  const auto w = cas_weights(m, x);
  double sum = 0.0;
  for (double v : w) sum += v;
  CHECK(sum == doctest::Approx(1.0));
  m.mode = AggregatorKind::WeightedSum;
  CHECK(cas_weights(m, x) == attention_scores(x, m.attention));
}

TEST_CASE("proposal records round-trip") {
  const std::vector<TemporalProposal> props{{"a", 1, 0.0, 2.5, 0.75}, {"b", 0, 1.0, 3.0, 0.125}};
  const auto path = temp_path("maan_test_props.jsonl");
  save_proposals(props, path);
  const auto back = load_proposals(path);
  REQUIRE(back.size() == 2);
  CHECK(back[0].video_id == "a");
  CHECK(back[1].confidence == 0.125);

  std::ofstream(path) << "{\"video_id\": \"a\", \"class_id\": 0, \"start_s\": 0, \"end_s\": 1, "
                         "\"confidence\": 0.5}\nnot json\n";
  try {
    load_proposals(path);
    FAIL("expected a parse error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Parse);
    CHECK(std::string(e.what()).find(":2") != std::string::npos);
  }
  std::ofstream(path) << "{\"video_id\": \"a\", \"class_id\": 0}\n";
  CHECK(throws_code(ErrorCode::Parse, [&] { load_proposals(path); }));
  std::filesystem::remove(path);
  CHECK(throws_code(ErrorCode::Io, [&] { load_proposals(path); }));
}
