#include "maan/dataset.hpp"

#include <cmath>

#include "json_io.hpp"
#include "maan/error.hpp"

namespace maan {

using nlohmann::json;

namespace {

json matrix_to_rows(const Matrix& m) {
  json rows = json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const auto row = m.row(r);
    rows.push_back(json(std::vector<double>(row.begin(), row.end())));
  }
  return rows;
}

Matrix rows_to_matrix(const json& rows, std::size_t cols) {
  Matrix m(rows.size(), cols);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto& row = rows.at(r);
    if (row.size() != cols)
      fail(ErrorCode::Parse, "row " + std::to_string(r) + " has " +
                                 std::to_string(row.size()) + " entries, expected " +
                                 std::to_string(cols));
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = row.at(c).get<double>();
  }
  return m;
}

}  // namespace

void save_dataset(const Dataset& dataset, const std::string& path) {
  json videos = json::array();
  for (const auto& v : dataset.videos) {
    videos.push_back({{"video_id", v.video_id},
                      {"snippet_duration", v.snippet_duration},
                      {"labels", v.labels},
                      {"features", matrix_to_rows(v.features)}});
  }
  json doc = {{"format", "maan-dataset"},
              {"version", 1},
              {"split", dataset.split},
              {"num_classes", dataset.num_classes},
              {"feature_dim", dataset.feature_dim},
              {"videos", std::move(videos)}};
  io::write_file(path, doc.dump() + "\n");
}

Dataset load_dataset(const std::string& path) {
  const json doc = io::load_document(path, "maan-dataset");
  Dataset ds;
  io::decode(path, "header", [&] {
    ds.split = doc.at("split").get<std::string>();
    ds.num_classes = doc.at("num_classes").get<int>();
    ds.feature_dim = doc.at("feature_dim").get<int>();
  });
  if (ds.num_classes < 1 || ds.feature_dim < 1)
    fail(ErrorCode::Parse, path + ": num_classes and feature_dim must be positive");

  const json& videos = io::decode(path, "videos", [&]() -> const json& { return doc.at("videos"); });
  for (std::size_t i = 0; i < videos.size(); ++i) {
    const std::string where = "videos[" + std::to_string(i) + "]";
    Video v;
    io::decode(path, where, [&] {
      const json& rec = videos.at(i);
      v.video_id = rec.at("video_id").get<std::string>();
      v.snippet_duration = rec.at("snippet_duration").get<double>();
      v.labels = rec.at("labels").get<std::vector<int>>();
      try {
        v.features = rows_to_matrix(rec.at("features"),
                                    static_cast<std::size_t>(ds.feature_dim));
      } catch (const Error& e) {
        fail(ErrorCode::Parse, path + ": " + where + ".features: " + e.what());
      }
    });
    if (v.labels.size() != static_cast<std::size_t>(ds.num_classes))
      fail(ErrorCode::Parse, path + ": " + where + ": label vector length mismatch");
    for (int y : v.labels)
      if (y != 0 && y != 1) fail(ErrorCode::Parse, path + ": " + where + ": label not in {0,1}");
    if (v.features.rows() == 0 || !(v.snippet_duration > 0.0))
      fail(ErrorCode::Parse, path + ": " + where + ": empty video or bad snippet_duration");
    for (double x : v.features.data())
      if (!std::isfinite(x)) fail(ErrorCode::Parse, path + ": " + where + ": non-finite feature");
    ds.videos.push_back(std::move(v));
  }
  return ds;
}

void save_ground_truth(const std::vector<GroundTruthSegment>& segments,
                       const std::string& path) {
  json recs = json::array();
  for (const auto& s : segments)
    recs.push_back({{"video_id", s.video_id},
                    {"class_id", s.class_id},
                    {"start_s", s.start_s},
                    {"end_s", s.end_s}});
  json doc = {{"format", "maan-ground-truth"}, {"version", 1}, {"segments", std::move(recs)}};
  io::write_file(path, doc.dump(1) + "\n");
}

std::vector<GroundTruthSegment> load_ground_truth(const std::string& path) {
  const json doc = io::load_document(path, "maan-ground-truth");
  std::vector<GroundTruthSegment> out;
  const json& recs = io::decode(path, "segments", [&]() -> const json& { return doc.at("segments"); });
  for (std::size_t i = 0; i < recs.size(); ++i) {
    const std::string where = "segments[" + std::to_string(i) + "]";
    GroundTruthSegment s = io::decode(path, where, [&] {
      const json& r = recs.at(i);
      return GroundTruthSegment{r.at("video_id").get<std::string>(), r.at("class_id").get<int>(),
                                r.at("start_s").get<double>(), r.at("end_s").get<double>()};
    });
    if (!(s.start_s < s.end_s))
      fail(ErrorCode::Parse, path + ": " + where + ": start_s must precede end_s");
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<GroundTruthSegment> collect_segments(const Dataset& dataset) {
  std::vector<GroundTruthSegment> out;
  for (const auto& v : dataset.videos)
    out.insert(out.end(), v.segments.begin(), v.segments.end());
  return out;
}

}  // namespace maan
