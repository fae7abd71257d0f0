#include "maan/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "json_io.hpp"
#include "maan/error.hpp"
#include "maan/maa.hpp"

namespace maan {

namespace {

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// Hidden pre-activations per snippet, kept for the backward pass.
struct AttentionCache {
  Matrix pre;  // T x hidden
  std::vector<double> probs;
};

AttentionCache attention_forward(const Matrix& features, const AttentionParams& a) {
  require(features.cols() == a.input_dim(), "attention: feature dimension " +
                                                std::to_string(features.cols()) +
                                                " does not match parameters (" +
                                                std::to_string(a.input_dim()) + ")");
  const std::size_t T = features.rows();
  const std::size_t H = a.hidden();
  AttentionCache cache{Matrix(T, H), std::vector<double>(T)};
  for (std::size_t t = 0; t < T; ++t) {
    const auto x = features.row(t);
    double z = a.b2;
    for (std::size_t j = 0; j < H; ++j) {
      const double pre = dot(a.w1.row(j), x) + a.b1[j];
      cache.pre(t, j) = pre;
      z += a.w2[j] * (pre > 0.0 ? pre : a.leaky_slope * pre);
    }
    cache.probs[t] = sigmoid(z);
  }
  return cache;
}

std::size_t param_count(const Model& m) {
  const std::size_t H = m.attention.hidden();
  return H * m.attention.input_dim() + 2 * H + 1 + m.classifier.w.rows() * m.classifier.w.cols();
}

}  // namespace

void validate(const TrainConfig& c) {
  const auto bad = [](const std::string& what) { fail(ErrorCode::Config, "train: " + what); };
  if (!(c.learning_rate > 0.0)) bad("learning_rate must be positive");
  if (!(c.adam_beta1 > 0.0 && c.adam_beta1 < 1.0)) bad("adam_beta1 must lie in (0,1)");
  if (!(c.adam_beta2 > 0.0 && c.adam_beta2 < 1.0)) bad("adam_beta2 must lie in (0,1)");
  if (!(c.adam_eps > 0.0)) bad("adam_eps must be positive");
  if (c.epochs < 0) bad("epochs must be >= 0");
  if (c.batch_size < 1) bad("batch_size must be >= 1");
  if (c.hidden < 1) bad("hidden must be >= 1");
  if (c.snippets_per_video < 1) bad("snippets_per_video must be >= 1");
  if (!(c.keep_prob > 0.0 && c.keep_prob <= 1.0)) bad("keep_prob must lie in (0,1]");
}

std::vector<double> attention_scores(const Matrix& features, const AttentionParams& params) {
  return attention_forward(features, params).probs;
}

std::vector<double> classify(std::span<const double> aggregate, const ClassifierParams& params) {
  require(aggregate.size() == params.w.cols(), "classify: aggregate dimension mismatch");
  std::vector<double> out(params.w.rows());
  for (std::size_t c = 0; c < out.size(); ++c) out[c] = sigmoid(dot(params.w.row(c), aggregate));
  return out;
}

double loss(std::span<const double> predictions, std::span<const int> labels) {
  require(predictions.size() == labels.size(), "loss: prediction/label length mismatch");
  constexpr double kClamp = 1e-12;
  double total = 0.0;
  for (std::size_t c = 0; c < labels.size(); ++c) {
    require(labels[c] == 0 || labels[c] == 1, "loss: label not in {0,1}");
    const double p = std::clamp(predictions[c], kClamp, 1.0 - kClamp);
    total -= labels[c] == 1 ? std::log(p) : std::log(1.0 - p);
  }
  return total;
}

Model init_model(AggregatorKind mode, std::size_t feature_dim, std::size_t num_classes,
                 std::size_t hidden, double leaky_slope, int snippets_per_video,
                 std::uint64_t seed) {
  require(feature_dim >= 1 && num_classes >= 1 && hidden >= 1, "init_model: empty dimension");
  Rng rng = make_rng(seed, "model.init");
  const auto fill = [&](std::span<double> v, std::size_t fan_in, std::size_t fan_out) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (double& x : v) x = uniform(rng, -limit, limit);
  };
  Model m;
  m.mode = mode;
  m.snippets_per_video = snippets_per_video;
  m.attention.leaky_slope = leaky_slope;
  m.attention.w1 = Matrix(hidden, feature_dim);
  fill(m.attention.w1.data(), feature_dim, hidden);
  m.attention.b1.assign(hidden, 0.0);
  m.attention.w2.assign(hidden, 0.0);
  fill(m.attention.w2, hidden, 1);
  m.attention.b2 = 0.0;
  m.classifier.w = Matrix(num_classes, feature_dim);
  fill(m.classifier.w.data(), feature_dim, num_classes);
  return m;
}

std::vector<double> pack(const Model& m) {
  std::vector<double> flat;
  flat.reserve(param_count(m));
  const auto put = [&](std::span<const double> v) { flat.insert(flat.end(), v.begin(), v.end()); };
  put(m.attention.w1.data());
  put(m.attention.b1);
  put(m.attention.w2);
  flat.push_back(m.attention.b2);
  put(m.classifier.w.data());
  return flat;
}

void unpack(std::span<const double> flat, Model& m) {
  require(flat.size() == param_count(m), "unpack: parameter count mismatch");
  std::size_t at = 0;
  const auto take = [&](std::span<double> v) {
    std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(at), v.size(), v.begin());
    at += v.size();
  };
  take(m.attention.w1.data());
  take(m.attention.b1);
  take(m.attention.w2);
  m.attention.b2 = flat[at++];
  take(m.classifier.w.data());
}

LossAndGrad video_loss_and_grad(const Model& model, const Matrix& features,
                                std::span<const int> labels,
                                std::span<const double> dropout_mask) {
  const auto& att = model.attention;
  const auto& cls = model.classifier;
  require(labels.size() == cls.w.rows(), "video_loss_and_grad: label count mismatch");
  const std::size_t T = features.rows();
  const std::size_t d = features.cols();
  const std::size_t H = att.hidden();
  const std::size_t C = cls.w.rows();

  const auto cache = attention_forward(features, att);
  const auto& probs = cache.probs;
  const auto agg = aggregate(model.mode, features, probs, dropout_mask);
  const auto pred = classify(agg, cls);

  LossAndGrad out;
  out.loss = loss(pred, labels);
  out.grad.assign(param_count(model), 0.0);

  // Offsets into the packed gradient.
  const std::size_t o_w1 = 0;
  const std::size_t o_b1 = o_w1 + H * d;
  const std::size_t o_w2 = o_b1 + H;
  const std::size_t o_b2 = o_w2 + H;
  const std::size_t o_cls = o_b2 + 1;
  auto& g = out.grad;

  std::vector<double> d_agg(d, 0.0);
  for (std::size_t c = 0; c < C; ++c) {
    const double dlogit = pred[c] - labels[c];
    axpy(dlogit, agg, std::span<double>(g.data() + o_cls + c * d, d));
    axpy(dlogit, cls.w.row(c), d_agg);
  }

  const auto d_weights =
      aggregate_backward(model.mode, features, probs, agg, d_agg, dropout_mask).grad_weights;

  for (std::size_t t = 0; t < T; ++t) {
    const double dz = d_weights[t] * probs[t] * (1.0 - probs[t]);
    if (dz == 0.0) continue;
    g[o_b2] += dz;
    const auto x = features.row(t);
    for (std::size_t j = 0; j < H; ++j) {
      const double pre = cache.pre(t, j);
      const double act = pre > 0.0 ? pre : att.leaky_slope * pre;
      g[o_w2 + j] += dz * act;
      const double dpre = dz * att.w2[j] * (pre > 0.0 ? 1.0 : att.leaky_slope);
      g[o_b1 + j] += dpre;
      axpy(dpre, x, std::span<double>(g.data() + o_w1 + j * d, d));
    }
  }
  return out;
}

std::vector<double> inference_aggregate(const Model& model, const Matrix& features) {
  const auto probs = attention_scores(features, model.attention);
  const auto kind = model.mode == AggregatorKind::Dropout ? AggregatorKind::WeightedSum : model.mode;
  return aggregate(kind, features, probs);
}

std::vector<std::size_t> sample_snippets(std::size_t video_length, std::size_t count, Rng& rng) {
  require(count >= 1 && video_length >= count,
          "sample_snippets: video has " + std::to_string(video_length) +
              " snippets, fewer than the " + std::to_string(count) + " requested");
  std::vector<std::size_t> out(count);
  for (std::size_t s = 0; s < count; ++s) {
    const std::size_t lo = s * video_length / count;
    const std::size_t hi = (s + 1) * video_length / count;  // exclusive, hi > lo
    out[s] = lo + static_cast<std::size_t>(uniform01(rng) * static_cast<double>(hi - lo));
  }
  return out;
}

std::vector<std::size_t> centre_snippets(std::size_t video_length, std::size_t count) {
  count = std::min(count, video_length);
  std::vector<std::size_t> out(count);
  for (std::size_t s = 0; s < count; ++s) {
    const std::size_t lo = s * video_length / count;
    const std::size_t hi = (s + 1) * video_length / count;
    out[s] = lo + (hi - lo - 1) / 2;
  }
  return out;
}

Matrix gather_rows(const Matrix& m, std::span<const std::size_t> rows) {
  Matrix out(rows.size(), m.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto src = m.row(rows[r]);
    std::copy(src.begin(), src.end(), out.row(r).begin());
  }
  return out;
}

TrainResult train(const Dataset& dataset, const TrainConfig& config) {
  validate(config);
  require(!dataset.videos.empty(), "train: dataset is empty");
  const auto T = static_cast<std::size_t>(config.snippets_per_video);
  for (const auto& v : dataset.videos) {
    require(v.features.rows() >= T, "train: video " + v.video_id + " has fewer than " +
                                        std::to_string(T) + " snippets");
    require(v.features.cols() == static_cast<std::size_t>(dataset.feature_dim),
            "train: video " + v.video_id + " has the wrong feature dimension");
  }

  TrainResult result;
  result.model = init_model(config.mode, static_cast<std::size_t>(dataset.feature_dim),
                            static_cast<std::size_t>(dataset.num_classes),
                            static_cast<std::size_t>(config.hidden), config.leaky_slope,
                            config.snippets_per_video, config.seed);
  Model& model = result.model;

  auto params = pack(model);
  std::vector<double> m1(params.size(), 0.0), m2(params.size(), 0.0), grad(params.size());
  std::vector<std::size_t> order(dataset.videos.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng shuffle_rng = make_rng(config.seed, "train.shuffle");
  Rng sample_rng = make_rng(config.seed, "train.sample");
  const auto batch = static_cast<std::size_t>(config.batch_size);
  double beta1_pow = 1.0, beta2_pow = 1.0;
  std::uint64_t draw = 0;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const auto diverged = [&](const std::string& what) {
      fail(ErrorCode::Divergence,
           "train: " + what + " became non-finite in epoch " + std::to_string(epoch + 1));
    };
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += batch) {
      std::fill(grad.begin(), grad.end(), 0.0);
      const std::size_t stop = std::min(order.size(), start + batch);
      for (std::size_t k = start; k < stop; ++k) {
        const Video& video = dataset.videos[order[k]];
        const auto rows = sample_snippets(video.features.rows(), T, sample_rng);
        const Matrix x = gather_rows(video.features, rows);
        std::vector<double> mask;
        if (config.mode == AggregatorKind::Dropout)
          mask = dropout_mask(T, config.keep_prob, derive_seed(config.seed, "train.dropout", draw));
        ++draw;
        const auto lg = video_loss_and_grad(model, x, video.labels, mask);
        if (!std::isfinite(lg.loss)) diverged("the loss");
        epoch_loss += lg.loss;
        axpy(1.0, lg.grad, grad);
      }

      beta1_pow *= config.adam_beta1;
      beta2_pow *= config.adam_beta2;
      for (std::size_t i = 0; i < params.size(); ++i) {
        m1[i] = config.adam_beta1 * m1[i] + (1.0 - config.adam_beta1) * grad[i];
        m2[i] = config.adam_beta2 * m2[i] + (1.0 - config.adam_beta2) * grad[i] * grad[i];
        const double m_hat = m1[i] / (1.0 - beta1_pow);
        const double v_hat = m2[i] / (1.0 - beta2_pow);
        params[i] -= config.learning_rate * m_hat / (std::sqrt(v_hat) + config.adam_eps);
        if (!std::isfinite(params[i])) diverged("a parameter");
      }
      unpack(params, model);
    }
    const double mean_loss = epoch_loss / static_cast<double>(order.size());
    if (!std::isfinite(mean_loss)) diverged("the loss");
    result.loss_history.push_back(mean_loss);
  }
  return result;
}

std::vector<double> video_probabilities(const Model& model, const Matrix& features) {
  const auto rows = centre_snippets(features.rows(),
                                    static_cast<std::size_t>(model.snippets_per_video));
  return classify(inference_aggregate(model, gather_rows(features, rows)), model.classifier);
}

std::string model_to_json(const Model& m) {
  const auto vec = [](std::span<const double> v) { return std::vector<double>(v.begin(), v.end()); };
  nlohmann::json doc = {
      {"format", "maan-model"},
      {"version", 1},
      {"mode", std::string(to_string(m.mode))},
      {"feature_dim", m.feature_dim()},
      {"num_classes", m.num_classes()},
      {"hidden", m.attention.hidden()},
      {"snippets_per_video", m.snippets_per_video},
      {"leaky_slope", m.attention.leaky_slope},
      {"attention",
       {{"w1", vec(m.attention.w1.data())},
        {"b1", m.attention.b1},
        {"w2", m.attention.w2},
        {"b2", m.attention.b2}}},
      {"classifier", {{"w", vec(m.classifier.w.data())}}},
  };
  return doc.dump(1) + "\n";
}

Model model_from_json(const std::string& text, const std::string& origin) {
  const auto doc = io::parse_document(text, origin);
  if (!doc.is_object() || doc.value("format", "") != "maan-model")
    fail(ErrorCode::Parse, origin + ": expected a 'maan-model' document");
  return io::decode(origin, "model", [&] {
    const auto mode = parse_aggregator(doc.at("mode").get<std::string>());
    if (!mode) fail(ErrorCode::Parse, origin + ": unknown aggregator mode");
    const auto d = doc.at("feature_dim").get<std::size_t>();
    const auto C = doc.at("num_classes").get<std::size_t>();
    const auto H = doc.at("hidden").get<std::size_t>();
    if (d == 0 || C == 0 || H == 0) fail(ErrorCode::Parse, origin + ": zero dimension");
    Model m;
    m.mode = *mode;
    m.snippets_per_video = doc.at("snippets_per_video").get<int>();
    m.attention.leaky_slope = doc.at("leaky_slope").get<double>();
    const auto& a = doc.at("attention");
    const auto load = [&](const nlohmann::json& src, std::span<double> dst, const char* name) {
      const auto v = src.get<std::vector<double>>();
      if (v.size() != dst.size())
        fail(ErrorCode::Parse, origin + ": '" + name + "' has " + std::to_string(v.size()) +
                                   " values, expected " + std::to_string(dst.size()));
      std::copy(v.begin(), v.end(), dst.begin());
    };
    m.attention.w1 = Matrix(H, d);
    load(a.at("w1"), m.attention.w1.data(), "w1");
    m.attention.b1.resize(H);
    load(a.at("b1"), m.attention.b1, "b1");
    m.attention.w2.resize(H);
    load(a.at("w2"), m.attention.w2, "w2");
    m.attention.b2 = a.at("b2").get<double>();
    m.classifier.w = Matrix(C, d);
    load(doc.at("classifier").at("w"), m.classifier.w.data(), "classifier.w");
    return m;
  });
}

void save_model(const Model& model, const std::string& path) {
  io::write_file(path, model_to_json(model));
}

Model load_model(const std::string& path) {
  return model_from_json(io::read_file(path), path);
}

}  // namespace maan
