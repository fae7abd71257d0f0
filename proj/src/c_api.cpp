#include "maan/maan.h"

#include <algorithm>
#include <cstring>
#include <exception>
#include <memory>
#include <new>
#include <string>
#include <vector>

#include <json.hpp>

#include "maan/bench.hpp"
#include "maan/checks.hpp"
#include "maan/dataset.hpp"
#include "maan/error.hpp"
#include "maan/evaluation.hpp"
#include "maan/localization.hpp"
#include "maan/maa.hpp"
#include "maan/maa_grad.hpp"
#include "maan/model.hpp"
#include "maan/synth.hpp"

struct maan_trace {
  maan::AggregationTrace trace;
};

struct maan_report {
  std::string text;
  std::string records;
  bool passed = true;
  std::vector<double> mean_ap;
};

struct maan_dataset {
  maan::Dataset dataset;
};

struct maan_model {
  maan::Model model;
  std::vector<double> loss_history;
};

struct maan_proposals {
  std::vector<maan::TemporalProposal> items;
};

namespace {

thread_local std::string g_last_error;

maan_status to_status(maan::ErrorCode code) {
  using maan::ErrorCode;
  switch (code) {
    case ErrorCode::ContractViolation: return MAAN_ERR_CONTRACT;
    case ErrorCode::DegenerateInput: return MAAN_ERR_DEGENERATE;
    case ErrorCode::EnumerationLimit: return MAAN_ERR_ENUMERATION_LIMIT;
    case ErrorCode::Precondition: return MAAN_ERR_PRECONDITION;
    case ErrorCode::Divergence: return MAAN_ERR_DIVERGENCE;
    case ErrorCode::Io: return MAAN_ERR_IO;
    case ErrorCode::Parse: return MAAN_ERR_PARSE;
    case ErrorCode::Config: return MAAN_ERR_CONFIG;
  }
  return MAAN_ERR_INTERNAL;
}

// Runs fn, converting every exception into a status and the thread-local
// error message. Nothing propagates across the C boundary.
template <typename Fn>
maan_status guarded(Fn&& fn) noexcept {
  try {
    fn();
    return MAAN_OK;
  } catch (const maan::Error& e) {
    g_last_error = e.what();
    return to_status(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return MAAN_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return MAAN_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return MAAN_ERR_INTERNAL;
  }
}

void need(const void* ptr, const char* what) {
  if (ptr == nullptr) maan::fail(maan::ErrorCode::ContractViolation, std::string(what) + " is NULL");
}

maan::Matrix to_matrix(const double* data, std::size_t rows, std::size_t cols) {
  need(data, "features");
  maan::require(rows >= 1 && cols >= 1, "features: T and d must be positive");
  maan::Matrix m(rows, cols);
  std::copy_n(data, rows * cols, m.data().begin());
  return m;
}

std::span<const double> to_span(const double* data, std::size_t n, const char* what) {
  need(data, what);
  return {data, n};
}

maan::AggregatorKind to_kind(maan_aggregator a) {
  switch (a) {
    case MAAN_AGG_STPN: return maan::AggregatorKind::WeightedSum;
    case MAAN_AGG_DROPOUT: return maan::AggregatorKind::Dropout;
    case MAAN_AGG_NORM: return maan::AggregatorKind::Norm;
    case MAAN_AGG_SOFTMAXNORM: return maan::AggregatorKind::SoftMaxNorm;
    case MAAN_AGG_MAAN: return maan::AggregatorKind::MAA;
  }
  maan::fail(maan::ErrorCode::ContractViolation, "unknown aggregator");
}

maan_aggregator from_kind(maan::AggregatorKind k) {
  switch (k) {
    case maan::AggregatorKind::WeightedSum: return MAAN_AGG_STPN;
    case maan::AggregatorKind::Dropout: return MAAN_AGG_DROPOUT;
    case maan::AggregatorKind::Norm: return MAAN_AGG_NORM;
    case maan::AggregatorKind::SoftMaxNorm: return MAAN_AGG_SOFTMAXNORM;
    case maan::AggregatorKind::MAA: return MAAN_AGG_MAAN;
  }
  return MAAN_AGG_MAAN;
}

maan::SynthConfig to_cpp(const maan_synth_config& c) {
  maan::SynthConfig s;
  s.num_classes = c.num_classes;
  s.feature_dim = c.feature_dim;
  s.train_videos_per_class = c.train_videos_per_class;
  s.test_videos_per_class = c.test_videos_per_class;
  s.snippets_per_video = c.snippets_per_video;
  s.min_segments = c.min_segments;
  s.max_segments = c.max_segments;
  s.min_segment_length = c.min_segment_length;
  s.max_segment_length = c.max_segment_length;
  s.noise_sigma = c.noise_sigma;
  s.background_separation = c.background_separation;
  s.salience_gradient = c.salience_gradient;
  s.snippet_duration = c.snippet_duration;
  s.seed = c.seed;
  return s;
}

maan::TrainConfig to_cpp(const maan_train_config& c) {
  maan::TrainConfig t;
  t.mode = to_kind(c.aggregator);
  t.learning_rate = c.learning_rate;
  t.adam_beta1 = c.adam_beta1;
  t.adam_beta2 = c.adam_beta2;
  t.adam_eps = c.adam_eps;
  t.epochs = c.epochs;
  t.batch_size = c.batch_size;
  t.hidden = c.hidden;
  t.leaky_slope = c.leaky_slope;
  t.keep_prob = c.keep_prob;
  t.snippets_per_video = c.snippets_per_video;
  t.seed = c.seed;
  return t;
}

const double kDefaultFractions[] = {0.2};

}  // namespace

extern "C" {

const char* maan_version(void) { return "0.1.0"; }

const char* maan_last_error(void) { return g_last_error.c_str(); }

const char* maan_status_name(maan_status status) {
  switch (status) {
    case MAAN_OK: return "ok";
    case MAAN_ERR_CONTRACT: return "contract violation";
    case MAAN_ERR_DEGENERATE: return "degenerate input";
    case MAAN_ERR_ENUMERATION_LIMIT: return "enumeration limit";
    case MAAN_ERR_PRECONDITION: return "precondition";
    case MAAN_ERR_DIVERGENCE: return "divergence";
    case MAAN_ERR_IO: return "i/o error";
    case MAAN_ERR_PARSE: return "parse error";
    case MAAN_ERR_CONFIG: return "config error";
    case MAAN_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

maan_status maan_aggregator_parse(const char* name, maan_aggregator* out) {
  return guarded([&] {
    need(name, "name");
    need(out, "out");
    const auto kind = maan::parse_aggregator(name);
    if (!kind)
      maan::fail(maan::ErrorCode::Config, std::string("unknown aggregator '") + name + "'");
    *out = from_kind(*kind);
  });
}

maan_status maan_aggregate_bruteforce(const double* features, size_t T, size_t d,
                                      const double* probs, double* out_h) {
  return guarded([&] {
    need(out_h, "out_h");
    const auto h = maan::maa_bruteforce(to_matrix(features, T, d), to_span(probs, T, "probs"));
    std::copy(h.begin(), h.end(), out_h);
  });
}

maan_status maan_forward(const double* features, size_t T, size_t d, const double* probs,
                         int renormalize, maan_trace** out) {
  return guarded([&] {
    need(out, "out");
    *out = nullptr;
    need(probs, "probs");
    maan::MaaOptions opts;
    opts.renormalize = renormalize != 0;
    *out = new maan_trace{maan::AggregationTrace(to_matrix(features, T, d),
                                                 std::vector<double>(probs, probs + T), opts)};
  });
}

void maan_trace_free(maan_trace* trace) { delete trace; }

size_t maan_trace_length(const maan_trace* trace) { return trace ? trace->trace.length() : 0; }

size_t maan_trace_dim(const maan_trace* trace) { return trace ? trace->trace.dim() : 0; }

maan_status maan_trace_aggregate(const maan_trace* trace, double* out_h) {
  return guarded([&] {
    need(trace, "trace");
    need(out_h, "out_h");
    std::copy(trace->trace.h().begin(), trace->trace.h().end(), out_h);
  });
}

maan_status maan_trace_q_table(const maan_trace* trace, double* out_q) {
  return guarded([&] {
    need(trace, "trace");
    need(out_q, "out_q");
    const auto q = trace->trace.q_table().data();
    std::copy(q.begin(), q.end(), out_q);
  });
}

maan_status maan_trace_backward(const maan_trace* trace, const double* upstream,
                                double* grad_features, double* grad_probs) {
  return guarded([&] {
    need(trace, "trace");
    need(grad_features, "grad_features");
    need(grad_probs, "grad_probs");
    const auto g = maan::maa_backward(trace->trace, to_span(upstream, trace->trace.dim(), "upstream"));
    std::copy(g.grad_features.data().begin(), g.grad_features.data().end(), grad_features);
    std::copy(g.grad_probs.begin(), g.grad_probs.end(), grad_probs);
  });
}

maan_status maan_subset_size_pmf(const double* probs, size_t T, double* out_mass) {
  return guarded([&] {
    need(out_mass, "out_mass");
    const auto q = maan::subset_size_pmf(to_span(probs, T, "probs"));
    std::copy(q.begin(), q.end(), out_mass);
  });
}

maan_status maan_context_coefficients(const double* probs, size_t T, double* out_c,
                                      double* out_lambda, double* out_total) {
  return guarded([&] {
    need(out_c, "out_c");
    need(out_lambda, "out_lambda");
    const auto w = maan::context_coefficients(to_span(probs, T, "probs"));
    std::copy(w.c.begin(), w.c.end(), out_c);
    std::copy(w.lambda.begin(), w.lambda.end(), out_lambda);
    if (out_total) *out_total = w.total;
  });
}

maan_status maan_salient_index_set(const double* probs, size_t T, size_t* out_indices,
                                   size_t* out_count) {
  return guarded([&] {
    need(out_indices, "out_indices");
    need(out_count, "out_count");
    const auto p = to_span(probs, T, "probs");
    const auto set = maan::salient_index_set(maan::context_coefficients(p), p);
    std::copy(set.begin(), set.end(), out_indices);
    *out_count = set.size();
  });
}

maan_status maan_finite_diff_check(const double* features, size_t T, size_t d,
                                   const double* probs, const double* upstream, double step,
                                   double* out_max_rel_error) {
  return guarded([&] {
    need(out_max_rel_error, "out_max_rel_error");
    *out_max_rel_error = maan::finite_diff_check(to_matrix(features, T, d),
                                                 to_span(probs, T, "probs"),
                                                 to_span(upstream, d, "upstream"), step);
  });
}

void maan_report_free(maan_report* report) { delete report; }

const char* maan_report_text(const maan_report* report) {
  return report ? report->text.c_str() : "";
}

const char* maan_report_records(const maan_report* report) {
  return report ? report->records.c_str() : "";
}

int maan_report_passed(const maan_report* report) { return report && report->passed ? 1 : 0; }

void maan_verify_config_default(maan_verify_config* config) {
  if (!config) return;
  const maan::VerifyConfig d;
  *config = {d.trials, d.max_t, d.tolerance, d.grad_tolerance, d.seed};
}

maan_status maan_verify(const maan_verify_config* config, maan_report** out) {
  return guarded([&] {
    need(config, "config");
    need(out, "out");
    *out = nullptr;
    maan::VerifyConfig c{config->trials, config->max_t, config->tolerance, config->grad_tolerance,
                         config->seed};
    const auto r = maan::run_verify(c);
    auto report = std::make_unique<maan_report>();
    report->text = maan::to_text(r);
    report->passed = r.passed;
    for (const auto& check : r.checks) {
      nlohmann::json rec = {{"check", check.name},
                            {"worst", check.worst},
                            {"tolerance", check.tolerance},
                            {"passed", check.passed}};
      report->records += rec.dump() + "\n";
    }
    *out = report.release();
  });
}

maan_status maan_bench(const size_t* t_list, size_t n, size_t dim, int repeats, uint64_t seed,
                       maan_report** out) {
  return guarded([&] {
    need(t_list, "t_list");
    need(out, "out");
    *out = nullptr;
    maan::BenchConfig c;
    c.t_list.assign(t_list, t_list + n);
    c.dim = dim;
    c.repeats = repeats;
    c.seed = seed;
    const auto r = maan::run_bench(c);
    auto report = std::make_unique<maan_report>();
    report->text = maan::to_text(r);
    for (const auto& row : r.rows) {
      nlohmann::json rec = {{"T", row.length}, {"forward_s", row.forward_seconds}};
      if (row.bruteforce_seconds) rec["bruteforce_s"] = *row.bruteforce_seconds;
      report->records += rec.dump() + "\n";
    }
    nlohmann::json slope = {{"slope", r.slope}};
    report->records += slope.dump() + "\n";
    *out = report.release();
  });
}

void maan_synth_config_default(maan_synth_config* config) {
  if (!config) return;
  const maan::SynthConfig d;
  *config = {d.num_classes,        d.feature_dim,        d.train_videos_per_class,
             d.test_videos_per_class, d.snippets_per_video, d.min_segments,
             d.max_segments,       d.min_segment_length, d.max_segment_length,
             d.noise_sigma,        d.background_separation, d.salience_gradient,
             d.snippet_duration,   d.seed};
}

maan_status maan_dataset_generate(const maan_synth_config* config, maan_split split,
                                  maan_dataset** out) {
  return guarded([&] {
    need(config, "config");
    need(out, "out");
    *out = nullptr;
    const auto s = split == MAAN_SPLIT_TEST ? maan::Split::Test : maan::Split::Train;
    *out = new maan_dataset{maan::generate_dataset(to_cpp(*config), s)};
  });
}

maan_status maan_dataset_load(const char* path, maan_dataset** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = nullptr;
    *out = new maan_dataset{maan::load_dataset(path)};
  });
}

maan_status maan_dataset_save(const maan_dataset* dataset, const char* path) {
  return guarded([&] {
    need(dataset, "dataset");
    need(path, "path");
    maan::save_dataset(dataset->dataset, path);
  });
}

maan_status maan_dataset_save_ground_truth(const maan_dataset* dataset, const char* path) {
  return guarded([&] {
    need(dataset, "dataset");
    need(path, "path");
    maan::save_ground_truth(maan::collect_segments(dataset->dataset), path);
  });
}

size_t maan_dataset_size(const maan_dataset* dataset) {
  return dataset ? dataset->dataset.videos.size() : 0;
}

void maan_dataset_free(maan_dataset* dataset) { delete dataset; }

void maan_train_config_default(maan_train_config* config) {
  if (!config) return;
  const maan::TrainConfig d;
  *config = {from_kind(d.mode), d.learning_rate, d.adam_beta1, d.adam_beta2,
             d.adam_eps,        d.epochs,        d.batch_size, d.hidden,
             d.leaky_slope,     d.keep_prob,     d.snippets_per_video, d.seed};
}

maan_status maan_train(const maan_dataset* dataset, const maan_train_config* config,
                       maan_model** out) {
  return guarded([&] {
    need(dataset, "dataset");
    need(config, "config");
    need(out, "out");
    *out = nullptr;
    auto result = maan::train(dataset->dataset, to_cpp(*config));
    *out = new maan_model{std::move(result.model), std::move(result.loss_history)};
  });
}

maan_status maan_model_load(const char* path, maan_model** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = nullptr;
    *out = new maan_model{maan::load_model(path), {}};
  });
}

maan_status maan_model_save(const maan_model* model, const char* path) {
  return guarded([&] {
    need(model, "model");
    need(path, "path");
    maan::save_model(model->model, path);
  });
}

void maan_model_free(maan_model* model) { delete model; }

maan_aggregator maan_model_aggregator(const maan_model* model) {
  return model ? from_kind(model->model.mode) : MAAN_AGG_MAAN;
}

size_t maan_model_loss_history(const maan_model* model, double* out, size_t capacity) {
  if (!model) return 0;
  const auto& h = model->loss_history;
  if (out) std::copy_n(h.begin(), std::min(capacity, h.size()), out);
  return h.size();
}

maan_status maan_model_video_probabilities(const maan_model* model, const double* features,
                                           size_t T, size_t d, double* out_probs) {
  return guarded([&] {
    need(model, "model");
    need(out_probs, "out_probs");
    const auto p = maan::video_probabilities(model->model, to_matrix(features, T, d));
    std::copy(p.begin(), p.end(), out_probs);
  });
}

void maan_localize_options_default(maan_localize_options* options) {
  if (!options) return;
  const maan::LocalizeOptions d;
  *options = {kDefaultFractions, 1, d.class_reject, d.nms_iou};
}

maan_status maan_localize(const maan_model* model, const maan_dataset* dataset,
                          const maan_localize_options* options, maan_proposals** out) {
  return guarded([&] {
    need(model, "model");
    need(dataset, "dataset");
    need(options, "options");
    need(out, "out");
    *out = nullptr;
    maan::LocalizeOptions opts;
    opts.threshold_fractions.assign(options->threshold_fractions,
                                    options->threshold_fractions + options->num_threshold_fractions);
    opts.class_reject = options->class_reject;
    opts.nms_iou = options->nms_iou;
    const auto& ds = dataset->dataset;
    maan::require(static_cast<std::size_t>(ds.feature_dim) == model->model.feature_dim() &&
                      static_cast<std::size_t>(ds.num_classes) == model->model.num_classes(),
                  "localize: dataset dimensions do not match the model");
    auto props = std::make_unique<maan_proposals>();
    for (const auto& v : ds.videos) {
      auto found = maan::localize(model->model, v.features, v.snippet_duration, v.video_id, opts);
      props->items.insert(props->items.end(), found.begin(), found.end());
    }
    *out = props.release();
  });
}

maan_status maan_proposals_load(const char* path, maan_proposals** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = nullptr;
    *out = new maan_proposals{maan::load_proposals(path)};
  });
}

maan_status maan_proposals_save(const maan_proposals* proposals, const char* path) {
  return guarded([&] {
    need(proposals, "proposals");
    need(path, "path");
    maan::save_proposals(proposals->items, path);
  });
}

size_t maan_proposals_size(const maan_proposals* proposals) {
  return proposals ? proposals->items.size() : 0;
}

maan_status maan_proposals_get(const maan_proposals* proposals, size_t index, maan_proposal* out) {
  return guarded([&] {
    need(proposals, "proposals");
    need(out, "out");
    maan::require(index < proposals->items.size(), "proposals: index out of range");
    const auto& p = proposals->items[index];
    *out = {p.video_id.c_str(), p.class_id, p.start_s, p.end_s, p.confidence};
  });
}

void maan_proposals_free(maan_proposals* proposals) { delete proposals; }

maan_status maan_evaluate(const maan_proposals* proposals, const char* ground_truth_path,
                          const double* iou_thresholds, size_t n, maan_report** out) {
  return guarded([&] {
    need(proposals, "proposals");
    need(ground_truth_path, "ground_truth_path");
    need(out, "out");
    *out = nullptr;
    std::vector<double> grid = iou_thresholds ? std::vector<double>(iou_thresholds, iou_thresholds + n)
                                              : maan::thumos_iou_grid();
    maan::require(!grid.empty(), "evaluate: need at least one IoU threshold");
    for (double t : grid) maan::require(t > 0.0 && t <= 1.0, "evaluate: IoU threshold outside (0,1]");
    const auto gt = maan::load_ground_truth(ground_truth_path);
    if (gt.empty())
      maan::fail(maan::ErrorCode::DegenerateInput, "evaluate: ground truth file has no segments");
    const auto r = maan::evaluate(proposals->items, gt, grid);
    auto report = std::make_unique<maan_report>();
    report->text = maan::report_text(r);
    report->records = maan::report_jsonl(r);
    report->mean_ap = r.mean_ap;
    *out = report.release();
  });
}

maan_status maan_report_map(const maan_report* report, size_t index, double* out) {
  return guarded([&] {
    need(report, "report");
    need(out, "out");
    maan::require(index < report->mean_ap.size(), "report: threshold index out of range");
    *out = report->mean_ap[index];
  });
}

}  // extern "C"
