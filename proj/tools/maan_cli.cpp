// maan: command-line front end over the C library.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "maan/maan.h"

namespace fs = std::filesystem;

namespace {

// Process exit codes.
enum Exit : int {
  kOk = 0,
  kCheckFailed = 1,
  kConfig = 2,
  kIo = 3,
  kParse = 4,
  kContract = 5,
  kNumeric = 6,  // degenerate input, enumeration limit, precondition
  kDivergence = 7,
  kInternal = 70,
};

struct Failure {
  int code;
};

int exit_code(maan_status s) {
  switch (s) {
    case MAAN_OK: return kOk;
    case MAAN_ERR_CONFIG: return kConfig;
    case MAAN_ERR_IO: return kIo;
    case MAAN_ERR_PARSE: return kParse;
    case MAAN_ERR_CONTRACT: return kContract;
    case MAAN_ERR_DEGENERATE:
    case MAAN_ERR_ENUMERATION_LIMIT:
    case MAAN_ERR_PRECONDITION: return kNumeric;
    case MAAN_ERR_DIVERGENCE: return kDivergence;
    case MAAN_ERR_INTERNAL: return kInternal;
  }
  return kInternal;
}

void check(maan_status s) {
  if (s == MAAN_OK) return;
  std::fprintf(stderr, "maan: %s: %s\n", maan_status_name(s), maan_last_error());
  throw Failure{exit_code(s)};
}

[[noreturn]] void die(int code, const std::string& msg) {
  std::fprintf(stderr, "maan: %s\n", msg.c_str());
  throw Failure{code};
}

template <typename T, void (*Free)(T*)>
struct Deleter {
  void operator()(T* p) const { Free(p); }
};
using ReportPtr = std::unique_ptr<maan_report, Deleter<maan_report, maan_report_free>>;
using DatasetPtr = std::unique_ptr<maan_dataset, Deleter<maan_dataset, maan_dataset_free>>;
using ModelPtr = std::unique_ptr<maan_model, Deleter<maan_model, maan_model_free>>;
using ProposalsPtr = std::unique_ptr<maan_proposals, Deleter<maan_proposals, maan_proposals_free>>;

void make_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) die(kIo, "cannot create directory '" + dir + "': " + ec.message());
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  out.flush();
  if (!out) die(kIo, "cannot write '" + path.string() + "'");
}

maan_aggregator parse_mode(const std::string& name) {
  maan_aggregator mode;
  check(maan_aggregator_parse(name.c_str(), &mode));
  return mode;
}

const char* mode_name(maan_aggregator a) {
  switch (a) {
    case MAAN_AGG_STPN: return "stpn";
    case MAAN_AGG_DROPOUT: return "dropout";
    case MAAN_AGG_NORM: return "norm";
    case MAAN_AGG_SOFTMAXNORM: return "softmaxnorm";
    case MAAN_AGG_MAAN: return "maan";
  }
  return "?";
}

struct Options {
  std::uint64_t seed = 0;
  std::string out;

  // verify
  maan_verify_config verify{};
  // bench
  std::vector<std::size_t> t_list{64, 128, 256, 512};
  std::size_t bench_dim = 8;
  int repeats = 5;
  // gen-data
  maan_synth_config synth{};
  // train
  std::string data;
  std::string aggregator = "maan";
  maan_train_config train{};
  // localize
  std::string model;
  std::vector<double> fractions{0.2};
  double class_reject = 0.1;
  double nms_iou = 0.5;
  // eval
  std::string proposals;
  std::string ground_truth;
  std::vector<double> iou_thresholds{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
};

void echo_config(const CLI::App* sub) {
  std::cout << "# maan " << maan_version() << " " << sub->get_name() << "\n";
  std::cout << "[" << sub->get_name() << "]\n";
  std::cout << sub->config_to_str(true, false);
  std::cout << "# end config\n" << std::flush;
}

int run_verify(Options& o) {
  o.verify.seed = o.seed;
  maan_report* raw = nullptr;
  check(maan_verify(&o.verify, &raw));
  ReportPtr report(raw);
  std::cout << maan_report_text(report.get());
  if (!o.out.empty()) {
    make_dir(o.out);
    write_text(fs::path(o.out) / "verify.txt", maan_report_text(report.get()));
    write_text(fs::path(o.out) / "verify.jsonl", maan_report_records(report.get()));
  }
  return maan_report_passed(report.get()) ? kOk : kCheckFailed;
}

int run_bench(Options& o) {
  maan_report* raw = nullptr;
  check(maan_bench(o.t_list.data(), o.t_list.size(), o.bench_dim, o.repeats, o.seed, &raw));
  ReportPtr report(raw);
  std::cout << maan_report_text(report.get());
  if (!o.out.empty()) {
    make_dir(o.out);
    write_text(fs::path(o.out) / "bench.txt", maan_report_text(report.get()));
    write_text(fs::path(o.out) / "bench.jsonl", maan_report_records(report.get()));
  }
  return kOk;
}

int run_gen_data(Options& o) {
  o.synth.seed = o.seed;
  make_dir(o.out);
  const fs::path dir(o.out);
  for (auto split : {MAAN_SPLIT_TRAIN, MAAN_SPLIT_TEST}) {
    maan_dataset* raw = nullptr;
    check(maan_dataset_generate(&o.synth, split, &raw));
    DatasetPtr ds(raw);
    const std::string name = split == MAAN_SPLIT_TRAIN ? "train" : "test";
    check(maan_dataset_save(ds.get(), (dir / (name + ".json")).string().c_str()));
    check(maan_dataset_save_ground_truth(ds.get(), (dir / (name + "_gt.json")).string().c_str()));
    std::cout << name << ": " << maan_dataset_size(ds.get()) << " videos -> "
              << (dir / (name + ".json")).string() << "\n";
  }
  return kOk;
}

int run_train(Options& o) {
  o.train.aggregator = parse_mode(o.aggregator);
  o.train.seed = o.seed;
  maan_dataset* raw_ds = nullptr;
  check(maan_dataset_load(o.data.c_str(), &raw_ds));
  DatasetPtr ds(raw_ds);
  maan_model* raw_model = nullptr;
  check(maan_train(ds.get(), &o.train, &raw_model));
  ModelPtr model(raw_model);

  make_dir(o.out);
  const fs::path dir(o.out);
  check(maan_model_save(model.get(), (dir / "model.json").string().c_str()));
  std::vector<double> history(maan_model_loss_history(model.get(), nullptr, 0));
  maan_model_loss_history(model.get(), history.data(), history.size());
  std::string lines;
  for (std::size_t e = 0; e < history.size(); ++e)
    lines += nlohmann::json{{"epoch", e + 1}, {"loss", history[e]}}.dump() + "\n";
  write_text(dir / "loss_history.jsonl", lines);
  if (!history.empty())
    std::cout << "epochs: " << history.size() << "  final loss: " << history.back() << "\n";
  std::cout << "checkpoint -> " << (dir / "model.json").string() << "\n";
  return kOk;
}

int run_localize(Options& o, bool aggregator_given) {
  maan_model* raw_model = nullptr;
  check(maan_model_load(o.model.c_str(), &raw_model));
  ModelPtr model(raw_model);
  if (aggregator_given && parse_mode(o.aggregator) != maan_model_aggregator(model.get()))
    die(kContract, std::string("--aggregator ") + o.aggregator + " does not match the checkpoint (" +
                       mode_name(maan_model_aggregator(model.get())) + ")");
  maan_dataset* raw_ds = nullptr;
  check(maan_dataset_load(o.data.c_str(), &raw_ds));
  DatasetPtr ds(raw_ds);

  const maan_localize_options opts{o.fractions.data(), o.fractions.size(), o.class_reject,
                                   o.nms_iou};
  maan_proposals* raw_props = nullptr;
  check(maan_localize(model.get(), ds.get(), &opts, &raw_props));
  ProposalsPtr props(raw_props);
  make_dir(o.out);
  const auto path = (fs::path(o.out) / "proposals.jsonl").string();
  check(maan_proposals_save(props.get(), path.c_str()));
  std::cout << maan_proposals_size(props.get()) << " proposals -> " << path << "\n";
  return kOk;
}

int run_eval(Options& o) {
  maan_proposals* raw_props = nullptr;
  check(maan_proposals_load(o.proposals.c_str(), &raw_props));
  ProposalsPtr props(raw_props);
  maan_report* raw = nullptr;
  check(maan_evaluate(props.get(), o.ground_truth.c_str(), o.iou_thresholds.data(),
                      o.iou_thresholds.size(), &raw));
  ReportPtr report(raw);
  std::cout << maan_report_text(report.get());
  make_dir(o.out);
  write_text(fs::path(o.out) / "eval.txt", maan_report_text(report.get()));
  write_text(fs::path(o.out) / "eval.jsonl", maan_report_records(report.get()));
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  Options o;
  maan_verify_config_default(&o.verify);
  maan_synth_config_default(&o.synth);
  maan_train_config_default(&o.train);

  CLI::App app{"Marginalized average aggregation: operator checks and a synthetic "
               "weakly-supervised localization pipeline"};
  app.set_config("--config", "", "TOML/INI file with flag values");
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", std::string(maan_version()));

  const auto common = [&](CLI::App* sub, bool out_required) {
    sub->add_option("--seed", o.seed, "Root seed for every random stream")->capture_default_str();
    auto* out = sub->add_option("--out", o.out, "Output directory");
    if (out_required) out->required();
  };

  auto* verify = app.add_subcommand("verify", "Randomized property checks of the operator");
  common(verify, false);
  verify->add_option("--trials", o.verify.trials)->capture_default_str()->check(CLI::NonNegativeNumber);
  verify->add_option("--max-t", o.verify.max_t)->capture_default_str()->check(CLI::Range(1, 20));
  verify->add_option("--tolerance", o.verify.tolerance)->capture_default_str();
  verify->add_option("--grad-tolerance", o.verify.grad_tolerance)->capture_default_str();

  auto* bench = app.add_subcommand("bench", "Forward-pass timing and scaling exponent");
  common(bench, false);
  bench->add_option("--t-list", o.t_list, "Sequence lengths, ascending")
      ->delimiter(',')
      ->capture_default_str();
  bench->add_option("--dim", o.bench_dim)->capture_default_str()->check(CLI::PositiveNumber);
  bench->add_option("--repeats", o.repeats)->capture_default_str()->check(CLI::PositiveNumber);

  auto* gen = app.add_subcommand("gen-data", "Write synthetic train/test splits and ground truth");
  common(gen, true);
  gen->add_option("--num-classes", o.synth.num_classes)->capture_default_str();
  gen->add_option("--feature-dim", o.synth.feature_dim)->capture_default_str();
  gen->add_option("--train-per-class", o.synth.train_videos_per_class)->capture_default_str();
  gen->add_option("--test-per-class", o.synth.test_videos_per_class)->capture_default_str();
  gen->add_option("--snippets", o.synth.snippets_per_video)->capture_default_str();
  gen->add_option("--min-segments", o.synth.min_segments)->capture_default_str();
  gen->add_option("--max-segments", o.synth.max_segments)->capture_default_str();
  gen->add_option("--min-segment-length", o.synth.min_segment_length)->capture_default_str();
  gen->add_option("--max-segment-length", o.synth.max_segment_length)->capture_default_str();
  gen->add_option("--noise", o.synth.noise_sigma)->capture_default_str();
  gen->add_option("--separation", o.synth.background_separation)->capture_default_str();
  gen->add_option("--salience-gradient", o.synth.salience_gradient)->capture_default_str();
  gen->add_option("--snippet-duration", o.synth.snippet_duration)->capture_default_str();

  auto* train = app.add_subcommand("train", "Train a model on a dataset file");
  common(train, true);
  train->add_option("--data", o.data, "Training dataset (gen-data train.json)")->required();
  train->add_option("--aggregator", o.aggregator)
      ->capture_default_str()
      ->check(CLI::IsMember({"maan", "stpn", "norm", "softmaxnorm", "dropout"}));
  train->add_option("--lr", o.train.learning_rate)->capture_default_str();
  train->add_option("--beta1", o.train.adam_beta1)->capture_default_str();
  train->add_option("--beta2", o.train.adam_beta2)->capture_default_str();
  train->add_option("--adam-eps", o.train.adam_eps)->capture_default_str();
  train->add_option("--epochs", o.train.epochs)->capture_default_str();
  train->add_option("--batch-size", o.train.batch_size)->capture_default_str();
  train->add_option("--hidden", o.train.hidden)->capture_default_str();
  train->add_option("--leaky-slope", o.train.leaky_slope)->capture_default_str();
  train->add_option("--keep-prob", o.train.keep_prob)->capture_default_str();
  train->add_option("--snippets", o.train.snippets_per_video)->capture_default_str();

  auto* localize = app.add_subcommand("localize", "Emit temporal proposals for a dataset");
  common(localize, true);
  localize->add_option("--model", o.model, "Checkpoint written by train")->required();
  localize->add_option("--data", o.data, "Dataset to localize")->required();
  auto* loc_mode = localize->add_option("--aggregator", o.aggregator, "Must match the checkpoint")
                       ->check(CLI::IsMember({"maan", "stpn", "norm", "softmaxnorm", "dropout"}));
  localize->add_option("--threshold-fractions", o.fractions)->delimiter(',')->capture_default_str();
  localize->add_option("--class-reject", o.class_reject)->capture_default_str();
  localize->add_option("--nms-iou", o.nms_iou)->capture_default_str();

  auto* eval = app.add_subcommand("eval", "AP at IoU thresholds against ground truth");
  common(eval, true);
  eval->add_option("--proposals", o.proposals)->required();
  eval->add_option("--ground-truth", o.ground_truth)->required();
  eval->add_option("--iou", o.iou_thresholds, "IoU thresholds")->delimiter(',')->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfig;
  }

  try {
    for (auto* sub : app.get_subcommands()) echo_config(sub);
    if (verify->parsed()) return run_verify(o);
    if (bench->parsed()) return run_bench(o);
    if (gen->parsed()) return run_gen_data(o);
    if (train->parsed()) return run_train(o);
    if (localize->parsed()) return run_localize(o, loc_mode->count() > 0);
    if (eval->parsed()) return run_eval(o);
  } catch (const Failure& f) {
    return f.code;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "maan: %s\n", e.what());
    return kInternal;
  }
  return kOk;
}
