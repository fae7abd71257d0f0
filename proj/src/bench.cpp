#include "maan/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>

#include "maan/error.hpp"
#include "maan/maa.hpp"
#include "maan/rng.hpp"

namespace maan {

namespace {

constexpr double kMinBatchSeconds = 2e-3;

struct Instance {
  Matrix x;
  std::vector<double> p;
};

Instance random_instance(std::size_t T, std::size_t d, std::uint64_t seed) {
  Rng rng = make_rng(seed, "bench", T);
  Instance in{Matrix(T, d), std::vector<double>(T)};
  for (double& v : in.x.data()) v = uniform(rng, -1.0, 1.0);
  for (double& v : in.p) v = uniform01(rng);
  return in;
}

template <typename Fn>
double median_seconds(int repeats, Fn&& fn) {
  using clock = std::chrono::steady_clock;
  std::vector<double> samples;
  volatile double sink = 0.0;
  for (int r = 0; r < repeats; ++r) {
    long calls = 0;
    const auto start = clock::now();
    double elapsed = 0.0;
    do {
      sink = sink + fn();
      ++calls;
      elapsed = std::chrono::duration<double>(clock::now() - start).count();
    } while (elapsed < kMinBatchSeconds);
    samples.push_back(elapsed / static_cast<double>(calls));
  }
  std::sort(samples.begin(), samples.end());
  const std::size_t n = samples.size();
  return n % 2 ? samples[n / 2] : 0.5 * (samples[n / 2 - 1] + samples[n / 2]);
}

}  // namespace

double time_forward(std::size_t length, std::size_t dim, int repeats, std::uint64_t seed) {
  const auto in = random_instance(length, dim, seed);
  return median_seconds(repeats, [&] { return maa_forward(in.x, in.p).h()[0]; });
}

double time_bruteforce(std::size_t length, std::size_t dim, int repeats, std::uint64_t seed) {
  const auto in = random_instance(length, dim, seed);
  return median_seconds(repeats, [&] { return maa_bruteforce(in.x, in.p)[0]; });
}

double loglog_slope(const std::vector<double>& lengths, const std::vector<double>& seconds) {
  require(lengths.size() == seconds.size() && lengths.size() >= 2,
          "loglog_slope: need at least two points");
  const double n = static_cast<double>(lengths.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < lengths.size(); ++i) {
    const double lx = std::log(lengths[i]);
    const double ly = std::log(seconds[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

BenchReport run_bench(const BenchConfig& config) {
  if (config.t_list.empty()) fail(ErrorCode::Config, "bench: empty T list");
  if (!std::is_sorted(config.t_list.begin(), config.t_list.end()))
    fail(ErrorCode::Config, "bench: T values must be sorted ascending");
  if (config.t_list.front() < 1) fail(ErrorCode::Config, "bench: T values must be >= 1");
  if (config.dim < 1) fail(ErrorCode::Config, "bench: dim must be >= 1");
  if (config.repeats < 1) fail(ErrorCode::Config, "bench: repeats must be >= 1");

  BenchReport report;
  std::vector<double> xs, ys;
  for (std::size_t T : config.t_list) {
    BenchRow row;
    row.length = T;
    row.forward_seconds = time_forward(T, config.dim, config.repeats, config.seed);
    if (T <= 20) row.bruteforce_seconds = time_bruteforce(T, config.dim, config.repeats, config.seed);
    xs.push_back(static_cast<double>(T));
    ys.push_back(row.forward_seconds);
    report.rows.push_back(row);
  }
  if (xs.size() >= 2 && xs.front() < xs.back()) {
    report.slope = loglog_slope(xs, ys);
  } else {
    report.slope = std::nan("");
    report.warnings.push_back("scaling exponent needs at least two distinct T values");
  }
  if (config.repeats == 1)
    report.warnings.push_back("repeats=1: medians are single samples, expect high variance");
  return report;
}

std::string to_text(const BenchReport& report) {
  std::string out = "T        forward_s     bruteforce_s  speedup\n";
  char buf[128];
  for (const auto& r : report.rows) {
    if (r.bruteforce_seconds) {
      std::snprintf(buf, sizeof buf, "%-8zu %-13.4e %-13.4e %.1fx\n", r.length, r.forward_seconds,
                    *r.bruteforce_seconds, *r.bruteforce_seconds / r.forward_seconds);
    } else {
      std::snprintf(buf, sizeof buf, "%-8zu %-13.4e %-13s -\n", r.length, r.forward_seconds, "-");
    }
    out += buf;
  }
  std::snprintf(buf, sizeof buf, "log-log slope of forward time: %.3f\n", report.slope);
  out += buf;
  for (const auto& w : report.warnings) out += "warning: " + w + "\n";
  return out;
}

}  // namespace maan
