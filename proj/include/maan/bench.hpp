#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace maan {

struct BenchConfig {
  std::vector<std::size_t> t_list{64, 128, 256, 512};
  std::size_t dim = 8;
  int repeats = 5;
  std::uint64_t seed = 0;
};

struct BenchRow {
  std::size_t length = 0;
  double forward_seconds = 0.0;                // median
  std::optional<double> bruteforce_seconds;    // median, only for T <= 20
};

struct BenchReport {
  std::vector<BenchRow> rows;
  double slope = 0.0;  // least-squares slope of log(time) against log(T)
  std::vector<std::string> warnings;
};

/// Median wall time of one call, measured by repeating the call until at
/// least 2 ms elapse and dividing, over `repeats` samples.
double time_forward(std::size_t length, std::size_t dim, int repeats, std::uint64_t seed);
double time_bruteforce(std::size_t length, std::size_t dim, int repeats, std::uint64_t seed);

double loglog_slope(const std::vector<double>& lengths, const std::vector<double>& seconds);

/// Throws Config when t_list is empty or unsorted, or repeats < 1.
BenchReport run_bench(const BenchConfig& config);
std::string to_text(const BenchReport& report);

}  // namespace maan
