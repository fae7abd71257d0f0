#include "maan/checks.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "maan/error.hpp"
#include "maan/maa.hpp"
#include "maan/maa_grad.hpp"
#include "maan/rng.hpp"

namespace maan {

namespace {

std::vector<std::size_t> descending_order(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] > v[b]; });
  return idx;
}

// Strict bound, so a zero tolerance always fails.
bool within(double worst, double tolerance) { return worst < tolerance; }

}  // namespace

VerifyReport run_verify(const VerifyConfig& config) {
  if (config.trials < 0) fail(ErrorCode::Config, "verify: trials must be >= 0");
  if (config.max_t < 1 || config.max_t > 20)
    fail(ErrorCode::Config, "verify: max_t must lie in [1, 20]");

  double oracle = 0.0, pmf_rows = 0.0, factor = 0.0, probe = 0.0, coef_sum = 0.0;
  double order_violations = 0.0, suppression = 0.0, empty_salient = 0.0, grad = 0.0;

  Rng rng = make_rng(config.seed, "verify");
  std::uniform_int_distribution<int> pick_t(1, config.max_t);
  std::uniform_int_distribution<int> pick_d(1, 5);
  for (int trial = 0; trial < config.trials; ++trial) {
    const auto T = static_cast<std::size_t>(pick_t(rng));
    const auto d = static_cast<std::size_t>(pick_d(rng));
    std::vector<double> p(T);
    for (double& v : p) v = uniform01(rng);
    Matrix x(T, d);
    for (double& v : x.data()) v = uniform(rng, -2.0, 2.0);

    const auto trace = maa_forward(x, p);
    const auto brute = maa_bruteforce(x, p);
    for (std::size_t k = 0; k < d; ++k) oracle = std::max(oracle, std::abs(trace.h()[k] - brute[k]));

    for (std::size_t t = 0; t <= T; ++t) {
      double s = 0.0;
      for (std::size_t i = 0; i <= t; ++i) s += trace.q_table()(t, i);
      pmf_rows = std::max(pmf_rows, std::abs(s - 1.0));
    }

    const auto w = context_coefficients(p);
    std::vector<double> combo(d, 0.0);
    for (std::size_t t = 0; t < T; ++t) axpy(w.lambda[t], x.row(t), combo);
    for (std::size_t k = 0; k < d; ++k) factor = std::max(factor, std::abs(trace.h()[k] - combo[k]));
    const auto probed = effective_weights_probe(p);
    for (std::size_t t = 0; t < T; ++t) probe = std::max(probe, std::abs(probed[t] - w.lambda[t]));

    double none = 1.0;
    for (double v : p) none *= 1.0 - v;
    coef_sum = std::max(coef_sum, std::abs(w.total - (1.0 - none)));

    const auto by_p = descending_order(p);
    if (by_p != descending_order(w.lambda) || by_p != descending_order(w.c)) order_violations += 1.0;

    const double mass = std::accumulate(p.begin(), p.end(), 0.0);
    if (mass > 0.0) {
      const auto salient = salient_index_set(w, p);
      if (salient.empty()) empty_salient += 1.0;
      for (std::size_t i : salient)
        for (std::size_t j = 0; j < T; ++j) {
          const double dp = std::abs(p[i] / mass - p[j] / mass);
          const double dl = std::abs(w.lambda[i] / w.total - w.lambda[j] / w.total);
          suppression = std::max(suppression, dp - dl);
        }
    }

    // Gradient check on a smaller interior instance.
    const std::size_t gT = std::min<std::size_t>(T, 10);
    const std::size_t gd = std::min<std::size_t>(d, 4);
    Matrix gx(gT, gd);
    for (double& v : gx.data()) v = uniform(rng, -2.0, 2.0);
    std::vector<double> gp(gT), up(gd);
    for (double& v : gp) v = uniform(rng, 0.05, 0.95);
    for (double& v : up) v = uniform(rng, -1.0, 1.0);
    grad = std::max(grad, finite_diff_check(gx, gp, up, 1e-5));
  }

  VerifyReport report;
  const auto add = [&](std::string name, double worst, double tol, bool ok) {
    report.checks.push_back({std::move(name), worst, tol, ok});
    report.passed = report.passed && ok;
  };
  add("oracle_equivalence", oracle, config.tolerance, within(oracle, config.tolerance));
  add("pmf_rows", pmf_rows, config.tolerance, within(pmf_rows, config.tolerance));
  add("factorization", factor, config.tolerance, within(factor, config.tolerance));
  add("effective_weights_probe", probe, config.tolerance, within(probe, config.tolerance));
  add("coefficient_sum", coef_sum, config.tolerance, within(coef_sum, config.tolerance));
  add("partial_order", order_violations, 0.0, order_violations == 0.0);
  add("salient_set_nonempty", empty_salient, 0.0, empty_salient == 0.0);
  add("suppression_inequality", std::max(0.0, suppression), 1e-12, suppression <= 1e-12);
  add("gradient", grad, config.grad_tolerance, within(grad, config.grad_tolerance));
  if (config.tolerance <= 0.0)
    report.warnings.push_back("tolerance <= 0 cannot be met in floating point");
  if (config.trials == 0) {
    report.warnings.push_back("trials=0: every check passes vacuously");
    report.passed = true;
    for (auto& c : report.checks) c.passed = true;
  }
  return report;
}

std::string to_text(const VerifyReport& report) {
  std::string out;
  char buf[160];
  for (const auto& c : report.checks) {
    std::snprintf(buf, sizeof buf, "%-24s %s  worst=%.3e  tol=%.1e\n", c.name.c_str(),
                  c.passed ? "PASS" : "FAIL", c.worst, c.tolerance);
    out += buf;
  }
  for (const auto& w : report.warnings) out += "warning: " + w + "\n";
  out += report.passed ? "verify: all checks passed\n" : "verify: FAILED\n";
  return out;
}

}  // namespace maan
