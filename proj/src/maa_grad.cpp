#include "maan/maa_grad.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "maan/error.hpp"

namespace maan {

MaaGradients maa_backward(const AggregationTrace& trace, std::span<const double> upstream) {
  const std::size_t T = trace.length();
  const std::size_t d = trace.dim();
  require(upstream.size() == d, "maa_backward: upstream has dimension " +
                                    std::to_string(upstream.size()) + ", expected " +
                                    std::to_string(d));
  for (double u : upstream) require(std::isfinite(u), "maa_backward: non-finite upstream");

  const auto& probs = trace.probs();
  const auto& features = trace.features();
  const Matrix& q = trace.q_table();

  MaaGradients g{Matrix(T, d, 0.0), std::vector<double>(T, 0.0)};

  std::vector<double> seed(upstream.begin(), upstream.end());
  if (trace.options().renormalize) {
    // h = raw / Z with Z = 1 - prod(1 - p); dZ/dp_t = prod_{k != t}(1 - p_k).
    const double Z = trace.selection_mass();
    const double dZ = -dot(upstream, trace.h()) / Z;
    std::vector<double> prefix(T + 1, 1.0), suffix(T + 1, 1.0);
    for (std::size_t t = 0; t < T; ++t) prefix[t + 1] = prefix[t] * (1.0 - probs[t]);
    for (std::size_t t = T; t-- > 0;) suffix[t] = suffix[t + 1] * (1.0 - probs[t]);
    for (std::size_t t = 0; t < T; ++t) g.grad_probs[t] += dZ * prefix[t] * suffix[t + 1];
    for (double& v : seed) v /= Z;
  }

  // Adjoints of row t of the tables: m_bar[i] (d-vectors) and q_bar[i].
  // h = sum_i m(T, i), so every m(T, i) receives the upstream vector.
  std::vector<double> m_bar((T + 1) * d, 0.0);
  std::vector<double> q_bar(T + 1, 0.0);
  std::vector<double> m_prev((T + 1) * d, 0.0);
  std::vector<double> q_prev(T + 1, 0.0);
  for (std::size_t i = 1; i <= T; ++i)
    std::copy(seed.begin(), seed.end(), m_bar.begin() + static_cast<std::ptrdiff_t>(i * d));

  for (std::size_t t = T; t >= 1; --t) {
    const double p = probs[t - 1];
    const auto x = features.row(t - 1);
    auto gx = g.grad_features.row(t - 1);
    double gp = 0.0;
    std::fill(m_prev.begin(), m_prev.begin() + static_cast<std::ptrdiff_t>(t * d), 0.0);
    std::fill(q_prev.begin(), q_prev.begin() + static_cast<std::ptrdiff_t>(t), 0.0);

    for (std::size_t i = 1; i <= t; ++i) {
      const std::span<const double> gm(m_bar.data() + i * d, d);
      const double b = static_cast<double>(i - 1) / static_cast<double>(i);
      const double q_shift = q(t - 1, i - 1);
      const auto m_shift = trace.m(t - 1, i - 1);
      const auto m_same = trace.m(t - 1, i);

      double gm_dot_x = 0.0;
      for (std::size_t k = 0; k < d; ++k) {
        const double selected = b * m_shift[k] + (1.0 - b) * q_shift * x[k];
        gp += gm[k] * (selected - m_same[k]);
        gm_dot_x += gm[k] * x[k];
        gx[k] += p * (1.0 - b) * q_shift * gm[k];
      }
      q_prev[i - 1] += p * (1.0 - b) * gm_dot_x;
      // m(t-1, 0) is constant zero, m(t-1, t) lies outside row t-1.
      if (i - 1 >= 1) axpy(p * b, gm, std::span<double>(m_prev.data() + (i - 1) * d, d));
      if (i <= t - 1) axpy(1.0 - p, gm, std::span<double>(m_prev.data() + i * d, d));
    }

    for (std::size_t i = 0; i <= t; ++i) {
      const double gq = q_bar[i];
      if (gq == 0.0) continue;
      const double q_shift = i >= 1 ? q(t - 1, i - 1) : 0.0;
      const double q_same = i <= t - 1 ? q(t - 1, i) : 0.0;
      gp += gq * (q_shift - q_same);
      if (i >= 1) q_prev[i - 1] += p * gq;
      if (i <= t - 1) q_prev[i] += (1.0 - p) * gq;
    }

    g.grad_probs[t - 1] += gp;
    std::swap(m_bar, m_prev);
    std::swap(q_bar, q_prev);
  }
  return g;
}

double finite_diff_check(const Matrix& features, std::span<const double> probs,
                         std::span<const double> upstream, double step,
                         MaaOptions options) {
  if (!(step > 0.0 && step <= 1e-3))
    fail(ErrorCode::Precondition, "finite_diff_check: step must lie in (0, 1e-3]");
  for (double p : probs)
    if (p < step || p > 1.0 - step)
      fail(ErrorCode::Precondition,
           "finite_diff_check: probabilities must lie in [step, 1 - step]");

  const auto trace = maa_forward(features, probs, options);
  const auto analytic = maa_backward(trace, upstream);
  const auto objective = [&](const Matrix& x, std::span<const double> p) {
    return dot(upstream, maa_forward(x, p, options).h());
  };
  const auto rel = [](double a, double n) {
    return std::abs(a - n) / std::max(1.0, std::abs(a));
  };

  double worst = 0.0;
  std::vector<double> p(probs.begin(), probs.end());
  for (std::size_t t = 0; t < p.size(); ++t) {
    const double saved = p[t];
    p[t] = saved + step;
    const double up = objective(features, p);
    p[t] = saved - step;
    const double down = objective(features, p);
    p[t] = saved;
    worst = std::max(worst, rel(analytic.grad_probs[t], (up - down) / (2.0 * step)));
  }
  Matrix x = features;
  for (std::size_t t = 0; t < x.rows(); ++t) {
    for (std::size_t k = 0; k < x.cols(); ++k) {
      const double saved = x(t, k);
      x(t, k) = saved + step;
      const double up = objective(x, probs);
      x(t, k) = saved - step;
      const double down = objective(x, probs);
      x(t, k) = saved;
      worst = std::max(worst, rel(analytic.grad_features(t, k), (up - down) / (2.0 * step)));
    }
  }
  return worst;
}

}  // namespace maan
