#include <doctest.h>

#include <cmath>
#include <vector>

#include "maan/error.hpp"
#include "maan/maa.hpp"
#include "maan/maa_grad.hpp"
#include "maan/rng.hpp"

using namespace maan;

namespace {

const Matrix kX{{1.0, -2.0}, {3.0, 0.5}, {-1.0, 4.0}, {2.0, 0.0}};
const std::vector<double> kP{0.2, 0.7, 0.5, 0.9};

}  // namespace

TEST_CASE("single snippet: h = p x") {
  const auto trace = maa_forward(Matrix{{5.0}}, std::vector{1.0});
  const auto g = maa_backward(trace, std::vector{1.0});
  CHECK(g.grad_features(0, 0) == doctest::Approx(1.0));
  CHECK(g.grad_probs[0] == doctest::Approx(5.0));

  const auto half = maa_backward(maa_forward(Matrix{{5.0}}, std::vector{0.5}), std::vector{2.0});
  CHECK(half.grad_features(0, 0) == doctest::Approx(1.0));
  CHECK(half.grad_probs[0] == doctest::Approx(10.0));
}

TEST_CASE("probability gradients match the multilinear oracle") {
  // h is affine in each p_i, so dh/dp_i = h(p_i = 1) - h(p_i = 0) exactly.
  const std::vector<std::vector<double>> exact{{-0.23375, -0.9952083333333334},
                                               {0.7975, -0.08791666666666667},
                                               {-1.2075, 1.5279166666666666},
                                               {0.42583333333333334, -0.4970833333333333}};
  const auto trace = maa_forward(kX, kP);
  for (std::size_t k = 0; k < 2; ++k) {
    std::vector<double> up(2, 0.0);
    up[k] = 1.0;
    const auto g = maa_backward(trace, up);
    for (std::size_t i = 0; i < 4; ++i) CHECK(g.grad_probs[i] == doctest::Approx(exact[i][k]).epsilon(1e-12));
    // Feature gradient is the effective weight lambda_i on coordinate k.
    const auto w = context_coefficients(kP);
    for (std::size_t i = 0; i < 4; ++i) {
      CHECK(g.grad_features(i, k) == doctest::Approx(w.lambda[i]).epsilon(1e-12));
      CHECK(g.grad_features(i, 1 - k) == 0.0);
    }
  }
}

TEST_CASE("finite difference check") {
  SUBCASE("two fair coins, scalar feature") {
    CHECK(finite_diff_check(Matrix{{1.0}, {3.0}}, std::vector{0.5, 0.5}, std::vector{1.0}, 1e-5) <=
          1e-8);
  }
  SUBCASE("random interior instances") {
    Rng rng = make_rng(21, "test.grad");
    for (int trial = 0; trial < 100; ++trial) {
      const std::size_t T = 1 + trial % 8;
      const std::size_t d = 1 + trial % 3;
      Matrix x(T, d);
      for (double& v : x.data()) v = uniform(rng, -2.0, 2.0);
      std::vector<double> p(T), up(d);
      for (double& v : p) v = uniform(rng, 0.05, 0.95);
      for (double& v : up) v = uniform(rng, -1.0, 1.0);
      CHECK(finite_diff_check(x, p, up, 1e-5) <= 1e-6);
      CHECK(finite_diff_check(x, p, up, 1e-5, {.renormalize = true}) <= 1e-6);
    }
  }
  SUBCASE("preconditions") {
    const auto precondition = [](auto&& fn) {
      try {
        fn();
        return false;
      } catch (const Error& e) {
        return e.code() == ErrorCode::Precondition;
      }
    };
    const Matrix x{{1.0}, {2.0}};
    CHECK(precondition([&] { finite_diff_check(x, std::vector{0.5, 0.5}, std::vector{1.0}, 0.0); }));
    CHECK(precondition([&] { finite_diff_check(x, std::vector{0.5, 0.5}, std::vector{1.0}, 1e-2); }));
    CHECK(precondition([&] { finite_diff_check(x, std::vector{1.0, 0.5}, std::vector{1.0}, 1e-5); }));
    CHECK(precondition([&] { finite_diff_check(x, std::vector{0.5, 0.0}, std::vector{1.0}, 1e-5); }));
  }
}

TEST_CASE("backward rejects a mismatched upstream") {
  const auto trace = maa_forward(kX, kP);
  CHECK_THROWS_AS(maa_backward(trace, std::vector{1.0}), Error);
}

TEST_CASE("renormalized gradient matches the quotient rule") {
  const auto plain = maa_forward(kX, kP);
  const auto renorm = maa_forward(kX, kP, {.renormalize = true});
  const std::vector up{0.3, -0.7};
  const auto gp = maa_backward(plain, up);
  const auto gr = maa_backward(renorm, up);
  const double Z = plain.selection_mass();
  const double hu = up[0] * plain.h()[0] + up[1] * plain.h()[1];
  for (std::size_t i = 0; i < 4; ++i) {
    double others = 1.0;
    for (std::size_t j = 0; j < 4; ++j)
      if (j != i) others *= 1.0 - kP[j];
    const double expected = gp.grad_probs[i] / Z - hu * others / (Z * Z);
    CHECK(gr.grad_probs[i] == doctest::Approx(expected).epsilon(1e-12));
  }
}
