#include <algorithm>
#include <cmath>
#include <numeric>

#include "doctest.h"
#include "fpl/probability.hpp"
#include "fpl/random.hpp"
#include "oracles.hpp"

using namespace fpl;

namespace {

std::vector<double> random_state(random::UniformStream& s, std::uint64_t row, std::size_t n, double scale) {
  std::vector<double> v(n);
  s.fill(row, n, [&](std::size_t i, double u) { v[i] = scale * u; });
  return v;
}

double sum(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

}  // namespace

TEST_CASE("closed-form two-expert probabilities") {
  for (auto method : {WeightMethod::inclusion_exclusion, WeightMethod::quadrature}) {
    CAPTURE(to_string(method));
    const auto sym = selection_probabilities(std::vector<double>{3.0, 3.0}, 0.7, method);
    CHECK(sym.weights[0] == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(sym.weights[1] == doctest::Approx(0.5).epsilon(1e-9));

    const auto w = selection_probabilities(std::vector<double>{0.0, std::log(2.0)}, 1.0, method);
    CHECK(w.weights[0] == doctest::Approx(0.75).epsilon(1e-9));
    CHECK(w.weights[1] == doctest::Approx(0.25).epsilon(1e-9));

    for (double eps : {0.01, 0.3, 1.0, 4.0}) {
      for (double gap : {0.0, 0.1, 1.0, 7.5}) {
        const auto v = selection_probabilities(std::vector<double>{1.0, 1.0 + gap}, eps, method);
        CHECK(v.weights[1] == doctest::Approx(oracle::two_expert_trailing(eps, gap)).epsilon(1e-8));
      }
    }
  }
}

TEST_CASE("exact methods match a fixed-grid long double integral") {
  random::UniformStream s(31);
  for (std::uint64_t trial = 0; trial < 20; ++trial) {
    const std::size_t n = 2 + trial % 5;
    const auto state = random_state(s, trial, n, 4.0);
    const double eps = 0.2 + 1.5 * s.uniform(1000 + trial, 0);
    const auto ref = oracle::selection_by_simpson(state, eps);
    const auto ie = selection_probabilities(state, eps, WeightMethod::inclusion_exclusion);
    const auto quad = selection_probabilities(state, eps, WeightMethod::quadrature);
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(std::abs(ie.weights[i] - ref[i]) < 1e-9);
      CHECK(std::abs(quad.weights[i] - ref[i]) < 1e-7);
    }
  }
}

TEST_CASE("normalization within each method's tolerance") {
  random::UniformStream s(32);
  for (std::uint64_t trial = 0; trial < 40; ++trial) {
    const std::size_t n = 1 + trial % 12;
    const auto state = random_state(s, trial, n, 10.0);
    const double eps = 0.05 + 2.0 * s.uniform(500 + trial, 0);
    for (auto method : {WeightMethod::inclusion_exclusion, WeightMethod::quadrature}) {
      const auto w = selection_probabilities(state, eps, method);
      CHECK(std::abs(sum(w.weights) - 1.0) <= w.normalization_tolerance());
      for (double x : w.weights) CHECK(x >= 0.0);
    }
    const auto mc = selection_probabilities_mc(state, eps, 4000, trial);
    CHECK(std::abs(sum(mc.weights) - 1.0) <= mc.normalization_tolerance());
    CHECK(mc.normalization_tolerance() == doctest::Approx(3.0 / std::sqrt(4000.0)));
  }
}

TEST_CASE("inclusion-exclusion and quadrature agree on three experts") {
  random::UniformStream s(33);
  for (std::uint64_t trial = 0; trial < 200; ++trial) {
    const auto state = random_state(s, trial, 3, 5.0);
    const double eps = 0.1 + 2.0 * s.uniform(900 + trial, 0);
    const auto a = selection_probabilities(state, eps, WeightMethod::inclusion_exclusion);
    const auto b = selection_probabilities(state, eps, WeightMethod::quadrature);
    for (std::size_t i = 0; i < 3; ++i) CHECK(std::abs(a.weights[i] - b.weights[i]) <= 1e-6);
  }
}

TEST_CASE("pairwise agreement of all three methods, n in 2..6") {
  random::UniformStream s(34);
  for (std::uint64_t trial = 0; trial < 5; ++trial) {
    const std::size_t n = 2 + trial;
    const auto state = random_state(s, trial, n, 3.0);
    const double eps = 0.5 + s.uniform(100 + trial, 0);
    const auto ie = selection_probabilities(state, eps, WeightMethod::inclusion_exclusion);
    const auto quad = selection_probabilities(state, eps, WeightMethod::quadrature);
    const auto mc = selection_probabilities_mc(state, eps, 1000000, 77 + trial);
    CHECK(total_variation(ie.weights, quad.weights) <= 1e-6 + 1e-9);
    CHECK(total_variation(ie.weights, mc.weights) <= mc.error_estimate + 1e-9);
    CHECK(total_variation(quad.weights, mc.weights) <= mc.error_estimate + 1e-6);
  }
}

TEST_CASE("shift invariance") {
  random::UniformStream s(35);
  for (std::uint64_t trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + trial % 5;
    auto state = random_state(s, trial, n, 5.0);
    const double eps = 0.1 + s.uniform(300 + trial, 0);
    const auto before = selection_probabilities(state, eps, WeightMethod::inclusion_exclusion);
    const double c = 20.0 * s.uniform(300 + trial, 1) - 10.0;
    for (double& x : state) x += c;
    const auto after = selection_probabilities(state, eps, WeightMethod::inclusion_exclusion);
    for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(before.weights[i] - after.weights[i]) <= 1e-10);
  }
}

TEST_CASE("raising one penalized value lowers its weight and raises the others") {
  random::UniformStream s(36);
  for (std::uint64_t trial = 0; trial < 300; ++trial) {
    const std::size_t n = 2 + trial % 5;
    auto state = random_state(s, trial, n, 3.0);
    const double eps = 0.2 + s.uniform(700 + trial, 0);
    const std::size_t i = trial % n;
    const auto before = selection_probabilities(state, eps, WeightMethod::inclusion_exclusion);
    state[i] += 0.05 + s.uniform(700 + trial, 1);
    const auto after = selection_probabilities(state, eps, WeightMethod::inclusion_exclusion);
    CHECK(after.weights[i] < before.weights[i]);
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) CHECK(after.weights[j] >= before.weights[j] - 1e-12);
    }
  }
}

TEST_CASE("the subset sum is limited to 20 experts") {
  const std::vector<double> state(21, 0.0);
  CHECK_THROWS_AS(selection_probabilities(state, 1.0, WeightMethod::inclusion_exclusion), Unsupported);
  const auto quad = selection_probabilities(state, 1.0, WeightMethod::quadrature);
  for (double w : quad.weights) CHECK(w == doctest::Approx(1.0 / 21.0).epsilon(1e-6));
  CHECK_THROWS_AS(selection_probabilities(state, 1.0, WeightMethod::monte_carlo), InvalidArgument);
}

TEST_CASE("estimator resolution") {
  EstimatorOptions o;
  CHECK(resolve_method(o, 20) == WeightMethod::inclusion_exclusion);
  CHECK(resolve_method(o, 21) == WeightMethod::quadrature);
  CHECK(resolve_method(o, 257) == WeightMethod::monte_carlo);
  o.choice = EstimatorOptions::Choice::inclusion_exclusion;
  CHECK_THROWS_AS(resolve_method(o, 21), Unsupported);
  CHECK(estimator_from_string("exact") == EstimatorOptions::Choice::exact);
  o.choice = EstimatorOptions::Choice::exact;
  CHECK(resolve_method(o, 20) == WeightMethod::inclusion_exclusion);
  CHECK(resolve_method(o, 1000) == WeightMethod::quadrature);
  CHECK(estimator_from_string("mc") == EstimatorOptions::Choice::monte_carlo);
  CHECK(estimator_from_string("auto") == EstimatorOptions::Choice::automatic);
  CHECK_THROWS_AS(estimator_from_string("guess"), InvalidArgument);
}

TEST_CASE("Monte-Carlo weights") {
  SUBCASE("single expert is exact") {
    const auto w = selection_probabilities_mc(std::vector<double>{2.0}, 0.3, 17, 1);
    CHECK(w.weights[0] == 1.0);
  }
  SUBCASE("same seed, same frequencies, regardless of worker count") {
    const std::vector<double> state{0.0, 0.3, 1.0, 0.2, 0.9};
    const auto a = selection_probabilities_mc(state, 1.0, 100000, 5, 1);
    const auto b = selection_probabilities_mc(state, 1.0, 100000, 5, 1);
    const auto c = selection_probabilities_mc(state, 1.0, 100000, 5, 4);
    for (std::size_t i = 0; i < state.size(); ++i) {
      CHECK(a.weights[i] == b.weights[i]);
      CHECK(a.weights[i] == c.weights[i]);
    }
  }
  SUBCASE("n = 5 with 10^6 samples is within 0.005 total variation") {
    random::UniformStream s(37);
    const auto state = random_state(s, 0, 5, 2.0);
    const auto exact = selection_probabilities(state, 1.0, WeightMethod::inclusion_exclusion);
    const auto mc = selection_probabilities_mc(state, 1.0, 1000000, 9);
    CHECK(total_variation(exact.weights, mc.weights) <= 0.005);
  }
  SUBCASE("zero samples") {
    CHECK_THROWS_AS(selection_probabilities_mc(std::vector<double>{0.0, 1.0}, 1.0, 0, 1), InvalidArgument);
  }
}

TEST_CASE("expected step loss") {
  WeightVector half{{0.5, 0.5}, WeightMethod::inclusion_exclusion, 0, 0.0};
  CHECK(expected_step_loss(half, LossVector({1.0, 0.0})) == 0.5);
  WeightVector w{{0.75, 0.25}, WeightMethod::inclusion_exclusion, 0, 0.0};
  CHECK(expected_step_loss(w, LossVector({0.0, 1.0})) == 0.25);
  CHECK(expected_step_loss(w, LossVector({1.0, 1.0})) == doctest::Approx(1.0));
  CHECK(step_loss_variance(w, LossVector({0.0, 1.0})) == doctest::Approx(0.1875));
  CHECK_THROWS_AS(expected_step_loss(w, LossVector({1.0})), InvalidArgument);
}

TEST_CASE("FPL is at most e^eps (and 1 + eps + eps^2) times IFPL per step") {
  random::UniformStream s(38);
  for (std::uint64_t trial = 0; trial < 2000; ++trial) {
    const std::size_t n = 2 + trial % 5;
    const auto past = random_state(s, 3 * trial, n, 4.0);
    const auto current = random_state(s, 3 * trial + 1, n, 1.0);
    const double eps = 0.01 + 0.99 * s.uniform(3 * trial + 2, 0);
    std::vector<double> through(n);
    for (std::size_t i = 0; i < n; ++i) through[i] = past[i] + current[i];
    const LossVector st(current);
    const double ell =
        expected_step_loss(selection_probabilities(past, eps, WeightMethod::inclusion_exclusion), st);
    const double r =
        expected_step_loss(selection_probabilities(through, eps, WeightMethod::inclusion_exclusion), st);
    CHECK(ell <= std::exp(eps) * r + 1e-9);
    CHECK(ell <= (1.0 + eps + eps * eps) * r + 1e-9);
  }
}

TEST_CASE("shifted maximum of exponentials") {
  SUBCASE("one expert with k = 0 has mean 1") {
    const auto e = shifted_exp_max_estimate(ExpertClass({0.0}, ExpertClass::Check::relaxed), 200000, 3);
    CHECK(std::abs(e.mean - 1.0) <= 3.0 * e.standard_error);
  }
  SUBCASE("ten experts with k = 0: harmonic number inside the bracket") {
    const auto e =
        shifted_exp_max_estimate(ExpertClass(std::vector<double>(10, 0.0), ExpertClass::Check::relaxed), 400000, 4);
    CHECK(std::abs(e.mean - oracle::harmonic(10)) <= 3.0 * e.standard_error);
    CHECK(e.mean >= 0.57721 + std::log(10.0) - 3.0 * e.standard_error);
    CHECK(e.mean <= 1.0 + std::log(10.0) + 3.0 * e.standard_error);
  }
  SUBCASE("unit prior weight gives at most 1") {
    const auto e = shifted_exp_max_estimate(ExpertClass::uniform(2), 200000, 5);
    CHECK(e.mean <= 1.0 + 3.0 * e.standard_error);
  }
  SUBCASE("reproducible and independent of workers") {
    const auto k = ExpertClass::two_log(6);
    const auto a = shifted_exp_max_estimate(k, 50000, 8, 1);
    const auto b = shifted_exp_max_estimate(k, 50000, 8, 3);
    CHECK(a.mean == b.mean);
    CHECK(a.standard_error == doctest::Approx(b.standard_error).epsilon(1e-12));
  }
  SUBCASE("too few samples") {
    CHECK_THROWS_AS(shifted_exp_max_estimate(ExpertClass::uniform(2), 999, 1), InvalidArgument);
  }
}
