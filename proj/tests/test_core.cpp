#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "doctest.h"
#include "fpl/core.hpp"
#include "fpl/random.hpp"

using namespace fpl;

namespace {

std::vector<double> draw(random::UniformStream& s, std::uint64_t row, std::size_t n, double scale) {
  std::vector<double> v(n);
  s.fill(row, n, [&](std::size_t i, double u) { v[i] = scale * u; });
  return v;
}

}  // namespace

TEST_CASE("expert classes") {
  SUBCASE("uniform class has k = ln n and unit weight") {
    const auto k = ExpertClass::uniform(5);
    CHECK(k.size() == 5);
    for (double x : k.complexities()) CHECK(x == doctest::Approx(std::log(5.0)));
    CHECK(k.weight_sum() == doctest::Approx(1.0));
    CHECK(k.is_uniform());
  }
  SUBCASE("two_log class follows 2 ln(i + 1)") {
    const auto k = ExpertClass::two_log(50);
    CHECK(k[0] == doctest::Approx(2.0 * std::log(2.0)));
    CHECK(k[2] == doctest::Approx(2.0 * std::log(4.0)));
    CHECK(k.weight_sum() <= 1.0);
    CHECK(k.max_complexity() == doctest::Approx(2.0 * std::log(51.0)));
  }
  SUBCASE("rejects invalid complexities") {
    CHECK_THROWS_AS(ExpertClass(std::vector<double>{}), InvalidArgument);
    CHECK_THROWS_AS(ExpertClass({-0.1, 1.0}), InvalidArgument);
    CHECK_THROWS_AS(ExpertClass({std::numeric_limits<double>::quiet_NaN()}), InvalidArgument);
    CHECK_THROWS_AS(ExpertClass({std::numeric_limits<double>::infinity()}), InvalidArgument);
  }
  SUBCASE("strict mode enforces sum exp(-k) <= 1, relaxed mode stores it") {
    CHECK_THROWS_AS(ExpertClass({0.0, 0.0}), InvalidArgument);
    const ExpertClass relaxed({0.0, 0.0}, ExpertClass::Check::relaxed);
    CHECK(relaxed.weight_sum() == doctest::Approx(2.0));
  }
}

TEST_CASE("loss vectors reject values outside [0, 1]") {
  CHECK_NOTHROW(LossVector({0.0, 0.5, 1.0}));
  CHECK_THROWS_AS(LossVector({1.0000001}), InvalidArgument);
  CHECK_THROWS_AS(LossVector({-1e-300}), InvalidArgument);
  CHECK_THROWS_AS(LossVector({std::numeric_limits<double>::quiet_NaN()}), InvalidArgument);
}

TEST_CASE("cumulative state") {
  SUBCASE("three observations") {
    CumulativeState c(2);
    c.add(LossVector({1, 0}));
    c.add(LossVector({0, 1}));
    c.add(LossVector({1, 0}));
    CHECK(c.sums()[0] == 2.0);
    CHECK(c.sums()[1] == 1.0);
    CHECK(c.min_loss() == 1.0);
    CHECK(c.best_expert() == 1);
    CHECK(c.step() == 3);
  }
  SUBCASE("zero vector only advances the step") {
    CumulativeState c(3);
    c.add(LossVector({0.3, 0.2, 0.1}));
    const std::vector<double> before(c.sums().begin(), c.sums().end());
    c.add(LossVector({0, 0, 0}));
    CHECK(c.step() == 2);
    for (std::size_t i = 0; i < 3; ++i) CHECK(c.sums()[i] == before[i]);
  }
  SUBCASE("compensated sums track exact totals, stay monotone, and min_loss is the true minimum") {
    random::UniformStream s(3);
    const std::size_t n = 4;
    CumulativeState c(n);
    std::vector<long double> exact(n, 0.0L);
    std::vector<double> previous(n, 0.0);
    for (std::uint64_t t = 1; t <= 10000; ++t) {
      const auto x = draw(s, t, n, 1.0);
      c.add(LossVector(x));
      for (std::size_t i = 0; i < n; ++i) {
        exact[i] += x[i];
        CHECK(c.sums()[i] >= previous[i]);
        CHECK(c.sums()[i] <= static_cast<double>(t));
        previous[i] = c.sums()[i];
      }
      if (t % 1000 == 0) {
        for (std::size_t i = 0; i < n; ++i) {
          CHECK(std::abs(c.sums()[i] - static_cast<double>(exact[i])) <= 1e-12 * static_cast<double>(t));
        }
        CHECK(c.min_loss() == *std::min_element(c.sums().begin(), c.sums().end()));
      }
    }
  }
  SUBCASE("length mismatch") {
    CumulativeState c(2);
    CHECK_THROWS_AS(c.add(LossVector({0.0})), InvalidArgument);
  }
}

TEST_CASE("perturbation sampling") {
  SUBCASE("initial_only returns the same vector at every step") {
    const PerturbationSource src(42, PerturbationMode::initial_only);
    const auto a = sample_perturbation(src, 5, 1);
    const auto b = sample_perturbation(src, 5, 7);
    for (std::size_t i = 0; i < 5; ++i) CHECK(a[i] == b[i]);
  }
  SUBCASE("per_step differs across steps and is reproducible") {
    const PerturbationSource src(42, PerturbationMode::per_step);
    const auto a = sample_perturbation(src, 5, 1);
    const auto b = sample_perturbation(src, 5, 2);
    const auto a2 = PerturbationSource(42, PerturbationMode::per_step).sample(5, 1);
    bool differs = false;
    for (std::size_t i = 0; i < 5; ++i) {
      differs = differs || a[i] != b[i];
      CHECK(a[i] == a2[i]);
      CHECK(a[i] >= 0.0);
    }
    CHECK(differs);
  }
  SUBCASE("standard exponential mean over 10^6 draws") {
    const PerturbationSource src(2024, PerturbationMode::per_step);
    const std::uint64_t N = 1000000;
    double sum = 0.0;
    for (std::uint64_t t = 1; t <= N; ++t) sum += src.sample(1, t)[0];
    const double mean = sum / static_cast<double>(N);
    CHECK(std::abs(mean - 1.0) <= 3.0 / std::sqrt(static_cast<double>(N)));
    CHECK(std::abs(mean - 1.0) <= 0.01);
  }
  SUBCASE("invalid sizes") {
    const PerturbationSource src(1, PerturbationMode::per_step);
    CHECK_THROWS_AS(src.sample(0, 1), InvalidArgument);
    CHECK_THROWS_AS(src.sample(2, 0), InvalidArgument);
  }
  SUBCASE("mode names") {
    CHECK(perturbation_mode_from_string("per_step") == PerturbationMode::per_step);
    CHECK(perturbation_mode_from_string(to_string(PerturbationMode::initial_only)) == PerturbationMode::initial_only);
    CHECK_THROWS_AS(perturbation_mode_from_string("sometimes"), InvalidArgument);
  }
}

TEST_CASE("select_leader") {
  const std::vector<double> zeros3(3, 0.0);
  SUBCASE("single expert") {
    CHECK(select_leader(std::vector<double>{7.0}, std::vector<double>{3.0}, std::vector<double>{0.1}, 0.5) == 0);
  }
  SUBCASE("coordinate minimum without penalty") {
    CHECK(select_leader(std::vector<double>{0.5, 0.2, 0.9}, zeros3, zeros3, 1.0) == 1);
  }
  SUBCASE("perturbation decides between equal states") {
    const double l2 = std::log(2.0);
    // 1 + (ln2 - 0.3)/2 = 1.1966 versus 1 + (ln2 - 0.9)/2 = 0.8966
    CHECK(select_leader(std::vector<double>{1.0, 1.0}, std::vector<double>{l2, l2}, std::vector<double>{0.3, 0.9},
                        2.0) == 1);
  }
  SUBCASE("zero past loss: larger perturbation wins") {
    const double l2 = std::log(2.0);
    for (double eps : {0.01, 1.0, 50.0}) {
      CHECK(select_leader(std::vector<double>{0, 0}, std::vector<double>{l2, l2}, std::vector<double>{0.2, 1.5},
                          eps) == 1);
    }
  }
  SUBCASE("ties go to the lowest index") {
    CHECK(select_leader(std::vector<double>{1, 1, 1}, zeros3, zeros3, 1.0) == 0);
    CHECK(select_leader(std::vector<double>{2, 1, 1}, zeros3, zeros3, kFollowTheLeader) == 1);
  }
  SUBCASE("infinite rate is plain Follow the Leader") {
    CHECK(select_leader(std::vector<double>{1.0, 0.5}, std::vector<double>{0.0, 100.0},
                        std::vector<double>{50.0, 0.0}, kFollowTheLeader) == 1);
  }
  SUBCASE("errors") {
    const std::vector<double> empty;
    CHECK_THROWS_AS(select_leader(empty, empty, empty, 1.0), InvalidArgument);
    const double nan = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(select_leader(std::vector<double>{nan, 0}, std::vector<double>{0, 0}, std::vector<double>{0, 0}, 1.0),
                    InvalidArgument);
    CHECK_THROWS_AS(select_leader(std::vector<double>{0, 0}, std::vector<double>{0, nan}, std::vector<double>{0, 0}, 1.0),
                    InvalidArgument);
    CHECK_THROWS_AS(select_leader(std::vector<double>{0, 0}, std::vector<double>{0, 0}, std::vector<double>{0, 0}, nan),
                    InvalidArgument);
    CHECK_THROWS_AS(select_leader(std::vector<double>{0, 0}, std::vector<double>{0, 0}, std::vector<double>{0, 0}, 0.0),
                    InvalidArgument);
  }
  SUBCASE("shift invariance on random instances") {
    random::UniformStream s(17);
    for (std::uint64_t trial = 0; trial < 2000; ++trial) {
      const std::size_t n = 2 + trial % 5;
      auto state = draw(s, 4 * trial, n, 10.0);
      const auto k = draw(s, 4 * trial + 1, n, 3.0);
      const auto q = draw(s, 4 * trial + 2, n, 4.0);
      const double eps = 0.05 + s.uniform(4 * trial + 3, 0);
      const double c = 8.0 * s.uniform(4 * trial + 3, 1) - 4.0;
      const auto before = select_leader(state, k, q, eps);
      for (double& x : state) x += c;
      CHECK(select_leader(state, k, q, eps) == before);
    }
  }
  SUBCASE("deterministic for identical inputs") {
    random::UniformStream s(5);
    const auto state = draw(s, 0, 6, 3.0);
    const auto k = draw(s, 1, 6, 1.0);
    const auto q = draw(s, 2, 6, 2.0);
    const auto first = select_leader(state, k, q, 0.7);
    for (int i = 0; i < 10; ++i) CHECK(select_leader(state, k, q, 0.7) == first);
  }
}

TEST_CASE("decisions") {
  const LossVector s({0.0, 1.0});
  CHECK(decision_loss(Decision{std::size_t{1}}, s) == 1.0);
  CHECK(decision_loss(Decision{SimplexWeights({0.75, 0.25})}, s) == 0.25);
  CHECK_THROWS_AS(SimplexWeights({0.5, 0.4}), InvalidArgument);
  CHECK_THROWS_AS(SimplexWeights({1.5, -0.5}), InvalidArgument);
  CHECK_NOTHROW(SimplexWeights({0.5, 0.5 + 5e-10}));
  CHECK_THROWS_AS(decision_loss(Decision{std::size_t{2}}, s), InvalidArgument);
}
