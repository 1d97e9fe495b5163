#include <cmath>
#include <set>

#include "doctest.h"
#include "fpl/random.hpp"
#include "oracles.hpp"

using namespace fpl::random;

TEST_CASE("philox4x32-10 matches the published known-answer vectors") {
  for (const auto& v : oracle::kPhiloxVectors) {
    const Counter out = philox4x32(v.counter, v.key);
    for (int i = 0; i < 4; ++i) CHECK(out[i] == v.output[i]);
  }
}

TEST_CASE("unit conversion covers [0, 1) with 53 bits") {
  CHECK(to_unit(0) == 0.0);
  CHECK(to_unit(~std::uint64_t{0}) < 1.0);
  CHECK(to_unit(~std::uint64_t{0}) == 1.0 - 0x1.0p-53);
  CHECK(to_unit(std::uint64_t{1} << 63) == 0.5);
}

TEST_CASE("inverse-CDF exponential") {
  CHECK(exponential_from_uniform(0.0) == 0.0);
  CHECK(exponential_from_uniform(0.5) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  CHECK(exponential_from_uniform(1.0 - 0x1.0p-53) == doctest::Approx(53.0 * std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("uniform() and fill() address the same array") {
  const UniformStream s(12345);
  for (std::uint64_t row : {0ull, 1ull, 77ull, (1ull << 40) + 3}) {
    std::vector<double> filled(7);
    s.fill(row, filled.size(), [&](std::size_t i, double u) { filled[i] = u; });
    for (std::size_t i = 0; i < filled.size(); ++i) CHECK(filled[i] == s.uniform(row, i));
  }
}

TEST_CASE("derived seeds separate domains and salts") {
  std::set<std::uint64_t> seen;
  for (auto d : {Domain::perturbation, Domain::meta_perturbation, Domain::monte_carlo, Domain::environment,
                 Domain::subclass}) {
    for (std::uint64_t salt = 0; salt < 4; ++salt) seen.insert(derive_seed(7, d, salt));
  }
  CHECK(seen.size() == 20);
  CHECK(derive_seed(7, Domain::perturbation) == derive_seed(7, Domain::perturbation));
  CHECK(derive_seed(7, Domain::perturbation) != derive_seed(8, Domain::perturbation));
}

TEST_CASE("uniforms have the right first two moments") {
  const UniformStream s(99);
  const int N = 200000;
  double sum = 0.0, sum_sq = 0.0;
  for (int i = 0; i < N; ++i) {
    const double u = s.uniform(static_cast<std::uint64_t>(i), 0);
    sum += u;
    sum_sq += u * u;
  }
  const double mean = sum / N;
  CHECK(std::abs(mean - 0.5) < 3.0 * std::sqrt(1.0 / 12.0 / N));
  CHECK(std::abs(sum_sq / N - 1.0 / 3.0) < 0.005);
}
