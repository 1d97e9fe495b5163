#pragma once

// Domain types for prediction with expert advice and the leader-selection
// primitive shared by every predictor. Experts are indexed from 0.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include "fpl/errors.hpp"

namespace fpl {

/// Learning rate meaning "no penalty, no perturbation": plain Follow the Leader.
inline constexpr double kFollowTheLeader = std::numeric_limits<double>::infinity();

/// A finite (possibly truncated) set of experts with complexities k >= 0.
///
/// In strict mode the prior weights must satisfy sum exp(-k) <= 1 (within
/// 1e-9), which is what every regret bound assumes. Relaxed mode only stores
/// the weight sum; it exists for the shifted-maximum estimator, where the sum
/// may exceed one.
class ExpertClass {
 public:
  enum class Check { strict, relaxed };

  explicit ExpertClass(std::vector<double> complexities, Check check = Check::strict);

  /// n experts with k = ln n.
  static ExpertClass uniform(std::size_t n);
  /// First n experts of the countable class k_i = 2 ln(i + 1), i = 1, 2, ...
  static ExpertClass two_log(std::size_t n);
  /// First n terms of an arbitrary complexity generator, called with i = 1..n.
  static ExpertClass from_generator(std::size_t n, const std::function<double(std::size_t)>& k,
                                    Check check = Check::strict);

  std::size_t size() const noexcept { return complexities_.size(); }
  std::span<const double> complexities() const noexcept { return complexities_; }
  double operator[](std::size_t i) const { return complexities_[i]; }
  double weight_sum() const noexcept { return weight_sum_; }
  double max_complexity() const noexcept { return max_complexity_; }
  Check check() const noexcept { return check_; }
  /// True when all complexities agree within tol.
  bool is_uniform(double tol = 1e-12) const noexcept;

 private:
  std::vector<double> complexities_;
  double weight_sum_ = 0.0;
  double max_complexity_ = 0.0;
  Check check_;
};

/// Per-step losses, each in [0, 1]. Values outside the range are rejected.
class LossVector {
 public:
  LossVector() = default;
  explicit LossVector(std::vector<double> values);

  std::size_t size() const noexcept { return values_.size(); }
  std::span<const double> values() const noexcept { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }

 private:
  std::vector<double> values_;
};

/// Running loss totals s_{1:t} with compensated summation.
///
/// Totals are non-decreasing and min_loss() is the exact coordinate minimum.
class CumulativeState {
 public:
  explicit CumulativeState(std::size_t n);

  void add(const LossVector& loss);

  std::size_t size() const noexcept { return sums_.size(); }
  std::span<const double> sums() const noexcept { return sums_; }
  std::uint64_t step() const noexcept { return step_; }
  double min_loss() const noexcept { return min_loss_; }
  std::size_t best_expert() const noexcept { return best_; }

 private:
  std::vector<double> sums_;
  std::vector<double> raw_;
  std::vector<double> compensation_;
  std::uint64_t step_ = 0;
  double min_loss_ = 0.0;
  std::size_t best_ = 0;
};

/// Non-negative perturbation vector q.
class PerturbationVector {
 public:
  PerturbationVector() = default;
  explicit PerturbationVector(std::vector<double> values);
  static PerturbationVector zeros(std::size_t n) { return PerturbationVector(std::vector<double>(n, 0.0)); }

  std::size_t size() const noexcept { return values_.size(); }
  std::span<const double> values() const noexcept { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }

 private:
  std::vector<double> values_;
};

enum class PerturbationMode { initial_only, per_step };

std::string_view to_string(PerturbationMode mode) noexcept;
PerturbationMode perturbation_mode_from_string(std::string_view name);

/// Seeded source of standard exponential perturbations.
///
/// initial_only returns the same vector at every step; per_step returns a
/// fresh vector per step that is a pure function of (seed, t).
class PerturbationSource {
 public:
  PerturbationSource(std::uint64_t seed, PerturbationMode mode) noexcept;

  std::uint64_t seed() const noexcept { return seed_; }
  PerturbationMode mode() const noexcept { return mode_; }

  PerturbationVector sample(std::size_t n, std::uint64_t t) const;

 private:
  std::uint64_t seed_;
  PerturbationMode mode_;
};

PerturbationVector sample_perturbation(const PerturbationSource& source, std::size_t n, std::uint64_t t);

/// Index minimizing state[i] + (k[i] - q[i]) / epsilon; smallest index wins
/// ties. epsilon == kFollowTheLeader drops the penalty term entirely.
std::size_t select_leader(std::span<const double> state, std::span<const double> k,
                          std::span<const double> q, double epsilon);

std::size_t select_leader(const CumulativeState& state, const ExpertClass& k, const PerturbationVector& q,
                          double epsilon);

/// A point of the probability simplex.
class SimplexWeights {
 public:
  explicit SimplexWeights(std::vector<double> weights);

  std::size_t size() const noexcept { return weights_.size(); }
  std::span<const double> values() const noexcept { return weights_; }
  double operator[](std::size_t i) const { return weights_[i]; }

 private:
  std::vector<double> weights_;
};

/// Either a single expert (unit vector) or a mixture on the simplex.
using Decision = std::variant<std::size_t, SimplexWeights>;

/// d . s for either kind of decision.
double decision_loss(const Decision& decision, const LossVector& loss);

}  // namespace fpl
