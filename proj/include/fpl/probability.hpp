#pragma once

// Selection probabilities of the perturbed leader.
//
// For a penalized state s (past loss plus k / epsilon) and i.i.d. standard
// exponential q, the perturbed leader argmin_i { s_i - q_i / epsilon } picks
// expert i with probability
//
//   P[i] = sum over subsets M containing i of
//          (-1)^(|M|-1) / |M| * exp(-epsilon * sum_{j in M} (s_j - s_min))
//
// which is also the one-dimensional integral
//
//   P[i] = int_0^inf exp(-(a_i + y)) prod_{j != i} (1 - exp(-(a_j + y))) dy,
//   a_j = epsilon * (s_j - s_min).
//
// Both are implemented and serve as each other's cross-check; Monte-Carlo
// sampling of the argmin is the third route.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "fpl/core.hpp"

namespace fpl {

enum class WeightMethod { inclusion_exclusion, quadrature, monte_carlo };

std::string_view to_string(WeightMethod method) noexcept;

/// Largest class the subset sum accepts (2^20 subsets).
inline constexpr std::size_t kMaxInclusionExclusion = 20;
/// Above this size the automatic estimator falls back to Monte Carlo.
inline constexpr std::size_t kMaxAutomaticQuadrature = 256;

struct WeightVector {
  std::vector<double> weights;
  WeightMethod method = WeightMethod::inclusion_exclusion;
  std::size_t samples = 0;
  /// Numerical error bound for the exact methods, 3/sqrt(samples) for Monte Carlo.
  double error_estimate = 0.0;

  /// Allowed deviation of the total from one for this method.
  double normalization_tolerance() const noexcept;
};

/// How to obtain selection probabilities. `automatic` resolves to the subset
/// sum for n <= kMaxInclusionExclusion, quadrature up to
/// kMaxAutomaticQuadrature (if allowed) and Monte Carlo beyond that. `exact`
/// never samples: the subset sum up to kMaxInclusionExclusion, quadrature above.
struct EstimatorOptions {
  enum class Choice { automatic, exact, inclusion_exclusion, quadrature, monte_carlo };
  Choice choice = Choice::automatic;
  bool allow_quadrature = true;
  std::size_t samples = 100000;
  std::uint64_t seed = 0;
  unsigned workers = 1;
};

std::string_view to_string(EstimatorOptions::Choice choice) noexcept;
EstimatorOptions::Choice estimator_from_string(std::string_view name);

/// Concrete method `options` selects for a class of size n. Throws
/// Unsupported when the options forbid every usable method.
WeightMethod resolve_method(const EstimatorOptions& options, std::size_t n);

/// s + k / epsilon.
std::vector<double> penalized_state(std::span<const double> sums, const ExpertClass& k, double epsilon);

/// Exact selection probabilities. `method` must be inclusion_exclusion or
/// quadrature; the subset sum throws Unsupported for n > kMaxInclusionExclusion.
WeightVector selection_probabilities(std::span<const double> penalized, double epsilon, WeightMethod method);

/// Empirical frequencies of the perturbed argmin over `samples` fresh draws.
/// The result does not depend on `workers`.
WeightVector selection_probabilities_mc(std::span<const double> penalized, double epsilon, std::size_t samples,
                                        std::uint64_t seed, unsigned workers = 1);

/// Dispatch on EstimatorOptions.
WeightVector estimate_weights(std::span<const double> penalized, double epsilon, const EstimatorOptions& options);

/// w . s
double expected_step_loss(const WeightVector& weights, const LossVector& loss);

/// Variance of s^I under I ~ w; used for Monte-Carlo margins on w . s.
double step_loss_variance(const WeightVector& weights, const LossVector& loss);

/// Total-variation distance between two weight vectors of equal length.
double total_variation(std::span<const double> a, std::span<const double> b);

struct ShiftedMaxEstimate {
  double mean = 0.0;
  double standard_error = 0.0;
  std::size_t samples = 0;
};

/// Monte-Carlo estimate of E[max_i (q_i - k_i)] for i.i.d. standard
/// exponential q. Upper bound 1 + ln(sum exp(-k)); for k = 0 the mean is the
/// harmonic number H_n >= 0.57721 + ln n.
ShiftedMaxEstimate shifted_exp_max_estimate(const ExpertClass& k, std::size_t samples, std::uint64_t seed,
                                            unsigned workers = 1);

}  // namespace fpl
