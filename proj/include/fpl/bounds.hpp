#pragma once

// Closed-form regret bounds and high-probability envelopes, and verdicts
// comparing them with measured losses.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace fpl {

struct RunRecord;

enum class Theorem {
  static_i,        ///< l <= s^i + sqrt(L) (k^i + 1),           eps = 1/sqrt(L)
  static_ii,       ///< l <= s^i + 2 sqrt(L K),                  eps = sqrt(K/L)
  static_iii,      ///< l <= s^i + 2 sqrt(L k^i) + 3 k^i,        eps = sqrt(k^i/L)
  dynamic_i,       ///< l <= s^i + sqrt(T) (k^i + 2),            eps_t = 1/sqrt(t)
  dynamic_ii,      ///< l <= s^i + 2 sqrt(2 T K),                eps_t = sqrt(K/2t)
  selfconf_i,      ///< l <= s^i + (k^i+1) sqrt(2(s^i+1)) + 2 (k^i+1)^2
  selfconf_ii,     ///< l <= s^i + 2 sqrt(2 (s^i+1) K) + 8 K
  adaptive_i,      ///< l <= s^i + (k^i+2) sqrt(2 s^i) + 2 (k^i+2)^2
  adaptive_ii,     ///< l <= s^min + 2 sqrt(2 K s^min) + 5 K ln s^min + 3K + 6
  hierarchy_a,     ///< l~ <= s^i + sqrt(T) [2 sqrt(2(k^i+1)) + 1/2 + 2 ln(k^i+1) + 2]
  hierarchy_b,     ///< asymptotic only; never gets a numeric verdict
  ifpl_corollary,  ///< r <= s^i + k^i / eps_T
  lower_uniform,   ///< l >= s^min - ln(n) / eps_T (uniform complexities)
};

std::string_view to_string(Theorem theorem) noexcept;
Theorem theorem_from_string(std::string_view name);
/// lower_uniform is the only lower bound.
bool is_lower_bound(Theorem theorem) noexcept;

/// Scalars a bound needs. verify() fills whatever is left empty from the run.
struct BoundRequest {
  Theorem theorem = Theorem::dynamic_i;
  std::optional<std::size_t> expert;  ///< compare against this expert; default: every expert
  std::optional<double> L;
  std::optional<double> K;
  std::optional<double> T;
  std::optional<double> k_i;
  std::optional<double> s_i;
  std::optional<double> s_min;
  std::optional<double> eps_T;
  std::optional<double> n;
};

/// Right-hand side of the requested bound. Throws InvalidArgument when a
/// needed parameter is missing and Unsupported for hierarchy_b. For
/// adaptive_ii the logarithm is taken of max(s_min, 1).
double bound_value(const BoundRequest& request);

/// adaptive_ii with s_min <= 1, where the logarithm had to be clamped.
bool bound_flagged(const BoundRequest& request) noexcept;

struct Envelope {
  double markov_threshold = 0.0;  ///< c * expected
  double markov_failure = 0.0;    ///< 1 / c (capped at 1)
  double chernoff_halfwidth = 0.0;  ///< sqrt(3 c expected)
  double chernoff_failure = 0.0;    ///< 2 exp(-c)
  bool chernoff_valid = false;      ///< expected >= 3c
};

/// High-probability envelopes for the realized loss around its expectation.
Envelope high_probability_envelope(double expected, double c);

struct BoundVerdict {
  Theorem theorem = Theorem::dynamic_i;
  bool applicable = false;
  double bound_value = 0.0;
  double measured = 0.0;
  double slack = 0.0;   ///< bound - measured (measured - bound for lower bounds)
  double margin = 0.0;  ///< statistical cushion when measured is estimated
  bool holds = false;
  bool flagged = false;
  std::optional<std::size_t> expert;
  std::string note;
};

/// One verdict per request. Requests whose learning-rate rule or algorithm
/// does not match the run come back with applicable = false.
std::vector<BoundVerdict> verify(const RunRecord& run, std::span<const BoundRequest> requests);

/// sum_t eps_t l_t, the FPL-vs-IFPL gap bound l_{1:T} - r_{1:T} <= sum_t eps_t l_t.
double fpl_ifpl_gap_bound(const RunRecord& run);

/// Right-hand side of the general lower bound for a fixed perturbation q and
/// uniform complexities:
///   min_i s^i_{1:T} - max_i q_i / eps_T + sum_t (1/eps_t - 1/eps_{t-1}) q[M(s_{<t})]
/// with 1/eps_0 = 0. `leaders[t]` is M(s_{<t}) (argmin of past loss, lowest
/// index on ties), `epsilons[t]` is eps_t.
double general_lower_bound(std::span<const double> final_sums, std::span<const double> q,
                           std::span<const double> epsilons, std::span<const std::size_t> leaders);

}  // namespace fpl
