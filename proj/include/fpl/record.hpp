#pragma once

// Per-step trace and summary of one run.

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fpl/bounds.hpp"
#include "fpl/core.hpp"
#include "fpl/schedules.hpp"

namespace fpl {

enum class Algorithm { fpl, ifpl_paired, fl, fl_penalized, hierarchy, deterministic_master };

std::string_view to_string(Algorithm algorithm) noexcept;
Algorithm algorithm_from_string(std::string_view name);

inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

struct StepRecord {
  std::uint64_t t = 0;
  std::size_t chosen = 0;
  double realized_loss = 0.0;          ///< u_t
  double epsilon = 0.0;                ///< eps_t (meta rate for the hierarchy)
  double expected_loss = kMissing;     ///< l_t
  double expected_variance = 0.0;      ///< variance of the l_t estimate (Monte Carlo only)
  double infeasible_loss = kMissing;   ///< r_t
  double infeasible_variance = 0.0;    ///< variance of the r_t estimate (Monte Carlo only)
  double best_loss = 0.0;              ///< s^min_{1:t}
};

struct RunRecord {
  Algorithm algorithm = Algorithm::fpl;
  ExpertClass experts = ExpertClass::uniform(1);
  ScheduleSpec schedule = schedule::InvSqrtT{};
  std::string weight_method;  ///< how l_t was measured
  bool expected_exact = true;  ///< false when l_t came from Monte Carlo

  std::vector<StepRecord> steps;
  std::vector<double> expert_totals;  ///< s^i_{1:T}

  std::uint64_t perturbation_seed = 0;
  std::uint64_t environment_seed = 0;
  std::string config_hash;

  std::vector<BoundVerdict> verdicts;
  /// Uniform-complexity lower bound for the fixed perturbation of an
  /// initial_only FPL run, compared with the realized loss.
  std::optional<double> general_lower_bound;

  std::uint64_t horizon() const noexcept { return steps.size(); }
  double realized_total() const;
  /// NaN when any l_t is missing.
  double expected_total() const;
  /// NaN when any r_t is missing.
  double infeasible_total() const;
  double expected_standard_error() const;
  double infeasible_standard_error() const;
  double best_total() const;
  std::size_t best_expert() const;
  double final_epsilon() const;
  bool has_expected() const;
  bool has_infeasible() const;
  bool all_verdicts_hold() const;
};

}  // namespace fpl
