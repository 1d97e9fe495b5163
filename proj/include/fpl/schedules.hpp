#pragma once

// Learning-rate rules. Each rule is a pure function of the run history; the
// LearningRate wrapper additionally enforces that the sequence never
// increases.

#include <cstdint>
#include <optional>
#include <string>
#include <variant>

#include "fpl/core.hpp"
#include "fpl/probability.hpp"

namespace fpl {

namespace schedule {

/// eps_t = epsilon.
struct Static {
  double epsilon = 0.1;
};
/// eps_t = 1 / sqrt(t).
struct InvSqrtT {};
/// eps_t = sqrt(K / 2t); requires k_i <= K.
struct SqrtKOver2t {
  double K = 1.0;
};
/// eps_t = sqrt(K / (2 (l_{<t} + 1))) with l the expected loss of the
/// predictor. K = 1 is the complexity-free form and accepts any class.
struct SelfConfident {
  double K = 1.0;
  EstimatorOptions estimator{};
};
/// As SelfConfident but driven by the realized loss u_{<t}.
struct SelfConfidentActual {
  double K = 1.0;
};
/// eps_t = 1 / min_i { k_i + sqrt(k_i^2 + 2 s^i_{<t} + 2) }.
struct AdaptiveSminGeneral {};
/// eps_t = sqrt(1/2) * min{1, sqrt(K / s^min_{<t})}; requires k_i <= K.
struct AdaptiveSminUniform {
  double K = 1.0;
};

}  // namespace schedule

using ScheduleSpec = std::variant<schedule::Static, schedule::InvSqrtT, schedule::SqrtKOver2t, schedule::SelfConfident,
                                  schedule::SelfConfidentActual, schedule::AdaptiveSminGeneral,
                                  schedule::AdaptiveSminUniform>;

std::string schedule_name(const ScheduleSpec& spec);

/// The K parameter of the rule, if it has one.
std::optional<double> schedule_bound_K(const ScheduleSpec& spec);

/// True when the rule reads the expected loss prefix l_{<t}.
bool needs_expected_loss(const ScheduleSpec& spec) noexcept;

/// Checks parameters and the pairing precondition max_i k_i <= K.
void validate_schedule(const ScheduleSpec& spec, const ExpertClass& k);

struct ScheduleHistory {
  std::uint64_t t = 1;
  std::optional<double> expected_loss_prefix;
  double actual_loss_prefix = 0.0;
  const CumulativeState* cumulative = nullptr;
};

/// eps_t for the given history. Throws InvalidState when the rule needs a
/// statistic the history does not carry.
double next_epsilon(const ScheduleSpec& spec, const ScheduleHistory& history, const ExpertClass& k);

/// Stateful evaluator that fails fast if eps_t > eps_{t-1}.
class LearningRate {
 public:
  LearningRate(ScheduleSpec spec, const ExpertClass& k);

  double next(const ScheduleHistory& history, const ExpertClass& k);

  const ScheduleSpec& spec() const noexcept { return spec_; }
  std::optional<double> last() const noexcept { return last_; }

 private:
  ScheduleSpec spec_;
  std::optional<double> last_;
};

}  // namespace fpl
