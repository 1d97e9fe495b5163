#pragma once

// Predictors over a finite expert class.
//
// A Predictor runs one step at a time: decide() (or master_weights()) for step
// t = step() + 1, then observe(s_t). The learning rate for a step is fixed the
// first time anything asks for it and is shared by the feasible decision, the
// infeasible (IFPL) decision and the exact weights of that step.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "fpl/core.hpp"
#include "fpl/probability.hpp"
#include "fpl/schedules.hpp"

namespace fpl {

enum class PredictorKind {
  fpl,           ///< Follow the Perturbed Leader.
  ifpl,          ///< Infeasible FPL: sees s_t before deciding. Analysis only.
  fl,            ///< Follow the Leader on past loss alone.
  fl_penalized,  ///< Follow the Leader on past loss plus complexity.
};

std::string_view to_string(PredictorKind kind) noexcept;

struct PredictorStep {
  std::uint64_t t = 0;
  std::size_t chosen = 0;
  double epsilon = 0.0;
  double realized_loss = 0.0;             ///< u_t
  std::optional<double> expected_loss;    ///< l_t, when it was computed
};

class Predictor {
 public:
  /// The schedule is ignored for the two FL kinds. A self-confident schedule
  /// carries the estimator used to accumulate l_{<t}.
  Predictor(PredictorKind kind, ExpertClass experts, ScheduleSpec schedule, PerturbationSource perturbation);

  PredictorKind kind() const noexcept { return kind_; }
  const ExpertClass& experts() const noexcept { return experts_; }
  const CumulativeState& cumulative() const noexcept { return cumulative_; }
  const PerturbationSource& perturbation() const noexcept { return perturbation_; }
  const ScheduleSpec& schedule() const noexcept { return rate_.spec(); }
  std::size_t size() const noexcept { return experts_.size(); }

  /// Number of observed loss vectors.
  std::uint64_t step() const noexcept { return cumulative_.step(); }
  /// Step the next decision is for.
  std::uint64_t current_step() const noexcept { return cumulative_.step() + 1; }

  /// eps_t for the current step (kFollowTheLeader for the FL kinds).
  double epsilon();
  /// Perturbation q used at the current step.
  PerturbationVector perturbation_vector() const;

  /// Feasible decision for the current step. Not available for kind ifpl.
  std::size_t decide();
  /// Infeasible decision argmin { s_{1:t} + (k - q)/eps_t } with the same eps_t
  /// and q the feasible decision of this step uses.
  std::size_t decide_infeasible(const LossVector& current);

  /// Distribution of decide() at the current step, w_t^i = P[I_t = i].
  WeightVector weights(const EstimatorOptions& options);
  /// Distribution of decide_infeasible(current), i.e. the weights behind r_t.
  WeightVector infeasible_weights(const LossVector& current, const EstimatorOptions& options);

  /// Deterministic simplex decision w_t. The weights are remembered so that
  /// observe() can charge the mixture loss w_t . s_t.
  SimplexWeights master_weights(const EstimatorOptions& options);

  /// Records u_t for whatever was decided this step and advances the state.
  void observe(const LossVector& loss);

  double expected_loss_prefix() const noexcept { return expected_prefix_; }
  double realized_loss_prefix() const noexcept { return realized_prefix_; }
  const std::vector<PredictorStep>& trace() const noexcept { return trace_; }
  /// Choice made at the current step, if any.
  std::optional<std::size_t> pending_choice() const noexcept { return choice_; }

 private:
  double step_epsilon();
  WeightVector weights_for(std::span<const double> sums, const EstimatorOptions& options);

  PredictorKind kind_;
  ExpertClass experts_;
  LearningRate rate_;
  PerturbationSource perturbation_;
  CumulativeState cumulative_;

  std::optional<double> epsilon_;
  std::optional<std::size_t> choice_;
  std::optional<WeightVector> master_;

  double expected_prefix_ = 0.0;
  double realized_prefix_ = 0.0;
  std::vector<PredictorStep> trace_;
};

/// One round of prediction with absolute loss: expert predictions y in [0,1]
/// and the observation x in [0,1].
struct AbsoluteLossRound {
  std::vector<double> predictions;
  double observation = 0.0;

  /// s^i = |x - y^i|
  LossVector losses() const;
};

struct MasterOutcome {
  double prediction = 0.0;     ///< w . y
  double loss = 0.0;           ///< |x - w . y|
  double expected_loss = 0.0;  ///< sum_i w^i |x - y^i|
};

/// Deterministic master prediction. Throws InvalidState if the convexity
/// guarantee loss <= expected_loss fails.
MasterOutcome master_absolute_loss(const SimplexWeights& weights, const AbsoluteLossRound& round);

// ---------------------------------------------------------------------------
// Two-level hierarchy.

/// Complexity class of an expert: the K >= 1 with K - 1 < k <= K (k = 0 joins K = 1).
std::size_t complexity_class(double k);
/// Meta complexity 1/2 + 2 ln K of subclass K.
double meta_complexity(std::size_t K);

/// FPL over meta experts, one per non-empty complexity class. Meta expert K
/// is an FPL over its class with eps_t = sqrt(K / 2t); the meta layer runs
/// with eps_t = 1/sqrt(t) and charges each meta expert the loss its own
/// choice actually incurred.
class HierarchicalFpl {
 public:
  struct Subclass {
    std::size_t K = 0;
    std::vector<std::size_t> members;  ///< global expert indices
    Predictor predictor;
    std::vector<std::size_t> choices;  ///< global index chosen at each step
    double realized_loss = 0.0;        ///< running sum of the losses its choices incurred
  };

  HierarchicalFpl(const ExpertClass& experts, PerturbationSource perturbation);

  std::size_t size() const noexcept { return n_; }
  std::uint64_t step() const noexcept { return meta_.step(); }

  /// Global index of the expert followed at the current step.
  std::size_t decide();
  void observe(const LossVector& loss);

  const std::vector<Subclass>& subclasses() const noexcept { return subclasses_; }
  const Predictor& meta() const noexcept { return meta_; }
  /// Subclass position chosen by the meta layer at each step.
  const std::vector<std::size_t>& meta_choices() const noexcept { return meta_choices_; }
  double realized_loss() const noexcept { return realized_loss_; }
  /// Meta learning rate used at the most recent decision.
  double meta_epsilon() const noexcept { return meta_epsilon_; }

 private:
  std::size_t n_;
  std::vector<Subclass> subclasses_;
  Predictor meta_;
  std::optional<std::size_t> pending_;
  std::vector<std::size_t> meta_choices_;
  double realized_loss_ = 0.0;
  double meta_epsilon_ = 0.0;
};

}  // namespace fpl
