#include "fpl/algorithms.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "fpl/random.hpp"

namespace fpl {

std::string_view to_string(PredictorKind kind) noexcept {
  switch (kind) {
    case PredictorKind::fpl:
      return "fpl";
    case PredictorKind::ifpl:
      return "ifpl";
    case PredictorKind::fl:
      return "fl";
    case PredictorKind::fl_penalized:
      return "fl_penalized";
  }
  return "?";
}

Predictor::Predictor(PredictorKind kind, ExpertClass experts, ScheduleSpec schedule, PerturbationSource perturbation)
    : kind_(kind),
      experts_(std::move(experts)),
      rate_(std::move(schedule), experts_),
      perturbation_(perturbation),
      cumulative_(experts_.size()) {}

double Predictor::epsilon() { return step_epsilon(); }

double Predictor::step_epsilon() {
  if (epsilon_) return *epsilon_;
  if (kind_ == PredictorKind::fl || kind_ == PredictorKind::fl_penalized) {
    epsilon_ = kFollowTheLeader;
    return *epsilon_;
  }
  ScheduleHistory history;
  history.t = current_step();
  history.expected_loss_prefix = expected_prefix_;
  history.actual_loss_prefix = realized_prefix_;
  history.cumulative = &cumulative_;
  epsilon_ = rate_.next(history, experts_);
  return *epsilon_;
}

PerturbationVector Predictor::perturbation_vector() const {
  if (kind_ == PredictorKind::fl || kind_ == PredictorKind::fl_penalized) return PerturbationVector::zeros(size());
  return perturbation_.sample(size(), current_step());
}

namespace {

std::size_t leader_for(PredictorKind kind, std::span<const double> sums, const ExpertClass& k,
                       const PerturbationVector& q, double epsilon) {
  switch (kind) {
    case PredictorKind::fl:
      return select_leader(sums, k.complexities(), q.values(), kFollowTheLeader);
    case PredictorKind::fl_penalized:
      // argmin s + k: unit rate, zero perturbation.
      return select_leader(sums, k.complexities(), q.values(), 1.0);
    case PredictorKind::fpl:
    case PredictorKind::ifpl:
      break;
  }
  return select_leader(sums, k.complexities(), q.values(), epsilon);
}

WeightVector point_mass(std::size_t n, std::size_t index) {
  WeightVector w;
  w.weights.assign(n, 0.0);
  w.weights[index] = 1.0;
  w.method = WeightMethod::inclusion_exclusion;
  return w;
}

std::vector<double> including(std::span<const double> sums, const LossVector& current) {
  if (current.size() != sums.size()) throw InvalidArgument("current loss has the wrong length");
  std::vector<double> out(sums.begin(), sums.end());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += current[i];
  return out;
}

}  // namespace

std::size_t Predictor::decide() {
  if (kind_ == PredictorKind::ifpl) throw InvalidState("the infeasible predictor must be given the current loss");
  if (choice_) return *choice_;
  const double eps = step_epsilon();
  choice_ = leader_for(kind_, cumulative_.sums(), experts_, perturbation_vector(), eps);
  return *choice_;
}

std::size_t Predictor::decide_infeasible(const LossVector& current) {
  const double eps = step_epsilon();
  const std::vector<double> through_t = including(cumulative_.sums(), current);
  const std::size_t index = leader_for(kind_, through_t, experts_, perturbation_vector(), eps);
  if (kind_ == PredictorKind::ifpl) choice_ = index;
  return index;
}

WeightVector Predictor::weights_for(std::span<const double> sums, const EstimatorOptions& options) {
  const double eps = step_epsilon();
  if (kind_ == PredictorKind::fl || kind_ == PredictorKind::fl_penalized) {
    return point_mass(size(), leader_for(kind_, sums, experts_, PerturbationVector::zeros(size()), eps));
  }
  EstimatorOptions per_step = options;
  per_step.seed = random::derive_seed(options.seed, random::Domain::monte_carlo, current_step());
  return estimate_weights(penalized_state(sums, experts_, eps), eps, per_step);
}

WeightVector Predictor::weights(const EstimatorOptions& options) { return weights_for(cumulative_.sums(), options); }

WeightVector Predictor::infeasible_weights(const LossVector& current, const EstimatorOptions& options) {
  const std::vector<double> through_t = including(cumulative_.sums(), current);
  return weights_for(through_t, options);
}

SimplexWeights Predictor::master_weights(const EstimatorOptions& options) {
  WeightVector w = weights(options);
  const double total = std::accumulate(w.weights.begin(), w.weights.end(), 0.0);
  if (!(total > 0.0)) throw InvalidState("selection probabilities vanished");
  for (double& x : w.weights) x /= total;
  master_ = w;
  return SimplexWeights(w.weights);
}

void Predictor::observe(const LossVector& loss) {
  if (loss.size() != size()) {
    throw InvalidArgument("loss vector has " + std::to_string(loss.size()) + " entries, expected " +
                          std::to_string(size()));
  }
  PredictorStep record;
  record.t = current_step();
  record.epsilon = step_epsilon();
  if (choice_) {
    record.chosen = *choice_;
    record.realized_loss = loss[*choice_];
  } else if (master_) {
    record.chosen = static_cast<std::size_t>(
        std::max_element(master_->weights.begin(), master_->weights.end()) - master_->weights.begin());
    record.realized_loss = expected_step_loss(*master_, loss);
  } else {
    throw InvalidState("observe() called before a decision for step " + std::to_string(record.t));
  }

  if (needs_expected_loss(rate_.spec())) {
    const auto& options = std::get<schedule::SelfConfident>(rate_.spec()).estimator;
    const double ell = master_ && master_->method != WeightMethod::monte_carlo
                           ? expected_step_loss(*master_, loss)
                           : expected_step_loss(weights(options), loss);
    record.expected_loss = ell;
    expected_prefix_ += ell;
  }
  realized_prefix_ += record.realized_loss;
  trace_.push_back(record);
  cumulative_.add(loss);
  epsilon_.reset();
  choice_.reset();
  master_.reset();
}

// ---------------------------------------------------------------------------

LossVector AbsoluteLossRound::losses() const {
  if (!(observation >= 0.0 && observation <= 1.0)) throw InvalidArgument("observation must lie in [0, 1]");
  std::vector<double> s(predictions.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double y = predictions[i];
    if (!(y >= 0.0 && y <= 1.0)) throw InvalidArgument("expert predictions must lie in [0, 1]");
    s[i] = std::abs(observation - y);
  }
  return LossVector(std::move(s));
}

MasterOutcome master_absolute_loss(const SimplexWeights& weights, const AbsoluteLossRound& round) {
  const LossVector s = round.losses();
  if (weights.size() != s.size()) throw InvalidArgument("weights and predictions differ in length");
  MasterOutcome out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    out.prediction += weights[i] * round.predictions[i];
    out.expected_loss += weights[i] * s[i];
  }
  out.prediction = std::clamp(out.prediction, 0.0, 1.0);
  out.loss = std::abs(round.observation - out.prediction);
  if (out.loss > out.expected_loss + 1e-12) {
    throw InvalidState("master loss " + std::to_string(out.loss) + " exceeds mixture loss " +
                       std::to_string(out.expected_loss));
  }
  return out;
}

}  // namespace fpl
