#include <algorithm>
#include <cmath>
#include <map>

#include "fpl/algorithms.hpp"
#include "fpl/random.hpp"

namespace fpl {

std::size_t complexity_class(double k) {
  if (!std::isfinite(k) || k < 0.0) throw InvalidArgument("complexity must be finite and non-negative");
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(k)));
}

double meta_complexity(std::size_t K) {
  if (K == 0) throw InvalidArgument("complexity classes start at K = 1");
  return 0.5 + 2.0 * std::log(static_cast<double>(K));
}

namespace {

std::map<std::size_t, std::vector<std::size_t>> partition(const ExpertClass& experts) {
  std::map<std::size_t, std::vector<std::size_t>> classes;
  for (std::size_t i = 0; i < experts.size(); ++i) classes[complexity_class(experts[i])].push_back(i);
  return classes;
}

ExpertClass meta_class(const ExpertClass& experts) {
  std::vector<double> k;
  for (const auto& [K, members] : partition(experts)) k.push_back(meta_complexity(K));
  return ExpertClass(std::move(k));
}

}  // namespace

HierarchicalFpl::HierarchicalFpl(const ExpertClass& experts, PerturbationSource perturbation)
    : n_(experts.size()),
      meta_(PredictorKind::fpl, meta_class(experts), schedule::InvSqrtT{},
            PerturbationSource(random::derive_seed(perturbation.seed(), random::Domain::meta_perturbation),
                               perturbation.mode())) {
  for (auto& [K, members] : partition(experts)) {
    std::vector<double> k;
    k.reserve(members.size());
    for (std::size_t i : members) k.push_back(experts[i]);
    PerturbationSource source(random::derive_seed(perturbation.seed(), random::Domain::subclass, K),
                              perturbation.mode());
    Predictor predictor(PredictorKind::fpl, ExpertClass(std::move(k), experts.check()),
                        schedule::SqrtKOver2t{static_cast<double>(K)}, source);
    subclasses_.push_back(Subclass{K, std::move(members), std::move(predictor), {}, 0.0});
  }
}

std::size_t HierarchicalFpl::decide() {
  if (pending_) return *pending_;
  for (auto& sub : subclasses_) sub.predictor.decide();
  const std::size_t chosen_class = meta_.decide();
  meta_epsilon_ = meta_.epsilon();
  const Subclass& sub = subclasses_[chosen_class];
  pending_ = sub.members[*sub.predictor.pending_choice()];
  return *pending_;
}

void HierarchicalFpl::observe(const LossVector& loss) {
  if (loss.size() != n_) throw InvalidArgument("loss vector has the wrong length");
  if (!pending_) throw InvalidState("observe() called before decide()");
  std::vector<double> meta_loss;
  meta_loss.reserve(subclasses_.size());
  for (auto& sub : subclasses_) {
    std::vector<double> local(sub.members.size());
    for (std::size_t j = 0; j < local.size(); ++j) local[j] = loss[sub.members[j]];
    const std::size_t global = sub.members[*sub.predictor.pending_choice()];
    sub.predictor.observe(LossVector(std::move(local)));
    sub.choices.push_back(global);
    sub.realized_loss += loss[global];
    meta_loss.push_back(loss[global]);
  }
  meta_choices_.push_back(*meta_.pending_choice());
  meta_.observe(LossVector(std::move(meta_loss)));
  realized_loss_ += loss[*pending_];
  pending_.reset();
}

}  // namespace fpl
