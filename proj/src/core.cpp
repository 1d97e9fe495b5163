#include "fpl/core.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fpl/random.hpp"

namespace fpl {

namespace {

void require_finite(std::span<const double> values, const char* what) {
  for (double v : values) {
    if (std::isnan(v)) throw InvalidArgument(std::string(what) + " contains NaN");
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// ExpertClass

ExpertClass::ExpertClass(std::vector<double> complexities, Check check)
    : complexities_(std::move(complexities)), check_(check) {
  if (complexities_.empty()) throw InvalidArgument("expert class must not be empty");
  for (double k : complexities_) {
    if (!std::isfinite(k)) throw InvalidArgument("complexities must be finite");
    if (k < 0.0) throw InvalidArgument("complexities must be non-negative");
  }
  // Sum the smallest terms first.
  std::vector<double> terms(complexities_.size());
  std::transform(complexities_.begin(), complexities_.end(), terms.begin(),
                 [](double k) { return std::exp(-k); });
  std::sort(terms.begin(), terms.end());
  weight_sum_ = 0.0;
  for (double t : terms) weight_sum_ += t;
  max_complexity_ = *std::max_element(complexities_.begin(), complexities_.end());
  if (check_ == Check::strict && weight_sum_ > 1.0 + 1e-9) {
    throw InvalidArgument("sum of exp(-k) is " + std::to_string(weight_sum_) + ", must be <= 1");
  }
}

ExpertClass ExpertClass::uniform(std::size_t n) {
  if (n == 0) throw InvalidArgument("expert class must not be empty");
  return ExpertClass(std::vector<double>(n, std::log(static_cast<double>(n))));
}

ExpertClass ExpertClass::two_log(std::size_t n) {
  return from_generator(n, [](std::size_t i) { return 2.0 * std::log(static_cast<double>(i) + 1.0); });
}

ExpertClass ExpertClass::from_generator(std::size_t n, const std::function<double(std::size_t)>& k,
                                        Check check) {
  if (n == 0) throw InvalidArgument("truncation size must be positive");
  std::vector<double> values(n);
  for (std::size_t i = 0; i < n; ++i) values[i] = k(i + 1);
  return ExpertClass(std::move(values), check);
}

bool ExpertClass::is_uniform(double tol) const noexcept {
  const auto [lo, hi] = std::minmax_element(complexities_.begin(), complexities_.end());
  return *hi - *lo <= tol;
}

// ---------------------------------------------------------------------------
// LossVector, CumulativeState, PerturbationVector

LossVector::LossVector(std::vector<double> values) : values_(std::move(values)) {
  for (std::size_t i = 0; i < values_.size(); ++i) {
    const double v = values_[i];
    if (std::isnan(v)) throw InvalidArgument("loss " + std::to_string(i) + " is NaN");
    if (v < 0.0 || v > 1.0) {
      throw InvalidArgument("loss " + std::to_string(i) + " = " + std::to_string(v) + " outside [0, 1]");
    }
  }
}

CumulativeState::CumulativeState(std::size_t n) : sums_(n, 0.0), raw_(n, 0.0), compensation_(n, 0.0) {
  if (n == 0) throw InvalidArgument("cumulative state needs at least one expert");
}

void CumulativeState::add(const LossVector& loss) {
  if (loss.size() != sums_.size()) {
    throw InvalidArgument("loss vector has " + std::to_string(loss.size()) + " entries, expected " +
                          std::to_string(sums_.size()));
  }
  // Neumaier summation: raw_ carries the running sum, compensation_ the
  // accumulated rounding error. The reported total never decreases.
  for (std::size_t i = 0; i < sums_.size(); ++i) {
    const double x = loss[i];
    const double t = raw_[i] + x;
    compensation_[i] += std::abs(raw_[i]) >= x ? (raw_[i] - t) + x : (x - t) + raw_[i];
    raw_[i] = t;
    sums_[i] = std::max(sums_[i], raw_[i] + compensation_[i]);
  }
  ++step_;
  best_ = static_cast<std::size_t>(std::min_element(sums_.begin(), sums_.end()) - sums_.begin());
  min_loss_ = sums_[best_];
}

PerturbationVector::PerturbationVector(std::vector<double> values) : values_(std::move(values)) {
  for (double v : values_) {
    if (std::isnan(v)) throw InvalidArgument("perturbation contains NaN");
    if (v < 0.0) throw InvalidArgument("perturbations must be non-negative");
  }
}

// ---------------------------------------------------------------------------
// PerturbationSource

std::string_view to_string(PerturbationMode mode) noexcept {
  return mode == PerturbationMode::initial_only ? "initial_only" : "per_step";
}

PerturbationMode perturbation_mode_from_string(std::string_view name) {
  if (name == "initial_only" || name == "initial") return PerturbationMode::initial_only;
  if (name == "per_step") return PerturbationMode::per_step;
  throw InvalidArgument("unknown perturbation mode '" + std::string(name) + "'");
}

PerturbationSource::PerturbationSource(std::uint64_t seed, PerturbationMode mode) noexcept
    : seed_(seed), mode_(mode) {}

PerturbationVector PerturbationSource::sample(std::size_t n, std::uint64_t t) const {
  if (n == 0) throw InvalidArgument("cannot sample a perturbation for zero experts");
  if (t == 0) throw InvalidArgument("time steps start at 1");
  const random::UniformStream stream(random::derive_seed(seed_, random::Domain::perturbation));
  const std::uint64_t row = mode_ == PerturbationMode::initial_only ? 0 : t;
  std::vector<double> q(n);
  stream.fill(row, n, [&](std::size_t i, double u) { q[i] = random::exponential_from_uniform(u); });
  return PerturbationVector(std::move(q));
}

PerturbationVector sample_perturbation(const PerturbationSource& source, std::size_t n, std::uint64_t t) {
  return source.sample(n, t);
}

// ---------------------------------------------------------------------------
// Leader selection

std::size_t select_leader(std::span<const double> state, std::span<const double> k, std::span<const double> q,
                          double epsilon) {
  const std::size_t n = state.size();
  if (n == 0) throw InvalidArgument("empty expert class");
  if (std::isnan(epsilon)) throw InvalidArgument("learning rate is NaN");
  if (!(epsilon > 0.0)) throw InvalidArgument("learning rate must be positive");
  require_finite(state, "state");

  if (epsilon == kFollowTheLeader) {
    return static_cast<std::size_t>(std::min_element(state.begin(), state.end()) - state.begin());
  }
  if (k.size() != n || q.size() != n) throw InvalidArgument("state, complexities and perturbation differ in length");
  require_finite(k, "complexities");
  require_finite(q, "perturbation");

  std::size_t best = 0;
  double best_value = state[0] + (k[0] - q[0]) / epsilon;
  for (std::size_t i = 1; i < n; ++i) {
    const double v = state[i] + (k[i] - q[i]) / epsilon;
    if (v < best_value) {
      best_value = v;
      best = i;
    }
  }
  return best;
}

std::size_t select_leader(const CumulativeState& state, const ExpertClass& k, const PerturbationVector& q,
                          double epsilon) {
  return select_leader(state.sums(), k.complexities(), q.values(), epsilon);
}

// ---------------------------------------------------------------------------
// Decisions

SimplexWeights::SimplexWeights(std::vector<double> weights) : weights_(std::move(weights)) {
  if (weights_.empty()) throw InvalidArgument("simplex weights must not be empty");
  double total = 0.0;
  for (double w : weights_) {
    if (std::isnan(w) || w < 0.0) throw InvalidArgument("simplex weights must be non-negative");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw InvalidArgument("simplex weights sum to " + std::to_string(total) + ", not 1");
  }
}

double decision_loss(const Decision& decision, const LossVector& loss) {
  if (const auto* index = std::get_if<std::size_t>(&decision)) {
    if (*index >= loss.size()) throw InvalidArgument("decision index out of range");
    return loss[*index];
  }
  const auto& w = std::get<SimplexWeights>(decision);
  if (w.size() != loss.size()) throw InvalidArgument("decision and loss differ in length");
  double total = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) total += w[i] * loss[i];
  return total;
}

}  // namespace fpl
