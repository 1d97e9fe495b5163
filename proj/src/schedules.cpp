#include "fpl/schedules.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace fpl {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void require_positive(double value, const char* what) {
  if (!std::isfinite(value) || !(value > 0.0)) {
    throw InvalidArgument(std::string(what) + " must be positive and finite");
  }
}

void require_cover(double K, const ExpertClass& k, const char* rule) {
  if (k.max_complexity() > K * (1.0 + 1e-12)) {
    std::ostringstream msg;
    msg << rule << " needs K >= max complexity (" << k.max_complexity() << "), got K = " << K;
    throw InvalidArgument(msg.str());
  }
}

// s^i_{<t}, or zeros before the first observation.
std::span<const double> prefix_sums(const ScheduleHistory& h, std::size_t n, std::vector<double>& zeros) {
  if (h.cumulative != nullptr) {
    if (h.cumulative->size() != n) throw InvalidArgument("history and expert class differ in length");
    return h.cumulative->sums();
  }
  if (h.t > 1) throw InvalidState("rule needs the cumulative losses s_{<t}");
  zeros.assign(n, 0.0);
  return zeros;
}

}  // namespace

std::string schedule_name(const ScheduleSpec& spec) {
  return std::visit(Overloaded{
                        [](const schedule::Static&) { return std::string("static"); },
                        [](const schedule::InvSqrtT&) { return std::string("inv_sqrt_t"); },
                        [](const schedule::SqrtKOver2t&) { return std::string("sqrt_K_over_2t"); },
                        [](const schedule::SelfConfident&) { return std::string("self_confident"); },
                        [](const schedule::SelfConfidentActual&) { return std::string("self_confident_actual"); },
                        [](const schedule::AdaptiveSminGeneral&) { return std::string("adaptive_smin_general"); },
                        [](const schedule::AdaptiveSminUniform&) { return std::string("adaptive_smin_uniform"); },
                    },
                    spec);
}

std::optional<double> schedule_bound_K(const ScheduleSpec& spec) {
  return std::visit(Overloaded{
                        [](const schedule::SqrtKOver2t& s) -> std::optional<double> { return s.K; },
                        [](const schedule::SelfConfident& s) -> std::optional<double> { return s.K; },
                        [](const schedule::SelfConfidentActual& s) -> std::optional<double> { return s.K; },
                        [](const schedule::AdaptiveSminUniform& s) -> std::optional<double> { return s.K; },
                        [](const auto&) -> std::optional<double> { return std::nullopt; },
                    },
                    spec);
}

bool needs_expected_loss(const ScheduleSpec& spec) noexcept {
  return std::holds_alternative<schedule::SelfConfident>(spec);
}

void validate_schedule(const ScheduleSpec& spec, const ExpertClass& k) {
  std::visit(Overloaded{
                 [](const schedule::Static& s) { require_positive(s.epsilon, "static learning rate"); },
                 [](const schedule::InvSqrtT&) {},
                 [&](const schedule::SqrtKOver2t& s) {
                   require_positive(s.K, "K");
                   require_cover(s.K, k, "sqrt(K/2t)");
                 },
                 [&](const schedule::SelfConfident& s) {
                   require_positive(s.K, "K");
                   if (s.K != 1.0) require_cover(s.K, k, "self-confident rate");
                 },
                 [&](const schedule::SelfConfidentActual& s) {
                   require_positive(s.K, "K");
                   if (s.K != 1.0) require_cover(s.K, k, "self-confident rate");
                 },
                 [](const schedule::AdaptiveSminGeneral&) {},
                 [&](const schedule::AdaptiveSminUniform& s) {
                   require_positive(s.K, "K");
                   require_cover(s.K, k, "best-loss rate");
                 },
             },
             spec);
}

double next_epsilon(const ScheduleSpec& spec, const ScheduleHistory& history, const ExpertClass& k) {
  if (history.t == 0) throw InvalidArgument("time steps start at 1");
  validate_schedule(spec, k);
  const double t = static_cast<double>(history.t);
  return std::visit(
      Overloaded{
          [](const schedule::Static& s) { return s.epsilon; },
          [&](const schedule::InvSqrtT&) { return 1.0 / std::sqrt(t); },
          [&](const schedule::SqrtKOver2t& s) { return std::sqrt(s.K / (2.0 * t)); },
          [&](const schedule::SelfConfident& s) {
            if (!history.expected_loss_prefix) {
              throw InvalidState("self-confident rate needs the expected loss prefix");
            }
            return std::sqrt(s.K / (2.0 * (*history.expected_loss_prefix + 1.0)));
          },
          [&](const schedule::SelfConfidentActual& s) {
            return std::sqrt(s.K / (2.0 * (history.actual_loss_prefix + 1.0)));
          },
          [&](const schedule::AdaptiveSminGeneral&) {
            std::vector<double> zeros;
            const auto sums = prefix_sums(history, k.size(), zeros);
            double denominator = std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < k.size(); ++i) {
              const double ki = k[i];
              denominator = std::min(denominator, ki + std::sqrt(ki * ki + 2.0 * sums[i] + 2.0));
            }
            return 1.0 / denominator;
          },
          [&](const schedule::AdaptiveSminUniform& s) {
            double smin = 0.0;
            if (history.cumulative != nullptr) {
              smin = history.cumulative->min_loss();
            } else if (history.t > 1) {
              throw InvalidState("best-loss rate needs the cumulative losses s_{<t}");
            }
            const double clamp = smin > 0.0 ? std::min(1.0, std::sqrt(s.K / smin)) : 1.0;
            return std::sqrt(0.5) * clamp;
          },
      },
      spec);
}

LearningRate::LearningRate(ScheduleSpec spec, const ExpertClass& k) : spec_(std::move(spec)) {
  validate_schedule(spec_, k);
}

double LearningRate::next(const ScheduleHistory& history, const ExpertClass& k) {
  const double eps = next_epsilon(spec_, history, k);
  if (last_ && eps > *last_) {
    std::ostringstream msg;
    msg.precision(17);
    msg << schedule_name(spec_) << " learning rate increased at t=" << history.t << ": " << *last_ << " -> "
        << eps;
    throw InvalidState(msg.str());
  }
  last_ = eps;
  return eps;
}

}  // namespace fpl
