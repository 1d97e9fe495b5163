#include "fpl/bounds.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "fpl/errors.hpp"
#include "fpl/record.hpp"

namespace fpl {

namespace {

constexpr std::array<std::pair<Theorem, std::string_view>, 13> kTheoremNames{{
    {Theorem::static_i, "static_i"},
    {Theorem::static_ii, "static_ii"},
    {Theorem::static_iii, "static_iii"},
    {Theorem::dynamic_i, "dynamic_i"},
    {Theorem::dynamic_ii, "dynamic_ii"},
    {Theorem::selfconf_i, "selfconf_i"},
    {Theorem::selfconf_ii, "selfconf_ii"},
    {Theorem::adaptive_i, "adaptive_i"},
    {Theorem::adaptive_ii, "adaptive_ii"},
    {Theorem::hierarchy_a, "hierarchy_a"},
    {Theorem::hierarchy_b, "hierarchy_b"},
    {Theorem::ifpl_corollary, "ifpl_corollary"},
    {Theorem::lower_uniform, "lower_uniform"},
}};

double need(const std::optional<double>& value, const char* name, Theorem theorem) {
  if (!value) {
    throw InvalidArgument(std::string(to_string(theorem)) + " needs parameter " + name);
  }
  if (!std::isfinite(*value)) {
    throw InvalidArgument(std::string(to_string(theorem)) + ": parameter " + name + " is not finite");
  }
  return *value;
}

// Exact measurements get an absolute floating-point cushion.
constexpr double kExactMargin = 1e-8;

}  // namespace

std::string_view to_string(Theorem theorem) noexcept {
  for (const auto& [t, name] : kTheoremNames) {
    if (t == theorem) return name;
  }
  return "unknown";
}

Theorem theorem_from_string(std::string_view name) {
  for (const auto& [t, n] : kTheoremNames) {
    if (n == name) return t;
  }
  throw InvalidArgument("unknown theorem '" + std::string(name) + "'");
}

bool is_lower_bound(Theorem theorem) noexcept { return theorem == Theorem::lower_uniform; }

double bound_value(const BoundRequest& r) {
  const Theorem th = r.theorem;
  switch (th) {
    case Theorem::static_i: {
      const double s = need(r.s_i, "s_i", th), L = need(r.L, "L", th), k = need(r.k_i, "k_i", th);
      return s + std::sqrt(L) * (k + 1.0);
    }
    case Theorem::static_ii: {
      const double s = need(r.s_i, "s_i", th), L = need(r.L, "L", th), K = need(r.K, "K", th);
      return s + 2.0 * std::sqrt(L * K);
    }
    case Theorem::static_iii: {
      const double s = need(r.s_i, "s_i", th), L = need(r.L, "L", th), k = need(r.k_i, "k_i", th);
      return s + 2.0 * std::sqrt(L * k) + 3.0 * k;
    }
    case Theorem::dynamic_i: {
      const double s = need(r.s_i, "s_i", th), T = need(r.T, "T", th), k = need(r.k_i, "k_i", th);
      return s + std::sqrt(T) * (k + 2.0);
    }
    case Theorem::dynamic_ii: {
      const double s = need(r.s_i, "s_i", th), T = need(r.T, "T", th), K = need(r.K, "K", th);
      return s + 2.0 * std::sqrt(2.0 * T * K);
    }
    case Theorem::selfconf_i: {
      const double s = need(r.s_i, "s_i", th), k = need(r.k_i, "k_i", th);
      return s + (k + 1.0) * std::sqrt(2.0 * (s + 1.0)) + 2.0 * (k + 1.0) * (k + 1.0);
    }
    case Theorem::selfconf_ii: {
      const double s = need(r.s_i, "s_i", th), K = need(r.K, "K", th);
      return s + 2.0 * std::sqrt(2.0 * (s + 1.0) * K) + 8.0 * K;
    }
    case Theorem::adaptive_i: {
      const double s = need(r.s_i, "s_i", th), k = need(r.k_i, "k_i", th);
      return s + (k + 2.0) * std::sqrt(2.0 * s) + 2.0 * (k + 2.0) * (k + 2.0);
    }
    case Theorem::adaptive_ii: {
      const double m = need(r.s_min, "s_min", th), K = need(r.K, "K", th);
      return m + 2.0 * std::sqrt(2.0 * K * m) + 5.0 * K * std::log(std::max(m, 1.0)) + 3.0 * K + 6.0;
    }
    case Theorem::hierarchy_a: {
      const double s = need(r.s_i, "s_i", th), T = need(r.T, "T", th), k = need(r.k_i, "k_i", th);
      return s + std::sqrt(T) * (2.0 * std::sqrt(2.0 * (k + 1.0)) + 0.5 + 2.0 * std::log(k + 1.0) + 2.0);
    }
    case Theorem::hierarchy_b:
      throw Unsupported("hierarchy_b has no explicit constants");
    case Theorem::ifpl_corollary: {
      const double s = need(r.s_i, "s_i", th), k = need(r.k_i, "k_i", th), e = need(r.eps_T, "eps_T", th);
      if (e <= 0.0) throw InvalidArgument("ifpl_corollary needs eps_T > 0");
      return s + k / e;
    }
    case Theorem::lower_uniform: {
      const double m = need(r.s_min, "s_min", th), n = need(r.n, "n", th), e = need(r.eps_T, "eps_T", th);
      if (e <= 0.0) throw InvalidArgument("lower_uniform needs eps_T > 0");
      if (n < 1.0) throw InvalidArgument("lower_uniform needs n >= 1");
      return m - std::log(n) / e;
    }
  }
  throw InvalidArgument("unknown theorem");
}

bool bound_flagged(const BoundRequest& request) noexcept {
  return request.theorem == Theorem::adaptive_ii && request.s_min && *request.s_min <= 1.0;
}

Envelope high_probability_envelope(double expected, double c) {
  if (!(c > 0.0) || !std::isfinite(c)) throw InvalidArgument("envelope parameter c must be positive");
  if (!(expected >= 0.0) || !std::isfinite(expected)) throw InvalidArgument("expected loss must be non-negative");
  Envelope e;
  e.markov_threshold = c * expected;
  e.markov_failure = std::min(1.0, 1.0 / c);
  e.chernoff_halfwidth = std::sqrt(3.0 * c * expected);
  e.chernoff_failure = std::min(1.0, 2.0 * std::exp(-c));
  e.chernoff_valid = expected >= 3.0 * c;
  return e;
}

namespace {

struct Context {
  const RunRecord& run;
  double T;
  double n;
  double s_min;
  double eps_T;
  double max_k;
};

BoundVerdict inapplicable(Theorem theorem, std::string note) {
  BoundVerdict v;
  v.theorem = theorem;
  v.note = std::move(note);
  return v;
}

bool feasible_fpl(Algorithm a) {
  return a == Algorithm::fpl || a == Algorithm::ifpl_paired || a == Algorithm::deterministic_master;
}

template <typename Rule>
const Rule* rule(const RunRecord& run) {
  return std::get_if<Rule>(&run.schedule);
}

bool same(double a, double b) { return std::abs(a - b) <= 1e-9 * std::max(1.0, std::abs(b)); }

// Fills the per-expert fields and returns the tightest bound over the
// candidate experts, remembering which one it was.
BoundVerdict evaluate(const Context& ctx, const BoundRequest& base, double measured, double margin,
                      const std::vector<std::size_t>& candidates, std::string note = {}) {
  BoundVerdict v;
  v.theorem = base.theorem;
  v.applicable = true;
  v.measured = measured;
  v.margin = margin;
  v.note = std::move(note);
  const bool lower = is_lower_bound(base.theorem);
  bool first = true;
  for (std::size_t i : candidates) {
    BoundRequest r = base;
    if (!r.k_i) r.k_i = ctx.run.experts[i];
    if (!r.s_i) r.s_i = ctx.run.expert_totals[i];
    const double b = bound_value(r);
    if (first || (lower ? b > v.bound_value : b < v.bound_value)) {
      v.bound_value = b;
      v.expert = i;
      v.flagged = bound_flagged(r);
      first = false;
    }
  }
  if (first) {
    BoundRequest r = base;
    v.bound_value = bound_value(r);
    v.flagged = bound_flagged(r);
  }
  v.slack = lower ? measured - v.bound_value : v.bound_value - measured;
  v.holds = v.slack >= -margin;
  if (v.flagged && v.note.empty()) v.note = "log term clamped: s_min <= 1";
  return v;
}

BoundVerdict verify_one(const Context& ctx, BoundRequest r) {
  const RunRecord& run = ctx.run;
  const Theorem th = r.theorem;
  const std::size_t n = run.expert_totals.size();

  if (th == Theorem::hierarchy_b) return inapplicable(th, "asymptotic statement without explicit constants");
  if (r.expert && *r.expert >= n) return inapplicable(th, "expert index out of range");

  std::vector<std::size_t> candidates;
  if (r.expert) {
    candidates.push_back(*r.expert);
  } else {
    for (std::size_t i = 0; i < n; ++i) candidates.push_back(i);
  }

  if (!r.T) r.T = ctx.T;
  if (!r.n) r.n = ctx.n;
  if (!r.s_min) r.s_min = ctx.s_min;
  if (!r.eps_T) r.eps_T = ctx.eps_T;

  if (run.steps.empty()) return inapplicable(th, "empty run");

  if (th == Theorem::hierarchy_a) {
    if (run.algorithm != Algorithm::hierarchy) return inapplicable(th, "run is not hierarchical");
    // The bound is on the expectation; a single realization gets a 3-sigma
    // cushion for a sum of T variables in [0, 1].
    const double margin = 1.5 * std::sqrt(ctx.T);
    return evaluate(ctx, r, run.realized_total(), margin, candidates, "measured is the realized loss");
  }

  if (th == Theorem::ifpl_corollary) {
    if (run.algorithm != Algorithm::ifpl_paired) return inapplicable(th, "needs a paired IFPL run");
    if (!run.has_infeasible()) return inapplicable(th, "r_t not recorded");
    const double margin = run.expected_exact ? kExactMargin : 3.0 * run.infeasible_standard_error();
    return evaluate(ctx, r, run.infeasible_total(), margin, candidates);
  }

  if (!feasible_fpl(run.algorithm)) return inapplicable(th, "run is not FPL");
  if (!run.has_expected()) return inapplicable(th, "l_t not recorded");
  const double measured = run.expected_total();
  const double margin = run.expected_exact ? kExactMargin : 3.0 * run.expected_standard_error();

  switch (th) {
    case Theorem::static_i:
    case Theorem::static_ii:
    case Theorem::static_iii: {
      const auto* s = rule<schedule::Static>(run);
      if (!s) return inapplicable(th, "schedule is not static");
      const double e2 = s->epsilon * s->epsilon;
      if (th == Theorem::static_i) {
        if (!r.L) r.L = 1.0 / e2;
        if (!same(s->epsilon, 1.0 / std::sqrt(*r.L))) return inapplicable(th, "epsilon != 1/sqrt(L)");
      } else if (th == Theorem::static_ii) {
        if (!r.K && r.L) r.K = e2 * *r.L;
        if (!r.K) r.K = ctx.max_k;
        if (!r.L) r.L = *r.K / e2;
        if (*r.K + 1e-12 < ctx.max_k) return inapplicable(th, "K < max k");
        if (!same(s->epsilon, std::sqrt(*r.K / *r.L))) return inapplicable(th, "epsilon != sqrt(K/L)");
      } else {
        // eps = sqrt(k_i / L) ties L to one expert's complexity.
        std::vector<std::size_t> matching;
        for (std::size_t i : candidates) {
          const double k = run.experts[i];
          if (k <= 0.0) continue;
          const double L = r.L ? *r.L : k / e2;
          if (same(s->epsilon, std::sqrt(k / L)) && L >= measured) matching.push_back(i);
        }
        if (matching.empty()) return inapplicable(th, "no expert with epsilon = sqrt(k_i/L) and L >= l_{1:T}");
        if (!r.L) r.L = run.experts[matching.front()] / e2;
        return evaluate(ctx, r, measured, margin, matching);
      }
      if (*r.L < measured) return inapplicable(th, "precondition L >= l_{1:T} fails");
      return evaluate(ctx, r, measured, margin, candidates);
    }
    case Theorem::dynamic_i:
      if (!rule<schedule::InvSqrtT>(run)) return inapplicable(th, "schedule is not 1/sqrt(t)");
      return evaluate(ctx, r, measured, margin, candidates);
    case Theorem::dynamic_ii: {
      const auto* s = rule<schedule::SqrtKOver2t>(run);
      if (!s) return inapplicable(th, "schedule is not sqrt(K/2t)");
      if (!r.K) r.K = s->K;
      if (!same(*r.K, s->K)) return inapplicable(th, "K differs from the schedule's K");
      if (*r.K + 1e-12 < ctx.max_k) return inapplicable(th, "K < max k");
      return evaluate(ctx, r, measured, margin, candidates);
    }
    case Theorem::selfconf_i: {
      const auto* s = rule<schedule::SelfConfident>(run);
      if (!s) return inapplicable(th, "schedule is not self-confident on expected loss");
      if (!same(s->K, 1.0)) return inapplicable(th, "needs K = 1");
      return evaluate(ctx, r, measured, margin, candidates);
    }
    case Theorem::selfconf_ii: {
      const auto* s = rule<schedule::SelfConfident>(run);
      if (!s) return inapplicable(th, "schedule is not self-confident on expected loss");
      if (!r.K) r.K = s->K;
      if (!same(*r.K, s->K)) return inapplicable(th, "K differs from the schedule's K");
      if (*r.K + 1e-12 < ctx.max_k) return inapplicable(th, "K < max k");
      return evaluate(ctx, r, measured, margin, candidates);
    }
    case Theorem::adaptive_i:
      if (!rule<schedule::AdaptiveSminGeneral>(run)) return inapplicable(th, "schedule is not adaptive_smin_general");
      return evaluate(ctx, r, measured, margin, candidates);
    case Theorem::adaptive_ii: {
      const auto* s = rule<schedule::AdaptiveSminUniform>(run);
      if (!s) return inapplicable(th, "schedule is not adaptive_smin_uniform");
      if (!r.K) r.K = s->K;
      if (!same(*r.K, s->K)) return inapplicable(th, "K differs from the schedule's K");
      if (*r.K + 1e-12 < ctx.max_k) return inapplicable(th, "K < max k");
      return evaluate(ctx, r, measured, margin, {});
    }
    case Theorem::lower_uniform:
      if (!run.experts.is_uniform(1e-12)) return inapplicable(th, "complexities are not uniform");
      return evaluate(ctx, r, measured, margin, {});
    default:
      return inapplicable(th, "unsupported");
  }
}

}  // namespace

std::vector<BoundVerdict> verify(const RunRecord& run, std::span<const BoundRequest> requests) {
  if (run.expert_totals.size() != run.experts.size()) {
    throw InvalidArgument("run has " + std::to_string(run.expert_totals.size()) + " expert totals for " +
                          std::to_string(run.experts.size()) + " experts");
  }
  const Context ctx{run,
                    static_cast<double>(run.horizon()),
                    static_cast<double>(run.experts.size()),
                    run.best_total(),
                    run.final_epsilon(),
                    run.experts.max_complexity()};
  std::vector<BoundVerdict> out;
  out.reserve(requests.size());
  for (const auto& r : requests) {
    try {
      out.push_back(verify_one(ctx, r));
    } catch (const InvalidArgument& e) {
      out.push_back(inapplicable(r.theorem, e.what()));
    }
  }
  return out;
}

double fpl_ifpl_gap_bound(const RunRecord& run) {
  double total = 0.0;
  for (const auto& step : run.steps) {
    if (std::isnan(step.expected_loss)) throw InvalidArgument("gap bound needs l_t at every step");
    total += step.epsilon * step.expected_loss;
  }
  return total;
}

double general_lower_bound(std::span<const double> final_sums, std::span<const double> q,
                           std::span<const double> epsilons, std::span<const std::size_t> leaders) {
  if (final_sums.empty() || final_sums.size() != q.size()) throw InvalidArgument("length mismatch");
  if (epsilons.size() != leaders.size()) throw InvalidArgument("one leader per step required");
  if (epsilons.empty()) throw InvalidArgument("need at least one step");
  double correction = 0.0;
  double previous_inverse = 0.0;
  for (std::size_t t = 0; t < epsilons.size(); ++t) {
    if (!(epsilons[t] > 0.0)) throw InvalidArgument("learning rates must be positive");
    if (leaders[t] >= q.size()) throw InvalidArgument("leader index out of range");
    const double inverse = 1.0 / epsilons[t];
    correction += (inverse - previous_inverse) * q[leaders[t]];
    previous_inverse = inverse;
  }
  const double best = *std::min_element(final_sums.begin(), final_sums.end());
  const double q_max = *std::max_element(q.begin(), q.end());
  return best - q_max * previous_inverse + correction;
}

// ---------------------------------------------------------------------------
// RunRecord

namespace {

constexpr std::array<std::pair<Algorithm, std::string_view>, 6> kAlgorithmNames{{
    {Algorithm::fpl, "fpl"},
    {Algorithm::ifpl_paired, "ifpl_paired"},
    {Algorithm::fl, "fl"},
    {Algorithm::fl_penalized, "fl_penalized"},
    {Algorithm::hierarchy, "hierarchy"},
    {Algorithm::deterministic_master, "deterministic_master"},
}};

}  // namespace

std::string_view to_string(Algorithm algorithm) noexcept {
  for (const auto& [a, name] : kAlgorithmNames) {
    if (a == algorithm) return name;
  }
  return "unknown";
}

Algorithm algorithm_from_string(std::string_view name) {
  for (const auto& [a, n] : kAlgorithmNames) {
    if (n == name) return a;
  }
  throw InvalidArgument("unknown algorithm '" + std::string(name) + "'");
}

double RunRecord::realized_total() const {
  double total = 0.0;
  for (const auto& s : steps) total += s.realized_loss;
  return total;
}

double RunRecord::expected_total() const {
  double total = 0.0;
  for (const auto& s : steps) total += s.expected_loss;
  return total;
}

double RunRecord::infeasible_total() const {
  double total = 0.0;
  for (const auto& s : steps) total += s.infeasible_loss;
  return total;
}

double RunRecord::expected_standard_error() const {
  double variance = 0.0;
  for (const auto& s : steps) variance += s.expected_variance;
  return std::sqrt(variance);
}

double RunRecord::infeasible_standard_error() const {
  double variance = 0.0;
  for (const auto& s : steps) variance += s.infeasible_variance;
  return std::sqrt(variance);
}

bool RunRecord::all_verdicts_hold() const {
  return std::all_of(verdicts.begin(), verdicts.end(), [](const BoundVerdict& v) { return !v.applicable || v.holds; });
}

double RunRecord::best_total() const {
  if (expert_totals.empty()) return 0.0;
  return *std::min_element(expert_totals.begin(), expert_totals.end());
}

std::size_t RunRecord::best_expert() const {
  if (expert_totals.empty()) return 0;
  return static_cast<std::size_t>(std::min_element(expert_totals.begin(), expert_totals.end()) -
                                  expert_totals.begin());
}

double RunRecord::final_epsilon() const {
  return steps.empty() ? std::numeric_limits<double>::quiet_NaN() : steps.back().epsilon;
}

bool RunRecord::has_expected() const {
  return !steps.empty() &&
         std::none_of(steps.begin(), steps.end(), [](const StepRecord& s) { return std::isnan(s.expected_loss); });
}

bool RunRecord::has_infeasible() const {
  return !steps.empty() &&
         std::none_of(steps.begin(), steps.end(), [](const StepRecord& s) { return std::isnan(s.infeasible_loss); });
}

}  // namespace fpl
