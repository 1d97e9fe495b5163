#include "fpl/harness.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>

#include "fpl/algorithms.hpp"
#include "fpl/environments.hpp"
#include "parallel.hpp"

namespace fpl {

namespace {

PredictorKind predictor_kind(Algorithm a) {
  switch (a) {
    case Algorithm::fl:
      return PredictorKind::fl;
    case Algorithm::fl_penalized:
      return PredictorKind::fl_penalized;
    default:
      return PredictorKind::fpl;
  }
}

std::size_t lowest_argmin(std::span<const double> v) {
  return static_cast<std::size_t>(std::min_element(v.begin(), v.end()) - v.begin());
}

[[noreturn]] void rethrow_at(std::uint64_t t) {
  const std::string where = "step " + std::to_string(t) + ": ";
  try {
    throw;
  } catch (const FormatError& e) {
    throw FormatError(e.row(), where + e.what());
  } catch (const InvalidArgument& e) {
    throw InvalidArgument(where + e.what());
  } catch (const InvalidState& e) {
    throw InvalidState(where + e.what());
  } catch (const Unsupported& e) {
    throw Unsupported(where + e.what());
  }
}

double mc_variance(const WeightVector& w, const LossVector& s) {
  if (w.method != WeightMethod::monte_carlo || w.samples == 0) return 0.0;
  return step_loss_variance(w, s) / static_cast<double>(w.samples);
}

void run_hierarchy(const RunConfig& config, const Environment& env, RunRecord& rec, CumulativeState& totals) {
  HierarchicalFpl h(config.experts, PerturbationSource(config.perturbation_seed, config.mode));
  for (std::uint64_t t = 1; t <= env.horizon(); ++t) {
    try {
      const std::size_t chosen = h.decide();
      const LossVector s = env.next_loss(t);
      h.observe(s);
      totals.add(s);
      StepRecord step;
      step.t = t;
      step.chosen = chosen;
      step.realized_loss = s[chosen];
      step.epsilon = h.meta_epsilon();
      step.best_loss = totals.min_loss();
      rec.steps.push_back(step);
    } catch (...) {
      rethrow_at(t);
    }
  }
}

void run_single(const RunConfig& config, const Environment& env, RunRecord& rec, CumulativeState& totals) {
  const PerturbationSource source(config.perturbation_seed, config.mode);
  Predictor p(predictor_kind(config.algorithm), config.experts, config.schedule, source);
  const bool master = config.algorithm == Algorithm::deterministic_master;
  const bool paired = config.algorithm == Algorithm::ifpl_paired;

  // Fixed-perturbation lower bound bookkeeping (initial_only FPL, uniform k).
  const bool track_lower = config.algorithm == Algorithm::fpl && config.mode == PerturbationMode::initial_only &&
                           config.experts.is_uniform();
  std::vector<double> epsilons;
  std::vector<std::size_t> leaders;

  for (std::uint64_t t = 1; t <= env.horizon(); ++t) {
    try {
      const double eps = p.epsilon();
      std::optional<WeightVector> w;
      std::size_t chosen = 0;
      if (master) {
        const SimplexWeights sw = p.master_weights(config.estimator);
        WeightVector wv;
        wv.weights.assign(sw.values().begin(), sw.values().end());
        wv.method = resolve_method(config.estimator, p.size());
        w = std::move(wv);
      } else {
        if (config.measure || env.adaptive()) w = p.weights(config.estimator);
        chosen = p.decide();
      }
      if (track_lower) {
        epsilons.push_back(eps);
        leaders.push_back(lowest_argmin(p.cumulative().sums()));
      }
      const LossVector s = env.next_loss(t, w ? &*w : nullptr);

      StepRecord step;
      step.t = t;
      step.epsilon = eps;
      if (config.measure && w) {
        step.expected_loss = expected_step_loss(*w, s);
        step.expected_variance = mc_variance(*w, s);
      }
      if (paired) {
        const WeightVector r = p.infeasible_weights(s, config.estimator);
        step.infeasible_loss = expected_step_loss(r, s);
        step.infeasible_variance = mc_variance(r, s);
      }
      p.observe(s);
      totals.add(s);
      const PredictorStep& done = p.trace().back();
      step.chosen = master ? done.chosen : chosen;
      step.realized_loss = done.realized_loss;
      step.best_loss = totals.min_loss();
      rec.steps.push_back(step);
    } catch (...) {
      rethrow_at(t);
    }
  }

  if (track_lower && !epsilons.empty()) {
    const PerturbationVector q = source.sample(p.size(), 1);
    rec.general_lower_bound = general_lower_bound(totals.sums(), q.values(), epsilons, leaders);
  }
}

}  // namespace

RunRecord run_experiment(const RunConfig& config) {
  const std::size_t n = config.experts.size();
  const Environment env(config.environment, n);

  RunRecord rec;
  rec.algorithm = config.algorithm;
  rec.experts = config.experts;
  rec.schedule = config.schedule;
  rec.perturbation_seed = config.perturbation_seed;
  if (const auto* b = std::get_if<env::Bernoulli>(&config.environment.variant)) rec.environment_seed = b->seed;
  rec.config_hash = config.hash();

  const bool has_weights = config.measure && config.algorithm != Algorithm::hierarchy;
  if (has_weights) {
    const WeightMethod m = resolve_method(config.estimator, n);
    rec.weight_method = std::string(to_string(m));
    rec.expected_exact = m != WeightMethod::monte_carlo;
  } else {
    rec.weight_method = "none";
    rec.expected_exact = true;
  }
  rec.steps.reserve(env.horizon());

  CumulativeState totals(n);
  if (config.algorithm == Algorithm::hierarchy) {
    run_hierarchy(config, env, rec, totals);
  } else {
    run_single(config, env, rec, totals);
  }
  rec.expert_totals.assign(totals.sums().begin(), totals.sums().end());
  rec.verdicts = verify(rec, config.bounds);
  return rec;
}

std::vector<std::uint64_t> sweep_seeds(const RunConfig& config) {
  std::vector<std::uint64_t> seeds(config.sweep.seeds);
  std::iota(seeds.begin(), seeds.end(), config.perturbation_seed);
  return seeds;
}

bool SweepReport::all_hold() const {
  if (failed > 0) return false;
  if (!markov.holds || !chernoff.holds) return false;
  return std::all_of(runs.begin(), runs.end(), [](const SweepRun& r) { return r.verdicts_hold; });
}

namespace {

void finish_coverage(EnvelopeCoverage& cov) {
  if (!cov.applicable || cov.runs == 0) {
    cov.applicable = false;
    cov.holds = true;
    return;
  }
  const double N = static_cast<double>(cov.runs);
  const double p = cov.failure_mass;
  cov.fraction = static_cast<double>(cov.exceeded) / N;
  cov.allowance = p + 3.0 * std::sqrt(p * (1.0 - p) / N);
  cov.holds = cov.fraction <= cov.allowance;
}

}  // namespace

SweepReport sweep(const RunConfig& config, std::span<const std::uint64_t> seeds, unsigned workers) {
  SweepReport report;
  report.c = config.sweep.c;
  report.runs.resize(seeds.size());

  detail::parallel_chunks(seeds.size(), workers, [&](std::size_t i) {
    SweepRun& out = report.runs[i];
    out.seed = seeds[i];
    try {
      RunConfig c = with_seed(config, seeds[i]);
      c.estimator.workers = 1;
      const RunRecord rec = run_experiment(c);
      out.realized = rec.realized_total();
      out.best = rec.best_total();
      out.verdicts_hold = rec.all_verdicts_hold();
      if (rec.has_expected()) {
        out.expected = rec.expected_total();
        const Envelope env = high_probability_envelope(out.expected, report.c);
        out.markov_exceeded = out.realized >= env.markov_threshold;
        out.chernoff_valid = env.chernoff_valid;
        out.chernoff_exceeded = std::abs(out.realized - out.expected) >= env.chernoff_halfwidth;
      }
      out.ok = true;
    } catch (const std::exception& e) {
      out.error = e.what();
    }
  });

  const double c = report.c;
  report.markov.failure_mass = std::min(1.0, 1.0 / c);
  report.chernoff.failure_mass = std::min(1.0, 2.0 * std::exp(-c));
  report.markov.applicable = true;
  report.chernoff.applicable = config.mode == PerturbationMode::per_step;
  if (!report.chernoff.applicable) report.chernoff.note = "needs per_step perturbations";

  double sum = 0.0, sum_sq = 0.0, sum_expected = 0.0;
  std::size_t ok = 0, with_expected = 0;
  for (const auto& r : report.runs) {
    if (!r.ok) {
      ++report.failed;
      continue;
    }
    ++ok;
    sum += r.realized;
    sum_sq += r.realized * r.realized;
    if (std::isnan(r.expected)) continue;
    ++with_expected;
    sum_expected += r.expected;
    ++report.markov.runs;
    if (r.markov_exceeded) ++report.markov.exceeded;
    if (r.chernoff_valid) {
      ++report.chernoff.runs;
      if (r.chernoff_exceeded) ++report.chernoff.exceeded;
    }
  }
  if (ok > 0) {
    const double N = static_cast<double>(ok);
    report.mean_realized = sum / N;
    const double var = ok > 1 ? std::max(0.0, (sum_sq - N * report.mean_realized * report.mean_realized) / (N - 1.0))
                              : 0.0;
    report.se_realized = std::sqrt(var / N);
  }
  if (with_expected > 0) report.mean_expected = sum_expected / static_cast<double>(with_expected);
  if (report.markov.runs == 0) report.markov.note = "l_{1:T} not measured";
  if (report.chernoff.applicable && report.chernoff.runs == 0) report.chernoff.note = "no run with l_{1:T} >= 3c";
  finish_coverage(report.markov);
  finish_coverage(report.chernoff);
  return report;
}

}  // namespace fpl
