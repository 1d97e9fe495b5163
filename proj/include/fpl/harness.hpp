#pragma once

// Experiment runner and seed sweeps.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fpl/config.hpp"
#include "fpl/record.hpp"

namespace fpl {

/// Runs decide -> (adaptive environment: generate) -> observe for t = 1..T
/// and verifies the configured bounds. Deterministic given the config.
/// Errors are rethrown with the failing step prefixed.
RunRecord run_experiment(const RunConfig& config);

struct SweepRun {
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  double realized = kMissing;  ///< u_{1:T}
  double expected = kMissing;  ///< l_{1:T}
  double best = kMissing;      ///< s^min_{1:T}
  bool markov_exceeded = false;    ///< u >= c l
  bool chernoff_valid = false;     ///< l >= 3c
  bool chernoff_exceeded = false;  ///< |u - l| >= sqrt(3 c l)
  bool verdicts_hold = false;
};

struct EnvelopeCoverage {
  bool applicable = false;
  std::size_t runs = 0;       ///< runs the envelope was checked on
  std::size_t exceeded = 0;
  double fraction = 0.0;
  double failure_mass = 0.0;  ///< 1/c or 2 exp(-c)
  double allowance = 0.0;     ///< failure_mass + 3 binomial standard errors
  bool holds = true;
  std::string note;
};

struct SweepReport {
  double c = 3.0;
  std::vector<SweepRun> runs;
  std::size_t failed = 0;
  double mean_realized = kMissing;
  double se_realized = kMissing;
  double mean_expected = kMissing;
  EnvelopeCoverage markov;
  EnvelopeCoverage chernoff;

  /// No failed run, every per-run verdict holds and both envelopes hold.
  bool all_hold() const;
};

/// Perturbation seeds of a sweep: seed, seed + 1, ..., seed + sweep.seeds - 1.
std::vector<std::uint64_t> sweep_seeds(const RunConfig& config);

/// Independent runs, one per seed, spread over `workers` threads. A failing
/// seed is recorded and the sweep continues.
SweepReport sweep(const RunConfig& config, std::span<const std::uint64_t> seeds, unsigned workers);

}  // namespace fpl
