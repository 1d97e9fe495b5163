#pragma once

// Experiment configuration: a flat text file of `section.key = value` lines.
// Blank lines and lines starting with '#' are ignored. Every key has a
// default (see config_reference()); unknown keys are rejected.

#include <cstdint>
#include <istream>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fpl/bounds.hpp"
#include "fpl/core.hpp"
#include "fpl/environments.hpp"
#include "fpl/probability.hpp"
#include "fpl/record.hpp"
#include "fpl/schedules.hpp"

namespace fpl {

struct ConfigKey {
  std::string_view key;
  std::string_view default_value;
  std::string_view help;
};

/// Every recognised key with its default and a one-line description.
std::span<const ConfigKey> config_reference();

/// The reference table formatted for --help.
std::string config_help();

/// Raw key/value pairs with all defaults filled in.
using ConfigEntries = std::map<std::string, std::string, std::less<>>;

ConfigEntries default_entries();
/// Parses the file format on top of the defaults. Throws FormatError with the
/// line number for syntax errors and unknown keys.
ConfigEntries parse_entries(std::istream& in);
ConfigEntries load_entries(const std::string& path);
/// Sets one key; throws InvalidArgument for unknown keys.
void set_entry(ConfigEntries& entries, std::string_view key, std::string value);
/// Canonical text form: sorted `key = value` lines. Parsing it gives back the same entries.
std::string to_text(const ConfigEntries& entries);
/// 64-bit FNV-1a of the canonical text without output.dir and run.workers, as 16 hex digits.
std::string config_hash(const ConfigEntries& entries);

struct SweepSettings {
  std::size_t seeds = 100;  ///< runs use perturbation seeds seed, seed + 1, ...
  double c = 3.0;           ///< envelope parameter
};

struct ProbeSettings {
  std::vector<double> state;  ///< penalized state; empty draws one from the seed
  double epsilon = 1.0;
};

/// Typed view of the entries, validated across fields.
struct RunConfig {
  ConfigEntries entries;

  ExpertClass experts = ExpertClass::uniform(2);
  ScheduleSpec schedule = schedule::InvSqrtT{};
  EnvironmentSpec environment;
  Algorithm algorithm = Algorithm::fpl;
  PerturbationMode mode = PerturbationMode::per_step;
  std::uint64_t perturbation_seed = 0;

  bool measure = true;          ///< compute l_t (and r_t in paired mode)
  EstimatorOptions estimator;   ///< how l_t is computed
  std::vector<BoundRequest> bounds;
  unsigned workers = 1;

  SweepSettings sweep;
  ProbeSettings probe;
  std::string output_dir;

  std::uint64_t horizon() const noexcept { return environment.horizon; }
  std::string hash() const { return config_hash(entries); }
};

/// Builds and validates the typed configuration. Throws InvalidArgument.
RunConfig make_config(const ConfigEntries& entries);

/// Same configuration with a different perturbation seed.
RunConfig with_seed(const RunConfig& config, std::uint64_t seed);

}  // namespace fpl
