#include "fpl/config.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "fpl/errors.hpp"

namespace fpl {

namespace {

constexpr std::array<ConfigKey, 27> kReference{{
    {"experts.kind", "uniform", "uniform (k = ln n) | two_log (k_i = 2 ln(i+1)) | zero (k = 0) | list"},
    {"experts.n", "2", "number of experts (truncation size for two_log)"},
    {"experts.complexities", "", "explicit complexities for experts.kind = list, comma separated"},
    {"experts.check", "strict", "strict (sum exp(-k) <= 1) | relaxed"},
    {"schedule.kind", "inv_sqrt_t",
     "static | inv_sqrt_t | sqrt_K_over_2t | self_confident | self_confident_actual | adaptive_smin_general | "
     "adaptive_smin_uniform"},
    {"schedule.epsilon", "0.1", "learning rate of the static schedule"},
    {"schedule.K", "", "K of the rules that take one; empty: max k (1 for the self-confident rules)"},
    {"schedule.estimator", "auto", "how the self-confident rule obtains l_t: auto | exact | inclusion_exclusion | quadrature | mc"},
    {"environment.kind", "bernoulli", "fl_killer | bernoulli | greedy_adversary | playback"},
    {"environment.probabilities", "", "bernoulli loss probabilities, comma separated; empty: 0.5 each"},
    {"environment.seed", "1", "seed of the bernoulli environment"},
    {"environment.path", "", "loss file for playback"},
    {"run.horizon", "1000", "number of steps T"},
    {"run.algorithm", "fpl", "fpl | ifpl_paired | fl | fl_penalized | hierarchy | deterministic_master"},
    {"run.workers", "1", "worker threads for sweeps and Monte-Carlo estimates"},
    {"perturbation.mode", "per_step", "per_step | initial_only"},
    {"perturbation.seed", "0", "perturbation seed (first seed of a sweep)"},
    {"measure.method", "auto",
     "how l_t and r_t are measured: auto | exact | inclusion_exclusion | quadrature | mc | none; "
     "auto samples above n = 256, exact never does"},
    {"measure.samples", "100000", "Monte-Carlo samples per step (and for probe / lemma1)"},
    {"bounds.requests", "all", "bounds to verify: all | none | comma separated theorem names"},
    {"bounds.expert", "", "compare against this expert only (0-based); empty: every expert"},
    {"bounds.L", "", "loss budget L of the static bounds; empty: derived from epsilon"},
    {"sweep.seeds", "100", "number of seeds in a sweep"},
    {"sweep.c", "3", "envelope parameter c (Markov threshold c*l, Chernoff width sqrt(3 c l))"},
    {"probe.epsilon", "1", "learning rate for probe"},
    {"probe.state", "", "penalized state for probe, comma separated; empty: random in [0, 5)"},
    {"output.dir", "", "directory for trace.csv and summary.json; empty: no files"},
}};

const ConfigKey* find_key(std::string_view key) {
  for (const auto& k : kReference) {
    if (k.key == key) return &k;
  }
  return nullptr;
}

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_list(std::string_view text) {
  std::vector<std::string> out;
  std::string current;
  for (char c : text) {
    if (c == ',' || c == ' ' || c == '\t') {
      if (!current.empty()) out.push_back(std::move(current));
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  if (!current.empty()) out.push_back(std::move(current));
  return out;
}

double parse_double(std::string_view key, std::string_view text) {
  double v = 0.0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end || !std::isfinite(v)) {
    throw InvalidArgument(std::string(key) + ": not a number: '" + std::string(text) + "'");
  }
  return v;
}

std::uint64_t parse_uint(std::string_view key, std::string_view text) {
  std::uint64_t v = 0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end) {
    throw InvalidArgument(std::string(key) + ": not a non-negative integer: '" + std::string(text) + "'");
  }
  return v;
}

std::vector<double> parse_doubles(std::string_view key, std::string_view text) {
  std::vector<double> out;
  for (const auto& item : split_list(text)) out.push_back(parse_double(key, item));
  return out;
}

const std::string& get(const ConfigEntries& e, std::string_view key) {
  const auto it = e.find(key);
  if (it == e.end()) throw InvalidArgument("missing key " + std::string(key));
  return it->second;
}

EstimatorOptions::Choice parse_choice(std::string_view key, const std::string& value) {
  try {
    return estimator_from_string(value);
  } catch (const InvalidArgument&) {
    throw InvalidArgument(std::string(key) + ": unknown estimator '" + value + "'");
  }
}

ExpertClass make_experts(const ConfigEntries& e) {
  const std::string& kind = get(e, "experts.kind");
  const std::string& check_name = get(e, "experts.check");
  if (check_name != "strict" && check_name != "relaxed") {
    throw InvalidArgument("experts.check must be strict or relaxed");
  }
  auto check = check_name == "strict" ? ExpertClass::Check::strict : ExpertClass::Check::relaxed;
  const std::uint64_t n = parse_uint("experts.n", get(e, "experts.n"));
  if (kind == "uniform") {
    if (n == 0) throw InvalidArgument("experts.n must be positive");
    return ExpertClass(std::vector<double>(n, std::log(static_cast<double>(n))), check);
  }
  if (kind == "two_log") {
    return ExpertClass::from_generator(
        n, [](std::size_t i) { return 2.0 * std::log(static_cast<double>(i) + 1.0); }, check);
  }
  if (kind == "zero") {
    if (n == 0) throw InvalidArgument("experts.n must be positive");
    return ExpertClass(std::vector<double>(n, 0.0), ExpertClass::Check::relaxed);
  }
  if (kind == "list") {
    auto k = parse_doubles("experts.complexities", get(e, "experts.complexities"));
    if (k.empty()) throw InvalidArgument("experts.kind = list needs experts.complexities");
    return ExpertClass(std::move(k), check);
  }
  throw InvalidArgument("experts.kind: unknown kind '" + kind + "'");
}

ScheduleSpec make_schedule(const ConfigEntries& e, const ExpertClass& experts) {
  const std::string& kind = get(e, "schedule.kind");
  const std::string& k_text = get(e, "schedule.K");
  const double max_k = experts.max_complexity();
  const double K_default = max_k > 0.0 ? max_k : 1.0;
  const auto K_or = [&](double fallback) { return k_text.empty() ? fallback : parse_double("schedule.K", k_text); };
  if (kind == "static") return schedule::Static{parse_double("schedule.epsilon", get(e, "schedule.epsilon"))};
  if (kind == "inv_sqrt_t") return schedule::InvSqrtT{};
  if (kind == "sqrt_K_over_2t") return schedule::SqrtKOver2t{K_or(K_default)};
  if (kind == "self_confident") {
    schedule::SelfConfident s{K_or(1.0), {}};
    s.estimator.choice = parse_choice("schedule.estimator", get(e, "schedule.estimator"));
    s.estimator.samples = parse_uint("measure.samples", get(e, "measure.samples"));
    s.estimator.seed = parse_uint("perturbation.seed", get(e, "perturbation.seed"));
    return s;
  }
  if (kind == "self_confident_actual") return schedule::SelfConfidentActual{K_or(1.0)};
  if (kind == "adaptive_smin_general") return schedule::AdaptiveSminGeneral{};
  if (kind == "adaptive_smin_uniform") return schedule::AdaptiveSminUniform{K_or(K_default)};
  throw InvalidArgument("schedule.kind: unknown rule '" + kind + "'");
}

EnvironmentSpec make_environment(const ConfigEntries& e, std::size_t n) {
  EnvironmentSpec spec;
  spec.horizon = parse_uint("run.horizon", get(e, "run.horizon"));
  if (spec.horizon == 0) throw InvalidArgument("run.horizon must be positive");
  const std::string& kind = get(e, "environment.kind");
  if (kind == "fl_killer") {
    spec.variant = env::FlKiller{};
  } else if (kind == "bernoulli") {
    env::Bernoulli b;
    b.probabilities = parse_doubles("environment.probabilities", get(e, "environment.probabilities"));
    if (b.probabilities.empty()) b.probabilities.assign(n, 0.5);
    b.seed = parse_uint("environment.seed", get(e, "environment.seed"));
    spec.variant = std::move(b);
  } else if (kind == "greedy_adversary") {
    spec.variant = env::GreedyAdversary{};
  } else if (kind == "playback") {
    const std::string& path = get(e, "environment.path");
    if (path.empty()) throw InvalidArgument("environment.kind = playback needs environment.path");
    spec.variant = env::Playback{path};
  } else {
    throw InvalidArgument("environment.kind: unknown kind '" + kind + "'");
  }
  return spec;
}

std::vector<BoundRequest> make_bounds(const ConfigEntries& e) {
  const std::string& text = get(e, "bounds.requests");
  std::vector<Theorem> theorems;
  if (text == "all") {
    for (auto th : {Theorem::static_i, Theorem::static_ii, Theorem::static_iii, Theorem::dynamic_i,
                    Theorem::dynamic_ii, Theorem::selfconf_i, Theorem::selfconf_ii, Theorem::adaptive_i,
                    Theorem::adaptive_ii, Theorem::hierarchy_a, Theorem::ifpl_corollary, Theorem::lower_uniform}) {
      theorems.push_back(th);
    }
  } else if (text != "none" && !text.empty()) {
    for (const auto& name : split_list(text)) theorems.push_back(theorem_from_string(name));
  }
  std::optional<std::size_t> expert;
  if (const auto& x = get(e, "bounds.expert"); !x.empty()) expert = parse_uint("bounds.expert", x);
  std::optional<double> L;
  if (const auto& x = get(e, "bounds.L"); !x.empty()) L = parse_double("bounds.L", x);
  std::vector<BoundRequest> out;
  for (Theorem th : theorems) {
    BoundRequest r;
    r.theorem = th;
    r.expert = expert;
    r.L = L;
    out.push_back(r);
  }
  return out;
}

}  // namespace

std::span<const ConfigKey> config_reference() { return kReference; }

std::string config_help() {
  std::ostringstream out;
  out << "Configuration keys (file lines `key = value`, '#' starts a comment line):\n";
  for (const auto& k : config_reference()) {
    out << "  " << k.key << " = " << (k.default_value.empty() ? "(empty)" : k.default_value) << "\n      "
        << k.help << "\n";
  }
  return out.str();
}

ConfigEntries default_entries() {
  ConfigEntries e;
  for (const auto& k : config_reference()) e.emplace(std::string(k.key), std::string(k.default_value));
  return e;
}

void set_entry(ConfigEntries& entries, std::string_view key, std::string value) {
  if (find_key(key) == nullptr) throw InvalidArgument("unknown configuration key '" + std::string(key) + "'");
  entries[std::string(key)] = trim(value);
}

ConfigEntries parse_entries(std::istream& in) {
  ConfigEntries e = default_entries();
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped.front() == '#') continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos) throw FormatError(row, "expected `key = value`");
    const std::string key = trim(std::string_view(stripped).substr(0, eq));
    const std::string value = trim(std::string_view(stripped).substr(eq + 1));
    if (find_key(key) == nullptr) throw FormatError(row, "unknown key '" + key + "'");
    e[key] = value;
  }
  return e;
}

ConfigEntries load_entries(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open config file '" + path + "'");
  return parse_entries(in);
}

std::string to_text(const ConfigEntries& entries) {
  std::string out;
  for (const auto& [key, value] : entries) out += key + " = " + value + "\n";
  return out;
}

std::string config_hash(const ConfigEntries& entries) {
  // Where the output goes and how many threads compute it do not change results.
  ConfigEntries relevant = entries;
  relevant.erase("output.dir");
  relevant.erase("run.workers");
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : to_text(relevant)) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

RunConfig make_config(const ConfigEntries& entries) {
  RunConfig c;
  c.entries = default_entries();
  for (const auto& [key, value] : entries) set_entry(c.entries, key, value);
  const ConfigEntries& e = c.entries;

  c.experts = make_experts(e);
  c.algorithm = algorithm_from_string(get(e, "run.algorithm"));
  c.schedule = make_schedule(e, c.experts);
  c.environment = make_environment(e, c.experts.size());
  c.mode = perturbation_mode_from_string(get(e, "perturbation.mode"));
  c.perturbation_seed = parse_uint("perturbation.seed", get(e, "perturbation.seed"));
  c.workers = static_cast<unsigned>(std::max<std::uint64_t>(1, parse_uint("run.workers", get(e, "run.workers"))));

  const std::string& method = get(e, "measure.method");
  c.measure = method != "none";
  if (c.measure) c.estimator.choice = parse_choice("measure.method", method);
  c.estimator.samples = parse_uint("measure.samples", get(e, "measure.samples"));
  if (c.estimator.samples == 0) throw InvalidArgument("measure.samples must be positive");
  c.estimator.seed = c.perturbation_seed;
  c.estimator.workers = c.workers;

  c.bounds = make_bounds(e);
  c.sweep.seeds = parse_uint("sweep.seeds", get(e, "sweep.seeds"));
  c.sweep.c = parse_double("sweep.c", get(e, "sweep.c"));
  if (c.sweep.seeds == 0) throw InvalidArgument("sweep.seeds must be positive");
  if (!(c.sweep.c > 0.0)) throw InvalidArgument("sweep.c must be positive");
  c.probe.state = parse_doubles("probe.state", get(e, "probe.state"));
  c.probe.epsilon = parse_double("probe.epsilon", get(e, "probe.epsilon"));
  if (!(c.probe.epsilon > 0.0)) throw InvalidArgument("probe.epsilon must be positive");
  c.output_dir = get(e, "output.dir");

  // Cross-field checks.
  const std::size_t n = c.experts.size();
  if (const auto* b = std::get_if<env::Bernoulli>(&c.environment.variant)) {
    if (b->probabilities.size() != n) {
      throw InvalidArgument("environment.probabilities has " + std::to_string(b->probabilities.size()) +
                            " entries for " + std::to_string(n) + " experts");
    }
    for (double p : b->probabilities) {
      if (!(p >= 0.0 && p <= 1.0)) throw InvalidArgument("environment.probabilities must lie in [0, 1]");
    }
  }
  if (std::holds_alternative<env::FlKiller>(c.environment.variant) && n != 2) {
    throw InvalidArgument("fl_killer needs experts.n = 2");
  }
  if (std::holds_alternative<env::GreedyAdversary>(c.environment.variant)) {
    if (c.mode != PerturbationMode::per_step) {
      throw InvalidArgument("the greedy adversary requires perturbation.mode = per_step");
    }
    if (c.algorithm == Algorithm::hierarchy) {
      throw InvalidArgument("the greedy adversary needs selection probabilities, which the hierarchy does not expose");
    }
  }
  const bool perturbed = c.algorithm == Algorithm::fpl || c.algorithm == Algorithm::ifpl_paired ||
                         c.algorithm == Algorithm::deterministic_master;
  if (perturbed) validate_schedule(c.schedule, c.experts);
  if (c.algorithm == Algorithm::deterministic_master) {
    EstimatorOptions exact = c.estimator;
    if (!c.measure) exact.choice = EstimatorOptions::Choice::automatic;
    if (resolve_method(exact, n) == WeightMethod::monte_carlo) {
      throw Unsupported("the deterministic master needs exact selection probabilities; n = " + std::to_string(n) +
                        " is beyond the exact methods");
    }
  }
  if (c.algorithm == Algorithm::ifpl_paired && !c.measure) {
    throw InvalidArgument("ifpl_paired needs measure.method other than none");
  }
  return c;
}

RunConfig with_seed(const RunConfig& config, std::uint64_t seed) {
  RunConfig c = config;
  c.entries["perturbation.seed"] = std::to_string(seed);
  c.perturbation_seed = seed;
  c.estimator.seed = seed;
  if (auto* s = std::get_if<schedule::SelfConfident>(&c.schedule)) s->estimator.seed = seed;
  return c;
}

}  // namespace fpl
