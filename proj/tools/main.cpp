// fpl: run, sweep and verify Follow the Perturbed Leader experiments.
//
// Exit status: 0 when every applicable verdict holds, 1 when one fails,
// 2 for usage, configuration or input errors.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "fpl/config.hpp"
#include "fpl/harness.hpp"
#include "fpl/probability.hpp"
#include "fpl/random.hpp"
#include "fpl/report.hpp"
#include "json.hpp"

namespace {

using json = nlohmann::ordered_json;

constexpr int kPass = 0;
constexpr int kFail = 1;
constexpr int kError = 2;

struct CommonOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  std::optional<std::size_t> samples;
  std::string format = "json";
  std::vector<std::string> overrides;
};

void add_common(CLI::App* app, CommonOptions& o) {
  app->add_option("--config", o.config_path, "configuration file")->check(CLI::ExistingFile);
  app->add_option("--seed", o.seed, "perturbation seed (overrides perturbation.seed)");
  app->add_option("--out", o.out_dir, "output directory (overrides output.dir)");
  app->add_option("--samples", o.samples, "Monte-Carlo samples (overrides measure.samples)");
  app->add_option("--format", o.format, "what goes to stdout")->check(CLI::IsMember({"csv", "json"}));
  app->add_option("--set", o.overrides, "override a configuration key, key=value (repeatable)");
}

fpl::RunConfig load_config(const CommonOptions& o) {
  fpl::ConfigEntries entries = o.config_path.empty() ? fpl::default_entries() : fpl::load_entries(o.config_path);
  for (const auto& item : o.overrides) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw fpl::InvalidArgument("--set expects key=value, got '" + item + "'");
    fpl::set_entry(entries, item.substr(0, eq), item.substr(eq + 1));
  }
  if (o.seed) fpl::set_entry(entries, "perturbation.seed", std::to_string(*o.seed));
  if (o.samples) fpl::set_entry(entries, "measure.samples", std::to_string(*o.samples));
  if (!o.out_dir.empty()) fpl::set_entry(entries, "output.dir", o.out_dir);
  return fpl::make_config(entries);
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw fpl::InvalidArgument("cannot write " + path.string());
  out << text;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw fpl::InvalidArgument("cannot read " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

int cmd_run(const CommonOptions& o) {
  const fpl::RunConfig config = load_config(o);
  const fpl::RunRecord run = fpl::run_experiment(config);
  std::ostringstream trace;
  fpl::write_trace_csv(trace, run);
  const std::string summary = fpl::summary_json(run, config);
  if (!config.output_dir.empty()) {
    const std::filesystem::path dir(config.output_dir);
    write_file(dir / "trace.csv", trace.str());
    write_file(dir / "summary.json", summary);
  }
  std::cout << (o.format == "csv" ? trace.str() : summary);
  return run.all_verdicts_hold() ? kPass : kFail;
}

int cmd_sweep(const CommonOptions& o) {
  const fpl::RunConfig config = load_config(o);
  const auto seeds = fpl::sweep_seeds(config);
  const fpl::SweepReport report = fpl::sweep(config, seeds, config.workers);
  const std::string as_json = fpl::sweep_json(report, config);
  const std::string as_csv = fpl::sweep_csv(report);
  if (!config.output_dir.empty()) {
    const std::filesystem::path dir(config.output_dir);
    write_file(dir / "sweep.json", as_json);
    write_file(dir / "sweep.csv", as_csv);
  }
  std::cout << (o.format == "csv" ? as_csv : as_json);
  for (const auto& r : report.runs) {
    if (!r.ok) std::cerr << "seed " << r.seed << " failed: " << r.error << "\n";
  }
  return report.all_hold() ? kPass : kFail;
}

bool same_verdict(const fpl::BoundVerdict& a, const fpl::BoundVerdict& b) {
  const auto close = [](double x, double y) {
    if (std::isnan(x) || std::isnan(y)) return std::isnan(x) && std::isnan(y);
    return std::abs(x - y) <= 1e-9 * std::max(1.0, std::abs(y));
  };
  return a.theorem == b.theorem && a.applicable == b.applicable && a.holds == b.holds && a.flagged == b.flagged &&
         (!a.applicable || (close(a.bound_value, b.bound_value) && close(a.measured, b.measured)));
}

int cmd_verify(const CommonOptions& o, const std::string& summary_path, const std::string& trace_path) {
  std::filesystem::path summary_file = summary_path, trace_file = trace_path;
  if (!o.out_dir.empty()) {
    if (summary_file.empty()) summary_file = std::filesystem::path(o.out_dir) / "summary.json";
    if (trace_file.empty()) trace_file = std::filesystem::path(o.out_dir) / "trace.csv";
  }
  if (summary_file.empty() || trace_file.empty()) {
    throw fpl::InvalidArgument("verify needs --out DIR or both --summary and --trace");
  }
  std::ifstream trace(trace_file, std::ios::binary);
  if (!trace) throw fpl::InvalidArgument("cannot read " + trace_file.string());
  const fpl::StoredRun stored = fpl::load_run(read_file(summary_file), trace);
  const auto recomputed = fpl::verify(stored.run, stored.config.bounds);

  bool consistent = recomputed.size() == stored.run.verdicts.size();
  for (std::size_t i = 0; consistent && i < recomputed.size(); ++i) {
    consistent = same_verdict(recomputed[i], stored.run.verdicts[i]);
  }
  fpl::RunRecord checked = stored.run;
  checked.verdicts = recomputed;
  if (o.format == "csv") {
    std::cout << fpl::verdicts_csv(recomputed);
  } else {
    json j;
    j["schema_version"] = fpl::kSummarySchemaVersion;
    j["consistent_with_summary"] = consistent;
    j["all_hold"] = checked.all_verdicts_hold();
    j["verdicts"] = json::parse(fpl::summary_json(checked, stored.config)).at("verdicts");
    std::cout << j.dump(2) << "\n";
  }
  if (!consistent) std::cerr << "stored verdicts differ from the recomputation\n";
  return consistent && checked.all_verdicts_hold() ? kPass : kFail;
}

int cmd_probe(const CommonOptions& o) {
  const fpl::RunConfig config = load_config(o);
  const std::size_t n = config.experts.size();
  std::vector<double> state = config.probe.state;
  if (state.empty()) {
    const fpl::random::UniformStream stream(config.perturbation_seed);
    state.resize(n);
    stream.fill(0, n, [&](std::size_t i, double u) { state[i] = 5.0 * u; });
  }
  const double eps = config.probe.epsilon;
  const std::size_t samples = config.estimator.samples;
  fpl::EstimatorOptions exact_options = config.estimator;
  exact_options.choice = fpl::EstimatorOptions::Choice::exact;
  const fpl::WeightMethod method = fpl::resolve_method(exact_options, state.size());
  const auto exact = fpl::selection_probabilities(state, eps, method);
  const auto mc = fpl::selection_probabilities_mc(state, eps, samples, config.perturbation_seed, config.workers);
  const double tv = fpl::total_variation(exact.weights, mc.weights);
  // Expected TV is at most sqrt(n / samples) / 2.
  const double tolerance =
      3.0 / std::sqrt(static_cast<double>(samples)) * std::max(1.0, std::sqrt(static_cast<double>(state.size())) / 2.0);
  const bool holds = tv <= tolerance;
  if (o.format == "csv") {
    std::cout << "expert,state,exact,monte_carlo\n";
    for (std::size_t i = 0; i < state.size(); ++i) {
      std::cout << i << ',' << fpl::format_number(state[i]) << ',' << fpl::format_number(exact.weights[i]) << ','
                << fpl::format_number(mc.weights[i]) << '\n';
    }
  } else {
    json j;
    j["schema_version"] = fpl::kSummarySchemaVersion;
    j["epsilon"] = eps;
    j["state"] = state;
    j["exact_method"] = std::string(fpl::to_string(method));
    j["exact"] = exact.weights;
    j["monte_carlo"] = mc.weights;
    j["samples"] = samples;
    j["total_variation"] = tv;
    j["tolerance"] = tolerance;
    j["holds"] = holds;
    std::cout << j.dump(2) << "\n";
  }
  return holds ? kPass : kFail;
}

int cmd_lemma1(const CommonOptions& o) {
  const fpl::RunConfig config = load_config(o);
  const auto& k = config.experts;
  const auto est = fpl::shifted_exp_max_estimate(k, config.estimator.samples, config.perturbation_seed, config.workers);
  const double upper = 1.0 + std::log(k.weight_sum());
  bool holds = est.mean <= upper + 3.0 * est.standard_error;
  std::optional<double> lower;
  if (k.is_uniform() && k.max_complexity() == 0.0) {
    lower = 0.57721 + std::log(static_cast<double>(k.size()));
    holds = holds && est.mean >= *lower - 3.0 * est.standard_error;
  }
  if (o.format == "csv") {
    std::cout << "n,weight_sum,mean,standard_error,samples,lower,upper,holds\n"
              << k.size() << ',' << fpl::format_number(k.weight_sum()) << ',' << fpl::format_number(est.mean) << ','
              << fpl::format_number(est.standard_error) << ',' << est.samples << ','
              << (lower ? fpl::format_number(*lower) : "") << ',' << fpl::format_number(upper) << ','
              << (holds ? 1 : 0) << '\n';
  } else {
    json j;
    j["schema_version"] = fpl::kSummarySchemaVersion;
    j["n"] = k.size();
    j["weight_sum"] = k.weight_sum();
    j["mean"] = est.mean;
    j["standard_error"] = est.standard_error;
    j["samples"] = est.samples;
    j["lower"] = lower ? json(*lower) : json(nullptr);
    j["upper"] = upper;
    j["holds"] = holds;
    std::cout << j.dump(2) << "\n";
  }
  return holds ? kPass : kFail;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Follow the Perturbed Leader experiments: runs, seed sweeps and bound verification."};
  app.footer(fpl::config_help());
  app.require_subcommand(1);

  CommonOptions run_o, sweep_o, verify_o, probe_o, lemma_o;
  std::string summary_path, trace_path;

  auto* run = app.add_subcommand("run", "run one experiment, write trace.csv and summary.json");
  add_common(run, run_o);
  auto* sw = app.add_subcommand("sweep", "repeat a run over perturbation seeds and check the envelopes");
  add_common(sw, sweep_o);
  auto* ver = app.add_subcommand("verify", "recompute the verdicts of a stored run");
  add_common(ver, verify_o);
  ver->add_option("--summary", summary_path, "summary.json of the run");
  ver->add_option("--trace", trace_path, "trace.csv of the run");
  auto* probe = app.add_subcommand("probe", "compare exact and Monte-Carlo selection probabilities");
  add_common(probe, probe_o);
  auto* lemma = app.add_subcommand("lemma1", "estimate E[max_i (q_i - k_i)] and compare with 1 + ln(sum exp(-k))");
  add_common(lemma, lemma_o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kPass : kError;
  }

  try {
    if (*run) return cmd_run(run_o);
    if (*sw) return cmd_sweep(sweep_o);
    if (*ver) return cmd_verify(verify_o, summary_path, trace_path);
    if (*probe) return cmd_probe(probe_o);
    if (*lemma) return cmd_lemma1(lemma_o);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kError;
  }
  return kError;
}
