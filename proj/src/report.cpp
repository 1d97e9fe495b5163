#include "fpl/report.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "json.hpp"

namespace fpl {

using json = nlohmann::ordered_json;

std::string format_number(double value) {
  if (std::isnan(value)) return {};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

namespace {

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

double number_from(const json& j) { return j.is_null() ? kMissing : j.get<double>(); }

json verdict_json(const BoundVerdict& v) {
  json j;
  j["theorem"] = std::string(to_string(v.theorem));
  j["applicable"] = v.applicable;
  j["bound_value"] = number_or_null(v.bound_value);
  j["measured"] = number_or_null(v.measured);
  j["slack"] = number_or_null(v.slack);
  j["margin"] = number_or_null(v.margin);
  j["holds"] = v.holds;
  j["flagged"] = v.flagged;
  j["expert"] = v.expert ? json(*v.expert) : json(nullptr);
  j["note"] = v.note;
  return j;
}

BoundVerdict verdict_from(const json& j) {
  BoundVerdict v;
  v.theorem = theorem_from_string(j.at("theorem").get<std::string>());
  v.applicable = j.at("applicable").get<bool>();
  v.bound_value = number_from(j.at("bound_value"));
  v.measured = number_from(j.at("measured"));
  v.slack = number_from(j.at("slack"));
  v.margin = number_from(j.at("margin"));
  v.holds = j.at("holds").get<bool>();
  v.flagged = j.at("flagged").get<bool>();
  if (!j.at("expert").is_null()) v.expert = j.at("expert").get<std::size_t>();
  v.note = j.at("note").get<std::string>();
  return v;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  for (char c : line) {
    if (c == ',') {
      out.push_back(std::move(field));
      field.clear();
    } else {
      field.push_back(c);
    }
  }
  out.push_back(std::move(field));
  return out;
}

double parse_field(const std::string& text, std::size_t row, bool optional) {
  if (text.empty()) {
    if (optional) return kMissing;
    throw FormatError(row, "missing value");
  }
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) throw FormatError(row, "not a number: '" + text + "'");
  return v;
}

std::uint64_t parse_count(const std::string& text, std::size_t row) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || ec != std::errc() || ptr != text.data() + text.size()) {
    throw FormatError(row, "not a non-negative integer: '" + text + "'");
  }
  return v;
}

constexpr const char* kHeader = "t,chosen,u_t,eps_t,ell_t,r_t,smin_t";

}  // namespace

void write_trace_csv(std::ostream& out, const RunRecord& run) {
  out << "# config_hash=" << run.config_hash << " perturbation_seed=" << run.perturbation_seed
      << " environment_seed=" << run.environment_seed << '\n';
  out << kHeader << '\n';
  for (const auto& s : run.steps) {
    out << s.t << ',' << s.chosen << ',' << format_number(s.realized_loss) << ',' << format_number(s.epsilon) << ','
        << format_number(s.expected_loss) << ',' << format_number(s.infeasible_loss) << ','
        << format_number(s.best_loss) << '\n';
  }
}

TraceFile read_trace_csv(std::istream& in) {
  TraceFile trace;
  std::string line;
  std::size_t row = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.front() == '#') {
      std::istringstream fields(line.substr(1));
      std::string item;
      while (fields >> item) {
        const auto eq = item.find('=');
        if (eq == std::string::npos) continue;
        const std::string key = item.substr(0, eq), value = item.substr(eq + 1);
        if (key == "config_hash") trace.config_hash = value;
        if (key == "perturbation_seed") trace.perturbation_seed = parse_count(value, row);
        if (key == "environment_seed") trace.environment_seed = parse_count(value, row);
      }
      continue;
    }
    if (!header) {
      if (line != kHeader) throw FormatError(row, "expected header '" + std::string(kHeader) + "'");
      header = true;
      continue;
    }
    const auto f = split_csv(line);
    if (f.size() != 7) throw FormatError(row, "expected 7 fields, found " + std::to_string(f.size()));
    StepRecord s;
    s.t = parse_count(f[0], row);
    s.chosen = parse_count(f[1], row);
    s.realized_loss = parse_field(f[2], row, false);
    s.epsilon = parse_field(f[3], row, false);
    s.expected_loss = parse_field(f[4], row, true);
    s.infeasible_loss = parse_field(f[5], row, true);
    s.best_loss = parse_field(f[6], row, false);
    if (s.t != trace.steps.size() + 1) throw FormatError(row, "steps must be consecutive from 1");
    trace.steps.push_back(s);
  }
  if (!header) throw FormatError(row, "trace has no header row");
  return trace;
}

std::string summary_json(const RunRecord& run, const RunConfig& config) {
  json j;
  j["schema_version"] = kSummarySchemaVersion;
  j["config_hash"] = run.config_hash;
  json entries = json::object();
  for (const auto& [k, v] : config.entries) entries[k] = v;
  j["config"] = entries;
  j["algorithm"] = std::string(to_string(run.algorithm));
  j["schedule"] = schedule_name(run.schedule);
  j["weight_method"] = run.weight_method;
  j["expected_exact"] = run.expected_exact;
  j["horizon"] = run.horizon();
  j["n"] = run.experts.size();
  j["perturbation_seed"] = run.perturbation_seed;
  j["environment_seed"] = run.environment_seed;

  json losses;
  losses["realized_total"] = run.realized_total();
  losses["expected_total"] = run.has_expected() ? json(run.expected_total()) : json(nullptr);
  losses["expected_standard_error"] = run.expected_standard_error();
  losses["infeasible_total"] = run.has_infeasible() ? json(run.infeasible_total()) : json(nullptr);
  losses["infeasible_standard_error"] = run.infeasible_standard_error();
  losses["best_total"] = run.best_total();
  losses["best_expert"] = run.best_expert();
  losses["final_epsilon"] = number_or_null(run.final_epsilon());
  losses["expert_totals"] = run.expert_totals;
  j["losses"] = losses;

  if (run.has_expected() && run.has_infeasible()) {
    j["fpl_ifpl_gap"] = {{"measured", run.expected_total() - run.infeasible_total()},
                         {"bound", fpl_ifpl_gap_bound(run)}};
  }
  j["general_lower_bound"] = run.general_lower_bound ? json(*run.general_lower_bound) : json(nullptr);

  json verdicts = json::array();
  for (const auto& v : run.verdicts) verdicts.push_back(verdict_json(v));
  j["verdicts"] = verdicts;
  j["all_hold"] = run.all_verdicts_hold();
  return j.dump(2) + "\n";
}

StoredRun load_run(const std::string& summary_text, std::istream& trace_in) {
  json j;
  try {
    j = json::parse(summary_text);
  } catch (const json::parse_error& e) {
    throw FormatError(0, std::string("summary is not valid JSON: ") + e.what());
  }
  try {
    if (j.at("schema_version").get<int>() != kSummarySchemaVersion) {
      throw InvalidArgument("unsupported summary schema_version " + j.at("schema_version").dump());
    }
    ConfigEntries entries;
    for (const auto& [k, v] : j.at("config").items()) entries[k] = v.get<std::string>();
    StoredRun out{make_config(entries), {}};
    const TraceFile trace = read_trace_csv(trace_in);

    const std::string hash = j.at("config_hash").get<std::string>();
    if (hash != out.config.hash()) throw InvalidArgument("summary config_hash does not match its configuration");
    if (!trace.config_hash.empty() && trace.config_hash != hash) {
      throw InvalidArgument("trace and summary come from different configurations");
    }

    RunRecord& run = out.run;
    run.algorithm = out.config.algorithm;
    run.experts = out.config.experts;
    run.schedule = out.config.schedule;
    run.weight_method = j.at("weight_method").get<std::string>();
    run.expected_exact = j.at("expected_exact").get<bool>();
    run.perturbation_seed = j.at("perturbation_seed").get<std::uint64_t>();
    run.environment_seed = j.at("environment_seed").get<std::uint64_t>();
    run.config_hash = hash;
    run.steps = trace.steps;
    const json& losses = j.at("losses");
    run.expert_totals = losses.at("expert_totals").get<std::vector<double>>();
    if (run.expert_totals.size() != run.experts.size()) {
      throw InvalidArgument("summary has the wrong number of expert totals");
    }
    for (const auto& s : run.steps) {
      if (s.chosen >= run.experts.size()) throw InvalidArgument("trace chooses an expert out of range");
    }
    // Per-step variances are not persisted; spread the total evenly.
    if (!run.steps.empty()) {
      const double T = static_cast<double>(run.steps.size());
      const double se = losses.at("expected_standard_error").get<double>();
      const double se_r = losses.at("infeasible_standard_error").get<double>();
      for (auto& s : run.steps) {
        s.expected_variance = se * se / T;
        s.infeasible_variance = se_r * se_r / T;
      }
    }
    if (!j.at("general_lower_bound").is_null()) run.general_lower_bound = j.at("general_lower_bound").get<double>();
    for (const auto& v : j.at("verdicts")) run.verdicts.push_back(verdict_from(v));
    return out;
  } catch (const json::exception& e) {
    throw FormatError(0, std::string("malformed summary: ") + e.what());
  }
}

std::string verdicts_csv(const std::vector<BoundVerdict>& verdicts) {
  std::string out = "theorem,applicable,holds,bound_value,measured,slack,margin,flagged,expert,note\n";
  for (const auto& v : verdicts) {
    std::string note = v.note;
    for (char& c : note) {
      if (c == ',' || c == '\n') c = ';';
    }
    out += std::string(to_string(v.theorem)) + ',' + (v.applicable ? "1" : "0") + ',' + (v.holds ? "1" : "0") + ',';
    if (v.applicable) {
      out += format_number(v.bound_value) + ',' + format_number(v.measured) + ',' + format_number(v.slack) + ',' +
             format_number(v.margin);
    } else {
      out += ",,,";
    }
    out += std::string(",") + (v.flagged ? "1" : "0") + ',' + (v.expert ? std::to_string(*v.expert) : "") + ',' +
           note + '\n';
  }
  return out;
}

namespace {

json coverage_json(const EnvelopeCoverage& c) {
  return {{"applicable", c.applicable}, {"runs", c.runs},          {"exceeded", c.exceeded},
          {"fraction", c.fraction},     {"failure_mass", c.failure_mass}, {"allowance", c.allowance},
          {"holds", c.holds},           {"note", c.note}};
}

}  // namespace

std::string sweep_json(const SweepReport& report, const RunConfig& config) {
  json j;
  j["schema_version"] = kSummarySchemaVersion;
  j["config_hash"] = config.hash();
  json entries = json::object();
  for (const auto& [k, v] : config.entries) entries[k] = v;
  j["config"] = entries;
  j["c"] = report.c;
  j["runs"] = report.runs.size();
  j["failed"] = report.failed;
  j["mean_realized"] = number_or_null(report.mean_realized);
  j["se_realized"] = number_or_null(report.se_realized);
  j["mean_expected"] = number_or_null(report.mean_expected);
  j["markov"] = coverage_json(report.markov);
  j["chernoff"] = coverage_json(report.chernoff);
  json failures = json::array();
  for (const auto& r : report.runs) {
    if (!r.ok) failures.push_back({{"seed", r.seed}, {"error", r.error}});
  }
  j["failures"] = failures;
  j["all_hold"] = report.all_hold();
  return j.dump(2) + "\n";
}

std::string sweep_csv(const SweepReport& report) {
  std::string out = "seed,ok,u_total,ell_total,smin_total,markov_exceeded,chernoff_valid,chernoff_exceeded,verdicts_hold\n";
  for (const auto& r : report.runs) {
    out += std::to_string(r.seed) + ',' + (r.ok ? "1" : "0") + ',' + format_number(r.realized) + ',' +
           format_number(r.expected) + ',' + format_number(r.best) + ',' + (r.markov_exceeded ? "1" : "0") + ',' +
           (r.chernoff_valid ? "1" : "0") + ',' + (r.chernoff_exceeded ? "1" : "0") + ',' +
           (r.verdicts_hold ? "1" : "0") + '\n';
  }
  return out;
}

}  // namespace fpl
