#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "fpl/harness.hpp"
#include "fpl/report.hpp"
#include "helpers.hpp"
#include "json.hpp"

using namespace fpl;
using testing::config_with;

namespace {

std::string trace_text(const RunRecord& run) {
  std::ostringstream out;
  write_trace_csv(out, run);
  return out.str();
}

}  // namespace

TEST_CASE("a single expert has no regret") {
  const auto config = config_with({{"experts.kind", "zero"}, {"experts.n", "1"}, {"run.horizon", "300"}});
  const auto run = run_experiment(config);
  CHECK(run.expected_total() == run.expert_totals[0]);
  CHECK(run.realized_total() == run.expert_totals[0]);
}

TEST_CASE("Follow the Leader on the alternating sequence") {
  const auto config = config_with({{"environment.kind", "fl_killer"}, {"run.algorithm", "fl"}, {"run.horizon", "1000"}});
  const auto run = run_experiment(config);
  CHECK(run.realized_total() >= 998.0);
  CHECK(run.best_total() == doctest::Approx(499.5));
  CHECK(run.expected_total() == run.realized_total());
}

TEST_CASE("identical configuration gives a byte-identical trace") {
  for (const char* mode : {"per_step", "initial_only"}) {
    const auto config = config_with({{"experts.n", "5"}, {"perturbation.mode", mode}, {"perturbation.seed", "17"},
                                     {"run.horizon", "300"}});
    const std::string a = trace_text(run_experiment(config));
    const std::string b = trace_text(run_experiment(config));
    CHECK(a == b);
    CHECK(a.find('\r') == std::string::npos);
    CHECK(a.find("t,chosen,u_t,eps_t,ell_t,r_t,smin_t\n") != std::string::npos);
    const std::string other = trace_text(run_experiment(with_seed(config, 18)));
    CHECK(a != other);
  }
}

TEST_CASE("aggregates are sums of the per-step entries") {
  const auto config = config_with({{"experts.n", "4"}, {"run.algorithm", "ifpl_paired"}, {"run.horizon", "400"},
                                   {"environment.probabilities", "0.1,0.4,0.5,0.9"}});
  const auto run = run_experiment(config);
  double u = 0.0, ell = 0.0, r = 0.0;
  for (const auto& s : run.steps) {
    u += s.realized_loss;
    ell += s.expected_loss;
    r += s.infeasible_loss;
  }
  CHECK(std::abs(run.realized_total() - u) <= 1e-9);
  CHECK(std::abs(run.expected_total() - ell) <= 1e-9);
  CHECK(std::abs(run.infeasible_total() - r) <= 1e-9);
  CHECK(run.steps.back().best_loss == run.best_total());
  CHECK(run.final_epsilon() == doctest::Approx(1.0 / std::sqrt(400.0)));
  for (std::size_t t = 1; t < run.steps.size(); ++t) CHECK(run.steps[t].best_loss >= run.steps[t - 1].best_loss);
}

TEST_CASE("trace round trip and summary consistency") {
  const auto config = config_with({{"experts.n", "3"}, {"run.horizon", "250"}, {"perturbation.seed", "4"},
                                   {"run.algorithm", "ifpl_paired"}});
  const auto run = run_experiment(config);
  std::istringstream in(trace_text(run));
  const TraceFile file = read_trace_csv(in);
  CHECK(file.config_hash == config.hash());
  CHECK(file.perturbation_seed == 4);
  REQUIRE(file.steps.size() == run.steps.size());
  for (std::size_t t = 0; t < run.steps.size(); ++t) {
    CHECK(file.steps[t].chosen == run.steps[t].chosen);
    CHECK(file.steps[t].realized_loss == run.steps[t].realized_loss);
    CHECK(file.steps[t].expected_loss == run.steps[t].expected_loss);
    CHECK(file.steps[t].epsilon == run.steps[t].epsilon);
  }

  const std::string summary = summary_json(run, config);
  const auto json = nlohmann::json::parse(summary);
  CHECK(json.at("schema_version") == kSummarySchemaVersion);
  CHECK(json.at("config_hash") == config.hash());

  std::istringstream again(trace_text(run));
  const StoredRun stored = load_run(summary, again);
  const auto recomputed = verify(stored.run, stored.config.bounds);
  REQUIRE(recomputed.size() == run.verdicts.size());
  for (std::size_t i = 0; i < recomputed.size(); ++i) {
    CHECK(recomputed[i].theorem == run.verdicts[i].theorem);
    CHECK(recomputed[i].applicable == run.verdicts[i].applicable);
    CHECK(recomputed[i].holds == run.verdicts[i].holds);
    CHECK(recomputed[i].bound_value == doctest::Approx(run.verdicts[i].bound_value).epsilon(1e-12));
    CHECK(recomputed[i].measured == doctest::Approx(run.verdicts[i].measured).epsilon(1e-12));
  }

  const auto rerun = run_experiment(stored.config);
  CHECK(trace_text(rerun) == trace_text(run));

  std::istringstream mismatched(trace_text(run_experiment(with_seed(config, 5))));
  CHECK_THROWS(load_run(summary, mismatched));
}

TEST_CASE("malformed traces") {
  std::istringstream bad_header("# config_hash=0 perturbation_seed=0 environment_seed=0\nt,chosen\n");
  CHECK_THROWS_AS(read_trace_csv(bad_header), FormatError);
  std::istringstream gap(
      "# config_hash=0 perturbation_seed=0 environment_seed=0\n"
      "t,chosen,u_t,eps_t,ell_t,r_t,smin_t\n"
      "1,0,0,1,0,,0\n"
      "3,0,0,1,0,,0\n");
  try {
    read_trace_csv(gap);
    FAIL("expected a format error");
  } catch (const FormatError& e) {
    CHECK(e.row() == 4);
  }
}

TEST_CASE("playback runs and reports bad rows") {
  const auto path = std::filesystem::temp_directory_path() / "fpl_harness_rows.txt";
  {
    std::ofstream out(path);
    out << "0 1\n1 0\n";
  }
  auto config = config_with({{"environment.kind", "playback"}, {"environment.path", path.string()},
                             {"run.horizon", "2"}, {"run.algorithm", "fl"}});
  CHECK(run_experiment(config).realized_total() == 1.0);
  {
    std::ofstream out(path);
    out << "0 1\n1 2\n";
  }
  try {
    run_experiment(config);
    FAIL("expected a format error");
  } catch (const FormatError& e) {
    CHECK(e.row() == 2);
  }
  std::filesystem::remove(path);
}

TEST_CASE("sweeps") {
  const auto config = config_with({{"experts.n", "4"}, {"run.horizon", "200"}, {"sweep.seeds", "60"},
                                   {"environment.probabilities", "0.2,0.4,0.6,0.8"}});
  SUBCASE("a single seed matches run_experiment") {
    const std::uint64_t seed[] = {7};
    const auto report = sweep(config, seed, 1);
    const auto run = run_experiment(with_seed(config, 7));
    REQUIRE(report.runs.size() == 1);
    CHECK(report.runs[0].realized == run.realized_total());
    CHECK(report.runs[0].expected == run.expected_total());
    CHECK(report.mean_realized == run.realized_total());
  }
  SUBCASE("worker count does not change the report") {
    const auto seeds = sweep_seeds(config);
    CHECK(seeds.size() == 60);
    CHECK(seeds.front() == 0);
    const auto a = sweep(config, seeds, 1);
    const auto b = sweep(config, seeds, 4);
    CHECK(a.mean_realized == b.mean_realized);
    CHECK(a.chernoff.exceeded == b.chernoff.exceeded);
    CHECK(a.failed == 0);
  }
  SUBCASE("mean realized loss is within 3 SE of the exact expected loss") {
    // Oblivious environment: l_{1:T} does not depend on the perturbation seed.
    const auto seeds = sweep_seeds(config);
    const auto report = sweep(config, seeds, 2);
    for (const auto& r : report.runs) CHECK(r.expected == doctest::Approx(report.runs[0].expected).epsilon(1e-12));
    CHECK(std::abs(report.mean_realized - report.mean_expected) <= 3.0 * report.se_realized);
    CHECK(report.markov.applicable);
    CHECK(report.chernoff.applicable);
    CHECK(report.all_hold());
  }
  SUBCASE("failures are recorded per seed") {
    auto broken = config;
    broken.environment.variant = env::Playback{"/nonexistent/rows.txt"};
    const std::uint64_t seeds[] = {1, 2};
    const auto report = sweep(broken, seeds, 1);
    CHECK(report.failed == 2);
    CHECK_FALSE(report.runs[0].error.empty());
    CHECK_FALSE(report.all_hold());
  }
}

TEST_CASE("hierarchy and master runs") {
  auto run = run_experiment(config_with({{"experts.kind", "two_log"}, {"experts.n", "20"}, {"run.algorithm", "hierarchy"},
                                         {"run.horizon", "300"}}));
  CHECK(run.weight_method == "none");
  CHECK_FALSE(run.has_expected());
  run = run_experiment(config_with({{"run.algorithm", "deterministic_master"}, {"experts.n", "3"}, {"run.horizon", "100"}}));
  CHECK(run.has_expected());
  CHECK(std::abs(run.realized_total() - run.expected_total()) <= 1e-9);
}
