#pragma once

// Trace CSV and JSON summaries.
//
// The trace has a header row t,chosen,u_t,eps_t,ell_t,r_t,smin_t preceded by
// one comment line `# config_hash=... perturbation_seed=... environment_seed=...`.
// Numbers use '.' and 17 significant digits; values that were not measured
// are empty fields. Lines end in LF.

#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "fpl/config.hpp"
#include "fpl/harness.hpp"
#include "fpl/record.hpp"

namespace fpl {

inline constexpr int kSummarySchemaVersion = 1;

void write_trace_csv(std::ostream& out, const RunRecord& run);

struct TraceFile {
  std::string config_hash;
  std::uint64_t perturbation_seed = 0;
  std::uint64_t environment_seed = 0;
  std::vector<StepRecord> steps;
};

/// Parses a trace written by write_trace_csv. Throws FormatError with the line number.
TraceFile read_trace_csv(std::istream& in);

/// JSON summary of a run: configuration, totals and verdicts.
std::string summary_json(const RunRecord& run, const RunConfig& config);

struct StoredRun {
  RunConfig config;
  RunRecord run;  ///< rebuilt from trace + summary; verdicts are the stored ones
};

/// Rebuilds a run from its summary and trace. Throws FormatError or
/// InvalidArgument when the two do not belong together.
StoredRun load_run(const std::string& summary_text, std::istream& trace);

std::string verdicts_csv(const std::vector<BoundVerdict>& verdicts);
std::string sweep_json(const SweepReport& report, const RunConfig& config);
std::string sweep_csv(const SweepReport& report);

/// %.17g in the C locale; NaN becomes the empty string.
std::string format_number(double value);

}  // namespace fpl
