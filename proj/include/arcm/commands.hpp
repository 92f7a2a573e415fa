#pragma once

#include "arcm/config.hpp"
#include "arcm/diagnostics.hpp"
#include "arcm/optimizers.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace arcm {

enum ExitCode : int { kExitOk = 0, kExitBatteryFailed = 1, kExitConfig = 2, kExitNumeric = 3 };

inline constexpr const char* kTraceHeader =
    "k,f,grad_norm,sigma,step_norm,rho,accepted,beta,momentum_sign,krylov_dim,model_decrease,wall_time_s";

// Header line plus one row per record; reals at 17 significant digits.
std::string format_trace_csv(const Trace& trace);
void write_trace_csv(const Trace& trace, const std::filesystem::path& path);

struct RunSummary {
  std::string label;
  Method method = Method::ARCm;
  std::uint64_t seed = 0;
  long iterations = 0;  // all records
  long successful_iterations = 0;
  bool reached_tolerance = false;
  double final_f = 0.0;
  double final_grad_norm = 0.0;
  StopReason stop_reason = StopReason::MaxIter;
  std::string error_message;
  MomentumCounts momentum;
  AuditReport audit;
};

RunSummary summarize(const std::string& label, const Trace& trace, const HyperParams& p, std::uint64_t seed);
std::string format_summary(const RunSummary& s);

// Writes <outdir>/<label>.trace.csv, <label>.audit.json and summary.txt.
int cmd_run(const RunConfig& cfg, std::ostream& log, bool quiet);

struct CompareRow {
  std::string label;
  double median_iterations = 0.0;
  long min_iterations = 0;
  long max_iterations = 0;
  double median_successful = 0.0;
  double median_final_f = 0.0;
  long failures = 0;  // runs that stopped short of grad_tol
};

// Rows sorted by median iterations, ties kept in declaration order.
std::vector<CompareRow> compare_table(const std::vector<OptimizerEntry>& optimizers,
                                      const std::vector<std::vector<RunSummary>>& per_optimizer);

// Every optimizer on seeds seed..seed+seeds-1. Writes <label>.seed<i>.trace.csv,
// raw.csv and table.csv.
int cmd_compare(const RunConfig& cfg, std::ostream& log, bool quiet);

struct BatteryItem {
  std::string name;
  bool passed = false;
  std::string detail;
};

// inject_fault flips the sign of the regression gradients seen by the
// derivative checks.
std::vector<BatteryItem> validation_battery(bool inject_fault = false);
int cmd_validate(std::ostream& log, bool quiet, bool inject_fault = false);

// Writes <outdir>/<name>.libsvm and <outdir>/<name>.csv.
void cmd_gen_data(const SyntheticSpec& spec, const std::filesystem::path& outdir, const std::string& name);

}  // namespace arcm
