#pragma once

#include "arcm/objective.hpp"
#include "arcm/optimizers.hpp"
#include "arcm/types.hpp"

#include <optional>
#include <string>
#include <vector>

namespace arcm {

struct MeasureConfig {
  double c1 = 1.0;
  double c2 = 1.0;
  // Optional problem constants; informational only.
  std::optional<double> lipschitz_grad;
  std::optional<double> lipschitz_hess;
  std::optional<double> kappa_h;
  std::optional<double> f_star;

  void validate() const;
};

struct MeasureResult {
  double value = 0.0;           // max(grad_term, curvature_term)
  double grad_term = 0.0;       // sqrt(|g| / c1)
  double curvature_term = 0.0;  // max(0, -lambda_min) / c2
  double lambda_min = 0.0;
  bool confident = true;  // false when Lanczos did not converge
};

// Pure arithmetic part of the measure.
MeasureResult optimality_measure(double grad_norm, double lambda_min, const MeasureConfig& cfg);

// lambda_min is exact below the model's dense cap, else 100-step Lanczos with one restart.
MeasureResult optimality_measure(const ObjectiveModel& model, const Vector& x, const MeasureConfig& cfg);

struct Violation {
  long k = 0;
  std::string rule;
  std::string detail;
};

struct AuditReport {
  bool monotone_ok = true;
  bool prop1_ok = true;
  double prop1_min_margin = 0.0;  // min over exact successes of decrease - eta1/12 sigma |s|^3; +inf if none
  bool sigma_ok = true;
  double sigma_max_observed = 0.0;
  bool lemma3_ok = true;
  long lemma3_bound = 0;
  long lemma3_longest_run = 0;
  bool lemma4_ok = true;
  double lemma4_budget_ratio = 0.0;
  // Largest recorded inexactness ratio; NaN when no record carries one.
  double condition1_max_ratio = 0.0;
  std::vector<Violation> violations;

  bool passed() const { return violations.empty(); }
};

// Checks with 1e-10 slack: f nonincreasing; decrease >= eta1/12 sigma |s|^3 at
// successes solved exactly; sigma floor and schedule; failure runs no longer
// than ceil(log_gamma1(sigma_max / sigma_min)); Lemma 4 cubic budget.
// CR/CRm keep sigma fixed and TR tracks a radius; their schedule checks follow
// their own update rules and Lemma 3 is skipped.
AuditReport audit_trace(const Trace& trace, const HyperParams& p, bool solver_was_exact);

// "key: value" lines.
std::string format_report(const AuditReport& r);
// JSON object.
std::string format_report_json(const AuditReport& r);

struct MomentumEvent {
  long k = 0;
  int sign = 0;
  double beta = 0.0;
  double grad_norm = 0.0;
};

struct MomentumCounts {
  long helped_pos = 0;  // beta > 0, s^T v_prev > 0
  long helped_neg = 0;  // beta > 0, s^T v_prev < 0
  long beta_zero = 0;   // beta = 0, or beta > 0 with s^T v_prev = 0
  std::vector<MomentumEvent> events;  // every success with beta > 0
};

MomentumCounts classify_momentum_events(const Trace& trace);

// Record-by-record equality of every field except wall_time_s, plus final
// point and stop reason. The method tag is not compared. On mismatch, `why`
// names the first differing field.
bool same_trajectory(const Trace& a, const Trace& b, std::string* why = nullptr);

enum class RateQuantity { GradNorm, Measure };

// Least-squares slope of log(min_{j<=k} q_j) against log(1 + k) over records
// before the first grad_norm < 1e-6.
double fit_rate(const Trace& trace, RateQuantity quantity);

inline constexpr double kTailCut = 1e-6;
inline constexpr std::size_t kMinRateRecords = 10;

}  // namespace arcm
