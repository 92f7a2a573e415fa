#pragma once

#include "arcm/objective.hpp"
#include "arcm/subproblem.hpp"
#include "arcm/types.hpp"

#include <limits>
#include <string>
#include <tuple>
#include <vector>

namespace arcm {

enum class Method { ARCm, ARC, CR, CRm, TR };

std::string to_string(Method m);
Method parse_method(const std::string& s);

struct HyperParams {
  // sigma schedule: failure, success, very-success multipliers
  double gamma1 = 2.0;
  double gamma2 = 1.0;
  double gamma3 = 0.5;
  // acceptance thresholds on rho
  double eta1 = 0.1;
  double eta2 = 0.9;
  double sigma0 = 1.0;
  double sigma_min = 1e-4;
  // momentum step-size cap min(tau, alpha1 |s|, alpha2 |s|^2)
  double tau = 0.5;
  double alpha1 = 0.1;
  double alpha2 = 1.0;
  int krylov_max_dim = 50;
  int momentum_halvings = 5;
  double fixed_M = 10.0;  // CR and CRm
  double tr_radius0 = 1.0;
  double tr_radius_max = 100.0;
  CrsSolver solver = CrsSolver::Krylov;

  // gamma1 > 1 >= gamma2 > gamma3 > 0, 1 > eta2 > eta1 > 0,
  // sigma0 >= sigma_min > 0, 0 < tau < 1, alpha1, alpha2 >= 0.
  void validate() const;
};

struct SolverState {
  Vector x;
  Vector grad;     // gradient at x
  Vector v;        // momentum buffer v_{k-1}; zero before the first success
  Vector y_prev;   // previous CR iterate (CRm)
  double f_x = 0.0;
  double sigma = 1.0;   // sigma_k, or M for CR/CRm
  double radius = 1.0;  // trust radius (TR)
  long k = 0;
  long successes = 0;
  long failures = 0;
  long consecutive_failures = 0;

  static SolverState initial(const ObjectiveModel& model, const Vector& x0, const HyperParams& p, Method method);
};

enum class Acceptance { Fail, Success, VerySuccess };
std::string to_string(Acceptance a);

struct IterationRecord {
  long k = 0;
  double f = 0.0;          // f(x_k)
  double grad_norm = 0.0;  // |grad f(x_k)|
  double sigma = 0.0;      // sigma_k (M for CR/CRm, trust radius for TR)
  double step_norm = 0.0;  // |s_k|
  double rho = 0.0;
  Acceptance accepted = Acceptance::Fail;
  double beta = 0.0;
  int momentum_sign = 0;  // sign(s_k^T v_{k-1}) when beta > 0, else 0
  int krylov_dim = 0;
  double model_decrease = 0.0;
  double wall_time_s = 0.0;

  // Not part of the CSV trace.
  double f_trial = std::numeric_limits<double>::quiet_NaN();  // f(x_k + s_k) = f(y_{k+1})
  double f_next = 0.0;                                         // f(x_{k+1})
  double measure = std::numeric_limits<double>::quiet_NaN();   // optimality measure at x_k when recorded
  double cert_ratio = std::numeric_limits<double>::quiet_NaN(); // inexactness delta / (sigma |s|^3) when recorded
  bool exact_subproblem = false;
};

enum class StopReason { GradTol, MaxIter, MaxSeconds, Stagnation, Error };
std::string to_string(StopReason r);

struct Trace {
  Method method = Method::ARCm;
  std::vector<IterationRecord> records;
  Vector final_x;
  double final_f = 0.0;
  double final_grad_norm = 0.0;
  double final_sigma = 0.0;
  StopReason stop_reason = StopReason::MaxIter;
  std::string error_message;

  long successes() const;
  long failures() const;
};

inline constexpr double kRhoFailure = -std::numeric_limits<double>::infinity();

// (f_x - f_trial) / model_decrease, or -inf when the predicted decrease is
// not positive or below 1e-15 |f_x|.
double rho(double f_x, double f_trial, double model_decrease);

double sigma_update(double sigma, double rho, const HyperParams& p);

struct MomentumResult {
  double beta = 0.0;
  Vector z;
  double f_z = 0.0;
  int evaluations = 0;
};

// Largest beta in {b, b/2, ..., b/2^halvings}, b = min(tau, alpha1 |s|, alpha2 |s|^2),
// with f(x + beta v_prev + s) <= f_y; beta = 0 and z = y when none qualifies.
MomentumResult momentum_search(const ObjectiveModel& model, const Vector& x, const Vector& y, double f_y,
                               const Vector& v_prev, const Vector& s, const HyperParams& p);

double momentum_cap(double step_norm, const HyperParams& p);

struct StepOptions {
  // Lanczos start direction for the subproblem (negative curvature at a
  // first-order stationary point); empty means the gradient.
  Vector curvature_start;
  // Compare the step against the exact CRS solution and store cert_ratio.
  // Needs a dense Hessian; ignored otherwise.
  bool certify = false;
};

// One iteration of adaptive cubic regularization with momentum.
IterationRecord arcm_step(SolverState& state, const ObjectiveModel& model, const HyperParams& p,
                          const StepOptions& opts = {});

// One iteration of CR, CRm, ARC or TR. ARCm is accepted too and forwards to arcm_step.
IterationRecord baseline_step(Method method, SolverState& state, const ObjectiveModel& model, const HyperParams& p,
                              const StepOptions& opts = {});

struct StopCriteria {
  double grad_tol = 1e-6;
  long max_iter = 1000;
  double max_seconds = std::numeric_limits<double>::infinity();
  long max_consecutive_failures = 50;
  // Also require lambda_min(H) >= -sqrt(grad_tol) before stopping on grad_tol.
  bool second_order = true;
  // Evaluate the optimality measure (c1 = c2 = 1) at each record.
  bool record_measure = false;
  // Record the inexactness certificate of every cubic step (dense models only).
  bool record_certificate = false;

  void validate() const;
};

Trace run(Method method, const ObjectiveModel& model, const Vector& x0, const HyperParams& p,
          const StopCriteria& stop);

}  // namespace arcm
