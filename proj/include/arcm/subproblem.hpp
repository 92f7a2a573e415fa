#pragma once

// The cubic-regularized subproblem (CRS)
//
//   min_s  q(s) = g^T s + 1/2 s^T H s + sigma/6 |s|^3,   m(s) = f(x) + q(s),
//
// solved exactly through the secular equation on an eigendecomposition of H,
// approximately on Lanczos subspaces, or along the steepest-descent ray
// (Cauchy point). The trust-region subproblem shares the same machinery.

#include "arcm/objective.hpp"
#include "arcm/types.hpp"

#include <optional>
#include <string>

namespace arcm {

struct CubicModel {
  Vector g;
  LinearMap hess;                // v -> H v; may be empty when dense_h is set
  std::optional<Matrix> dense_h;  // symmetric d x d
  double sigma = 1.0;

  static CubicModel from_dense(Vector g, Matrix H, double sigma);
  static CubicModel from_operator(Vector g, LinearMap H, double sigma);

  Eigen::Index dim() const { return g.size(); }
  Vector apply_h(const Vector& v) const;
  void validate() const;
};

enum class CrsSolver { Exact, Krylov, Cauchy };
std::string to_string(CrsSolver s);
CrsSolver parse_crs_solver(const std::string& s);

struct CrsSolution {
  Vector s;
  double model_decrease = 0.0;   // -q(s)
  double model_grad_norm = 0.0;  // |grad m(s)|
  double lambda = 0.0;           // secular multiplier sigma |s| / 2 (exact and Krylov)
  CrsSolver solver = CrsSolver::Exact;
  int krylov_dim = 0;
  bool zero_gradient = false;  // Krylov called with g = 0 and no start direction
  bool hard_case = false;
};

// q(s), the model value relative to f(x).
double model_value(const CubicModel& m, const Vector& s);
// g + H s + sigma/2 |s| s
Vector model_gradient(const CubicModel& m, const Vector& s);

// The root finder gave up; best() is the last iterate.
class SolverFailure : public Error {
 public:
  SolverFailure(const std::string& what, CrsSolution best) : Error(what), best_(std::move(best)) {}
  const CrsSolution& best() const { return best_; }

 private:
  CrsSolution best_;
};

inline constexpr double kExactTol = 1e-9;
inline constexpr double kKrylovTol = 1e-6;

// Global minimizer of q. Requires dense_h. model_grad_norm <= tol * max(1, |g|).
CrsSolution solve_exact(const CubicModel& m, double tol = kExactTol);

struct KrylovOptions {
  int max_dim = 50;
  double tol = kKrylovTol;
  // Lanczos start direction; g when empty. A nonzero start lets the solver
  // make progress from a stationary point along negative curvature.
  Vector start;
};

// Lanczos projection onto K_j(H, start), reduced CRS solved exactly at each j.
// Stops when |grad m(s)| <= min(tol * max(1, |g|), (sigma/24)^{2/3} |s|^2),
// at j = min(max_dim, d), or on Lanczos breakdown.
CrsSolution solve_krylov(const CubicModel& m, const KrylovOptions& opts);
CrsSolution solve_krylov(const CubicModel& m, int max_dim, double tol = kKrylovTol);

// Minimizer of q along -g. Requires g != 0.
CrsSolution cauchy_point(const CubicModel& m);

struct InexactnessCertificate {
  double delta1 = 0.0;                 // max(0, sigma/12 |s|^3 - model_decrease)
  double delta2 = 0.0;                 // |grad m(s)|^{3/2}
  std::optional<double> delta3;        // | |s| - |s_exact| |^3
  double delta = 0.0;                  // max of the populated components
  double ratio_to_cubic = 0.0;         // delta / (sigma |s|^3)
};

// Requires approx.model_decrease > 0.
InexactnessCertificate certify_inexact(const CubicModel& m, const CrsSolution& approx,
                                       std::optional<double> exact_norm = std::nullopt);

// Trust-region subproblem  min g^T s + 1/2 s^T H s  s.t. |s| <= radius.
struct TrustRegionModel {
  Vector g;
  LinearMap hess;
  std::optional<Matrix> dense_h;
  double radius = 1.0;

  Eigen::Index dim() const { return g.size(); }
  Vector apply_h(const Vector& v) const;
};

struct TrSolution {
  Vector s;
  double model_decrease = 0.0;  // -(g^T s + 1/2 s^T H s)
  double lambda = 0.0;          // multiplier of the norm constraint
  bool on_boundary = false;
  bool hard_case = false;
  int krylov_dim = 0;
};

TrSolution solve_tr_exact(const TrustRegionModel& m, double tol = kExactTol);
// A nonzero start replaces g as the Lanczos start direction, as for the cubic solver.
TrSolution solve_tr_krylov(const TrustRegionModel& m, int max_dim, double tol = kKrylovTol,
                           const Vector& start = Vector());

}  // namespace arcm
