#pragma once

#include "arcm/data.hpp"
#include "arcm/kernels.hpp"
#include "arcm/types.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>

namespace arcm {

// v -> H v for a fixed Hessian H.
using LinearMap = std::function<Vector(const Vector&)>;

inline constexpr Eigen::Index kDefaultDenseCap = 256;

// A twice-differentiable f : R^d -> R. Evaluation is pure and thread-safe.
class ObjectiveModel {
 public:
  virtual ~ObjectiveModel() = default;

  virtual Eigen::Index dim() const = 0;
  virtual std::string name() const = 0;

  virtual double value(const Vector& x) const = 0;
  virtual Vector gradient(const Vector& x) const = 0;
  virtual Vector hessian_vec(const Vector& x, const Vector& v) const = 0;

  // Hessian at x packaged for repeated products. Models override this when
  // per-point work (sample weights, say) can be shared across products.
  virtual LinearMap hessian(const Vector& x) const;

  // Dense Hessian; present whenever dim() <= dense_cap().
  virtual std::optional<Matrix> dense_hessian(const Vector& x) const = 0;

  Eigen::Index dense_cap() const { return dense_cap_; }
  void set_dense_cap(Eigen::Index cap) { dense_cap_ = cap; }
  bool has_dense() const { return dim() <= dense_cap_; }

 private:
  Eigen::Index dense_cap_ = kDefaultDenseCap;
};

using ObjectivePtr = std::shared_ptr<const ObjectiveModel>;

enum class ModelKind { LogisticNonconvex, RobustLinear, Quadratic, Rosenbrock };

std::string to_string(ModelKind kind);
ModelKind parse_model_kind(const std::string& s);

struct ModelSpec {
  ModelKind kind = ModelKind::Quadratic;
  // Required for the two regression kinds, absent otherwise.
  std::shared_ptr<const Dataset> dataset;
  // Weight of the nonconvex regularizer sum w^2 / (1 + w^2) (logistic only).
  double chi = 0.1;
  // Problem dimension. Must match the dataset when both are given; 0 means "from dataset".
  Eigen::Index dim = 0;
  // Quadratic 0.5 x^T A x - b^T x; identity and zero when absent.
  std::optional<Matrix> quadratic_matrix;
  std::optional<Vector> quadratic_rhs;
  kernels::Backend backend = kernels::Backend::Parallel;
  Eigen::Index dense_cap = kDefaultDenseCap;

  void validate() const;
};

ObjectivePtr make_objective(const ModelSpec& spec);

// Random symmetric positive definite A = Q diag(lambda) Q^T with eigenvalues
// log-spaced in [1, cond], and a random right-hand side. Seeded and deterministic.
struct QuadraticInstance {
  Matrix A;
  Vector b;
};
QuadraticInstance random_quadratic(Eigen::Index d, double cond, std::uint64_t seed);

// Seeded N(0, scale^2) point.
Vector gaussian_point(Eigen::Index d, double scale, std::uint64_t seed);

struct DerivativeReport {
  double max_rel_err_grad = 0.0;
  double max_rel_err_hvp = 0.0;
};

// Central differences of f against the analytic gradient (every coordinate),
// and of the gradient against the Hessian action along `directions` seeded
// random unit vectors. Errors are max |fd - analytic| / max(1, |analytic|_inf).
DerivativeReport check_derivatives(const ObjectiveModel& model, const Vector& x, double h,
                                   int directions = 5, std::uint64_t seed = 0);

}  // namespace arcm
