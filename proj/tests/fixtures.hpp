#pragma once

#include "arcm/config.hpp"
#include "arcm/objective.hpp"

#include <memory>

namespace arcm::testing {

inline ObjectivePtr half_norm(Eigen::Index d) {
  ModelSpec spec;
  spec.kind = ModelKind::Quadratic;
  spec.dim = d;
  return make_objective(spec);
}

inline ObjectivePtr quadratic(Eigen::Index d, double cond, std::uint64_t seed) {
  const auto q = random_quadratic(d, cond, seed);
  ModelSpec spec;
  spec.kind = ModelKind::Quadratic;
  spec.quadratic_matrix = q.A;
  spec.quadratic_rhs = q.b;
  return make_objective(spec);
}

inline ObjectivePtr rosenbrock(Eigen::Index d) {
  ModelSpec spec;
  spec.kind = ModelKind::Rosenbrock;
  spec.dim = d;
  return make_objective(spec);
}

inline Vector rosenbrock_start() {
  Vector x(2);
  x << -1.2, 1.0;
  return x;
}

// The two synthetic regression instances used for the comparative checks:
// n = 200, d = 50, raw N(0, 1) features, start x0 ~ N(0, 3^2 I) seeded by the run index.
inline RunConfig desk_config(ModelKind kind) {
  RunConfig cfg;
  cfg.kind = kind;
  cfg.chi = 0.1;
  cfg.synthetic.n = 200;
  cfg.synthetic.d = 50;
  cfg.synthetic.task = kind == ModelKind::RobustLinear ? Task::Regression : Task::Classification;
  cfg.synthetic.label_noise = kind == ModelKind::RobustLinear ? 0.0 : 0.1;
  cfg.start = StartPolicy::Gaussian;
  cfg.start_scale = 3.0;
  cfg.stop.grad_tol = 1e-6;
  cfg.stop.max_iter = 3000;
  return cfg;
}

}  // namespace arcm::testing
