#include "arcm/objective.hpp"

#include "doctest.h"

#include <Eigen/Eigenvalues>

#include <cmath>

using namespace arcm;

namespace {

std::shared_ptr<const Dataset> synthetic(std::size_t n, std::size_t d, Task task, std::uint64_t seed,
                                         double noise = 0.1) {
  SyntheticSpec spec;
  spec.n = n;
  spec.d = d;
  spec.task = task;
  spec.seed = seed;
  spec.label_noise = task == Task::Classification ? noise : 0.0;
  return std::make_shared<const Dataset>(gen_synthetic(spec));
}

ObjectivePtr regression(ModelKind kind, std::shared_ptr<const Dataset> ds, double chi = 0.1) {
  ModelSpec spec;
  spec.kind = kind;
  spec.dataset = std::move(ds);
  spec.chi = chi;
  return make_objective(spec);
}

ObjectivePtr quadratic(Eigen::Index d, std::uint64_t seed) {
  auto q = random_quadratic(d, 50.0, seed);
  ModelSpec spec;
  spec.kind = ModelKind::Quadratic;
  spec.quadratic_matrix = q.A;
  spec.quadratic_rhs = q.b;
  return make_objective(spec);
}

ObjectivePtr rosenbrock(Eigen::Index d) {
  ModelSpec spec;
  spec.kind = ModelKind::Rosenbrock;
  spec.dim = d;
  return make_objective(spec);
}

std::vector<ObjectivePtr> all_models() {
  return {regression(ModelKind::LogisticNonconvex, synthetic(80, 12, Task::Classification, 1)),
          regression(ModelKind::RobustLinear, synthetic(80, 12, Task::Regression, 2)), quadratic(12, 3),
          rosenbrock(6)};
}

// Straight-line loop evaluation of the logistic objective, written from the formula.
double logistic_oracle(const Dataset& ds, const Vector& w, double chi) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < ds.samples(); ++i) {
    double z = 0.0;
    for (Eigen::Index j = 0; j < ds.dim(); ++j) z += w[j] * ds.features(i, j);
    const double psi = 1.0 / (1.0 + std::exp(-z));
    const double b = ds.labels[i];
    total += -(b * std::log(psi) + (1.0 - b) * std::log(1.0 - psi));
  }
  double reg = 0.0;
  for (Eigen::Index j = 0; j < w.size(); ++j) reg += w[j] * w[j] / (1.0 + w[j] * w[j]);
  return total / static_cast<double>(ds.samples()) + chi * reg;
}

double robust_oracle(const Dataset& ds, const Vector& w) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < ds.samples(); ++i) {
    double z = 0.0;
    for (Eigen::Index j = 0; j < ds.dim(); ++j) z += w[j] * ds.features(i, j);
    const double r = ds.labels[i] - z;
    total += std::log(r * r / 2.0 + 1.0);
  }
  return total / static_cast<double>(ds.samples());
}

}  // namespace

TEST_CASE("logistic objective at w = 0 is log 2") {
  const auto model = regression(ModelKind::LogisticNonconvex, synthetic(37, 5, Task::Classification, 8));
  CHECK(model->value(Vector::Zero(5)) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
}

TEST_CASE("robust objective vanishes on a perfect fit") {
  auto ds = std::make_shared<Dataset>();
  ds->features = RowMatrix::Random(20, 4);
  const Vector w = Vector::LinSpaced(4, -1.0, 2.0);
  ds->labels = ds->features * w;
  const auto model = regression(ModelKind::RobustLinear, ds);
  CHECK(std::abs(model->value(w)) < 1e-28);
  CHECK(model->gradient(w).norm() < 1e-14);
}

TEST_CASE("logistic value matches a loop-level oracle") {
  const auto ds = synthetic(200, 50, Task::Classification, 4);
  const auto model = regression(ModelKind::LogisticNonconvex, ds, 0.1);
  const Vector w = gaussian_point(50, 0.3, 77);
  CHECK(std::abs(model->value(w) - logistic_oracle(*ds, w, 0.1)) <= 1e-12);
}

TEST_CASE("robust value matches a loop-level oracle") {
  const auto ds = synthetic(200, 50, Task::Regression, 5);
  const auto model = regression(ModelKind::RobustLinear, ds);
  const Vector w = gaussian_point(50, 0.3, 78);
  CHECK(std::abs(model->value(w) - robust_oracle(*ds, w)) <= 1e-12);
}

TEST_CASE("rosenbrock has its minimum at the all-ones point") {
  const auto model = rosenbrock(5);
  const Vector ones = Vector::Ones(5);
  CHECK(model->value(ones) == 0.0);
  CHECK(model->gradient(ones).norm() == 0.0);
  Vector x(2);
  x << -1.2, 1.0;
  CHECK(rosenbrock(2)->value(x) == doctest::Approx(24.2));
}

TEST_CASE("quadratic derivatives are exact up to difference truncation") {
  ModelSpec spec;
  spec.kind = ModelKind::Quadratic;
  spec.dim = 7;
  const auto model = make_objective(spec);
  const Vector x = gaussian_point(7, 1.0, 3);
  const auto rep = check_derivatives(*model, x, 1e-5);
  CHECK(rep.max_rel_err_grad <= 1e-8);
  CHECK(rep.max_rel_err_hvp <= 1e-8);
}

TEST_CASE("finite differences agree with analytic derivatives on every model") {
  for (const auto& model : all_models()) {
    for (std::uint64_t s = 0; s < 5; ++s) {
      const Vector x = gaussian_point(model->dim(), model->name() == "rosenbrock" ? 0.5 : 1.0, 1000 + s);
      const auto rep = check_derivatives(*model, x, 1e-5, 5, s);
      INFO(model->name(), " seed ", s);
      CHECK(rep.max_rel_err_grad <= 1e-5);
      CHECK(rep.max_rel_err_hvp <= 1e-4);
    }
  }
}

TEST_CASE("hessian action is linear and matches the dense hessian") {
  for (const auto& model : all_models()) {
    const Eigen::Index d = model->dim();
    const Vector x = gaussian_point(d, 0.7, 11);
    const Vector u = gaussian_point(d, 1.0, 12);
    const Vector v = gaussian_point(d, 1.0, 13);
    const Vector lhs = model->hessian_vec(x, 2.5 * u - 0.75 * v);
    const Vector rhs = 2.5 * model->hessian_vec(x, u) - 0.75 * model->hessian_vec(x, v);
    INFO(model->name());
    CHECK((lhs - rhs).norm() <= 1e-12 * std::max(1.0, rhs.norm()));

    const auto H = model->dense_hessian(x);
    REQUIRE(H.has_value());
    CHECK((*H - H->transpose()).norm() <= 1e-12 * std::max(1.0, H->norm()));
    for (Eigen::Index j = 0; j < d; ++j) {
      const Vector e = Vector::Unit(d, j);
      CHECK((H->col(j) - model->hessian_vec(x, e)).norm() <= 1e-10 * std::max(1.0, H->norm()));
    }
  }
}

TEST_CASE("dense hessian is withheld above the cap") {
  ModelSpec spec;
  spec.kind = ModelKind::Rosenbrock;
  spec.dim = 6;
  spec.dense_cap = 5;
  const auto model = make_objective(spec);
  CHECK_FALSE(model->has_dense());
  CHECK_FALSE(model->dense_hessian(Vector::Zero(6)).has_value());
}

TEST_CASE("evaluation is deterministic") {
  for (const auto& model : all_models()) {
    const Vector x = gaussian_point(model->dim(), 1.0, 5);
    CHECK(model->value(x) == model->value(x));
    CHECK(model->gradient(x) == model->gradient(x));
    CHECK(model->hessian_vec(x, x) == model->hessian_vec(x, x));
  }
}

TEST_CASE("logistic regularizer is bounded by chi d and objectives are bounded below") {
  const auto ds = synthetic(60, 8, Task::Classification, 21);
  const auto with = regression(ModelKind::LogisticNonconvex, ds, 0.1);
  const auto without = regression(ModelKind::LogisticNonconvex, ds, 0.0);
  const auto robust = regression(ModelKind::RobustLinear, synthetic(60, 8, Task::Regression, 22));
  for (std::uint64_t s = 0; s < 20; ++s) {
    const Vector w = gaussian_point(8, 0.5 + static_cast<double>(s), 300 + s);
    const double reg = with->value(w) - without->value(w);
    CHECK(reg >= -1e-12);
    CHECK(reg <= 0.1 * 8 + 1e-12);
    CHECK(without->value(w) >= 0.0);
    CHECK(robust->value(w) >= 0.0);
  }
}

TEST_CASE("Taylor remainder respects the cubic bound with an estimated Lipschitz constant") {
  for (const auto& model : all_models()) {
    const Eigen::Index d = model->dim();
    for (std::uint64_t s = 0; s < 5; ++s) {
      const Vector x = gaussian_point(d, 0.5, 500 + s);
      Vector step = gaussian_point(d, 1.0, 600 + s);
      step *= 0.3 / step.norm();
      const Matrix H0 = *model->dense_hessian(x);
      double lip = 0.0;
      for (int i = 1; i <= 20; ++i) {
        const double t = i / 20.0;
        const Matrix Ht = *model->dense_hessian(x + t * step);
        const double op = Eigen::SelfAdjointEigenSolver<Matrix>(Ht - H0).eigenvalues().cwiseAbs().maxCoeff();
        lip = std::max(lip, op / (t * step.norm()));
      }
      const double n = step.norm();
      const double rem = std::abs(model->value(x + step) - model->value(x) - model->gradient(x).dot(step) -
                                  0.5 * step.dot(H0 * step));
      INFO(model->name(), " seed ", s);
      CHECK(rem <= lip / 6.0 * n * n * n * 1.5 + 1e-12);
    }
  }
}

TEST_CASE("spec validation rejects inconsistent models") {
  ModelSpec spec;
  spec.kind = ModelKind::LogisticNonconvex;
  CHECK_THROWS_AS(make_objective(spec), ConfigError);
  spec.dataset = synthetic(10, 3, Task::Classification, 1);
  spec.dim = 4;
  CHECK_THROWS_AS(make_objective(spec), ConfigError);
  spec.dim = 3;
  spec.chi = -1.0;
  CHECK_THROWS_AS(make_objective(spec), ConfigError);
  ModelSpec rb;
  rb.kind = ModelKind::Rosenbrock;
  rb.dim = 1;
  CHECK_THROWS_AS(make_objective(rb), ConfigError);
  CHECK_THROWS_AS(parse_model_kind("logistic"), ConfigError);
}

TEST_CASE("derivative check names the coordinate of a non-finite evaluation") {
  class Blowup final : public ObjectiveModel {
   public:
    Eigen::Index dim() const override { return 3; }
    std::string name() const override { return "blowup"; }
    double value(const Vector& x) const override { return x[2] > 0.5 ? std::nan("") : x.squaredNorm(); }
    Vector gradient(const Vector& x) const override { return 2 * x; }
    Vector hessian_vec(const Vector&, const Vector& v) const override { return 2 * v; }
    std::optional<Matrix> dense_hessian(const Vector&) const override { return Matrix(2 * Matrix::Identity(3, 3)); }
  };
  Blowup model;
  Vector x(3);
  x << 0.1, 0.2, 0.5;
  try {
    check_derivatives(model, x, 1e-5);
    FAIL("no error raised");
  } catch (const NumericError& e) {
    CHECK(std::string(e.what()).find("coordinate 2") != std::string::npos);
  }
}

TEST_CASE("random quadratic has the requested spectrum") {
  const auto q = random_quadratic(10, 100.0, 4);
  Eigen::SelfAdjointEigenSolver<Matrix> es(q.A);
  CHECK(es.eigenvalues()[0] == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(es.eigenvalues()[9] == doctest::Approx(100.0).epsilon(1e-10));
  CHECK((q.A - q.A.transpose()).norm() == 0.0);
}
