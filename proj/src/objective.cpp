#include "arcm/objective.hpp"

#include "arcm/rng.hpp"

#include <Eigen/Householder>
#include <Eigen/QR>

#include <cmath>

namespace arcm {

LinearMap ObjectiveModel::hessian(const Vector& x) const {
  return [this, x](const Vector& v) { return hessian_vec(x, v); };
}

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::LogisticNonconvex:
      return "logistic_nonconvex";
    case ModelKind::RobustLinear:
      return "robust_linear";
    case ModelKind::Quadratic:
      return "quadratic";
    case ModelKind::Rosenbrock:
      return "rosenbrock";
  }
  return "unknown";
}

ModelKind parse_model_kind(const std::string& s) {
  if (s == "logistic_nonconvex") return ModelKind::LogisticNonconvex;
  if (s == "robust_linear") return ModelKind::RobustLinear;
  if (s == "quadratic") return ModelKind::Quadratic;
  if (s == "rosenbrock") return ModelKind::Rosenbrock;
  throw ConfigError("unknown model kind '" + s + "'");
}

void ModelSpec::validate() const {
  if (!(chi >= 0.0)) throw ConfigError("chi must be nonnegative");
  const bool regression = kind == ModelKind::LogisticNonconvex || kind == ModelKind::RobustLinear;
  if (regression) {
    if (!dataset) throw ConfigError(to_string(kind) + " requires a dataset");
    dataset->validate();
    if (dim != 0 && dim != dataset->dim())
      throw ConfigError("dimension mismatch: spec dim " + std::to_string(dim) + " vs dataset dim " +
                        std::to_string(dataset->dim()));
    return;
  }
  if (dataset) throw ConfigError(to_string(kind) + " does not take a dataset");
  if (kind == ModelKind::Rosenbrock && dim < 2) throw ConfigError("rosenbrock needs dim >= 2");
  if (kind == ModelKind::Quadratic) {
    if (dim < 1 && !quadratic_matrix) throw ConfigError("quadratic needs dim >= 1");
    const Eigen::Index d = quadratic_matrix ? quadratic_matrix->rows() : dim;
    if (quadratic_matrix && (quadratic_matrix->cols() != d || (dim != 0 && dim != d)))
      throw ConfigError("quadratic matrix shape does not match dim");
    if (quadratic_rhs && quadratic_rhs->size() != d) throw ConfigError("quadratic rhs length does not match dim");
  }
}

namespace {

class QuadraticObjective final : public ObjectiveModel {
 public:
  QuadraticObjective(Matrix A, Vector b) : A_(std::move(A)), b_(std::move(b)) {}

  Eigen::Index dim() const override { return A_.rows(); }
  std::string name() const override { return "quadratic"; }
  double value(const Vector& x) const override { return 0.5 * x.dot(A_ * x) - b_.dot(x); }
  Vector gradient(const Vector& x) const override { return A_ * x - b_; }
  Vector hessian_vec(const Vector&, const Vector& v) const override { return A_ * v; }
  LinearMap hessian(const Vector&) const override {
    return [this](const Vector& v) -> Vector { return A_ * v; };
  }
  std::optional<Matrix> dense_hessian(const Vector&) const override {
    if (!has_dense()) return std::nullopt;
    return A_;
  }

 private:
  Matrix A_;
  Vector b_;
};

// sum_{i<d} 100 (x_{i+1} - x_i^2)^2 + (1 - x_i)^2
class RosenbrockObjective final : public ObjectiveModel {
 public:
  explicit RosenbrockObjective(Eigen::Index d) : d_(d) {}

  Eigen::Index dim() const override { return d_; }
  std::string name() const override { return "rosenbrock"; }

  double value(const Vector& x) const override {
    double f = 0.0;
    for (Eigen::Index i = 0; i + 1 < d_; ++i) {
      const double a = x[i + 1] - x[i] * x[i];
      const double c = 1.0 - x[i];
      f += 100.0 * a * a + c * c;
    }
    return f;
  }

  Vector gradient(const Vector& x) const override {
    Vector g = Vector::Zero(d_);
    for (Eigen::Index i = 0; i + 1 < d_; ++i) {
      const double a = x[i + 1] - x[i] * x[i];
      g[i] += -400.0 * a * x[i] - 2.0 * (1.0 - x[i]);
      g[i + 1] += 200.0 * a;
    }
    return g;
  }

  Vector hessian_vec(const Vector& x, const Vector& v) const override {
    Vector out = Vector::Zero(d_);
    for (Eigen::Index i = 0; i + 1 < d_; ++i) {
      const double hii = 1200.0 * x[i] * x[i] - 400.0 * x[i + 1] + 2.0;
      const double hij = -400.0 * x[i];
      out[i] += hii * v[i] + hij * v[i + 1];
      out[i + 1] += hij * v[i] + 200.0 * v[i + 1];
    }
    return out;
  }

  std::optional<Matrix> dense_hessian(const Vector& x) const override {
    if (!has_dense()) return std::nullopt;
    Matrix H = Matrix::Zero(d_, d_);
    for (Eigen::Index i = 0; i + 1 < d_; ++i) {
      H(i, i) += 1200.0 * x[i] * x[i] - 400.0 * x[i + 1] + 2.0;
      H(i, i + 1) += -400.0 * x[i];
      H(i + 1, i) += -400.0 * x[i];
      H(i + 1, i + 1) += 200.0;
    }
    return H;
  }

 private:
  Eigen::Index d_;
};

// (1/n) sum_i loss(a_i^T w, b_i) + chi sum_j w_j^2 / (1 + w_j^2)
class RegressionObjective final : public ObjectiveModel {
 public:
  RegressionObjective(std::shared_ptr<const Dataset> ds, kernels::Loss loss, double chi, kernels::Backend backend)
      : ds_(std::move(ds)), loss_(loss), chi_(chi), backend_(backend) {}

  Eigen::Index dim() const override { return ds_->dim(); }
  std::string name() const override {
    return loss_ == kernels::Loss::Logistic ? "logistic_nonconvex" : "robust_linear";
  }

  double value(const Vector& w) const override {
    Vector z;
    margins(w, z);
    const double data = backend_ == kernels::Backend::Serial ? kernels::serial::loss_sum(loss_, z, ds_->labels)
                                                              : kernels::parallel::loss_sum(loss_, z, ds_->labels);
    return data / samples() + regularizer(w);
  }

  Vector gradient(const Vector& w) const override {
    Vector z, t, g;
    margins(w, z);
    weights(z, false, t);
    transpose_times(t, g);
    g /= samples();
    if (chi_ > 0.0) {
      for (Eigen::Index j = 0; j < g.size(); ++j) {
        const double q = 1.0 + w[j] * w[j];
        g[j] += chi_ * 2.0 * w[j] / (q * q);
      }
    }
    return g;
  }

  Vector hessian_vec(const Vector& w, const Vector& v) const override { return hessian(w)(v); }

  LinearMap hessian(const Vector& w) const override {
    Vector z, c;
    margins(w, z);
    weights(z, true, c);
    c /= samples();
    Vector reg = regularizer_curvature(w);
    return [this, c = std::move(c), reg = std::move(reg)](const Vector& v) -> Vector {
      Vector out;
      if (backend_ == kernels::Backend::Serial)
        kernels::serial::weighted_hvp(ds_->features, c, v, out);
      else
        kernels::parallel::weighted_hvp(ds_->features, c, v, out);
      out.array() += reg.array() * v.array();
      return out;
    };
  }

  std::optional<Matrix> dense_hessian(const Vector& w) const override {
    if (!has_dense()) return std::nullopt;
    Vector z, c;
    margins(w, z);
    weights(z, true, c);
    c /= samples();
    Matrix H;
    if (backend_ == kernels::Backend::Serial)
      kernels::serial::weighted_gram(ds_->features, c, H);
    else
      kernels::parallel::weighted_gram(ds_->features, c, H);
    H = 0.5 * (H + H.transpose()).eval();
    H.diagonal() += regularizer_curvature(w);
    return H;
  }

 private:
  double samples() const { return static_cast<double>(ds_->samples()); }

  void margins(const Vector& w, Vector& z) const {
    if (backend_ == kernels::Backend::Serial)
      kernels::serial::margins(ds_->features, w, z);
    else
      kernels::parallel::margins(ds_->features, w, z);
  }

  void weights(const Vector& z, bool curvature, Vector& out) const {
    if (backend_ == kernels::Backend::Serial)
      kernels::serial::sample_weights(loss_, z, ds_->labels, curvature, out);
    else
      kernels::parallel::sample_weights(loss_, z, ds_->labels, curvature, out);
  }

  void transpose_times(const Vector& t, Vector& out) const {
    if (backend_ == kernels::Backend::Serial)
      kernels::serial::transpose_times(ds_->features, t, out);
    else
      kernels::parallel::transpose_times(ds_->features, t, out);
  }

  double regularizer(const Vector& w) const {
    if (chi_ == 0.0) return 0.0;
    double r = 0.0;
    for (Eigen::Index j = 0; j < w.size(); ++j) {
      const double s = w[j] * w[j];
      r += s / (1.0 + s);
    }
    return chi_ * r;
  }

  // d^2/dw^2 [w^2 / (1 + w^2)] = (2 - 6 w^2) / (1 + w^2)^3
  Vector regularizer_curvature(const Vector& w) const {
    Vector r = Vector::Zero(w.size());
    if (chi_ == 0.0) return r;
    for (Eigen::Index j = 0; j < w.size(); ++j) {
      const double s = w[j] * w[j];
      const double q = 1.0 + s;
      r[j] = chi_ * (2.0 - 6.0 * s) / (q * q * q);
    }
    return r;
  }

  std::shared_ptr<const Dataset> ds_;
  kernels::Loss loss_;
  double chi_;
  kernels::Backend backend_;
};

}  // namespace

ObjectivePtr make_objective(const ModelSpec& spec) {
  spec.validate();
  std::shared_ptr<ObjectiveModel> model;
  switch (spec.kind) {
    case ModelKind::LogisticNonconvex:
      model = std::make_shared<RegressionObjective>(spec.dataset, kernels::Loss::Logistic, spec.chi, spec.backend);
      break;
    case ModelKind::RobustLinear:
      model = std::make_shared<RegressionObjective>(spec.dataset, kernels::Loss::Robust, 0.0, spec.backend);
      break;
    case ModelKind::Quadratic: {
      const Eigen::Index d = spec.quadratic_matrix ? spec.quadratic_matrix->rows() : spec.dim;
      Matrix A = spec.quadratic_matrix ? *spec.quadratic_matrix : Matrix::Identity(d, d);
      Vector b = spec.quadratic_rhs ? *spec.quadratic_rhs : Vector::Zero(d);
      model = std::make_shared<QuadraticObjective>(std::move(A), std::move(b));
      break;
    }
    case ModelKind::Rosenbrock:
      model = std::make_shared<RosenbrockObjective>(spec.dim);
      break;
  }
  model->set_dense_cap(spec.dense_cap);
  return model;
}

QuadraticInstance random_quadratic(Eigen::Index d, double cond, std::uint64_t seed) {
  if (d < 1) throw ConfigError("quadratic dimension must be positive");
  if (!(cond >= 1.0)) throw ConfigError("condition number must be >= 1");
  Matrix G(d, d);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j)
      G(i, j) = rng::normal(seed, rng::kQuadratic, static_cast<std::uint64_t>(i * d + j));
  const Matrix Q = Eigen::HouseholderQR<Matrix>(G).householderQ();
  Vector lambda(d);
  for (Eigen::Index i = 0; i < d; ++i) {
    const double t = d > 1 ? static_cast<double>(i) / static_cast<double>(d - 1) : 0.0;
    lambda[i] = std::pow(cond, t);
  }
  QuadraticInstance q;
  q.A = Q * lambda.asDiagonal() * Q.transpose();
  q.A = 0.5 * (q.A + q.A.transpose()).eval();
  q.b.resize(d);
  for (Eigen::Index i = 0; i < d; ++i)
    q.b[i] = rng::normal(seed, rng::kQuadratic, static_cast<std::uint64_t>(d * d + i));
  return q;
}

Vector gaussian_point(Eigen::Index d, double scale, std::uint64_t seed) {
  Vector x(d);
  for (Eigen::Index i = 0; i < d; ++i)
    x[i] = scale * rng::normal(seed, rng::kStartPoint, static_cast<std::uint64_t>(i));
  return x;
}

DerivativeReport check_derivatives(const ObjectiveModel& model, const Vector& x, double h, int directions,
                                   std::uint64_t seed) {
  if (!(h > 0.0)) throw PreconditionError("finite-difference step must be positive");
  const Eigen::Index d = model.dim();
  if (x.size() != d) throw PreconditionError("point dimension does not match the model");

  const auto require_finite = [](double v, const std::string& what, Eigen::Index coord) {
    if (!std::isfinite(v))
      throw NumericError("non-finite " + what + " at coordinate " + std::to_string(coord));
  };

  DerivativeReport rep;
  const Vector g = model.gradient(x);
  for (Eigen::Index i = 0; i < d; ++i) require_finite(g[i], "gradient", i);

  Vector fd(d);
  Vector xp = x;
  for (Eigen::Index i = 0; i < d; ++i) {
    xp[i] = x[i] + h;
    const double fp = model.value(xp);
    xp[i] = x[i] - h;
    const double fm = model.value(xp);
    xp[i] = x[i];
    require_finite(fp, "value", i);
    require_finite(fm, "value", i);
    fd[i] = (fp - fm) / (2.0 * h);
  }
  rep.max_rel_err_grad = (fd - g).lpNorm<Eigen::Infinity>() / std::max(1.0, g.lpNorm<Eigen::Infinity>());

  const LinearMap H = model.hessian(x);
  for (int k = 0; k < directions; ++k) {
    Vector u(d);
    for (Eigen::Index i = 0; i < d; ++i)
      u[i] = rng::normal(seed, rng::kTestInstance, static_cast<std::uint64_t>(k) * static_cast<std::uint64_t>(d) +
                                                       static_cast<std::uint64_t>(i));
    u.normalize();
    const Vector hu = H(u);
    const Vector gp = model.gradient(x + h * u);
    const Vector gm = model.gradient(x - h * u);
    for (Eigen::Index i = 0; i < d; ++i) {
      require_finite(gp[i], "gradient", i);
      require_finite(gm[i], "gradient", i);
      require_finite(hu[i], "hessian action", i);
    }
    const Vector fd_h = (gp - gm) / (2.0 * h);
    const double err = (fd_h - hu).lpNorm<Eigen::Infinity>() / std::max(1.0, hu.lpNorm<Eigen::Infinity>());
    rep.max_rel_err_hvp = std::max(rep.max_rel_err_hvp, err);
  }
  return rep;
}

}  // namespace arcm
