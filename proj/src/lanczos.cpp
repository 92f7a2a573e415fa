#include "arcm/lanczos.hpp"

#include "arcm/rng.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>

namespace arcm {

Lanczos::Lanczos(LinearMap op, const Vector& start, Eigen::Index max_dim)
    : op_(std::move(op)), max_dim_(std::min<Eigen::Index>(max_dim, start.size())) {
  const double nrm = start.norm();
  if (!(nrm > 0.0) || !std::isfinite(nrm)) throw PreconditionError("Lanczos start vector must be nonzero and finite");
  q_.push_back(start / nrm);
}

bool Lanczos::expand() {
  if (broke_down_ || size() >= max_dim_) return false;
  const Vector& qj = q_.back();
  Vector w = op_(qj);
  if (!w.allFinite()) throw NumericError("non-finite Hessian action in Lanczos");
  const double a = qj.dot(w);
  w -= a * qj;
  if (!beta_.empty()) w -= beta_.back() * q_[q_.size() - 2];
  // Two passes of classical Gram-Schmidt against the whole basis.
  for (int pass = 0; pass < 2; ++pass)
    for (const auto& q : q_) w -= q.dot(w) * q;

  alpha_.push_back(a);
  const double b = w.norm();
  scale_ = std::max({scale_, std::abs(a), b});
  beta_.push_back(b);
  if (b <= 1e-12 * std::max(1.0, scale_)) {
    broke_down_ = true;
    return true;
  }
  if (size() < max_dim_) q_.push_back(w / b);
  return true;
}

Matrix Lanczos::tridiagonal() const {
  const Eigen::Index k = size();
  Matrix T = Matrix::Zero(k, k);
  for (Eigen::Index i = 0; i < k; ++i) {
    T(i, i) = alpha_[static_cast<std::size_t>(i)];
    if (i + 1 < k) {
      T(i, i + 1) = beta_[static_cast<std::size_t>(i)];
      T(i + 1, i) = beta_[static_cast<std::size_t>(i)];
    }
  }
  return T;
}

Vector Lanczos::lift(const Vector& u) const {
  Vector s = Vector::Zero(q_.front().size());
  for (Eigen::Index i = 0; i < u.size(); ++i) s += u[i] * q_[static_cast<std::size_t>(i)];
  return s;
}

Vector Lanczos::project(const Vector& v) const {
  Vector u(size());
  for (Eigen::Index i = 0; i < size(); ++i) u[i] = q_[static_cast<std::size_t>(i)].dot(v);
  return u;
}

MinEigResult dense_min_eig(const Matrix& H) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(H);
  if (es.info() != Eigen::Success || !es.eigenvalues().allFinite())
    throw NumericError("eigendecomposition failed");
  MinEigResult r;
  r.value = es.eigenvalues()[0];
  r.vector = es.eigenvectors().col(0);
  r.converged = true;
  return r;
}

MinEigResult lanczos_min_eig(const LinearMap& op, Eigen::Index d, int max_iter, double tol, int restarts,
                             std::uint64_t seed) {
  Vector start(d);
  for (Eigen::Index i = 0; i < d; ++i) start[i] = rng::normal(seed, rng::kTestInstance, static_cast<std::uint64_t>(i));

  MinEigResult best;
  for (int round = 0; round <= restarts; ++round) {
    Lanczos lz(op, start, std::min<Eigen::Index>(max_iter, d));
    while (lz.expand()) {
    }
    const Matrix T = lz.tridiagonal();
    Eigen::SelfAdjointEigenSolver<Matrix> es(T);
    if (es.info() != Eigen::Success) throw NumericError("tridiagonal eigensolve failed");
    const double theta = es.eigenvalues()[0];
    const Vector y = es.eigenvectors().col(0);
    best.value = theta;
    best.vector = lz.lift(y).normalized();
    best.iterations += static_cast<int>(lz.size());
    const double resid = lz.broke_down() ? 0.0 : std::abs(lz.residual_beta() * y[y.size() - 1]);
    best.converged = lz.broke_down() || lz.size() == d || resid <= tol * std::max(1.0, std::abs(theta));
    if (best.converged) break;
    start = best.vector;
  }
  return best;
}

}  // namespace arcm
