#pragma once

#include "arcm/objective.hpp"
#include "arcm/types.hpp"

#include <cstdint>
#include <vector>

namespace arcm {

// Lanczos tridiagonalization of a symmetric operator with full
// reorthogonalization. After k successful expand() calls the basis holds
// q_1..q_k and H Q_k = Q_k T_k + beta_k q_{k+1} e_k^T.
class Lanczos {
 public:
  Lanczos(LinearMap op, const Vector& start, Eigen::Index max_dim);

  // Adds one column to T. Returns false once the basis is complete
  // (max_dim reached) or the Krylov space became invariant.
  bool expand();

  Eigen::Index size() const { return static_cast<Eigen::Index>(alpha_.size()); }
  bool broke_down() const { return broke_down_; }
  // beta_k, the coupling of the current basis to the next Lanczos vector.
  double residual_beta() const { return beta_.empty() ? 0.0 : beta_.back(); }

  Matrix tridiagonal() const;
  // Q_k u
  Vector lift(const Vector& u) const;
  // Q_k^T v
  Vector project(const Vector& v) const;
  const Vector& basis(Eigen::Index i) const { return q_[static_cast<std::size_t>(i)]; }

 private:
  LinearMap op_;
  Eigen::Index max_dim_;
  std::vector<Vector> q_;  // q_1..q_{k+1} (the last one pending)
  std::vector<double> alpha_;
  std::vector<double> beta_;
  double scale_ = 0.0;
  bool broke_down_ = false;
};

struct MinEigResult {
  double value = 0.0;
  Vector vector;
  bool converged = false;
  int iterations = 0;
};

// Smallest eigenvalue of a symmetric operator by Lanczos with `restarts`
// restarts from the current Ritz vector. Converged when the Ritz residual
// is below tol * max(1, |theta|).
MinEigResult lanczos_min_eig(const LinearMap& op, Eigen::Index d, int max_iter = 100, double tol = 1e-8,
                             int restarts = 1, std::uint64_t seed = 0x5eed);

// Exact smallest eigenpair of a dense symmetric matrix.
MinEigResult dense_min_eig(const Matrix& H);

}  // namespace arcm
