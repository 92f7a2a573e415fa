#include "arcm/kernels.hpp"

#include <omp.h>

#include <algorithm>
#include <vector>

namespace arcm::kernels {

void apply_thread_cap() {
  const int cap = thread_cap();
  if (cap > 0) omp_set_num_threads(cap);
}

namespace parallel {
namespace {

inline Eigen::Index block_count(Eigen::Index n) {
  const auto b = static_cast<Eigen::Index>(kBlockRows);
  return (n + b - 1) / b;
}

inline Eigen::Index block_begin(Eigen::Index blk) { return blk * static_cast<Eigen::Index>(kBlockRows); }

inline Eigen::Index block_end(Eigen::Index blk, Eigen::Index n) {
  return std::min(n, block_begin(blk + 1));
}

}  // namespace

void margins(const RowMatrix& A, const Vector& w, Vector& z) {
  const Eigen::Index n = A.rows();
  z.resize(n);
#pragma omp parallel for schedule(static)
  for (Eigen::Index i = 0; i < n; ++i) z[i] = A.row(i).dot(w.transpose());
}

double loss_sum(Loss loss, const Vector& z, const Vector& b) {
  const Eigen::Index n = z.size();
  const Eigen::Index nb = block_count(n);
  std::vector<double> partial(static_cast<std::size_t>(nb), 0.0);
#pragma omp parallel for schedule(static)
  for (Eigen::Index blk = 0; blk < nb; ++blk) {
    double acc = 0.0;
    for (Eigen::Index i = block_begin(blk); i < block_end(blk, n); ++i)
      acc += loss_value(loss, z[i], b[i]);
    partial[static_cast<std::size_t>(blk)] = acc;
  }
  double total = 0.0;
  for (double p : partial) total += p;
  return total;
}

void transpose_times(const RowMatrix& A, const Vector& t, Vector& out) {
  const Eigen::Index n = A.rows();
  const Eigen::Index d = A.cols();
  const Eigen::Index nb = block_count(n);
  Matrix partial = Matrix::Zero(d, nb);
#pragma omp parallel for schedule(static)
  for (Eigen::Index blk = 0; blk < nb; ++blk) {
    auto col = partial.col(blk);
    for (Eigen::Index i = block_begin(blk); i < block_end(blk, n); ++i)
      col.noalias() += t[i] * A.row(i).transpose();
  }
  out.setZero(d);
  for (Eigen::Index blk = 0; blk < nb; ++blk) out += partial.col(blk);
}

void sample_weights(Loss loss, const Vector& z, const Vector& b, bool curvature, Vector& out) {
  const Eigen::Index n = z.size();
  out.resize(n);
#pragma omp parallel for schedule(static)
  for (Eigen::Index i = 0; i < n; ++i)
    out[i] = curvature ? loss_curvature(loss, z[i], b[i]) : loss_slope(loss, z[i], b[i]);
}

void weighted_hvp(const RowMatrix& A, const Vector& weights, const Vector& v, Vector& out) {
  Vector av;
  margins(A, v, av);
  const Eigen::Index n = av.size();
#pragma omp parallel for schedule(static)
  for (Eigen::Index i = 0; i < n; ++i) av[i] *= weights[i];
  transpose_times(A, av, out);
}

void weighted_gram(const RowMatrix& A, const Vector& weights, Matrix& out) {
  const Eigen::Index n = A.rows();
  const Eigen::Index d = A.cols();
  out.setZero(d, d);
  // Each thread owns the lower part of whole output columns; rows are visited in order per column.
#pragma omp parallel for schedule(dynamic, 4)
  for (Eigen::Index j = 0; j < d; ++j) {
    auto col = out.col(j).tail(d - j);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double s = weights[i] * A(i, j);
      if (s != 0.0) col.noalias() += s * A.row(i).tail(d - j).transpose();
    }
  }
  out.triangularView<Eigen::StrictlyUpper>() = out.transpose();
}

}  // namespace parallel
}  // namespace arcm::kernels
