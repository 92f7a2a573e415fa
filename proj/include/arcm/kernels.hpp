#pragma once

// Sample-wise kernels behind the two regression objectives.
//
// Two implementations share one signature set:
//   kernels::serial    straight loops, the reference used by tests
//   kernels::parallel  OpenMP over fixed-size row blocks
//
// The parallel reductions sum per-block partials in block order, so results
// do not depend on the thread count. They can differ from the serial loops in
// the last few ulps because the summation order differs.

#include "arcm/types.hpp"

#include <cstddef>

namespace arcm::kernels {

// Per-sample loss as a function of the margin z = w^T a and label b.
enum class Loss {
  Logistic,  // softplus(z) - b z  (negative log-likelihood of a Bernoulli label)
  Robust,    // log(r^2 / 2 + 1) with r = b - z
};

// Rows per block in the parallel reductions. Fixed so the summation tree is
// the same for every thread count.
inline constexpr std::size_t kBlockRows = 64;

// Scalar pieces of one sample term, derivatives taken with respect to z.
double loss_value(Loss loss, double z, double b);
double loss_slope(Loss loss, double z, double b);
double loss_curvature(Loss loss, double z, double b);

double softplus(double z);
double sigmoid(double z);

namespace serial {

// z = A w
void margins(const RowMatrix& A, const Vector& w, Vector& z);
// sum_i loss(z_i, b_i)
double loss_sum(Loss loss, const Vector& z, const Vector& b);
// A^T t
void transpose_times(const RowMatrix& A, const Vector& t, Vector& out);
// out_i = phi'(z_i), or phi''(z_i) with curvature = true
void sample_weights(Loss loss, const Vector& z, const Vector& b, bool curvature, Vector& out);
// A^T diag(weights) A v
void weighted_hvp(const RowMatrix& A, const Vector& weights, const Vector& v, Vector& out);
// A^T diag(weights) A
void weighted_gram(const RowMatrix& A, const Vector& weights, Matrix& out);

}  // namespace serial

namespace parallel {

void margins(const RowMatrix& A, const Vector& w, Vector& z);
double loss_sum(Loss loss, const Vector& z, const Vector& b);
void transpose_times(const RowMatrix& A, const Vector& t, Vector& out);
void sample_weights(Loss loss, const Vector& z, const Vector& b, bool curvature, Vector& out);
void weighted_hvp(const RowMatrix& A, const Vector& weights, const Vector& v, Vector& out);
void weighted_gram(const RowMatrix& A, const Vector& weights, Matrix& out);

}  // namespace parallel

// Which implementation an objective dispatches to.
enum class Backend { Serial, Parallel };

// Upper bound on OpenMP threads; reads ARCM_THREADS once, 0 means no cap.
int thread_cap();
// Applies thread_cap() to the OpenMP runtime. Safe to call repeatedly.
void apply_thread_cap();

}  // namespace arcm::kernels
