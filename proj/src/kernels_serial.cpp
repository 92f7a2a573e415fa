#include "arcm/kernels.hpp"

#include <cmath>
#include <cstdlib>

namespace arcm::kernels {

double softplus(double z) {
  // log(1 + e^z) without overflow for large |z|
  if (z > 0.0) return z + std::log1p(std::exp(-z));
  return std::log1p(std::exp(z));
}

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double loss_value(Loss loss, double z, double b) {
  if (loss == Loss::Logistic) return softplus(z) - b * z;
  const double r = b - z;
  return std::log1p(0.5 * r * r);
}

double loss_slope(Loss loss, double z, double b) {
  if (loss == Loss::Logistic) return sigmoid(z) - b;
  const double r = b - z;
  return -2.0 * r / (r * r + 2.0);
}

double loss_curvature(Loss loss, double z, double b) {
  if (loss == Loss::Logistic) {
    const double p = sigmoid(z);
    return p * (1.0 - p);
  }
  const double r = b - z;
  const double den = r * r + 2.0;
  return (4.0 - 2.0 * r * r) / (den * den);
}

int thread_cap() {
  static const int cap = [] {
    const char* env = std::getenv("ARCM_THREADS");
    if (env == nullptr) return 0;
    const int v = std::atoi(env);
    return v > 0 ? v : 0;
  }();
  return cap;
}

namespace serial {

void margins(const RowMatrix& A, const Vector& w, Vector& z) {
  const auto n = A.rows();
  const auto d = A.cols();
  z.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double acc = 0.0;
    for (Eigen::Index j = 0; j < d; ++j) acc += A(i, j) * w[j];
    z[i] = acc;
  }
}

double loss_sum(Loss loss, const Vector& z, const Vector& b) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < z.size(); ++i) acc += loss_value(loss, z[i], b[i]);
  return acc;
}

void transpose_times(const RowMatrix& A, const Vector& t, Vector& out) {
  out.setZero(A.cols());
  for (Eigen::Index i = 0; i < A.rows(); ++i) {
    const double ti = t[i];
    for (Eigen::Index j = 0; j < A.cols(); ++j) out[j] += ti * A(i, j);
  }
}

void sample_weights(Loss loss, const Vector& z, const Vector& b, bool curvature, Vector& out) {
  out.resize(z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i)
    out[i] = curvature ? loss_curvature(loss, z[i], b[i]) : loss_slope(loss, z[i], b[i]);
}

void weighted_hvp(const RowMatrix& A, const Vector& weights, const Vector& v, Vector& out) {
  Vector av;
  margins(A, v, av);
  for (Eigen::Index i = 0; i < av.size(); ++i) av[i] *= weights[i];
  transpose_times(A, av, out);
}

void weighted_gram(const RowMatrix& A, const Vector& weights, Matrix& out) {
  const auto d = A.cols();
  out.setZero(d, d);
  for (Eigen::Index i = 0; i < A.rows(); ++i) {
    const double wi = weights[i];
    for (Eigen::Index j = 0; j < d; ++j) {
      const double s = wi * A(i, j);
      for (Eigen::Index k = 0; k < d; ++k) out(k, j) += s * A(i, k);
    }
  }
}

}  // namespace serial
}  // namespace arcm::kernels
