#include "arcm/subproblem.hpp"

#include "arcm/lanczos.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>

namespace arcm {

CubicModel CubicModel::from_dense(Vector g, Matrix H, double sigma) {
  CubicModel m;
  m.g = std::move(g);
  m.dense_h = std::move(H);
  m.sigma = sigma;
  return m;
}

CubicModel CubicModel::from_operator(Vector g, LinearMap H, double sigma) {
  CubicModel m;
  m.g = std::move(g);
  m.hess = std::move(H);
  m.sigma = sigma;
  return m;
}

Vector CubicModel::apply_h(const Vector& v) const {
  if (dense_h) return *dense_h * v;
  return hess(v);
}

void CubicModel::validate() const {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw PreconditionError("cubic penalty sigma must be positive");
  if (!dense_h && !hess) throw PreconditionError("cubic model needs a Hessian");
  if (dense_h && (dense_h->rows() != g.size() || dense_h->cols() != g.size()))
    throw PreconditionError("Hessian shape does not match gradient");
  if (!g.allFinite()) throw NumericError("non-finite gradient in cubic model");
}

Vector TrustRegionModel::apply_h(const Vector& v) const {
  if (dense_h) return *dense_h * v;
  return hess(v);
}

std::string to_string(CrsSolver s) {
  switch (s) {
    case CrsSolver::Exact:
      return "exact";
    case CrsSolver::Krylov:
      return "krylov";
    case CrsSolver::Cauchy:
      return "cauchy";
  }
  return "unknown";
}

CrsSolver parse_crs_solver(const std::string& s) {
  if (s == "exact") return CrsSolver::Exact;
  if (s == "krylov") return CrsSolver::Krylov;
  if (s == "cauchy") return CrsSolver::Cauchy;
  throw ConfigError("unknown CRS solver '" + s + "'");
}

double model_value(const CubicModel& m, const Vector& s) {
  const double n = s.norm();
  return m.g.dot(s) + 0.5 * s.dot(m.apply_h(s)) + m.sigma / 6.0 * n * n * n;
}

Vector model_gradient(const CubicModel& m, const Vector& s) {
  return m.g + m.apply_h(s) + (0.5 * m.sigma * s.norm()) * s;
}

namespace {

constexpr int kMaxSecularIterations = 200;

struct Spectral {
  Vector eig;  // ascending
  Matrix Q;
  Vector ghat;  // Q^T g
};

Spectral decompose(const Matrix& H, const Vector& g) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(H);
  if (es.info() != Eigen::Success || !es.eigenvalues().allFinite() || !es.eigenvectors().allFinite())
    throw NumericError("eigendecomposition of the model Hessian failed");
  Spectral sp;
  sp.eig = es.eigenvalues();
  sp.Q = es.eigenvectors();
  sp.ghat = sp.Q.transpose() * g;
  return sp;
}

// Eigenvalues within this distance of the smallest one form its eigenspace.
double eigenspace_tol(const Vector& eig) {
  return 1e-10 * std::max(1.0, eig.cwiseAbs().maxCoeff());
}

// Hard case: every gradient component in the smallest eigenspace is negligible.
bool gradient_misses_min_eigenspace(const Spectral& sp, double gnorm, double tol, Vector& ghat_reduced) {
  ghat_reduced = sp.ghat;
  const double lam1 = sp.eig[0];
  for (Eigen::Index i = 0; i < sp.eig.size() && sp.eig[i] - lam1 <= tol; ++i) {
    if (std::abs(sp.ghat[i]) > 1e-12 * gnorm) return false;
    ghat_reduced[i] = 0.0;
  }
  return true;
}

// Step p(mu) = -ghat / (d + mu) in eigen coordinates, with d = eig + shift >= 0.
struct SecularPoint {
  Vector shat;
  double norm = 0.0;
  double dnorm_inv = 0.0;  // d/dmu (1 / |s(mu)|)
};

SecularPoint secular_point(const Vector& d, const Vector& ghat, double mu) {
  SecularPoint p;
  p.shat.resize(d.size());
  double cube_sum = 0.0;
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    if (ghat[i] == 0.0) {
      p.shat[i] = 0.0;
      continue;
    }
    const double den = d[i] + mu;
    p.shat[i] = -ghat[i] / den;
    cube_sum += ghat[i] * ghat[i] / (den * den * den);
  }
  p.norm = p.shat.norm();
  p.dnorm_inv = cube_sum / (p.norm * p.norm * p.norm);
  return p;
}

struct SecularRoot {
  Vector shat;
  double mu = 0.0;
  bool converged = false;
  int iterations = 0;
};

// Safeguarded Newton on an increasing residual r(mu) over (0, hi], hi chosen
// so that r(hi) >= 0. `residual(point, mu)` returns {r, r', done}.
template <class Residual>
SecularRoot find_root(const Vector& d, const Vector& ghat, double hi, Residual residual) {
  SecularRoot out;
  double lo = 0.0;
  double mu = hi;
  for (int it = 0; it < kMaxSecularIterations; ++it) {
    out.iterations = it + 1;
    const SecularPoint p = secular_point(d, ghat, mu);
    const auto [r, dr, done] = residual(p, mu);
    out.shat = p.shat;
    out.mu = mu;
    if (done || !std::isfinite(r)) {
      out.converged = std::isfinite(r);
      return out;
    }
    if (r < 0.0)
      lo = mu;
    else
      hi = mu;
    if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * hi) {
      out.converged = true;
      return out;
    }
    double next = mu - r / dr;
    if (!(next > lo && next < hi) || !std::isfinite(next)) next = lo > 0.0 ? 0.5 * (lo + hi) : 0.5 * hi;
    mu = next;
  }
  return out;
}

CrsSolution finish_cubic(const CubicModel& m, const Matrix& Q, const Vector& shat, double lambda, bool hard) {
  CrsSolution sol;
  sol.s = Q * shat;
  sol.model_decrease = -model_value(m, sol.s);
  sol.model_grad_norm = model_gradient(m, sol.s).norm();
  sol.lambda = lambda;
  sol.solver = CrsSolver::Exact;
  sol.hard_case = hard;
  return sol;
}

}  // namespace

CrsSolution solve_exact(const CubicModel& m, double tol) {
  m.validate();
  if (!m.dense_h) throw PreconditionError("exact CRS solver needs a dense Hessian");
  const double sigma = m.sigma;
  const double gnorm = m.g.norm();
  const Spectral sp = decompose(*m.dense_h, m.g);
  const Eigen::Index d = sp.eig.size();
  const double lam1 = sp.eig[0];
  const double shift = std::max(0.0, -lam1);
  Vector dvec = (sp.eig.array() + shift).cwiseMax(0.0).matrix();

  if (gnorm == 0.0) {
    Vector shat = Vector::Zero(d);
    if (lam1 >= 0.0) return finish_cubic(m, sp.Q, shat, 0.0, false);
    shat[0] = 2.0 * shift / sigma;
    return finish_cubic(m, sp.Q, shat, shift, true);
  }

  Vector ghat = sp.ghat;
  if (shift > 0.0) {
    Vector reduced;
    if (gradient_misses_min_eigenspace(sp, gnorm, eigenspace_tol(sp.eig), reduced)) {
      // Candidate step at lambda = -lam1 without the minimal eigenspace.
      Vector p = Vector::Zero(d);
      for (Eigen::Index i = 0; i < d; ++i)
        if (reduced[i] != 0.0) p[i] = -reduced[i] / dvec[i];
      const double target = 2.0 * shift / sigma;
      if (p.norm() <= target) {
        const double tau = std::sqrt(std::max(0.0, target * target - p.squaredNorm()));
        p[0] += tau;
        return finish_cubic(m, sp.Q, p, shift, true);
      }
      ghat = reduced;
    }
  }

  const double gtol = 1e-2 * tol * std::max(1.0, gnorm);
  // At mu = sqrt(sigma |g| / 2) the step is no longer than 2 lambda / sigma.
  const double hi = std::sqrt(0.5 * sigma * gnorm) * (1.0 + 1e-8) + std::numeric_limits<double>::min();
  const SecularRoot root = find_root(dvec, ghat, hi, [&](const SecularPoint& p, double mu) {
    const double lambda = shift + mu;
    const double r = 1.0 / p.norm - sigma / (2.0 * lambda);
    const double dr = p.dnorm_inv + sigma / (2.0 * lambda * lambda);
    const double grad = std::abs(0.5 * sigma * p.norm - lambda) * p.norm;
    return std::tuple{r, dr, grad <= gtol};
  });
  CrsSolution sol = finish_cubic(m, sp.Q, root.shat, shift + root.mu, false);
  if (!root.converged) throw SolverFailure("secular equation did not converge in 200 iterations", sol);
  if (!sol.s.allFinite()) throw NumericError("non-finite CRS step");
  return sol;
}

CrsSolution solve_krylov(const CubicModel& m, int max_dim, double tol) {
  KrylovOptions opts;
  opts.max_dim = max_dim;
  opts.tol = tol;
  return solve_krylov(m, opts);
}

CrsSolution solve_krylov(const CubicModel& m, const KrylovOptions& opts) {
  m.validate();
  if (opts.max_dim < 1) throw PreconditionError("Krylov dimension must be at least 1");
  const Eigen::Index d = m.dim();
  const double gnorm = m.g.norm();
  const bool custom_start = opts.start.size() > 0 && opts.start.norm() > 0.0;

  CrsSolution sol;
  sol.solver = CrsSolver::Krylov;
  if (gnorm == 0.0 && !custom_start) {
    sol.s = Vector::Zero(d);
    sol.zero_gradient = true;
    return sol;
  }

  const LinearMap op = [&m](const Vector& v) { return m.apply_h(v); };
  Lanczos lz(op, custom_start ? opts.start : m.g, std::min<Eigen::Index>(opts.max_dim, d));
  const double abs_tol = opts.tol * std::max(1.0, gnorm);
  const double cubic_coeff = std::pow(m.sigma / 24.0, 2.0 / 3.0);

  Vector u;
  CrsSolution reduced;
  while (lz.expand()) {
    const Eigen::Index j = lz.size();
    Vector gred;
    if (custom_start) {
      gred = lz.project(m.g);
    } else {
      gred = Vector::Zero(j);
      gred[0] = gnorm;
    }
    reduced = solve_exact(CubicModel::from_dense(gred, lz.tridiagonal(), m.sigma), 1e-14);
    u = reduced.s;

    double grad_norm;
    if (custom_start) {
      grad_norm = model_gradient(m, lz.lift(u)).norm();
    } else {
      const double tail = lz.broke_down() ? 0.0 : lz.residual_beta() * u[j - 1];
      grad_norm = std::hypot(reduced.model_grad_norm, tail);
    }
    const double threshold = std::min(abs_tol, cubic_coeff * u.squaredNorm());
    if (grad_norm <= threshold || lz.broke_down()) break;
  }

  sol.s = lz.lift(u);
  sol.model_decrease = -model_value(m, sol.s);
  sol.model_grad_norm = model_gradient(m, sol.s).norm();
  sol.lambda = reduced.lambda;
  sol.krylov_dim = static_cast<int>(lz.size());
  sol.hard_case = reduced.hard_case;
  if (!sol.s.allFinite()) throw NumericError("non-finite Krylov CRS step");
  return sol;
}

CrsSolution cauchy_point(const CubicModel& m) {
  m.validate();
  const double gnorm = m.g.norm();
  if (gnorm == 0.0) throw PreconditionError("Cauchy point needs a nonzero gradient");
  const Vector hg = m.apply_h(m.g);
  const double curv = m.g.dot(hg);
  const double g2 = gnorm * gnorm;
  // Positive root of -|g|^2 + a g^T H g + (sigma/2) a^2 |g|^3 = 0.
  const double disc = std::sqrt(curv * curv + 2.0 * m.sigma * g2 * g2 * gnorm);
  const double alpha = curv > 0.0 ? 2.0 * g2 / (curv + disc) : (disc - curv) / (m.sigma * g2 * gnorm);

  CrsSolution sol;
  sol.solver = CrsSolver::Cauchy;
  sol.s = -alpha * m.g;
  const double snorm = alpha * gnorm;
  sol.model_decrease = -(-alpha * g2 + 0.5 * alpha * alpha * curv + m.sigma / 6.0 * snorm * snorm * snorm);
  sol.model_grad_norm = (m.g - alpha * hg + (0.5 * m.sigma * snorm) * sol.s).norm();
  sol.lambda = 0.5 * m.sigma * snorm;
  return sol;
}

InexactnessCertificate certify_inexact(const CubicModel& m, const CrsSolution& approx,
                                       std::optional<double> exact_norm) {
  if (!(approx.model_decrease > 0.0))
    throw PreconditionError("certificate invalid: inexact step must strictly decrease the model");
  const double n = approx.s.norm();
  const double cubic = m.sigma * n * n * n;
  InexactnessCertificate c;
  c.delta1 = std::max(0.0, cubic / 12.0 - approx.model_decrease);
  c.delta2 = std::pow(model_gradient(m, approx.s).norm(), 1.5);
  c.delta = std::max(c.delta1, c.delta2);
  if (exact_norm) {
    c.delta3 = std::pow(std::abs(n - *exact_norm), 3.0);
    c.delta = std::max(c.delta, *c.delta3);
  }
  c.ratio_to_cubic = c.delta / cubic;
  return c;
}

namespace {

TrSolution finish_tr(const TrustRegionModel& m, const Matrix& Q, const Vector& shat, double lambda, bool boundary,
                     bool hard) {
  TrSolution sol;
  sol.s = Q * shat;
  sol.model_decrease = -(m.g.dot(sol.s) + 0.5 * sol.s.dot(m.apply_h(sol.s)));
  sol.lambda = lambda;
  sol.on_boundary = boundary;
  sol.hard_case = hard;
  return sol;
}

}  // namespace

TrSolution solve_tr_exact(const TrustRegionModel& m, double tol) {
  if (!m.dense_h) throw PreconditionError("exact trust-region solver needs a dense Hessian");
  if (!(m.radius > 0.0)) throw PreconditionError("trust radius must be positive");
  const double radius = m.radius;
  const double gnorm = m.g.norm();
  const Spectral sp = decompose(*m.dense_h, m.g);
  const Eigen::Index d = sp.eig.size();
  const double lam1 = sp.eig[0];
  const double etol = eigenspace_tol(sp.eig);

  if (lam1 > etol) {
    const Vector newton = -(sp.ghat.array() / sp.eig.array()).matrix();
    if (newton.norm() <= radius) return finish_tr(m, sp.Q, newton, 0.0, false, false);
  }

  const double shift = std::max(0.0, -lam1);
  Vector dvec = (sp.eig.array() + shift).cwiseMax(0.0).matrix();
  Vector ghat = sp.ghat;
  if (lam1 <= etol) {
    Vector reduced;
    if (gnorm == 0.0 || gradient_misses_min_eigenspace(sp, gnorm, etol, reduced)) {
      if (gnorm == 0.0) reduced = Vector::Zero(d);
      Vector p = Vector::Zero(d);
      for (Eigen::Index i = 0; i < d; ++i)
        if (reduced[i] != 0.0) p[i] = -reduced[i] / dvec[i];
      if (p.norm() <= radius) {
        if (lam1 >= 0.0) return finish_tr(m, sp.Q, p, 0.0, false, false);
        p[0] += std::sqrt(std::max(0.0, radius * radius - p.squaredNorm()));
        return finish_tr(m, sp.Q, p, shift, true, true);
      }
      ghat = reduced;
    }
  }

  const double hi = gnorm / radius * (1.0 + 1e-8) + std::numeric_limits<double>::min();
  const SecularRoot root = find_root(dvec, ghat, hi, [&](const SecularPoint& p, double) {
    const double r = 1.0 / p.norm - 1.0 / radius;
    return std::tuple{r, p.dnorm_inv, std::abs(p.norm - radius) <= 1e-3 * tol * radius};
  });
  if (!root.converged) throw NumericError("trust-region secular equation did not converge");
  return finish_tr(m, sp.Q, root.shat, shift + root.mu, true, false);
}

TrSolution solve_tr_krylov(const TrustRegionModel& m, int max_dim, double tol, const Vector& start) {
  if (max_dim < 1) throw PreconditionError("Krylov dimension must be at least 1");
  const Eigen::Index d = m.dim();
  const double gnorm = m.g.norm();
  const bool custom_start = start.size() > 0 && start.norm() > 0.0;
  TrSolution sol;
  if (gnorm == 0.0 && !custom_start) {
    sol.s = Vector::Zero(d);
    return sol;
  }
  const LinearMap op = [&m](const Vector& v) { return m.apply_h(v); };
  Lanczos lz(op, custom_start ? start : m.g, std::min<Eigen::Index>(max_dim, d));
  const double target = std::min(tol * std::max(1.0, gnorm), std::min(0.1, std::sqrt(gnorm)) * gnorm);

  TrSolution reduced;
  while (lz.expand()) {
    const Eigen::Index j = lz.size();
    TrustRegionModel red;
    if (custom_start) {
      red.g = lz.project(m.g);
    } else {
      red.g = Vector::Zero(j);
      red.g[0] = gnorm;
    }
    red.dense_h = lz.tridiagonal();
    red.radius = m.radius;
    reduced = solve_tr_exact(red, 1e-14);
    // KKT residual g + (H + lambda I) s of the lifted step.
    double kkt;
    if (custom_start) {
      const Vector s = lz.lift(reduced.s);
      kkt = (m.g + m.apply_h(s) + reduced.lambda * s).norm();
    } else {
      const double tail = lz.broke_down() ? 0.0 : lz.residual_beta() * reduced.s[j - 1];
      const Vector red_res = red.g + *red.dense_h * reduced.s + reduced.lambda * reduced.s;
      kkt = std::hypot(red_res.norm(), tail);
    }
    if (kkt <= target || lz.broke_down()) break;
  }
  sol.s = lz.lift(reduced.s);
  sol.model_decrease = -(m.g.dot(sol.s) + 0.5 * sol.s.dot(m.apply_h(sol.s)));
  sol.lambda = reduced.lambda;
  sol.on_boundary = reduced.on_boundary;
  sol.hard_case = reduced.hard_case;
  sol.krylov_dim = static_cast<int>(lz.size());
  return sol;
}

}  // namespace arcm
