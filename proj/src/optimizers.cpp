#include "arcm/optimizers.hpp"

#include "arcm/diagnostics.hpp"
#include "arcm/lanczos.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <optional>

namespace arcm {

std::string to_string(Method m) {
  switch (m) {
    case Method::ARCm:
      return "ARCm";
    case Method::ARC:
      return "ARC";
    case Method::CR:
      return "CR";
    case Method::CRm:
      return "CRm";
    case Method::TR:
      return "TR";
  }
  return "unknown";
}

Method parse_method(const std::string& s) {
  if (s == "ARCm" || s == "arcm") return Method::ARCm;
  if (s == "ARC" || s == "arc") return Method::ARC;
  if (s == "CR" || s == "cr") return Method::CR;
  if (s == "CRm" || s == "crm") return Method::CRm;
  if (s == "TR" || s == "tr") return Method::TR;
  throw ConfigError("unknown optimizer '" + s + "'");
}

std::string to_string(Acceptance a) {
  switch (a) {
    case Acceptance::Fail:
      return "fail";
    case Acceptance::Success:
      return "success";
    case Acceptance::VerySuccess:
      return "very_success";
  }
  return "unknown";
}

std::string to_string(StopReason r) {
  switch (r) {
    case StopReason::GradTol:
      return "grad_tol";
    case StopReason::MaxIter:
      return "max_iter";
    case StopReason::MaxSeconds:
      return "max_seconds";
    case StopReason::Stagnation:
      return "stagnation";
    case StopReason::Error:
      return "error";
  }
  return "unknown";
}

void HyperParams::validate() const {
  if (!(gamma1 > 1.0)) throw ConfigError("gamma1 must satisfy gamma1 > 1");
  if (!(gamma2 <= 1.0 && gamma2 > gamma3)) throw ConfigError("gamma2 must satisfy 1 >= gamma2 > gamma3");
  if (!(gamma3 > 0.0)) throw ConfigError("gamma3 must satisfy gamma3 > 0");
  if (!(eta1 > 0.0 && eta2 > eta1 && eta2 < 1.0)) throw ConfigError("eta must satisfy 1 > eta2 > eta1 > 0");
  if (!(sigma_min > 0.0)) throw ConfigError("sigma_min must be positive");
  if (!(sigma0 >= sigma_min)) throw ConfigError("sigma0 must satisfy sigma0 >= sigma_min");
  if (!(tau > 0.0 && tau < 1.0)) throw ConfigError("tau must satisfy 0 < tau < 1");
  if (!(alpha1 >= 0.0 && alpha2 >= 0.0)) throw ConfigError("alpha1 and alpha2 must be nonnegative");
  if (krylov_max_dim < 1) throw ConfigError("krylov_max_dim must be at least 1");
  if (momentum_halvings < 0) throw ConfigError("momentum_halvings must be nonnegative");
  if (!(fixed_M > 0.0)) throw ConfigError("fixed_M must be positive");
  if (!(tr_radius0 > 0.0 && tr_radius_max >= tr_radius0))
    throw ConfigError("trust radii must satisfy 0 < tr_radius0 <= tr_radius_max");
}

void StopCriteria::validate() const {
  if (!(grad_tol > 0.0)) throw ConfigError("grad_tol must be positive");
  if (max_iter < 1) throw ConfigError("max_iter must be at least 1");
  if (!(max_seconds > 0.0)) throw ConfigError("max_seconds must be positive");
  if (max_consecutive_failures < 1) throw ConfigError("max_consecutive_failures must be at least 1");
}

SolverState SolverState::initial(const ObjectiveModel& model, const Vector& x0, const HyperParams& p, Method method) {
  if (x0.size() != model.dim()) throw ConfigError("starting point dimension does not match the model");
  if (!x0.allFinite()) throw NumericError("starting point has non-finite entries");
  SolverState st;
  st.x = x0;
  st.f_x = model.value(x0);
  st.grad = model.gradient(x0);
  if (!std::isfinite(st.f_x) || !st.grad.allFinite()) throw NumericError("objective is not finite at the starting point");
  st.v = Vector::Zero(x0.size());
  st.y_prev = x0;
  st.sigma = (method == Method::CR || method == Method::CRm) ? p.fixed_M : p.sigma0;
  st.radius = p.tr_radius0;
  return st;
}

long Trace::successes() const {
  long n = 0;
  for (const auto& r : records) n += r.accepted != Acceptance::Fail;
  return n;
}

long Trace::failures() const { return static_cast<long>(records.size()) - successes(); }

double rho(double f_x, double f_trial, double model_decrease) {
  if (!(model_decrease > 0.0 && model_decrease >= 1e-15 * std::abs(f_x))) return kRhoFailure;
  return (f_x - f_trial) / model_decrease;
}

double sigma_update(double sigma, double r, const HyperParams& p) {
  if (r > p.eta2) return std::max(p.sigma_min, p.gamma3 * sigma);
  if (r > p.eta1) return p.gamma2 * sigma;
  return p.gamma1 * sigma;
}

double momentum_cap(double step_norm, const HyperParams& p) {
  return std::min({p.tau, p.alpha1 * step_norm, p.alpha2 * step_norm * step_norm});
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

int sign_of(double v) { return (v > 0.0) - (v < 0.0); }

// Largest beta among beta_max / 2^i (i = 0..halvings) with f(y + beta dir) <= f_y.
MomentumResult extrapolate(const ObjectiveModel& model, const Vector& y, double f_y, const Vector& dir,
                           double beta_max, int halvings) {
  MomentumResult res;
  res.z = y;
  res.f_z = f_y;
  if (!(beta_max > 0.0)) return res;
  if (dir.isZero(0.0)) {
    res.beta = beta_max;
    return res;
  }
  double beta = beta_max;
  for (int i = 0; i <= halvings; ++i, beta *= 0.5) {
    Vector z = y + beta * dir;
    const double fz = model.value(z);
    ++res.evaluations;
    if (std::isfinite(fz) && fz <= f_y) {
      res.beta = beta;
      res.z = std::move(z);
      res.f_z = fz;
      return res;
    }
  }
  return res;
}

struct SubproblemStep {
  Vector s;
  double model_decrease = 0.0;
  int krylov_dim = 0;
  bool exact = false;
  double cert_ratio = std::numeric_limits<double>::quiet_NaN();
};

SubproblemStep solve_cubic_step(const ObjectiveModel& model, const SolverState& st, double sigma,
                                const HyperParams& p, const StepOptions& opts) {
  SubproblemStep out;
  CrsSolution sol;
  if (p.solver == CrsSolver::Exact && model.has_dense()) {
    auto H = model.dense_hessian(st.x);
    sol = solve_exact(CubicModel::from_dense(st.grad, std::move(*H), sigma));
    out.exact = true;
  } else if (p.solver == CrsSolver::Cauchy) {
    if (st.grad.norm() == 0.0) {
      sol.s = Vector::Zero(st.x.size());
    } else {
      sol = cauchy_point(CubicModel::from_operator(st.grad, model.hessian(st.x), sigma));
    }
  } else {
    KrylovOptions ko;
    ko.max_dim = p.krylov_max_dim;
    ko.start = opts.curvature_start;
    sol = solve_krylov(CubicModel::from_operator(st.grad, model.hessian(st.x), sigma), ko);
  }
  if (opts.certify && model.has_dense() && sol.model_decrease > 0.0) {
    auto dm = CubicModel::from_dense(st.grad, std::move(*model.dense_hessian(st.x)), sigma);
    const double exact_norm = out.exact ? sol.s.norm() : solve_exact(dm).s.norm();
    out.cert_ratio = certify_inexact(dm, sol, exact_norm).ratio_to_cubic;
  }
  out.s = std::move(sol.s);
  out.model_decrease = sol.model_decrease;
  out.krylov_dim = sol.krylov_dim;
  return out;
}

IterationRecord begin_record(const SolverState& st, double sigma_field) {
  IterationRecord rec;
  rec.k = st.k;
  rec.f = st.f_x;
  rec.grad_norm = st.grad.norm();
  rec.sigma = sigma_field;
  return rec;
}

void move_to(SolverState& st, const ObjectiveModel& model, Vector x, double f) {
  st.x = std::move(x);
  st.f_x = f;
  st.grad = model.gradient(st.x);
  if (!st.grad.allFinite()) throw NumericError("non-finite gradient at accepted iterate");
}

void record_failure(SolverState& st, IterationRecord& rec) {
  rec.accepted = Acceptance::Fail;
  rec.beta = 0.0;
  rec.momentum_sign = 0;
  ++st.failures;
  ++st.consecutive_failures;
}

void record_success(SolverState& st, IterationRecord& rec, double r, const HyperParams& p) {
  rec.accepted = r > p.eta2 ? Acceptance::VerySuccess : Acceptance::Success;
  ++st.successes;
  st.consecutive_failures = 0;
}

// Shared body of ARC and ARCm; momentum disabled gives ARC.
IterationRecord adaptive_cubic_step(SolverState& st, const ObjectiveModel& model, const HyperParams& p,
                                    const StepOptions& opts, bool momentum) {
  const auto t0 = Clock::now();
  IterationRecord rec = begin_record(st, st.sigma);

  bool ok = true;
  SubproblemStep step;
  try {
    step = solve_cubic_step(model, st, st.sigma, p, opts);
  } catch (const SolverFailure&) {
    ok = false;
  } catch (const NumericError&) {
    ok = false;
  }

  double r = kRhoFailure;
  Vector y;
  if (ok) {
    rec.step_norm = step.s.norm();
    rec.krylov_dim = step.krylov_dim;
    rec.model_decrease = step.model_decrease;
    rec.exact_subproblem = step.exact;
    rec.cert_ratio = step.cert_ratio;
    y = st.x + step.s;
    rec.f_trial = model.value(y);
    if (std::isfinite(rec.f_trial)) r = rho(st.f_x, rec.f_trial, step.model_decrease);
  }
  rec.rho = r;

  if (r > p.eta1) {
    MomentumResult mom;
    if (momentum) {
      mom = momentum_search(model, st.x, y, rec.f_trial, st.v, step.s, p);
    } else {
      mom.z = y;
      mom.f_z = rec.f_trial;
    }
    rec.beta = mom.beta;
    rec.momentum_sign = mom.beta > 0.0 ? sign_of(step.s.dot(st.v)) : 0;
    st.v = mom.beta * st.v + step.s;
    move_to(st, model, std::move(mom.z), mom.f_z);
    record_success(st, rec, r, p);
  } else {
    record_failure(st, rec);
  }
  st.sigma = sigma_update(st.sigma, r, p);
  rec.f_next = st.f_x;
  ++st.k;
  rec.wall_time_s = seconds_since(t0);
  return rec;
}

// Fixed-penalty CR; with momentum, CRm extrapolation along y_{k+1} - y_k.
IterationRecord fixed_cubic_step(SolverState& st, const ObjectiveModel& model, const HyperParams& p,
                                 const StepOptions& opts, bool momentum) {
  const auto t0 = Clock::now();
  IterationRecord rec = begin_record(st, st.sigma);

  bool ok = true;
  SubproblemStep step;
  try {
    step = solve_cubic_step(model, st, st.sigma, p, opts);
  } catch (const SolverFailure&) {
    ok = false;
  } catch (const NumericError&) {
    ok = false;
  }

  bool accept = false;
  Vector y;
  rec.rho = kRhoFailure;
  if (ok) {
    rec.step_norm = step.s.norm();
    rec.krylov_dim = step.krylov_dim;
    rec.model_decrease = step.model_decrease;
    rec.exact_subproblem = step.exact;
    y = st.x + step.s;
    rec.f_trial = model.value(y);
    rec.rho = rho(st.f_x, rec.f_trial, step.model_decrease);
    // Classic CR takes every step; a step that raises f is refused so the
    // iterates stay monotone.
    accept = std::isfinite(rec.f_trial) && rec.f_trial <= st.f_x && rec.step_norm > 0.0;
  }

  if (accept) {
    MomentumResult mom;
    const Vector dir = y - st.y_prev;
    if (momentum) {
      mom = extrapolate(model, y, rec.f_trial, dir, momentum_cap(rec.step_norm, p), p.momentum_halvings);
    } else {
      mom.z = y;
      mom.f_z = rec.f_trial;
    }
    rec.beta = mom.beta;
    rec.momentum_sign = mom.beta > 0.0 ? sign_of(step.s.dot(dir)) : 0;
    st.y_prev = y;
    move_to(st, model, std::move(mom.z), mom.f_z);
    rec.accepted = rec.rho > p.eta2 ? Acceptance::VerySuccess : Acceptance::Success;
    ++st.successes;
    st.consecutive_failures = 0;
  } else {
    record_failure(st, rec);
  }
  rec.f_next = st.f_x;
  ++st.k;
  rec.wall_time_s = seconds_since(t0);
  return rec;
}

IterationRecord trust_region_step(SolverState& st, const ObjectiveModel& model, const HyperParams& p,
                                  const StepOptions& opts) {
  const auto t0 = Clock::now();
  IterationRecord rec = begin_record(st, st.radius);

  TrustRegionModel tm;
  tm.g = st.grad;
  tm.radius = st.radius;
  bool ok = true;
  TrSolution sol;
  try {
    if (p.solver == CrsSolver::Exact && model.has_dense()) {
      tm.dense_h = model.dense_hessian(st.x);
      sol = solve_tr_exact(tm);
      rec.exact_subproblem = true;
    } else {
      tm.hess = model.hessian(st.x);
      sol = solve_tr_krylov(tm, p.krylov_max_dim, kKrylovTol, opts.curvature_start);
    }
  } catch (const NumericError&) {
    ok = false;
  }

  double r = kRhoFailure;
  if (ok) {
    rec.step_norm = sol.s.norm();
    rec.krylov_dim = sol.krylov_dim;
    rec.model_decrease = sol.model_decrease;
    Vector y = st.x + sol.s;
    rec.f_trial = model.value(y);
    if (std::isfinite(rec.f_trial)) r = rho(st.f_x, rec.f_trial, sol.model_decrease);
    if (r > p.eta1) {
      move_to(st, model, std::move(y), rec.f_trial);
      record_success(st, rec, r, p);
    }
  }
  rec.rho = r;
  if (!(r > p.eta1)) record_failure(st, rec);

  if (r > p.eta2)
    st.radius = std::min(2.0 * st.radius, p.tr_radius_max);
  else if (!(r > p.eta1))
    st.radius *= 0.5;
  rec.f_next = st.f_x;
  ++st.k;
  rec.wall_time_s = seconds_since(t0);
  return rec;
}

// Direction of most negative curvature when it is below -threshold.
std::optional<Vector> negative_curvature(const ObjectiveModel& model, const Vector& x, double threshold) {
  MinEigResult me;
  if (model.has_dense()) {
    me = dense_min_eig(*model.dense_hessian(x));
  } else {
    me = lanczos_min_eig(model.hessian(x), model.dim());
  }
  if (me.value < -threshold) return me.vector;
  return std::nullopt;
}

}  // namespace

MomentumResult momentum_search(const ObjectiveModel& model, const Vector& x, const Vector& y, double f_y,
                               const Vector& v_prev, const Vector& s, const HyperParams& p) {
  (void)x;  // y = x + s already holds the base point
  return extrapolate(model, y, f_y, v_prev, momentum_cap(s.norm(), p), p.momentum_halvings);
}

IterationRecord arcm_step(SolverState& state, const ObjectiveModel& model, const HyperParams& p,
                          const StepOptions& opts) {
  return adaptive_cubic_step(state, model, p, opts, true);
}

IterationRecord baseline_step(Method method, SolverState& state, const ObjectiveModel& model, const HyperParams& p,
                              const StepOptions& opts) {
  switch (method) {
    case Method::ARCm:
      return adaptive_cubic_step(state, model, p, opts, true);
    case Method::ARC:
      return adaptive_cubic_step(state, model, p, opts, false);
    case Method::CR:
      return fixed_cubic_step(state, model, p, opts, false);
    case Method::CRm:
      return fixed_cubic_step(state, model, p, opts, true);
    case Method::TR:
      return trust_region_step(state, model, p, opts);
  }
  throw ConfigError("unknown method");
}

Trace run(Method method, const ObjectiveModel& model, const Vector& x0, const HyperParams& p,
          const StopCriteria& stop) {
  p.validate();
  stop.validate();
  const auto t0 = Clock::now();
  SolverState st = SolverState::initial(model, x0, p, method);

  Trace trace;
  trace.method = method;
  try {
    for (;;) {
      if (st.k >= stop.max_iter) {
        trace.stop_reason = StopReason::MaxIter;
        break;
      }
      if (seconds_since(t0) > stop.max_seconds) {
        trace.stop_reason = StopReason::MaxSeconds;
        break;
      }
      StepOptions opts;
      opts.certify = stop.record_certificate;
      if (st.grad.norm() <= stop.grad_tol) {
        if (!stop.second_order) {
          trace.stop_reason = StopReason::GradTol;
          break;
        }
        auto dir = negative_curvature(model, st.x, std::sqrt(stop.grad_tol));
        if (!dir) {
          trace.stop_reason = StopReason::GradTol;
          break;
        }
        opts.curvature_start = std::move(*dir);
      }
      double measure = std::numeric_limits<double>::quiet_NaN();
      if (stop.record_measure) measure = optimality_measure(model, st.x, MeasureConfig{}).value;

      IterationRecord rec = baseline_step(method, st, model, p, opts);
      rec.measure = measure;
      trace.records.push_back(rec);
      if (st.consecutive_failures >= stop.max_consecutive_failures) {
        trace.stop_reason = StopReason::Stagnation;
        break;
      }
    }
  } catch (const Error& e) {
    trace.stop_reason = StopReason::Error;
    trace.error_message = e.what();
  }
  trace.final_x = st.x;
  trace.final_f = st.f_x;
  trace.final_grad_norm = st.grad.norm();
  trace.final_sigma = method == Method::TR ? st.radius : st.sigma;
  return trace;
}

}  // namespace arcm
