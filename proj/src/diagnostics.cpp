#include "arcm/diagnostics.hpp"

#include "arcm/lanczos.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

namespace arcm {

namespace {

constexpr double kSlack = 1e-10;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool adaptive(Method m) { return m == Method::ARC || m == Method::ARCm; }

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

}  // namespace

void MeasureConfig::validate() const {
  if (!(c1 > 0.0) || !(c2 > 0.0)) throw ConfigError("measure constants c1, c2 must be positive");
}

MeasureResult optimality_measure(double grad_norm, double lambda_min, const MeasureConfig& cfg) {
  cfg.validate();
  MeasureResult r;
  r.lambda_min = lambda_min;
  r.grad_term = std::sqrt(grad_norm / cfg.c1);
  r.curvature_term = std::max(0.0, -lambda_min) / cfg.c2;
  r.value = std::max(r.grad_term, r.curvature_term);
  return r;
}

MeasureResult optimality_measure(const ObjectiveModel& model, const Vector& x, const MeasureConfig& cfg) {
  const Vector g = model.gradient(x);
  if (!g.allFinite()) throw NumericError("non-finite gradient in optimality measure");
  MinEigResult me;
  if (model.has_dense()) {
    me = dense_min_eig(*model.dense_hessian(x));
  } else {
    me = lanczos_min_eig(model.hessian(x), model.dim(), 100, 1e-8, 1);
  }
  MeasureResult r = optimality_measure(g.norm(), me.value, cfg);
  r.confident = me.converged;
  return r;
}

AuditReport audit_trace(const Trace& trace, const HyperParams& p, bool solver_was_exact) {
  if (trace.records.empty()) throw PreconditionError("cannot audit an empty trace");
  const auto& recs = trace.records;
  const bool has_final = trace.final_x.size() > 0;
  AuditReport rep;
  auto flag = [&](long k, const std::string& rule, const std::string& detail) {
    rep.violations.push_back({k, rule, detail});
  };

  // (a) monotone f
  for (std::size_t i = 1; i < recs.size(); ++i) {
    if (recs[i].f > recs[i - 1].f + kSlack * std::max(1.0, std::abs(recs[i - 1].f))) {
      rep.monotone_ok = false;
      flag(recs[i].k, "monotone", "f rose from " + fmt(recs[i - 1].f) + " to " + fmt(recs[i].f));
    }
  }
  if (has_final && trace.final_f > recs.back().f + kSlack * std::max(1.0, std::abs(recs.back().f))) {
    rep.monotone_ok = false;
    flag(recs.back().k + 1, "monotone", "final f rose to " + fmt(trace.final_f));
  }

  // (b) sufficient decrease at exactly solved successes
  rep.prop1_min_margin = std::numeric_limits<double>::infinity();
  if (adaptive(trace.method)) {
    for (const auto& r : recs) {
      if (r.accepted == Acceptance::Fail) continue;
      if (!(solver_was_exact || r.exact_subproblem)) continue;
      const double f_after = std::isnan(r.f_trial) ? r.f_next : r.f_trial;
      const double margin = (r.f - f_after) - p.eta1 / 12.0 * r.sigma * std::pow(r.step_norm, 3);
      rep.prop1_min_margin = std::min(rep.prop1_min_margin, margin);
      if (margin < -kSlack) {
        rep.prop1_ok = false;
        flag(r.k, "sufficient_decrease", "margin " + fmt(margin));
      }
    }
  }

  // (c) sigma floor and schedule
  rep.sigma_max_observed = has_final ? trace.final_sigma : 0.0;
  for (const auto& r : recs) rep.sigma_max_observed = std::max(rep.sigma_max_observed, r.sigma);
  for (std::size_t i = 0; i < recs.size(); ++i) {
    const auto& r = recs[i];
    const bool last = i + 1 == recs.size();
    if (last && !has_final) break;
    const double next = last ? trace.final_sigma : recs[i + 1].sigma;
    double expected = r.sigma;
    switch (trace.method) {
      case Method::ARC:
      case Method::ARCm:
        if (r.sigma < p.sigma_min * (1.0 - kSlack)) {
          rep.sigma_ok = false;
          flag(r.k, "sigma_floor", "sigma " + fmt(r.sigma) + " below sigma_min");
        }
        expected = sigma_update(r.sigma, r.rho, p);
        break;
      case Method::CR:
      case Method::CRm:
        break;
      case Method::TR:
        if (r.rho > p.eta2)
          expected = std::min(2.0 * r.sigma, p.tr_radius_max);
        else if (!(r.rho > p.eta1))
          expected = 0.5 * r.sigma;
        break;
    }
    if (std::abs(next - expected) > 1e-12 * std::max(std::abs(expected), p.sigma_min)) {
      rep.sigma_ok = false;
      flag(r.k, "sigma_transition", "expected " + fmt(expected) + ", got " + fmt(next));
    }
  }

  // (d) failure runs
  if (adaptive(trace.method)) {
    const double ratio = rep.sigma_max_observed / p.sigma_min;
    rep.lemma3_bound =
        ratio > 1.0 ? static_cast<long>(std::ceil(std::log(ratio) / std::log(p.gamma1) - 1e-9)) : 0;
    long run = 0;
    for (const auto& r : recs) {
      if (r.accepted == Acceptance::Fail) {
        ++run;
        rep.lemma3_longest_run = std::max(rep.lemma3_longest_run, run);
        if (run == rep.lemma3_bound + 1) {
          rep.lemma3_ok = false;
          flag(r.k, "failure_run", "run exceeds bound " + std::to_string(rep.lemma3_bound));
        }
      } else {
        run = 0;
      }
    }
  }

  // (e) cubic budget
  double cubes = 0.0;
  for (const auto& r : recs)
    if (r.accepted != Acceptance::Fail) cubes += std::pow(r.step_norm, 3);
  const double f_end = has_final ? trace.final_f : recs.back().f;
  const double drop = recs.front().f - f_end;
  if (cubes == 0.0)
    rep.lemma4_budget_ratio = 0.0;
  else if (drop > 0.0)
    rep.lemma4_budget_ratio = cubes * p.eta1 * p.sigma_min / (12.0 * drop);
  else
    rep.lemma4_budget_ratio = std::numeric_limits<double>::infinity();
  if (rep.lemma4_budget_ratio > 1.0 + kSlack) {
    rep.lemma4_ok = false;
    flag(recs.back().k, "cubic_budget", "ratio " + fmt(rep.lemma4_budget_ratio));
  }

  rep.condition1_max_ratio = kNaN;
  for (const auto& r : recs) {
    if (std::isnan(r.cert_ratio)) continue;
    rep.condition1_max_ratio =
        std::isnan(rep.condition1_max_ratio) ? r.cert_ratio : std::max(rep.condition1_max_ratio, r.cert_ratio);
  }
  return rep;
}

std::string format_report(const AuditReport& r) {
  std::ostringstream os;
  auto yn = [](bool b) { return b ? "pass" : "fail"; };
  os << "audit: " << yn(r.passed()) << '\n'
     << "monotone: " << yn(r.monotone_ok) << '\n'
     << "sufficient_decrease: " << yn(r.prop1_ok) << '\n'
     << "sufficient_decrease_min_margin: " << fmt(r.prop1_min_margin) << '\n'
     << "sigma_schedule: " << yn(r.sigma_ok) << '\n'
     << "sigma_max_observed: " << fmt(r.sigma_max_observed) << '\n'
     << "failure_run: " << yn(r.lemma3_ok) << '\n'
     << "failure_run_bound: " << r.lemma3_bound << '\n'
     << "failure_run_longest: " << r.lemma3_longest_run << '\n'
     << "cubic_budget: " << yn(r.lemma4_ok) << '\n'
     << "cubic_budget_ratio: " << fmt(r.lemma4_budget_ratio) << '\n'
     << "inexactness_max_ratio: " << fmt(r.condition1_max_ratio) << '\n'
     << "violations: " << r.violations.size() << '\n';
  for (const auto& v : r.violations) os << "violation: k=" << v.k << ' ' << v.rule << ' ' << v.detail << '\n';
  return os.str();
}

std::string format_report_json(const AuditReport& r) {
  // JSON has no infinity or NaN; those become null.
  auto num = [](double v) -> nlohmann::json {
    if (std::isfinite(v)) return v;
    return nullptr;
  };
  nlohmann::json j;
  j["passed"] = r.passed();
  j["monotone_ok"] = r.monotone_ok;
  j["sufficient_decrease_ok"] = r.prop1_ok;
  j["sufficient_decrease_min_margin"] = num(r.prop1_min_margin);
  j["sigma_ok"] = r.sigma_ok;
  j["sigma_max_observed"] = num(r.sigma_max_observed);
  j["failure_run_ok"] = r.lemma3_ok;
  j["failure_run_bound"] = r.lemma3_bound;
  j["failure_run_longest"] = r.lemma3_longest_run;
  j["cubic_budget_ok"] = r.lemma4_ok;
  j["cubic_budget_ratio"] = num(r.lemma4_budget_ratio);
  j["inexactness_max_ratio"] = num(r.condition1_max_ratio);
  j["violations"] = nlohmann::json::array();
  for (const auto& v : r.violations) j["violations"].push_back({{"k", v.k}, {"rule", v.rule}, {"detail", v.detail}});
  return j.dump(2);
}

MomentumCounts classify_momentum_events(const Trace& trace) {
  MomentumCounts c;
  for (const auto& r : trace.records) {
    if (r.accepted == Acceptance::Fail) continue;
    if (r.beta > 0.0) c.events.push_back({r.k, r.momentum_sign, r.beta, r.grad_norm});
    if (r.beta > 0.0 && r.momentum_sign > 0)
      ++c.helped_pos;
    else if (r.beta > 0.0 && r.momentum_sign < 0)
      ++c.helped_neg;
    else
      ++c.beta_zero;
  }
  return c;
}

namespace {

// Bitwise equality that also treats two NaNs as equal.
bool same_bits(double a, double b) { return a == b || (std::isnan(a) && std::isnan(b)); }

}  // namespace

bool same_trajectory(const Trace& a, const Trace& b, std::string* why) {
  auto differ = [&](const std::string& what) {
    if (why) *why = what;
    return false;
  };
  if (a.records.size() != b.records.size())
    return differ("record count " + std::to_string(a.records.size()) + " vs " + std::to_string(b.records.size()));
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    const auto& x = a.records[i];
    const auto& y = b.records[i];
    const std::string at = " at record " + std::to_string(i);
    if (x.k != y.k) return differ("k" + at);
    if (!same_bits(x.f, y.f)) return differ("f" + at);
    if (!same_bits(x.grad_norm, y.grad_norm)) return differ("grad_norm" + at);
    if (!same_bits(x.sigma, y.sigma)) return differ("sigma" + at);
    if (!same_bits(x.step_norm, y.step_norm)) return differ("step_norm" + at);
    if (!same_bits(x.rho, y.rho)) return differ("rho" + at);
    if (x.accepted != y.accepted) return differ("accepted" + at);
    if (!same_bits(x.beta, y.beta)) return differ("beta" + at);
    if (x.momentum_sign != y.momentum_sign) return differ("momentum_sign" + at);
    if (x.krylov_dim != y.krylov_dim) return differ("krylov_dim" + at);
    if (!same_bits(x.model_decrease, y.model_decrease)) return differ("model_decrease" + at);
    if (!same_bits(x.f_trial, y.f_trial)) return differ("f_trial" + at);
    if (!same_bits(x.f_next, y.f_next)) return differ("f_next" + at);
  }
  if (a.final_x.size() != b.final_x.size() || a.final_x != b.final_x) return differ("final_x");
  if (!same_bits(a.final_f, b.final_f)) return differ("final_f");
  if (!same_bits(a.final_sigma, b.final_sigma)) return differ("final_sigma");
  if (a.stop_reason != b.stop_reason) return differ("stop_reason");
  return true;
}

double fit_rate(const Trace& trace, RateQuantity quantity) {
  std::vector<double> xs, ys;
  double best = std::numeric_limits<double>::infinity();
  for (const auto& r : trace.records) {
    if (r.grad_norm < kTailCut) break;
    const double q = quantity == RateQuantity::GradNorm ? r.grad_norm : r.measure;
    if (!std::isfinite(q)) throw PreconditionError("trace lacks the requested quantity at k=" + std::to_string(r.k));
    best = std::min(best, q);
    if (!(best > 0.0)) break;
    xs.push_back(std::log1p(static_cast<double>(r.k)));
    ys.push_back(std::log(best));
  }
  if (xs.size() < kMinRateRecords)
    throw PreconditionError("insufficient data: " + std::to_string(xs.size()) + " records before the tail, need " +
                            std::to_string(kMinRateRecords));
  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
  }
  if (!(sxx > 0.0)) throw PreconditionError("insufficient data: iteration indices do not vary");
  return sxy / sxx;
}

}  // namespace arcm
