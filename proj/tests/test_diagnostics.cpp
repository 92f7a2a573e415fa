#include "arcm/diagnostics.hpp"

#include "doctest.h"
#include "fixtures.hpp"
#include "json.hpp"

#include <cmath>
#include <numeric>

using namespace arcm;
using namespace arcm::testing;

namespace {

IterationRecord success(long k, double f, double f_next, double sigma = 1.0, double step = 0.01) {
  IterationRecord r;
  r.k = k;
  r.f = f;
  r.f_next = f_next;
  r.f_trial = f_next;
  r.grad_norm = 1.0;
  r.sigma = sigma;
  r.step_norm = step;
  r.rho = 0.5;
  r.accepted = Acceptance::Success;
  return r;
}

IterationRecord failure(long k, double f, double sigma) {
  IterationRecord r;
  r.k = k;
  r.f = f;
  r.f_next = f;
  r.grad_norm = 1.0;
  r.sigma = sigma;
  r.step_norm = 0.5;
  r.rho = kRhoFailure;
  r.accepted = Acceptance::Fail;
  return r;
}

Trace power_law_trace(int n, double exponent) {
  Trace t;
  for (int k = 0; k < n; ++k) {
    IterationRecord r = success(k, 1.0, 1.0);
    r.grad_norm = std::pow(1.0 + k, exponent);
    t.records.push_back(r);
  }
  return t;
}

bool has_violation(const AuditReport& rep, long k, const std::string& rule) {
  for (const auto& v : rep.violations)
    if (v.k == k && v.rule == rule) return true;
  return false;
}

}  // namespace

TEST_CASE("measure arithmetic") {
  MeasureConfig cfg;
  auto m = optimality_measure(4.0, -2.0, cfg);
  CHECK(m.grad_term == 2.0);
  CHECK(m.curvature_term == 2.0);
  CHECK(m.value == 2.0);
  m = optimality_measure(0.0, 3.0, cfg);
  CHECK(m.value == 0.0);
  CHECK(m.curvature_term == 0.0);
  m = optimality_measure(0.01, -1.0, cfg);
  CHECK(m.value == 1.0);
}

TEST_CASE("measure is zero at a second-order critical point") {
  const auto model = half_norm(5);
  const auto m = optimality_measure(*model, Vector::Zero(5), MeasureConfig{});
  CHECK(m.value == 0.0);
  CHECK(m.lambda_min == doctest::Approx(1.0));
  CHECK(m.confident);
}

TEST_CASE("measure responds to rescaled constants term by term") {
  MeasureConfig base;
  base.c1 = 0.7;
  base.c2 = 1.3;
  const std::vector<std::pair<double, double>> inputs = {{4.0, -2.0}, {0.25, -3.0}, {9.0, -0.1}, {1e-6, 0.5}};
  for (double a : {0.25, 1.0, 4.0}) {
    MeasureConfig scaled = base;
    scaled.c1 = 4.0 * a * base.c1;
    scaled.c2 = a * base.c2;
    for (const auto& [g, lam] : inputs) {
      const auto m0 = optimality_measure(g, lam, base);
      const auto m1 = optimality_measure(g, lam, scaled);
      CHECK(m1.grad_term == doctest::Approx(m0.grad_term / (2.0 * std::sqrt(a))));
      CHECK(m1.curvature_term == doctest::Approx(m0.curvature_term / a));
      CHECK(m1.value == doctest::Approx(std::max(m1.grad_term, m1.curvature_term)));
    }
  }
  // With a = 1 the gradient term halves and the curvature term is unchanged: the argmax can flip.
  MeasureConfig unit;
  MeasureConfig flipped;
  flipped.c1 = 4.0;
  CHECK(optimality_measure(4.0, -1.5, unit).value == 2.0);
  CHECK(optimality_measure(4.0, -1.5, flipped).value == 1.5);
}

TEST_CASE("measure config validation") {
  MeasureConfig cfg;
  cfg.c1 = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg.c1 = 1.0;
  cfg.c2 = -1.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("measure beyond the dense cap uses Lanczos") {
  ModelSpec spec;
  spec.kind = ModelKind::Rosenbrock;
  spec.dim = 40;
  const auto dense = make_objective(spec);
  spec.dense_cap = 10;
  const auto matfree = make_objective(spec);
  const Vector x = gaussian_point(40, 0.5, 3);
  const auto a = optimality_measure(*dense, x, MeasureConfig{});
  const auto b = optimality_measure(*matfree, x, MeasureConfig{});
  CHECK(b.lambda_min == doctest::Approx(a.lambda_min).epsilon(1e-6));
  CHECK(b.value == doctest::Approx(a.value).epsilon(1e-6));
}

TEST_CASE("audit flags a planted rise in f") {
  Trace t;
  t.method = Method::ARCm;
  t.records = {success(0, 1.0, 1.1), success(1, 1.1, 0.9), success(2, 0.9, 0.8)};
  const auto rep = audit_trace(t, HyperParams{}, false);
  CHECK_FALSE(rep.monotone_ok);
  CHECK_FALSE(rep.passed());
  CHECK(has_violation(rep, 1, "monotone"));
}

TEST_CASE("audit flags a sigma jump of gamma1 squared") {
  Trace t;
  t.method = Method::ARCm;
  t.records = {failure(0, 1.0, 1.0), success(1, 1.0, 0.9, 4.0)};
  const auto rep = audit_trace(t, HyperParams{}, false);
  CHECK_FALSE(rep.sigma_ok);
  CHECK(has_violation(rep, 0, "sigma_transition"));
  CHECK(rep.monotone_ok);
}

TEST_CASE("audit flags sigma below its floor and a failure run past the bound") {
  HyperParams p;
  Trace low;
  low.method = Method::ARC;
  low.records = {success(0, 1.0, 0.9, 1e-5), success(1, 0.9, 0.8, 1e-5)};
  CHECK(has_violation(audit_trace(low, p, false), 0, "sigma_floor"));

  // sigma_max / sigma_min = 4 bounds failure runs by log2(4) = 2
  p.sigma0 = p.sigma_min;
  Trace runs;
  runs.method = Method::ARCm;
  runs.records = {failure(0, 1.0, p.sigma_min), failure(1, 1.0, 2 * p.sigma_min), failure(2, 1.0, 4 * p.sigma_min)};
  const auto rep = audit_trace(runs, p, false);
  CHECK(rep.lemma3_bound == 2);
  CHECK(rep.lemma3_longest_run == 3);
  CHECK_FALSE(rep.lemma3_ok);
  CHECK(has_violation(rep, 2, "failure_run"));
}

TEST_CASE("audit flags an exact success below the sufficient decrease") {
  Trace t;
  t.method = Method::ARCm;
  // eta1/12 * sigma * |s|^3 = 0.1/12 * 1 * 8 = 0.0667 > 0.01
  t.records = {success(0, 1.0, 0.99, 1.0, 2.0)};
  const auto rep = audit_trace(t, HyperParams{}, true);
  CHECK_FALSE(rep.prop1_ok);
  CHECK(rep.prop1_min_margin == doctest::Approx(0.01 - 0.1 / 12.0 * 8.0));
  // the same trace solved inexactly is not held to the exact-solver bound
  CHECK(audit_trace(t, HyperParams{}, false).prop1_ok);
}

TEST_CASE("audit of an empty trace is a precondition error") {
  CHECK_THROWS_AS(audit_trace(Trace{}, HyperParams{}, false), PreconditionError);
}

TEST_CASE("healthy rosenbrock run passes every audit") {
  const auto model = rosenbrock(2);
  for (CrsSolver solver : {CrsSolver::Exact, CrsSolver::Krylov}) {
    HyperParams p;
    p.solver = solver;
    StopCriteria stop;
    stop.grad_tol = 1e-8;
    const auto t = run(Method::ARCm, *model, rosenbrock_start(), p, stop);
    const auto rep = audit_trace(t, p, solver == CrsSolver::Exact);
    INFO(format_report(rep));
    CHECK(rep.passed());
    CHECK(rep.lemma4_budget_ratio <= 1.0);
    CHECK(rep.lemma4_budget_ratio >= 0.0);
    CHECK(rep.lemma3_longest_run <= rep.lemma3_bound);
  }
}

TEST_CASE("audit passes across the seeded matrix with the exact solver") {
  const auto logistic_cfg = desk_config(ModelKind::LogisticNonconvex);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const std::vector<std::pair<ObjectivePtr, Vector>> cases = {
        {quadratic(20, 100.0, seed), gaussian_point(20, 1.0, 100 + seed)},
        {rosenbrock(2), rosenbrock_start() + gaussian_point(2, 0.1, 200 + seed)},
        {build_problem(logistic_cfg, seed).model, build_problem(logistic_cfg, seed).x0}};
    for (const auto& [model, x0] : cases) {
      for (Method m : {Method::ARCm, Method::ARC}) {
        HyperParams p;
        p.solver = CrsSolver::Exact;
        StopCriteria stop;
        stop.grad_tol = 1e-7;
        stop.max_iter = 500;
        const auto t = run(m, *model, x0, p, stop);
        const auto rep = audit_trace(t, p, true);
        INFO(model->name(), " seed ", seed, " ", to_string(m), "\n", format_report(rep));
        CHECK(t.stop_reason == StopReason::GradTol);
        CHECK(rep.passed());
        CHECK(rep.prop1_min_margin >= -1e-10);
      }
    }
  }
}

TEST_CASE("measure at a converged logistic iterate is within ten root tolerances") {
  const auto cfg = desk_config(ModelKind::LogisticNonconvex);
  const auto prob = build_problem(cfg, 0);
  const auto t = run(Method::ARCm, *prob.model, prob.x0, HyperParams{}, cfg.stop);
  REQUIRE(t.stop_reason == StopReason::GradTol);
  const auto m = optimality_measure(*prob.model, t.final_x, MeasureConfig{});
  CHECK(m.value <= 10.0 * std::sqrt(cfg.stop.grad_tol));
}

TEST_CASE("momentum classification examples") {
  Trace zero;
  zero.records = {success(0, 1.0, 0.9), success(1, 0.9, 0.8), failure(2, 0.8, 2.0), success(3, 0.8, 0.7)};
  auto c = classify_momentum_events(zero);
  CHECK(c.helped_pos == 0);
  CHECK(c.helped_neg == 0);
  CHECK(c.beta_zero == 3);
  CHECK(c.events.empty());

  // beta > 0 with v_prev = 0 has no sign and lands with the beta-zero count
  Trace unsigned_events = zero;
  for (auto& r : unsigned_events.records)
    if (r.accepted != Acceptance::Fail) r.beta = 1e-3;
  c = classify_momentum_events(unsigned_events);
  CHECK(c.helped_pos + c.helped_neg == 0);
  CHECK(c.beta_zero == 3);
  CHECK(c.events.size() == 3);

  Trace mixed = zero;
  mixed.records[0].beta = 0.1;
  mixed.records[0].momentum_sign = 1;
  mixed.records[1].beta = 0.2;
  mixed.records[1].momentum_sign = -1;
  c = classify_momentum_events(mixed);
  CHECK(c.helped_pos == 1);
  CHECK(c.helped_neg == 1);
  CHECK(c.beta_zero == 1);
  REQUIRE(c.events.size() == 2);
  CHECK(c.events[1].k == 1);
  CHECK(c.events[1].sign == -1);
}

TEST_CASE("momentum classification sums to the success count on real runs") {
  for (auto kind : {ModelKind::LogisticNonconvex, ModelKind::RobustLinear}) {
    const auto cfg = desk_config(kind);
    long neg_early = 0, neg_total = 0;
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
      const auto prob = build_problem(cfg, seed);
      const auto t = run(Method::ARCm, *prob.model, prob.x0, HyperParams{}, cfg.stop);
      const auto c = classify_momentum_events(t);
      CHECK(c.helped_pos + c.helped_neg + c.beta_zero == t.successes());
      for (const auto& e : c.events) {
        if (e.sign < 0) {
          ++neg_total;
          neg_early += e.k < static_cast<long>(t.records.size()) / 2;
        }
      }
    }
    // Opposing momentum is expected mostly in the first half of a run; soft check.
    if (kind == ModelKind::RobustLinear) {
      WARN(neg_total > 0);
      WARN(2 * neg_early >= neg_total);
    }
  }
}

TEST_CASE("rate fit on planted traces") {
  CHECK(fit_rate(power_law_trace(200, -2.0 / 3.0), RateQuantity::GradNorm) ==
        doctest::Approx(-2.0 / 3.0).epsilon(1e-6));
  CHECK(fit_rate(power_law_trace(50, 0.0), RateQuantity::GradNorm) == 0.0);
  // a rising sequence is flattened by the running minimum
  CHECK(fit_rate(power_law_trace(50, 0.5), RateQuantity::GradNorm) == 0.0);
  CHECK_THROWS_AS(fit_rate(power_law_trace(9, -1.0), RateQuantity::GradNorm), PreconditionError);

  // records past the first grad_norm below 1e-6 are the superlinear tail and are ignored
  Trace tail = power_law_trace(30, -2.0 / 3.0);
  for (int k = 30; k < 40; ++k) {
    IterationRecord r = success(k, 1.0, 1.0);
    r.grad_norm = std::pow(10.0, -7 - k);
    tail.records.push_back(r);
  }
  CHECK(fit_rate(tail, RateQuantity::GradNorm) == doctest::Approx(-2.0 / 3.0).epsilon(1e-6));

  Trace early_tail = power_law_trace(20, -1.0);
  early_tail.records[5].grad_norm = 1e-9;
  try {
    fit_rate(early_tail, RateQuantity::GradNorm);
    FAIL("accepted five records");
  } catch (const PreconditionError& e) {
    CHECK(std::string(e.what()).find("insufficient data") != std::string::npos);
  }
  // measure slope needs recorded measures
  CHECK_THROWS_AS(fit_rate(power_law_trace(20, -1.0), RateQuantity::Measure), PreconditionError);
}

TEST_CASE("rate on the logistic desk instance is at least as fast as the two-thirds power") {
  const auto cfg = desk_config(ModelKind::LogisticNonconvex);
  const auto prob = build_problem(cfg, 0);
  StopCriteria stop = cfg.stop;
  stop.record_measure = true;
  const auto t = run(Method::ARCm, *prob.model, prob.x0, HyperParams{}, stop);
  CHECK(fit_rate(t, RateQuantity::GradNorm) <= -0.6);
  const double mu_slope = fit_rate(t, RateQuantity::Measure);
  CHECK(mu_slope < 0.0);
}

TEST_CASE("trajectory comparison names the first differing field") {
  Trace a;
  a.records = {success(0, 1.0, 0.9), success(1, 0.9, 0.8)};
  a.final_x = Vector::Zero(2);
  Trace b = a;
  b.records[1].wall_time_s = 123.0;
  b.method = Method::ARC;
  CHECK(same_trajectory(a, b));
  b.records[1].step_norm = 0.02;
  std::string why;
  CHECK_FALSE(same_trajectory(a, b, &why));
  CHECK(why.find("step_norm") != std::string::npos);
  CHECK(why.find("1") != std::string::npos);
}

TEST_CASE("report renderings") {
  Trace t;
  t.method = Method::ARCm;
  t.records = {success(0, 1.0, 1.1), success(1, 1.1, 0.9)};
  const auto rep = audit_trace(t, HyperParams{}, false);
  const std::string text = format_report(rep);
  CHECK(text.find("audit: fail\n") != std::string::npos);
  CHECK(text.find("monotone: fail\n") != std::string::npos);
  CHECK(text.find("violation: k=1 monotone") != std::string::npos);
  const auto j = nlohmann::json::parse(format_report_json(rep));
  CHECK(j["passed"] == false);
  CHECK(j["monotone_ok"] == false);
  CHECK(j["sigma_ok"] == true);
  REQUIRE(j["violations"].size() == rep.violations.size());
  CHECK(j["violations"][0]["k"] == 1);
  CHECK(j["violations"][0]["rule"] == "monotone");
  // infinite margins serialize as null
  CHECK(j["sufficient_decrease_min_margin"].is_null());
}
