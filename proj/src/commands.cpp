#include "arcm/commands.hpp"

#include "arcm/kernels.hpp"
#include "arcm/subproblem.hpp"

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

namespace arcm {

namespace fs = std::filesystem;

namespace {

std::string real17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("write failed for " + path.string());
}

double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

bool exact_solver(const HyperParams& p) { return p.solver == CrsSolver::Exact; }

}  // namespace

std::string format_trace_csv(const Trace& trace) {
  std::string out = kTraceHeader;
  out += '\n';
  for (const auto& r : trace.records) {
    out += std::to_string(r.k);
    for (double v : {r.f, r.grad_norm, r.sigma, r.step_norm, r.rho}) out += ',' + real17(v);
    out += ',' + to_string(r.accepted);
    out += ',' + real17(r.beta);
    out += ',' + std::to_string(r.momentum_sign);
    out += ',' + std::to_string(r.krylov_dim);
    out += ',' + real17(r.model_decrease);
    out += ',' + real17(r.wall_time_s);
    out += '\n';
  }
  return out;
}

void write_trace_csv(const Trace& trace, const fs::path& path) { write_text(path, format_trace_csv(trace)); }

RunSummary summarize(const std::string& label, const Trace& trace, const HyperParams& p, std::uint64_t seed) {
  RunSummary s;
  s.label = label;
  s.method = trace.method;
  s.seed = seed;
  s.iterations = static_cast<long>(trace.records.size());
  s.successful_iterations = trace.successes();
  s.reached_tolerance = trace.stop_reason == StopReason::GradTol;
  s.final_f = trace.final_f;
  s.final_grad_norm = trace.final_grad_norm;
  s.stop_reason = trace.stop_reason;
  s.error_message = trace.error_message;
  s.momentum = classify_momentum_events(trace);
  if (!trace.records.empty()) s.audit = audit_trace(trace, p, exact_solver(p));
  return s;
}

std::string format_summary(const RunSummary& s) {
  std::ostringstream os;
  os << "optimizer: " << s.label << '\n'
     << "method: " << to_string(s.method) << '\n'
     << "seed: " << s.seed << '\n'
     << "stop_reason: " << to_string(s.stop_reason) << '\n';
  if (!s.error_message.empty()) os << "error: " << s.error_message << '\n';
  os << "reached_tolerance: " << (s.reached_tolerance ? "yes" : "no") << '\n'
     << "iterations: " << s.iterations << '\n'
     << "successful_iterations: " << s.successful_iterations << '\n'
     << "final_f: " << real17(s.final_f) << '\n'
     << "final_grad_norm: " << real17(s.final_grad_norm) << '\n'
     << "momentum_helped_pos: " << s.momentum.helped_pos << '\n'
     << "momentum_helped_neg: " << s.momentum.helped_neg << '\n'
     << "momentum_beta_zero: " << s.momentum.beta_zero << '\n'
     << format_report(s.audit);
  return os.str();
}

int cmd_run(const RunConfig& cfg, std::ostream& log, bool quiet) {
  kernels::apply_thread_cap();
  const Problem prob = build_problem(cfg, 0);
  fs::create_directories(cfg.outdir);
  std::string summary;
  int code = kExitOk;
  for (const auto& opt : cfg.optimizers) {
    const Trace trace = run(opt.method, *prob.model, prob.x0, opt.params, cfg.stop);
    write_trace_csv(trace, cfg.outdir / (opt.label + ".trace.csv"));
    const RunSummary s = summarize(opt.label, trace, opt.params, cfg.seed);
    write_text(cfg.outdir / (opt.label + ".audit.json"), format_report_json(s.audit) + "\n");
    summary += format_summary(s) + "\n";
    if (!quiet)
      log << opt.label << ": " << to_string(s.stop_reason) << " after " << s.iterations << " iterations ("
          << s.successful_iterations << " successful), f=" << real17(s.final_f)
          << ", |g|=" << real17(s.final_grad_norm) << ", audit " << (s.audit.passed() ? "pass" : "fail") << '\n';
    if (trace.stop_reason == StopReason::Error) {
      log << opt.label << ": numeric error: " << trace.error_message << '\n';
      code = kExitNumeric;
    }
  }
  write_text(cfg.outdir / "summary.txt", summary);
  return code;
}

std::vector<CompareRow> compare_table(const std::vector<OptimizerEntry>& optimizers,
                                      const std::vector<std::vector<RunSummary>>& per_optimizer) {
  std::vector<CompareRow> rows;
  for (std::size_t i = 0; i < optimizers.size(); ++i) {
    CompareRow row;
    row.label = optimizers[i].label;
    std::vector<double> iters, succ, fs_;
    row.min_iterations = std::numeric_limits<long>::max();
    for (const auto& s : per_optimizer[i]) {
      iters.push_back(static_cast<double>(s.iterations));
      succ.push_back(static_cast<double>(s.successful_iterations));
      fs_.push_back(s.final_f);
      row.min_iterations = std::min(row.min_iterations, s.iterations);
      row.max_iterations = std::max(row.max_iterations, s.iterations);
      row.failures += !s.reached_tolerance;
    }
    if (iters.empty()) row.min_iterations = 0;
    row.median_iterations = median(iters);
    row.median_successful = median(succ);
    row.median_final_f = median(fs_);
    rows.push_back(std::move(row));
  }
  std::stable_sort(rows.begin(), rows.end(),
                   [](const CompareRow& a, const CompareRow& b) { return a.median_iterations < b.median_iterations; });
  return rows;
}

int cmd_compare(const RunConfig& cfg, std::ostream& log, bool quiet) {
  if (cfg.optimizers.size() < 2) throw ConfigError("compare needs at least two optimizers");
  const std::size_t n_opt = cfg.optimizers.size();
  const std::size_t n_seed = static_cast<std::size_t>(cfg.seeds);

  std::vector<Problem> problems;
  for (std::size_t s = 0; s < n_seed; ++s) problems.push_back(build_problem(cfg, s));
  fs::create_directories(cfg.outdir);

  std::vector<Trace> traces(n_opt * n_seed);
  std::vector<std::string> failures(traces.size());
  const int threads = kernels::thread_cap() > 0 ? kernels::thread_cap() : omp_get_max_threads();
  const long n_tasks = static_cast<long>(traces.size());
  // One task per (optimizer, seed); each owns its state and output.
#pragma omp parallel for schedule(dynamic) num_threads(threads)
  for (long t = 0; t < n_tasks; ++t) {
    const std::size_t o = static_cast<std::size_t>(t) / n_seed;
    const std::size_t s = static_cast<std::size_t>(t) % n_seed;
    try {
      const auto& opt = cfg.optimizers[o];
      traces[static_cast<std::size_t>(t)] = run(opt.method, *problems[s].model, problems[s].x0, opt.params, cfg.stop);
      write_trace_csv(traces[static_cast<std::size_t>(t)],
                      cfg.outdir / (opt.label + ".seed" + std::to_string(cfg.seed + s) + ".trace.csv"));
    } catch (const std::exception& e) {
      failures[static_cast<std::size_t>(t)] = e.what();
    }
  }

  int code = kExitOk;
  std::vector<std::vector<RunSummary>> per_opt(n_opt);
  std::string raw = "optimizer,method,seed,iterations,successful_iterations,reached_tolerance,final_f,final_grad_norm,"
                    "stop_reason,helped_pos,helped_neg,beta_zero,audit\n";
  for (std::size_t o = 0; o < n_opt; ++o) {
    const auto& opt = cfg.optimizers[o];
    for (std::size_t s = 0; s < n_seed; ++s) {
      const std::size_t t = o * n_seed + s;
      if (!failures[t].empty()) {
        log << opt.label << " seed " << cfg.seed + s << ": " << failures[t] << '\n';
        code = kExitNumeric;
        continue;
      }
      if (traces[t].stop_reason == StopReason::Error) code = kExitNumeric;
      RunSummary sm = summarize(opt.label, traces[t], opt.params, cfg.seed + s);
      raw += opt.label + ',' + to_string(sm.method) + ',' + std::to_string(sm.seed) + ',' +
             std::to_string(sm.iterations) + ',' + std::to_string(sm.successful_iterations) + ',' +
             (sm.reached_tolerance ? "1" : "0") + ',' + real17(sm.final_f) + ',' + real17(sm.final_grad_norm) + ',' +
             to_string(sm.stop_reason) + ',' + std::to_string(sm.momentum.helped_pos) + ',' +
             std::to_string(sm.momentum.helped_neg) + ',' + std::to_string(sm.momentum.beta_zero) + ',' +
             (sm.audit.passed() ? "pass" : "fail") + '\n';
      per_opt[o].push_back(std::move(sm));
    }
  }
  write_text(cfg.outdir / "raw.csv", raw);

  const auto rows = compare_table(cfg.optimizers, per_opt);
  std::string table =
      "optimizer,median_iterations,min_iterations,max_iterations,median_successful_iterations,median_final_f,"
      "failures\n";
  for (const auto& r : rows)
    table += r.label + ',' + real17(r.median_iterations) + ',' + std::to_string(r.min_iterations) + ',' +
             std::to_string(r.max_iterations) + ',' + real17(r.median_successful) + ',' + real17(r.median_final_f) +
             ',' + std::to_string(r.failures) + '\n';
  write_text(cfg.outdir / "table.csv", table);
  if (!quiet) log << table;
  return code;
}

namespace {

// Gradient with the wrong sign; the derivative check must catch it.
class MisSignedGradient final : public ObjectiveModel {
 public:
  explicit MisSignedGradient(ObjectivePtr inner) : inner_(std::move(inner)) {}
  Eigen::Index dim() const override { return inner_->dim(); }
  std::string name() const override { return inner_->name() + "-missigned"; }
  double value(const Vector& x) const override { return inner_->value(x); }
  Vector gradient(const Vector& x) const override { return -inner_->gradient(x); }
  Vector hessian_vec(const Vector& x, const Vector& v) const override { return inner_->hessian_vec(x, v); }
  std::optional<Matrix> dense_hessian(const Vector& x) const override { return inner_->dense_hessian(x); }

 private:
  ObjectivePtr inner_;
};

ObjectivePtr regression_model(ModelKind kind, std::uint64_t seed) {
  SyntheticSpec syn;
  syn.n = 60;
  syn.d = 8;
  syn.label_noise = 0.1;
  syn.task = kind == ModelKind::RobustLinear ? Task::Regression : Task::Classification;
  syn.seed = seed;
  ModelSpec spec;
  spec.kind = kind;
  spec.dataset = std::make_shared<const Dataset>(gen_synthetic(syn));
  return make_objective(spec);
}

BatteryItem derivative_item(ModelKind kind, bool fault) {
  BatteryItem item{"derivatives " + to_string(kind), true, ""};
  ObjectivePtr model = regression_model(kind, 7);
  if (fault) model = std::make_shared<MisSignedGradient>(model);
  double worst_g = 0.0, worst_h = 0.0;
  for (std::uint64_t s = 0; s < 5; ++s) {
    const Vector x = gaussian_point(model->dim(), 1.0, 100 + s);
    const auto rep = check_derivatives(*model, x, 1e-5, 5, s);
    worst_g = std::max(worst_g, rep.max_rel_err_grad);
    worst_h = std::max(worst_h, rep.max_rel_err_hvp);
  }
  item.passed = worst_g <= 1e-5 && worst_h <= 1e-4;
  item.detail = "grad err " + real17(worst_g) + ", hvp err " + real17(worst_h);
  return item;
}

Matrix random_symmetric(Eigen::Index d, std::uint64_t seed) {
  const Vector v = gaussian_point(d * d, 1.0, seed);
  Matrix A = Eigen::Map<const Matrix>(v.data(), d, d);
  return 0.5 * (A + A.transpose());
}

}  // namespace

std::vector<BatteryItem> validation_battery(bool inject_fault) {
  std::vector<BatteryItem> items;
  auto guarded = [&](const std::string& name, auto&& body) {
    try {
      items.push_back(body());
    } catch (const std::exception& e) {
      items.push_back({name, false, std::string("threw: ") + e.what()});
    }
  };

  guarded("derivatives logistic_nonconvex", [&] { return derivative_item(ModelKind::LogisticNonconvex, inject_fault); });
  guarded("derivatives robust_linear", [&] { return derivative_item(ModelKind::RobustLinear, inject_fault); });

  guarded("exact solver radial case", [] {
    Vector g(2);
    g << 1.0, 0.0;
    const auto sol = solve_exact(CubicModel::from_dense(g, Matrix::Identity(2, 2), 2.0));
    const double want = (std::sqrt(5.0) - 1.0) / 2.0;
    const double err = std::abs(sol.s.norm() - want);
    return BatteryItem{"exact solver radial case", err <= 1e-10, "|s| error " + real17(err)};
  });
  guarded("exact solver negative curvature", [] {
    const auto sol = solve_exact(CubicModel::from_dense(Vector::Zero(1), Matrix::Constant(1, 1, -1.0), 1.0));
    const double err = std::abs(sol.s.norm() - 2.0);
    return BatteryItem{"exact solver negative curvature", err <= 1e-10, "|s| error " + real17(err)};
  });
  guarded("krylov matches exact (d=30)", [] {
    double worst = 0.0;
    for (std::uint64_t s = 0; s < 5; ++s) {
      const Matrix H = random_symmetric(30, 200 + s);
      const Vector g = gaussian_point(30, 1.0, 300 + s);
      const auto m = CubicModel::from_dense(g, H, 1.0);
      const auto ex = solve_exact(m);
      const auto kr = solve_krylov(CubicModel::from_operator(g, [H](const Vector& v) { return Vector(H * v); }, 1.0),
                                   30, 1e-10);
      worst = std::max(worst, std::abs(kr.model_decrease - ex.model_decrease) / std::abs(ex.model_decrease));
    }
    return BatteryItem{"krylov matches exact (d=30)", worst <= 1e-8, "max relative gap " + real17(worst)};
  });
  guarded("cauchy dominance", [] {
    double worst = std::numeric_limits<double>::infinity();
    for (std::uint64_t s = 0; s < 5; ++s) {
      const Matrix H = random_symmetric(30, 400 + s);
      const Vector g = gaussian_point(30, 1.0, 500 + s);
      const auto m = CubicModel::from_operator(g, [H](const Vector& v) { return Vector(H * v); }, 1.0);
      const auto kr = solve_krylov(m, 5);
      const auto cp = cauchy_point(m);
      worst = std::min(worst, kr.model_decrease - cp.model_decrease);
    }
    return BatteryItem{"cauchy dominance", worst >= 0.0, "min krylov - cauchy decrease " + real17(worst)};
  });
  guarded("sigma update table", [] {
    HyperParams p;
    const bool ok = sigma_update(1.0, 0.95, p) == 0.5 && sigma_update(1.0, 0.5, p) == 1.0 &&
                    sigma_update(1.0, 0.05, p) == 2.0 && sigma_update(1e-4, 0.95, p) == 1e-4 &&
                    sigma_update(1.0, kRhoFailure, p) == 2.0;
    return BatteryItem{"sigma update table", ok, ok ? "all rows match" : "row mismatch"};
  });
  guarded("ARC reduction identity", [] {
    const auto model = regression_model(ModelKind::LogisticNonconvex, 11);
    const Vector x0 = gaussian_point(model->dim(), 1.0, 12);
    StopCriteria stop;
    stop.max_iter = 60;
    HyperParams arc;
    HyperParams frozen;
    frozen.alpha1 = 0.0;
    frozen.alpha2 = 0.0;
    const Trace a = run(Method::ARC, *model, x0, arc, stop);
    const Trace b = run(Method::ARCm, *model, x0, frozen, stop);
    std::string why;
    const bool ok = same_trajectory(a, b, &why);
    return BatteryItem{"ARC reduction identity", ok,
                       ok ? std::to_string(a.records.size()) + " identical records" : "differs: " + why};
  });
  return items;
}

int cmd_validate(std::ostream& log, bool quiet, bool inject_fault) {
  kernels::apply_thread_cap();
  const auto t0 = std::chrono::steady_clock::now();
  const auto items = validation_battery(inject_fault);
  bool all = true;
  for (const auto& it : items) {
    all = all && it.passed;
    if (!quiet || !it.passed) log << (it.passed ? "PASS " : "FAIL ") << it.name << ": " << it.detail << '\n';
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (!quiet) log << (all ? "all items passed" : "battery failed") << " in " << real17(secs) << " s\n";
  return all ? kExitOk : kExitBatteryFailed;
}

void cmd_gen_data(const SyntheticSpec& spec, const fs::path& outdir, const std::string& name) {
  spec.validate();
  const Dataset ds = gen_synthetic(spec);
  fs::create_directories(outdir);
  write_libsvm(ds, outdir / (name + ".libsvm"));
  write_csv(ds, outdir / (name + ".csv"));
}

}  // namespace arcm
