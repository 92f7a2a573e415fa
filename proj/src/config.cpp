#include "arcm/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace arcm {

namespace pt = boost::property_tree;

namespace {

// Reads typed values out of one section and remembers which keys were used.
class Section {
 public:
  Section(std::string name, const pt::ptree& tree) : name_(std::move(name)), tree_(tree) {}

  double real(const std::string& key, double fallback) {
    auto raw = text(key);
    if (!raw) return fallback;
    const std::string& s = *raw;
    if (s == "inf" || s == "infinity") return std::numeric_limits<double>::infinity();
    double v = 0.0;
    const char* first = s.data();
    if (!s.empty() && s.front() == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || std::isnan(v)) fail(key, "expected a real number, got '" + s + "'");
    return v;
  }

  long integer(const std::string& key, long fallback) {
    auto raw = text(key);
    if (!raw) return fallback;
    const std::string& s = *raw;
    long v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) fail(key, "expected an integer, got '" + s + "'");
    return v;
  }

  std::uint64_t seed(const std::string& key, std::uint64_t fallback) {
    auto raw = text(key);
    if (!raw) return fallback;
    const std::string& s = *raw;
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) fail(key, "expected a nonnegative integer, got '" + s + "'");
    return v;
  }

  bool flag(const std::string& key, bool fallback) {
    auto raw = text(key);
    if (!raw) return fallback;
    if (*raw == "true" || *raw == "yes" || *raw == "1" || *raw == "on") return true;
    if (*raw == "false" || *raw == "no" || *raw == "0" || *raw == "off") return false;
    fail(key, "expected true or false, got '" + *raw + "'");
  }

  std::optional<std::string> text(const std::string& key) {
    used_.insert(key);
    auto child = tree_.get_child_optional(pt::ptree::path_type(key, '\0'));
    if (!child) return std::nullopt;
    return child->data();
  }

  void reject_unknown() const {
    for (const auto& [key, _] : tree_)
      if (!used_.count(key)) throw ConfigError("[" + name_ + "] unknown key '" + key + "'");
  }

  [[noreturn]] void fail(const std::string& key, const std::string& msg) const {
    throw ConfigError("[" + name_ + "] " + key + ": " + msg);
  }

  const std::string& name() const { return name_; }

 private:
  std::string name_;
  const pt::ptree& tree_;
  std::set<std::string> used_;
};

template <typename Fn>
void with_prefix(const std::string& prefix, Fn&& fn) {
  try {
    fn();
  } catch (const ConfigError& e) {
    throw ConfigError(prefix + " " + e.what());
  }
}

const pt::ptree kEmpty;

HyperParams read_params(Section& s) {
  HyperParams p;
  p.gamma1 = s.real("gamma1", p.gamma1);
  p.gamma2 = s.real("gamma2", p.gamma2);
  p.gamma3 = s.real("gamma3", p.gamma3);
  p.eta1 = s.real("eta1", p.eta1);
  p.eta2 = s.real("eta2", p.eta2);
  p.sigma0 = s.real("sigma0", p.sigma0);
  p.sigma_min = s.real("sigma_min", p.sigma_min);
  p.tau = s.real("tau", p.tau);
  p.alpha1 = s.real("alpha1", p.alpha1);
  p.alpha2 = s.real("alpha2", p.alpha2);
  p.krylov_max_dim = static_cast<int>(s.integer("krylov_max_dim", p.krylov_max_dim));
  p.momentum_halvings = static_cast<int>(s.integer("momentum_halvings", p.momentum_halvings));
  p.fixed_M = s.real("fixed_M", p.fixed_M);
  p.tr_radius0 = s.real("tr_radius0", p.tr_radius0);
  p.tr_radius_max = s.real("tr_radius_max", p.tr_radius_max);
  if (auto v = s.text("solver")) {
    with_prefix("[" + s.name() + "] solver:", [&] { p.solver = parse_crs_solver(*v); });
  }
  return p;
}

}  // namespace

void RunConfig::validate() const {
  if (optimizers.empty()) throw ConfigError("at least one [optimizer.NAME] section is required");
  for (const auto& o : optimizers) with_prefix("[optimizer." + o.label + "]", [&] { o.params.validate(); });
  with_prefix("[stop]", [&] { stop.validate(); });
  if (seeds < 1) throw ConfigError("[run] seeds: must be at least 1");
  if (!(start_scale > 0.0)) throw ConfigError("[start] scale: must be positive");
  const bool regression = kind == ModelKind::LogisticNonconvex || kind == ModelKind::RobustLinear;
  if (regression && !dataset) with_prefix("[model]", [&] { synthetic.validate(); });
  if (!regression && dim < 1) throw ConfigError("[model] dim: must be at least 1");
  if (kind == ModelKind::Quadratic && !(condition >= 1.0)) throw ConfigError("[model] condition: must be >= 1");
  if (!(chi >= 0.0)) throw ConfigError("[model] chi: must be nonnegative");
  if (!format.empty() && format != "libsvm" && format != "csv")
    throw ConfigError("[model] format: expected libsvm or csv, got '" + format + "'");
}

RunConfig parse_config(const std::string& text) {
  pt::ptree root;
  std::istringstream in(text);
  try {
    pt::ini_parser::read_ini(in, root);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError("config line " + std::to_string(e.line()) + ": " + e.message());
  }

  // ini_parser drops sections without keys; recover every header in order.
  std::vector<std::string> headers;
  {
    std::istringstream scan(text);
    for (std::string line; std::getline(scan, line);) {
      const auto first = line.find_first_not_of(" \t");
      const auto last = line.find_last_not_of(" \t\r");
      if (first == std::string::npos || line[first] != '[' || line[last] != ']') continue;
      headers.push_back(line.substr(first + 1, last - first - 1));
    }
  }
  for (const auto& [name, tree] : root)
    if (tree.empty() && !tree.data().empty()) throw ConfigError("key '" + name + "' outside of any section");

  RunConfig cfg;
  const pt::ptree empty;
  for (const auto& name : headers) {
    const auto found = root.find(name);
    const pt::ptree& tree = found == root.not_found() ? empty : found->second;
    Section s(name, tree);
    if (name == "model") {
      if (auto v = s.text("kind")) with_prefix("[model] kind:", [&] { cfg.kind = parse_model_kind(*v); });
      cfg.chi = s.real("chi", cfg.chi);
      cfg.dim = s.integer("dim", cfg.dim);
      cfg.condition = s.real("condition", cfg.condition);
      if (auto v = s.text("backend")) {
        if (*v == "serial")
          cfg.backend = kernels::Backend::Serial;
        else if (*v == "parallel")
          cfg.backend = kernels::Backend::Parallel;
        else
          s.fail("backend", "expected serial or parallel, got '" + *v + "'");
      }
      cfg.dense_cap = s.integer("dense_cap", cfg.dense_cap);
      if (auto v = s.text("dataset")) cfg.dataset = *v;
      if (auto v = s.text("format")) cfg.format = *v;
      cfg.label_column = static_cast<std::size_t>(s.seed("label_column", cfg.label_column));
      cfg.standardize = s.flag("standardize", cfg.standardize);
      cfg.subsample_n = static_cast<std::size_t>(s.seed("subsample_n", cfg.subsample_n));
      cfg.subsample_seed = s.seed("subsample_seed", cfg.subsample_seed);
      cfg.synthetic.n = static_cast<std::size_t>(s.seed("n", cfg.synthetic.n));
      cfg.synthetic.d = static_cast<std::size_t>(s.seed("d", cfg.synthetic.d));
      cfg.synthetic.label_noise = s.real("label_noise", cfg.synthetic.label_noise);
    } else if (name == "start") {
      if (auto v = s.text("policy")) {
        if (*v == "zeros")
          cfg.start = StartPolicy::Zeros;
        else if (*v == "gaussian")
          cfg.start = StartPolicy::Gaussian;
        else
          s.fail("policy", "expected zeros or gaussian, got '" + *v + "'");
      }
      cfg.start_scale = s.real("scale", cfg.start_scale);
    } else if (name == "stop") {
      cfg.stop.grad_tol = s.real("grad_tol", cfg.stop.grad_tol);
      cfg.stop.max_iter = s.integer("max_iter", cfg.stop.max_iter);
      cfg.stop.max_seconds = s.real("max_seconds", cfg.stop.max_seconds);
      cfg.stop.max_consecutive_failures = s.integer("max_consecutive_failures", cfg.stop.max_consecutive_failures);
      cfg.stop.second_order = s.flag("second_order", cfg.stop.second_order);
    } else if (name == "run") {
      cfg.seed = s.seed("seed", cfg.seed);
      cfg.seeds = static_cast<int>(s.integer("seeds", cfg.seeds));
      if (auto v = s.text("outdir")) cfg.outdir = *v;
    } else if (name.rfind("optimizer.", 0) == 0) {
      OptimizerEntry e;
      e.label = name.substr(10);
      if (e.label.empty()) throw ConfigError("[optimizer.] needs a label");
      for (const auto& o : cfg.optimizers)
        if (o.label == e.label) throw ConfigError("[" + name + "] declared twice");
      const std::string method = s.text("method").value_or(e.label);
      with_prefix("[" + name + "] method:", [&] { e.method = parse_method(method); });
      e.params = read_params(s);
      cfg.optimizers.push_back(std::move(e));
    } else {
      throw ConfigError("unknown section [" + name + "]");
    }
    s.reject_unknown();
  }
  cfg.synthetic.task = cfg.kind == ModelKind::RobustLinear ? Task::Regression : Task::Classification;
  cfg.validate();
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

Problem build_problem(const RunConfig& cfg, std::uint64_t index) {
  const std::uint64_t seed = cfg.seed + index;
  ModelSpec spec;
  spec.kind = cfg.kind;
  spec.chi = cfg.chi;
  spec.backend = cfg.backend;
  spec.dense_cap = cfg.dense_cap;
  switch (cfg.kind) {
    case ModelKind::LogisticNonconvex:
    case ModelKind::RobustLinear: {
      Dataset ds;
      if (cfg.dataset) {
        std::string fmt = cfg.format;
        if (fmt.empty()) fmt = cfg.dataset->extension() == ".csv" ? "csv" : "libsvm";
        ds = fmt == "csv" ? load_csv(*cfg.dataset, cfg.label_column) : load_libsvm(*cfg.dataset);
        if (cfg.subsample_n > 0) ds = subsample(ds, cfg.subsample_n, cfg.subsample_seed + index);
      } else {
        SyntheticSpec syn = cfg.synthetic;
        syn.seed = seed;
        ds = gen_synthetic(syn);
      }
      if (cfg.standardize) ds = standardize(ds);
      spec.dataset = std::make_shared<const Dataset>(std::move(ds));
      break;
    }
    case ModelKind::Quadratic: {
      auto q = random_quadratic(cfg.dim, cfg.condition, seed);
      spec.dim = cfg.dim;
      spec.quadratic_matrix = std::move(q.A);
      spec.quadratic_rhs = std::move(q.b);
      break;
    }
    case ModelKind::Rosenbrock:
      spec.dim = cfg.dim;
      break;
  }
  Problem prob;
  prob.model = make_objective(spec);
  const Eigen::Index d = prob.model->dim();
  prob.x0 = cfg.start == StartPolicy::Gaussian ? gaussian_point(d, cfg.start_scale, seed) : Vector::Zero(d);
  return prob;
}

}  // namespace arcm
