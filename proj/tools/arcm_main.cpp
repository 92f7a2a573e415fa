#include "arcm/commands.hpp"
#include "arcm/config.hpp"

#include "CLI11.hpp"

#include <iostream>

namespace {

arcm::RunConfig load(const std::string& path, const std::string& outdir, const std::optional<std::uint64_t>& seed) {
  arcm::RunConfig cfg = arcm::load_config(path);
  if (!outdir.empty()) cfg.outdir = outdir;
  if (seed) cfg.seed = *seed;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cubic regularization with momentum: runs, comparisons, self-checks and data generation"};
  app.require_subcommand(1);

  std::string config_path;
  std::string outdir;
  std::optional<std::uint64_t> seed;
  bool quiet = false;
  app.add_option("--config", config_path, "Run configuration (INI)");
  app.add_option("--outdir", outdir, "Output directory (overrides [run] outdir)");
  app.add_option("--seed", seed, "Base seed (overrides [run] seed)");
  app.add_flag("--quiet", quiet, "Only report failures");

  auto* run = app.add_subcommand("run", "Run each configured optimizer once");
  auto* compare = app.add_subcommand("compare", "Run every optimizer over several seeds and tabulate");
  auto* validate = app.add_subcommand("validate", "Built-in verification battery");
  bool inject_fault = false;
  validate->add_flag("--inject-fault", inject_fault, "Mis-sign the regression gradients")->group("");

  auto* gen = app.add_subcommand("gen-data", "Write a synthetic dataset as LIBSVM and CSV");
  arcm::SyntheticSpec spec;
  std::string task = "classification";
  std::string name = "synthetic";
  gen->add_option("--n", spec.n, "Samples")->capture_default_str();
  gen->add_option("--d", spec.d, "Features")->capture_default_str();
  gen->add_option("--noise", spec.label_noise, "Label flip probability (classification)")->capture_default_str();
  gen->add_option("--task", task, "classification | regression")
      ->check(CLI::IsMember({"classification", "regression"}))
      ->capture_default_str();
  gen->add_option("--name", name, "File stem")->capture_default_str();

  for (auto* sub : {run, compare, validate, gen}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : arcm::kExitConfig;
  }

  try {
    if (*run || *compare) {
      if (config_path.empty()) throw arcm::ConfigError("--config is required");
      const auto cfg = load(config_path, outdir, seed);
      return *run ? arcm::cmd_run(cfg, std::cout, quiet) : arcm::cmd_compare(cfg, std::cout, quiet);
    }
    if (*validate) return arcm::cmd_validate(std::cout, quiet, inject_fault);
    if (*gen) {
      spec.task = task == "regression" ? arcm::Task::Regression : arcm::Task::Classification;
      if (seed) spec.seed = *seed;
      arcm::cmd_gen_data(spec, outdir.empty() ? "." : outdir, name);
      if (!quiet) std::cout << "wrote " << name << ".libsvm and " << name << ".csv\n";
      return arcm::kExitOk;
    }
  } catch (const arcm::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return arcm::kExitConfig;
  } catch (const arcm::ParseError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return arcm::kExitConfig;
  } catch (const arcm::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return arcm::kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return arcm::kExitNumeric;
  }
  return arcm::kExitOk;
}
