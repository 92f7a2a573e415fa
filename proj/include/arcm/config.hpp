#pragma once

// Run configuration. INI text with these sections (all keys optional):
//
//   [model]      kind, chi, dim, condition, backend, dense_cap,
//                dataset, format, label_column, standardize,
//                subsample_n, subsample_seed,
//                n, d, label_noise
//   [start]      policy (zeros | gaussian), scale
//   [stop]       grad_tol, max_iter, max_seconds, max_consecutive_failures, second_order
//   [run]        seed, seeds, outdir
//   [optimizer.LABEL]   method, solver, gamma1, gamma2, gamma3, eta1, eta2,
//                       sigma0, sigma_min, tau, alpha1, alpha2, krylov_max_dim,
//                       momentum_halvings, fixed_M, tr_radius0, tr_radius_max
//
// Optimizer sections keep their declaration order; method defaults to LABEL.
// Unknown sections or keys are rejected.

#include "arcm/data.hpp"
#include "arcm/objective.hpp"
#include "arcm/optimizers.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace arcm {

struct OptimizerEntry {
  std::string label;
  Method method = Method::ARCm;
  HyperParams params;
};

enum class StartPolicy { Zeros, Gaussian };

struct RunConfig {
  ModelKind kind = ModelKind::Quadratic;
  double chi = 0.1;
  Eigen::Index dim = 10;     // quadratic and rosenbrock
  double condition = 100.0;  // quadratic
  kernels::Backend backend = kernels::Backend::Parallel;
  Eigen::Index dense_cap = kDefaultDenseCap;

  // Regression data: a file when dataset is set, synthetic otherwise.
  std::optional<std::filesystem::path> dataset;
  std::string format;  // libsvm | csv; empty infers from the extension
  std::size_t label_column = 0;
  bool standardize = false;
  std::size_t subsample_n = 0;  // 0 keeps every row
  std::uint64_t subsample_seed = 0;
  SyntheticSpec synthetic;

  StartPolicy start = StartPolicy::Zeros;
  double start_scale = 1.0;

  StopCriteria stop;
  std::uint64_t seed = 0;
  int seeds = 1;  // compare only
  std::filesystem::path outdir = "arcm_out";

  std::vector<OptimizerEntry> optimizers;

  void validate() const;
};

RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);

struct Problem {
  ObjectivePtr model;
  Vector x0;
};

// Instance for run index i: data, quadratic and start point all use seed + i.
Problem build_problem(const RunConfig& cfg, std::uint64_t index = 0);

}  // namespace arcm
