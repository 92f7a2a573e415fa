#pragma once

#include "arcm/types.hpp"

#include <cstdint>
#include <filesystem>
#include <string>

namespace arcm {

// n x d features (one row per sample) plus n labels.
struct Dataset {
  RowMatrix features;
  Vector labels;
  std::string name;

  Eigen::Index samples() const { return features.rows(); }
  Eigen::Index dim() const { return features.cols(); }

  // Throws ConfigError unless n >= 1, d >= 1, sizes agree and all entries are finite.
  void validate() const;
};

enum class Task { Classification, Regression };

struct SyntheticSpec {
  std::size_t n = 200;
  std::size_t d = 50;
  double label_noise = 0.0;
  Task task = Task::Classification;
  std::uint64_t seed = 0;

  void validate() const;
};

// Reads "label idx:val idx:val ..." lines with 1-based strictly increasing
// indices. d is the largest index seen (or min_dim if larger). Labels in
// {-1,+1} or {1,2} are mapped onto {0,1}; anything else is kept as read.
Dataset load_libsvm(const std::filesystem::path& path, Eigen::Index min_dim = 0);
Dataset parse_libsvm(const std::string& text, Eigen::Index min_dim = 0);
void write_libsvm(const Dataset& ds, const std::filesystem::path& path);
std::string format_libsvm(const Dataset& ds);

// Rectangular numeric CSV. A first row that does not parse as numbers is a header.
Dataset load_csv(const std::filesystem::path& path, std::size_t label_col);
Dataset parse_csv(const std::string& text, std::size_t label_col);
// Writes features then the label as the last column, with a header row.
void write_csv(const Dataset& ds, const std::filesystem::path& path);
std::string format_csv(const Dataset& ds);

// Zero mean, unit population standard deviation per column. Constant columns become 0.
Dataset standardize(const Dataset& ds);

// Keeps a seeded random subset of n_max rows (order preserved). No-op when n <= n_max.
Dataset subsample(const Dataset& ds, std::size_t n_max, std::uint64_t seed);

// Deterministic synthetic data. Features are i.i.d. N(0,1) from a counter-based
// stream; the hidden weight vector comes from a separate stream of the same seed.
Dataset gen_synthetic(const SyntheticSpec& spec);

// Hidden weights used by gen_synthetic for this spec (exposed for tests).
Vector synthetic_weights(const SyntheticSpec& spec);

}  // namespace arcm
