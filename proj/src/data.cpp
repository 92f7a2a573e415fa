#include "arcm/data.hpp"

#include "arcm/rng.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <string_view>
#include <vector>

namespace arcm {
namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("write failed for " + path.string());
}

bool parse_double(std::string_view tok, double& out) {
  if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
  if (tok.empty()) return false;
  const auto* end = tok.data() + tok.size();
  const auto res = std::from_chars(tok.data(), end, out);
  return res.ec == std::errc() && res.ptr == end;
}

bool parse_index(std::string_view tok, long long& out) {
  if (tok.empty()) return false;
  const auto* end = tok.data() + tok.size();
  const auto res = std::from_chars(tok.data(), end, out);
  return res.ec == std::errc() && res.ptr == end;
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    pos = nl + 1;
  }
  return lines;
}

bool is_blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](char c) { return c == ' ' || c == '\t'; });
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

// {-1,+1} -> {0,1}, then {1,2} -> {0,1}; otherwise unchanged.
void map_binary_labels(Vector& labels) {
  std::set<double> seen(labels.begin(), labels.end());
  const auto within = [&](std::initializer_list<double> allowed) {
    return std::all_of(seen.begin(), seen.end(), [&](double v) {
      return std::find(allowed.begin(), allowed.end(), v) != allowed.end();
    });
  };
  if (within({-1.0, 1.0})) {
    for (auto& v : labels) v = v > 0.0 ? 1.0 : 0.0;
  } else if (within({1.0, 2.0})) {
    for (auto& v : labels) v = v - 1.0;
  }
}

}  // namespace

void Dataset::validate() const {
  if (features.rows() < 1 || features.cols() < 1)
    throw ConfigError("dataset '" + name + "' must have at least one sample and one feature");
  if (labels.size() != features.rows())
    throw ConfigError("dataset '" + name + "': label count does not match row count");
  if (!features.allFinite() || !labels.allFinite())
    throw ConfigError("dataset '" + name + "' contains non-finite values");
}

void SyntheticSpec::validate() const {
  if (n == 0) throw ConfigError("n must be positive");
  if (d == 0) throw ConfigError("d must be positive");
  if (!(label_noise >= 0.0 && label_noise <= 1.0))
    throw ConfigError("label_noise must lie in [0, 1]");
}

Dataset parse_libsvm(const std::string& text, Eigen::Index min_dim) {
  struct Entry {
    Eigen::Index row;
    Eigen::Index col;
    double value;
  };
  std::vector<Entry> entries;
  std::vector<double> labels;
  Eigen::Index max_col = 0;

  const auto lines = split_lines(text);
  for (std::size_t ln = 0; ln < lines.size(); ++ln) {
    std::string_view line = lines[ln];
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    if (is_blank(line)) continue;
    const std::size_t lineno = ln + 1;
    const auto row = static_cast<Eigen::Index>(labels.size());

    std::istringstream toks{std::string(line)};
    std::string tok;
    toks >> tok;
    double label = 0.0;
    if (!parse_double(tok, label) || !std::isfinite(label))
      throw ParseError("bad label '" + tok + "'", lineno);
    labels.push_back(label);

    long long prev = 0;
    while (toks >> tok) {
      const auto colon = tok.find(':');
      if (colon == std::string::npos) throw ParseError("expected idx:val, got '" + tok + "'", lineno);
      long long idx = 0;
      double val = 0.0;
      if (!parse_index(std::string_view(tok).substr(0, colon), idx) || idx < 1)
        throw ParseError("bad feature index in '" + tok + "'", lineno);
      if (!parse_double(std::string_view(tok).substr(colon + 1), val))
        throw ParseError("bad feature value in '" + tok + "'", lineno);
      if (!std::isfinite(val)) throw ParseError("non-finite feature value in '" + tok + "'", lineno);
      if (idx <= prev) throw ParseError("feature indices must be strictly increasing", lineno);
      prev = idx;
      entries.push_back({row, static_cast<Eigen::Index>(idx - 1), val});
      max_col = std::max<Eigen::Index>(max_col, static_cast<Eigen::Index>(idx));
    }
  }
  if (labels.empty()) throw ParseError("no samples", 1);

  Dataset ds;
  ds.features = RowMatrix::Zero(static_cast<Eigen::Index>(labels.size()), std::max(max_col, min_dim));
  for (const auto& e : entries) ds.features(e.row, e.col) = e.value;
  ds.labels = Eigen::Map<const Vector>(labels.data(), static_cast<Eigen::Index>(labels.size()));
  map_binary_labels(ds.labels);
  ds.name = "libsvm";
  return ds;
}

Dataset load_libsvm(const std::filesystem::path& path, Eigen::Index min_dim) {
  Dataset ds = parse_libsvm(read_file(path), min_dim);
  ds.name = path.stem().string();
  return ds;
}

std::string format_libsvm(const Dataset& ds) {
  std::string out;
  for (Eigen::Index i = 0; i < ds.samples(); ++i) {
    out += format_double(ds.labels[i]);
    for (Eigen::Index j = 0; j < ds.dim(); ++j) {
      const double v = ds.features(i, j);
      if (v == 0.0) continue;
      out += ' ';
      out += std::to_string(j + 1);
      out += ':';
      out += format_double(v);
    }
    out += '\n';
  }
  return out;
}

void write_libsvm(const Dataset& ds, const std::filesystem::path& path) {
  write_file(path, format_libsvm(ds));
}

Dataset parse_csv(const std::string& text, std::size_t label_col) {
  std::vector<std::vector<double>> rows;
  std::size_t width = 0;
  bool first = true;

  const auto lines = split_lines(text);
  for (std::size_t ln = 0; ln < lines.size(); ++ln) {
    const std::string_view line = lines[ln];
    if (is_blank(line)) continue;
    const std::size_t lineno = ln + 1;

    std::vector<std::string_view> cells;
    std::size_t pos = 0;
    while (true) {
      const auto comma = line.find(',', pos);
      cells.push_back(trim(line.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos)));
      if (comma == std::string_view::npos) break;
      pos = comma + 1;
    }

    std::vector<double> values(cells.size());
    std::size_t bad_col = 0;
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (!parse_double(cells[c], values[c])) {
        bad_col = c + 1;
        break;
      }
    }
    if (first) {
      first = false;
      width = cells.size();
      if (label_col >= width)
        throw ParseError("label column " + std::to_string(label_col) + " out of range", lineno);
      if (bad_col != 0) continue;  // header row
    }
    if (cells.size() != width)
      throw ParseError("ragged row: expected " + std::to_string(width) + " cells, got " +
                           std::to_string(cells.size()),
                       lineno);
    if (bad_col != 0)
      throw ParseError("non-numeric cell '" + std::string(cells[bad_col - 1]) + "'", lineno, bad_col);
    for (std::size_t c = 0; c < values.size(); ++c)
      if (!std::isfinite(values[c])) throw ParseError("non-finite cell", lineno, c + 1);
    rows.push_back(std::move(values));
  }
  if (rows.empty()) throw ParseError("no data rows", 1);
  if (width < 2) throw ParseError("need at least one feature column besides the label", 1);

  Dataset ds;
  const auto n = static_cast<Eigen::Index>(rows.size());
  const auto d = static_cast<Eigen::Index>(width - 1);
  ds.features.resize(n, d);
  ds.labels.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& r = rows[static_cast<std::size_t>(i)];
    Eigen::Index j = 0;
    for (std::size_t c = 0; c < width; ++c) {
      if (c == label_col)
        ds.labels[i] = r[c];
      else
        ds.features(i, j++) = r[c];
    }
  }
  ds.name = "csv";
  return ds;
}

Dataset load_csv(const std::filesystem::path& path, std::size_t label_col) {
  Dataset ds = parse_csv(read_file(path), label_col);
  ds.name = path.stem().string();
  return ds;
}

std::string format_csv(const Dataset& ds) {
  std::string out;
  for (Eigen::Index j = 0; j < ds.dim(); ++j) out += "x" + std::to_string(j + 1) + ",";
  out += "y\n";
  for (Eigen::Index i = 0; i < ds.samples(); ++i) {
    for (Eigen::Index j = 0; j < ds.dim(); ++j) {
      out += format_double(ds.features(i, j));
      out += ',';
    }
    out += format_double(ds.labels[i]);
    out += '\n';
  }
  return out;
}

void write_csv(const Dataset& ds, const std::filesystem::path& path) {
  write_file(path, format_csv(ds));
}

Dataset standardize(const Dataset& ds) {
  if (ds.samples() < 2) throw PreconditionError("standardize needs at least two samples");
  Dataset out = ds;
  const double n = static_cast<double>(ds.samples());
  for (Eigen::Index j = 0; j < ds.dim(); ++j) {
    auto col = out.features.col(j);
    const double mean = col.sum() / n;
    col.array() -= mean;
    const double sd = std::sqrt(col.squaredNorm() / n);
    if (sd > 0.0)
      col /= sd;
    else
      col.setZero();
  }
  return out;
}

Dataset subsample(const Dataset& ds, std::size_t n_max, std::uint64_t seed) {
  const auto n = static_cast<std::size_t>(ds.samples());
  if (n <= n_max) return ds;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [seed](std::size_t a, std::size_t b) {
    const auto ha = rng::hash(seed, rng::kSubsample, a);
    const auto hb = rng::hash(seed, rng::kSubsample, b);
    return ha != hb ? ha < hb : a < b;
  });
  order.resize(n_max);
  std::sort(order.begin(), order.end());

  Dataset out;
  out.name = ds.name;
  out.features.resize(static_cast<Eigen::Index>(n_max), ds.dim());
  out.labels.resize(static_cast<Eigen::Index>(n_max));
  for (std::size_t r = 0; r < n_max; ++r) {
    out.features.row(static_cast<Eigen::Index>(r)) = ds.features.row(static_cast<Eigen::Index>(order[r]));
    out.labels[static_cast<Eigen::Index>(r)] = ds.labels[static_cast<Eigen::Index>(order[r])];
  }
  return out;
}

Vector synthetic_weights(const SyntheticSpec& spec) {
  const auto d = static_cast<Eigen::Index>(spec.d);
  Vector w(d);
  const double scale = 1.0 / std::sqrt(static_cast<double>(spec.d));
  for (Eigen::Index j = 0; j < d; ++j)
    w[j] = scale * rng::normal(spec.seed, rng::kWeights, static_cast<std::uint64_t>(j));
  return w;
}

Dataset gen_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  const auto n = static_cast<Eigen::Index>(spec.n);
  const auto d = static_cast<Eigen::Index>(spec.d);
  Dataset ds;
  ds.features.resize(n, d);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < d; ++j)
      ds.features(i, j) =
          rng::normal(spec.seed, rng::kFeatures, static_cast<std::uint64_t>(i * d + j));

  const Vector w = synthetic_weights(spec);
  const Vector margin = ds.features * w;
  ds.labels.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto idx = static_cast<std::uint64_t>(i);
    if (spec.task == Task::Classification) {
      double y = margin[i] > 0.0 ? 1.0 : 0.0;
      if (rng::uniform(spec.seed, rng::kLabelFlip, idx) < spec.label_noise) y = 1.0 - y;
      ds.labels[i] = y;
    } else {
      ds.labels[i] = margin[i] + rng::student_t3(spec.seed, rng::kRegressionNoise, idx);
    }
  }
  ds.name = std::string(spec.task == Task::Classification ? "synthetic-classification" : "synthetic-regression") +
            "-n" + std::to_string(spec.n) + "-d" + std::to_string(spec.d) + "-s" + std::to_string(spec.seed);
  return ds;
}

}  // namespace arcm
