#include "arcm/data.hpp"

#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>

using namespace arcm;

TEST_CASE("libsvm single line") {
  const Dataset ds = parse_libsvm("1 1:0.5 3:-2\n");
  REQUIRE(ds.samples() == 1);
  REQUIRE(ds.dim() == 3);
  CHECK(ds.features(0, 0) == 0.5);
  CHECK(ds.features(0, 1) == 0.0);
  CHECK(ds.features(0, 2) == -2.0);
  CHECK(ds.labels[0] == 1.0);
}

TEST_CASE("libsvm label mapping") {
  const Dataset pm = parse_libsvm("+1 1:1\n-1 2:1\n");
  CHECK(pm.dim() == 2);
  CHECK(pm.labels[0] == 1.0);
  CHECK(pm.labels[1] == 0.0);

  const Dataset twelve = parse_libsvm("2 1:1\n1 1:2\n");
  CHECK(twelve.labels[0] == 1.0);
  CHECK(twelve.labels[1] == 0.0);

  const Dataset raw = parse_libsvm("3.5 1:1\n-0.25 1:2\n");
  CHECK(raw.labels[0] == 3.5);
  CHECK(raw.labels[1] == -0.25);
}

TEST_CASE("libsvm parse errors carry the line number") {
  auto line_of = [](const std::string& text) {
    try {
      parse_libsvm(text);
    } catch (const ParseError& e) {
      return e.line();
    }
    return std::size_t{0};
  };
  CHECK(line_of("1 1:1\n1 3:1 2:1\n") == 2);
  CHECK(line_of("1 1:1\n0 1:1\nx 1:1\n") == 3);
  CHECK(line_of("1 1-1\n") == 1);
  CHECK(line_of("1 0:1\n") == 1);
  CHECK(line_of("1 1:nan\n") == 1);
  CHECK(line_of("1 2:1 2:3\n") == 1);
}

TEST_CASE("csv with and without header") {
  const Dataset a = parse_csv("0.1,0.2,1\n0.3,0.4,0\n", 2);
  const Dataset b = parse_csv("a,b,y\n0.1,0.2,1\n0.3,0.4,0\n", 2);
  REQUIRE(a.samples() == 2);
  REQUIRE(a.dim() == 2);
  CHECK(a.labels[0] == 1.0);
  CHECK(a.labels[1] == 0.0);
  CHECK(a.features(1, 0) == 0.3);
  CHECK(a.features == b.features);
  CHECK(a.labels == b.labels);

  const Dataset mid = parse_csv("1,7,2\n3,8,4\n", 1);
  CHECK(mid.labels[1] == 8.0);
  CHECK(mid.features(1, 0) == 3.0);
  CHECK(mid.features(1, 1) == 4.0);
}

TEST_CASE("csv errors carry coordinates") {
  try {
    parse_csv("1,2,3\n4,5\n", 2);
    FAIL("ragged row accepted");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
  try {
    parse_csv("1,2,3\n4,oops,6\n", 2);
    FAIL("non-numeric cell accepted");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
    CHECK(e.column() == 2);
  }
}

TEST_CASE("standardize follows the population convention") {
  Dataset ds;
  ds.features.resize(2, 2);
  ds.features << 1, 5, 3, 5;
  ds.labels = Vector::Zero(2);
  const Dataset s = standardize(ds);
  CHECK(s.features(0, 0) == doctest::Approx(-1.0));
  CHECK(s.features(1, 0) == doctest::Approx(1.0));
  CHECK(s.features(0, 1) == 0.0);
  CHECK(s.features(1, 1) == 0.0);

  Dataset one;
  one.features = RowMatrix::Ones(1, 2);
  one.labels = Vector::Zero(1);
  CHECK_THROWS_AS(standardize(one), PreconditionError);
}

TEST_CASE("standardized random columns have zero mean and unit variance") {
  SyntheticSpec spec;
  spec.n = 137;
  spec.d = 9;
  spec.seed = 5;
  Dataset ds = gen_synthetic(spec);
  ds.features = (ds.features.array() * 3.0 + 7.0).matrix();
  const Dataset s = standardize(ds);
  for (Eigen::Index j = 0; j < s.dim(); ++j) {
    double mean = 0.0, var = 0.0;
    for (Eigen::Index i = 0; i < s.samples(); ++i) mean += s.features(i, j);
    mean /= static_cast<double>(s.samples());
    for (Eigen::Index i = 0; i < s.samples(); ++i) var += (s.features(i, j) - mean) * (s.features(i, j) - mean);
    var /= static_cast<double>(s.samples());
    CHECK(std::abs(mean) <= 1e-12);
    CHECK(std::abs(var - 1.0) <= 1e-10);
  }
}

TEST_CASE("synthetic generation is deterministic") {
  SyntheticSpec spec;
  spec.n = 10;
  spec.d = 3;
  spec.seed = 42;
  const Dataset a = gen_synthetic(spec);
  const Dataset b = gen_synthetic(spec);
  CHECK(a.features == b.features);
  CHECK(a.labels == b.labels);
  spec.seed = 43;
  CHECK(gen_synthetic(spec).features != a.features);
}

TEST_CASE("noiseless classification labels are the margin indicator") {
  SyntheticSpec spec;
  spec.n = 300;
  spec.d = 7;
  spec.seed = 9;
  const Dataset ds = gen_synthetic(spec);
  const Vector w = synthetic_weights(spec);
  for (Eigen::Index i = 0; i < ds.samples(); ++i)
    CHECK(ds.labels[i] == (ds.features.row(i).dot(w) > 0.0 ? 1.0 : 0.0));
}

TEST_CASE("label flip rate matches label_noise") {
  long flips = 0, total = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    SyntheticSpec spec;
    spec.n = 200;
    spec.d = 50;
    spec.label_noise = 0.05;
    spec.seed = seed;
    const Dataset ds = gen_synthetic(spec);
    const Vector w = synthetic_weights(spec);
    for (Eigen::Index i = 0; i < ds.samples(); ++i) {
      flips += ds.labels[i] != (ds.features.row(i).dot(w) > 0.0 ? 1.0 : 0.0);
      ++total;
    }
  }
  CHECK(std::abs(static_cast<double>(flips) / static_cast<double>(total) - 0.05) <= 0.04);
}

TEST_CASE("regression labels are finite with heavy-tailed residuals") {
  SyntheticSpec spec;
  spec.n = 2000;
  spec.d = 4;
  spec.task = Task::Regression;
  spec.seed = 3;
  const Dataset ds = gen_synthetic(spec);
  const Vector r = ds.labels - ds.features * synthetic_weights(spec);
  CHECK(r.allFinite());
  // Student-t(3): variance 3, so the sample standard deviation sits well above 1.
  CHECK(std::sqrt(r.squaredNorm() / 2000.0) > 1.2);
}

TEST_CASE("libsvm round trip is bit-identical") {
  SyntheticSpec spec;
  spec.n = 100;
  spec.d = 6;
  spec.seed = 17;
  Dataset ds = gen_synthetic(spec);
  ds.features(3, 2) = 0.0;  // omitted on write, restored as zero
  const Dataset back = parse_libsvm(format_libsvm(ds), ds.dim());
  CHECK(back.features == ds.features);
  CHECK(back.labels == ds.labels);
}

TEST_CASE("csv round trip through files") {
  SyntheticSpec spec;
  spec.n = 50;
  spec.d = 4;
  spec.task = Task::Regression;
  spec.seed = 23;
  const Dataset ds = gen_synthetic(spec);
  const auto dir = std::filesystem::temp_directory_path() / "arcm_test_data";
  std::filesystem::create_directories(dir);
  write_csv(ds, dir / "rt.csv");
  const Dataset back = load_csv(dir / "rt.csv", ds.dim());
  CHECK((back.features - ds.features).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK((back.labels - ds.labels).cwiseAbs().maxCoeff() <= 1e-12);
  write_libsvm(ds, dir / "rt.libsvm");
  const Dataset back2 = load_libsvm(dir / "rt.libsvm", ds.dim());
  CHECK(back2.features == ds.features);
  std::filesystem::remove_all(dir);
}

TEST_CASE("subsample keeps order and is seeded") {
  SyntheticSpec spec;
  spec.n = 40;
  spec.d = 2;
  spec.seed = 1;
  const Dataset ds = gen_synthetic(spec);
  const Dataset a = subsample(ds, 10, 7);
  const Dataset b = subsample(ds, 10, 7);
  CHECK(a.samples() == 10);
  CHECK(a.features == b.features);
  // rows appear in their original order
  Eigen::Index last = -1;
  for (Eigen::Index i = 0; i < a.samples(); ++i) {
    Eigen::Index found = -1;
    for (Eigen::Index j = 0; j < ds.samples(); ++j)
      if (ds.features.row(j) == a.features.row(i)) found = j;
    REQUIRE(found > last);
    last = found;
  }
  CHECK(subsample(ds, 100, 7).samples() == 40);
}

TEST_CASE("spec validation") {
  SyntheticSpec spec;
  spec.n = 0;
  CHECK_THROWS_AS(spec.validate(), ConfigError);
  spec.n = 5;
  spec.label_noise = 1.5;
  CHECK_THROWS_AS(spec.validate(), ConfigError);
}
