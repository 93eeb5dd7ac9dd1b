#include <doctest.h>

#include <cmath>
#include <set>
#include <vector>

#include "tsb/data_matrix.hpp"
#include "tsb/directions.hpp"
#include "tsb/errors.hpp"
#include "tsb/parallel.hpp"
#include "tsb/rng.hpp"

#include "oracles.hpp"

using namespace tsb;

TEST_CASE("identical stream identity reproduces the sequence") {
  RngStream a(42, "null", 0);
  RngStream b(42, "null", 0);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("distinct stream indices and labels diverge") {
  RngStream a(42, "null", 0);
  RngStream b(42, "null", 1);
  RngStream c(42, "alt", 0);
  int same_ab = 0, same_ac = 0;
  for (int i = 0; i < 64; ++i) {
    const auto va = a.next_u64();
    if (va == b.next_u64()) ++same_ab;
    if (va == c.next_u64()) ++same_ac;
  }
  CHECK(same_ab == 0);
  CHECK(same_ac == 0);
}

TEST_CASE("substreams are independent of the parent's consumption") {
  RngStream parent(7, "root", 3);
  const RngStream before = parent.substream("child", 5);
  parent.next_u64();
  parent.next_u64();
  RngStream after = parent.substream("child", 5);
  RngStream expected = before;
  for (int i = 0; i < 16; ++i) CHECK(after.next_u64() == expected.next_u64());
}

TEST_CASE("uniform draws respect their ranges") {
  RngStream s(1, "ranges", 0);
  for (int i = 0; i < 1000; ++i) {
    const double u = s.next_double();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    const double p = s.uniform_pos();
    CHECK(p > 0.0);
    CHECK(p <= 1.0);
    const double r = s.uniform(-3.0, 2.0);
    CHECK(r >= -3.0);
    CHECK(r < 2.0);
  }
}

TEST_CASE("normal draws have the right first moments") {
  RngStream s(11, "normals", 0);
  std::vector<double> draws(200000);
  for (auto& v : draws) v = s.normal();
  const auto stats = oracles::mean_std(draws);
  CHECK(std::abs(stats.mean) < 4.0 * stats.se);
  CHECK(stats.std == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("next_below stays in range and covers small supports") {
  RngStream s(3, "below", 0);
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 300; ++i) {
    const auto v = s.next_below(7);
    CHECK(v < 7);
    seen.insert(v);
  }
  CHECK(seen.size() == 7);
}

TEST_CASE("ecdf matches the stated step values") {
  const SortedSample s({1.0, 2.0, 3.0});
  CHECK(ecdf_eval(s, 2.0) == doctest::Approx(2.0 / 3.0));
  CHECK(ecdf_eval(s, 0.0) == 0.0);
  CHECK(ecdf_eval(s, 3.0) == 1.0);
  CHECK(ecdf_eval(s, 100.0) == 1.0);
}

TEST_CASE("ecdf handles ties like a linear scan") {
  const std::vector<double> values{1.0, 1.0, 2.0};
  const SortedSample s(values);
  for (double u : {0.5, 1.0, 1.5, 2.0, 2.5}) {
    CHECK(ecdf_eval(s, u) == doctest::Approx(oracles::ecdf_linear_scan(values, u)));
  }
  CHECK(ecdf_eval(s, 1.0) == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("ecdf is monotone non-decreasing") {
  RngStream s(5, "ecdf", 0);
  std::vector<double> values(257);
  for (auto& v : values) v = s.normal();
  const SortedSample sample(values);
  double prev = -1.0;
  for (double u = -4.0; u <= 4.0; u += 0.01) {
    const double f = ecdf_eval(sample, u);
    CHECK(f >= prev);
    prev = f;
  }
}

TEST_CASE("unit directions in one dimension are signs") {
  RngStream s(9, "dirs", 0);
  const Eigen::MatrixXd dirs = sample_unit_directions(1, 3, s);
  for (Eigen::Index i = 0; i < 3; ++i) {
    CHECK(std::abs(std::abs(dirs(i, 0)) - 1.0) < 1e-15);
  }
}

TEST_CASE("unit directions are normalized") {
  RngStream s(9, "dirs", 1);
  const Eigen::MatrixXd dirs = sample_unit_directions(5, 100, s);
  for (Eigen::Index i = 0; i < dirs.rows(); ++i) {
    CHECK(std::abs(dirs.row(i).norm() - 1.0) < 1e-12);
  }
}

TEST_SUITE("slow") {
  TEST_CASE("unit directions are coordinate symmetric") {
    RngStream s(9, "dirs", 2);
    const Eigen::Index k = 100000;
    const Eigen::MatrixXd dirs = sample_unit_directions(3, k, s);
    const Eigen::VectorXd mean = dirs.colwise().mean();
    for (Eigen::Index c = 0; c < 3; ++c) {
      CHECK(std::abs(mean(c)) < 3.0 / std::sqrt(static_cast<double>(k)));
    }
  }
}

TEST_CASE("parallel_for output does not depend on the thread cap") {
  auto run = [](unsigned threads) {
    set_max_threads(threads);
    std::vector<double> out(1000);
    parallel_for(out.size(), 16, [&](std::size_t begin, std::size_t end) {
      for (std::size_t i = begin; i < end; ++i) {
        RngStream s(99, "par", i);
        out[i] = s.normal();
      }
    });
    set_max_threads(0);
    return out;
  };
  CHECK(run(1) == run(4));
}

TEST_CASE("parallel_for propagates worker exceptions") {
  CHECK_THROWS_AS(
      parallel_for(64, 1,
                   [](std::size_t begin, std::size_t) {
                     if (begin == 13) throw DomainError("boom");
                   }),
      DomainError);
}

TEST_CASE("data matrix validates shape") {
  CHECK_THROWS_AS(DataMatrix(0, 3), DimensionMismatch);
  CHECK_THROWS_AS(DataMatrix::from_values(2, 2, {1.0, 2.0}), DimensionMismatch);
  const DataMatrix m = DataMatrix::from_values(2, 2, {1.0, 2.0, 3.0, 4.0});
  CHECK(m(1, 0) == 3.0);
  CHECK(m.view()(0, 1) == 2.0);
  CHECK(m.all_finite());
}
