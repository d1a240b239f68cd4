#include <doctest.h>

#include <cstring>
#include <random>

#include "accentid/balance.hpp"
#include "accentid/common.hpp"
#include "support/oracles.hpp"

using namespace accentid;
using namespace accentid::balance;

namespace {

struct Dataset {
  Eigen::MatrixXd X;
  std::vector<int> y;
};

Dataset random_imbalanced(std::uint64_t seed, const std::vector<int>& counts, int dims) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  Dataset d;
  int total = 0;
  for (int c : counts) total += c;
  d.X.resize(total, dims);
  int row = 0;
  for (std::size_t c = 0; c < counts.size(); ++c) {
    for (int i = 0; i < counts[c]; ++i, ++row) {
      for (int j = 0; j < dims; ++j) d.X(row, j) = n(rng) * (j + 1) * 10.0 + static_cast<double>(c);
      d.y.push_back(static_cast<int>(c));
    }
  }
  return d;
}

std::map<int, int> counts_of(const std::vector<int>& y) {
  std::map<int, int> m;
  for (int v : y) ++m[v];
  return m;
}

}  // namespace

TEST_CASE("SMOTE no-op on balanced input") {
  auto d = random_imbalanced(1, {4, 4, 4}, 3);
  auto r = smote_resample(d.X, d.y, {5, 9});
  CHECK(r.X == d.X);
  CHECK(r.y == d.y);
  CHECK(r.origins.empty());
}

TEST_CASE("SMOTE on a class of two identical points") {
  Eigen::MatrixXd X(5, 2);
  X << 0, 0, 1, 1, 2, 2, 7, 3, 7, 3;
  std::vector<int> y = {0, 0, 0, 1, 1};
  auto r = smote_resample(X, y, {5, 1});
  REQUIRE(r.X.rows() == 6);
  CHECK(r.X(5, 0) == 7.0);
  CHECK(r.X(5, 1) == 3.0);
  CHECK(r.warnings.size() == 1);  // k clamped to 1
}

TEST_CASE("SMOTE synthetics between (0,0) and (1,1) lie on the diagonal") {
  Eigen::MatrixXd X(12, 2);
  std::vector<int> y;
  X.row(0) << 0, 0;
  X.row(1) << 1, 1;
  y = {1, 1};
  for (int i = 0; i < 10; ++i) {
    X.row(2 + i) << 5 + i, -3;
    y.push_back(0);
  }
  auto r = smote_resample(X, y, {1, 42});
  REQUIRE(r.X.rows() == 20);
  for (Eigen::Index i = 12; i < 20; ++i) {
    CHECK(r.y[i] == 1);
    CHECK(r.X(i, 0) == r.X(i, 1));
    CHECK(r.X(i, 0) >= 0.0);
    CHECK(r.X(i, 0) <= 1.0);
  }
}

TEST_CASE("SMOTE properties on random data") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    auto d = random_imbalanced(seed, {9, 3, 6, 2}, 4);
    const SmoteConfig cfg{3, 1000 + seed};
    auto r = smote_resample(d.X, d.y, cfg);

    for (const auto& [c, n] : counts_of(r.y)) CHECK(n == 9);
    CHECK(r.X.topRows(d.X.rows()) == d.X);
    for (Eigen::Index i = d.X.rows(); i < r.X.rows(); ++i) {
      const double dist = testing::nearest_same_class_segment(r.X.row(i).transpose(), d.X, d.y, r.y[i]);
      CHECK(dist < 1e-9);
    }

    auto again = smote_resample(d.X, d.y, cfg);
    REQUIRE(again.X.size() == r.X.size());
    CHECK(std::memcmp(again.X.data(), r.X.data(), sizeof(double) * r.X.size()) == 0);
    CHECK(again.y == r.y);
  }
}

TEST_CASE("SMOTE errors") {
  Eigen::MatrixXd X(4, 1);
  X << 0, 1, 2, 3;
  std::vector<int> y = {0, 0, 0, 1};
  CHECK_THROWS_WITH_AS(smote_resample(X, y, {5, 0}), doctest::Contains("SMOTE requires >=2 per class"),
                       DataError);
  CHECK_THROWS_AS(smote_resample(X, std::vector<int>{0, 1}, {5, 0}), DataError);
}

TEST_CASE("SMOTE on corpus-shaped class counts adds 2200 rows") {
  const std::vector<int> counts = {600, 600, 200, 400, 600, 400, 400, 400, 200, 200, 400};
  auto d = random_imbalanced(3, counts, 2);
  auto r = smote_resample(d.X, d.y, {5, 7});
  CHECK(d.X.rows() == 4400);
  CHECK(r.X.rows() == 6600);
  for (const auto& [c, n] : counts_of(r.y)) CHECK(n == 600);
}
