#include <doctest.h>

#include <random>

#include "accentid/common.hpp"
#include "accentid/select.hpp"
#include "support/oracles.hpp"

using namespace accentid;
using namespace accentid::select;

namespace {

// Direct ReliefF: neighbours by brute-force Euclidean distance in z-space,
// diffs range-normalized, every instance a probe.
std::vector<double> relieff_oracle(const Eigen::MatrixXd& X, const std::vector<int>& y, int k) {
  const Eigen::Index n = X.rows(), d = X.cols();
  Eigen::MatrixXd Z = X;
  for (Eigen::Index f = 0; f < d; ++f) {
    const double mu = X.col(f).mean();
    const double sd = std::sqrt((X.col(f).array() - mu).square().mean());
    Z.col(f) = (X.col(f).array() - mu) / (sd > 0 ? sd : 1.0);
  }
  std::map<int, int> count;
  for (int c : y) ++count[c];
  std::vector<double> w(d, 0.0);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (const auto& [c, nc] : count) {
      std::vector<std::pair<double, Eigen::Index>> nb;
      for (Eigen::Index j = 0; j < n; ++j)
        if (j != i && y[j] == c) nb.emplace_back((Z.row(i) - Z.row(j)).norm(), j);
      std::sort(nb.begin(), nb.end());
      const int kk = std::min<int>(k, static_cast<int>(nb.size()));
      for (int t = 0; t < kk; ++t) {
        for (Eigen::Index f = 0; f < d; ++f) {
          const double range = X.col(f).maxCoeff() - X.col(f).minCoeff();
          const double diff = range > 0 ? std::abs(X(i, f) - X(nb[t].second, f)) / range : 0.0;
          if (c == y[i]) {
            w[f] -= diff / (n * kk);
          } else {
            const double pc = static_cast<double>(nc) / n;
            const double pi = static_cast<double>(count[y[i]]) / n;
            w[f] += pc / (1.0 - pi) * diff / (n * kk);
          }
        }
      }
    }
  }
  return w;
}

}  // namespace

TEST_CASE("equal-frequency discretization") {
  SUBCASE("constant column") {
    std::vector<double> c(20, 4.2);
    auto d = discretize_equal_frequency(c, 10);
    CHECK(d.occupied == 1);
    for (int id : d.ids) CHECK(id == 0);
  }
  SUBCASE("1..100 into 10 bins of 10") {
    std::vector<double> c;
    for (int i = 1; i <= 100; ++i) c.push_back(i);
    auto d = discretize_equal_frequency(c, 10);
    CHECK(d.occupied == 10);
    std::vector<int> sizes(10, 0);
    for (int id : d.ids) ++sizes[id];
    for (int s : sizes) CHECK(s == 10);
    for (int i = 0; i < 100; ++i) CHECK(d.ids[i] == i / 10);
  }
  SUBCASE("few distinct values") {
    std::vector<double> c;
    for (int i = 0; i < 50; ++i) c.push_back(i % 5);
    auto d = discretize_equal_frequency(c, 10);
    CHECK(d.occupied <= 5);
    for (int id : d.ids) CHECK(id < 10);
  }
}

TEST_CASE("information gain") {
  std::vector<int> y = {0, 0, 0, 1, 1, 2, 2, 2, 2, 1};
  Eigen::MatrixXd X(10, 2);
  for (int i = 0; i < 10; ++i) {
    X(i, 0) = y[i] * 10.0;
    X(i, 1) = 5.0;
  }
  auto t = score_info_gain(X, y);
  CHECK(t.scores[0] == doctest::Approx(testing::entropy({3, 3, 4})));
  CHECK(t.scores[1] == 0.0);

  SUBCASE("2x2 table [[3,1],[1,3]]") {
    Eigen::MatrixXd F(8, 1);
    std::vector<int> yy;
    // bin 0: three of class 0 and one of class 1; bin 1: the reverse
    F << 0, 0, 0, 0, 1, 1, 1, 1;
    yy = {0, 0, 0, 1, 0, 1, 1, 1};
    const double expected = testing::info_gain_table({{3, 1}, {1, 3}});
    CHECK(expected == doctest::Approx(std::log(2.0) - (-(0.75 * std::log(0.75) + 0.25 * std::log(0.25)))));
    CHECK(score_info_gain(F, yy, 2).scores[0] == doctest::Approx(expected));
  }
}

TEST_CASE("chi-square") {
  SUBCASE("constant feature") {
    Eigen::MatrixXd X = Eigen::MatrixXd::Constant(6, 1, 2.0);
    CHECK(score_chi_square(X, std::vector<int>{0, 1, 0, 1, 0, 1}).scores[0] == 0.0);
  }
  SUBCASE("perfectly separating binary feature scores n") {
    for (int n : {4, 10, 30}) {
      Eigen::MatrixXd X(n, 1);
      std::vector<int> y;
      for (int i = 0; i < n; ++i) {
        const int c = i < n / 3 ? 0 : 1;
        X(i, 0) = c;
        y.push_back(c);
      }
      const double chi = score_chi_square(X, y, 2).scores[0];
      CHECK(chi == doctest::Approx(testing::chi_square_table({{n / 3.0, 0}, {0, n - n / 3.0}})));
      CHECK(chi == doctest::Approx(n));
    }
  }
  SUBCASE("table [[10,20],[20,10]]") {
    Eigen::MatrixXd X(60, 1);
    std::vector<int> y;
    int r = 0;
    for (int b = 0; b < 2; ++b)
      for (int c = 0; c < 2; ++c) {
        const int cnt = (b == c) ? 10 : 20;
        for (int i = 0; i < cnt; ++i, ++r) {
          X(r, 0) = b;
          y.push_back(c);
        }
      }
    const double expected = testing::chi_square_table({{10, 20}, {20, 10}});
    CHECK(expected == doctest::Approx(4.0 * 25.0 / 15.0));
    CHECK(score_chi_square(X, y, 2).scores[0] == doctest::Approx(expected));
  }
}

TEST_CASE("ReliefF") {
  SUBCASE("four points in 1-D against hand computation") {
    Eigen::MatrixXd X(4, 1);
    X << 0.0, 0.1, 1.0, 1.1;
    std::vector<int> y = {0, 0, 1, 1};
    auto t = score_relieff(X, y, {1, 0, 0});
    CHECK(t.scores[0] > 0.0);
    CHECK(t.scores[0] == doctest::Approx(3.4 / 4.4));
    CHECK(t.scores[0] == doctest::Approx(relieff_oracle(X, y, 1)[0]));
  }
  SUBCASE("constant and duplicated columns") {
    std::mt19937_64 rng(4);
    std::normal_distribution<double> nd;
    Eigen::MatrixXd X(40, 4);
    std::vector<int> y;
    for (int i = 0; i < 40; ++i) {
      const int c = i % 3;
      y.push_back(c);
      X(i, 0) = c + nd(rng);
      X(i, 1) = 7.0;
      X(i, 2) = X(i, 0);
      X(i, 3) = nd(rng);
    }
    auto t = score_relieff(X, y, {5, 0, 0});
    CHECK(t.scores[1] == 0.0);
    CHECK(t.scores[0] == doctest::Approx(t.scores[2]).epsilon(1e-12));
    const auto oracle = relieff_oracle(X, y, 5);
    for (int f = 0; f < 4; ++f) CHECK(t.scores[f] == doctest::Approx(oracle[f]).epsilon(1e-9));
  }
  SUBCASE("single class is rejected") {
    Eigen::MatrixXd X = Eigen::MatrixXd::Random(5, 2);
    CHECK_THROWS_AS(score_relieff(X, std::vector<int>(5, 3)), DataError);
  }
  SUBCASE("sampled probes are seed-deterministic") {
    Eigen::MatrixXd X = Eigen::MatrixXd::Random(30, 3);
    std::vector<int> y;
    for (int i = 0; i < 30; ++i) y.push_back(i % 2);
    auto a = score_relieff(X, y, {3, 10, 77});
    auto b = score_relieff(X, y, {3, 10, 77});
    CHECK(a.scores == b.scores);
  }
}

TEST_CASE("scores are invariant under row permutation and monotone transforms") {
  std::mt19937_64 rng(12);
  std::normal_distribution<double> nd;
  const int n = 60;
  Eigen::MatrixXd X(n, 3);
  std::vector<int> y;
  for (int i = 0; i < n; ++i) {
    const int c = i % 3;
    y.push_back(c);
    X(i, 0) = c + nd(rng);
    X(i, 1) = nd(rng);
    X(i, 2) = 0.5 * c + nd(rng);
  }
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  Eigen::MatrixXd Xp(n, 3);
  std::vector<int> yp(n);
  for (int i = 0; i < n; ++i) {
    Xp.row(i) = X.row(perm[i]);
    yp[i] = y[perm[i]];
  }
  auto approx_eq = [](const std::vector<double>& a, const std::vector<double>& b) {
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-10));
  };
  approx_eq(score_info_gain(X, y).scores, score_info_gain(Xp, yp).scores);
  approx_eq(score_chi_square(X, y).scores, score_chi_square(Xp, yp).scores);
  approx_eq(score_relieff(X, y, {5, 0, 0}).scores, score_relieff(Xp, yp, {5, 0, 0}).scores);

  Eigen::MatrixXd Xm = X;
  Xm.col(0) = X.col(0).array().exp();
  Xm.col(1) = 3.0 * X.col(1).array().pow(3) - 2.0;
  approx_eq(score_info_gain(X, y).scores, score_info_gain(Xm, y).scores);
  approx_eq(score_chi_square(X, y).scores, score_chi_square(Xm, y).scores);
}

TEST_CASE("top-N selection") {
  SelectionScoreTable t{Method::info_gain, {0.5, 0.9, 0.9, 0.1}, 10};
  CHECK(select_top_n(t, 2).indices == std::vector<Eigen::Index>{1, 2});
  CHECK(select_top_n(t, 10).indices == std::vector<Eigen::Index>{0, 1, 2, 3});
  CHECK_THROWS_AS(select_top_n(t, 0), ConfigError);

  std::mt19937_64 rng(1);
  std::uniform_int_distribution<int> coarse(0, 20);
  SelectionScoreTable big{Method::chi_square, {}, 10};
  for (int i = 0; i < 500; ++i) big.scores.push_back(coarse(rng));
  std::vector<Eigen::Index> prev;
  for (std::size_t n = 1; n <= 500; n += 7) {
    auto m = select_top_n(big, n);
    CHECK(m.indices.size() == n);
    CHECK(std::includes(m.indices.begin(), m.indices.end(), prev.begin(), prev.end()));
    prev = m.indices;
  }

  // a sweep N = 100..6000 step 100 over 6373 columns yields one nested mask per N
  SelectionScoreTable wide{Method::info_gain, std::vector<double>(6373), 10};
  for (std::size_t i = 0; i < wide.scores.size(); ++i) wide.scores[i] = static_cast<double>((i * 7919) % 1000);
  std::size_t masks = 0;
  prev.clear();
  for (std::size_t n = 100; n <= 6000; n += 100, ++masks) {
    auto m = select_top_n(wide, n);
    CHECK(m.indices.size() == n);
    CHECK(std::includes(m.indices.begin(), m.indices.end(), prev.begin(), prev.end()));
    prev = m.indices;
  }
  CHECK(masks == 60);
}

TEST_CASE("score and mask serialization") {
  SelectionScoreTable t{Method::info_gain, {0.5, 0.25}, 10};
  std::vector<std::string> names = {"a", "b"};
  CHECK(serialize_scores(t, names) == "feature,score\na,0.5\nb,0.25\n");
  CHECK(serialize_mask(select_top_n(t, 1)) == "[0]\n");
}
