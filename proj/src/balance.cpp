#include "accentid/balance.hpp"

#include <algorithm>
#include <map>
#include <random>

#include "accentid/common.hpp"
#include "accentid/standardizer.hpp"

namespace accentid::balance {

SmoteResult smote_resample(const Eigen::MatrixXd& X, std::span<const int> y, const SmoteConfig& cfg) {
  if (static_cast<Eigen::Index>(y.size()) != X.rows())
    throw DataError("SMOTE: label count does not match row count");
  if (cfg.k_neighbors < 1) throw ConfigError("SMOTE: k_neighbors must be >= 1");

  std::map<int, std::vector<Eigen::Index>> members;
  for (Eigen::Index i = 0; i < X.rows(); ++i) members[y[i]].push_back(i);
  std::size_t majority = 0;
  for (const auto& [c, rows] : members) majority = std::max(majority, rows.size());

  SmoteResult out;
  out.num_original = X.rows();
  std::size_t needed_total = 0;
  for (const auto& [c, rows] : members) {
    if (rows.size() == majority) continue;
    if (rows.size() < 2)
      throw DataError("SMOTE requires >=2 per class (class " + std::to_string(c) + " has " +
                      std::to_string(rows.size()) + ")");
    needed_total += majority - rows.size();
  }

  out.X.resize(X.rows() + static_cast<Eigen::Index>(needed_total), X.cols());
  out.X.topRows(X.rows()) = X;
  out.y.assign(y.begin(), y.end());
  if (needed_total == 0) return out;

  const Eigen::MatrixXd Z = learn::Standardizer::fit(X).transform(X);
  Eigen::Index next = X.rows();
  for (const auto& [c, rows] : members) {
    if (rows.size() == majority) continue;
    const auto n = static_cast<int>(rows.size());
    int k = cfg.k_neighbors;
    if (k > n - 1) {
      out.warnings.push_back("SMOTE: k clamped from " + std::to_string(k) + " to " +
                             std::to_string(n - 1) + " for class " + std::to_string(c));
      k = n - 1;
    }

    // k nearest same-class neighbours of each member, ties by row index.
    std::vector<std::vector<Eigen::Index>> knn(n);
    std::vector<std::pair<double, Eigen::Index>> dist;
    for (int a = 0; a < n; ++a) {
      dist.clear();
      for (int b = 0; b < n; ++b)
        if (a != b) dist.emplace_back((Z.row(rows[a]) - Z.row(rows[b])).squaredNorm(), rows[b]);
      std::partial_sort(dist.begin(), dist.begin() + k, dist.end());
      for (int j = 0; j < k; ++j) knn[a].push_back(dist[j].second);
    }

    std::mt19937_64 rng(derive_seed(cfg.seed, "smote/class/" + std::to_string(c)));
    const std::size_t needed = majority - rows.size();
    for (std::size_t s = 0; s < needed; ++s) {
      const int a = static_cast<int>(s % rows.size());
      const Eigen::Index base = rows[a];
      const Eigen::Index nb = knn[a][uniform_index(rng, static_cast<std::uint64_t>(k))];
      const double u = unit_uniform(rng());
      // Interpolating in the original space equals mapping the standardized
      // interpolation back, since standardization is affine per feature.
      out.X.row(next) = X.row(base) + u * (X.row(nb) - X.row(base));
      out.y.push_back(c);
      out.origins.push_back({base, nb, u});
      ++next;
    }
  }
  return out;
}

}  // namespace accentid::balance
