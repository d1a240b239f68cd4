#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace accentid::balance {

struct SmoteConfig {
  int k_neighbors = 5;
  std::uint64_t seed = 0;
};

struct SmoteResult {
  Eigen::MatrixXd X;  // originals first, then synthetics grouped by class
  std::vector<int> y;
  Eigen::Index num_original = 0;

  /// Which originals (row indices into the input) each synthetic row lies between.
  struct Origin {
    Eigen::Index base;
    Eigen::Index neighbor;
    double u;
  };
  std::vector<Origin> origins;
  std::vector<std::string> warnings;
};

/// SMOTE oversampling: every class is raised to the majority count with
/// points x + u (x_nn - x), x_nn among the k same-class nearest neighbours in
/// standardized space, u ~ U[0, 1). Deterministic given the seed.
SmoteResult smote_resample(const Eigen::MatrixXd& X, std::span<const int> y, const SmoteConfig& cfg);

}  // namespace accentid::balance
