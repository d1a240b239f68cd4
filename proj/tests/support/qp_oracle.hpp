#pragma once

// Brute-force solution of the linear SVM dual for tiny problems: enumerate
// every assignment of each alpha to {0, C, free}, solve the equality
// constrained stationarity system on the free set, keep the best feasible.

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <vector>

namespace oracle {

struct DualSolution {
  Eigen::VectorXd alpha;
  double objective = -std::numeric_limits<double>::infinity();
};

inline double dual_value(const Eigen::MatrixXd& Q, const Eigen::VectorXd& a) {
  return a.sum() - 0.5 * a.dot(Q * a);
}

inline DualSolution brute_force_dual(const Eigen::MatrixXd& X, const std::vector<int>& y, double C) {
  const int n = static_cast<int>(X.rows());
  Eigen::VectorXd yv(n);
  for (int i = 0; i < n; ++i) yv(i) = y[static_cast<std::size_t>(i)];
  const Eigen::MatrixXd Q = (yv.asDiagonal() * (X * X.transpose())) * yv.asDiagonal();
  DualSolution best;
  long total = 1;
  for (int i = 0; i < n; ++i) total *= 3;
  for (long code = 0; code < total; ++code) {
    std::vector<int> state(static_cast<std::size_t>(n));
    long c = code;
    std::vector<int> free;
    Eigen::VectorXd a = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < n; ++i) {
      state[static_cast<std::size_t>(i)] = static_cast<int>(c % 3);
      c /= 3;
      if (state[static_cast<std::size_t>(i)] == 1) a(i) = C;
      if (state[static_cast<std::size_t>(i)] == 2) free.push_back(i);
    }
    const int f = static_cast<int>(free.size());
    if (f > 0) {
      Eigen::MatrixXd A = Eigen::MatrixXd::Zero(f + 1, f + 1);
      Eigen::VectorXd rhs(f + 1);
      const Eigen::VectorXd Qa = Q * a;
      for (int r = 0; r < f; ++r) {
        for (int s = 0; s < f; ++s) A(r, s) = Q(free[r], free[s]);
        A(r, f) = yv(free[r]);
        A(f, r) = yv(free[r]);
        rhs(r) = 1.0 - Qa(free[r]);
      }
      rhs(f) = -yv.dot(a);
      const Eigen::VectorXd sol = A.completeOrthogonalDecomposition().solve(rhs);
      if ((A * sol - rhs).norm() > 1e-9 * (1.0 + rhs.norm())) continue;
      for (int r = 0; r < f; ++r) a(free[r]) = sol(r);
    } else if (std::abs(yv.dot(a)) > 1e-12) {
      continue;
    }
    bool feasible = true;
    for (int i = 0; i < n; ++i)
      if (a(i) < -1e-12 || a(i) > C + 1e-12) feasible = false;
    if (!feasible) continue;
    const double v = dual_value(Q, a);
    if (v > best.objective) {
      best.objective = v;
      best.alpha = a;
    }
  }
  return best;
}

}  // namespace oracle
