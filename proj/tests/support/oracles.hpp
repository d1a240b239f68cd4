#pragma once

// Independent reference computations used only by tests.

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <map>
#include <vector>

namespace accentid::testing {

/// Euclidean distance from p to the segment [a, b].
inline double segment_distance(const Eigen::VectorXd& p, const Eigen::VectorXd& a,
                               const Eigen::VectorXd& b) {
  const Eigen::VectorXd d = b - a;
  const double len2 = d.squaredNorm();
  double t = len2 > 0.0 ? (p - a).dot(d) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return (p - (a + t * d)).norm();
}

/// Smallest distance from p to any segment between two rows of X with label c.
inline double nearest_same_class_segment(const Eigen::VectorXd& p, const Eigen::MatrixXd& X,
                                         const std::vector<int>& y, int c) {
  double best = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    if (y[i] != c) continue;
    for (Eigen::Index j = i; j < X.rows(); ++j) {
      if (y[j] != c) continue;
      best = std::min(best, segment_distance(p, X.row(i).transpose(), X.row(j).transpose()));
    }
  }
  return best;
}

/// Entropy (natural log) of a count vector.
inline double entropy(const std::vector<double>& counts) {
  double total = 0.0;
  for (double c : counts) total += c;
  double h = 0.0;
  for (double c : counts)
    if (c > 0.0) h -= c / total * std::log(c / total);
  return h;
}

/// Information gain of a (bin x class) contingency table.
inline double info_gain_table(const std::vector<std::vector<double>>& table) {
  const std::size_t classes = table[0].size();
  std::vector<double> col(classes, 0.0);
  double total = 0.0;
  for (const auto& row : table)
    for (std::size_t c = 0; c < classes; ++c) {
      col[c] += row[c];
      total += row[c];
    }
  double cond = 0.0;
  for (const auto& row : table) {
    double n = 0.0;
    for (double v : row) n += v;
    if (n > 0.0) cond += n / total * entropy(row);
  }
  return entropy(col) - cond;
}

/// Pearson chi-square of a contingency table, skipping zero-expected cells.
inline double chi_square_table(const std::vector<std::vector<double>>& table) {
  const std::size_t classes = table[0].size();
  std::vector<double> col(classes, 0.0);
  std::vector<double> rows;
  double total = 0.0;
  for (const auto& row : table) {
    double r = 0.0;
    for (std::size_t c = 0; c < classes; ++c) {
      col[c] += row[c];
      r += row[c];
    }
    rows.push_back(r);
    total += r;
  }
  double chi = 0.0;
  for (std::size_t b = 0; b < table.size(); ++b)
    for (std::size_t c = 0; c < classes; ++c) {
      const double e = rows[b] * col[c] / total;
      if (e > 0.0) chi += (table[b][c] - e) * (table[b][c] - e) / e;
    }
  return chi;
}

}  // namespace accentid::testing
