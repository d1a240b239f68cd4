#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace accentid::select {

enum class Method { info_gain, chi_square, relieff };
std::string_view method_name(Method m);
Method parse_method(std::string_view name);  // throws ConfigError

struct Discretization {
  std::vector<double> edges;  // ascending, unique; bin = upper_bound(edges, v)
  std::vector<int> ids;       // dense bin ids of the fitted column
  int occupied = 0;

  /// Bin id for a new value under the fitted edges (may exceed the dense range
  /// only when fitted bins were empty).
  int bin_of(double v) const;
};

/// Quantile edges computed on the column; tied edges collapse, and occupied
/// bins are renumbered densely from 0.
Discretization discretize_equal_frequency(std::span<const double> column, int bins = 10);

struct SelectionScoreTable {
  Method method = Method::info_gain;
  std::vector<double> scores;
  int bins = 10;  // discretization used by IG and chi-square
};

struct ReliefOptions {
  int k = 10;
  std::size_t sample_size = 0;  // 0 = every instance is a probe
  std::uint64_t seed = 0;
};

SelectionScoreTable score_info_gain(const Eigen::MatrixXd& X, std::span<const int> y, int bins = 10,
                                    unsigned jobs = 1);
SelectionScoreTable score_chi_square(const Eigen::MatrixXd& X, std::span<const int> y, int bins = 10,
                                     unsigned jobs = 1);
SelectionScoreTable score_relieff(const Eigen::MatrixXd& X, std::span<const int> y,
                                  const ReliefOptions& opts = {});

struct SelectionMask {
  std::vector<Eigen::Index> indices;  // sorted ascending
  std::size_t n = 0;

  Eigen::MatrixXd apply(const Eigen::MatrixXd& X) const;
};

/// The n best-scoring columns, ties to the lower index.
SelectionMask select_top_n(const SelectionScoreTable& table, std::size_t n);

std::string serialize_scores(const SelectionScoreTable& table, std::span<const std::string> names);
std::string serialize_mask(const SelectionMask& mask);

}  // namespace accentid::select
