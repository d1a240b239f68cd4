#include "accentid/select.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>

#include <json.hpp>

#include "accentid/common.hpp"
#include "accentid/standardizer.hpp"

namespace accentid::select {

namespace {

// Maps arbitrary labels onto 0..K-1 in ascending label order.
std::vector<int> dense_labels(std::span<const int> y, int& num_classes) {
  std::map<int, int> remap;
  for (int v : y) remap.emplace(v, 0);
  int next = 0;
  for (auto& [label, idx] : remap) idx = next++;
  num_classes = next;
  std::vector<int> out;
  out.reserve(y.size());
  for (int v : y) out.push_back(remap[v]);
  return out;
}

double entropy(const std::vector<double>& counts, double total) {
  double h = 0.0;
  for (double c : counts)
    if (c > 0.0) h -= c / total * std::log(c / total);
  return h;
}

template <class Score>
SelectionScoreTable score_by_table(Method method, const Eigen::MatrixXd& X, std::span<const int> y,
                                   int bins, unsigned jobs, Score score) {
  if (static_cast<Eigen::Index>(y.size()) != X.rows()) throw DataError("label count does not match row count");
  if (bins < 2) throw ConfigError("discretization needs at least 2 bins");
  int k = 0;
  const auto labels = dense_labels(y, k);
  if (k < 2) throw DataError("feature scoring needs at least two classes");
  SelectionScoreTable table{method, std::vector<double>(static_cast<std::size_t>(X.cols()), 0.0), bins};
  parallel_for(static_cast<std::size_t>(X.cols()), jobs, [&](std::size_t j) {
    std::vector<double> col(static_cast<std::size_t>(X.rows()));
    for (Eigen::Index i = 0; i < X.rows(); ++i) col[i] = X(i, static_cast<Eigen::Index>(j));
    const auto disc = discretize_equal_frequency(col, bins);
    std::vector<std::vector<double>> counts(disc.occupied, std::vector<double>(k, 0.0));
    for (std::size_t i = 0; i < labels.size(); ++i) counts[disc.ids[i]][labels[i]] += 1.0;
    table.scores[j] = score(counts, static_cast<double>(labels.size()), k);
  });
  return table;
}

}  // namespace

std::string_view method_name(Method m) {
  switch (m) {
    case Method::info_gain: return "info_gain";
    case Method::chi_square: return "chi_square";
    case Method::relieff: return "relieff";
  }
  return "info_gain";
}

Method parse_method(std::string_view name) {
  for (auto m : {Method::info_gain, Method::chi_square, Method::relieff})
    if (method_name(m) == name) return m;
  throw ConfigError("unknown selection method '" + std::string(name) + "'");
}

int Discretization::bin_of(double v) const {
  return static_cast<int>(std::upper_bound(edges.begin(), edges.end(), v) - edges.begin());
}

Discretization discretize_equal_frequency(std::span<const double> column, int bins) {
  if (bins < 2) throw ConfigError("discretization needs at least 2 bins");
  Discretization d;
  if (column.empty()) return d;
  std::vector<double> sorted(column.begin(), column.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  for (int b = 1; b < bins; ++b) {
    const double edge = sorted[std::min(n - 1, b * n / bins)];
    if (d.edges.empty() || edge > d.edges.back()) d.edges.push_back(edge);
  }
  std::vector<int> raw(n);
  std::vector<int> remap(d.edges.size() + 1, -1);
  for (std::size_t i = 0; i < n; ++i) {
    raw[i] = d.bin_of(column[i]);
    remap[raw[i]] = 0;
  }
  for (auto& r : remap)
    if (r == 0) r = d.occupied++;
  d.ids.resize(n);
  for (std::size_t i = 0; i < n; ++i) d.ids[i] = remap[raw[i]];
  return d;
}

SelectionScoreTable score_info_gain(const Eigen::MatrixXd& X, std::span<const int> y, int bins,
                                    unsigned jobs) {
  return score_by_table(Method::info_gain, X, y, bins, jobs,
                        [](const std::vector<std::vector<double>>& counts, double total, int k) {
                          std::vector<double> cls(k, 0.0);
                          double cond = 0.0;
                          for (const auto& row : counts) {
                            double n = 0.0;
                            for (int c = 0; c < k; ++c) {
                              cls[c] += row[c];
                              n += row[c];
                            }
                            cond += n / total * entropy(row, n);
                          }
                          return std::max(0.0, entropy(cls, total) - cond);
                        });
}

SelectionScoreTable score_chi_square(const Eigen::MatrixXd& X, std::span<const int> y, int bins,
                                     unsigned jobs) {
  return score_by_table(Method::chi_square, X, y, bins, jobs,
                        [](const std::vector<std::vector<double>>& counts, double total, int k) {
                          std::vector<double> cls(k, 0.0);
                          std::vector<double> rows;
                          for (const auto& row : counts) {
                            double n = 0.0;
                            for (int c = 0; c < k; ++c) {
                              cls[c] += row[c];
                              n += row[c];
                            }
                            rows.push_back(n);
                          }
                          double chi = 0.0;
                          for (std::size_t b = 0; b < counts.size(); ++b)
                            for (int c = 0; c < k; ++c) {
                              const double expected = rows[b] * cls[c] / total;
                              if (expected > 0.0) {
                                const double d = counts[b][c] - expected;
                                chi += d * d / expected;
                              }
                            }
                          return chi;
                        });
}

SelectionScoreTable score_relieff(const Eigen::MatrixXd& X, std::span<const int> y,
                                  const ReliefOptions& opts) {
  const Eigen::Index n = X.rows();
  const Eigen::Index d = X.cols();
  if (static_cast<Eigen::Index>(y.size()) != n) throw DataError("label count does not match row count");
  if (opts.k < 1) throw ConfigError("ReliefF k must be >= 1");
  int num_classes = 0;
  const auto labels = dense_labels(y, num_classes);
  if (num_classes < 2) throw DataError("ReliefF needs at least two classes");

  std::vector<std::vector<Eigen::Index>> members(num_classes);
  for (Eigen::Index i = 0; i < n; ++i) members[labels[i]].push_back(i);
  std::vector<double> prior(num_classes);
  for (int c = 0; c < num_classes; ++c) prior[c] = static_cast<double>(members[c].size()) / n;

  const Eigen::VectorXd span = (X.colwise().maxCoeff() - X.colwise().minCoeff()).transpose();
  Eigen::VectorXd inv_span(d);
  for (Eigen::Index f = 0; f < d; ++f) inv_span(f) = span(f) > 0.0 ? 1.0 / span(f) : 0.0;

  std::vector<Eigen::Index> probes(static_cast<std::size_t>(n));
  std::iota(probes.begin(), probes.end(), 0);
  if (opts.sample_size > 0 && opts.sample_size < probes.size()) {
    std::mt19937_64 rng(derive_seed(opts.seed, "relieff/probes"));
    for (std::size_t i = probes.size() - 1; i > 0; --i)
      std::swap(probes[i], probes[uniform_index(rng, i + 1)]);
    probes.resize(opts.sample_size);
    std::sort(probes.begin(), probes.end());
  }
  const double m = static_cast<double>(probes.size());

  const Eigen::MatrixXd Z = learn::Standardizer::fit(X).transform(X);
  const Eigen::VectorXd sq = Z.rowwise().squaredNorm();

  Eigen::VectorXd weights = Eigen::VectorXd::Zero(d);
  constexpr Eigen::Index kBlock = 256;
  std::vector<std::pair<double, Eigen::Index>> cand;
  for (std::size_t start = 0; start < probes.size(); start += kBlock) {
    const std::size_t stop = std::min(probes.size(), start + kBlock);
    Eigen::MatrixXd Zb(static_cast<Eigen::Index>(stop - start), d);
    for (std::size_t p = start; p < stop; ++p) Zb.row(p - start) = Z.row(probes[p]);
    const Eigen::MatrixXd gram = Zb * Z.transpose();

    for (std::size_t p = start; p < stop; ++p) {
      const Eigen::Index i = probes[p];
      const int ci = labels[i];
      const auto dist = [&](Eigen::Index j) {
        return sq(i) + sq(j) - 2.0 * gram(static_cast<Eigen::Index>(p - start), j);
      };
      for (int c = 0; c < num_classes; ++c) {
        cand.clear();
        for (Eigen::Index j : members[c])
          if (j != i) cand.emplace_back(dist(j), j);
        const int k = std::min<int>(opts.k, static_cast<int>(cand.size()));
        if (k == 0) continue;
        std::partial_sort(cand.begin(), cand.begin() + k, cand.end());
        const double scale = c == ci ? -1.0 / (m * k) : prior[c] / (1.0 - prior[ci]) / (m * k);
        for (int t = 0; t < k; ++t)
          weights += scale * (X.row(i) - X.row(cand[t].second)).cwiseAbs().transpose().cwiseProduct(inv_span);
      }
    }
  }
  SelectionScoreTable table{Method::relieff, std::vector<double>(weights.data(), weights.data() + d), 0};
  return table;
}

SelectionMask select_top_n(const SelectionScoreTable& table, std::size_t n) {
  if (n < 1) throw ConfigError("top-N selection needs n >= 1");
  std::vector<Eigen::Index> order(table.scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return table.scores[a] > table.scores[b]; });
  order.resize(std::min(n, order.size()));
  std::sort(order.begin(), order.end());
  return {std::move(order), n};
}

Eigen::MatrixXd SelectionMask::apply(const Eigen::MatrixXd& X) const {
  Eigen::MatrixXd out(X.rows(), static_cast<Eigen::Index>(indices.size()));
  for (std::size_t k = 0; k < indices.size(); ++k) {
    if (indices[k] >= X.cols()) throw DataError("selection mask index out of range");
    out.col(static_cast<Eigen::Index>(k)) = X.col(indices[k]);
  }
  return out;
}

std::string serialize_scores(const SelectionScoreTable& table, std::span<const std::string> names) {
  std::string out = "feature,score\n";
  for (std::size_t j = 0; j < table.scores.size(); ++j)
    out += (j < names.size() ? names[j] : std::to_string(j)) + ',' + format_double(table.scores[j]) + '\n';
  return out;
}

std::string serialize_mask(const SelectionMask& mask) {
  return nlohmann::json(mask.indices).dump() + "\n";
}

}  // namespace accentid::select
