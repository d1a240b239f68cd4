#include "accentid/learn.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <sstream>

#include "accentid/common.hpp"

namespace accentid::learn {

namespace {

// Kernel rows for a linear kernel. The Gram matrix is cached when it fits.
class LinearKernel {
 public:
  explicit LinearKernel(const Eigen::MatrixXd& X) : X_(X) {
    const Eigen::Index n = X.rows();
    if (n <= 4096) {
      gram_ = X * X.transpose();
      cached_ = true;
    } else {
      diag_ = X.rowwise().squaredNorm();
    }
  }
  double diag(Eigen::Index i) const { return cached_ ? gram_(i, i) : diag_(i); }
  double at(Eigen::Index i, Eigen::Index j) const {
    return cached_ ? gram_(i, j) : X_.row(i).dot(X_.row(j));
  }
  Eigen::VectorXd row(Eigen::Index i) const {
    if (cached_) return gram_.col(i);
    return X_ * X_.row(i).transpose();
  }

 private:
  const Eigen::MatrixXd& X_;
  Eigen::MatrixXd gram_;
  Eigen::VectorXd diag_;
  bool cached_ = false;
};

class Smo {
 public:
  Smo(const Eigen::MatrixXd& X, std::span<const int> y, const SmoOptions& o)
      : X_(X), y_(y), o_(o), K_(X), n_(X.rows()) {
    alpha_ = Eigen::VectorXd::Zero(n_);
    w_ = Eigen::VectorXd::Zero(X.cols());
    E_.resize(n_);
    for (Eigen::Index i = 0; i < n_; ++i) E_(i) = -y_[i];  // f = 0 initially
  }

  BinarySvm run() {
    std::size_t changed = 0;
    bool examine_all = true;
    while ((changed > 0 || examine_all) && steps_ < o_.max_iter) {
      changed = 0;
      if (examine_all) {
        for (Eigen::Index i = 0; i < n_ && steps_ < o_.max_iter; ++i) changed += examine(i);
      } else {
        for (Eigen::Index i = 0; i < n_ && steps_ < o_.max_iter; ++i)
          if (is_free(i)) changed += examine(i);
      }
      if (examine_all) examine_all = false;
      else if (changed == 0) examine_all = true;
    }
    return finish();
  }

 private:
  bool is_free(Eigen::Index i) const { return alpha_(i) > 0.0 && alpha_(i) < o_.C; }

  int examine(Eigen::Index i2) {
    const double y2 = y_[i2];
    const double a2 = alpha_(i2);
    const double r2 = E_(i2) * y2;
    if (!((r2 < -o_.tol && a2 < o_.C) || (r2 > o_.tol && a2 > 0.0))) return 0;

    Eigen::Index best = -1;
    double best_gap = -1.0;
    std::size_t num_free = 0;
    for (Eigen::Index i = 0; i < n_; ++i) {
      if (!is_free(i)) continue;
      ++num_free;
      const double gap = std::abs(E_(i) - E_(i2));
      if (gap > best_gap) {
        best_gap = gap;
        best = i;
      }
    }
    if (num_free > 1 && best >= 0 && take_step(best, i2)) return 1;
    for (Eigen::Index k = 0; k < n_; ++k) {
      const Eigen::Index i1 = (i2 + 1 + k) % n_;
      if (is_free(i1) && take_step(i1, i2)) return 1;
    }
    for (Eigen::Index k = 0; k < n_; ++k) {
      const Eigen::Index i1 = (i2 + 1 + k) % n_;
      if (take_step(i1, i2)) return 1;
    }
    return 0;
  }

  bool take_step(Eigen::Index i1, Eigen::Index i2) {
    if (i1 == i2) return false;
    const double a1 = alpha_(i1), a2 = alpha_(i2);
    const double y1 = y_[i1], y2 = y_[i2];
    const double E1 = E_(i1), E2 = E_(i2);
    const double s = y1 * y2;
    const double C = o_.C;
    double L, H;
    if (s < 0) {
      L = std::max(0.0, a2 - a1);
      H = std::min(C, C + a2 - a1);
    } else {
      L = std::max(0.0, a1 + a2 - C);
      H = std::min(C, a1 + a2);
    }
    if (L >= H) return false;
    const double k11 = K_.diag(i1), k22 = K_.diag(i2), k12 = K_.at(i1, i2);
    const double eta = k11 + k22 - 2.0 * k12;
    double a2n;
    if (eta > 0) {
      a2n = std::clamp(a2 + y2 * (E1 - E2) / eta, L, H);
    } else {
      // Dual objective restricted to the segment is linear; pick the better end.
      const double slope = y2 * (E1 - E2);  // d(dual)/d(alpha2) along the constraint
      const double lo_gain = slope * (L - a2), hi_gain = slope * (H - a2);
      if (lo_gain > hi_gain + o_.eps) a2n = L;
      else if (hi_gain > lo_gain + o_.eps) a2n = H;
      else return false;
    }
    const double snap = 1e-12 * C;
    if (a2n < snap) a2n = 0.0;
    else if (a2n > C - snap) a2n = C;
    if (std::abs(a2n - a2) < o_.eps * (a2n + a2 + o_.eps)) return false;
    double a1n = a1 + s * (a2 - a2n);
    if (a1n < snap) a1n = 0.0;
    else if (a1n > C - snap) a1n = C;

    const double d1 = y1 * (a1n - a1), d2 = y2 * (a2n - a2);
    const double b1 = E1 + d1 * k11 + d2 * k12 + b_;
    const double b2 = E2 + d1 * k12 + d2 * k22 + b_;
    double bn;
    if (a1n > 0 && a1n < C) bn = b1;
    else if (a2n > 0 && a2n < C) bn = b2;
    else bn = 0.5 * (b1 + b2);

    const Eigen::VectorXd r1 = K_.row(i1);
    const Eigen::VectorXd r2 = K_.row(i2);
    E_ += d1 * r1 + d2 * r2;
    E_.array() -= (bn - b_);
    w_ += d1 * X_.row(i1).transpose() + d2 * X_.row(i2).transpose();
    b_ = bn;
    alpha_(i1) = a1n;
    alpha_(i2) = a2n;
    ++steps_;
    if (o_.trace_objective) trace_.push_back(alpha_.sum() - 0.5 * w_.squaredNorm());
    return true;
  }

  BinarySvm finish() {
    BinarySvm out;
    out.C = o_.C;
    out.tol = o_.tol;
    out.iterations = steps_;
    out.alpha = alpha_;
    out.objective_trace = std::move(trace_);
    Eigen::VectorXd coef(n_);
    for (Eigen::Index i = 0; i < n_; ++i) coef(i) = alpha_(i) * y_[i];
    out.w = X_.transpose() * coef;
    // Bias from free vectors when available, else the middle of the feasible interval.
    const Eigen::VectorXd f = X_ * out.w;
    double sum = 0.0;
    std::size_t count = 0;
    double lo = -std::numeric_limits<double>::infinity(), hi = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < n_; ++i) {
      const double g = f(i) - y_[i];  // b value making y_i f(x_i) = 1
      if (is_free(i)) {
        sum += g;
        ++count;
      } else {
        // alpha = 0 needs y f >= 1, alpha = C needs y f <= 1
        const bool upper = (alpha_(i) <= 0.0) == (y_[i] > 0);
        if (upper) hi = std::min(hi, g);
        else lo = std::max(lo, g);
      }
    }
    if (count > 0) out.b = sum / static_cast<double>(count);
    else if (std::isfinite(lo) && std::isfinite(hi)) out.b = 0.5 * (lo + hi);
    else if (std::isfinite(lo)) out.b = lo;
    else if (std::isfinite(hi)) out.b = hi;
    else out.b = b_;
    return out;
  }

  const Eigen::MatrixXd& X_;
  std::span<const int> y_;
  SmoOptions o_;
  LinearKernel K_;
  Eigen::Index n_;
  Eigen::VectorXd alpha_, w_, E_;
  double b_ = 0.0;
  std::size_t steps_ = 0;
  std::vector<double> trace_;
};

void check_finite(const Eigen::MatrixXd& X, const char* what) {
  if (!X.allFinite()) throw NumericalError(std::string(what) + ": non-finite input values");
}

}  // namespace

BinarySvm train_smo_binary(const Eigen::MatrixXd& X, std::span<const int> y, const SmoOptions& opts) {
  if (static_cast<std::size_t>(X.rows()) != y.size())
    throw DataError("svm: " + std::to_string(X.rows()) + " rows but " + std::to_string(y.size()) + " labels");
  if (opts.C <= 0 || opts.tol <= 0) throw ConfigError("svm: C and tol must be positive");
  bool pos = false, neg = false;
  for (int v : y) {
    if (v == 1) pos = true;
    else if (v == -1) neg = true;
    else throw DataError("svm: binary labels must be -1 or +1");
  }
  if (!pos || !neg) throw DataError("svm: training data contains a single class");
  check_finite(X, "svm");
  return Smo(X, y, opts).run();
}

double svm_dual_objective(const Eigen::MatrixXd& X, std::span<const int> y, const Eigen::VectorXd& alpha) {
  Eigen::VectorXd coef(alpha.size());
  for (Eigen::Index i = 0; i < alpha.size(); ++i) coef(i) = alpha(i) * y[i];
  const Eigen::VectorXd w = X.transpose() * coef;
  return alpha.sum() - 0.5 * w.squaredNorm();
}

double svm_kkt_violation(const Eigen::MatrixXd& X, std::span<const int> y, const BinarySvm& svm) {
  double worst = 0.0;
  const double C = svm.C;
  const double bound_eps = 1e-12 * std::max(1.0, C);
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    const double m = y[i] * svm.decision(X.row(i).transpose());
    const double a = svm.alpha(i);
    double v = 0.0;
    if (a <= bound_eps) v = std::max(0.0, 1.0 - m);
    else if (a >= C - bound_eps) v = std::max(0.0, m - 1.0);
    else v = std::abs(m - 1.0);
    worst = std::max(worst, v);
  }
  return worst;
}

std::vector<int> MulticlassSvm::votes(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  std::vector<int> v(static_cast<std::size_t>(num_classes), 0);
  for (const auto& p : pairs) ++v[static_cast<std::size_t>(p.svm.decision(x) > 0 ? p.positive : p.negative)];
  return v;
}

int MulticlassSvm::predict(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  const auto v = votes(x);
  return static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin());
}

MulticlassSvm train_multiclass_svm(const Eigen::MatrixXd& X, std::span<const int> y, int num_classes,
                                   const SmoOptions& opts, unsigned jobs,
                                   std::span<const std::string> class_names) {
  if (num_classes < 2) throw ConfigError("svm: need at least 2 classes");
  if (static_cast<std::size_t>(X.rows()) != y.size())
    throw DataError("svm: " + std::to_string(X.rows()) + " rows but " + std::to_string(y.size()) + " labels");
  std::vector<std::vector<Eigen::Index>> members(static_cast<std::size_t>(num_classes));
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y[i] < 0 || y[i] >= num_classes) throw DataError("svm: label out of range");
    members[static_cast<std::size_t>(y[i])].push_back(static_cast<Eigen::Index>(i));
  }
  std::string missing;
  for (int c = 0; c < num_classes; ++c) {
    if (members[static_cast<std::size_t>(c)].size() < 2) {
      if (!missing.empty()) missing += ", ";
      missing += static_cast<std::size_t>(c) < class_names.size() ? class_names[static_cast<std::size_t>(c)]
                                                                   : "class " + std::to_string(c);
    }
  }
  if (!missing.empty()) throw DataError("svm: fewer than 2 training instances for " + missing);
  check_finite(X, "svm");

  MulticlassSvm out;
  out.num_classes = num_classes;
  for (int a = 0; a < num_classes; ++a)
    for (int b = a + 1; b < num_classes; ++b) out.pairs.push_back({a, b, {}});
  parallel_for(out.pairs.size(), jobs, [&](std::size_t k) {
    auto& p = out.pairs[k];
    const auto& ma = members[static_cast<std::size_t>(p.positive)];
    const auto& mb = members[static_cast<std::size_t>(p.negative)];
    std::vector<Eigen::Index> rows;
    rows.reserve(ma.size() + mb.size());
    std::merge(ma.begin(), ma.end(), mb.begin(), mb.end(), std::back_inserter(rows));
    Eigen::MatrixXd sub(static_cast<Eigen::Index>(rows.size()), X.cols());
    std::vector<int> yy(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
      sub.row(static_cast<Eigen::Index>(r)) = X.row(rows[r]);
      yy[r] = y[static_cast<std::size_t>(rows[r])] == p.positive ? 1 : -1;
    }
    p.svm = train_smo_binary(sub, yy, opts);
    p.svm.alpha.resize(0);  // not needed after training
  });
  return out;
}

// ---------------------------------------------------------------------------

namespace {

Eigen::MatrixXd softmax_rows(Eigen::MatrixXd Z) {
  for (Eigen::Index i = 0; i < Z.rows(); ++i) {
    const double m = Z.row(i).maxCoeff();
    Z.row(i) = (Z.row(i).array() - m).exp().matrix();
    Z.row(i) /= Z.row(i).sum();
  }
  return Z;
}

template <class Mat>
MlrObjective objective_impl(const Mat& X, std::span<const int> y, const Eigen::MatrixXd& W,
                            const Eigen::VectorXd& bias, double l2) {
  const Eigen::Index n = X.rows();
  const Eigen::Index K = W.rows();
  Eigen::MatrixXd Z = X * W.transpose();
  Z.rowwise() += bias.transpose();
  MlrObjective out;
  double nll = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double m = Z.row(i).maxCoeff();
    const double lse = m + std::log((Z.row(i).array() - m).exp().sum());
    nll += lse - Z(i, y[static_cast<std::size_t>(i)]);
    Z.row(i) = (Z.row(i).array() - lse).exp().matrix();
    Z(i, y[static_cast<std::size_t>(i)]) -= 1.0;
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  out.loss = nll * inv_n + 0.5 * l2 * W.squaredNorm();
  out.grad_W = (Z.transpose() * X) * inv_n + l2 * W;
  out.grad_bias = Z.colwise().sum().transpose() * inv_n;
  (void)K;
  return out;
}

template <class Mat>
void check_mlr_inputs(const Mat& X, std::span<const int> y, int K) {
  if (K < 2) throw ConfigError("mlr: need at least 2 classes");
  if (static_cast<std::size_t>(X.rows()) != y.size())
    throw DataError("mlr: " + std::to_string(X.rows()) + " rows but " + std::to_string(y.size()) + " labels");
  if (X.rows() == 0) throw DataError("mlr: empty training set");
  for (int v : y)
    if (v < 0 || v >= K) throw DataError("mlr: label out of range");
}

template <class Mat>
MlrModel train_mlr_impl(const Mat& X, std::span<const int> y, int K, const MlrOptions& o) {
  check_mlr_inputs(X, y, K);
  if (o.l2 < 0) throw ConfigError("mlr: l2 must be non-negative");
  const Eigen::Index d = X.cols();
  const Eigen::Index P = K * d + K;
  auto unpack = [&](const Eigen::VectorXd& theta, Eigen::MatrixXd& W, Eigen::VectorXd& b) {
    W = Eigen::Map<const Eigen::MatrixXd>(theta.data(), K, d);
    b = theta.tail(K);
  };
  auto eval = [&](const Eigen::VectorXd& theta, Eigen::VectorXd& grad) {
    Eigen::MatrixXd W;
    Eigen::VectorXd b;
    unpack(theta, W, b);
    auto obj = objective_impl(X, y, W, b, o.l2);
    grad.resize(P);
    grad.head(K * d) = Eigen::Map<const Eigen::VectorXd>(obj.grad_W.data(), K * d);
    grad.tail(K) = obj.grad_bias;
    if (!std::isfinite(obj.loss)) throw NumericalError("mlr: non-finite loss");
    return obj.loss;
  };

  Eigen::VectorXd theta = Eigen::VectorXd::Zero(P), g;
  double f = eval(theta, g);
  std::deque<Eigen::VectorXd> S, Y;
  std::deque<double> rho;
  MlrModel out;
  out.l2 = o.l2;
  std::size_t it = 0;
  for (; it < o.max_iter; ++it) {
    if (g.lpNorm<Eigen::Infinity>() < o.tol) break;
    // two-loop recursion
    Eigen::VectorXd q = g;
    std::vector<double> al(S.size());
    for (std::size_t k = S.size(); k-- > 0;) {
      al[k] = rho[k] * S[k].dot(q);
      q -= al[k] * Y[k];
    }
    double gamma = 1.0;
    if (!S.empty()) gamma = S.back().dot(Y.back()) / Y.back().squaredNorm();
    else gamma = 1.0 / std::max(1.0, g.norm());
    Eigen::VectorXd dir = gamma * q;
    for (std::size_t k = 0; k < S.size(); ++k) {
      const double beta = rho[k] * Y[k].dot(dir);
      dir += S[k] * (al[k] - beta);
    }
    dir = -dir;
    double slope = g.dot(dir);
    if (slope >= 0) {  // not a descent direction; restart from steepest descent
      S.clear(), Y.clear(), rho.clear();
      dir = -g / std::max(1.0, g.norm());
      slope = g.dot(dir);
    }
    double step = 1.0;
    Eigen::VectorXd theta_new, g_new;
    double f_new = f;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      theta_new = theta + step * dir;
      f_new = eval(theta_new, g_new);
      if (f_new <= f + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted || f_new > f) break;
    Eigen::VectorXd s = theta_new - theta, yv = g_new - g;
    const double sy = s.dot(yv);
    if (sy > 1e-12 * s.norm() * yv.norm()) {
      S.push_back(std::move(s));
      Y.push_back(std::move(yv));
      rho.push_back(1.0 / sy);
      if (static_cast<int>(S.size()) > o.history) {
        S.pop_front(), Y.pop_front(), rho.pop_front();
      }
    }
    const double rel = (f - f_new) / std::max({std::abs(f), std::abs(f_new), 1.0});
    theta = std::move(theta_new);
    g = std::move(g_new);
    f = f_new;
    if (o.trace_loss) out.loss_trace.push_back(f);
    if (rel < 1e-15) {
      ++it;
      break;
    }
  }
  unpack(theta, out.W, out.bias);
  out.iterations = it;
  out.final_gradient_norm = g.lpNorm<Eigen::Infinity>();
  return out;
}

}  // namespace

MlrObjective mlr_objective(const Eigen::MatrixXd& X, std::span<const int> y, const Eigen::MatrixXd& W,
                           const Eigen::VectorXd& bias, double l2) {
  check_mlr_inputs(X, y, static_cast<int>(W.rows()));
  return objective_impl(X, y, W, bias, l2);
}
MlrObjective mlr_objective(const SparseMatrix& X, std::span<const int> y, const Eigen::MatrixXd& W,
                           const Eigen::VectorXd& bias, double l2) {
  check_mlr_inputs(X, y, static_cast<int>(W.rows()));
  return objective_impl(X, y, W, bias, l2);
}

MlrModel train_mlr(const Eigen::MatrixXd& X, std::span<const int> y, int num_classes, const MlrOptions& opts) {
  check_finite(X, "mlr");
  return train_mlr_impl(X, y, num_classes, opts);
}
MlrModel train_mlr(const SparseMatrix& X, std::span<const int> y, int num_classes, const MlrOptions& opts) {
  return train_mlr_impl(X, y, num_classes, opts);
}

Eigen::MatrixXd MlrModel::probabilities(const Eigen::MatrixXd& X) const {
  Eigen::MatrixXd Z = X * W.transpose();
  Z.rowwise() += bias.transpose();
  return softmax_rows(std::move(Z));
}
Eigen::MatrixXd MlrModel::probabilities(const SparseMatrix& X) const {
  Eigen::MatrixXd Z = X * W.transpose();
  Z.rowwise() += bias.transpose();
  return softmax_rows(std::move(Z));
}

}  // namespace accentid::learn
