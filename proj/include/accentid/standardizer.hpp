#pragma once

#include <Eigen/Dense>

namespace accentid::learn {

/// Per-feature z-scoring fitted on training rows. Zero-variance features are
/// only centered.
class Standardizer {
 public:
  Standardizer() = default;
  Standardizer(Eigen::VectorXd mean, Eigen::VectorXd scale)
      : mean_(std::move(mean)), scale_(std::move(scale)) {}

  static Standardizer fit(const Eigen::MatrixXd& X);
  /// Identity transform of the given width (used for sparse inputs).
  static Standardizer identity(Eigen::Index dim);

  Eigen::MatrixXd transform(const Eigen::MatrixXd& X) const;
  Eigen::VectorXd transform_row(const Eigen::VectorXd& x) const;
  Eigen::MatrixXd inverse_transform(const Eigen::MatrixXd& Z) const;

  Eigen::Index dim() const { return mean_.size(); }
  const Eigen::VectorXd& mean() const { return mean_; }
  /// Divisor per feature; 1 where the training stddev was zero.
  const Eigen::VectorXd& scale() const { return scale_; }

 private:
  Eigen::VectorXd mean_;
  Eigen::VectorXd scale_;
};

}  // namespace accentid::learn
