#include "accentid/standardizer.hpp"

#include "accentid/common.hpp"

namespace accentid::learn {

Standardizer Standardizer::fit(const Eigen::MatrixXd& X) {
  if (X.rows() == 0) throw DataError("cannot fit a standardizer on zero rows");
  Eigen::VectorXd mean = X.colwise().mean().transpose();
  Eigen::VectorXd scale(X.cols());
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    const double var = (X.col(j).array() - mean(j)).square().mean();
    const double sd = std::sqrt(var);
    // Treat round-off-level spread as constant.
    scale(j) = sd > 1e-12 * std::max(1.0, std::abs(mean(j))) ? sd : 1.0;
  }
  return Standardizer(std::move(mean), std::move(scale));
}

Standardizer Standardizer::identity(Eigen::Index dim) {
  return Standardizer(Eigen::VectorXd::Zero(dim), Eigen::VectorXd::Ones(dim));
}

Eigen::MatrixXd Standardizer::transform(const Eigen::MatrixXd& X) const {
  if (X.cols() != dim())
    throw DataError("standardizer expects " + std::to_string(dim()) + " features, got " +
                    std::to_string(X.cols()));
  return (X.rowwise() - mean_.transpose()).array().rowwise() / scale_.transpose().array();
}

Eigen::VectorXd Standardizer::transform_row(const Eigen::VectorXd& x) const {
  return (x - mean_).cwiseQuotient(scale_);
}

Eigen::MatrixXd Standardizer::inverse_transform(const Eigen::MatrixXd& Z) const {
  return (Z.array().rowwise() * scale_.transpose().array()).rowwise() + mean_.transpose().array();
}

}  // namespace accentid::learn
