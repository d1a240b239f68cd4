#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "accentid/select.hpp"
#include "accentid/standardizer.hpp"

namespace accentid::learn {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

// ---------------------------------------------------------------------------
// Linear SVM trained with sequential minimal optimization

struct SmoOptions {
  double C = 1.0;
  double tol = 1e-3;
  double eps = 1e-12;          // smallest accepted alpha change
  std::size_t max_iter = 1000000;
  bool trace_objective = false;
};

struct BinarySvm {
  Eigen::VectorXd w;
  double b = 0.0;  // decision f(x) = w.x - b
  double C = 1.0;
  double tol = 1e-3;
  Eigen::VectorXd alpha;
  std::size_t iterations = 0;
  std::vector<double> objective_trace;  // dual objective after each step, when traced

  double decision(const Eigen::Ref<const Eigen::VectorXd>& x) const { return w.dot(x) - b; }
};

/// y in {-1, +1}. Throws DataError when only one class is present.
BinarySvm train_smo_binary(const Eigen::MatrixXd& X, std::span<const int> y, const SmoOptions& opts = {});

/// Dual objective sum(alpha) - 1/2 |sum alpha_i y_i x_i|^2.
double svm_dual_objective(const Eigen::MatrixXd& X, std::span<const int> y, const Eigen::VectorXd& alpha);

/// Largest KKT violation of (alpha, w, b) measured on y_i f(x_i).
double svm_kkt_violation(const Eigen::MatrixXd& X, std::span<const int> y, const BinarySvm& svm);

struct MulticlassSvm {
  struct Pair {
    int positive;  // lower class index, predicted when decision > 0
    int negative;
    BinarySvm svm;
  };
  int num_classes = 0;
  std::vector<Pair> pairs;

  std::vector<int> votes(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  /// Majority vote; ties go to the lower class index.
  int predict(const Eigen::Ref<const Eigen::VectorXd>& x) const;
};

/// One machine per unordered class pair. Labels are class indices in
/// [0, num_classes); each must occur at least twice. `class_names` is only
/// used for error messages.
MulticlassSvm train_multiclass_svm(const Eigen::MatrixXd& X, std::span<const int> y, int num_classes,
                                   const SmoOptions& opts = {}, unsigned jobs = 1,
                                   std::span<const std::string> class_names = {});

// ---------------------------------------------------------------------------
// Multinomial logistic regression

struct MlrOptions {
  double l2 = 1e-6;
  std::size_t max_iter = 500;
  double tol = 1e-8;
  int history = 10;  // L-BFGS memory
  bool trace_loss = false;
};

struct MlrModel {
  Eigen::MatrixXd W;  // classes x features
  Eigen::VectorXd bias;
  double l2 = 0.0;
  std::size_t iterations = 0;
  double final_gradient_norm = 0.0;
  std::vector<double> loss_trace;  // loss after each accepted step, when traced

  Eigen::MatrixXd probabilities(const Eigen::MatrixXd& X) const;
  Eigen::MatrixXd probabilities(const SparseMatrix& X) const;
};

/// Mean cross-entropy plus l2/2 |W|^2 (bias unpenalized) and its gradient.
struct MlrObjective {
  double loss = 0.0;
  Eigen::MatrixXd grad_W;
  Eigen::VectorXd grad_bias;
};
MlrObjective mlr_objective(const Eigen::MatrixXd& X, std::span<const int> y, const Eigen::MatrixXd& W,
                           const Eigen::VectorXd& bias, double l2);
MlrObjective mlr_objective(const SparseMatrix& X, std::span<const int> y, const Eigen::MatrixXd& W,
                           const Eigen::VectorXd& bias, double l2);

/// L-BFGS from zero weights with a backtracking Armijo line search.
MlrModel train_mlr(const Eigen::MatrixXd& X, std::span<const int> y, int num_classes, const MlrOptions& opts = {});
MlrModel train_mlr(const SparseMatrix& X, std::span<const int> y, int num_classes, const MlrOptions& opts = {});

// ---------------------------------------------------------------------------
// Trained pipeline model: standardize -> mask -> classifier

enum class ModelKind { svm_smo, mlr };

struct TrainedModel {
  ModelKind kind = ModelKind::svm_smo;
  Standardizer standardizer;
  std::optional<select::SelectionMask> mask;
  std::variant<MulticlassSvm, MlrModel> payload;
  std::vector<std::string> classes;
  std::string config_json = "{}";    // classifier configuration snapshot
  std::string metadata_json = "{}";  // config hash, seed, training class counts

  Eigen::Index input_dim() const { return standardizer.dim(); }
};

struct Prediction {
  std::vector<int> labels;
  std::optional<Eigen::MatrixXd> probabilities;  // MLR only
};

Prediction predict(const TrainedModel& model, const Eigen::MatrixXd& X);
/// Sparse inputs skip standardization; only MLR models without a mask accept them.
Prediction predict(const TrainedModel& model, const SparseMatrix& X);

std::string serialize_model(const TrainedModel& model);
TrainedModel deserialize_model(std::string_view json_text);

}  // namespace accentid::learn
