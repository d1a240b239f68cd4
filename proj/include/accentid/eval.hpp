#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "accentid/balance.hpp"
#include "accentid/corpus.hpp"
#include "accentid/learn.hpp"
#include "accentid/select.hpp"
#include "accentid/text_features.hpp"

namespace accentid::eval {

// ---------------------------------------------------------------------------
// Folds

struct FoldPlan {
  std::size_t k = 0;
  std::uint64_t seed = 0;
  bool stratified = true;
  std::vector<std::vector<std::size_t>> folds;  // positions into the input, ascending

  std::vector<std::size_t> train_indices(std::size_t fold) const;
};

/// Within each class, instances are ordered by hash(seed, id) and dealt
/// round-robin; the deal counter runs on across classes so fold sizes stay
/// within one of each other. Throws DataError listing classes smaller than k.
FoldPlan stratified_kfold(std::span<const std::string> ids, std::span<const int> labels, std::size_t k,
                          std::uint64_t seed, std::span<const std::string> class_names = {});
FoldPlan stratified_kfold(const corpus::CorpusManifest& manifest, std::size_t k, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Metrics

struct Metrics {
  std::size_t num_classes = 0;
  std::vector<std::vector<std::size_t>> confusion;  // [true][predicted]
  std::vector<double> precision, recall, f1;
  std::vector<std::size_t> support;
  double accuracy = 0.0;
  double weighted_f1 = 0.0;
  std::size_t total = 0;
};

Metrics compute_metrics(std::span<const int> y_true, std::span<const int> y_pred, std::size_t num_classes);

// ---------------------------------------------------------------------------
// Features seen by the harness

using SparseMatrix = learn::SparseMatrix;

struct FoldFeatures {
  std::variant<Eigen::MatrixXd, SparseMatrix> train, test;
  bool sparse() const { return std::holds_alternative<SparseMatrix>(train); }
};

/// Produces train/test matrices for a split. Anything fitted here must only
/// look at the training rows.
class FeatureProvider {
 public:
  virtual ~FeatureProvider() = default;
  virtual std::size_t rows() const = 0;
  virtual bool sparse() const = 0;
  virtual FoldFeatures materialize(std::span<const std::size_t> train, std::span<const std::size_t> test) const = 0;
  /// Dense view of every row, used by the leaky compatibility modes.
  virtual Eigen::MatrixXd dense_all() const = 0;
};

class DenseFeatures : public FeatureProvider {
 public:
  explicit DenseFeatures(Eigen::MatrixXd X) : X_(std::move(X)) {}
  std::size_t rows() const override { return static_cast<std::size_t>(X_.rows()); }
  bool sparse() const override { return false; }
  FoldFeatures materialize(std::span<const std::size_t> train, std::span<const std::size_t> test) const override;
  Eigen::MatrixXd dense_all() const override { return X_; }
  const Eigen::MatrixXd& matrix() const { return X_; }

 private:
  Eigen::MatrixXd X_;
};

/// Transcripts vectorized per split: vocabularies are fitted on the training
/// documents only.
class TextFeatures : public FeatureProvider {
 public:
  TextFeatures(std::vector<std::string> documents, std::vector<text::NgramConfig> spaces)
      : docs_(std::move(documents)), spaces_(std::move(spaces)) {}
  std::size_t rows() const override { return docs_.size(); }
  bool sparse() const override { return true; }
  FoldFeatures materialize(std::span<const std::size_t> train, std::span<const std::size_t> test) const override;
  Eigen::MatrixXd dense_all() const override;

 private:
  std::vector<std::string> docs_;
  std::vector<text::NgramConfig> spaces_;
};

// ---------------------------------------------------------------------------
// Pipeline

enum class Classifier { svm, mlr };
std::string classifier_name(Classifier c);
Classifier parse_classifier(std::string_view name);

struct SelectionConfig {
  select::Method method = select::Method::info_gain;
  std::size_t n = 0;
  int bins = 10;
  select::ReliefOptions relief;
};

struct PipelineConfig {
  Classifier classifier = Classifier::svm;
  learn::SmoOptions svm;
  learn::MlrOptions mlr;
  bool standardize = true;
  std::optional<balance::SmoteConfig> smote;
  std::optional<SelectionConfig> selection;
  // Compatibility modes reproducing filter-before-CV setups. Both leak.
  bool smote_before_cv = false;
  bool select_once = false;
  std::uint64_t seed = 0;
  unsigned jobs = 1;

  /// Rejects combinations the pipeline cannot run (ConfigError).
  void validate(bool sparse_features) const;
};

/// One call to a fitting routine, recorded so tests can prove where its
/// input came from.
struct FitRecord {
  std::string stage;  // standardizer, smote, selection, classifier, vocabulary
  int fold = -1;      // -1 for whole-dataset fits
  std::vector<std::size_t> rows;  // dataset positions feeding the fit
  std::uint64_t fingerprint = 0;  // hash of the numeric input
};

/// Content hash of a fit input (dimensions and values in storage order).
std::uint64_t matrix_fingerprint(const Eigen::MatrixXd& X);
std::uint64_t matrix_fingerprint(const SparseMatrix& X);

struct Dataset {
  std::vector<std::string> ids;
  std::vector<int> labels;  // class indices
  std::vector<std::string> class_names;
  std::vector<int> prompts;  // optional, 0/1 per row

  std::size_t size() const { return ids.size(); }
  std::size_t num_classes() const { return class_names.size(); }
  static Dataset from_manifest(const corpus::CorpusManifest& manifest);
};

struct EvaluationReport {
  std::string protocol;  // "cv" or "train_test"
  Metrics metrics;
  std::vector<double> fold_accuracies;
  double mean_fold_accuracy = 0.0;
  std::vector<std::string> class_names;
  std::size_t num_train = 0;  // train_test only
  std::vector<std::string> warnings;
  std::string config_json;  // snapshot of the run configuration, omitted when empty
  std::vector<FitRecord> fits;     // not serialized
};

/// k-fold CV restricted to `subset` (all rows when empty).
EvaluationReport run_cv(const Dataset& data, const FeatureProvider& features, const PipelineConfig& cfg,
                        std::size_t k = 10, std::span<const std::size_t> subset = {});

/// Fit on `train`, evaluate on `test`.
EvaluationReport run_train_test(const Dataset& data, const FeatureProvider& features, const PipelineConfig& cfg,
                                std::span<const std::size_t> train, std::span<const std::size_t> test);

struct CrossPromptReport {
  EvaluationReport cv_p1, p1_to_p2, cv_p2, p2_to_p1;
  double delta_p1() const { return p1_to_p2.metrics.accuracy - cv_p1.metrics.accuracy; }
  double delta_p2() const { return p2_to_p1.metrics.accuracy - cv_p2.metrics.accuracy; }
};

CrossPromptReport run_cross_prompt(const Dataset& data, const FeatureProvider& features, const PipelineConfig& cfg,
                                   std::size_t k = 10);

/// CV accuracy for every (method, N); fold preprocessing shared across the grid.
struct SweepPoint {
  select::Method method;
  std::size_t n;
  double accuracy;
};
std::vector<SweepPoint> run_selection_sweep(const Dataset& data, const FeatureProvider& features,
                                            const PipelineConfig& cfg, std::span<const select::Method> methods,
                                            std::span<const std::size_t> ns, std::size_t k = 10);

/// Trains the full pipeline on the given rows and returns the packaged model.
learn::TrainedModel train_model(const Dataset& data, const FeatureProvider& features, const PipelineConfig& cfg,
                                std::span<const std::size_t> rows);

// ---------------------------------------------------------------------------
// Report output

std::string report_json(const EvaluationReport& report, int indent = 2);
std::string report_table(const EvaluationReport& report);
/// Inverse of report_json (metrics are recomputed from the confusion matrix).
EvaluationReport report_from_json(std::string_view json_text);
std::string sweep_csv(std::span<const SweepPoint> points);

}  // namespace accentid::eval
