#include "accentid/eval.hpp"

#include <algorithm>
#include <iomanip>
#include <json.hpp>
#include <map>
#include <numeric>
#include <sstream>

#include "accentid/common.hpp"

namespace accentid::eval {

namespace {

std::string join(const std::vector<std::string>& parts, const char* sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

}  // namespace

std::uint64_t matrix_fingerprint(const Eigen::MatrixXd& X) {
  Fnv1a h;
  h.update(static_cast<std::uint64_t>(X.rows())).update(static_cast<std::uint64_t>(X.cols()));
  h.update(std::span<const double>(X.data(), static_cast<std::size_t>(X.size())));
  return h.digest();
}

std::uint64_t matrix_fingerprint(const SparseMatrix& X) {
  Fnv1a h;
  h.update(static_cast<std::uint64_t>(X.rows())).update(static_cast<std::uint64_t>(X.cols()));
  for (Eigen::Index r = 0; r < X.outerSize(); ++r)
    for (SparseMatrix::InnerIterator it(X, r); it; ++it) {
      h.update(static_cast<std::uint64_t>(it.col()));
      const double v = it.value();
      h.update(std::span<const double>(&v, 1));
    }
  return h.digest();
}

namespace {

Eigen::MatrixXd take_rows(const Eigen::MatrixXd& X, std::span<const std::size_t> rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), X.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = X.row(static_cast<Eigen::Index>(rows[i]));
  return out;
}

std::vector<std::size_t> all_rows(std::size_t n) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), 0);
  return v;
}

}  // namespace

// ---------------------------------------------------------------------------

std::vector<std::size_t> FoldPlan::train_indices(std::size_t fold) const {
  std::vector<std::size_t> out;
  for (std::size_t f = 0; f < folds.size(); ++f)
    if (f != fold) out.insert(out.end(), folds[f].begin(), folds[f].end());
  std::sort(out.begin(), out.end());
  return out;
}

FoldPlan stratified_kfold(std::span<const std::string> ids, std::span<const int> labels, std::size_t k,
                          std::uint64_t seed, std::span<const std::string> class_names) {
  if (k < 2) throw ConfigError("cross-validation needs k >= 2");
  if (ids.size() != labels.size()) throw DataError("fold plan: ids and labels differ in length");
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < ids.size(); ++i) by_class[labels[i]].push_back(i);
  std::vector<std::string> small;
  for (const auto& [c, rows] : by_class) {
    if (rows.size() < k) {
      const std::string name = c >= 0 && static_cast<std::size_t>(c) < class_names.size()
                                   ? class_names[static_cast<std::size_t>(c)]
                                   : "class " + std::to_string(c);
      small.push_back(name + " (" + std::to_string(rows.size()) + ")");
    }
  }
  if (!small.empty())
    throw DataError("classes smaller than k=" + std::to_string(k) + ": " + join(small, ", "));

  const std::uint64_t fold_seed = derive_seed(seed, "folds");
  FoldPlan plan;
  plan.k = k;
  plan.seed = seed;
  plan.folds.resize(k);
  std::size_t counter = 0;
  for (auto& [c, rows] : by_class) {
    std::vector<std::pair<std::uint64_t, std::size_t>> keyed;
    for (auto r : rows) keyed.emplace_back(Fnv1a().update(fold_seed).update(ids[r]).digest(), r);
    std::sort(keyed.begin(), keyed.end(), [&](const auto& a, const auto& b) {
      return a.first != b.first ? a.first < b.first : ids[a.second] < ids[b.second];
    });
    for (const auto& [key, r] : keyed) plan.folds[counter++ % k].push_back(r);
  }
  for (auto& f : plan.folds) std::sort(f.begin(), f.end());
  return plan;
}

FoldPlan stratified_kfold(const corpus::CorpusManifest& manifest, std::size_t k, std::uint64_t seed) {
  const auto data = Dataset::from_manifest(manifest);
  return stratified_kfold(data.ids, data.labels, k, seed, data.class_names);
}

// ---------------------------------------------------------------------------

Metrics compute_metrics(std::span<const int> y_true, std::span<const int> y_pred, std::size_t num_classes) {
  if (y_true.size() != y_pred.size())
    throw DataError("metrics: " + std::to_string(y_true.size()) + " labels but " + std::to_string(y_pred.size()) +
                    " predictions");
  Metrics m;
  m.num_classes = num_classes;
  m.confusion.assign(num_classes, std::vector<std::size_t>(num_classes, 0));
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    if (y_true[i] < 0 || static_cast<std::size_t>(y_true[i]) >= num_classes || y_pred[i] < 0 ||
        static_cast<std::size_t>(y_pred[i]) >= num_classes)
      throw DataError("metrics: label out of range");
    ++m.confusion[static_cast<std::size_t>(y_true[i])][static_cast<std::size_t>(y_pred[i])];
  }
  m.total = y_true.size();
  m.precision.assign(num_classes, 0.0);
  m.recall.assign(num_classes, 0.0);
  m.f1.assign(num_classes, 0.0);
  m.support.assign(num_classes, 0);
  std::size_t correct = 0;
  for (std::size_t c = 0; c < num_classes; ++c) {
    std::size_t predicted = 0;
    for (std::size_t t = 0; t < num_classes; ++t) {
      m.support[c] += m.confusion[c][t];
      predicted += m.confusion[t][c];
    }
    const double tp = static_cast<double>(m.confusion[c][c]);
    correct += m.confusion[c][c];
    m.precision[c] = predicted ? tp / static_cast<double>(predicted) : 0.0;
    m.recall[c] = m.support[c] ? tp / static_cast<double>(m.support[c]) : 0.0;
    const double denom = m.precision[c] + m.recall[c];
    m.f1[c] = denom > 0 ? 2.0 * m.precision[c] * m.recall[c] / denom : 0.0;
  }
  if (m.total > 0) {
    m.accuracy = static_cast<double>(correct) / static_cast<double>(m.total);
    for (std::size_t c = 0; c < num_classes; ++c)
      m.weighted_f1 += m.f1[c] * static_cast<double>(m.support[c]) / static_cast<double>(m.total);
  }
  return m;
}

// ---------------------------------------------------------------------------

FoldFeatures DenseFeatures::materialize(std::span<const std::size_t> train, std::span<const std::size_t> test) const {
  return {take_rows(X_, train), take_rows(X_, test)};
}

FoldFeatures TextFeatures::materialize(std::span<const std::size_t> train, std::span<const std::size_t> test) const {
  std::vector<std::string> train_docs;
  for (auto r : train) train_docs.push_back(docs_[r]);
  text::TextFeaturizer fz(spaces_);
  fz.fit(train_docs);
  auto encode = [&](std::span<const std::size_t> rows) {
    std::vector<text::SparseVector> vecs;
    for (auto r : rows) vecs.push_back(fz.transform(docs_[r]));
    return text::to_matrix(vecs, fz.dim());
  };
  return {encode(train), encode(test)};
}

Eigen::MatrixXd TextFeatures::dense_all() const {
  const auto rows = all_rows(docs_.size());
  return Eigen::MatrixXd(std::get<SparseMatrix>(materialize(rows, {}).train));
}

std::string classifier_name(Classifier c) { return c == Classifier::svm ? "svm" : "mlr"; }

Classifier parse_classifier(std::string_view name) {
  if (name == "svm" || name == "smo" || name == "svm_smo") return Classifier::svm;
  if (name == "mlr") return Classifier::mlr;
  throw ConfigError("unknown classifier '" + std::string(name) + "'");
}

void PipelineConfig::validate(bool sparse_features) const {
  if (sparse_features) {
    if (classifier != Classifier::mlr) throw ConfigError("sparse n-gram features require the mlr classifier");
    if (smote) throw ConfigError("SMOTE is not supported on sparse n-gram features");
    if (selection) throw ConfigError("feature selection is not supported on sparse n-gram features");
  }
  if (smote_before_cv && !smote) throw ConfigError("smote_before_cv requires SMOTE to be enabled");
  if (select_once && !selection) throw ConfigError("select_once requires a selection method");
  if (selection && selection->n < 1) throw ConfigError("selection n must be >= 1");
  if (svm.C <= 0 || svm.tol <= 0) throw ConfigError("svm C and tol must be positive");
  if (mlr.l2 < 0) throw ConfigError("mlr l2 must be non-negative");
  if (smote && smote->k_neighbors < 1) throw ConfigError("SMOTE k must be >= 1");
}

Dataset Dataset::from_manifest(const corpus::CorpusManifest& manifest) {
  Dataset d;
  d.class_names = corpus::label_codes();
  for (const auto& inst : manifest.instances()) {
    d.ids.push_back(inst.id);
    d.labels.push_back(static_cast<int>(inst.label));
    d.prompts.push_back(inst.prompt == corpus::Prompt::P1 ? 0 : 1);
  }
  return d;
}

// ---------------------------------------------------------------------------

namespace {

struct SplitOutput {
  std::vector<int> predictions;  // global class indices, aligned with test rows
  std::vector<FitRecord> fits;
  std::vector<std::string> warnings;
};

// Training data for one split after standardization and oversampling.
struct TrainingSet {
  learn::Standardizer standardizer;
  Eigen::MatrixXd Z;  // standardized, possibly oversampled
  std::vector<int> y;  // compressed labels
  std::vector<int> classes;  // compressed -> global
  std::vector<std::size_t> rows;
};

std::vector<int> compress_labels(std::span<const int> y, std::vector<int>& classes) {
  classes.assign(y.begin(), y.end());
  std::sort(classes.begin(), classes.end());
  classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
  if (classes.size() < 2) throw DataError("training partition contains fewer than 2 classes");
  std::vector<int> out;
  out.reserve(y.size());
  for (int v : y) out.push_back(static_cast<int>(std::lower_bound(classes.begin(), classes.end(), v) - classes.begin()));
  return out;
}

std::vector<std::string> compressed_names(const Dataset& data, const std::vector<int>& classes) {
  std::vector<std::string> names;
  for (int c : classes)
    names.push_back(static_cast<std::size_t>(c) < data.class_names.size() ? data.class_names[static_cast<std::size_t>(c)]
                                                                          : std::to_string(c));
  return names;
}

std::string stream(std::string_view what, int fold) {
  return std::string(what) + (fold < 0 ? std::string("/all") : "/fold/" + std::to_string(fold));
}

TrainingSet prepare_dense(const Dataset& data, const PipelineConfig& cfg, const Eigen::MatrixXd& Xtr,
                          std::span<const std::size_t> train, int fold, SplitOutput& out) {
  TrainingSet ts;
  ts.rows.assign(train.begin(), train.end());
  std::vector<int> ytr;
  for (auto r : train) ytr.push_back(data.labels[r]);
  ts.y = compress_labels(ytr, ts.classes);
  ts.standardizer = cfg.standardize ? learn::Standardizer::fit(Xtr) : learn::Standardizer::identity(Xtr.cols());
  out.fits.push_back({"standardizer", fold, ts.rows, matrix_fingerprint(Xtr)});
  ts.Z = ts.standardizer.transform(Xtr);
  if (cfg.smote && !cfg.smote_before_cv) {
    balance::SmoteConfig sc = *cfg.smote;
    sc.seed = derive_seed(cfg.seed, stream("smote", fold));
    out.fits.push_back({"smote", fold, ts.rows, matrix_fingerprint(ts.Z)});
    auto res = balance::smote_resample(ts.Z, ts.y, sc);
    ts.Z = std::move(res.X);
    ts.y = std::move(res.y);
    out.warnings.insert(out.warnings.end(), res.warnings.begin(), res.warnings.end());
  }
  return ts;
}

select::SelectionScoreTable score(const Eigen::MatrixXd& Z, std::span<const int> y, const SelectionConfig& sel,
                                  std::uint64_t seed, unsigned jobs) {
  switch (sel.method) {
    case select::Method::info_gain:
      return select::score_info_gain(Z, y, sel.bins, jobs);
    case select::Method::chi_square:
      return select::score_chi_square(Z, y, sel.bins, jobs);
    case select::Method::relieff: {
      auto opts = sel.relief;
      opts.seed = seed;
      return select::score_relieff(Z, y, opts);
    }
  }
  throw ConfigError("unknown selection method");
}

learn::TrainedModel fit_classifier(const TrainingSet& ts, const std::optional<select::SelectionMask>& mask,
                                   const PipelineConfig& cfg, unsigned jobs, int fold, SplitOutput& out,
                                   const Dataset& data) {
  learn::TrainedModel model;
  model.standardizer = ts.standardizer;
  model.mask = mask;
  model.classes = compressed_names(data, ts.classes);
  const Eigen::MatrixXd Zm = mask ? mask->apply(ts.Z) : ts.Z;
  out.fits.push_back({"classifier", fold, ts.rows, matrix_fingerprint(Zm)});
  if (cfg.classifier == Classifier::svm) {
    model.kind = learn::ModelKind::svm_smo;
    model.payload = learn::train_multiclass_svm(Zm, ts.y, static_cast<int>(ts.classes.size()), cfg.svm, jobs,
                                                model.classes);
  } else {
    model.kind = learn::ModelKind::mlr;
    model.payload = learn::train_mlr(Zm, ts.y, static_cast<int>(ts.classes.size()), cfg.mlr);
  }
  return model;
}

std::vector<int> to_global(const std::vector<int>& compressed, const std::vector<int>& classes) {
  std::vector<int> out;
  out.reserve(compressed.size());
  for (int c : compressed) out.push_back(classes[static_cast<std::size_t>(c)]);
  return out;
}

// Selection scope for the leaky select_once mode.
struct FixedMasks {
  std::optional<select::SelectionMask> mask;
};

SplitOutput run_split(const Dataset& data, const FeatureProvider& features, const PipelineConfig& cfg,
                      std::span<const std::size_t> train, std::span<const std::size_t> test, int fold,
                      const FixedMasks& fixed, unsigned jobs) {
  SplitOutput out;
  FoldFeatures ff = features.materialize(train, test);
  if (ff.sparse()) {
    Fnv1a h;
    for (auto r : train) h.update(data.ids[r]);
    out.fits.push_back({"vocabulary", fold, {train.begin(), train.end()}, h.digest()});
    const auto& Xtr = std::get<SparseMatrix>(ff.train);
    const auto& Xte = std::get<SparseMatrix>(ff.test);
    std::vector<int> ytr, classes;
    for (auto r : train) ytr.push_back(data.labels[r]);
    const auto yc = compress_labels(ytr, classes);
    out.fits.push_back({"classifier", fold, {train.begin(), train.end()}, matrix_fingerprint(Xtr)});
    learn::TrainedModel model;
    model.kind = learn::ModelKind::mlr;
    model.standardizer = learn::Standardizer::identity(Xtr.cols());
    model.payload = learn::train_mlr(Xtr, yc, static_cast<int>(classes.size()), cfg.mlr);
    out.predictions = to_global(learn::predict(model, Xte).labels, classes);
    return out;
  }
  const auto& Xtr = std::get<Eigen::MatrixXd>(ff.train);
  const auto& Xte = std::get<Eigen::MatrixXd>(ff.test);
  TrainingSet ts = prepare_dense(data, cfg, Xtr, train, fold, out);
  std::optional<select::SelectionMask> mask = fixed.mask;
  if (cfg.selection && !cfg.select_once) {
    out.fits.push_back({"selection", fold, ts.rows, matrix_fingerprint(ts.Z)});
    const auto table = score(ts.Z, ts.y, *cfg.selection, derive_seed(cfg.seed, stream("relieff", fold)), jobs);
    mask = select::select_top_n(table, cfg.selection->n);
  }
  const auto model = fit_classifier(ts, mask, cfg, jobs, fold, out, data);
  out.predictions = to_global(learn::predict(model, Xte).labels, ts.classes);
  return out;
}

EvaluationReport assemble(const Dataset& data, std::string protocol, const std::vector<std::vector<std::size_t>>& tests,
                          std::vector<SplitOutput>& outs) {
  EvaluationReport rep;
  rep.protocol = std::move(protocol);
  rep.class_names = data.class_names;
  std::vector<int> yt, yp;
  for (std::size_t f = 0; f < outs.size(); ++f) {
    std::size_t correct = 0;
    for (std::size_t i = 0; i < tests[f].size(); ++i) {
      yt.push_back(data.labels[tests[f][i]]);
      yp.push_back(outs[f].predictions[i]);
      correct += yt.back() == yp.back();
    }
    rep.fold_accuracies.push_back(tests[f].empty() ? 0.0
                                                   : static_cast<double>(correct) / static_cast<double>(tests[f].size()));
    rep.fits.insert(rep.fits.end(), outs[f].fits.begin(), outs[f].fits.end());
    for (const auto& w : outs[f].warnings)
      if (std::find(rep.warnings.begin(), rep.warnings.end(), w) == rep.warnings.end()) rep.warnings.push_back(w);
  }
  rep.metrics = compute_metrics(yt, yp, data.num_classes());
  if (!rep.fold_accuracies.empty())
    rep.mean_fold_accuracy = std::accumulate(rep.fold_accuracies.begin(), rep.fold_accuracies.end(), 0.0) /
                             static_cast<double>(rep.fold_accuracies.size());
  return rep;
}

// Leaky compatibility: oversample the whole scope before folding.
struct Augmented {
  Dataset data;
  DenseFeatures features;
};

Augmented smote_whole(const Dataset& data, const FeatureProvider& features, const PipelineConfig& cfg,
                      std::span<const std::size_t> scope, std::vector<FitRecord>& fits) {
  const Eigen::MatrixXd X = take_rows(features.dense_all(), scope);
  std::vector<int> y;
  for (auto r : scope) y.push_back(data.labels[r]);
  balance::SmoteConfig sc = *cfg.smote;
  sc.seed = derive_seed(cfg.seed, "smote/all");
  fits.push_back({"smote", -1, {scope.begin(), scope.end()}, matrix_fingerprint(X)});
  auto res = balance::smote_resample(X, y, sc);
  Dataset aug;
  aug.class_names = data.class_names;
  for (auto r : scope) aug.ids.push_back(data.ids[r]);
  for (std::size_t s = 0; s < res.origins.size(); ++s)
    aug.ids.push_back("synthetic:" + data.ids[scope[static_cast<std::size_t>(res.origins[s].base)]] + ":" +
                      std::to_string(s));
  aug.labels = res.y;
  return {std::move(aug), DenseFeatures(std::move(res.X))};
}

FixedMasks global_mask(const Dataset& data, const FeatureProvider& features, const PipelineConfig& cfg,
                       std::span<const std::size_t> scope, std::vector<FitRecord>& fits) {
  FixedMasks fm;
  if (!cfg.select_once || !cfg.selection) return fm;
  const Eigen::MatrixXd X = take_rows(features.dense_all(), scope);
  std::vector<int> y;
  for (auto r : scope) y.push_back(data.labels[r]);
  fits.push_back({"selection", -1, {scope.begin(), scope.end()}, matrix_fingerprint(X)});
  const auto table = score(X, y, *cfg.selection, derive_seed(cfg.seed, "relieff/all"), cfg.jobs);
  fm.mask = select::select_top_n(table, cfg.selection->n);
  return fm;
}

EvaluationReport run_cv_impl(const Dataset& data, const FeatureProvider& features, const PipelineConfig& cfg,
                             std::size_t k, std::span<const std::size_t> scope) {
  std::vector<std::string> ids;
  std::vector<int> labels;
  for (auto r : scope) {
    ids.push_back(data.ids[r]);
    labels.push_back(data.labels[r]);
  }
  const FoldPlan plan = stratified_kfold(ids, labels, k, cfg.seed, data.class_names);
  std::vector<FitRecord> global_fits;
  const FixedMasks fixed = global_mask(data, features, cfg, scope, global_fits);
  std::vector<std::vector<std::size_t>> tests(k), trains(k);
  for (std::size_t f = 0; f < k; ++f) {
    for (auto p : plan.folds[f]) tests[f].push_back(scope[p]);
    for (auto p : plan.train_indices(f)) trains[f].push_back(scope[p]);
  }
  std::vector<SplitOutput> outs(k);
  const unsigned inner = cfg.jobs > 1 && k > 1 ? 1 : cfg.jobs;
  parallel_for(k, cfg.jobs, [&](std::size_t f) {
    outs[f] = run_split(data, features, cfg, trains[f], tests[f], static_cast<int>(f), fixed, inner);
  });
  auto rep = assemble(data, "cv", tests, outs);
  rep.fits.insert(rep.fits.begin(), global_fits.begin(), global_fits.end());
  return rep;
}

}  // namespace

EvaluationReport run_cv(const Dataset& data, const FeatureProvider& features, const PipelineConfig& cfg,
                        std::size_t k, std::span<const std::size_t> subset) {
  cfg.validate(features.sparse());
  if (features.rows() != data.size()) throw DataError("feature rows do not match the dataset size");
  const std::vector<std::size_t> scope = subset.empty() ? all_rows(data.size())
                                                        : std::vector<std::size_t>(subset.begin(), subset.end());
  if (scope.empty()) throw DataError("cross-validation on an empty subset");
  if (cfg.smote_before_cv) {
    std::vector<FitRecord> fits;
    auto aug = smote_whole(data, features, cfg, scope, fits);
    auto rep = run_cv_impl(aug.data, aug.features, cfg, k, all_rows(aug.data.size()));
    rep.fits.insert(rep.fits.begin(), fits.begin(), fits.end());
    return rep;
  }
  return run_cv_impl(data, features, cfg, k, scope);
}

EvaluationReport run_train_test(const Dataset& data, const FeatureProvider& features, const PipelineConfig& cfg,
                                std::span<const std::size_t> train, std::span<const std::size_t> test) {
  cfg.validate(features.sparse());
  if (features.rows() != data.size()) throw DataError("feature rows do not match the dataset size");
  if (train.empty() || test.empty()) throw DataError("train/test evaluation needs non-empty partitions");
  std::vector<FitRecord> global_fits;
  std::vector<std::size_t> scope(train.begin(), train.end());
  scope.insert(scope.end(), test.begin(), test.end());
  std::sort(scope.begin(), scope.end());
  const FixedMasks fixed = global_mask(data, features, cfg, scope, global_fits);
  std::vector<SplitOutput> outs{run_split(data, features, cfg, train, test, 0, fixed, cfg.jobs)};
  std::vector<std::vector<std::size_t>> tests{{test.begin(), test.end()}};
  auto rep = assemble(data, "train_test", tests, outs);
  rep.num_train = train.size();
  rep.fits.insert(rep.fits.begin(), global_fits.begin(), global_fits.end());
  return rep;
}

CrossPromptReport run_cross_prompt(const Dataset& data, const FeatureProvider& features, const PipelineConfig& cfg,
                                   std::size_t k) {
  if (data.prompts.size() != data.size()) throw DataError("cross-prompt evaluation needs prompt annotations");
  std::vector<std::size_t> p1, p2;
  for (std::size_t i = 0; i < data.size(); ++i) (data.prompts[i] == 0 ? p1 : p2).push_back(i);
  if (p1.empty() || p2.empty()) throw DataError(std::string("cross-prompt evaluation: prompt ") + (p1.empty() ? "P1" : "P2") + " has no instances");
  CrossPromptReport rep;
  rep.cv_p1 = run_cv(data, features, cfg, k, p1);
  rep.p1_to_p2 = run_train_test(data, features, cfg, p1, p2);
  rep.cv_p2 = run_cv(data, features, cfg, k, p2);
  rep.p2_to_p1 = run_train_test(data, features, cfg, p2, p1);
  return rep;
}

std::vector<SweepPoint> run_selection_sweep(const Dataset& data, const FeatureProvider& features,
                                            const PipelineConfig& base, std::span<const select::Method> methods,
                                            std::span<const std::size_t> ns, std::size_t k) {
  PipelineConfig cfg = base;
  cfg.selection.reset();
  cfg.select_once = false;
  cfg.validate(features.sparse());
  if (features.sparse()) throw ConfigError("selection sweeps need dense features");
  for (auto n : ns)
    if (n < 1) throw ConfigError("sweep N values must be >= 1");
  const SelectionConfig sel_defaults = base.selection.value_or(SelectionConfig{});

  std::unique_ptr<Augmented> aug;
  const Dataset* d = &data;
  const FeatureProvider* fp = &features;
  if (cfg.smote_before_cv) {
    std::vector<FitRecord> unused;
    aug = std::make_unique<Augmented>(smote_whole(data, features, cfg, all_rows(data.size()), unused));
    d = &aug->data;
    fp = &aug->features;
  }
  const FoldPlan plan = stratified_kfold(d->ids, d->labels, k, cfg.seed, d->class_names);
  const std::size_t grid = methods.size() * ns.size();
  // predictions[f][g] for grid point g
  std::vector<std::vector<std::vector<int>>> preds(k, std::vector<std::vector<int>>(grid));
  const unsigned inner = cfg.jobs > 1 ? 1 : cfg.jobs;
  parallel_for(k, cfg.jobs, [&](std::size_t f) {
    const auto train = plan.train_indices(f);
    const auto& test = plan.folds[f];
    SplitOutput out;
    FoldFeatures ff = fp->materialize(train, test);
    const auto& Xte = std::get<Eigen::MatrixXd>(ff.test);
    TrainingSet ts = prepare_dense(*d, cfg, std::get<Eigen::MatrixXd>(ff.train), train, static_cast<int>(f), out);
    for (std::size_t m = 0; m < methods.size(); ++m) {
      SelectionConfig sel = sel_defaults;
      sel.method = methods[m];
      const auto table = score(ts.Z, ts.y, sel, derive_seed(cfg.seed, stream("relieff", static_cast<int>(f))), inner);
      for (std::size_t j = 0; j < ns.size(); ++j) {
        const auto mask = select::select_top_n(table, ns[j]);
        const auto model = fit_classifier(ts, mask, cfg, inner, static_cast<int>(f), out, *d);
        preds[f][m * ns.size() + j] = to_global(learn::predict(model, Xte).labels, ts.classes);
      }
    }
  });
  std::vector<SweepPoint> points;
  for (std::size_t m = 0; m < methods.size(); ++m) {
    for (std::size_t j = 0; j < ns.size(); ++j) {
      std::vector<int> yt, yp;
      for (std::size_t f = 0; f < k; ++f) {
        const auto& p = preds[f][m * ns.size() + j];
        for (std::size_t i = 0; i < plan.folds[f].size(); ++i) {
          yt.push_back(d->labels[plan.folds[f][i]]);
          yp.push_back(p[i]);
        }
      }
      points.push_back({methods[m], ns[j], compute_metrics(yt, yp, d->num_classes()).accuracy});
    }
  }
  return points;
}

learn::TrainedModel train_model(const Dataset& data, const FeatureProvider& features, const PipelineConfig& cfg,
                                std::span<const std::size_t> rows) {
  cfg.validate(features.sparse());
  if (rows.empty()) throw DataError("cannot train on zero rows");
  SplitOutput out;
  FoldFeatures ff = features.materialize(rows, {});
  if (ff.sparse()) {
    const auto& Xtr = std::get<SparseMatrix>(ff.train);
    std::vector<int> ytr, classes;
    for (auto r : rows) ytr.push_back(data.labels[r]);
    const auto yc = compress_labels(ytr, classes);
    learn::TrainedModel model;
    model.kind = learn::ModelKind::mlr;
    model.standardizer = learn::Standardizer::identity(Xtr.cols());
    model.classes = compressed_names(data, classes);
    model.payload = learn::train_mlr(Xtr, yc, static_cast<int>(classes.size()), cfg.mlr);
    return model;
  }
  TrainingSet ts = prepare_dense(data, cfg, std::get<Eigen::MatrixXd>(ff.train), rows, -1, out);
  std::optional<select::SelectionMask> mask;
  if (cfg.selection) {
    const auto table = score(ts.Z, ts.y, *cfg.selection, derive_seed(cfg.seed, "relieff/all"), cfg.jobs);
    mask = select::select_top_n(table, cfg.selection->n);
  }
  return fit_classifier(ts, mask, cfg, cfg.jobs, -1, out, data);
}

// ---------------------------------------------------------------------------

std::string report_json(const EvaluationReport& r, int indent) {
  using nlohmann::ordered_json;
  ordered_json j;
  j["protocol"] = r.protocol;
  j["accuracy"] = r.metrics.accuracy;
  j["weighted_f1"] = r.metrics.weighted_f1;
  j["num_evaluated"] = r.metrics.total;
  if (r.protocol == "train_test") j["num_train"] = r.num_train;
  j["mean_fold_accuracy"] = r.mean_fold_accuracy;
  j["fold_accuracies"] = r.fold_accuracies;
  j["classes"] = r.class_names;
  j["confusion"] = r.metrics.confusion;
  ordered_json per = ordered_json::object();
  for (std::size_t c = 0; c < r.metrics.num_classes; ++c) {
    const std::string name = c < r.class_names.size() ? r.class_names[c] : std::to_string(c);
    per[name] = {{"precision", r.metrics.precision[c]},
                 {"recall", r.metrics.recall[c]},
                 {"f1", r.metrics.f1[c]},
                 {"support", r.metrics.support[c]}};
  }
  j["per_class"] = per;
  j["warnings"] = r.warnings;
  if (!r.config_json.empty()) j["config"] = ordered_json::parse(r.config_json);
  return j.dump(indent);
}

EvaluationReport report_from_json(std::string_view text) {
  using nlohmann::ordered_json;
  try {
    const auto j = ordered_json::parse(text);
    EvaluationReport r;
    r.protocol = j.at("protocol").get<std::string>();
    r.class_names = j.at("classes").get<std::vector<std::string>>();
    r.fold_accuracies = j.at("fold_accuracies").get<std::vector<double>>();
    r.mean_fold_accuracy = j.at("mean_fold_accuracy").get<double>();
    r.num_train = j.value("num_train", std::size_t{0});
    r.warnings = j.at("warnings").get<std::vector<std::string>>();
    if (j.contains("config")) r.config_json = j["config"].dump();
    const auto confusion = j.at("confusion").get<std::vector<std::vector<std::size_t>>>();
    std::vector<int> yt, yp;
    for (std::size_t t = 0; t < confusion.size(); ++t)
      for (std::size_t p = 0; p < confusion[t].size(); ++p)
        for (std::size_t n = 0; n < confusion[t][p]; ++n) {
          yt.push_back(static_cast<int>(t));
          yp.push_back(static_cast<int>(p));
        }
    r.metrics = compute_metrics(yt, yp, confusion.size());
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed report: ") + e.what());
  }
}

std::string report_table(const EvaluationReport& r) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(2);
  os << "protocol      " << r.protocol << "\n";
  os << "accuracy      " << 100.0 * r.metrics.accuracy << "%\n";
  os << "weighted F1   " << r.metrics.weighted_f1 << "\n";
  os << "evaluated     " << r.metrics.total << "\n";
  if (r.fold_accuracies.size() > 1) {
    os << "fold accuracy";
    for (double a : r.fold_accuracies) os << " " << 100.0 * a;
    os << "\n";
  }
  os << "\nclass  precision  recall     f1  support\n";
  for (std::size_t c = 0; c < r.metrics.num_classes; ++c) {
    if (r.metrics.support[c] == 0) continue;
    const std::string name = c < r.class_names.size() ? r.class_names[c] : std::to_string(c);
    os << std::left << std::setw(5) << name << std::right << std::setw(11) << r.metrics.precision[c] << std::setw(8)
       << r.metrics.recall[c] << std::setw(7) << r.metrics.f1[c] << std::setw(9) << r.metrics.support[c] << "\n";
  }
  os << "\nconfusion (rows = true)\n     ";
  std::vector<std::size_t> shown;
  for (std::size_t c = 0; c < r.metrics.num_classes; ++c) {
    std::size_t col = 0;
    for (std::size_t t = 0; t < r.metrics.num_classes; ++t) col += r.metrics.confusion[t][c];
    if (r.metrics.support[c] > 0 || col > 0) shown.push_back(c);
  }
  for (auto c : shown) os << std::setw(5) << (c < r.class_names.size() ? r.class_names[c] : std::to_string(c));
  os << "\n";
  for (auto t : shown) {
    os << std::left << std::setw(5) << (t < r.class_names.size() ? r.class_names[t] : std::to_string(t)) << std::right;
    for (auto c : shown) os << std::setw(5) << r.metrics.confusion[t][c];
    os << "\n";
  }
  for (const auto& w : r.warnings) os << "warning: " << w << "\n";
  return os.str();
}

std::string sweep_csv(std::span<const SweepPoint> points) {
  std::string out = "method,N,accuracy\n";
  for (const auto& p : points)
    out += std::string(select::method_name(p.method)) + "," + std::to_string(p.n) + "," + format_double(p.accuracy) + "\n";
  return out;
}

}  // namespace accentid::eval
