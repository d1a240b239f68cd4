#pragma once

#include <Eigen/SparseCore>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace accentid::text {

enum class NgramUnit { word, char_across, char_within };
enum class Weighting { counts, binary, tfidf };

std::string_view unit_name(NgramUnit u);
NgramUnit parse_unit(std::string_view name);  // throws ConfigError

struct NgramConfig {
  NgramUnit unit = NgramUnit::word;
  int n_min = 1;
  int n_max = 3;
  int min_doc_freq = 2;
  std::size_t max_vocab = 200000;
  bool lowercase = true;
  Weighting weighting = Weighting::counts;

  /// Word 1-3-grams or character 1-10-grams.
  static NgramConfig defaults(NgramUnit unit);
  void validate() const;
};

/// Whitespace tokenization (Unicode whitespace); punctuation stays attached.
std::vector<std::string> tokenize(std::string_view text, bool lowercase = true);

/// N-gram multiset, keyed by UTF-8 n-gram.
using NgramCounts = std::map<std::string, int>;
NgramCounts extract_ngrams(std::string_view text, const NgramConfig& config);

struct SparseVector {
  std::vector<std::uint32_t> indices;  // strictly increasing
  std::vector<double> values;          // > 0
  std::size_t dim = 0;

  std::size_t nnz() const { return indices.size(); }
  double at(std::uint32_t index) const;
};

class Vocabulary {
 public:
  Vocabulary() = default;
  Vocabulary(NgramConfig config, std::vector<std::string> ngrams, std::vector<int> doc_freqs,
             std::size_t num_docs);

  const NgramConfig& config() const { return config_; }
  std::size_t size() const { return ngrams_.size(); }
  std::size_t num_docs() const { return num_docs_; }
  const std::string& ngram(std::size_t index) const { return ngrams_[index]; }
  int doc_freq(std::size_t index) const { return doc_freqs_[index]; }
  /// -1 when absent.
  long index_of(const std::string& ngram) const;

 private:
  NgramConfig config_;
  std::vector<std::string> ngrams_;  // sorted; position is the column index
  std::vector<int> doc_freqs_;
  std::unordered_map<std::string, std::uint32_t> index_;
  std::size_t num_docs_ = 0;
};

/// Keeps n-grams with document frequency >= min_doc_freq, capped at
/// max_vocab by document frequency (ties lexicographic), indexed in sorted order.
Vocabulary fit_vocabulary(std::span<const std::string> texts, const NgramConfig& config);

/// Raw in-vocabulary counts; out-of-vocabulary n-grams are dropped.
SparseVector vectorize(std::string_view text, const Vocabulary& vocab);

/// Applies the vocabulary's weighting to a raw count vector.
SparseVector apply_weighting(const SparseVector& counts, const Vocabulary& vocab);

/// Horizontal concatenation: b's indices are offset by a.dim.
SparseVector concat_feature_spaces(const SparseVector& a, const SparseVector& b);

/// One or more n-gram spaces side by side (e.g. word + char_across).
class TextFeaturizer {
 public:
  explicit TextFeaturizer(std::vector<NgramConfig> spaces);

  void fit(std::span<const std::string> texts);
  bool fitted() const { return !vocabs_.empty(); }
  SparseVector transform(std::string_view text) const;
  std::size_t dim() const;
  const std::vector<Vocabulary>& vocabularies() const { return vocabs_; }

  struct Column {
    std::size_t space;
    std::string ngram;
  };
  Column column(std::size_t index) const;

 private:
  std::vector<NgramConfig> spaces_;
  std::vector<Vocabulary> vocabs_;
};

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;
SparseMatrix to_matrix(std::span<const SparseVector> rows, std::size_t dim);

// File formats: "V=<dim>" then "id<TAB>idx:count ..." rows; vocabulary
// rows "index<TAB>ngram<TAB>docfreq".
std::string serialize_sparse(std::span<const std::string> ids, std::span<const SparseVector> rows,
                             std::size_t dim);
struct SparseFile {
  std::size_t dim = 0;
  std::vector<std::string> ids;
  std::vector<SparseVector> rows;
};
SparseFile parse_sparse(std::string_view text);
std::string serialize_vocabulary(const Vocabulary& vocab);

}  // namespace accentid::text
