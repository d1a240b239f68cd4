#include "accentid/text_features.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>

#include "accentid/common.hpp"

namespace accentid::text {

namespace {

bool is_space(char32_t c) {
  return (c >= 0x09 && c <= 0x0D) || c == 0x20 || c == 0x85 || c == 0xA0 || c == 0x1680 ||
         (c >= 0x2000 && c <= 0x200A) || c == 0x2028 || c == 0x2029 || c == 0x202F ||
         c == 0x205F || c == 0x3000;
}

// Simple case folding for ASCII, Latin-1, Greek and Cyrillic capitals.
char32_t to_lower(char32_t c) {
  if (c >= 'A' && c <= 'Z') return c + 32;
  if ((c >= 0xC0 && c <= 0xDE && c != 0xD7) || (c >= 0x391 && c <= 0x3A9 && c != 0x3A2) ||
      (c >= 0x410 && c <= 0x42F))
    return c + 32;
  if (c >= 0x400 && c <= 0x40F) return c + 80;
  return c;
}

std::u32string decode_utf8(std::string_view s) {
  std::u32string out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    const auto b = static_cast<unsigned char>(s[i]);
    int len = b < 0x80 ? 1 : (b >> 5) == 0x6 ? 2 : (b >> 4) == 0xE ? 3 : (b >> 3) == 0x1E ? 4 : 0;
    char32_t cp = len == 1 ? b : len == 2 ? (b & 0x1F) : len == 3 ? (b & 0x0F) : (b & 0x07);
    bool ok = len > 0 && i + len <= s.size();
    for (int k = 1; ok && k < len; ++k) {
      const auto cont = static_cast<unsigned char>(s[i + k]);
      if ((cont >> 6) != 0x2) ok = false;
      cp = (cp << 6) | (cont & 0x3F);
    }
    if (!ok) {
      out += U'\uFFFD';
      ++i;
      continue;
    }
    out += cp;
    i += len;
  }
  return out;
}

void append_utf8(std::string& out, char32_t c) {
  if (c < 0x80) {
    out += static_cast<char>(c);
  } else if (c < 0x800) {
    out += static_cast<char>(0xC0 | (c >> 6));
    out += static_cast<char>(0x80 | (c & 0x3F));
  } else if (c < 0x10000) {
    out += static_cast<char>(0xE0 | (c >> 12));
    out += static_cast<char>(0x80 | ((c >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (c & 0x3F));
  } else {
    out += static_cast<char>(0xF0 | (c >> 18));
    out += static_cast<char>(0x80 | ((c >> 12) & 0x3F));
    out += static_cast<char>(0x80 | ((c >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (c & 0x3F));
  }
}

std::string encode_utf8(std::u32string_view s) {
  std::string out;
  for (char32_t c : s) append_utf8(out, c);
  return out;
}

std::vector<std::u32string> tokens_u32(std::string_view text, bool lowercase) {
  std::vector<std::u32string> tokens;
  std::u32string cur;
  for (char32_t c : decode_utf8(text)) {
    if (is_space(c)) {
      if (!cur.empty()) tokens.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += lowercase ? to_lower(c) : c;
    }
  }
  if (!cur.empty()) tokens.push_back(std::move(cur));
  return tokens;
}

void char_ngrams(std::u32string_view s, int n_min, int n_max, NgramCounts& out) {
  for (int n = n_min; n <= n_max; ++n)
    for (std::size_t i = 0; i + n <= s.size(); ++i) ++out[encode_utf8(s.substr(i, n))];
}

}  // namespace

std::string_view unit_name(NgramUnit u) {
  switch (u) {
    case NgramUnit::word: return "word";
    case NgramUnit::char_across: return "char_across";
    case NgramUnit::char_within: return "char_within";
  }
  return "word";
}

NgramUnit parse_unit(std::string_view name) {
  for (auto u : {NgramUnit::word, NgramUnit::char_across, NgramUnit::char_within})
    if (unit_name(u) == name) return u;
  throw ConfigError("unknown n-gram unit '" + std::string(name) + "'");
}

NgramConfig NgramConfig::defaults(NgramUnit unit) {
  NgramConfig c;
  c.unit = unit;
  c.n_max = unit == NgramUnit::word ? 3 : 10;
  return c;
}

void NgramConfig::validate() const {
  if (n_min < 1 || n_min > n_max) throw ConfigError("n-gram orders must satisfy 1 <= n_min <= n_max");
  if (min_doc_freq < 1) throw ConfigError("min_doc_freq must be >= 1");
  if (max_vocab < 1) throw ConfigError("max_vocab must be >= 1");
}

std::vector<std::string> tokenize(std::string_view text, bool lowercase) {
  std::vector<std::string> out;
  for (const auto& t : tokens_u32(text, lowercase)) out.push_back(encode_utf8(t));
  return out;
}

NgramCounts extract_ngrams(std::string_view text, const NgramConfig& config) {
  config.validate();
  NgramCounts out;
  const auto tokens = tokens_u32(text, config.lowercase);
  switch (config.unit) {
    case NgramUnit::word: {
      std::vector<std::string> words;
      for (const auto& t : tokens) words.push_back(encode_utf8(t));
      for (int n = config.n_min; n <= config.n_max; ++n) {
        for (std::size_t i = 0; i + n <= words.size(); ++i) {
          std::string g = words[i];
          for (int k = 1; k < n; ++k) g += ' ' + words[i + k];
          ++out[g];
        }
      }
      break;
    }
    case NgramUnit::char_across: {
      std::u32string joined;
      for (const auto& t : tokens) {
        if (!joined.empty()) joined += U' ';
        joined += t;
      }
      char_ngrams(joined, config.n_min, config.n_max, out);
      break;
    }
    case NgramUnit::char_within:
      for (const auto& t : tokens) char_ngrams(t, config.n_min, config.n_max, out);
      break;
  }
  return out;
}

double SparseVector::at(std::uint32_t index) const {
  const auto it = std::lower_bound(indices.begin(), indices.end(), index);
  return it != indices.end() && *it == index ? values[it - indices.begin()] : 0.0;
}

Vocabulary::Vocabulary(NgramConfig config, std::vector<std::string> ngrams,
                       std::vector<int> doc_freqs, std::size_t num_docs)
    : config_(config), ngrams_(std::move(ngrams)), doc_freqs_(std::move(doc_freqs)), num_docs_(num_docs) {
  index_.reserve(ngrams_.size());
  for (std::size_t i = 0; i < ngrams_.size(); ++i)
    index_.emplace(ngrams_[i], static_cast<std::uint32_t>(i));
}

long Vocabulary::index_of(const std::string& ngram) const {
  const auto it = index_.find(ngram);
  return it == index_.end() ? -1 : static_cast<long>(it->second);
}

Vocabulary fit_vocabulary(std::span<const std::string> texts, const NgramConfig& config) {
  config.validate();
  if (texts.empty()) throw DataError("cannot fit a vocabulary on an empty corpus");
  std::unordered_map<std::string, int> df;
  for (const auto& t : texts)
    for (const auto& entry : extract_ngrams(t, config)) ++df[entry.first];

  std::vector<std::pair<std::string, int>> kept;
  for (auto& [g, f] : df)
    if (f >= config.min_doc_freq) kept.emplace_back(g, f);
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  if (kept.size() > config.max_vocab) kept.resize(config.max_vocab);
  std::sort(kept.begin(), kept.end());

  std::vector<std::string> grams;
  std::vector<int> freqs;
  grams.reserve(kept.size());
  freqs.reserve(kept.size());
  for (auto& [g, f] : kept) {
    grams.push_back(std::move(g));
    freqs.push_back(f);
  }
  return Vocabulary(config, std::move(grams), std::move(freqs), texts.size());
}

SparseVector vectorize(std::string_view text, const Vocabulary& vocab) {
  SparseVector v;
  v.dim = vocab.size();
  std::vector<std::pair<std::uint32_t, double>> entries;
  for (const auto& [g, c] : extract_ngrams(text, vocab.config())) {
    const long idx = vocab.index_of(g);
    if (idx >= 0) entries.emplace_back(static_cast<std::uint32_t>(idx), c);
  }
  std::sort(entries.begin(), entries.end());
  for (const auto& [i, c] : entries) {
    v.indices.push_back(i);
    v.values.push_back(c);
  }
  return v;
}

SparseVector apply_weighting(const SparseVector& counts, const Vocabulary& vocab) {
  SparseVector out = counts;
  switch (vocab.config().weighting) {
    case Weighting::counts:
      break;
    case Weighting::binary:
      std::fill(out.values.begin(), out.values.end(), 1.0);
      break;
    case Weighting::tfidf:
      for (std::size_t k = 0; k < out.nnz(); ++k) {
        const double df = vocab.doc_freq(out.indices[k]);
        out.values[k] *= std::log((1.0 + vocab.num_docs()) / (1.0 + df)) + 1.0;
      }
      break;
  }
  return out;
}

SparseVector concat_feature_spaces(const SparseVector& a, const SparseVector& b) {
  SparseVector out = a;
  out.dim = a.dim + b.dim;
  for (std::size_t k = 0; k < b.nnz(); ++k) {
    out.indices.push_back(static_cast<std::uint32_t>(b.indices[k] + a.dim));
    out.values.push_back(b.values[k]);
  }
  return out;
}

TextFeaturizer::TextFeaturizer(std::vector<NgramConfig> spaces) : spaces_(std::move(spaces)) {
  if (spaces_.empty()) throw ConfigError("text featurizer needs at least one n-gram space");
  for (const auto& s : spaces_) s.validate();
}

void TextFeaturizer::fit(std::span<const std::string> texts) {
  vocabs_.clear();
  for (const auto& s : spaces_) vocabs_.push_back(fit_vocabulary(texts, s));
}

SparseVector TextFeaturizer::transform(std::string_view text) const {
  if (!fitted()) throw DataError("text featurizer used before fit");
  SparseVector out;
  for (const auto& v : vocabs_) out = concat_feature_spaces(out, apply_weighting(vectorize(text, v), v));
  return out;
}

std::size_t TextFeaturizer::dim() const {
  std::size_t d = 0;
  for (const auto& v : vocabs_) d += v.size();
  return d;
}

TextFeaturizer::Column TextFeaturizer::column(std::size_t index) const {
  for (std::size_t s = 0; s < vocabs_.size(); ++s) {
    if (index < vocabs_[s].size()) return {s, vocabs_[s].ngram(index)};
    index -= vocabs_[s].size();
  }
  throw DataError("column index out of range");
}

SparseMatrix to_matrix(std::span<const SparseVector> rows, std::size_t dim) {
  std::vector<Eigen::Triplet<double>> trips;
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t k = 0; k < rows[r].nnz(); ++k)
      trips.emplace_back(static_cast<int>(r), static_cast<int>(rows[r].indices[k]), rows[r].values[k]);
  SparseMatrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(dim));
  m.setFromTriplets(trips.begin(), trips.end());
  m.makeCompressed();
  return m;
}

std::string serialize_sparse(std::span<const std::string> ids, std::span<const SparseVector> rows,
                             std::size_t dim) {
  std::string out = "V=" + std::to_string(dim) + "\n";
  for (std::size_t r = 0; r < rows.size(); ++r) {
    out += ids[r];
    out += '\t';
    for (std::size_t k = 0; k < rows[r].nnz(); ++k) {
      if (k) out += ' ';
      out += std::to_string(rows[r].indices[k]) + ':' + format_double(rows[r].values[k]);
    }
    out += '\n';
  }
  return out;
}

SparseFile parse_sparse(std::string_view text) {
  SparseFile f;
  std::size_t pos = text.find('\n');
  const auto header = text.substr(0, pos);
  if (!header.starts_with("V=")) throw DataError("sparse matrix file must start with V=<dim>");
  f.dim = std::stoull(std::string(header.substr(2)));
  std::size_t line = 1;
  while (pos != std::string_view::npos && pos + 1 < text.size()) {
    ++line;
    const std::size_t start = pos + 1;
    pos = text.find('\n', start);
    const auto row = text.substr(start, pos == std::string_view::npos ? text.size() - start : pos - start);
    if (row.empty()) continue;
    const auto tab = row.find('\t');
    if (tab == std::string_view::npos) throw DataError("sparse row without tab at line " + std::to_string(line));
    f.ids.emplace_back(row.substr(0, tab));
    SparseVector v;
    v.dim = f.dim;
    std::size_t p = tab + 1;
    while (p < row.size()) {
      auto q = row.find(' ', p);
      if (q == std::string_view::npos) q = row.size();
      const auto item = row.substr(p, q - p);
      const auto colon = item.find(':');
      if (colon == std::string_view::npos) throw DataError("bad sparse entry at line " + std::to_string(line));
      std::uint32_t idx = 0;
      double val = 0.0;
      std::from_chars(item.data(), item.data() + colon, idx);
      std::from_chars(item.data() + colon + 1, item.data() + item.size(), val);
      if (idx >= f.dim) throw DataError("sparse index out of range at line " + std::to_string(line));
      v.indices.push_back(idx);
      v.values.push_back(val);
      p = q + 1;
    }
    f.rows.push_back(std::move(v));
  }
  return f;
}

std::string serialize_vocabulary(const Vocabulary& vocab) {
  std::string out;
  for (std::size_t i = 0; i < vocab.size(); ++i)
    out += std::to_string(i) + '\t' + vocab.ngram(i) + '\t' + std::to_string(vocab.doc_freq(i)) + '\n';
  return out;
}

}  // namespace accentid::text
