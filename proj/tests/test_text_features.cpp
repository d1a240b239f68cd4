#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>

#include "accentid/common.hpp"
#include "accentid/text_features.hpp"

using namespace accentid;
using namespace accentid::text;

namespace {

NgramConfig cfg(NgramUnit unit, int n_min, int n_max, int min_df = 1) {
  NgramConfig c;
  c.unit = unit;
  c.n_min = n_min;
  c.n_max = n_max;
  c.min_doc_freq = min_df;
  return c;
}

std::set<std::string> keys(const NgramCounts& m) {
  std::set<std::string> k;
  for (const auto& e : m) k.insert(e.first);
  return k;
}

const std::vector<std::string> kDocs = {
    "So I think part time jobs are good for students.",
    "I think smoking should be banned at all the restaurants in the country",
    "it's good. it's   really good\tfor   them",
    "Students need money so part time job is important",
    "Smoking is bad for health so I agree",
};

}  // namespace

TEST_CASE("tokenize") {
  CHECK(tokenize("So I think") == std::vector<std::string>{"so", "i", "think"});
  CHECK(tokenize("").empty());
  CHECK(tokenize("   \n\t ").empty());
  CHECK(tokenize("it's good.") == std::vector<std::string>{"it's", "good."});
  CHECK(tokenize("So I", false) == std::vector<std::string>{"So", "I"});
  // non-breaking space and ideographic space split tokens; capitals fold
  CHECK(tokenize("ÉCOLE\xC2\xA0Über\xE3\x80\x80x") == std::vector<std::string>{"école", "über", "x"});
}

TEST_CASE("extract_ngrams hand enumerations") {
  CHECK(keys(extract_ngrams("ab cd", cfg(NgramUnit::char_across, 3, 3))) ==
        std::set<std::string>{"ab ", "b c", " cd"});
  CHECK(extract_ngrams("ab cd", cfg(NgramUnit::char_within, 3, 3)).empty());
  CHECK(keys(extract_ngrams("a b c", cfg(NgramUnit::word, 2, 2))) == std::set<std::string>{"a b", "b c"});
  // whitespace runs collapse before crossing boundaries
  CHECK(keys(extract_ngrams("ab \n  cd", cfg(NgramUnit::char_across, 3, 3))) ==
        std::set<std::string>{"ab ", "b c", " cd"});
  // multi-byte characters count as one
  CHECK(keys(extract_ngrams("né", cfg(NgramUnit::char_within, 2, 2))) == std::set<std::string>{"né"});
  auto counts = extract_ngrams("the the the", cfg(NgramUnit::word, 1, 1));
  CHECK(counts["the"] == 3);
}

TEST_CASE("n-gram invariants") {
  std::mt19937_64 rng(5);
  const std::string alphabet = "abc  \t\n";
  for (int trial = 0; trial < 50; ++trial) {
    std::string text;
    const int len = static_cast<int>(rng() % 40);
    for (int i = 0; i < len; ++i) text += alphabet[rng() % alphabet.size()];
    for (const auto& [g, c] : extract_ngrams(text, cfg(NgramUnit::char_within, 1, 10)))
      CHECK(g.find(' ') == std::string::npos);
    for (const auto& [g, c] : extract_ngrams(text, cfg(NgramUnit::char_across, 1, 10)))
      CHECK(g.find("  ") == std::string::npos);
    const auto k = static_cast<int>(tokenize(text).size());
    for (int n = 1; n <= 3; ++n) {
      int total = 0;
      for (const auto& [g, c] : extract_ngrams(text, cfg(NgramUnit::word, n, n))) total += c;
      CHECK(total == std::max(0, k - n + 1));
    }
  }
}

TEST_CASE("fit_vocabulary") {
  SUBCASE("two identical docs keep every ngram") {
    const std::vector<std::string> docs = {"a b c", "a b c"};
    auto c = cfg(NgramUnit::word, 1, 3, 2);
    auto v = fit_vocabulary(docs, c);
    CHECK(v.size() == extract_ngrams(docs[0], c).size());
    CHECK(v.size() == 6);
  }
  SUBCASE("rare ngrams are excluded") {
    std::vector<std::string> docs(10, "common words here");
    docs[3] += " rareword";
    auto v = fit_vocabulary(docs, cfg(NgramUnit::word, 1, 1, 2));
    CHECK(v.index_of("rareword") == -1);
    CHECK(v.index_of("common") >= 0);
    CHECK(v.doc_freq(static_cast<std::size_t>(v.index_of("common"))) == 10);
  }
  SUBCASE("max_vocab keeps highest document frequency, ties lexicographic") {
    const std::vector<std::string> docs = {"x y z", "x y", "x w"};
    auto c = cfg(NgramUnit::word, 1, 1, 1);
    c.max_vocab = 2;
    auto v = fit_vocabulary(docs, c);
    REQUIRE(v.size() == 2);
    CHECK(v.ngram(0) == "x");
    CHECK(v.ngram(1) == "y");
    c.max_vocab = 3;  // w and z tie at df 1: w wins
    v = fit_vocabulary(docs, c);
    CHECK(v.index_of("w") >= 0);
    CHECK(v.index_of("z") == -1);
  }
  SUBCASE("shuffled corpus gives an identical vocabulary") {
    auto c = NgramConfig::defaults(NgramUnit::char_across);
    auto v1 = fit_vocabulary(kDocs, c);
    auto docs = kDocs;
    std::mt19937_64 rng(3);
    std::shuffle(docs.begin(), docs.end(), rng);
    auto v2 = fit_vocabulary(docs, c);
    CHECK(serialize_vocabulary(v1) == serialize_vocabulary(v2));
    CHECK(v1.size() > 0);
  }
  SUBCASE("empty corpus") {
    CHECK_THROWS_AS(fit_vocabulary(std::vector<std::string>{}, NgramConfig{}), DataError);
  }
}

TEST_CASE("vectorize") {
  auto c = NgramConfig::defaults(NgramUnit::word);
  c.min_doc_freq = 1;
  auto vocab = fit_vocabulary(kDocs, c);

  SUBCASE("training doc reproduces its multiset") {
    const auto v = vectorize(kDocs[0], vocab);
    const auto grams = extract_ngrams(kDocs[0], c);
    CHECK(v.nnz() == grams.size());
    for (const auto& [g, n] : grams) CHECK(v.at(static_cast<std::uint32_t>(vocab.index_of(g))) == n);
    CHECK(std::is_sorted(v.indices.begin(), v.indices.end()));
  }
  SUBCASE("out of vocabulary text") { CHECK(vectorize("zzz qqq", vocab).nnz() == 0); }
  SUBCASE("counts add under self-concatenation") {
    for (const auto& d : kDocs) {
      const auto once = vectorize(d, vocab);
      const auto twice = vectorize(d + " " + d, vocab);
      for (std::size_t k = 0; k < once.nnz(); ++k) {
        const auto& g = vocab.ngram(once.indices[k]);
        // n-grams inside either copy double; ones spanning the seam are new
        CHECK(twice.at(once.indices[k]) >= 2 * once.values[k]);
        if (tokenize(g).size() == 1) CHECK(twice.at(once.indices[k]) == 2 * once.values[k]);
      }
    }
    // unigram-only vocabularies have no seam, so doubling is exact
    auto uni = fit_vocabulary(kDocs, cfg(NgramUnit::word, 1, 1));
    for (const auto& d : kDocs) {
      auto a = vectorize(d, uni);
      auto b = vectorize(d + " " + d, uni);
      REQUIRE(a.indices == b.indices);
      for (std::size_t k = 0; k < a.nnz(); ++k) CHECK(b.values[k] == 2 * a.values[k]);
    }
  }
}

TEST_CASE("concat_feature_spaces and combined featurizer") {
  SparseVector a{{1, 4}, {1.0, 2.0}, 5};
  SparseVector b{{0, 6}, {3.0, 1.0}, 7};
  auto c = concat_feature_spaces(a, b);
  CHECK(c.dim == 12);
  CHECK(c.indices == std::vector<std::uint32_t>{1, 4, 5, 11});
  auto e = concat_feature_spaces(SparseVector{{}, {}, 0}, b);
  CHECK(e.indices == b.indices);
  CHECK(e.dim == 7);

  auto word = NgramConfig::defaults(NgramUnit::word);
  auto chars = NgramConfig::defaults(NgramUnit::char_across);
  word.min_doc_freq = chars.min_doc_freq = 1;
  TextFeaturizer combined({word, chars});
  combined.fit(kDocs);
  const auto& vocabs = combined.vocabularies();
  CHECK(combined.dim() == vocabs[0].size() + vocabs[1].size());
  // both views appear in one row, each column traceable to its space
  const auto row = combined.transform(kDocs[1]);
  bool saw_word = false, saw_char = false;
  for (auto idx : row.indices) {
    const auto col = combined.column(idx);
    if (col.space == 0) {
      saw_word = true;
      CHECK(vocabs[0].index_of(col.ngram) == static_cast<long>(idx));
    } else {
      saw_char = true;
      CHECK(vocabs[1].index_of(col.ngram) == static_cast<long>(idx - vocabs[0].size()));
    }
  }
  CHECK(saw_word);
  CHECK(saw_char);
}

TEST_CASE("weighting switch") {
  auto c = cfg(NgramUnit::word, 1, 1);
  c.weighting = Weighting::binary;
  auto v = fit_vocabulary(kDocs, c);
  for (double x : apply_weighting(vectorize("the the the", v), v).values) CHECK(x == 1.0);
}

TEST_CASE("sparse file round trip") {
  auto c = cfg(NgramUnit::char_within, 1, 4);
  auto vocab = fit_vocabulary(kDocs, c);
  std::vector<SparseVector> rows;
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < kDocs.size(); ++i) {
    rows.push_back(vectorize(kDocs[i], vocab));
    ids.push_back("doc" + std::to_string(i));
  }
  const auto text = serialize_sparse(ids, rows, vocab.size());
  CHECK(text.starts_with("V=" + std::to_string(vocab.size()) + "\n"));
  const auto parsed = parse_sparse(text);
  CHECK(parsed.ids == ids);
  REQUIRE(parsed.rows.size() == rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(parsed.rows[i].indices == rows[i].indices);
    CHECK(parsed.rows[i].values == rows[i].values);
  }
  const auto vtext = serialize_vocabulary(vocab);
  CHECK(vtext.substr(0, vtext.find('\n')).find('\t') != std::string::npos);
}
