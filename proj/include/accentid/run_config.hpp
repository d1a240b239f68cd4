#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "accentid/corpus.hpp"
#include "accentid/dsp.hpp"
#include "accentid/eval.hpp"
#include "accentid/text_features.hpp"

namespace accentid::app {

enum class FeatureSource { audio, word_ngram, char_across, char_within, combined };
std::string_view source_name(FeatureSource s);
FeatureSource parse_source(std::string_view name);

enum class Protocol { cv, cross_prompt };

struct NgramOverrides {
  std::optional<int> n_min, n_max, min_doc_freq;
  std::optional<std::size_t> max_vocab;
  std::optional<bool> lowercase;
  std::optional<text::Weighting> weighting;
};

struct SweepConfig {
  std::vector<select::Method> methods;
  std::vector<std::size_t> ns;
};

/// One experiment, read from a single JSON document. Every field has a
/// default; unknown keys are rejected.
struct RunConfig {
  std::string name;
  std::string manifest;

  FeatureSource source = FeatureSource::audio;
  std::vector<dsp::FeatureGroup> groups;  // empty = every group
  dsp::DspConfig dsp;
  NgramOverrides ngram;

  eval::PipelineConfig pipeline;
  std::optional<SweepConfig> sweep;

  Protocol protocol = Protocol::cv;
  std::size_t k = 10;
  std::optional<corpus::Prompt> prompt;  // restrict CV to one prompt

  std::uint64_t seed = 1;
  unsigned jobs = 1;
  std::string output_dir = "out";
  bool save_model = false;

  static RunConfig parse(std::string_view json_text);
  static RunConfig load(const std::string& path);

  bool text_source() const { return source != FeatureSource::audio; }
  std::vector<text::NgramConfig> ngram_spaces() const;

  /// Canonical JSON with defaults filled in. `runtime` adds jobs and output_dir.
  std::string canonical_json(bool runtime = false, int indent = -1) const;
  /// Hash of the canonical form without jobs and output_dir.
  std::string hash() const;

  /// Throws ConfigError on contradictions, before any data is touched.
  void validate() const;
};

}  // namespace accentid::app
