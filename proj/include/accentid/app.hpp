#pragma once

#include <Eigen/Dense>
#include <ostream>
#include <string>
#include <vector>

#include "accentid/corpus.hpp"
#include "accentid/dsp.hpp"
#include "accentid/run_config.hpp"

namespace accentid::app {

/// Environment variable naming the feature cache directory.
inline constexpr const char* kCacheEnv = "ACCENTID_CACHE_DIR";

struct AudioTable {
  std::vector<std::string> ids;
  std::vector<std::string> names;
  std::vector<dsp::FeatureGroup> groups;
  Eigen::MatrixXd X;

  AudioTable restrict_groups(const std::vector<dsp::FeatureGroup>& keep) const;
};

/// `id,<feature names>` with shortest round-trip numbers.
std::string audio_table_csv(const AudioTable& t);
AudioTable parse_audio_table_csv(std::string_view csv, const std::vector<dsp::FeatureGroup>& groups);
/// Sidecar mapping each group to its column indices.
std::string groups_json(const AudioTable& t, const std::string& stamp);

/// Throws DataError listing every missing audio file (or, for text sources,
/// every instance without a readable transcript).
void check_inputs(const RunConfig& cfg, const corpus::CorpusManifest& manifest);

/// Fingerprint of everything extraction depends on: manifest rows, input
/// file sizes and modification times, and extraction settings.
std::string input_stamp(const RunConfig& cfg, const corpus::CorpusManifest& manifest);

AudioTable extract_audio(const corpus::CorpusManifest& manifest, const dsp::DspConfig& dsp, unsigned jobs);

/// Cache directory: $ACCENTID_CACHE_DIR, else <output_dir>/.cache.
std::string cache_dir(const RunConfig& cfg);

/// Audio features for the manifest, read from or written to the cache.
AudioTable load_or_extract_audio(const RunConfig& cfg, const corpus::CorpusManifest& manifest, std::ostream& log);

int cmd_extract(const RunConfig& cfg, std::ostream& out);
int cmd_experiment(const RunConfig& cfg, std::ostream& out);
int cmd_sweep_select(const RunConfig& cfg, std::ostream& out);
/// Summarizes report.json / sweep.json files (or directories holding them).
int cmd_report(const std::vector<std::string>& paths, bool detail, std::ostream& out);

}  // namespace accentid::app
