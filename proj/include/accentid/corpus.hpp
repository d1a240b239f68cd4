#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace accentid::corpus {

/// Native-language class. Enumerator order is the canonical order
/// (alphabetical by code) used for every tie-break in the toolkit.
enum class L1Label : int { CHN, ENS, HKG, IDN, JPN, KOR, PAK, PHL, SIN, THA, TWN };

inline constexpr int kNumLabels = 11;

std::string_view label_code(L1Label label);
std::optional<L1Label> parse_label(std::string_view code);
const std::array<L1Label, kNumLabels>& all_labels();
std::vector<std::string> label_codes();

enum class Prompt : int { P1, P2 };
std::string_view prompt_code(Prompt p);

struct Instance {
  std::string id;
  std::string audio_path;       // as written in the manifest
  std::string transcript_path;  // empty for audio-only corpora
  L1Label label = L1Label::CHN;
  Prompt prompt = Prompt::P1;

  bool has_transcript() const { return !transcript_path.empty(); }
};

/// Immutable after construction; instances are kept sorted by id.
class CorpusManifest {
 public:
  CorpusManifest() = default;
  CorpusManifest(std::vector<Instance> instances, std::string provenance,
                 std::string base_dir = {});

  const std::vector<Instance>& instances() const { return instances_; }
  std::size_t size() const { return instances_.size(); }
  bool empty() const { return instances_.empty(); }
  const std::string& provenance() const { return provenance_; }
  const std::string& base_dir() const { return base_dir_; }

  /// Resolves a manifest path relative to the manifest's directory.
  std::string resolve(const std::string& path) const;
  std::string audio_file(const Instance& inst) const { return resolve(inst.audio_path); }
  /// Reads the transcript; throws DataError when the instance has none.
  std::string load_transcript(const Instance& inst) const;

 private:
  std::vector<Instance> instances_;
  std::string provenance_;
  std::string base_dir_;
};

/// Parses `id,audio_path,transcript_path,label,prompt` CSV (RFC 4180 quoting).
CorpusManifest parse_manifest(const std::string& path);
CorpusManifest parse_manifest_text(std::string_view text, std::string provenance,
                                   std::string base_dir = {});
std::string serialize_manifest(const CorpusManifest& m);

std::array<std::size_t, kNumLabels> class_distribution(const CorpusManifest& m);

std::pair<CorpusManifest, CorpusManifest> split_by_prompt(const CorpusManifest& m);

std::vector<int> label_indices(const CorpusManifest& m);
std::vector<std::string> instance_ids(const CorpusManifest& m);

}  // namespace accentid::corpus
