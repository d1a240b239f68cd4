#include "accentid/corpus.hpp"

#include <algorithm>
#include <filesystem>
#include <set>

#include "accentid/common.hpp"

namespace accentid::corpus {

namespace {

constexpr std::array<std::string_view, kNumLabels> kCodes = {
    "CHN", "ENS", "HKG", "IDN", "JPN", "KOR", "PAK", "PHL", "SIN", "THA", "TWN"};

constexpr std::string_view kHeader = "id,audio_path,transcript_path,label,prompt";

// Splits one CSV record starting at `pos`; advances pos past the line break.
std::vector<std::string> read_record(std::string_view text, std::size_t& pos,
                                     std::size_t& line) {
  std::vector<std::string> fields(1);
  bool quoted = false;
  while (pos < text.size()) {
    const char c = text[pos++];
    if (quoted) {
      if (c == '"') {
        if (pos < text.size() && text[pos] == '"') {
          fields.back() += '"';
          ++pos;
        } else {
          quoted = false;
        }
      } else {
        if (c == '\n') ++line;
        fields.back() += c;
      }
      continue;
    }
    if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.emplace_back();
    } else if (c == '\r') {
      continue;
    } else if (c == '\n') {
      return fields;
    } else {
      fields.back() += c;
    }
  }
  if (quoted) throw DataError("unterminated quoted field at line " + std::to_string(line));
  return fields;
}

std::string quote(const std::string& field) {
  if (field.find_first_of(",\"\n\r") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

}  // namespace

std::string_view label_code(L1Label label) { return kCodes[static_cast<int>(label)]; }

std::optional<L1Label> parse_label(std::string_view code) {
  for (int i = 0; i < kNumLabels; ++i)
    if (kCodes[i] == code) return static_cast<L1Label>(i);
  return std::nullopt;
}

const std::array<L1Label, kNumLabels>& all_labels() {
  static const auto labels = [] {
    std::array<L1Label, kNumLabels> a{};
    for (int i = 0; i < kNumLabels; ++i) a[i] = static_cast<L1Label>(i);
    return a;
  }();
  return labels;
}

std::vector<std::string> label_codes() {
  return {kCodes.begin(), kCodes.end()};
}

std::string_view prompt_code(Prompt p) { return p == Prompt::P1 ? "P1" : "P2"; }

CorpusManifest::CorpusManifest(std::vector<Instance> instances, std::string provenance,
                               std::string base_dir)
    : instances_(std::move(instances)),
      provenance_(std::move(provenance)),
      base_dir_(std::move(base_dir)) {
  std::sort(instances_.begin(), instances_.end(),
            [](const Instance& a, const Instance& b) { return a.id < b.id; });
  for (std::size_t i = 1; i < instances_.size(); ++i)
    if (instances_[i].id == instances_[i - 1].id)
      throw DataError("duplicate instance id " + instances_[i].id);
}

std::string CorpusManifest::resolve(const std::string& path) const {
  const std::filesystem::path p(path);
  if (p.is_absolute() || base_dir_.empty()) return path;
  return (std::filesystem::path(base_dir_) / p).string();
}

std::string CorpusManifest::load_transcript(const Instance& inst) const {
  if (!inst.has_transcript())
    throw DataError("instance " + inst.id + " has no transcript");
  return read_file(resolve(inst.transcript_path));
}

CorpusManifest parse_manifest_text(std::string_view text, std::string provenance,
                                   std::string base_dir) {
  if (text.starts_with("\xEF\xBB\xBF")) text.remove_prefix(3);
  std::size_t pos = 0;
  std::size_t line = 1;
  auto header = read_record(text, pos, line);
  for (auto& h : header) h = trim(h);
  if (header != std::vector<std::string>{"id", "audio_path", "transcript_path", "label",
                                         "prompt"})
    throw DataError("manifest header must be '" + std::string(kHeader) + "'");

  std::vector<Instance> instances;
  std::set<std::string> seen;
  while (pos < text.size()) {
    ++line;
    const std::size_t row_line = line;
    auto fields = read_record(text, pos, line);
    if (fields.size() == 1 && trim(fields[0]).empty()) continue;
    if (fields.size() != 5)
      throw DataError("malformed row at line " + std::to_string(row_line) + ": expected 5 fields, got " +
                      std::to_string(fields.size()));
    for (auto& f : fields) f = trim(f);
    Instance inst;
    inst.id = fields[0];
    if (inst.id.empty())
      throw DataError("malformed row at line " + std::to_string(row_line) + ": empty id");
    inst.audio_path = fields[1];
    inst.transcript_path = fields[2];
    const auto label = parse_label(fields[3]);
    if (!label)
      throw DataError("unknown label " + fields[3] + " at line " + std::to_string(row_line));
    inst.label = *label;
    if (fields[4] == "P1") {
      inst.prompt = Prompt::P1;
    } else if (fields[4] == "P2") {
      inst.prompt = Prompt::P2;
    } else {
      throw DataError("unknown prompt " + fields[4] + " at line " + std::to_string(row_line));
    }
    if (!seen.insert(inst.id).second)
      throw DataError("duplicate id " + inst.id + " at line " + std::to_string(row_line));
    instances.push_back(std::move(inst));
  }
  return CorpusManifest(std::move(instances), std::move(provenance), std::move(base_dir));
}

CorpusManifest parse_manifest(const std::string& path) {
  if (!std::filesystem::exists(path)) throw DataError("manifest not found: " + path);
  const auto base = std::filesystem::path(path).parent_path().string();
  return parse_manifest_text(read_file(path), "manifest " + path, base);
}

std::string serialize_manifest(const CorpusManifest& m) {
  std::string out(kHeader);
  out += '\n';
  for (const auto& inst : m.instances()) {
    out += quote(inst.id) + ',' + quote(inst.audio_path) + ',' + quote(inst.transcript_path) +
           ',' + std::string(label_code(inst.label)) + ',' +
           std::string(prompt_code(inst.prompt)) + '\n';
  }
  return out;
}

std::array<std::size_t, kNumLabels> class_distribution(const CorpusManifest& m) {
  std::array<std::size_t, kNumLabels> counts{};
  for (const auto& inst : m.instances()) ++counts[static_cast<int>(inst.label)];
  return counts;
}

std::pair<CorpusManifest, CorpusManifest> split_by_prompt(const CorpusManifest& m) {
  std::vector<Instance> p1;
  std::vector<Instance> p2;
  for (const auto& inst : m.instances())
    (inst.prompt == Prompt::P1 ? p1 : p2).push_back(inst);
  return {CorpusManifest(std::move(p1), m.provenance() + " [P1]", m.base_dir()),
          CorpusManifest(std::move(p2), m.provenance() + " [P2]", m.base_dir())};
}

std::vector<int> label_indices(const CorpusManifest& m) {
  std::vector<int> y;
  y.reserve(m.size());
  for (const auto& inst : m.instances()) y.push_back(static_cast<int>(inst.label));
  return y;
}

std::vector<std::string> instance_ids(const CorpusManifest& m) {
  std::vector<std::string> ids;
  ids.reserve(m.size());
  for (const auto& inst : m.instances()) ids.push_back(inst.id);
  return ids;
}

}  // namespace accentid::corpus
