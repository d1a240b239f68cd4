#include "accentid/run_config.hpp"

#include <json.hpp>
#include <set>

#include "accentid/common.hpp"

namespace accentid::app {

using nlohmann::ordered_json;

namespace {

constexpr std::string_view kSources[] = {"audio", "word_ngram", "char_across", "char_within", "combined"};

std::string_view weighting_name(text::Weighting w) {
  switch (w) {
    case text::Weighting::counts: return "counts";
    case text::Weighting::binary: return "binary";
    case text::Weighting::tfidf: return "tfidf";
  }
  return "counts";
}

text::Weighting parse_weighting(std::string_view s) {
  if (s == "counts") return text::Weighting::counts;
  if (s == "binary") return text::Weighting::binary;
  if (s == "tfidf") return text::Weighting::tfidf;
  throw ConfigError("unknown weighting '" + std::string(s) + "'");
}

// Reads keys from an object and complains about anything left over.
class Reader {
 public:
  Reader(const ordered_json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j.is_object()) throw ConfigError(where_ + ": expected an object");
  }
  void done() const {
    for (const auto& [key, value] : j_.items())
      if (!seen_.count(key)) throw ConfigError(where_ + ": unknown key '" + key + "'");
  }
  const ordered_json* get(const std::string& key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }
  template <class T>
  void read(const std::string& key, T& out) {
    if (const auto* v = get(key)) {
      try {
        out = v->get<T>();
      } catch (const ordered_json::exception&) {
        throw ConfigError(where_ + "." + key + ": wrong type");
      }
    }
  }
  template <class T>
  void read_opt(const std::string& key, std::optional<T>& out) {
    if (const auto* v = get(key); v && !v->is_null()) {
      T tmp{};
      read(key, tmp);
      out = tmp;
    }
  }
  const std::string& where() const { return where_; }

 private:
  const ordered_json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

void read_dsp(const ordered_json& j, dsp::DspConfig& d) {
  Reader r(j, "features.dsp");
  r.read("target_rate", d.target_rate);
  r.read("frame_ms", d.frame_ms);
  r.read("hop_ms", d.hop_ms);
  r.read("fft_size", d.fft_size);
  r.read("mel_bands", d.mel_bands);
  r.read("mfcc_count", d.mfcc_count);
  r.read("delta_window", d.delta_window);
  r.read("lpc_order", d.lpc_order);
  r.read("formant_count", d.formant_count);
  r.read("f0_min_hz", d.f0_min_hz);
  r.read("f0_max_hz", d.f0_max_hz);
  r.read("voicing_threshold", d.voicing_threshold);
  r.read("energy_floor", d.energy_floor);
  r.read("rolloff_fraction", d.rolloff_fraction);
  r.read("pre_emphasis", d.pre_emphasis);
  r.read("formant_max_bandwidth_hz", d.formant_max_bandwidth_hz);
  r.read("formant_min_hz", d.formant_min_hz);
  r.read("formant_max_hz", d.formant_max_hz);
  r.done();
}

ordered_json dsp_json(const dsp::DspConfig& d) {
  return {{"target_rate", d.target_rate},
          {"frame_ms", d.frame_ms},
          {"hop_ms", d.hop_ms},
          {"fft_size", d.fft_size},
          {"mel_bands", d.mel_bands},
          {"mfcc_count", d.mfcc_count},
          {"delta_window", d.delta_window},
          {"lpc_order", d.lpc_order},
          {"formant_count", d.formant_count},
          {"f0_min_hz", d.f0_min_hz},
          {"f0_max_hz", d.f0_max_hz},
          {"voicing_threshold", d.voicing_threshold},
          {"energy_floor", d.energy_floor},
          {"rolloff_fraction", d.rolloff_fraction},
          {"pre_emphasis", d.pre_emphasis},
          {"formant_max_bandwidth_hz", d.formant_max_bandwidth_hz},
          {"formant_min_hz", d.formant_min_hz},
          {"formant_max_hz", d.formant_max_hz}};
}

void read_features(const ordered_json& j, RunConfig& c, std::optional<ordered_json>& spaces) {
  Reader r(j, "features");
  std::string source = std::string(source_name(c.source));
  r.read("source", source);
  c.source = parse_source(source);
  std::vector<std::string> groups;
  r.read("groups", groups);
  for (const auto& g : groups) {
    if (g == "all") {
      if (groups.size() != 1) throw ConfigError("features.groups: 'all' cannot be combined with other groups");
      continue;
    }
    c.groups.push_back(dsp::parse_group(g));
  }
  std::sort(c.groups.begin(), c.groups.end());
  c.groups.erase(std::unique(c.groups.begin(), c.groups.end()), c.groups.end());
  if (const auto* d = r.get("dsp")) read_dsp(*d, c.dsp);
  if (const auto* n = r.get("ngram")) {
    Reader nr(*n, "features.ngram");
    nr.read_opt("n_min", c.ngram.n_min);
    nr.read_opt("n_max", c.ngram.n_max);
    nr.read_opt("min_doc_freq", c.ngram.min_doc_freq);
    nr.read_opt("max_vocab", c.ngram.max_vocab);
    nr.read_opt("lowercase", c.ngram.lowercase);
    std::optional<std::string> w;
    nr.read_opt("weighting", w);
    if (w) c.ngram.weighting = parse_weighting(*w);
    nr.done();
  }
  // Present in canonical dumps; accepted when it agrees with the settings above.
  if (const auto* sp = r.get("ngram_spaces")) spaces = *sp;
  r.done();
}

std::vector<std::size_t> expand_range(std::size_t from, std::size_t to, std::size_t step) {
  if (step == 0 || from == 0 || to < from) throw ConfigError("sweep: need 1 <= n_from <= n_to and n_step >= 1");
  std::vector<std::size_t> ns;
  for (std::size_t n = from; n <= to; n += step) ns.push_back(n);
  return ns;
}

}  // namespace

std::string_view source_name(FeatureSource s) { return kSources[static_cast<int>(s)]; }

FeatureSource parse_source(std::string_view name) {
  for (int i = 0; i < 5; ++i)
    if (kSources[i] == name) return static_cast<FeatureSource>(i);
  throw ConfigError("unknown feature source '" + std::string(name) + "'");
}

RunConfig RunConfig::parse(std::string_view text) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const ordered_json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  RunConfig c;
  Reader r(j, "config");
  r.read("name", c.name);
  r.read("manifest", c.manifest);
  std::optional<ordered_json> spaces;
  if (const auto* f = r.get("features")) read_features(*f, c, spaces);

  if (const auto* b = r.get("balance")) {
    Reader br(*b, "balance");
    bool smote = false;
    balance::SmoteConfig sc;
    br.read("smote", smote);
    br.read("k", sc.k_neighbors);
    if (smote) c.pipeline.smote = sc;
    br.done();
  }
  if (const auto* s = r.get("selection"); s && !s->is_null()) {
    Reader sr(*s, "selection");
    eval::SelectionConfig sel;
    std::string method = "info_gain";
    sr.read("method", method);
    sel.method = select::parse_method(method);
    sr.read("n", sel.n);
    sr.read("bins", sel.bins);
    sr.read("relieff_k", sel.relief.k);
    sr.read("relieff_sample", sel.relief.sample_size);
    c.pipeline.selection = sel;
    sr.done();
  }
  if (const auto* s = r.get("sweep"); s && !s->is_null()) {
    Reader sr(*s, "sweep");
    SweepConfig sw;
    std::vector<std::string> methods{"info_gain", "chi_square", "relieff"};
    sr.read("methods", methods);
    for (const auto& m : methods) sw.methods.push_back(select::parse_method(m));
    sr.read("ns", sw.ns);
    std::optional<std::size_t> from, to, step;
    sr.read_opt("n_from", from);
    sr.read_opt("n_to", to);
    sr.read_opt("n_step", step);
    if (from || to || step) {
      if (!sw.ns.empty()) throw ConfigError("sweep: give either ns or n_from/n_to/n_step");
      if (!from || !to || !step) throw ConfigError("sweep: n_from, n_to and n_step go together");
      sw.ns = expand_range(*from, *to, *step);
    }
    c.sweep = sw;
    sr.done();
  }
  if (const auto* cl = r.get("classifier")) {
    Reader cr(*cl, "classifier");
    std::string kind = "svm";
    cr.read("kind", kind);
    c.pipeline.classifier = eval::parse_classifier(kind);
    cr.read("C", c.pipeline.svm.C);
    cr.read("tol", c.pipeline.svm.tol);
    cr.read("l2", c.pipeline.mlr.l2);
    cr.read("max_iter", c.pipeline.mlr.max_iter);
    cr.read("mlr_tol", c.pipeline.mlr.tol);
    cr.done();
  }
  if (const auto* p = r.get("protocol")) {
    Reader pr(*p, "protocol");
    std::string kind = "cv", prompt = "all";
    pr.read("kind", kind);
    if (kind == "cv") c.protocol = Protocol::cv;
    else if (kind == "cross_prompt") c.protocol = Protocol::cross_prompt;
    else throw ConfigError("protocol.kind must be cv or cross_prompt");
    pr.read("k", c.k);
    pr.read("prompt", prompt);
    if (prompt == "P1") c.prompt = corpus::Prompt::P1;
    else if (prompt == "P2") c.prompt = corpus::Prompt::P2;
    else if (prompt != "all") throw ConfigError("protocol.prompt must be all, P1 or P2");
    pr.done();
  }
  if (const auto* cp = r.get("compat")) {
    Reader cr(*cp, "compat");
    cr.read("smote_before_cv", c.pipeline.smote_before_cv);
    cr.read("select_once", c.pipeline.select_once);
    cr.done();
  }
  r.read("seed", c.seed);
  r.read("jobs", c.jobs);
  r.read("output_dir", c.output_dir);
  r.read("save_model", c.save_model);
  r.done();
  if (spaces && *spaces != ordered_json::parse(c.canonical_json()).at("features").at("ngram_spaces"))
    throw ConfigError("features.ngram_spaces disagrees with features.source and features.ngram");
  return c;
}

RunConfig RunConfig::load(const std::string& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const DataError&) {
    throw ConfigError("cannot read config file " + path);
  }
  return parse(text);
}

std::vector<text::NgramConfig> RunConfig::ngram_spaces() const {
  std::vector<text::NgramUnit> units;
  switch (source) {
    case FeatureSource::audio: return {};
    case FeatureSource::word_ngram: units = {text::NgramUnit::word}; break;
    case FeatureSource::char_across: units = {text::NgramUnit::char_across}; break;
    case FeatureSource::char_within: units = {text::NgramUnit::char_within}; break;
    case FeatureSource::combined: units = {text::NgramUnit::word, text::NgramUnit::char_across}; break;
  }
  std::vector<text::NgramConfig> out;
  for (auto u : units) {
    auto c = text::NgramConfig::defaults(u);
    if (ngram.n_min) c.n_min = *ngram.n_min;
    if (ngram.n_max) c.n_max = *ngram.n_max;
    if (ngram.min_doc_freq) c.min_doc_freq = *ngram.min_doc_freq;
    if (ngram.max_vocab) c.max_vocab = *ngram.max_vocab;
    if (ngram.lowercase) c.lowercase = *ngram.lowercase;
    if (ngram.weighting) c.weighting = *ngram.weighting;
    out.push_back(c);
  }
  return out;
}

std::string RunConfig::canonical_json(bool runtime, int indent) const {
  ordered_json j;
  j["name"] = name;
  j["manifest"] = manifest;
  ordered_json f;
  f["source"] = source_name(source);
  ordered_json groups = ordered_json::array();
  if (this->groups.empty()) groups.push_back("all");
  for (auto g : this->groups) groups.push_back(dsp::group_name(g));
  f["groups"] = groups;
  f["dsp"] = dsp_json(dsp);
  ordered_json spaces = ordered_json::array();
  for (const auto& s : ngram_spaces())
    spaces.push_back({{"unit", text::unit_name(s.unit)},
                      {"n_min", s.n_min},
                      {"n_max", s.n_max},
                      {"min_doc_freq", s.min_doc_freq},
                      {"max_vocab", s.max_vocab},
                      {"lowercase", s.lowercase},
                      {"weighting", weighting_name(s.weighting)}});
  ordered_json ov = ordered_json::object();
  if (ngram.n_min) ov["n_min"] = *ngram.n_min;
  if (ngram.n_max) ov["n_max"] = *ngram.n_max;
  if (ngram.min_doc_freq) ov["min_doc_freq"] = *ngram.min_doc_freq;
  if (ngram.max_vocab) ov["max_vocab"] = *ngram.max_vocab;
  if (ngram.lowercase) ov["lowercase"] = *ngram.lowercase;
  if (ngram.weighting) ov["weighting"] = weighting_name(*ngram.weighting);
  f["ngram"] = ov;
  f["ngram_spaces"] = spaces;
  j["features"] = f;
  j["balance"] = {{"smote", pipeline.smote.has_value()},
                  {"k", pipeline.smote ? pipeline.smote->k_neighbors : balance::SmoteConfig{}.k_neighbors}};
  if (pipeline.selection) {
    const auto& s = *pipeline.selection;
    j["selection"] = {{"method", select::method_name(s.method)},
                      {"n", s.n},
                      {"bins", s.bins},
                      {"relieff_k", s.relief.k},
                      {"relieff_sample", s.relief.sample_size}};
  } else {
    j["selection"] = nullptr;
  }
  if (sweep) {
    ordered_json methods = ordered_json::array();
    for (auto m : sweep->methods) methods.push_back(select::method_name(m));
    j["sweep"] = {{"methods", methods}, {"ns", sweep->ns}};
  } else {
    j["sweep"] = nullptr;
  }
  j["classifier"] = {{"kind", eval::classifier_name(pipeline.classifier)},
                     {"C", pipeline.svm.C},
                     {"tol", pipeline.svm.tol},
                     {"l2", pipeline.mlr.l2},
                     {"max_iter", pipeline.mlr.max_iter},
                     {"mlr_tol", pipeline.mlr.tol}};
  j["protocol"] = {{"kind", protocol == Protocol::cv ? "cv" : "cross_prompt"},
                   {"k", k},
                   {"prompt", prompt ? std::string(corpus::prompt_code(*prompt)) : std::string("all")}};
  j["compat"] = {{"smote_before_cv", pipeline.smote_before_cv}, {"select_once", pipeline.select_once}};
  j["seed"] = seed;
  j["save_model"] = save_model;
  if (runtime) {
    j["jobs"] = jobs;
    j["output_dir"] = output_dir;
  }
  return j.dump(indent);
}

std::string RunConfig::hash() const { return hex64(hash_string(canonical_json(false))); }

void RunConfig::validate() const {
  if (manifest.empty()) throw ConfigError("config: manifest path is required");
  if (k < 2) throw ConfigError("protocol.k must be >= 2");
  if (jobs < 1) throw ConfigError("jobs must be >= 1");
  if (output_dir.empty()) throw ConfigError("output_dir must not be empty");
  if (protocol == Protocol::cross_prompt && prompt)
    throw ConfigError("protocol.prompt cannot be combined with cross_prompt");
  if (text_source() && !groups.empty()) throw ConfigError("features.groups applies to audio features only");
  for (const auto& s : ngram_spaces()) s.validate();
  if (!text_source()) dsp.validate(dsp.target_rate);
  auto p = pipeline;
  p.seed = seed;
  p.validate(text_source());
  if (sweep) {
    if (text_source()) throw ConfigError("selection sweeps need audio features");
    if (sweep->methods.empty() || sweep->ns.empty()) throw ConfigError("sweep: methods and ns must be non-empty");
    for (auto n : sweep->ns)
      if (n < 1) throw ConfigError("sweep: N values must be >= 1");
  }
}

}  // namespace accentid::app
