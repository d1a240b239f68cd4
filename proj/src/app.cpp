#include "accentid/app.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <json.hpp>
#include <map>
#include <sstream>

#include "accentid/common.hpp"
#include "accentid/eval.hpp"

namespace accentid::app {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

std::string join_path(const std::string& dir, const std::string& file) { return (fs::path(dir) / file).string(); }

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.emplace_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

double parse_number(std::string_view s, std::size_t line) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw DataError("feature table: bad number '" + std::string(s) + "' at line " + std::to_string(line));
  return v;
}

std::vector<std::size_t> scope_rows(const RunConfig& cfg, const eval::Dataset& data) {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < data.size(); ++i)
    if (!cfg.prompt || data.prompts[i] == (*cfg.prompt == corpus::Prompt::P1 ? 0 : 1)) rows.push_back(i);
  if (rows.empty()) throw DataError("no instances for the requested prompt");
  return rows;
}

std::vector<std::string> load_transcripts(const corpus::CorpusManifest& m) {
  std::vector<std::string> docs;
  docs.reserve(m.size());
  for (const auto& inst : m.instances()) docs.push_back(m.load_transcript(inst));
  return docs;
}

std::unique_ptr<eval::FeatureProvider> build_features(const RunConfig& cfg, const corpus::CorpusManifest& m,
                                                      std::ostream& log) {
  check_inputs(cfg, m);
  if (cfg.text_source()) return std::make_unique<eval::TextFeatures>(load_transcripts(m), cfg.ngram_spaces());
  AudioTable t = load_or_extract_audio(cfg, m, log);
  if (!cfg.groups.empty()) t = t.restrict_groups(cfg.groups);
  return std::make_unique<eval::DenseFeatures>(std::move(t.X));
}

eval::PipelineConfig pipeline_of(const RunConfig& cfg) {
  auto p = cfg.pipeline;
  p.seed = cfg.seed;
  p.jobs = cfg.jobs;
  return p;
}

ordered_json envelope(const RunConfig& cfg, const char* format) {
  ordered_json j;
  j["format"] = format;
  j["name"] = cfg.name;
  j["config_hash"] = cfg.hash();
  j["seed"] = cfg.seed;
  j["config"] = ordered_json::parse(cfg.canonical_json());
  return j;
}

ordered_json report_node(const eval::EvaluationReport& r) { return ordered_json::parse(eval::report_json(r, -1)); }

std::string pct(double v) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(2) << 100.0 * v << "%";
  return os.str();
}

}  // namespace

AudioTable AudioTable::restrict_groups(const std::vector<dsp::FeatureGroup>& keep) const {
  std::vector<Eigen::Index> cols;
  for (std::size_t j = 0; j < groups.size(); ++j)
    if (std::find(keep.begin(), keep.end(), groups[j]) != keep.end()) cols.push_back(static_cast<Eigen::Index>(j));
  AudioTable out;
  out.ids = ids;
  out.X.resize(X.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t k = 0; k < cols.size(); ++k) {
    out.names.push_back(names[static_cast<std::size_t>(cols[k])]);
    out.groups.push_back(groups[static_cast<std::size_t>(cols[k])]);
    out.X.col(static_cast<Eigen::Index>(k)) = X.col(cols[k]);
  }
  return out;
}

std::string audio_table_csv(const AudioTable& t) {
  std::string out = "id";
  for (const auto& n : t.names) out += "," + n;
  out += "\n";
  for (std::size_t i = 0; i < t.ids.size(); ++i) {
    out += t.ids[i];
    for (Eigen::Index j = 0; j < t.X.cols(); ++j) {
      out += ',';
      out += format_double(t.X(static_cast<Eigen::Index>(i), j));
    }
    out += "\n";
  }
  return out;
}

AudioTable parse_audio_table_csv(std::string_view csv, const std::vector<dsp::FeatureGroup>& groups) {
  AudioTable t;
  std::vector<std::vector<double>> rows;
  std::size_t line_no = 0, pos = 0;
  while (pos < csv.size()) {
    auto end = csv.find('\n', pos);
    if (end == std::string_view::npos) end = csv.size();
    std::string_view line = csv.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (line.empty()) continue;
    auto cells = split_csv_line(line);
    if (line_no == 1) {
      if (cells.empty() || cells[0] != "id") throw DataError("feature table: header must start with id");
      t.names.assign(cells.begin() + 1, cells.end());
      continue;
    }
    if (cells.size() != t.names.size() + 1)
      throw DataError("feature table: wrong column count at line " + std::to_string(line_no));
    t.ids.push_back(cells[0]);
    std::vector<double> row;
    for (std::size_t j = 1; j < cells.size(); ++j) row.push_back(parse_number(cells[j], line_no));
    rows.push_back(std::move(row));
  }
  if (groups.size() != t.names.size()) throw DataError("feature table: group map does not match the columns");
  t.groups = groups;
  t.X.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(t.names.size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j) t.X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  return t;
}

std::string groups_json(const AudioTable& t, const std::string& stamp) {
  ordered_json g = ordered_json::object();
  for (int k = 0; k < dsp::kNumGroups; ++k) {
    const auto grp = static_cast<dsp::FeatureGroup>(k);
    std::vector<std::size_t> idx;
    for (std::size_t j = 0; j < t.groups.size(); ++j)
      if (t.groups[j] == grp) idx.push_back(j);
    if (!idx.empty()) g[std::string(dsp::group_name(grp))] = idx;
  }
  ordered_json j;
  j["stamp"] = stamp;
  j["num_features"] = t.names.size();
  j["groups"] = g;
  return j.dump(1) + "\n";
}

namespace {

std::vector<dsp::FeatureGroup> groups_from_json(std::string_view text, std::size_t width) {
  const auto j = ordered_json::parse(text);
  std::vector<dsp::FeatureGroup> out(width, dsp::FeatureGroup::energy_amplitude);
  std::vector<bool> seen(width, false);
  for (const auto& [name, idx] : j.at("groups").items())
    for (auto i : idx.get<std::vector<std::size_t>>()) {
      if (i >= width) throw DataError("group map index out of range");
      out[i] = dsp::parse_group(name);
      seen[i] = true;
    }
  if (std::find(seen.begin(), seen.end(), false) != seen.end()) throw DataError("group map leaves columns unassigned");
  return out;
}

}  // namespace

void check_inputs(const RunConfig& cfg, const corpus::CorpusManifest& m) {
  std::vector<std::string> problems;
  for (const auto& inst : m.instances()) {
    if (cfg.text_source()) {
      if (!inst.has_transcript()) problems.push_back(inst.id + " (no transcript)");
      else if (!fs::is_regular_file(m.resolve(inst.transcript_path)))
        problems.push_back(inst.id + " (" + m.resolve(inst.transcript_path) + ")");
    } else if (!fs::is_regular_file(m.audio_file(inst))) {
      problems.push_back(inst.id + " (" + m.audio_file(inst) + ")");
    }
  }
  if (problems.empty()) return;
  std::string msg = std::to_string(problems.size()) + (cfg.text_source() ? " transcript(s)" : " audio file(s)") +
                    " missing:";
  for (const auto& p : problems) msg += "\n  " + p;
  throw DataError(msg);
}

std::string input_stamp(const RunConfig& cfg, const corpus::CorpusManifest& m) {
  Fnv1a h;
  h.update(std::string_view("accentid-extract/1"));
  h.update(source_name(cfg.source));
  if (cfg.text_source()) {
    ordered_json spaces = ordered_json::parse(cfg.canonical_json()).at("features").at("ngram_spaces");
    h.update(spaces.dump());
  } else {
    h.update(ordered_json::parse(cfg.canonical_json()).at("features").at("dsp").dump());
    for (auto g : cfg.groups) h.update(dsp::group_name(g));
  }
  for (const auto& inst : m.instances()) {
    const std::string path = cfg.text_source() ? m.resolve(inst.transcript_path) : m.audio_file(inst);
    h.update(inst.id).update(path);
    std::error_code ec;
    const auto size = fs::file_size(path, ec);
    h.update(static_cast<std::uint64_t>(ec ? 0 : size));
    const auto mtime = fs::last_write_time(path, ec);
    h.update(static_cast<std::uint64_t>(ec ? 0 : mtime.time_since_epoch().count()));
  }
  return hex64(h.digest());
}

AudioTable extract_audio(const corpus::CorpusManifest& m, const dsp::DspConfig& dspc, unsigned jobs) {
  dspc.validate(dspc.target_rate);
  const auto& insts = m.instances();
  std::vector<dsp::FeatureVector> vecs(insts.size());
  parallel_for(insts.size(), jobs, [&](std::size_t i) {
    const auto clip = dsp::load_audio(m.audio_file(insts[i]), dspc.target_rate);
    try {
      vecs[i] = dsp::extract_audio_features(clip, dspc);
    } catch (const DataError& e) {
      throw DataError(insts[i].id + ": " + e.what());
    }
  });
  AudioTable t;
  if (vecs.empty()) throw DataError("manifest has no instances");
  t.names = vecs.front().names;
  t.groups = vecs.front().groups;
  t.X.resize(static_cast<Eigen::Index>(vecs.size()), static_cast<Eigen::Index>(t.names.size()));
  for (std::size_t i = 0; i < vecs.size(); ++i) {
    t.ids.push_back(insts[i].id);
    for (std::size_t j = 0; j < vecs[i].values.size(); ++j) {
      const double v = vecs[i].values[j];
      if (!std::isfinite(v)) throw NumericalError(insts[i].id + ": non-finite feature " + t.names[j]);
      t.X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
    }
  }
  return t;
}

std::string cache_dir(const RunConfig& cfg) {
  if (const char* env = std::getenv(kCacheEnv); env && *env) return env;
  return join_path(cfg.output_dir, ".cache");
}

AudioTable load_or_extract_audio(const RunConfig& cfg, const corpus::CorpusManifest& m, std::ostream& log) {
  RunConfig all = cfg;
  all.groups.clear();  // the cache always holds every group
  const std::string stamp = input_stamp(all, m);
  const std::string base = join_path(cache_dir(cfg), "audio-" + stamp);
  if (fs::is_regular_file(base + ".csv") && fs::is_regular_file(base + ".groups.json")) {
    const std::string csv = read_file(base + ".csv");
    const auto header_end = csv.find('\n');
    const std::size_t width = static_cast<std::size_t>(
        std::count(csv.begin(), csv.begin() + static_cast<std::ptrdiff_t>(header_end == std::string::npos ? csv.size() : header_end), ','));
    auto t = parse_audio_table_csv(csv, groups_from_json(read_file(base + ".groups.json"), width));
    if (t.ids == corpus::instance_ids(m)) {
      log << "using cached audio features " << base << ".csv\n";
      return t;
    }
  }
  log << "extracting audio features for " << m.size() << " instances\n";
  auto t = extract_audio(m, cfg.dsp, cfg.jobs);
  write_file_atomic(base + ".csv", audio_table_csv(t));
  write_file_atomic(base + ".groups.json", groups_json(t, stamp));
  return t;
}

// ---------------------------------------------------------------------------

int cmd_extract(const RunConfig& cfg, std::ostream& out) {
  cfg.validate();
  const auto m = corpus::parse_manifest(cfg.manifest);
  check_inputs(cfg, m);
  const std::string stamp = input_stamp(cfg, m);
  const std::string stamp_path = join_path(cfg.output_dir, "extract.stamp");
  std::vector<std::string> outputs;
  if (cfg.text_source()) {
    for (const auto& s : cfg.ngram_spaces()) {
      outputs.push_back(join_path(cfg.output_dir, "ngrams." + std::string(text::unit_name(s.unit)) + ".txt"));
      outputs.push_back(join_path(cfg.output_dir, "vocab." + std::string(text::unit_name(s.unit)) + ".tsv"));
    }
  } else {
    outputs.push_back(join_path(cfg.output_dir, "features.csv"));
  }
  outputs.push_back(join_path(cfg.output_dir, "groups.json"));
  bool fresh = fs::is_regular_file(stamp_path);
  for (const auto& o : outputs) fresh = fresh && fs::is_regular_file(o);
  if (fresh && read_file(stamp_path) == stamp + "\n") {
    out << "up to date (" << cfg.output_dir << ")\n";
    return 0;
  }

  if (cfg.text_source()) {
    const auto docs = load_transcripts(m);
    const auto ids = corpus::instance_ids(m);
    ordered_json spaces = ordered_json::array();
    std::size_t offset = 0;
    for (const auto& s : cfg.ngram_spaces()) {
      const std::vector<text::Vocabulary> vocab{text::fit_vocabulary(docs, s)};
      std::vector<text::SparseVector> rows;
      for (const auto& d : docs) rows.push_back(text::apply_weighting(text::vectorize(d, vocab[0]), vocab[0]));
      const std::string unit(text::unit_name(s.unit));
      write_file_atomic(join_path(cfg.output_dir, "ngrams." + unit + ".txt"),
                        text::serialize_sparse(ids, rows, vocab[0].size()));
      write_file_atomic(join_path(cfg.output_dir, "vocab." + unit + ".tsv"), text::serialize_vocabulary(vocab[0]));
      spaces.push_back({{"unit", unit}, {"offset", offset}, {"size", vocab[0].size()}});
      offset += vocab[0].size();
      out << unit << ": " << vocab[0].size() << " n-grams over " << docs.size() << " transcripts\n";
    }
    ordered_json j;
    j["stamp"] = stamp;
    j["num_features"] = offset;
    j["spaces"] = spaces;
    write_file_atomic(join_path(cfg.output_dir, "groups.json"), j.dump(1) + "\n");
  } else {
    AudioTable t = load_or_extract_audio(cfg, m, out);
    if (!cfg.groups.empty()) t = t.restrict_groups(cfg.groups);
    write_file_atomic(join_path(cfg.output_dir, "features.csv"), audio_table_csv(t));
    write_file_atomic(join_path(cfg.output_dir, "groups.json"), groups_json(t, stamp));
    out << "wrote " << t.ids.size() << " x " << t.names.size() << " features to "
        << join_path(cfg.output_dir, "features.csv") << "\n";
  }
  write_file_atomic(stamp_path, stamp + "\n");
  return 0;
}

int cmd_experiment(const RunConfig& cfg, std::ostream& out) {
  cfg.validate();
  if (cfg.sweep) throw ConfigError("config has a sweep section; use sweep-select");
  const auto m = corpus::parse_manifest(cfg.manifest);
  const auto data = eval::Dataset::from_manifest(m);
  const auto features = build_features(cfg, m, out);
  const auto pipeline = pipeline_of(cfg);
  const std::string hash = cfg.hash();

  ordered_json j = envelope(cfg, "accentid-report/1");
  std::string table;
  if (cfg.protocol == Protocol::cv) {
    const auto rows = scope_rows(cfg, data);
    const auto rep = eval::run_cv(data, *features, pipeline, cfg.k, rows);
    j["protocol"] = "cv";
    j["result"] = report_node(rep);
    table = eval::report_table(rep);
    out << "cv accuracy " << pct(rep.metrics.accuracy) << ", weighted F1 " << std::fixed << std::setprecision(4)
        << rep.metrics.weighted_f1 << "\n";
  } else {
    const auto rep = eval::run_cross_prompt(data, *features, pipeline, cfg.k);
    j["protocol"] = "cross_prompt";
    ordered_json r;
    r["cv_p1"] = report_node(rep.cv_p1);
    r["p1_to_p2"] = report_node(rep.p1_to_p2);
    r["cv_p2"] = report_node(rep.cv_p2);
    r["p2_to_p1"] = report_node(rep.p2_to_p1);
    r["delta_p1"] = rep.delta_p1();
    r["delta_p2"] = rep.delta_p2();
    j["results"] = r;
    table = "P1-CV " + pct(rep.cv_p1.metrics.accuracy) + "  Train:P1,Test:P2 " + pct(rep.p1_to_p2.metrics.accuracy) +
            "  P2-CV " + pct(rep.cv_p2.metrics.accuracy) + "  Train:P2,Test:P1 " +
            pct(rep.p2_to_p1.metrics.accuracy) + "\n\n== P1 cross-validation ==\n" + eval::report_table(rep.cv_p1) +
            "\n== train P1, test P2 ==\n" + eval::report_table(rep.p1_to_p2) + "\n== P2 cross-validation ==\n" +
            eval::report_table(rep.cv_p2) + "\n== train P2, test P1 ==\n" + eval::report_table(rep.p2_to_p1);
    out << table.substr(0, table.find('\n')) << "\n";
  }
  write_file_atomic(join_path(cfg.output_dir, "report.json"), j.dump(2) + "\n");
  write_file_atomic(join_path(cfg.output_dir, "report.txt"),
                    "config " + (cfg.name.empty() ? std::string("(unnamed)") : cfg.name) + "  hash " + hash +
                        "  seed " + std::to_string(cfg.seed) + "\n\n" + table);

  if (cfg.save_model) {
    const auto rows = scope_rows(cfg, data);
    auto model = eval::train_model(data, *features, pipeline, rows);
    ordered_json meta;
    meta["config_hash"] = hash;
    meta["seed"] = cfg.seed;
    ordered_json counts = ordered_json::object();
    for (auto r : rows) {
      const auto& name = data.class_names[static_cast<std::size_t>(data.labels[r])];
      counts[name] = counts.value(name, 0) + 1;
    }
    meta["training_class_counts"] = counts;
    model.metadata_json = meta.dump();
    model.config_json = ordered_json::parse(cfg.canonical_json()).at("classifier").dump();
    write_file_atomic(join_path(cfg.output_dir, "model.json"), learn::serialize_model(model));
  }
  out << "wrote " << join_path(cfg.output_dir, "report.json") << " (config " << hash << ")\n";
  return 0;
}

int cmd_sweep_select(const RunConfig& cfg, std::ostream& out) {
  cfg.validate();
  if (!cfg.sweep) throw ConfigError("sweep-select needs a sweep section in the config");
  if (cfg.protocol != Protocol::cv) throw ConfigError("sweep-select runs cross-validation only");
  const auto m = corpus::parse_manifest(cfg.manifest);
  auto data = eval::Dataset::from_manifest(m);
  check_inputs(cfg, m);
  AudioTable t = load_or_extract_audio(cfg, m, out);
  if (!cfg.groups.empty()) t = t.restrict_groups(cfg.groups);
  const auto rows = scope_rows(cfg, data);
  eval::Dataset sub;
  sub.class_names = data.class_names;
  Eigen::MatrixXd X(static_cast<Eigen::Index>(rows.size()), t.X.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    sub.ids.push_back(data.ids[rows[i]]);
    sub.labels.push_back(data.labels[rows[i]]);
    sub.prompts.push_back(data.prompts[rows[i]]);
    X.row(static_cast<Eigen::Index>(i)) = t.X.row(static_cast<Eigen::Index>(rows[i]));
  }
  const auto points = eval::run_selection_sweep(sub, eval::DenseFeatures(std::move(X)), pipeline_of(cfg),
                                                cfg.sweep->methods, cfg.sweep->ns, cfg.k);
  write_file_atomic(join_path(cfg.output_dir, "sweep.csv"), eval::sweep_csv(points));
  ordered_json j = envelope(cfg, "accentid-sweep/1");
  ordered_json pts = ordered_json::array();
  for (const auto& p : points)
    pts.push_back({{"method", select::method_name(p.method)}, {"N", p.n}, {"accuracy", p.accuracy}});
  j["points"] = pts;
  write_file_atomic(join_path(cfg.output_dir, "sweep.json"), j.dump(2) + "\n");
  for (auto method : cfg.sweep->methods) {
    const eval::SweepPoint* best = nullptr;
    for (const auto& p : points)
      if (p.method == method && (!best || p.accuracy > best->accuracy)) best = &p;
    out << select::method_name(method) << ": best " << pct(best->accuracy) << " at N=" << best->n << "\n";
  }
  out << "wrote " << join_path(cfg.output_dir, "sweep.csv") << " (" << points.size() << " points, config "
      << cfg.hash() << ")\n";
  return 0;
}

int cmd_report(const std::vector<std::string>& paths, bool detail, std::ostream& out) {
  if (paths.empty()) throw ConfigError("report: no input paths");
  std::vector<std::string> files;
  for (const auto& p : paths) {
    if (fs::is_directory(p)) {
      bool any = false;
      for (const char* f : {"report.json", "sweep.json"})
        if (fs::is_regular_file(join_path(p, f))) {
          files.push_back(join_path(p, f));
          any = true;
        }
      if (!any) throw DataError("report: no report.json or sweep.json in " + p);
    } else if (fs::is_regular_file(p)) {
      files.push_back(p);
    } else {
      throw DataError("report: no such file or directory " + p);
    }
  }
  std::ostringstream details;
  out << std::left << std::setw(28) << "config" << std::setw(18) << "hash" << "result\n";
  for (const auto& f : files) {
    ordered_json j;
    try {
      j = ordered_json::parse(read_file(f));
    } catch (const ordered_json::exception& e) {
      throw DataError("report: " + f + " is not valid JSON");
    }
    const std::string format = j.value("format", "");
    std::string name = j.value("name", "");
    if (name.empty()) name = fs::path(f).parent_path().filename().string();
    out << std::left << std::setw(28) << name << std::setw(18) << j.value("config_hash", "");
    if (format == "accentid-sweep/1") {
      std::map<std::string, std::pair<double, std::size_t>> best;
      for (const auto& p : j.at("points")) {
        const auto method = p.at("method").get<std::string>();
        const double acc = p.at("accuracy").get<double>();
        if (!best.count(method) || acc > best[method].first) best[method] = {acc, p.at("N").get<std::size_t>()};
      }
      for (const auto& [method, b] : best) out << method << " " << pct(b.first) << "@" << b.second << "  ";
      out << "\n";
    } else if (format == "accentid-report/1") {
      if (j.at("protocol") == "cv") {
        const auto r = eval::report_from_json(j.at("result").dump());
        out << "cv " << pct(r.metrics.accuracy) << "  wF1 " << std::fixed << std::setprecision(4)
            << r.metrics.weighted_f1 << "\n";
        if (detail) details << "\n== " << name << " ==\n" << eval::report_table(r);
      } else {
        const auto& r = j.at("results");
        const char* keys[] = {"cv_p1", "p1_to_p2", "cv_p2", "p2_to_p1"};
        const char* labels[] = {"P1-CV", "P1->P2", "P2-CV", "P2->P1"};
        for (int k = 0; k < 4; ++k) {
          const auto rep = eval::report_from_json(r.at(keys[k]).dump());
          out << labels[k] << " " << pct(rep.metrics.accuracy) << "  ";
          if (detail) details << "\n== " << name << " " << labels[k] << " ==\n" << eval::report_table(rep);
        }
        out << "\n";
      }
    } else {
      throw DataError("report: " + f + " has an unknown format");
    }
  }
  out << details.str();
  return 0;
}

}  // namespace accentid::app
