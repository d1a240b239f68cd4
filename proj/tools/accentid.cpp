// accentid: feature extraction, experiments and reports for L1 accent
// identification from speech and transcripts.

#include <CLI11.hpp>
#include <iostream>
#include <json.hpp>

#include "accentid/app.hpp"
#include "accentid/common.hpp"

namespace {

struct Overrides {
  std::string config_path;
  std::string manifest;
  std::string output;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> jobs;
  bool smote_before_cv = false;
  bool select_once = false;
  bool save_model = false;
};

void add_config_options(CLI::App* cmd, Overrides& o) {
  cmd->add_option("config", o.config_path, "Run configuration (JSON)")->required();
  cmd->add_option("--manifest", o.manifest, "Override the manifest path");
  cmd->add_option("-o,--output", o.output, "Override the output directory");
  cmd->add_option("--seed", o.seed, "Override the root seed");
  cmd->add_option("-j,--jobs", o.jobs, "Worker threads")->check(CLI::PositiveNumber);
}

accentid::app::RunConfig resolve(const Overrides& o) {
  auto cfg = accentid::app::RunConfig::load(o.config_path);
  if (!o.manifest.empty()) cfg.manifest = o.manifest;
  if (!o.output.empty()) cfg.output_dir = o.output;
  if (o.seed) cfg.seed = *o.seed;
  if (o.jobs) cfg.jobs = *o.jobs;
  if (o.smote_before_cv) cfg.pipeline.smote_before_cv = true;
  if (o.select_once) cfg.pipeline.select_once = true;
  if (o.save_model) cfg.save_model = true;
  cfg.validate();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Accent identification from speech features and transcript n-grams"};
  app.require_subcommand(1);

  Overrides extract_o, exp_o, sweep_o;
  auto* extract = app.add_subcommand("extract", "Extract audio features or transcript n-grams");
  add_config_options(extract, extract_o);

  auto* experiment = app.add_subcommand("experiment", "Run the configured evaluation protocol");
  add_config_options(experiment, exp_o);
  experiment->add_flag("--smote-before-cv", exp_o.smote_before_cv, "Oversample the whole dataset before folding");
  experiment->add_flag("--select-once", exp_o.select_once, "Select features once on the whole dataset");
  experiment->add_flag("--save-model", exp_o.save_model, "Also train on all rows and write model.json");

  auto* sweep = app.add_subcommand("sweep-select", "Accuracy over selection methods and top-N sizes");
  add_config_options(sweep, sweep_o);
  sweep->add_flag("--smote-before-cv", sweep_o.smote_before_cv, "Oversample the whole dataset before folding");

  std::vector<std::string> report_paths;
  bool detail = false;
  auto* report = app.add_subcommand("report", "Summarize report.json / sweep.json outputs");
  report->add_option("paths", report_paths, "Report files or output directories")->required();
  report->add_flag("--detail", detail, "Print per-class tables and confusion matrices");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*extract) return accentid::app::cmd_extract(resolve(extract_o), std::cout);
    if (*experiment) return accentid::app::cmd_experiment(resolve(exp_o), std::cout);
    if (*sweep) return accentid::app::cmd_sweep_select(resolve(sweep_o), std::cout);
    if (*report) return accentid::app::cmd_report(report_paths, detail, std::cout);
  } catch (const accentid::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const accentid::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const accentid::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 4;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
