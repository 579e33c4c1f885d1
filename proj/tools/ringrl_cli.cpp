// Command-line front end: seeded training runs, ablations, aggregation of run
// CSVs into summaries, and curve/plot emission.

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "ringrl/config_io.hpp"
#include "ringrl/harness.hpp"

namespace fs = std::filesystem;
using namespace ringrl;

namespace {

ExperimentConfig load_config_or_default(const std::string& path) {
  if (path.empty()) return ExperimentConfig{};
  return load_experiment_config(path);
}

void print_run_table(const std::vector<RunRecord>& records) {
  const Summary summary = aggregate(records);
  std::printf("%-16s %8s %14s %14s\n", "variant", "runs", "aulc_median", "aulc_mean");
  for (const auto& [name, vs] : summary.variants)
    std::printf("%-16s %8d %14.3f %14.3f\n", name.c_str(), vs.n_runs, vs.aulc_median,
                vs.aulc_mean);
}

int run_train(const std::string& config_path, const std::string& out_dir, int seeds,
              const std::string& variant) {
  ExperimentConfig cfg = load_config_or_default(config_path);
  if (seeds > 0) cfg.n_seeds = seeds;
  if (!variant.empty()) {
    const auto v = variant_from_name(variant);
    if (!v) throw std::invalid_argument("unknown variant: " + variant);
    cfg.variants = {*v};
  }
  const auto records = run_experiment(cfg, out_dir);
  int failed = 0;
  for (const auto& rec : records)
    if (rec.failed) {
      ++failed;
      std::cerr << "run failed: " << rec.variant << " seed " << rec.seed << ": "
                << rec.error << "\n";
    }
  std::vector<RunRecord> ok;
  for (const auto& rec : records)
    if (!rec.failed) ok.push_back(rec);
  if (!ok.empty()) print_run_table(ok);
  std::cout << "wrote " << ok.size() << " run CSVs and manifest.json to " << out_dir << "\n";
  return failed == 0 ? 0 : 1;
}

int run_ablate(const std::string& config_path, const std::string& mode,
               const std::string& out_dir, int seeds) {
  ExperimentConfig cfg = load_config_or_default(config_path);
  if (seeds > 0) cfg.n_seeds = seeds;
  if (mode == "random-ring")
    cfg.variants = {Variant::ring, Variant::ring_random_map};
  else if (mode == "no-kernel")
    cfg.variants = {Variant::rnn_ring, Variant::rnn_no_kernel};
  else
    throw std::invalid_argument("ablate mode must be 'random-ring' or 'no-kernel'");
  const auto records = run_experiment(cfg, out_dir);
  print_run_table(records);
  std::cout << "wrote " << records.size() << " run CSVs and manifest.json to " << out_dir
            << "\n";
  return 0;
}

int run_aggregate(const std::string& in_dir, const std::string& out_file) {
  std::vector<fs::path> csvs;
  for (const auto& entry : fs::directory_iterator(in_dir))
    if (entry.path().extension() == ".csv") csvs.push_back(entry.path());
  if (csvs.empty()) throw std::runtime_error("no run CSVs found in " + in_dir);
  std::sort(csvs.begin(), csvs.end());
  std::vector<RunRecord> records;
  records.reserve(csvs.size());
  for (const auto& path : csvs) records.push_back(parse_run_csv(path));
  const Summary summary = aggregate(records);
  write_summary(summary, out_file);
  print_run_table(records);
  std::cout << "wrote summary to " << out_file << "\n";
  return 0;
}

int run_plot(const std::string& in_file, const std::string& out_file) {
  const Summary summary = read_summary(in_file);
  fs::path csv_path(out_file);
  fs::path svg_path(out_file);
  if (csv_path.extension() == ".svg") {
    csv_path.replace_extension(".csv");
  } else {
    if (csv_path.extension() != ".csv") csv_path.replace_extension(".csv");
    svg_path.replace_extension(".svg");
  }
  emit_curves(summary, csv_path, svg_path);
  std::cout << "wrote " << csv_path.string() << " and " << svg_path.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ring-attractor action selection for value-based RL"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out;
  std::string variant;
  std::string mode;
  std::string in;
  int seeds = 0;

  CLI::App* train = app.add_subcommand("train", "run the configured variants over seeds");
  train->add_option("--config", config_path, "experiment config JSON");
  train->add_option("--out", out, "output directory")->required();
  train->add_option("--seeds", seeds, "override the number of seeds");
  train->add_option("--variant", variant, "restrict to a single variant");

  CLI::App* ablate = app.add_subcommand("ablate", "run an ablation pair");
  ablate->add_option("--config", config_path, "experiment config JSON");
  ablate->add_option("--mode", mode, "random-ring | no-kernel")->required();
  ablate->add_option("--out", out, "output directory")->required();
  ablate->add_option("--seeds", seeds, "override the number of seeds");

  CLI::App* agg = app.add_subcommand("aggregate", "fold run CSVs into a summary JSON");
  agg->add_option("--in", in, "directory of run CSVs")->required();
  agg->add_option("--out", out, "summary JSON path")->required();

  CLI::App* plot = app.add_subcommand("plot", "emit curve CSV and SVG from a summary");
  plot->add_option("--in", in, "summary JSON path")->required();
  plot->add_option("--out", out, "output path (.csv; .svg written alongside)")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed()) return run_train(config_path, out, seeds, variant);
    if (ablate->parsed()) return run_ablate(config_path, mode, out, seeds);
    if (agg->parsed()) return run_aggregate(in, out);
    if (plot->parsed()) return run_plot(in, out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
