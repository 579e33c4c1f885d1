#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "ringrl/agent.hpp"
#include "ringrl/config_io.hpp"
#include "ringrl/format.hpp"
#include "ringrl/gridworld.hpp"

namespace ringrl {

inline constexpr const char* kSchemaVersion = "0.1.0";
inline constexpr const char* kRunCsvHeader = "seed,variant,episode,steps,return,wallclock_ms";

struct EpisodeRow {
  int episode = 0;
  int steps = 0;
  double episode_return = 0.0;
  double wallclock_ms = 0.0;
};

struct RunRecord {
  int seed = 0;  // seed index within the experiment
  std::string variant;
  std::vector<EpisodeRow> rows;
  bool failed = false;
  std::string error;
  double duration_ms = 0.0;  // manifest only, never part of the CSV contract
};

inline std::string run_csv_filename(const std::string& variant, int seed) {
  return variant + "_seed" + std::to_string(seed) + ".csv";
}

// One (variant, seed) run: fresh env and agent, episodes_per_run episodes.
inline RunRecord run_single(const ExperimentConfig& cfg, Variant variant, int seed_index) {
  GridWorld env(cfg.env);
  const std::uint64_t run_seed = derive_seed(cfg.base_seed, variant_name(variant),
                                             static_cast<std::uint64_t>(seed_index));
  Agent agent(variant, cfg.agent, cfg.ring, cfg.rnn,
              ActionMapping::uniform(cfg.env.n_actions), env.state_dim(), run_seed);
  RunRecord rec;
  rec.seed = seed_index;
  rec.variant = variant_name(variant);
  rec.rows.reserve(static_cast<std::size_t>(cfg.episodes_per_run));
  for (int ep = 0; ep < cfg.episodes_per_run; ++ep) {
    const auto t0 = std::chrono::steady_clock::now();
    Eigen::VectorXd state = env.reset(run_seed);
    agent.begin_episode();
    double episode_return = 0.0;
    int steps = 0;
    while (true) {
      const int a = agent.select_action(state);
      const auto result = env.step(a);
      agent.observe(state, a, result.reward, result.state, result.done);
      episode_return += result.reward;
      ++steps;
      state = result.state;
      if (result.done) break;
    }
    double ms = 0.0;
    if (cfg.record_wallclock) {
      const auto t1 = std::chrono::steady_clock::now();
      ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
    }
    rec.rows.push_back(EpisodeRow{ep, steps, episode_return, ms});
  }
  return rec;
}

inline void write_run_csv(const RunRecord& rec, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  out << kRunCsvHeader << '\n';
  for (const EpisodeRow& row : rec.rows)
    out << rec.seed << ',' << rec.variant << ',' << row.episode << ',' << row.steps << ','
        << format_double(row.episode_return) << ',' << format_double(row.wallclock_ms)
        << '\n';
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

inline RunRecord parse_run_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open run CSV: " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kRunCsvHeader)
    throw std::invalid_argument("bad run CSV header in " + path.string());
  RunRecord rec;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (fields.size() != 6)
      throw std::invalid_argument("bad run CSV row in " + path.string() + ": " + line);
    if (first) {
      rec.seed = std::stoi(fields[0]);
      rec.variant = fields[1];
      first = false;
    }
    rec.rows.push_back(EpisodeRow{std::stoi(fields[2]), std::stoi(fields[3]),
                                  parse_double(fields[4]), parse_double(fields[5])});
  }
  return rec;
}

inline std::optional<std::string> git_describe() {
  FILE* pipe = ::popen("git describe --tags --always --dirty 2>/dev/null", "r");
  if (pipe == nullptr) return std::nullopt;
  std::string out;
  char buf[256];
  while (std::fgets(buf, sizeof(buf), pipe) != nullptr) out += buf;
  const int rc = ::pclose(pipe);
  while (!out.empty() && (out.back() == '\n' || out.back() == '\r')) out.pop_back();
  if (rc != 0 || out.empty()) return std::nullopt;
  return out;
}

// Runs every (variant, seed) pair, each writing its own CSV; scheduling is
// parallel but artifacts are identical to a sequential pass because every run
// owns its RNG and shares nothing mutable.
inline std::vector<RunRecord> run_experiment(const ExperimentConfig& cfg,
                                             const std::filesystem::path& out_dir) {
  cfg.validate();
  std::filesystem::create_directories(out_dir);
  {
    const auto probe = out_dir / ".writable";
    std::ofstream test(probe);
    if (!test) throw std::runtime_error("output directory not writable: " + out_dir.string());
    test.close();
    std::filesystem::remove(probe);
  }

  struct Task {
    Variant variant;
    int seed;
  };
  std::vector<Task> tasks;
  for (Variant v : cfg.variants)
    for (int s = 0; s < cfg.n_seeds; ++s) tasks.push_back({v, s});

  std::vector<RunRecord> records(tasks.size());
  std::atomic<std::size_t> next{0};
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const unsigned n_threads =
      std::min<std::size_t>(tasks.size(), cfg.jobs > 0 ? static_cast<unsigned>(cfg.jobs) : hw);

  auto worker = [&]() {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= tasks.size()) break;
      const Task& task = tasks[i];
      const auto t0 = std::chrono::steady_clock::now();
      RunRecord rec;
      try {
        rec = run_single(cfg, task.variant, task.seed);
      } catch (const numerical_error& e) {
        rec.seed = task.seed;
        rec.variant = variant_name(task.variant);
        rec.failed = true;
        rec.error = e.what();
      }
      const auto t1 = std::chrono::steady_clock::now();
      rec.duration_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
      if (!rec.failed) write_run_csv(rec, out_dir / run_csv_filename(rec.variant, rec.seed));
      records[i] = std::move(rec);
    }
  };

  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (unsigned t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  json runs = json::array();
  for (const RunRecord& rec : records) {
    json entry{{"variant", rec.variant},
               {"seed", rec.seed},
               {"status", rec.failed ? "failed" : "ok"},
               {"episodes", rec.rows.size()},
               {"duration_ms", rec.duration_ms}};
    if (rec.failed)
      entry["error"] = rec.error;
    else
      entry["csv"] = run_csv_filename(rec.variant, rec.seed);
    runs.push_back(std::move(entry));
  }
  json manifest{{"schema_version", kSchemaVersion},
                {"config", experiment_to_json(cfg)},
                {"runs", runs}};
  const auto described = git_describe();
  manifest["git_describe"] = described ? json(*described) : json(nullptr);
  std::ofstream mout(out_dir / "manifest.json", std::ios::binary);
  if (!mout) throw std::runtime_error("cannot write manifest in " + out_dir.string());
  mout << manifest.dump(2) << '\n';
  return records;
}

struct VariantSummary {
  std::vector<double> mean_return;    // per episode, across seeds
  std::vector<double> median_return;  // per episode, across seeds
  std::vector<double> aulc_per_seed;  // cumulative return per run, seed-ascending
  double aulc_mean = 0.0;
  double aulc_median = 0.0;
  int n_runs = 0;
};

struct Summary {
  int episodes = 0;
  std::map<std::string, VariantSummary> variants;
};

inline double median_of(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("median_of: empty input");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

// Per-variant learning-curve statistics across seeds. Permutation-invariant
// over the record list; failed records are rejected.
inline Summary aggregate(const std::vector<RunRecord>& records) {
  if (records.empty()) throw std::invalid_argument("aggregate: no records");
  Summary summary;
  summary.episodes = static_cast<int>(records.front().rows.size());
  std::map<std::string, std::vector<const RunRecord*>> by_variant;
  for (const RunRecord& rec : records) {
    if (rec.failed) throw std::invalid_argument("aggregate: record marked failed");
    if (static_cast<int>(rec.rows.size()) != summary.episodes)
      throw std::invalid_argument("aggregate: inconsistent episode counts");
    by_variant[rec.variant].push_back(&rec);
  }
  for (auto& [variant, runs] : by_variant) {
    std::sort(runs.begin(), runs.end(),
              [](const RunRecord* a, const RunRecord* b) { return a->seed < b->seed; });
    VariantSummary vs;
    vs.n_runs = static_cast<int>(runs.size());
    vs.mean_return.resize(static_cast<std::size_t>(summary.episodes));
    vs.median_return.resize(static_cast<std::size_t>(summary.episodes));
    for (int ep = 0; ep < summary.episodes; ++ep) {
      std::vector<double> values;
      values.reserve(runs.size());
      for (const RunRecord* rec : runs)
        values.push_back(rec->rows[static_cast<std::size_t>(ep)].episode_return);
      double sum = 0.0;
      for (double v : values) sum += v;
      vs.mean_return[static_cast<std::size_t>(ep)] = sum / static_cast<double>(values.size());
      vs.median_return[static_cast<std::size_t>(ep)] = median_of(values);
    }
    for (const RunRecord* rec : runs) {
      double aulc = 0.0;
      for (const EpisodeRow& row : rec->rows) aulc += row.episode_return;
      vs.aulc_per_seed.push_back(aulc);
    }
    double sum = 0.0;
    for (double v : vs.aulc_per_seed) sum += v;
    vs.aulc_mean = sum / static_cast<double>(vs.aulc_per_seed.size());
    vs.aulc_median = median_of(vs.aulc_per_seed);
    summary.variants[variant] = std::move(vs);
  }
  return summary;
}

inline json summary_to_json(const Summary& summary) {
  json variants = json::object();
  for (const auto& [name, vs] : summary.variants)
    variants[name] = json{{"mean", vs.mean_return},
                          {"median", vs.median_return},
                          {"aulc_per_seed", vs.aulc_per_seed},
                          {"aulc_mean", vs.aulc_mean},
                          {"aulc_median", vs.aulc_median},
                          {"n_runs", vs.n_runs}};
  return json{{"schema_version", kSchemaVersion},
              {"episodes", summary.episodes},
              {"variants", variants}};
}

inline Summary summary_from_json(const json& j) {
  Summary summary;
  summary.episodes = j.at("episodes").get<int>();
  for (const auto& item : j.at("variants").items()) {
    VariantSummary vs;
    vs.mean_return = item.value().at("mean").get<std::vector<double>>();
    vs.median_return = item.value().at("median").get<std::vector<double>>();
    vs.aulc_per_seed = item.value().at("aulc_per_seed").get<std::vector<double>>();
    vs.aulc_mean = item.value().at("aulc_mean").get<double>();
    vs.aulc_median = item.value().at("aulc_median").get<double>();
    vs.n_runs = item.value().at("n_runs").get<int>();
    summary.variants[item.key()] = std::move(vs);
  }
  return summary;
}

inline void write_summary(const Summary& summary, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write summary: " + path.string());
  out << summary_to_json(summary).dump(2) << '\n';
}

inline Summary read_summary(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open summary: " + path.string());
  json j;
  in >> j;
  return summary_from_json(j);
}

// Long-format curve CSV plus a minimal SVG chart of mean return per episode.
inline void emit_curves(const Summary& summary, const std::filesystem::path& csv_path,
                        const std::filesystem::path& svg_path) {
  {
    std::ofstream out(csv_path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write curves CSV: " + csv_path.string());
    out << "variant,episode,mean,median\n";
    for (const auto& [name, vs] : summary.variants)
      for (int ep = 0; ep < summary.episodes; ++ep)
        out << name << ',' << ep << ',' << format_double(vs.mean_return[static_cast<std::size_t>(ep)])
            << ',' << format_double(vs.median_return[static_cast<std::size_t>(ep)]) << '\n';
  }

  constexpr int kWidth = 900;
  constexpr int kHeight = 520;
  constexpr int kMarginLeft = 70;
  constexpr int kMarginRight = 160;
  constexpr int kMarginTop = 30;
  constexpr int kMarginBottom = 50;
  const double plot_w = kWidth - kMarginLeft - kMarginRight;
  const double plot_h = kHeight - kMarginTop - kMarginBottom;

  double lo = 0.0, hi = 1.0;
  bool first = true;
  for (const auto& [name, vs] : summary.variants)
    for (double v : vs.mean_return) {
      if (first) {
        lo = hi = v;
        first = false;
      }
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  if (hi - lo < 1e-12) hi = lo + 1.0;
  const double pad = 0.05 * (hi - lo);
  lo -= pad;
  hi += pad;

  const int episodes = std::max(1, summary.episodes);
  auto x_of = [&](int ep) {
    return kMarginLeft + plot_w * (episodes > 1 ? static_cast<double>(ep) / (episodes - 1) : 0.5);
  };
  auto y_of = [&](double v) { return kMarginTop + plot_h * (1.0 - (v - lo) / (hi - lo)); };

  static constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c",
                                             "#9467bd", "#ff7f0e", "#8c564b"};
  std::ofstream out(svg_path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write SVG: " + svg_path.string());
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
      << kHeight << "\" viewBox=\"0 0 " << kWidth << " " << kHeight << "\">\n"
      << "<rect width=\"" << kWidth << "\" height=\"" << kHeight << "\" fill=\"white\"/>\n"
      << "<line x1=\"" << kMarginLeft << "\" y1=\"" << kMarginTop + plot_h << "\" x2=\""
      << kMarginLeft + plot_w << "\" y2=\"" << kMarginTop + plot_h
      << "\" stroke=\"black\"/>\n"
      << "<line x1=\"" << kMarginLeft << "\" y1=\"" << kMarginTop << "\" x2=\"" << kMarginLeft
      << "\" y2=\"" << kMarginTop + plot_h << "\" stroke=\"black\"/>\n"
      << "<text x=\"" << kMarginLeft + plot_w / 2 << "\" y=\"" << kHeight - 12
      << "\" text-anchor=\"middle\" font-size=\"14\">episode</text>\n"
      << "<text x=\"18\" y=\"" << kMarginTop + plot_h / 2
      << "\" text-anchor=\"middle\" font-size=\"14\" transform=\"rotate(-90 18 "
      << kMarginTop + plot_h / 2 << ")\">mean return</text>\n"
      << "<text x=\"" << kMarginLeft - 8 << "\" y=\"" << format_fixed(y_of(hi - pad) + 4, 2)
      << "\" text-anchor=\"end\" font-size=\"12\">" << format_fixed(hi - pad, 3)
      << "</text>\n"
      << "<text x=\"" << kMarginLeft - 8 << "\" y=\"" << format_fixed(y_of(lo + pad) + 4, 2)
      << "\" text-anchor=\"end\" font-size=\"12\">" << format_fixed(lo + pad, 3)
      << "</text>\n";
  int idx = 0;
  for (const auto& [name, vs] : summary.variants) {
    const char* color = kPalette[idx % (sizeof(kPalette) / sizeof(kPalette[0]))];
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (int ep = 0; ep < summary.episodes; ++ep) {
      if (ep > 0) out << ' ';
      out << format_fixed(x_of(ep), 2) << ','
          << format_fixed(y_of(vs.mean_return[static_cast<std::size_t>(ep)]), 2);
    }
    out << "\"/>\n";
    const double ly = kMarginTop + 16.0 * (idx + 1);
    out << "<line x1=\"" << kMarginLeft + plot_w + 10 << "\" y1=\"" << format_fixed(ly - 4, 2)
        << "\" x2=\"" << kMarginLeft + plot_w + 34 << "\" y2=\"" << format_fixed(ly - 4, 2)
        << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n"
        << "<text x=\"" << kMarginLeft + plot_w + 40 << "\" y=\"" << format_fixed(ly, 2)
        << "\" font-size=\"12\">" << name << "</text>\n";
    ++idx;
  }
  out << "</svg>\n";
}

}  // namespace ringrl
