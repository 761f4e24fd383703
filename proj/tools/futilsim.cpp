#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "futilsim/config.hpp"
#include "futilsim/datagen.hpp"
#include "futilsim/engine.hpp"
#include "futilsim/error.hpp"
#include "futilsim/figures.hpp"
#include "futilsim/rng.hpp"
#include "futilsim/screening.hpp"
#include "futilsim/util.hpp"

namespace fs = futilsim;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitRuntime = 2;

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (ch == '"') {
        quoted = false;
      } else {
        cur += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return static_cast<int>(i);
    }
    return -1;
  }
};

Table read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw fs::Error(fs::ErrorCode::ConfigError, "cannot open data file '" + path + "'");
  Table t;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (first) {
      if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
      t.header = split_csv_line(line);
      first = false;
      continue;
    }
    if (line.empty()) continue;
    auto fields = split_csv_line(line);
    if (fields.size() != t.header.size()) {
      throw fs::Error(fs::ErrorCode::ConfigError, "row " + std::to_string(t.rows.size() + 2) + " of '" + path +
                                                      "' has " + std::to_string(fields.size()) + " fields, expected " +
                                                      std::to_string(t.header.size()));
    }
    t.rows.push_back(std::move(fields));
  }
  if (first) throw fs::Error(fs::ErrorCode::ConfigError, "data file '" + path + "' is empty");
  return t;
}

bool truthy(const std::string& v) { return v == "1" || v == "true" || v == "TRUE" || v == "True"; }

bool missing(const std::string& v) { return v.empty() || v == "NA"; }

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<int> parse_int_list(const std::string& s) {
  std::vector<int> out;
  for (const auto& item : split_list(s)) {
    std::size_t used = 0;
    int v = 0;
    try {
      v = std::stoi(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size()) throw fs::Error(fs::ErrorCode::ConfigError, "'" + item + "' is not an integer");
    out.push_back(v);
  }
  if (out.empty()) throw fs::Error(fs::ErrorCode::ConfigError, "empty integer list");
  return out;
}

int resolve_workers(int requested) { return requested > 0 ? requested : fs::default_workers(); }

void print_paths(const std::vector<std::filesystem::path>& paths) {
  for (const auto& p : paths) std::cout << p.string() << '\n';
}

int cmd_run(const std::string& config_path, const std::string& out, int workers, std::optional<std::uint64_t> seed) {
  fs::ScenarioConfig cfg;
  try {
    cfg = fs::load_config(config_path);
    if (seed) cfg.master_seed = *seed;
    fs::validate_config(cfg);
  } catch (const fs::Error& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  }
  const auto res = fs::run_scenario(cfg, {resolve_workers(workers)});
  print_paths(fs::write_outputs(res, out));
  if (res.n_errors > 0) {
    std::cerr << res.n_errors << " of " << res.rows.size() << " rows failed; see the error column of rows.csv\n";
    return kExitRuntime;
  }
  return kExitOk;
}

int cmd_tune(const std::string& config_path, const std::string& grid, int workers, const std::string& out) {
  fs::ScenarioConfig cfg;
  std::vector<int> cutoffs;
  try {
    cfg = fs::load_config(config_path);
    fs::validate_config(cfg);
    cutoffs = parse_int_list(grid);
  } catch (const fs::Error& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  }
  const auto curve = fs::tune_hybrid_cutoff(cfg, cutoffs, {resolve_workers(workers)});
  std::ostringstream csv;
  csv << "cutoff,distance,argmin\n";
  for (std::size_t i = 0; i < curve.cutoffs.size(); ++i) {
    csv << curve.cutoffs[i] << ',' << fs::format_double(curve.distances[i]) << ',' << curve.argmin << '\n';
  }
  if (out.empty()) {
    std::cout << csv.str();
  } else {
    std::filesystem::create_directories(out);
    const auto p = std::filesystem::path(out) / "cutoff_curve.csv";
    std::ofstream os(p, std::ios::binary);
    os << csv.str();
    if (!os) throw fs::Error(fs::ErrorCode::IoError, "cannot write '" + p.string() + "'");
    std::cout << p.string() << '\n';
  }
  std::cerr << "argmin cutoff " << curve.argmin << "; naive W1 " << fs::format_double(curve.naive_distance)
            << "; model W1 " << fs::format_double(curve.model_distance) << '\n';
  return kExitOk;
}

int cmd_screen(const std::string& data, const std::string& ia_col, const std::string& vars, int b, double alpha,
               std::uint64_t seed, bool bonferroni, const std::string& id_col, const std::string& baseline_col) {
  Table t;
  std::vector<std::string> candidates;
  int ia_idx = -1, id_idx = -1, base_idx = -1;
  try {
    t = read_csv(data);
    candidates = split_list(vars);
    if (candidates.empty()) throw fs::Error(fs::ErrorCode::ConfigError, "--vars is empty");
    ia_idx = t.column(ia_col);
    if (ia_idx < 0) throw fs::Error(fs::ErrorCode::ConfigError, "no column '" + ia_col + "' in " + data);
    id_idx = t.column(id_col);
    base_idx = t.column(baseline_col);
    if (b < 1) throw fs::Error(fs::ErrorCode::ConfigError, "--b must be >= 1");
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw fs::Error(fs::ErrorCode::ConfigError, "--alpha must lie in [0, 1]");
  } catch (const fs::Error& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  }

  // Rows without baseline data are dropped; IA rows always count as available.
  std::vector<int> ids, ia_ids;
  std::vector<std::size_t> kept;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const bool in_ia = truthy(t.rows[r][ia_idx]);
    const bool available = in_ia || base_idx < 0 || truthy(t.rows[r][base_idx]);
    if (!available) continue;
    const int id = id_idx >= 0 ? std::stoi(t.rows[r][id_idx]) : static_cast<int>(r);
    ids.push_back(id);
    kept.push_back(r);
    if (in_ia) ia_ids.push_back(id);
  }
  fs::BaselineFrame frame(ids);
  for (const auto& v : candidates) {
    const int col = t.column(v);
    if (col < 0) continue;  // reported as VariableMissing by the screen
    std::set<std::string> levels;
    for (std::size_t r : kept) {
      if (!missing(t.rows[r][col])) levels.insert(t.rows[r][col]);
    }
    std::map<std::string, int> code;
    for (const auto& l : levels) code.emplace(l, static_cast<int>(code.size()));
    std::vector<int> codes;
    for (std::size_t r : kept) codes.push_back(missing(t.rows[r][col]) ? -1 : code.at(t.rows[r][col]));
    frame.add_variable(v, std::move(codes));
  }
  const auto res = fs::screen_stratifiers(frame, ia_ids, candidates, alpha, b, seed, bonferroni);
  std::cout << "variable,observed_stat,p_value,B,selected\n";
  for (const auto& [name, pr] : res.tests) {
    const bool sel = std::find(res.selected.begin(), res.selected.end(), name) != res.selected.end();
    std::cout << name << ',' << fs::format_double(pr.observed_stat) << ',' << fs::format_double(pr.p_value) << ','
              << pr.B << ',' << (sel ? 1 : 0) << '\n';
  }
  return kExitOk;
}

int cmd_cohort(const std::string& config_path, const std::string& out, int shift, int replicate) {
  fs::ScenarioConfig cfg;
  fs::ValidatedDesign vd;
  try {
    cfg = fs::load_config(config_path);
    vd = fs::validate_config(cfg);
    if (shift < 0 || shift >= static_cast<int>(cfg.shift_grid.size())) {
      throw fs::Error(fs::ErrorCode::ConfigError, "--shift is out of range");
    }
    if (replicate < 0) throw fs::Error(fs::ErrorCode::ConfigError, "--replicate must be >= 0");
  } catch (const fs::Error& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  }
  // Same streams as the replication engine for (shift, replicate).
  const auto seed = fs::child_seed(fs::child_seed(cfg.master_seed, fs::StreamTag::Cell, static_cast<std::uint64_t>(shift)),
                                   fs::StreamTag::Replicate, static_cast<std::uint64_t>(replicate));
  const auto cohort = fs::generate_cohort(vd, fs::child_seed(seed, fs::StreamTag::Cohort, 0));
  const auto ia = fs::select_ia_subset(cohort, cfg.shift_grid[static_cast<std::size_t>(shift)], 0);
  const auto baseline = fs::select_baseline_available(cohort, ia, cfg.baseline_fraction_grid.front(),
                                                      fs::child_seed(seed, fs::StreamTag::Baseline, 0),
                                                      cfg.baseline_remainder);
  const auto records = fs::flagged_records(cohort, ia, &baseline);
  std::ofstream os(out, std::ios::binary | std::ios::trunc);
  if (!os) throw fs::Error(fs::ErrorCode::IoError, "cannot write '" + out + "'");
  fs::write_cohort_csv(os, records);
  os.close();
  if (!os) throw fs::Error(fs::ErrorCode::IoError, "failed writing '" + out + "'");
  std::cout << out << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"futilsim: interim population-shift simulation and post-stratification toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", fs::kVersion);

  int workers = 0;
  std::string config_path, out;

  auto* run = app.add_subcommand("run", "Run a scenario config and write rows, aggregates and provenance");
  std::uint64_t seed_value = 0;
  run->add_option("--config", config_path, "Scenario config (JSON)")->required();
  run->add_option("--out", out, "Output directory")->required();
  run->add_option("--workers", workers, "Worker threads (default: FUTILSIM_WORKERS or all cores)")->check(CLI::PositiveNumber);
  auto* seed_opt = run->add_option("--seed", seed_value, "Override the config's master seed");

  auto* tune = app.add_subcommand("tune-cutoff", "Wasserstein curve of the hybrid estimator over cutoffs");
  std::string grid = "0,5,10,20,50,100";
  std::string tune_out;
  tune->add_option("--config", config_path, "Scenario config (JSON)")->required();
  tune->add_option("--grid", grid, "Comma-separated cutoffs")->capture_default_str();
  tune->add_option("--workers", workers, "Worker threads")->check(CLI::PositiveNumber);
  tune->add_option("--out", tune_out, "Write cutoff_curve.csv here instead of stdout");

  auto* screen = app.add_subcommand("screen", "Permutation chi-square screen for shifted baseline variables");
  std::string data, ia_col = "in_ia", vars, id_col = "id", baseline_col = "baseline_available";
  int b = fs::kDefaultPermutations;
  double alpha = 0.05;
  std::uint64_t screen_seed = 1;
  bool bonferroni = false;
  screen->add_option("--data", data, "CSV with one row per patient")->required();
  screen->add_option("--ia-col", ia_col, "Column flagging interim patients (1/0)")->capture_default_str();
  screen->add_option("--vars", vars, "Comma-separated candidate variables")->required();
  screen->add_option("--b", b, "Number of subsamples")->capture_default_str();
  screen->add_option("--alpha", alpha, "Selection level")->capture_default_str();
  screen->add_option("--seed", screen_seed, "Random seed")->capture_default_str();
  screen->add_flag("--bonferroni", bonferroni, "Divide alpha by the number of candidates");
  screen->add_option("--id-col", id_col, "Patient id column (row index if absent)")->capture_default_str();
  screen->add_option("--baseline-col", baseline_col, "Column flagging available baseline data")->capture_default_str();

  auto* reproduce = app.add_subcommand("reproduce", "Write the data behind a figure");
  std::string figure;
  int replicates = 0;
  reproduce->add_option("figure", figure, "fig1|fig2|fig5|fig6|fig7|fig8|fig9")->required();
  reproduce->add_option("--out", out, "Output directory")->required();
  reproduce->add_option("--workers", workers, "Worker threads")->check(CLI::PositiveNumber);
  reproduce->add_option("--replicates", replicates, "Override the preset replicate count")->check(CLI::PositiveNumber);

  auto* curves = app.add_subcommand("curves", "Analytic curves");
  std::string curve_kind;
  curves->add_option("kind", curve_kind, "shrinkage")->required()->check(CLI::IsMember({"shrinkage"}));
  curves->add_option("--out", out, "Output directory")->required();

  auto* cohort = app.add_subcommand("cohort", "Dump one simulated cohort with IA and baseline flags as CSV");
  int shift_index = 0, replicate_index = 0;
  std::string cohort_out;
  cohort->add_option("--config", config_path, "Scenario config (JSON)")->required();
  cohort->add_option("--out", cohort_out, "Output CSV file")->required();
  cohort->add_option("--shift", shift_index, "Shift grid index")->capture_default_str();
  cohort->add_option("--replicate", replicate_index, "Replicate index")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*run) {
      std::optional<std::uint64_t> seed;
      if (*seed_opt) seed = seed_value;
      return cmd_run(config_path, out, workers, seed);
    }
    if (*tune) return cmd_tune(config_path, grid, workers, tune_out);
    if (*screen) {
      return cmd_screen(data, ia_col, vars, b, alpha, screen_seed, bonferroni, id_col, baseline_col);
    }
    if (*reproduce) {
      fs::FigureId id;
      try {
        id = fs::parse_figure_id(figure);
      } catch (const fs::Error& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
      }
      fs::ReproduceOptions opt;
      opt.run.workers = resolve_workers(workers);
      if (replicates > 0) opt.replicates = replicates;
      print_paths(fs::reproduce_figure(id, out, opt));
      return kExitOk;
    }
    if (*curves) {
      print_paths(fs::write_shrinkage_curves(out));
      return kExitOk;
    }
    if (*cohort) return cmd_cohort(config_path, cohort_out, shift_index, replicate_index);
  } catch (const fs::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.code() == fs::ErrorCode::ConfigError ? kExitConfig : kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitOk;
}
