// panelsim: reproduces the mixing-curve and hitting-time tables, runs seeded
// panel simulations from flat config files, and fits expert calibration from
// scored-round CSVs. Every command writes a manifest.json with the fully
// resolved configuration; re-running from that configuration reproduces the
// outputs byte for byte.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "panel/csv.hpp"
#include "panel/design.hpp"
#include "panel/equilibrium.hpp"
#include "panel/estimation.hpp"
#include "panel/rng.hpp"
#include "panel/sim.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kToolVersion = "panelsim 1.0.0";

// Usage errors exit with 1, data errors with 2.
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string full(double v) { return panel::format_number(v, 17); }

// ---------------------------------------------------------------------------
// Flat key=value configuration files ('#' starts a comment). Unknown keys are
// rejected so a manifest always describes the full effective configuration.

using ConfigMap = std::map<std::string, std::string>;

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t");
  const auto end = s.find_last_not_of(" \t");
  if (begin == std::string::npos) return "";
  return s.substr(begin, end - begin + 1);
}

ConfigMap load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw DataError("cannot read config file: " + path);
  }
  ConfigMap kv;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    const std::string stripped = trim(line);
    if (stripped.empty()) continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw DataError(path + ":" + std::to_string(line_no) + ": expected key=value");
    }
    kv[trim(stripped.substr(0, eq))] = trim(stripped.substr(eq + 1));
  }
  return kv;
}

void reject_unknown_keys(const ConfigMap& kv, const std::set<std::string>& allowed,
                         const std::string& source) {
  for (const auto& [key, value] : kv) {
    (void)value;
    if (!allowed.count(key)) {
      throw DataError(source + ": unknown configuration key '" + key + "'");
    }
  }
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw DataError("config key '" + key + "': cannot parse number '" + value + "'");
  }
}

long long parse_int(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const long long v = std::stoll(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw DataError("config key '" + key + "': cannot parse integer '" + value + "'");
  }
}

std::vector<double> parse_double_list(const std::string& key, const std::string& value) {
  std::vector<double> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    out.push_back(parse_double(key, trim(item)));
  }
  return out;
}

// Applies config-file values underneath any explicitly passed flags.
struct Resolver {
  const ConfigMap& file;
  const CLI::App* app;
  ConfigMap resolved;

  bool flag_given(const std::string& flag) const {
    return app->count(flag) > 0;
  }

  double number(const std::string& key, const std::string& flag, double current) {
    const auto it = file.find(key);
    const double v =
        (it != file.end() && !flag_given(flag)) ? parse_double(key, it->second) : current;
    resolved[key] = full(v);
    return v;
  }

  long long integer(const std::string& key, const std::string& flag, long long current) {
    const auto it = file.find(key);
    const long long v =
        (it != file.end() && !flag_given(flag)) ? parse_int(key, it->second) : current;
    resolved[key] = std::to_string(v);
    return v;
  }

  std::string text(const std::string& key, const std::string& flag, std::string current) {
    const auto it = file.find(key);
    if (it != file.end() && !flag_given(flag)) current = it->second;
    resolved[key] = current;
    return current;
  }
};

// ---------------------------------------------------------------------------
// Run manifests.

void write_manifest(const fs::path& out_dir, const std::string& command,
                    const ConfigMap& resolved, const std::vector<std::string>& outputs,
                    double duration_seconds, const std::string& warning = "") {
  json manifest;
  manifest["command"] = command;
  manifest["tool"] = kToolVersion;
  manifest["rng"] = panel::kRngVersion;
  manifest["config"] = resolved;
  manifest["outputs"] = outputs;
  manifest["duration_seconds"] = duration_seconds;
  if (!warning.empty()) manifest["warning"] = warning;
  std::ofstream out(out_dir / "manifest.json", std::ios::binary);
  if (!out) {
    throw DataError("cannot write manifest in " + out_dir.string());
  }
  out << manifest.dump(2) << "\n";
}

fs::path prepare_out_dir(const std::string& out) {
  fs::path dir = out.empty() ? fs::path(".") : fs::path(out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) {
    throw DataError("cannot create output directory: " + dir.string());
  }
  return dir;
}

// ---------------------------------------------------------------------------
// mixing-curves

struct MixingOptions {
  double p_low = 0.6;
  double p_high = 0.8;
  double q = 0.5;
  double grid_start = 0.05;
  double grid_stop = 0.95;
  double grid_step = 0.005;
  bool full_precision = false;
  std::string out;
  std::string config_path;
};

int cmd_mixing_curves(MixingOptions& opt, const CLI::App* app) {
  const auto t0 = std::chrono::steady_clock::now();
  const ConfigMap file = opt.config_path.empty() ? ConfigMap{} : load_config(opt.config_path);
  reject_unknown_keys(file,
                      {"p_low", "p_high", "q", "grid_start", "grid_stop", "grid_step",
                       "full_precision"},
                      "mixing-curves config");
  Resolver resolve{file, app, {}};
  opt.p_low = resolve.number("p_low", "--p-low", opt.p_low);
  opt.p_high = resolve.number("p_high", "--p-high", opt.p_high);
  opt.q = resolve.number("q", "--q", opt.q);
  opt.grid_start = resolve.number("grid_start", "--grid-start", opt.grid_start);
  opt.grid_stop = resolve.number("grid_stop", "--grid-stop", opt.grid_stop);
  opt.grid_step = resolve.number("grid_step", "--grid-step", opt.grid_step);
  opt.full_precision =
      resolve.integer("full_precision", "--full-precision", opt.full_precision ? 1 : 0) != 0;

  if (!(opt.grid_start > 0.0 && opt.grid_stop < 1.0 && opt.grid_start < opt.grid_stop &&
        opt.grid_step > 0.0)) {
    throw DataError("mixing-curves: grid must lie strictly inside (0,1) with a positive step");
  }
  const int digits = opt.full_precision ? 17 : 9;

  const fs::path dir = prepare_out_dir(opt.out);
  panel::CsvWriter csv((dir / "mixing_curves.csv").string());
  csv.write_row({"lambda", "alpha_baseline", "alpha_q", "beta_baseline", "beta_q"});

  const int n_rows =
      static_cast<int>(std::floor((opt.grid_stop - opt.grid_start) / opt.grid_step + 0.5)) + 1;
  for (int k = 0; k < n_rows; ++k) {
    const double lambda = opt.grid_start + k * opt.grid_step;
    std::vector<std::string> row(5);
    row[0] = panel::format_number(lambda, digits);
    if (std::abs(lambda - 0.5) > panel::kHalfBeliefTol) {
      const panel::MixSpec mix = panel::low_mixing(lambda, opt.p_low, opt.p_high);
      const panel::MixSpec eff = panel::effective_mixing(mix, opt.q);
      if (mix.side == panel::MixSide::MixAfterS1) {
        row[1] = panel::format_number(mix.prob, digits);
        row[2] = panel::format_number(eff.prob, digits);
      } else {
        row[3] = panel::format_number(mix.prob, digits);
        row[4] = panel::format_number(eff.prob, digits);
      }
    }
    csv.write_row(row);
  }

  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_manifest(dir, "mixing-curves", resolve.resolved, {"mixing_curves.csv"}, seconds);
  return 0;
}

// ---------------------------------------------------------------------------
// hitting-times

struct HittingOptions {
  double p_low = 0.6;
  double p_high = 0.8;
  int n_experts = 10;
  double lambda0 = 0.4;
  double lambda_hit = 0.8;
  double rho = 0.5;
  std::string q_list = "0,0.25,0.5,0.75,1";
  bool full_precision = false;
  std::string out;
  std::string config_path;
};

int cmd_hitting_times(HittingOptions& opt, const CLI::App* app) {
  const auto t0 = std::chrono::steady_clock::now();
  const ConfigMap file = opt.config_path.empty() ? ConfigMap{} : load_config(opt.config_path);
  reject_unknown_keys(file,
                      {"p_low", "p_high", "n_experts", "lambda0", "lambda_hit", "rho", "q_list",
                       "full_precision"},
                      "hitting-times config");
  Resolver resolve{file, app, {}};
  opt.p_low = resolve.number("p_low", "--p-low", opt.p_low);
  opt.p_high = resolve.number("p_high", "--p-high", opt.p_high);
  opt.n_experts = static_cast<int>(resolve.integer("n_experts", "--n-experts", opt.n_experts));
  opt.lambda0 = resolve.number("lambda0", "--lambda0", opt.lambda0);
  opt.lambda_hit = resolve.number("lambda_hit", "--lambda-hit", opt.lambda_hit);
  opt.rho = resolve.number("rho", "--rho", opt.rho);
  opt.q_list = resolve.text("q_list", "--q-list", opt.q_list);
  opt.full_precision =
      resolve.integer("full_precision", "--full-precision", opt.full_precision ? 1 : 0) != 0;
  const int digits = opt.full_precision ? 17 : 9;

  const std::vector<double> qs = parse_double_list("q_list", opt.q_list);
  if (qs.empty()) {
    throw DataError("hitting-times: q_list is empty");
  }

  const panel::MixSpec mix = panel::low_mixing(opt.lambda0, opt.p_low, opt.p_high);
  const double d_mix = panel::panel_kl(opt.lambda0, opt.rho, opt.p_low, opt.p_high, mix);
  const double d_truth =
      panel::panel_kl(opt.lambda0, opt.rho, opt.p_low, opt.p_high, panel::MixSpec::truthful());
  std::cout << "D_mix=" << panel::format_number(d_mix, 6) << "\n";
  std::cout << "D_truth=" << panel::format_number(d_truth, 6) << "\n";

  const fs::path dir = prepare_out_dir(opt.out);
  panel::CsvWriter csv((dir / "hitting_times.csv").string());
  csv.write_row({"q", "E_tau"});
  for (double q : qs) {
    const double e_tau = panel::hitting_time_approx(opt.lambda0, opt.lambda_hit, opt.n_experts, q,
                                                    d_mix, d_truth);
    csv.write_row({panel::format_number(q, digits), panel::format_number(e_tau, digits)});
  }

  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_manifest(dir, "hitting-times", resolve.resolved, {"hitting_times.csv"}, seconds);
  return 0;
}

// ---------------------------------------------------------------------------
// simulate

struct SimulateOptions {
  std::string config_path;
  std::string out;
  long long seed = -1;  // -1: take the config value
  int threads = 1;
  bool full_precision = false;
};

panel::SimConfig build_sim_config(const ConfigMap& file, ConfigMap& resolved,
                                  std::string* trajectories_mode) {
  auto text_of = [&](const std::string& key, const std::string& fallback) {
    const auto it = file.find(key);
    const std::string v = it == file.end() ? fallback : it->second;
    resolved[key] = v;
    return v;
  };
  auto number_of = [&](const std::string& key, double fallback) {
    const auto it = file.find(key);
    const double v = it == file.end() ? fallback : parse_double(key, it->second);
    resolved[key] = full(v);
    return v;
  };
  auto int_of = [&](const std::string& key, long long fallback) {
    const auto it = file.find(key);
    const long long v = it == file.end() ? fallback : parse_int(key, it->second);
    resolved[key] = std::to_string(v);
    return v;
  };

  panel::SimConfig config;
  const std::string mode = text_of("mode", "binary");
  if (mode == "binary") {
    config.mode = panel::SimMode::Binary;
  } else if (mode == "gaussian") {
    config.mode = panel::SimMode::Gaussian;
  } else {
    throw DataError("config key 'mode': expected binary or gaussian");
  }

  config.params.p_low = number_of("p_low", 0.6);
  config.params.p_high = number_of("p_high", 0.8);
  config.params.prior_high = number_of("prior_high", 0.5);
  config.params.n_experts = static_cast<int>(int_of("n_experts", 10));
  config.params.true_state = static_cast<int>(int_of("theta", 1));
  config.params.lambda0 = number_of("lambda0", 0.4);
  config.horizon = static_cast<int>(int_of("horizon", 500));
  config.n_replications = static_cast<int>(int_of("replications", 1));
  config.seed = static_cast<std::uint64_t>(int_of("seed", 12345));
  config.topics = static_cast<int>(int_of("topics", 1));
  config.state_mean0 = number_of("m0", 0.0);
  config.state_var0 = number_of("v0", 1.0);
  config.theta_value = number_of("theta_value", 1.0);
  config.smoothing_eps = number_of("smoothing_eps", 0.05);

  config.design.eval_density = number_of("q", 0.0);
  config.design.penalty = number_of("kappa", 0.0);
  config.design.tilt_cost = number_of("tilt_cost", 0.0);
  config.design.eval_weight = number_of("eval_weight", 1.0);
  const std::string score = text_of("score", "log");
  if (score == "log") {
    config.design.score = panel::ScoreKind::LogScore;
  } else if (score == "brier") {
    config.design.score = panel::ScoreKind::BrierScore;
  } else if (score == "none") {
    config.design.score = panel::ScoreKind::None;
  } else {
    throw DataError("config key 'score': expected log, brier or none");
  }

  const std::string schedule = text_of("schedule", "deterministic");
  if (schedule == "deterministic") {
    config.schedule = panel::EvalSchedule::Deterministic;
  } else if (schedule == "bernoulli") {
    config.schedule = panel::EvalSchedule::Bernoulli;
  } else {
    throw DataError("config key 'schedule': expected deterministic or bernoulli");
  }

  const std::string scored_tilt = text_of("scored_tilt", "truthful");
  if (scored_tilt == "truthful") {
    config.scored_tilt = panel::ScoredTilt::Truthful;
  } else if (scored_tilt == "continuous") {
    config.scored_tilt = panel::ScoredTilt::Continuous;
  } else {
    throw DataError("config key 'scored_tilt': expected truthful or continuous");
  }

  const std::string bias = text_of("bias", "");
  if (!bias.empty()) {
    config.bias = parse_double_list("bias", bias);
  }
  const std::string types = text_of("types", "");
  if (!types.empty()) {
    std::stringstream ss(types);
    std::string item;
    while (std::getline(ss, item, ',')) {
      const std::string token = trim(item);
      if (token == "H") {
        config.forced_types.push_back(panel::ExpertType::High);
      } else if (token == "L") {
        config.forced_types.push_back(panel::ExpertType::Low);
      } else {
        throw DataError("config key 'types': expected a comma list of H/L");
      }
    }
  }

  const std::string common_var = text_of("common_var", "");
  const std::string marginal_var = text_of("marginal_var", "");
  if (!common_var.empty() || !marginal_var.empty()) {
    if (common_var.empty() || marginal_var.empty()) {
      throw DataError("correlated panels need both common_var and marginal_var");
    }
    config.cov = panel::CovSpec::equal(config.params.n_experts,
                                       parse_double("marginal_var", marginal_var),
                                       parse_double("common_var", common_var));
  }

  *trajectories_mode = text_of("trajectories", "combined");
  if (*trajectories_mode != "combined" && *trajectories_mode != "per_replication" &&
      *trajectories_mode != "none") {
    throw DataError("config key 'trajectories': expected combined, per_replication or none");
  }
  return config;
}

void write_trajectories(const fs::path& dir, const std::vector<panel::Trajectory>& trajectories,
                        panel::SimMode mode, const std::string& traj_mode, int digits,
                        std::vector<std::string>* outputs) {
  if (traj_mode == "none" || trajectories.empty()) return;
  const std::size_t n = trajectories.front().rho_paths.size();

  std::vector<std::string> header;
  header.push_back("rep");
  header.push_back("t");
  if (mode == panel::SimMode::Binary) {
    header.push_back("lambda");
  } else {
    header.push_back("m");
    header.push_back("V");
  }
  for (std::size_t i = 1; i <= n; ++i) header.push_back("rho_" + std::to_string(i));
  header.push_back("scored");

  auto write_rows = [&](panel::CsvWriter& csv, const panel::Trajectory& traj) {
    const std::size_t horizon = traj.scored_flags.size();
    for (std::size_t t = 0; t <= horizon; ++t) {
      std::vector<std::string> row;
      row.push_back(std::to_string(traj.replication));
      row.push_back(std::to_string(t));
      if (mode == panel::SimMode::Binary) {
        row.push_back(panel::format_number(traj.lambda_path[t], digits));
      } else {
        row.push_back(panel::format_number(traj.mean_path[t], digits));
        row.push_back(panel::format_number(traj.var_path[t], digits));
      }
      for (std::size_t i = 0; i < n; ++i) {
        row.push_back(panel::format_number(traj.rho_paths[i][t], digits));
      }
      row.push_back(t == 0 ? "" : std::to_string(static_cast<int>(traj.scored_flags[t - 1])));
      csv.write_row(row);
    }
  };

  if (traj_mode == "combined") {
    panel::CsvWriter csv((dir / "trajectories.csv").string());
    csv.write_row(header);
    for (const auto& traj : trajectories) write_rows(csv, traj);
    outputs->push_back("trajectories.csv");
  } else {
    for (const auto& traj : trajectories) {
      char name[64];
      std::snprintf(name, sizeof(name), "trajectory_rep%04d.csv", traj.replication);
      panel::CsvWriter csv((dir / name).string());
      csv.write_row(header);
      write_rows(csv, traj);
      outputs->push_back(name);
    }
  }
}

void write_scored_observations(const fs::path& dir,
                               const std::vector<panel::ScoredObservation>& observations,
                               panel::SimMode mode, int digits,
                               std::vector<std::string>* outputs) {
  if (observations.empty()) return;
  panel::CsvWriter csv((dir / "scored_observations.csv").string());
  csv.write_row({"expert_id", "topic_id", "t",
                 mode == panel::SimMode::Binary ? "forecast" : "report", "outcome", "prior"});
  for (const auto& obs : observations) {
    csv.write_row({std::to_string(obs.expert_id), std::to_string(obs.topic_id),
                   std::to_string(obs.t), panel::format_number(obs.value, digits),
                   panel::format_number(obs.outcome, digits),
                   panel::format_number(obs.prior, digits)});
  }
  outputs->push_back("scored_observations.csv");
}

int cmd_simulate(SimulateOptions& opt) {
  const auto t0 = std::chrono::steady_clock::now();
  if (opt.config_path.empty()) {
    throw DataError("simulate requires --config");
  }
  const ConfigMap file = load_config(opt.config_path);
  reject_unknown_keys(
      file, {"mode",       "p_low",      "p_high",     "prior_high",    "n_experts",
             "theta",      "lambda0",    "horizon",    "replications",  "seed",
             "topics",     "m0",         "v0",         "theta_value",   "smoothing_eps",
             "q",          "kappa",      "tilt_cost",  "eval_weight",   "score",
             "schedule",   "scored_tilt", "bias",      "types",         "common_var",
             "marginal_var", "trajectories", "full_precision"},
      "simulate config");

  ConfigMap resolved;
  std::string traj_mode;
  panel::SimConfig config = build_sim_config(file, resolved, &traj_mode);
  if (opt.seed >= 0) {
    config.seed = static_cast<std::uint64_t>(opt.seed);
    resolved["seed"] = std::to_string(opt.seed);
  }
  {
    const auto it = file.find("full_precision");
    if (it != file.end() && !opt.full_precision) {
      opt.full_precision = parse_int("full_precision", it->second) != 0;
    }
    resolved["full_precision"] = opt.full_precision ? "1" : "0";
  }
  const int digits = opt.full_precision ? 17 : 9;

  try {
    config.validate();
  } catch (const std::exception& e) {
    throw DataError(std::string("invalid simulate configuration: ") + e.what());
  }

  const fs::path dir = prepare_out_dir(opt.out);
  std::vector<std::string> outputs;
  std::string warning;

  if (config.topics > 1) {
    // Multi-topic identification scenario: scored observations only.
    const panel::IdentificationData data = panel::identification_scenario(config);
    std::vector<panel::ScoredObservation> all;
    for (const auto& rep_obs : data.by_replication) {
      all.insert(all.end(), rep_obs.begin(), rep_obs.end());
    }
    write_scored_observations(dir, all, config.mode, digits, &outputs);
    panel::CsvWriter summary((dir / "summary.csv").string());
    summary.write_row({"metric", "value"});
    summary.write_row({"n_replications", std::to_string(config.n_replications)});
    summary.write_row({"topics", std::to_string(config.topics)});
    summary.write_row({"n_scored_observations", std::to_string(all.size())});
    summary.write_row({"identified", data.identified ? "1" : "0"});
    outputs.push_back("summary.csv");
    warning = data.warning;
  } else {
    // Single-topic run: trajectories, summary and any scored observations.
    if (!config.bias.empty() && config.design.eval_density <= 0.0) {
      const panel::IdentificationData probe = panel::identification_scenario(config);
      warning = probe.warning;
      if (!warning.empty()) std::cerr << "WARNING: " << warning << "\n";
    }
    const std::vector<panel::Trajectory> trajectories = panel::simulate(config, opt.threads);
    write_trajectories(dir, trajectories, config.mode, traj_mode, digits, &outputs);

    std::vector<panel::ScoredObservation> all;
    for (const auto& traj : trajectories) {
      all.insert(all.end(), traj.scored_obs.begin(), traj.scored_obs.end());
    }
    write_scored_observations(dir, all, config.mode, digits, &outputs);

    // Summary metrics.
    double frac_converged = 0.0;
    double mean_terminal = 0.0;
    double mean_terminal_var = 0.0;
    double mean_abs_error = 0.0;
    double mean_min_rho = 0.0;
    double scored_rounds = 0.0;
    std::size_t n_rho = 0;
    for (const auto& traj : trajectories) {
      if (config.mode == panel::SimMode::Binary) {
        const double terminal = traj.lambda_path.back();
        frac_converged += terminal > 0.95 ? 1.0 : 0.0;
        mean_terminal += terminal;
      } else {
        mean_terminal += traj.mean_path.back();
        mean_terminal_var += traj.var_path.back();
        mean_abs_error += std::abs(traj.mean_path.back() - traj.theta_value);
      }
      for (const auto& path : traj.rho_paths) {
        mean_min_rho += std::min(path.back(), 1.0 - path.back());
        ++n_rho;
      }
      for (char flag : traj.scored_flags) scored_rounds += flag;
    }
    const double n_reps = static_cast<double>(trajectories.size());
    const auto diag = panel::martingale_diagnostic(trajectories);

    panel::CsvWriter summary((dir / "summary.csv").string());
    summary.write_row({"metric", "value"});
    summary.write_row({"n_replications", std::to_string(config.n_replications)});
    summary.write_row({"horizon", std::to_string(config.horizon)});
    summary.write_row({"n_experts", std::to_string(config.params.n_experts)});
    if (config.mode == panel::SimMode::Binary) {
      summary.write_row(
          {"frac_lambda_above_0.95", panel::format_number(frac_converged / n_reps, digits)});
      summary.write_row(
          {"mean_terminal_lambda", panel::format_number(mean_terminal / n_reps, digits)});
    } else {
      summary.write_row({"mean_terminal_m", panel::format_number(mean_terminal / n_reps, digits)});
      summary.write_row(
          {"mean_terminal_V", panel::format_number(mean_terminal_var / n_reps, digits)});
      summary.write_row(
          {"mean_abs_error", panel::format_number(mean_abs_error / n_reps, digits)});
    }
    if (n_rho > 0) {
      summary.write_row({"mean_min_rho_terminal",
                         panel::format_number(mean_min_rho / static_cast<double>(n_rho), digits)});
    }
    summary.write_row({"martingale_drift", panel::format_number(diag.drift, digits)});
    summary.write_row({"martingale_se", panel::format_number(diag.standard_error, digits)});
    summary.write_row({"martingale_steps", std::to_string(diag.n_steps)});
    summary.write_row({"realized_eval_density",
                       panel::format_number(scored_rounds / (n_reps * config.horizon), digits)});
    if (!warning.empty()) {
      summary.write_row({"identification_warning", "1"});
    }
    outputs.push_back("summary.csv");
  }

  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_manifest(dir, "simulate", resolved, outputs, seconds, warning);
  return 0;
}

// ---------------------------------------------------------------------------
// estimate

struct EstimateOptions {
  std::string data_path;
  std::string mode = "binary";
  std::string out;
  std::string config_path;
  bool prior_offset = false;
};

int cmd_estimate(EstimateOptions& opt, const CLI::App* app) {
  const auto t0 = std::chrono::steady_clock::now();
  const ConfigMap file = opt.config_path.empty() ? ConfigMap{} : load_config(opt.config_path);
  reject_unknown_keys(file, {"data", "mode", "prior_offset"}, "estimate config");
  Resolver resolve{file, app, {}};
  opt.data_path = resolve.text("data", "--data", opt.data_path);
  opt.mode = resolve.text("mode", "--mode", opt.mode);
  opt.prior_offset =
      resolve.integer("prior_offset", "--prior-offset", opt.prior_offset ? 1 : 0) != 0;

  if (opt.data_path.empty()) {
    throw DataError("estimate requires --data");
  }
  if (opt.mode != "binary" && opt.mode != "gaussian") {
    throw DataError("estimate: --mode must be binary or gaussian");
  }
  const bool binary = opt.mode == "binary";

  panel::CsvTable table;
  try {
    table = panel::read_csv(opt.data_path);
  } catch (const std::exception& e) {
    throw DataError(std::string("estimate: ") + e.what());
  }

  std::size_t col_expert, col_topic, col_t, col_value, col_outcome, col_prior;
  try {
    col_expert = table.column("expert_id");
    col_topic = table.column("topic_id");
    col_t = table.column("t");
    col_value = binary ? table.column("forecast") : table.column("report");
    col_outcome = table.column("outcome");
    col_prior = table.column("prior");
  } catch (const std::exception& e) {
    throw DataError(std::string("estimate: ") + e.what());
  }

  std::map<int, std::vector<panel::ScoredObservation>> by_expert;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    auto cell_number = [&](std::size_t col) {
      try {
        std::size_t pos = 0;
        const double v = std::stod(row[col], &pos);
        if (pos != row[col].size()) throw std::invalid_argument(row[col]);
        return v;
      } catch (const std::exception&) {
        throw DataError("estimate: row " + std::to_string(r + 2) + ": cannot parse '" +
                        row[col] + "'");
      }
    };
    panel::ScoredObservation obs;
    obs.expert_id = static_cast<int>(cell_number(col_expert));
    obs.topic_id = static_cast<int>(cell_number(col_topic));
    obs.t = static_cast<int>(cell_number(col_t));
    obs.value = cell_number(col_value);
    obs.outcome = cell_number(col_outcome);
    obs.prior = cell_number(col_prior);
    by_expert[obs.expert_id].push_back(obs);
  }
  if (by_expert.empty()) {
    throw DataError("estimate: no data rows in " + opt.data_path);
  }

  const fs::path dir = prepare_out_dir(opt.out);
  panel::CsvWriter csv((dir / "fits.csv").string());
  if (binary) {
    csv.write_row({"expert_id", "intercept", "slope", "se_intercept", "se_slope", "converged"});
  } else {
    csv.write_row({"expert_id", "b_hat", "p_hat", "se_b_hat", "se_p_hat", "converged"});
  }

  panel::CalibrationOptions cal_options;
  cal_options.prior_offset = opt.prior_offset;
  for (const auto& [expert_id, observations] : by_expert) {
    if (binary) {
      try {
        const panel::CalibrationFit fit = panel::fit_calibration(observations, cal_options);
        csv.write_row({std::to_string(expert_id), panel::format_number(fit.intercept),
                       panel::format_number(fit.slope), panel::format_number(fit.se_intercept),
                       panel::format_number(fit.se_slope), "1"});
      } catch (const std::exception& e) {
        std::cerr << "expert " << expert_id << ": " << e.what() << "\n";
        csv.write_row({std::to_string(expert_id), "", "", "", "", "0"});
      }
    } else {
      try {
        const panel::GaussianFit fit = panel::estimate_gaussian(observations);
        csv.write_row({std::to_string(expert_id), panel::format_number(fit.b_hat),
                       panel::format_number(fit.p_hat), panel::format_number(fit.se_b),
                       panel::format_number(fit.se_p), fit.ssr_zero ? "0" : "1"});
      } catch (const std::exception& e) {
        std::cerr << "expert " << expert_id << ": " << e.what() << "\n";
        csv.write_row({std::to_string(expert_id), "", "", "", "", "0"});
      }
    }
  }

  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_manifest(dir, "estimate", resolve.resolved, {"fits.csv"}, seconds);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reputation-panel social learning toolkit"};
  app.set_version_flag("--version",
                       std::string(kToolVersion) + " (rng: " + panel::kRngVersion + ")");
  app.require_subcommand(1);

  MixingOptions mixing;
  CLI::App* mix_cmd =
      app.add_subcommand("mixing-curves", "Emit the one-sided mixing curves as CSV");
  mix_cmd->add_option("--p-low", mixing.p_low, "Low-type accuracy");
  mix_cmd->add_option("--p-high", mixing.p_high, "High-type accuracy");
  mix_cmd->add_option("--q", mixing.q, "Evaluation density for the effective curves");
  mix_cmd->add_option("--grid-start", mixing.grid_start, "First lambda grid point");
  mix_cmd->add_option("--grid-stop", mixing.grid_stop, "Last lambda grid point");
  mix_cmd->add_option("--grid-step", mixing.grid_step, "Lambda grid step");
  mix_cmd->add_flag("--full-precision", mixing.full_precision, "17 significant digits");
  mix_cmd->add_option("--out", mixing.out, "Output directory");
  mix_cmd->add_option("--config", mixing.config_path, "key=value configuration file");
  mix_cmd->add_option("--seed", "Accepted for interface uniformity; unused");

  HittingOptions hitting;
  CLI::App* hit_cmd =
      app.add_subcommand("hitting-times", "Emit drift-approximated hitting times as CSV");
  hit_cmd->add_option("--p-low", hitting.p_low, "Low-type accuracy");
  hit_cmd->add_option("--p-high", hitting.p_high, "High-type accuracy");
  hit_cmd->add_option("--n-experts", hitting.n_experts, "Panel size");
  hit_cmd->add_option("--lambda0", hitting.lambda0, "Initial public belief");
  hit_cmd->add_option("--lambda-hit", hitting.lambda_hit, "Target public belief");
  hit_cmd->add_option("--rho", hitting.rho, "Reputation weight on the high type");
  hit_cmd->add_option("--q-list", hitting.q_list, "Comma-separated evaluation densities");
  hit_cmd->add_flag("--full-precision", hitting.full_precision, "17 significant digits");
  hit_cmd->add_option("--out", hitting.out, "Output directory");
  hit_cmd->add_option("--config", hitting.config_path, "key=value configuration file");
  hit_cmd->add_option("--seed", "Accepted for interface uniformity; unused");

  SimulateOptions simulate;
  CLI::App* sim_cmd = app.add_subcommand("simulate", "Run seeded panel simulations");
  sim_cmd->add_option("--config", simulate.config_path, "key=value configuration file")
      ->required();
  sim_cmd->add_option("--out", simulate.out, "Output directory");
  sim_cmd->add_option("--seed", simulate.seed, "Override the config seed");
  sim_cmd->add_option("--threads", simulate.threads, "Replication worker pool size");
  sim_cmd->add_flag("--full-precision", simulate.full_precision, "17 significant digits");

  EstimateOptions estimate;
  CLI::App* est_cmd =
      app.add_subcommand("estimate", "Fit per-expert bias/precision from scored rounds");
  est_cmd->add_option("--data", estimate.data_path, "Scored observations CSV");
  est_cmd->add_option("--mode", estimate.mode, "binary or gaussian");
  est_cmd->add_flag("--prior-offset", estimate.prior_offset,
                    "Control for the public prior with a unit coefficient");
  est_cmd->add_option("--out", estimate.out, "Output directory");
  est_cmd->add_option("--config", estimate.config_path, "key=value configuration file");
  est_cmd->add_option("--seed", "Accepted for interface uniformity; unused");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (mix_cmd->parsed()) return cmd_mixing_curves(mixing, mix_cmd);
    if (hit_cmd->parsed()) return cmd_hitting_times(hitting, hit_cmd);
    if (sim_cmd->parsed()) return cmd_simulate(simulate);
    if (est_cmd->parsed()) return cmd_estimate(estimate, est_cmd);
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
