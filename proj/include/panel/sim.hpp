#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "panel/correlated.hpp"
#include "panel/design.hpp"
#include "panel/estimation.hpp"
#include "panel/model.hpp"

namespace panel {

enum class SimMode { Binary, Gaussian };
enum class EvalSchedule { Deterministic, Bernoulli };
// Low-type behavior on scored rounds in the Gaussian extension: truthful by
// strict propriety, or keep the continuous tilt for counterfactual runs.
enum class ScoredTilt { Truthful, Continuous };

struct SimConfig {
  ModelParams params;
  DesignConfig design;
  std::optional<CovSpec> cov;
  int horizon = 100;
  int n_replications = 1;
  std::uint64_t seed = 0;
  SimMode mode = SimMode::Binary;
  EvalSchedule schedule = EvalSchedule::Deterministic;
  ScoredTilt scored_tilt = ScoredTilt::Truthful;
  int topics = 1;

  // Per-expert biases (empty means unbiased panel).
  std::vector<double> bias;
  // When nonempty, pins the type of each expert instead of drawing from the
  // prior; used by scenario studies with planted parameters.
  std::vector<ExpertType> forced_types;

  // Gaussian extension: prior on the continuous state and its true value.
  double state_mean0 = 0.0;
  double state_var0 = 1.0;
  double theta_value = 1.0;

  // Smoothing for binary scored-round forecasts fed to estimation.
  double smoothing_eps = 0.05;

  void validate() const;
};

struct Trajectory {
  int replication = 0;
  int theta = 0;              // binary state
  double theta_value = 0.0;   // Gaussian state
  std::vector<ExpertType> types;
  std::vector<double> lambda_path;            // binary mode, length T+1
  std::vector<double> mean_path;              // Gaussian mode, length T+1
  std::vector<double> var_path;               // Gaussian mode, length T+1
  std::vector<std::vector<double>> rho_paths; // N x (T+1)
  std::vector<std::vector<double>> reports;   // N x T
  std::vector<char> scored_flags;             // length T
  std::vector<ScoredObservation> scored_obs;
};

// Per-expert Bernoulli KL divergence of the reputation-weighted report
// mixture between the two states; the per-period information content of one
// expert's report.
double panel_kl(double lambda, double rho, double p_low, double p_high, const MixSpec& mix);

// Constant-drift approximation of the expected number of periods until the
// public log-odds crosses logit(lambda_hit) from logit(lambda0):
// (logit(lambda_hit) - logit(lambda0)) / (N [(1-q) D_mix + q D_truth]).
double hitting_time_approx(double lambda0, double lambda_hit, int n_experts, double q,
                           double d_mix, double d_truth);

// Seeded Monte Carlo of the full dynamic game. Deterministic given
// (config, seed); replications own independent RNG streams and may be run on
// several threads without changing the output.
std::vector<Trajectory> simulate(const SimConfig& config, int n_threads = 1);

struct MartingaleDiagnostic {
  double drift = 0.0;
  double standard_error = 0.0;
  std::size_t n_steps = 0;
};

// Pooled one-step reputation drift across experts, rounds and replications.
MartingaleDiagnostic martingale_diagnostic(const std::vector<Trajectory>& trajectories);

struct IdentificationData {
  bool identified = false;
  std::string warning;
  // Scored observations per replication, spanning all topics and experts.
  std::vector<std::vector<ScoredObservation>> by_replication;
};

// Runs the multi-topic scenario that makes (bias, precision) separable and
// emits scored observations for the estimation module. Single-topic runs
// without evaluation windows are flagged as non-identifying instead.
IdentificationData identification_scenario(const SimConfig& config);

// Latent-correlation calibration for the correlated binary generator: the
// Gaussian-copula correlation that reproduces the target pairwise
// correlation of log-likelihood-ratio increments at the given belief.
double calibrate_latent_correlation(double target_corr, double lambda, double varpi, double p_low,
                                    double p_high, const MixSpec& mix);

}  // namespace panel
