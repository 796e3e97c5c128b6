#include "panel/sim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <thread>

#include "panel/equilibrium.hpp"
#include "panel/gaussian.hpp"
#include "panel/rng.hpp"

namespace panel {

namespace {

// Materialized beliefs are clamped into the open interval before they feed
// strategies or likelihood tables; the log-odds state itself is never
// clamped.
constexpr double kLambdaClamp = 1e-12;

double interior_lambda(const PublicBelief& belief) {
  return std::clamp(belief.lambda(), kLambdaClamp, 1.0 - kLambdaClamp);
}

bool is_scored(const SimConfig& config, int t, CounterRng& rng) {
  const double q = config.design.eval_density;
  if (q <= 0.0) return false;
  if (q >= 1.0) return true;
  if (config.schedule == EvalSchedule::Bernoulli) {
    return rng.next_bernoulli(q);
  }
  const int k = static_cast<int>(std::ceil(1.0 / q));
  return t % k == 0;  // rounds are 1-based: k, 2k, ...
}

int draw_signal(int theta, double accuracy, CounterRng& rng) {
  return rng.next_bernoulli(accuracy) ? theta : 1 - theta;
}

int low_type_report(int signal, const MixSpec& mix, CounterRng& rng) {
  switch (mix.side) {
    case MixSide::Truthful:
      return signal;
    case MixSide::MixAfterS1:
      if (signal == 1) return rng.next_bernoulli(mix.prob) ? 1 : 0;
      return 0;
    case MixSide::MixAfterS0:
      if (signal == 0) return rng.next_bernoulli(mix.prob) ? 1 : 0;
      return signal;
  }
  return signal;
}

std::vector<ExpertType> draw_types(const SimConfig& config, CounterRng& rng) {
  if (!config.forced_types.empty()) {
    return config.forced_types;
  }
  std::vector<ExpertType> types(config.params.n_experts);
  for (auto& type : types) {
    type = rng.next_bernoulli(config.params.prior_high) ? ExpertType::High : ExpertType::Low;
  }
  return types;
}

double expert_bias(const SimConfig& config, int i) {
  return config.bias.empty() ? 0.0 : config.bias[i];
}

// Reputation update from an unscored report; off-support reports get the
// off-path posterior rho+ = 0 so simulations keep running.
double unscored_reputation(double rho, int y, double lambda, const ReportLikelihoods& high,
                           const ReportLikelihoods& low) {
  try {
    return reputation_update(rho, y, lambda, high, low);
  } catch (const off_path_error&) {
    return 0.0;
  }
}

Trajectory run_binary_replication(const SimConfig& config, int replication, std::uint64_t stream) {
  const ModelParams& mp = config.params;
  const int n = mp.n_experts;
  const int horizon = config.horizon;
  CounterRng rng(config.seed, stream);

  Trajectory traj;
  traj.replication = replication;
  traj.theta = mp.true_state;
  traj.types = draw_types(config, rng);

  PublicBelief belief = PublicBelief::from_lambda(mp.lambda0);
  ReputationVector rho(n, mp.prior_high);

  traj.lambda_path.reserve(horizon + 1);
  traj.lambda_path.push_back(mp.lambda0);
  traj.rho_paths.assign(n, {});
  for (int i = 0; i < n; ++i) traj.rho_paths[i].push_back(rho[i]);
  traj.reports.assign(n, {});
  traj.scored_flags.reserve(horizon);

  // Latent copula correlation for the common-shock generator, calibrated
  // once at the initial belief.
  double latent_corr = 0.0;
  if (config.cov && config.cov->common_var > 0.0) {
    const double v_bar =
        std::accumulate(config.cov->marginal_vars.begin(), config.cov->marginal_vars.end(), 0.0) /
        static_cast<double>(config.cov->size());
    const double target = config.cov->common_var / (config.cov->common_var + v_bar);
    latent_corr = calibrate_latent_correlation(target, mp.lambda0, mp.prior_high, mp.p_low,
                                               mp.p_high, low_mixing(mp.lambda0, mp.p_low, mp.p_high));
  }

  std::vector<int> signals(n);
  std::vector<int> reports(n);
  std::vector<double> increments(n);

  for (int t = 1; t <= horizon; ++t) {
    const bool scored = is_scored(config, t, rng);
    traj.scored_flags.push_back(scored ? 1 : 0);
    const double lambda = interior_lambda(belief);

    // The round's equilibrium mix: truthful on announced evaluation dates,
    // penalty-tilted otherwise when a deviation cost is active.
    MixSpec mix = MixSpec::truthful();
    if (!scored) {
      mix = config.design.penalty > 0.0
                ? penalty_mixing(lambda, mp.p_low, mp.p_high, config.design.penalty, mp.prior_high)
                : low_mixing(lambda, mp.p_low, mp.p_high);
    }

    // Signals: independent draws, or the Gaussian copula under a common shock.
    if (latent_corr > 0.0) {
      const double g = rng.next_normal();
      const double sr = std::sqrt(latent_corr);
      const double si = std::sqrt(1.0 - latent_corr);
      for (int i = 0; i < n; ++i) {
        const double p_i = traj.types[i] == ExpertType::High ? mp.p_high : mp.p_low;
        const double x = sr * g + si * rng.next_normal();
        signals[i] = x <= norm_ppf(p_i) ? mp.true_state : 1 - mp.true_state;
      }
    } else {
      for (int i = 0; i < n; ++i) {
        const double p_i = traj.types[i] == ExpertType::High ? mp.p_high : mp.p_low;
        signals[i] = draw_signal(mp.true_state, p_i, rng);
      }
    }

    for (int i = 0; i < n; ++i) {
      if (traj.types[i] == ExpertType::High) {
        reports[i] = signals[i];
      } else if (scored) {
        reports[i] = signals[i];
      } else {
        // A biased low type mixes around the bias-shifted subjective prior.
        const double b = expert_bias(config, i);
        MixSpec own_mix = mix;
        if (b != 0.0) {
          const double subjective = logistic(std::log(lambda / (1.0 - lambda)) + b);
          own_mix = config.design.penalty > 0.0
                        ? penalty_mixing(subjective, mp.p_low, mp.p_high, config.design.penalty,
                                         mp.prior_high)
                        : low_mixing(subjective, mp.p_low, mp.p_high);
        }
        reports[i] = low_type_report(signals[i], own_mix, rng);
      }
      traj.reports[i].push_back(reports[i]);
    }

    // State update from reports (the revealed truth on scored rounds feeds
    // reputations only, never the public state posterior).
    if (config.cov) {
      for (int i = 0; i < n; ++i) {
        increments[i] =
            std::log(clamp_likelihood(expert_lr(reports[i], lambda, rho[i], mp.p_low, mp.p_high, mix)));
      }
      belief = gls_logit_update(belief, increments, *config.cov);
    } else {
      belief = logit_update(belief, reports, rho, mp.p_low, mp.p_high, mix);
    }

    // Reputation updates.
    if (scored) {
      for (int i = 0; i < n; ++i) {
        rho[i] = scored_reputation_update_binary(rho[i], reports[i], mp.true_state, mp.p_low,
                                                 mp.p_high, config.design.eval_weight);
        traj.scored_obs.push_back({i, 0, t, smooth_report(reports[i], config.smoothing_eps),
                                   static_cast<double>(mp.true_state), lambda});
      }
    } else {
      const ReportLikelihoods high =
          report_likelihoods(ExpertType::High, lambda, mix, mp.p_low, mp.p_high);
      const ReportLikelihoods low =
          report_likelihoods(ExpertType::Low, lambda, mix, mp.p_low, mp.p_high);
      for (int i = 0; i < n; ++i) {
        rho[i] = unscored_reputation(rho[i], reports[i], lambda, high, low);
      }
    }

    traj.lambda_path.push_back(belief.lambda());
    for (int i = 0; i < n; ++i) traj.rho_paths[i].push_back(rho[i]);
  }
  return traj;
}

Trajectory run_gaussian_replication(const SimConfig& config, int replication,
                                    std::uint64_t stream) {
  const ModelParams& mp = config.params;
  const int n = mp.n_experts;
  const int horizon = config.horizon;
  CounterRng rng(config.seed, stream);

  const double sigma2_high = 1.0 / mp.p_high;
  const double sigma2_low = 1.0 / mp.p_low;
  const double tau2 = config.cov ? config.cov->common_var : 0.0;

  Trajectory traj;
  traj.replication = replication;
  traj.theta_value = config.theta_value;
  traj.types = draw_types(config, rng);

  GaussianBelief belief(config.state_mean0, config.state_var0);
  ReputationVector rho(n, mp.prior_high);

  traj.mean_path.push_back(belief.mean);
  traj.var_path.push_back(belief.variance);
  traj.rho_paths.assign(n, {});
  for (int i = 0; i < n; ++i) traj.rho_paths[i].push_back(rho[i]);
  traj.reports.assign(n, {});

  std::vector<double> reports(n);
  std::vector<double> loadings(n);
  std::vector<double> intercepts(n);
  std::vector<double> noise_vars(n);

  for (int t = 1; t <= horizon; ++t) {
    const bool scored = is_scored(config, t, rng);
    traj.scored_flags.push_back(scored ? 1 : 0);

    // The low type re-solves the tilt problem from the current public
    // variance (plus any common-shock variance) each round.
    const double effective_prior_var = belief.variance + tau2;
    const double tilt_unscored =
        config.design.tilt_cost > 0.0
            ? optimal_tilt(config.design.tilt_cost, quadratic_cost, effective_prior_var,
                           sigma2_high, sigma2_low)
            : mimicry_coefficient(effective_prior_var, sigma2_high, sigma2_low);
    const double tilt =
        scored && config.scored_tilt == ScoredTilt::Truthful ? 1.0 : tilt_unscored;

    const double common = tau2 > 0.0 ? std::sqrt(tau2) * rng.next_normal() : 0.0;
    for (int i = 0; i < n; ++i) {
      const bool high = traj.types[i] == ExpertType::High;
      const double sigma2 = high ? sigma2_high : sigma2_low;
      const double x = config.theta_value + expert_bias(config, i) + common +
                       std::sqrt(sigma2) * rng.next_normal();
      reports[i] = high ? x : belief.mean + tilt * (x - belief.mean);
      traj.reports[i].push_back(reports[i]);
      if (scored) {
        traj.scored_obs.push_back({i, 0, t, reports[i], config.theta_value, belief.mean});
      }
    }

    // Reputation updates use the pre-update belief.
    const double m_prev = belief.mean;
    const double v_prev = belief.variance;
    for (int i = 0; i < n; ++i) {
      double s_high;
      double s_low;
      if (scored) {
        // Truth revealed to the scorer: predictives condition on theta.
        s_high = log_norm_pdf(reports[i], config.theta_value, tau2 + sigma2_high);
        const double low_mean = m_prev + tilt * (config.theta_value - m_prev);
        s_low = log_norm_pdf(reports[i], low_mean, tilt * tilt * (tau2 + sigma2_low));
      } else {
        s_high = log_norm_pdf(reports[i], m_prev, v_prev + tau2 + sigma2_high);
        s_low = log_norm_pdf(reports[i], m_prev, tilt * tilt * (v_prev + tau2 + sigma2_low));
      }
      rho[i] = scored_reputation_update(rho[i], s_high, s_low,
                                        scored ? config.design.eval_weight : 1.0);
    }

    // State update with the observer's effective observation equations
    // (bias unknown to the observer, so intercepts assume b = 0).
    for (int i = 0; i < n; ++i) {
      const GaussianExpert expert{sigma2_high, sigma2_low, rho[i], 0.0, tilt};
      const EffectiveObservation obs = effective_observation(expert, m_prev);
      loadings[i] = obs.loading;
      intercepts[i] = obs.intercept;
      noise_vars[i] = obs.noise_var;
    }
    if (config.cov && tau2 > 0.0) {
      belief = correlated_filter_update(belief, reports, loadings, intercepts,
                                        {noise_vars, tau2});
    } else {
      std::vector<std::pair<double, EffectiveObservation>> panel_obs;
      panel_obs.reserve(n);
      for (int i = 0; i < n; ++i) {
        panel_obs.emplace_back(reports[i],
                               EffectiveObservation{loadings[i], noise_vars[i], intercepts[i]});
      }
      belief = filter_update(belief, panel_obs);
    }

    traj.mean_path.push_back(belief.mean);
    traj.var_path.push_back(belief.variance);
    for (int i = 0; i < n; ++i) traj.rho_paths[i].push_back(rho[i]);
  }
  return traj;
}

Trajectory run_replication(const SimConfig& config, int replication, std::uint64_t stream) {
  return config.mode == SimMode::Binary ? run_binary_replication(config, replication, stream)
                                        : run_gaussian_replication(config, replication, stream);
}

}  // namespace

void SimConfig::validate() const {
  params.validate();
  design.validate();
  if (horizon < 1) throw std::invalid_argument("horizon must be at least 1");
  if (n_replications < 1) throw std::invalid_argument("n_replications must be at least 1");
  if (topics != 1 && topics != 2) throw std::invalid_argument("topics must be 1 or 2");
  if (!bias.empty() && bias.size() != static_cast<std::size_t>(params.n_experts)) {
    throw std::invalid_argument("bias vector length must equal n_experts");
  }
  if (!forced_types.empty() &&
      forced_types.size() != static_cast<std::size_t>(params.n_experts)) {
    throw std::invalid_argument("forced_types length must equal n_experts");
  }
  if (cov) {
    cov->validate();
    if (cov->size() != static_cast<std::size_t>(params.n_experts)) {
      throw std::invalid_argument("CovSpec length must equal n_experts");
    }
  }
  if (mode == SimMode::Gaussian && !(state_var0 > 0.0)) {
    throw std::invalid_argument("state_var0 must be strictly positive");
  }
  if (!(smoothing_eps > 0.0 && smoothing_eps < 0.5)) {
    throw std::invalid_argument("smoothing_eps must lie in (0, 1/2)");
  }
}

double panel_kl(double lambda, double rho, double p_low, double p_high, const MixSpec& mix) {
  auto mixture_p1 = [&](int theta) {
    const double high = theta == 1 ? p_high : 1.0 - p_high;
    double low = 0.0;
    switch (mix.side) {
      case MixSide::Truthful:
        low = theta == 1 ? p_low : 1.0 - p_low;
        break;
      case MixSide::MixAfterS1:
        low = mix.prob * (theta == 1 ? p_low : 1.0 - p_low);
        break;
      case MixSide::MixAfterS0:
        low = (theta == 1 ? p_low : 1.0 - p_low) + mix.prob * (theta == 1 ? 1.0 - p_low : p_low);
        break;
    }
    return rho * high + (1.0 - rho) * low;
  };
  (void)lambda;  // the mix already encodes the belief region
  return bernoulli_kl(mixture_p1(1), mixture_p1(0));
}

double hitting_time_approx(double lambda0, double lambda_hit, int n_experts, double q,
                           double d_mix, double d_truth) {
  if (!(lambda0 > 0.0 && lambda0 < 1.0 && lambda_hit > 0.0 && lambda_hit < 1.0)) {
    throw std::invalid_argument("beliefs must be strictly interior");
  }
  if (lambda_hit < lambda0) {
    throw std::invalid_argument("hitting_time_approx expects lambda_hit >= lambda0");
  }
  if (lambda_hit == lambda0) {
    return 0.0;
  }
  const double drift = n_experts * ((1.0 - q) * d_mix + q * d_truth);
  if (!(drift > 0.0)) {
    throw std::invalid_argument("hitting_time_approx: drift must be strictly positive");
  }
  return (logit(lambda_hit) - logit(lambda0)) / drift;
}

std::vector<Trajectory> simulate(const SimConfig& config, int n_threads) {
  config.validate();
  std::vector<Trajectory> out(config.n_replications);
  if (n_threads <= 1 || config.n_replications == 1) {
    for (int r = 0; r < config.n_replications; ++r) {
      out[r] = run_replication(config, r, static_cast<std::uint64_t>(r));
    }
    return out;
  }

  // Replications own disjoint RNG streams, so any partition over threads
  // yields the same result.
  std::vector<std::thread> workers;
  const int used = std::min(n_threads, config.n_replications);
  for (int w = 0; w < used; ++w) {
    workers.emplace_back([&, w]() {
      for (int r = w; r < config.n_replications; r += used) {
        out[r] = run_replication(config, r, static_cast<std::uint64_t>(r));
      }
    });
  }
  for (auto& worker : workers) worker.join();
  return out;
}

MartingaleDiagnostic martingale_diagnostic(const std::vector<Trajectory>& trajectories) {
  double sum = 0.0;
  double sum_sq = 0.0;
  std::size_t n = 0;
  for (const auto& traj : trajectories) {
    for (const auto& path : traj.rho_paths) {
      for (std::size_t t = 0; t + 1 < path.size(); ++t) {
        const double d = path[t + 1] - path[t];
        sum += d;
        sum_sq += d * d;
        ++n;
      }
    }
  }
  MartingaleDiagnostic diag;
  diag.n_steps = n;
  if (n == 0) return diag;
  diag.drift = sum / static_cast<double>(n);
  const double var = sum_sq / static_cast<double>(n) - diag.drift * diag.drift;
  diag.standard_error = std::sqrt(std::max(var, 0.0) / static_cast<double>(n));
  return diag;
}

IdentificationData identification_scenario(const SimConfig& config) {
  config.validate();
  IdentificationData data;
  if (config.topics == 1 && config.design.eval_density <= 0.0) {
    data.identified = false;
    data.warning =
        "single topic without evaluation windows: bias and precision are not "
        "separately identified from report histories; no scored observations emitted";
    return data;
  }
  data.identified = true;
  data.by_replication.resize(config.n_replications);

  for (int topic = 0; topic < config.topics; ++topic) {
    SimConfig topic_config = config;
    topic_config.topics = 1;
    if (topic == 1) {
      // Distinct truths across topics; biases and types are shared.
      topic_config.params.true_state = 1 - config.params.true_state;
      topic_config.theta_value =
          config.theta_value != 0.0 ? -config.theta_value : 1.0;
    }
    for (int r = 0; r < config.n_replications; ++r) {
      // Types must coincide across topics within a replication, so both
      // topics run on the same (seed, replication) stream.
      Trajectory traj = run_replication(topic_config, r, static_cast<std::uint64_t>(r));
      for (ScoredObservation obs : traj.scored_obs) {
        obs.topic_id = topic;
        data.by_replication[r].push_back(obs);
      }
    }
  }
  return data;
}

double calibrate_latent_correlation(double target_corr, double lambda, double varpi, double p_low,
                                    double p_high, const MixSpec& mix) {
  if (!(target_corr >= 0.0 && target_corr < 1.0)) {
    throw std::invalid_argument("target correlation must lie in [0,1)");
  }
  if (target_corr == 0.0) {
    return 0.0;
  }
  (void)lambda;

  // Probability that the low type reports 1 given the signal, under the mix.
  auto low_report_one = [&](int signal) {
    switch (mix.side) {
      case MixSide::Truthful:
        return static_cast<double>(signal);
      case MixSide::MixAfterS1:
        return signal == 1 ? mix.prob : 0.0;
      case MixSide::MixAfterS0:
        return signal == 0 ? mix.prob : 1.0;
    }
    return static_cast<double>(signal);
  };

  // E[y | common shock g] for a randomly drawn type, theta = 1.
  auto report_mean_given_shock = [&](double g, double latent) {
    const double si = std::sqrt(1.0 - latent);
    const double sr = std::sqrt(latent);
    auto p_signal_one = [&](double accuracy) {
      return norm_cdf((norm_ppf(accuracy) - sr * g) / si);
    };
    const double high = p_signal_one(p_high);  // truthful: report = signal
    const double pl = p_signal_one(p_low);
    const double low = pl * low_report_one(1) + (1.0 - pl) * low_report_one(0);
    return varpi * high + (1.0 - varpi) * low;
  };

  // Pairwise correlation of report indicators implied by latent correlation,
  // by quadrature over the common shock. Log-LR increments are two-point
  // transforms of the reports, so their correlation coincides.
  auto implied_corr = [&](double latent) {
    const int n_nodes = 801;
    const double lo = -8.0, hi = 8.0;
    const double h = (hi - lo) / (n_nodes - 1);
    double mean = 0.0, second = 0.0;
    for (int k = 0; k < n_nodes; ++k) {
      const double g = lo + k * h;
      const double w = (k == 0 || k == n_nodes - 1) ? 0.5 : 1.0;
      const double density = w * h * norm_pdf(g, 0.0, 1.0);
      const double m = report_mean_given_shock(g, latent);
      mean += density * m;
      second += density * m * m;
    }
    const double cov = second - mean * mean;
    const double var = mean * (1.0 - mean);
    return var > 0.0 ? cov / var : 0.0;
  };

  double lo = 0.0, hi = 0.999999;
  if (implied_corr(hi) <= target_corr) {
    return hi;
  }
  for (int iter = 0; iter < 100 && hi - lo > 1e-10; ++iter) {
    const double mid = 0.5 * (lo + hi);
    (implied_corr(mid) < target_corr ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace panel
