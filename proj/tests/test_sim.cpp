#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "panel/equilibrium.hpp"
#include "panel/estimation.hpp"
#include "panel/sim.hpp"

using namespace panel;

namespace {

SimConfig baseline_config() {
  SimConfig config;
  config.params.p_low = 0.6;
  config.params.p_high = 0.8;
  config.params.prior_high = 0.5;
  config.params.n_experts = 10;
  config.params.true_state = 1;
  config.params.lambda0 = 0.4;
  config.design.eval_density = 0.25;
  config.horizon = 200;
  config.n_replications = 50;
  config.seed = 20240601;
  return config;
}

double mean_min_rho(const std::vector<Trajectory>& trajectories, std::size_t t) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& traj : trajectories) {
    for (const auto& path : traj.rho_paths) {
      sum += std::min(path[t], 1.0 - path[t]);
      ++n;
    }
  }
  return sum / static_cast<double>(n);
}

}  // namespace

TEST_CASE("panel_kl matches the worked values") {
  // uninformative panel
  CHECK(panel_kl(0.4, 0.5, 0.5, 0.5, MixSpec::truthful()) == doctest::Approx(0.0));

  const MixSpec mix = low_mixing(0.4, 0.6, 0.8);
  CHECK(panel_kl(0.4, 0.5, 0.6, 0.8, mix) == doctest::Approx(0.329).epsilon(2e-3));
  CHECK(panel_kl(0.4, 0.5, 0.6, 0.8, MixSpec::truthful()) == doctest::Approx(0.339).epsilon(2e-3));
  // mixing destroys information relative to truth-telling
  CHECK(panel_kl(0.4, 0.5, 0.6, 0.8, mix) < panel_kl(0.4, 0.5, 0.6, 0.8, MixSpec::truthful()));
}

TEST_CASE("hitting_time_approx") {
  const MixSpec mix = low_mixing(0.4, 0.6, 0.8);
  const double d_mix = panel_kl(0.4, 0.5, 0.6, 0.8, mix);
  const double d_truth = panel_kl(0.4, 0.5, 0.6, 0.8, MixSpec::truthful());
  CHECK(hitting_time_approx(0.4, 0.8, 10, 0.0, d_mix, d_truth) ==
        doctest::Approx(0.545).epsilon(2e-3));
  CHECK(hitting_time_approx(0.4, 0.8, 10, 1.0, d_mix, d_truth) ==
        doctest::Approx(0.529).epsilon(2e-3));
  CHECK(hitting_time_approx(0.4, 0.4, 10, 0.0, d_mix, d_truth) == doctest::Approx(0.0));
  CHECK_THROWS_AS(hitting_time_approx(0.4, 0.8, 10, 0.0, 0.0, 0.0), std::invalid_argument);
}

TEST_CASE("an empty panel leaves the belief at its prior") {
  SimConfig config = baseline_config();
  config.params.n_experts = 0;
  config.n_replications = 2;
  config.horizon = 20;
  const auto out = simulate(config);
  for (const auto& traj : out) {
    for (double lam : traj.lambda_path) {
      CHECK(lam == doctest::Approx(0.4).epsilon(1e-12));
    }
  }
}

TEST_CASE("fixed seeds reproduce trajectories bit for bit") {
  SimConfig config = baseline_config();
  config.n_replications = 4;
  config.horizon = 60;
  const auto a = simulate(config);
  const auto b = simulate(config);
  REQUIRE(a.size() == b.size());
  for (std::size_t r = 0; r < a.size(); ++r) {
    CHECK(a[r].lambda_path == b[r].lambda_path);
    CHECK(a[r].rho_paths == b[r].rho_paths);
    CHECK(a[r].reports == b[r].reports);
    CHECK(a[r].scored_flags == b[r].scored_flags);
  }
  // a worker pool must not change the result
  const auto c = simulate(config, 4);
  for (std::size_t r = 0; r < a.size(); ++r) {
    CHECK(a[r].lambda_path == c[r].lambda_path);
    CHECK(a[r].rho_paths == c[r].rho_paths);
  }
}

TEST_CASE("scored flags follow the evaluation density") {
  SimConfig config = baseline_config();
  config.n_replications = 1;
  config.horizon = 400;
  const auto out = simulate(config);
  const double realized =
      std::accumulate(out[0].scored_flags.begin(), out[0].scored_flags.end(), 0.0) / 400.0;
  CHECK(realized == doctest::Approx(0.25).epsilon(0.02));

  config.schedule = EvalSchedule::Bernoulli;
  config.horizon = 2000;
  const auto bern = simulate(config);
  const double bern_realized =
      std::accumulate(bern[0].scored_flags.begin(), bern[0].scored_flags.end(), 0.0) / 2000.0;
  CHECK(bern_realized == doctest::Approx(0.25).epsilon(0.15));
}

TEST_CASE("beliefs converge and reputations polarize under evaluation design") {
  SimConfig config = baseline_config();
  const auto out = simulate(config, 2);
  int converged = 0;
  for (const auto& traj : out) {
    if (traj.lambda_path.back() > 0.95) ++converged;
  }
  CHECK(converged >= 47);  // 94% at the reduced desk scale
  // polarization improves with the horizon
  const double early = mean_min_rho(out, 50);
  const double late = mean_min_rho(out, 200);
  CHECK(late < early);
  CHECK(late < 0.15);
}

TEST_CASE("reputation drift is a martingale under the type prior") {
  SimConfig config = baseline_config();
  const auto out = simulate(config, 2);
  const auto diag = martingale_diagnostic(out);
  CHECK(diag.n_steps == 50u * 10u * 200u);
  CHECK(diag.standard_error > 0.0);
  CHECK(std::abs(diag.drift) < 3.0 * diag.standard_error);
}

TEST_CASE("constant-reputation trajectories have exactly zero drift") {
  Trajectory frozen;
  frozen.rho_paths = {{1.0, 1.0, 1.0, 1.0}, {0.0, 0.0, 0.0, 0.0}};
  const auto diag = martingale_diagnostic({frozen});
  CHECK(diag.drift == 0.0);
  CHECK(diag.n_steps == 6u);
}

TEST_CASE("initial drift matches the constant-drift approximation") {
  SimConfig config = baseline_config();
  config.schedule = EvalSchedule::Bernoulli;  // exact density in expectation
  config.horizon = 1;
  config.n_replications = 4000;
  const auto out = simulate(config, 2);
  double mean_increment = 0.0;
  for (const auto& traj : out) {
    mean_increment += logit(std::clamp(traj.lambda_path[1], 1e-12, 1.0 - 1e-12)) - logit(0.4);
  }
  mean_increment /= static_cast<double>(out.size());

  const MixSpec mix = low_mixing(0.4, 0.6, 0.8);
  const double d_mix = panel_kl(0.4, 0.5, 0.6, 0.8, mix);
  const double d_truth = panel_kl(0.4, 0.5, 0.6, 0.8, MixSpec::truthful());
  const double predicted = 10.0 * (0.75 * d_mix + 0.25 * d_truth);
  CHECK(std::abs(mean_increment - predicted) / predicted < 0.10);
}

TEST_CASE("one-step belief is Bayes-plausible when the state follows the prior") {
  // resample theta from lambda0 and average the one-step posterior
  SimConfig config = baseline_config();
  config.design.eval_density = 0.0;
  config.horizon = 1;
  config.n_replications = 4000;

  config.params.true_state = 1;
  const auto up = simulate(config, 2);
  config.params.true_state = 0;
  const auto down = simulate(config, 2);

  double mean1 = 0.0, mean0 = 0.0;
  for (const auto& traj : up) mean1 += traj.lambda_path[1];
  for (const auto& traj : down) mean0 += traj.lambda_path[1];
  mean1 /= static_cast<double>(up.size());
  mean0 /= static_cast<double>(down.size());
  const double blended = 0.4 * mean1 + 0.6 * mean0;
  CHECK(blended == doctest::Approx(0.4).epsilon(0.02));
}

TEST_CASE("correlated binary generator reproduces the target covariance") {
  const double lambda0 = 0.4;
  const double varpi = 0.5;
  const MixSpec mix = low_mixing(lambda0, 0.6, 0.8);

  // model-implied two-point variance of the log-LR increment
  const double p1 = varpi * 0.8 + (1.0 - varpi) * mix.prob * 0.6;
  const double z1 = std::log(expert_lr(1, lambda0, varpi, 0.6, 0.8, mix));
  const double z0 = std::log(expert_lr(0, lambda0, varpi, 0.6, 0.8, mix));
  const double var_z = p1 * (1.0 - p1) * (z1 - z0) * (z1 - z0);

  const double rho_c = 0.5;
  SimConfig config = baseline_config();
  config.params.n_experts = 4;
  config.design.eval_density = 0.0;
  config.horizon = 1;
  config.n_replications = 40000;
  config.cov = CovSpec::equal(4, (1.0 - rho_c) * var_z, rho_c * var_z);

  const auto out = simulate(config, 2);

  // realized covariance of the log-LR increments across the panel
  std::vector<std::vector<double>> z(4);
  for (const auto& traj : out) {
    for (int i = 0; i < 4; ++i) {
      z[i].push_back(traj.reports[i][0] > 0.5 ? z1 : z0);
    }
  }
  const double m = static_cast<double>(out.size());
  auto moment = [&](int i, int j) {
    double mi = 0.0, mj = 0.0, mij = 0.0;
    for (std::size_t k = 0; k < out.size(); ++k) {
      mi += z[i][k];
      mj += z[j][k];
      mij += z[i][k] * z[j][k];
    }
    return mij / m - (mi / m) * (mj / m);
  };
  double var_avg = 0.0;
  for (int i = 0; i < 4; ++i) var_avg += moment(i, i);
  var_avg /= 4.0;
  double cov_avg = 0.0;
  int pairs = 0;
  for (int i = 0; i < 4; ++i) {
    for (int j = i + 1; j < 4; ++j) {
      cov_avg += moment(i, j);
      ++pairs;
    }
  }
  cov_avg /= pairs;

  CHECK(std::abs(var_avg - var_z) / var_z < 0.05);
  CHECK(std::abs(cov_avg - rho_c * var_z) / (rho_c * var_z) < 0.05);
}

TEST_CASE("correlated panel still learns under evaluation design") {
  SimConfig config = baseline_config();
  config.mode = SimMode::Gaussian;
  config.params.n_experts = 4;
  config.theta_value = 1.0;
  config.horizon = 400;
  config.n_replications = 20;
  config.design.eval_density = 0.25;
  config.cov = CovSpec::equal(4, 1.0, 1.0);  // rho_c = 0.5 at unit marginals

  const auto out = simulate(config, 2);
  double err_early = 0.0, err_late = 0.0, var_late = 0.0;
  for (const auto& traj : out) {
    err_early += std::abs(traj.mean_path[100] - traj.theta_value);
    err_late += std::abs(traj.mean_path[400] - traj.theta_value);
    var_late += traj.var_path[400];
  }
  CHECK(err_late < err_early);
  CHECK(var_late / 20.0 < 0.05);
  // posterior variance never increases
  for (const auto& traj : out) {
    for (std::size_t t = 1; t < traj.var_path.size(); ++t) {
      CHECK(traj.var_path[t] <= traj.var_path[t - 1] + 1e-15);
    }
  }
}

TEST_CASE("gaussian reputations stay flat under pure mimicry and move under design") {
  SimConfig config = baseline_config();
  config.mode = SimMode::Gaussian;
  config.params.n_experts = 4;
  config.horizon = 120;
  config.n_replications = 10;

  // no scored rounds, no tilt cost: exact mimicry kills type learning
  config.design.eval_density = 0.0;
  const auto mimic = simulate(config);
  for (const auto& traj : mimic) {
    for (const auto& path : traj.rho_paths) {
      for (double rho : path) CHECK(rho == doctest::Approx(0.5).epsilon(1e-9));
    }
  }

  // scored rounds separate the types
  config.design.eval_density = 0.25;
  const auto scored = simulate(config);
  double polarization = 0.0;
  std::size_t n = 0;
  for (const auto& traj : scored) {
    for (std::size_t i = 0; i < traj.rho_paths.size(); ++i) {
      const double correct =
          traj.types[i] == ExpertType::High ? traj.rho_paths[i].back() : 1.0 - traj.rho_paths[i].back();
      polarization += correct;
      ++n;
    }
  }
  CHECK(polarization / static_cast<double>(n) > 0.8);
}

TEST_CASE("identification_scenario flags the non-identified design") {
  SimConfig config = baseline_config();
  config.topics = 1;
  config.design.eval_density = 0.0;
  config.bias = std::vector<double>(10, 0.0);
  const auto data = identification_scenario(config);
  CHECK_FALSE(data.identified);
  CHECK_FALSE(data.warning.empty());
  CHECK(data.by_replication.empty());
}

TEST_CASE("two-topic gaussian scenario recovers planted bias and precision") {
  SimConfig config;
  config.mode = SimMode::Gaussian;
  config.params.n_experts = 4;
  config.params.p_low = 0.6;
  config.params.p_high = 0.8;
  config.forced_types = {ExpertType::High, ExpertType::High, ExpertType::Low, ExpertType::Low};
  config.bias = {0.5, -0.5, 0.5, 0.0};
  config.topics = 2;
  config.design.eval_density = 0.25;
  config.horizon = 1600;
  config.n_replications = 3;
  config.seed = 7;
  config.theta_value = 1.0;

  const auto data = identification_scenario(config);
  REQUIRE(data.identified);
  REQUIRE(data.by_replication.size() == 3);
  for (const auto& obs_all : data.by_replication) {
    // both topics present with distinct truths
    bool topic0 = false, topic1 = false;
    for (const auto& obs : obs_all) {
      topic0 |= obs.topic_id == 0;
      topic1 |= obs.topic_id == 1;
    }
    CHECK(topic0);
    CHECK(topic1);

    std::vector<GaussianFit> fits;
    for (int i = 0; i < 4; ++i) {
      std::vector<ScoredObservation> mine;
      for (const auto& obs : obs_all) {
        if (obs.expert_id == i) mine.push_back(obs);
      }
      CHECK(mine.size() > 300);
      fits.push_back(estimate_gaussian(mine));
    }
    CHECK(fits[0].b_hat > 0.2);
    CHECK(fits[1].b_hat < -0.2);
    CHECK(fits[2].b_hat > 0.2);
    CHECK(std::abs(fits[3].b_hat) < 0.2);
    // precision ordering: both highs above both lows
    CHECK(std::min(fits[0].p_hat, fits[1].p_hat) > std::max(fits[2].p_hat, fits[3].p_hat));
  }
}

TEST_CASE("simulate validates configuration consistency") {
  SimConfig config = baseline_config();
  config.cov = CovSpec::equal(3, 1.0, 0.1);  // wrong length
  CHECK_THROWS_AS(simulate(config), std::invalid_argument);
  config = baseline_config();
  config.bias = {0.1};
  CHECK_THROWS_AS(simulate(config), std::invalid_argument);
  config = baseline_config();
  config.horizon = 0;
  CHECK_THROWS_AS(simulate(config), std::invalid_argument);
}
