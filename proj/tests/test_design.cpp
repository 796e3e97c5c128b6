#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "panel/design.hpp"
#include "panel/equilibrium.hpp"

using namespace panel;

namespace {

// Independent oracle for the log-score gap, coded from the divergence
// definition rather than through the library helper.
double kl_oracle(double p, double q) {
  return p * std::log(p / q) + (1.0 - p) * std::log((1.0 - p) / (1.0 - q));
}

// Reputational gain of the lie over truth at a candidate mix (test-side
// replica used to cross-check the bisection in penalty_mixing).
double lie_gain_at(double lambda, double pl, double ph, double varpi, MixSide side, double prob) {
  const MixSpec mix{side, prob};
  const auto high = report_likelihoods(ExpertType::High, lambda, mix, pl, ph);
  const auto low = report_likelihoods(ExpertType::Low, lambda, mix, pl, ph);
  const int truth = side == MixSide::MixAfterS1 ? 1 : 0;
  return reputation_update(varpi, 1 - truth, lambda, high, low) -
         reputation_update(varpi, truth, lambda, high, low);
}

}  // namespace

TEST_CASE("effective_mixing") {
  const MixSpec alpha_mix = low_mixing(0.4, 0.6, 0.8);
  // q = 0 is the identity
  CHECK(effective_mixing(alpha_mix, 0.0).prob == doctest::Approx(alpha_mix.prob).epsilon(1e-15));
  // q = 1 forces full truth on both sides
  CHECK(effective_mixing(alpha_mix, 1.0).prob == doctest::Approx(1.0));
  const MixSpec beta_mix = low_mixing(0.7, 0.6, 0.8);
  CHECK(effective_mixing(beta_mix, 1.0).prob == doctest::Approx(0.0));
  // the worked value at lambda = 0.4, q = 0.5
  CHECK(effective_mixing(alpha_mix, 0.5).prob == doctest::Approx(0.9583333333).epsilon(1e-9));

  // affine in q with the truthful corner at q = 1
  for (double q : {0.1, 0.3, 0.6, 0.9}) {
    CHECK(effective_mixing(alpha_mix, q).prob ==
          doctest::Approx((1.0 - q) * alpha_mix.prob + q).epsilon(1e-15));
    CHECK(effective_mixing(beta_mix, q).prob ==
          doctest::Approx((1.0 - q) * beta_mix.prob).epsilon(1e-15));
  }
}

TEST_CASE("score values and orientation") {
  CHECK(score(ScoreKind::LogScore, 1.0, 1) == doctest::Approx(0.0));
  CHECK(score(ScoreKind::BrierScore, 0.5, 0) == doctest::Approx(-0.25));
  CHECK(score(ScoreKind::BrierScore, 0.5, 1) == doctest::Approx(-0.25));
  CHECK(score(ScoreKind::LogScore, 0.7, 0) == doctest::Approx(std::log(0.3)).epsilon(1e-12));
  CHECK_THROWS_AS(score(ScoreKind::LogScore, 1.0, 0), std::domain_error);
  CHECK_THROWS_AS(score(ScoreKind::LogScore, 0.0, 1), std::domain_error);
}

TEST_CASE("expected_score_gap") {
  CHECK(expected_score_gap(0.7, 0.7, ScoreKind::LogScore) == doctest::Approx(0.0));
  CHECK(expected_score_gap(0.7, 0.3, ScoreKind::LogScore) ==
        doctest::Approx(0.33891).epsilon(1e-4));
  CHECK(expected_score_gap(0.7, 0.3, ScoreKind::BrierScore) == doctest::Approx(0.16));

  // strict propriety on a grid, and the log-score/KL identity against an
  // independently coded Bernoulli divergence
  for (int i = 1; i <= 9; ++i) {
    const double p = i / 10.0;
    for (int j = 1; j <= 9; ++j) {
      const double q = j / 10.0;
      if (i == j) continue;
      CHECK(expected_score_gap(p, q, ScoreKind::LogScore) > 0.0);
      CHECK(expected_score_gap(p, q, ScoreKind::BrierScore) > 0.0);
      CHECK(std::abs(expected_score_gap(p, q, ScoreKind::LogScore) - kl_oracle(p, q)) < 1e-12);
    }
  }
}

TEST_CASE("penalty_mixing reduces to the closed form at kappa = 0") {
  for (double lam : {0.2, 0.4, 0.6, 0.85}) {
    const MixSpec base = low_mixing(lam, 0.6, 0.8);
    const MixSpec tilted = penalty_mixing(lam, 0.6, 0.8, 0.0);
    CHECK(tilted.side == base.side);
    CHECK(tilted.prob == doctest::Approx(base.prob).epsilon(1e-15));
  }
}

TEST_CASE("penalty_mixing interior root and corner") {
  const double lam = 0.4;
  const double alpha0 = low_mixing(lam, 0.6, 0.8).prob;

  const MixSpec tilted = penalty_mixing(lam, 0.6, 0.8, 0.01);
  CHECK(tilted.side == MixSide::MixAfterS1);
  CHECK(tilted.prob > alpha0);
  CHECK(tilted.prob < 1.0);
  // the returned mix solves the tilted indifference
  CHECK(std::abs(lie_gain_at(lam, 0.6, 0.8, 0.5, MixSide::MixAfterS1, tilted.prob) - 0.01) <
        1e-8);

  // dense grid scan cross-check of the bisection
  double best = alpha0;
  double best_err = 1e9;
  for (int k = 0; k <= 200000; ++k) {
    const double a = alpha0 + (1.0 - alpha0) * k / 200000.0;
    const double err = std::abs(lie_gain_at(lam, 0.6, 0.8, 0.5, MixSide::MixAfterS1, a) - 0.01);
    if (err < best_err) {
      best_err = err;
      best = a;
    }
  }
  CHECK(tilted.prob == doctest::Approx(best).epsilon(1e-4));

  // a penalty above the maximal reputational gain forces the truthful corner
  const MixSpec corner = penalty_mixing(lam, 0.6, 0.8, 1.0);
  CHECK(corner.prob == doctest::Approx(1.0));
  const MixSpec corner_beta = penalty_mixing(0.7, 0.6, 0.8, 1.0);
  CHECK(corner_beta.prob == doctest::Approx(0.0));
}

TEST_CASE("penalty monotonicity in kappa on a grid") {
  for (double lam : {0.15, 0.35, 0.45}) {
    const double alpha0 = low_mixing(lam, 0.6, 0.8).prob;
    double prev = alpha0;
    for (double kappa : {0.001, 0.005, 0.02, 0.08, 0.5}) {
      const double a = penalty_mixing(lam, 0.6, 0.8, kappa).prob;
      CHECK(a >= prev - 1e-9);
      CHECK(a > alpha0);  // strictly toward truth whenever interior at kappa=0
      prev = a;
    }
  }
  for (double lam : {0.55, 0.7, 0.9}) {
    const double beta0 = low_mixing(lam, 0.6, 0.8).prob;
    double prev = beta0;
    for (double kappa : {0.001, 0.005, 0.02, 0.08, 0.5}) {
      const double b = penalty_mixing(lam, 0.6, 0.8, kappa).prob;
      CHECK(b <= prev + 1e-9);
      CHECK(b < beta0);
      prev = b;
    }
  }
}

TEST_CASE("scored reputation update is Bayes at unit weight") {
  // correct report multiplies the odds by p_H/p_L
  const double rho = 0.4;
  const double updated = scored_reputation_update_binary(rho, 1, 1, 0.6, 0.8, 1.0);
  const double odds = rho / (1.0 - rho) * (0.8 / 0.6);
  CHECK(updated == doctest::Approx(odds / (1.0 + odds)).epsilon(1e-12));
  // wrong report multiplies the odds by (1-p_H)/(1-p_L)
  const double down = scored_reputation_update_binary(rho, 0, 1, 0.6, 0.8, 1.0);
  const double odds_down = rho / (1.0 - rho) * (0.2 / 0.4);
  CHECK(down == doctest::Approx(odds_down / (1.0 + odds_down)).epsilon(1e-12));
  // zero weight leaves the reputation unchanged
  CHECK(scored_reputation_update_binary(rho, 0, 1, 0.6, 0.8, 0.0) == doctest::Approx(rho));
  // degenerate reputations are absorbing
  CHECK(scored_reputation_update_binary(1.0, 0, 1, 0.6, 0.8, 1.0) == doctest::Approx(1.0));
  CHECK(scored_reputation_update_binary(0.0, 1, 1, 0.6, 0.8, 1.0) == doctest::Approx(0.0));
}

TEST_CASE("DesignConfig validation") {
  DesignConfig config;
  CHECK_NOTHROW(config.validate());
  config.eval_density = 1.5;
  CHECK_THROWS_AS(config.validate(), std::invalid_argument);
  config.eval_density = 0.5;
  config.penalty = -0.1;
  CHECK_THROWS_AS(config.validate(), std::invalid_argument);
}
