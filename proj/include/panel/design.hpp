#pragma once

#include "panel/model.hpp"

namespace panel {

enum class ScoreKind { LogScore, BrierScore, None };

// The two light-touch design levers: evaluation windows of density q scored
// by a strictly proper rule, and a flat penalty kappa for reporting against
// one's signal. tilt_cost scales the convex deviation cost in the Gaussian
// extension; eval_weight tempers how hard scored rounds move reputations
// (1 = full Bayesian weight).
struct DesignConfig {
  double eval_density = 0.0;  // q in [0,1]
  ScoreKind score = ScoreKind::LogScore;
  double penalty = 0.0;      // kappa >= 0
  double tilt_cost = 0.0;    // epsilon >= 0
  double eval_weight = 1.0;

  void validate() const;
};

// Average strategy across scored and unscored rounds: alpha_q = (1-q)alpha + q,
// beta_q = (1-q)beta.
MixSpec effective_mixing(const MixSpec& mix, double q);

// Strictly proper score of forecast pi against binary outcome, oriented so
// higher is better (log score <= 0, Brier in [-1, 0]).
double score(ScoreKind kind, double forecast, int outcome);

// Expected score loss from reporting Bern(reported) when the truth is
// Bern(truth): Bernoulli KL for the log score, squared gap for Brier.
double expected_score_gap(double truth, double reported, ScoreKind kind);

// Mixing of the low type when lying costs kappa: solves the tilted
// indifference rho+(truth) = rho+(lie) - kappa by bisection (tolerance 1e-10)
// on the distorted side; returns the truthful corner when no interior root
// exists. Posterior levels need a type prior, which the indifference no
// longer cancels; varpi supplies it.
MixSpec penalty_mixing(double lambda, double p_low, double p_high, double kappa,
                       double varpi = 0.5);

// Reputation update on a scored round: the high-type weight is multiplied by
// exp(w * S_H) and the low-type weight by exp(w * S_L), then renormalized.
// With S_p the log-likelihood of the report under type p at the revealed
// truth and w = 1 this is the exact Bayes posterior.
double scored_reputation_update(double rho, double score_high, double score_low,
                                double eval_weight);

// Binary specialization: on scored rounds both types report truthfully, so
// S_p = log(p) when the report matches the revealed state and log(1-p)
// otherwise.
double scored_reputation_update_binary(double rho, int report, int theta, double p_low,
                                       double p_high, double eval_weight);

}  // namespace panel
