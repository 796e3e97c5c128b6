#include "panel/design.hpp"

#include <cmath>
#include <stdexcept>

#include "panel/equilibrium.hpp"

namespace panel {

void DesignConfig::validate() const {
  if (!(eval_density >= 0.0 && eval_density <= 1.0)) {
    throw std::invalid_argument("eval_density must lie in [0,1]");
  }
  if (penalty < 0.0 || tilt_cost < 0.0 || eval_weight < 0.0) {
    throw std::invalid_argument("penalty, tilt_cost and eval_weight must be nonnegative");
  }
}

MixSpec effective_mixing(const MixSpec& mix, double q) {
  if (!(q >= 0.0 && q <= 1.0)) {
    throw std::invalid_argument("q must lie in [0,1]");
  }
  switch (mix.side) {
    case MixSide::MixAfterS1:
      return {mix.side, (1.0 - q) * mix.prob + q};
    case MixSide::MixAfterS0:
      return {mix.side, (1.0 - q) * mix.prob};
    case MixSide::Truthful:
      return mix;
  }
  return mix;
}

double score(ScoreKind kind, double forecast, int outcome) {
  if (outcome != 0 && outcome != 1) {
    throw std::invalid_argument("outcome must be 0 or 1");
  }
  if (!(forecast >= 0.0 && forecast <= 1.0)) {
    throw std::invalid_argument("forecast must lie in [0,1]");
  }
  switch (kind) {
    case ScoreKind::LogScore: {
      const double p = outcome == 1 ? forecast : 1.0 - forecast;
      if (p <= 0.0) {
        throw std::domain_error("log score is -inf for a certain forecast of the wrong outcome");
      }
      return std::log(p);
    }
    case ScoreKind::BrierScore: {
      const double d = forecast - outcome;
      return -d * d;
    }
    case ScoreKind::None:
      return 0.0;
  }
  return 0.0;
}

double expected_score_gap(double truth, double reported, ScoreKind kind) {
  if (!(truth > 0.0 && truth < 1.0 && reported > 0.0 && reported < 1.0)) {
    throw std::invalid_argument("expected_score_gap requires interior probabilities");
  }
  switch (kind) {
    case ScoreKind::LogScore:
      return bernoulli_kl(truth, reported);
    case ScoreKind::BrierScore: {
      const double d = truth - reported;
      return d * d;
    }
    case ScoreKind::None:
      return 0.0;
  }
  return 0.0;
}

namespace {

// Reputational gain of the lie over the truthful report on the distorted
// side, as a function of the low type's mixing parameter.
double lie_gain(double lambda, double p_low, double p_high, double varpi, const MixSpec& mix) {
  const ReportLikelihoods high = report_likelihoods(ExpertType::High, lambda, mix, p_low, p_high);
  const ReportLikelihoods low = report_likelihoods(ExpertType::Low, lambda, mix, p_low, p_high);
  const int truth_report = mix.side == MixSide::MixAfterS1 ? 1 : 0;
  const int lie_report = 1 - truth_report;
  const double rep_truth = reputation_update(varpi, truth_report, lambda, high, low);
  const double rep_lie = reputation_update(varpi, lie_report, lambda, high, low);
  return rep_lie - rep_truth;
}

}  // namespace

MixSpec penalty_mixing(double lambda, double p_low, double p_high, double kappa, double varpi) {
  if (kappa < 0.0) {
    throw std::invalid_argument("kappa must be nonnegative");
  }
  if (!(varpi > 0.0 && varpi < 1.0)) {
    throw std::invalid_argument("varpi must lie strictly inside (0,1)");
  }
  const MixSpec base = low_mixing(lambda, p_low, p_high);
  if (kappa == 0.0 || base.side == MixSide::Truthful) {
    return base;
  }

  const bool below_half = base.side == MixSide::MixAfterS1;
  auto gain_at = [&](double prob) {
    return lie_gain(lambda, p_low, p_high, varpi, {base.side, prob});
  };

  // The gain is zero at the no-penalty mix and maximal at the truthful
  // corner; an interior root of gain = kappa exists iff kappa is below the
  // corner gain.
  const double corner = below_half ? 1.0 : 0.0;
  if (gain_at(corner) <= kappa) {
    return {base.side, corner};
  }

  double lo = below_half ? base.prob : 0.0;   // gain <= kappa here
  double hi = below_half ? 1.0 : base.prob;   // bracket end nearer truth
  // For lambda > 1/2 the gain decreases in beta, so the root lies in
  // [0, beta0] with gain(beta0) = 0; orient the bisection accordingly.
  for (int iter = 0; iter < 200 && hi - lo > 1e-10; ++iter) {
    const double mid = 0.5 * (lo + hi);
    const double g = gain_at(mid);
    if (below_half) {
      (g < kappa ? lo : hi) = mid;
    } else {
      (g > kappa ? lo : hi) = mid;
    }
  }
  return {base.side, 0.5 * (lo + hi)};
}

double scored_reputation_update(double rho, double score_high, double score_low,
                                double eval_weight) {
  if (!(rho >= 0.0 && rho <= 1.0)) {
    throw std::invalid_argument("rho must lie in [0,1]");
  }
  if (rho == 0.0 || rho == 1.0) {
    return rho;
  }
  // Work with the log odds to keep extreme scores well-behaved.
  const double log_odds = std::log(rho / (1.0 - rho)) + eval_weight * (score_high - score_low);
  return logistic(log_odds);
}

double scored_reputation_update_binary(double rho, int report, int theta, double p_low,
                                       double p_high, double eval_weight) {
  const bool correct = report == theta;
  const double s_high = std::log(correct ? p_high : 1.0 - p_high);
  const double s_low = std::log(correct ? p_low : 1.0 - p_low);
  return scored_reputation_update(rho, s_high, s_low, eval_weight);
}

}  // namespace panel
