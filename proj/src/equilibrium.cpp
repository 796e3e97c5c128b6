#include "panel/equilibrium.hpp"

#include <cmath>
#include <stdexcept>

namespace panel {

namespace {

void check_precisions(double p_low, double p_high) {
  if (!(0.5 <= p_low && p_low < p_high && p_high < 1.0)) {
    throw std::invalid_argument("precisions must satisfy 1/2 <= p_L < p_H < 1");
  }
}

void check_lambda(double lambda) {
  if (!(lambda > 0.0 && lambda < 1.0)) {
    throw std::invalid_argument("lambda must lie strictly inside (0,1)");
  }
}

void check_mix_consistency(double lambda, const MixSpec& mix) {
  const bool at_half = std::abs(lambda - 0.5) <= kHalfBeliefTol;
  switch (mix.side) {
    case MixSide::Truthful:
      return;  // truthful play is on-path at any belief (scored rounds)
    case MixSide::MixAfterS1:
      if (at_half || lambda > 0.5) {
        throw std::invalid_argument("MixAfterS1 requires lambda < 1/2");
      }
      return;
    case MixSide::MixAfterS0:
      if (at_half || lambda < 0.5) {
        throw std::invalid_argument("MixAfterS0 requires lambda > 1/2");
      }
      return;
  }
}

}  // namespace

void ModelParams::validate() const {
  check_precisions(p_low, p_high);
  if (!(prior_high > 0.0 && prior_high < 1.0)) {
    throw std::invalid_argument("prior_high must lie strictly inside (0,1)");
  }
  if (!(lambda0 > 0.0 && lambda0 < 1.0)) {
    throw std::invalid_argument("lambda0 must lie strictly inside (0,1)");
  }
  if (n_experts < 0) {
    throw std::invalid_argument("n_experts must be nonnegative");
  }
  if (true_state != 0 && true_state != 1) {
    throw std::invalid_argument("true_state must be 0 or 1");
  }
}

double affine_diag(double p, double lambda) {
  return (1.0 - lambda) + (2.0 * lambda - 1.0) * p;
}

MixSpec low_mixing(double lambda, double p_low, double p_high) {
  check_precisions(p_low, p_high);
  check_lambda(lambda);
  if (std::abs(lambda - 0.5) <= kHalfBeliefTol) {
    return MixSpec::truthful();
  }
  const double a_high = affine_diag(p_high, lambda);
  const double a_low = affine_diag(p_low, lambda);
  if (lambda < 0.5) {
    return {MixSide::MixAfterS1, a_high / a_low};
  }
  return {MixSide::MixAfterS0, (a_high - a_low) / (1.0 - a_low)};
}

ReportLikelihoods report_likelihoods(ExpertType type, double lambda, const MixSpec& mix,
                                     double p_low, double p_high) {
  check_lambda(lambda);
  check_mix_consistency(lambda, mix);

  ReportLikelihoods out;
  auto set = [&out](double p11, double p10) {
    out.table[1][1] = p11;
    out.table[1][0] = p10;
    out.table[0][1] = 1.0 - p11;
    out.table[0][0] = 1.0 - p10;
  };

  if (type == ExpertType::High) {
    set(p_high, 1.0 - p_high);
    return out;
  }
  switch (mix.side) {
    case MixSide::Truthful:
      set(p_low, 1.0 - p_low);
      break;
    case MixSide::MixAfterS1:
      set(mix.prob * p_low, mix.prob * (1.0 - p_low));
      break;
    case MixSide::MixAfterS0:
      set(p_low + mix.prob * (1.0 - p_low), (1.0 - p_low) + mix.prob * p_low);
      break;
  }
  return out;
}

double reputation_update(double prior_rho, int y, double lambda, const ReportLikelihoods& high,
                         const ReportLikelihoods& low) {
  if (!(prior_rho >= 0.0 && prior_rho <= 1.0)) {
    throw std::invalid_argument("prior_rho must lie in [0,1]");
  }
  check_lambda(lambda);
  const double lh = lambda * high.pr(y, 1) + (1.0 - lambda) * high.pr(y, 0);
  const double ll = lambda * low.pr(y, 1) + (1.0 - lambda) * low.pr(y, 0);
  if (lh <= 0.0 && ll <= 0.0) {
    throw off_path_error("report has zero likelihood under both types");
  }
  const double num = prior_rho * lh;
  const double den = num + (1.0 - prior_rho) * ll;
  if (den <= 0.0) {
    throw off_path_error("degenerate reputation update: zero total likelihood");
  }
  return num / den;
}

double expert_lr(int y, double lambda, double rho, double p_low, double p_high,
                 const MixSpec& mix) {
  const ReportLikelihoods high = report_likelihoods(ExpertType::High, lambda, mix, p_low, p_high);
  const ReportLikelihoods low = report_likelihoods(ExpertType::Low, lambda, mix, p_low, p_high);
  const double num = rho * high.pr(y, 1) + (1.0 - rho) * low.pr(y, 1);
  const double den = rho * high.pr(y, 0) + (1.0 - rho) * low.pr(y, 0);
  if (den <= 0.0) {
    throw off_path_error("expert likelihood ratio has zero denominator");
  }
  return num / den;
}

PublicBelief logit_update(const PublicBelief& belief, std::span<const int> reports,
                          std::span<const double> reputations, double p_low, double p_high,
                          const MixSpec& mix) {
  if (reports.size() != reputations.size()) {
    throw std::invalid_argument("reports and reputations must have equal length");
  }
  const double lambda = belief.lambda();
  double shift = 0.0;
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const double r = expert_lr(reports[i], lambda, reputations[i], p_low, p_high, mix);
    shift += std::log(clamp_likelihood(r));
  }
  return PublicBelief::from_logit(belief.log_odds() + shift);
}

double indifference_residual(double alpha_candidate, double lambda, double p_low, double p_high) {
  check_precisions(p_low, p_high);
  if (!(lambda > 0.0 && lambda < 0.5)) {
    throw std::invalid_argument("indifference_residual requires lambda in (0, 1/2)");
  }
  if (alpha_candidate <= 0.0) {
    throw std::domain_error("indifference residual diverges at alpha = 0");
  }
  const double a_high = affine_diag(p_high, lambda);
  const double a_low = affine_diag(p_low, lambda);
  return a_high / (alpha_candidate * a_low) -
         (1.0 - a_high) / (1.0 - alpha_candidate * a_low);
}

double indifference_residual_beta(double beta_candidate, double lambda, double p_low,
                                  double p_high) {
  check_precisions(p_low, p_high);
  if (!(lambda > 0.5 && lambda < 1.0)) {
    throw std::invalid_argument("indifference_residual_beta requires lambda in (1/2, 1)");
  }
  if (beta_candidate >= 1.0) {
    throw std::domain_error("indifference residual diverges at beta = 1");
  }
  const double a_high = affine_diag(p_high, lambda);
  const double a_low = affine_diag(p_low, lambda);
  const double l1 = a_low + beta_candidate * (1.0 - a_low);
  const double l0 = (1.0 - beta_candidate) * (1.0 - a_low);
  return a_high / l1 - (1.0 - a_high) / l0;
}

}  // namespace panel
