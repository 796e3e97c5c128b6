#pragma once

#include <span>

#include "panel/model.hpp"

namespace panel {

// A(p; lambda) = (1-lambda) + (2*lambda - 1) * p, the probability that a
// precision-p signal agrees with the lambda-weighted prior direction.
double affine_diag(double p, double lambda);

// Closed-form one-sided mixing of the low type at public belief lambda:
// alpha = A(p_H)/A(p_L) below 1/2, beta = (A(p_H)-A(p_L))/(1-A(p_L)) above.
MixSpec low_mixing(double lambda, double p_low, double p_high);

// Conditional report likelihoods for one type under the given mix. The mix
// must be consistent with lambda (side matches the lambda region).
ReportLikelihoods report_likelihoods(ExpertType type, double lambda, const MixSpec& mix,
                                     double p_low, double p_high);

// One-step reputation posterior after report y, using marginal likelihoods
// l_p(y; lambda) = lambda*l_p(y|1) + (1-lambda)*l_p(y|0). Throws off_path_error
// when both marginals vanish; simulation callers apply the off-path rule
// rho+ = 0 instead.
double reputation_update(double prior_rho, int y, double lambda, const ReportLikelihoods& high,
                         const ReportLikelihoods& low);

// Reputation-weighted likelihood ratio Pr(y|theta=1)/Pr(y|theta=0) of a
// single expert's report.
double expert_lr(int y, double lambda, double rho, double p_low, double p_high,
                 const MixSpec& mix);

// Additive log-odds aggregation over a panel of conditionally independent
// reports: logit(lambda_t) = logit(lambda_{t-1}) + sum_i log r_i.
PublicBelief logit_update(const PublicBelief& belief, std::span<const int> reports,
                          std::span<const double> reputations, double p_low, double p_high,
                          const MixSpec& mix);

// Residual g(alpha; lambda) = A_H/(alpha*A_L) - (1-A_H)/(1-alpha*A_L) of the
// low type's reputational indifference for lambda < 1/2. Strictly decreasing
// in alpha with root at the closed-form alpha(lambda).
double indifference_residual(double alpha_candidate, double lambda, double p_low, double p_high);

// Symmetric residual over beta for lambda > 1/2; zero at the closed-form
// beta(lambda).
double indifference_residual_beta(double beta_candidate, double lambda, double p_low,
                                  double p_high);

// Report off the equilibrium support (both type likelihoods zero).
struct off_path_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace panel
