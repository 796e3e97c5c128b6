#pragma once

#include <span>
#include <vector>

#include "panel/gaussian.hpp"
#include "panel/model.hpp"

namespace panel {

using Matrix = std::vector<std::vector<double>>;

// Common-shock covariance Sigma = diag(v) + tau2 * 11'. With equal marginals
// the pairwise correlation is rho_c = tau2 / (tau2 + v).
struct CovSpec {
  std::vector<double> marginal_vars;
  double common_var = 0.0;  // tau^2

  void validate() const;
  std::size_t size() const { return marginal_vars.size(); }

  static CovSpec equal(std::size_t n, double v, double tau2) {
    return {std::vector<double>(n, v), tau2};
  }
};

// Closed-form inverse of diag(v) + tau2 * 11' via the rank-one Woodbury
// identity; exactly diag(1/v) when tau2 = 0.
Matrix woodbury_inverse(const CovSpec& cov);

// Sigma^{-1} x computed in O(N) without forming the matrix.
std::vector<double> apply_inverse(const CovSpec& cov, std::span<const double> x);

// Normalized GLS aggregation weights Sigma^{-1} 1 / (1' Sigma^{-1} 1); they
// sum to one and reduce to precision weights for tau2 = 0.
std::vector<double> gls_weights(const CovSpec& cov);

enum class GlsMode {
  // Weights sum to one (the averaging convention).
  Normalized,
  // Raw Sigma^{-1} 1 weights; reduces to the plain precision-weighted sum of
  // independent increments when tau2 = 0, and to the unweighted sum when in
  // addition all marginal variances are 1. Default for simulations so the
  // independent baseline is nested exactly.
  InformationWeighted,
};

// Correlation-aware log-odds update: logit(lambda_t) = logit(lambda_{t-1})
// + w' z with z the vector of per-expert log-likelihood increments.
PublicBelief gls_logit_update(const PublicBelief& belief, std::span<const double> z,
                              const CovSpec& cov, GlsMode mode = GlsMode::InformationWeighted);

// Total information about the state carried by loadings h under Sigma,
// h' Sigma^{-1} h; strictly decreasing in tau2 for fixed h and marginals.
double information_increment(std::span<const double> loadings, const CovSpec& cov);

// One-step linear filter with correlated observation noise:
// V_t^{-1} = V_{t-1}^{-1} + h' Sigma^{-1} h,
// m_t = m_{t-1} + V_t h' Sigma^{-1} (y - c - h m_{t-1}).
GaussianBelief correlated_filter_update(const GaussianBelief& belief, std::span<const double> y,
                                        std::span<const double> loadings,
                                        std::span<const double> intercepts, const CovSpec& cov);

}  // namespace panel
