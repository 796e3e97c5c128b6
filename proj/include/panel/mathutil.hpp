#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>

namespace panel {

// Floor applied to likelihoods before taking logs; guards against underflow
// on long histories without perturbing desk-scale values.
inline constexpr double kLikelihoodFloor = 1e-300;

inline double clamp_likelihood(double x) {
  return x < kLikelihoodFloor ? kLikelihoodFloor : x;
}

inline double logit(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw std::domain_error("logit: argument must lie strictly inside (0,1)");
  }
  return std::log(p / (1.0 - p));
}

inline double logistic(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// KL divergence between Bernoulli(p) and Bernoulli(q), in nats.
inline double bernoulli_kl(double p, double q) {
  auto term = [](double a, double b) {
    if (a == 0.0) return 0.0;
    return a * std::log(a / b);
  };
  return term(p, q) + term(1.0 - p, 1.0 - q);
}

inline double norm_pdf(double x, double mean, double var) {
  const double d = x - mean;
  return std::exp(-0.5 * d * d / var) / std::sqrt(2.0 * M_PI * var);
}

inline double log_norm_pdf(double x, double mean, double var) {
  const double d = x - mean;
  return -0.5 * (d * d / var + std::log(2.0 * M_PI * var));
}

inline double norm_cdf(double x) { return 0.5 * std::erfc(-x / M_SQRT2); }

// Inverse standard normal CDF (Acklam's rational approximation, refined by
// one Halley step; absolute error below 1e-13 on (0,1)).
double norm_ppf(double p);

}  // namespace panel
