#pragma once

#include <functional>
#include <span>
#include <utility>

#include "panel/mathutil.hpp"

namespace panel {

// Posterior of the continuous state. Degenerate priors are rejected: with
// V = 0 the state would already be known.
struct GaussianBelief {
  double mean = 0.0;
  double variance = 1.0;

  GaussianBelief(double m, double v) : mean(m), variance(v) {
    if (!(v > 0.0)) {
      throw std::invalid_argument("GaussianBelief requires strictly positive variance");
    }
  }
};

// One expert in the continuous extension. Noise variances are inverse
// precisions (sigma_p^2 = 1/p), so sigma2_high < sigma2_low.
struct GaussianExpert {
  double sigma2_high;  // high-type noise variance
  double sigma2_low;   // low-type noise variance
  double rho;          // reputation Pr(type = High)
  double bias = 0.0;
  double tilt = 1.0;   // low-type shrinkage a in (0,1]

  void validate() const {
    if (!(sigma2_high > 0.0 && sigma2_high < sigma2_low)) {
      throw std::invalid_argument("need 0 < sigma2_high < sigma2_low");
    }
    if (!(rho >= 0.0 && rho <= 1.0)) {
      throw std::invalid_argument("rho must lie in [0,1]");
    }
    if (!(tilt > 0.0 && tilt <= 1.0)) {
      throw std::invalid_argument("tilt must lie in (0,1]");
    }
  }
};

// Reputation-averaged single observation equation y = h*theta + c + noise.
struct EffectiveObservation {
  double loading;    // h = rho + (1-rho) a
  double noise_var;  // rho sigma2_H + (1-rho) a^2 sigma2_L
  double intercept;  // (1-rho)(1-a) m_prev + h b
};

// Shrinkage toward the prior mean that equalizes the two types' predictive
// report variances, a = sqrt((V + sigma2_H)/(V + sigma2_L)).
double mimicry_coefficient(double prior_var, double sigma2_high, double sigma2_low);

// Low type's expected one-step reputational objective at tilt a, normalized
// so the maximum (attained at the mimicry coefficient) is exactly zero.
double low_type_objective(double tilt, double prior_var, double sigma2_high, double sigma2_low);

// Maximizes low_type_objective(a) - epsilon * cost(1 - a) over (0,1] by
// golden-section search (tolerance 1e-10). The optimum sits strictly between
// the mimicry coefficient and 1 for any epsilon > 0 and moves toward 1 as
// epsilon grows; epsilon = 0 returns the mimicry coefficient itself.
double optimal_tilt(double epsilon, const std::function<double(double)>& cost, double prior_var,
                    double sigma2_high, double sigma2_low);

// Quadratic deviation cost, the default cost family.
inline double quadratic_cost(double x) { return x * x; }

EffectiveObservation effective_observation(const GaussianExpert& expert, double prior_mean);

// One-step precision-form linear filter over a panel of effective
// observations. An empty panel leaves the belief unchanged.
GaussianBelief filter_update(const GaussianBelief& belief,
                             std::span<const std::pair<double, EffectiveObservation>> observations);

}  // namespace panel
