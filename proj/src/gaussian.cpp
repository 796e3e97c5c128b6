#include "panel/gaussian.hpp"

#include <cmath>
#include <stdexcept>

namespace panel {

namespace {

void check_variances(double prior_var, double sigma2_high, double sigma2_low) {
  if (!(prior_var >= 0.0)) {
    throw std::invalid_argument("prior variance must be nonnegative");
  }
  if (!(sigma2_high > 0.0 && sigma2_high <= sigma2_low)) {
    throw std::invalid_argument("need 0 < sigma2_high <= sigma2_low");
  }
}

}  // namespace

double mimicry_coefficient(double prior_var, double sigma2_high, double sigma2_low) {
  check_variances(prior_var, sigma2_high, sigma2_low);
  return std::sqrt((prior_var + sigma2_high) / (prior_var + sigma2_low));
}

double low_type_objective(double tilt, double prior_var, double sigma2_high, double sigma2_low) {
  check_variances(prior_var, sigma2_high, sigma2_low);
  if (tilt <= 0.0) {
    throw std::domain_error("low_type_objective requires tilt > 0");
  }
  const double x = tilt * tilt * (prior_var + sigma2_low) / (prior_var + sigma2_high);
  return 0.5 * (-x + 1.0 + std::log(x));
}

double optimal_tilt(double epsilon, const std::function<double(double)>& cost, double prior_var,
                    double sigma2_high, double sigma2_low) {
  if (epsilon < 0.0) {
    throw std::invalid_argument("epsilon must be nonnegative");
  }
  const double a_mim = mimicry_coefficient(prior_var, sigma2_high, sigma2_low);
  if (epsilon == 0.0) {
    return a_mim;
  }

  auto objective = [&](double a) {
    return low_type_objective(a, prior_var, sigma2_high, sigma2_low) - epsilon * cost(1.0 - a);
  };

  // The objective is strictly concave on (0,1], so golden-section over
  // [a_mim/2, 1] brackets the unique maximizer.
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double lo = 0.5 * a_mim;
  double hi = 1.0;
  double c = hi - (hi - lo) * inv_phi;
  double d = lo + (hi - lo) * inv_phi;
  double fc = objective(c);
  double fd = objective(d);
  while (hi - lo > 1e-10) {
    if (fc > fd) {
      hi = d;
      d = c;
      fd = fc;
      c = hi - (hi - lo) * inv_phi;
      fc = objective(c);
    } else {
      lo = c;
      c = d;
      fc = fd;
      d = lo + (hi - lo) * inv_phi;
      fd = objective(d);
    }
  }
  return 0.5 * (lo + hi);
}

EffectiveObservation effective_observation(const GaussianExpert& expert, double prior_mean) {
  expert.validate();
  const double h = expert.rho + (1.0 - expert.rho) * expert.tilt;
  const double noise = expert.rho * expert.sigma2_high +
                       (1.0 - expert.rho) * expert.tilt * expert.tilt * expert.sigma2_low;
  const double c =
      (1.0 - expert.rho) * (1.0 - expert.tilt) * prior_mean + h * expert.bias;
  return {h, noise, c};
}

GaussianBelief filter_update(const GaussianBelief& belief,
                             std::span<const std::pair<double, EffectiveObservation>> observations) {
  double precision = 1.0 / belief.variance;
  double weighted_innovation = 0.0;
  for (const auto& [y, obs] : observations) {
    if (!(obs.noise_var > 0.0)) {
      throw std::invalid_argument("filter_update requires positive noise variances");
    }
    precision += obs.loading * obs.loading / obs.noise_var;
    weighted_innovation +=
        obs.loading / obs.noise_var * (y - obs.intercept - obs.loading * belief.mean);
  }
  const double variance = 1.0 / precision;
  return GaussianBelief(belief.mean + variance * weighted_innovation, variance);
}

}  // namespace panel
