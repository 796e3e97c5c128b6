#include "panel/correlated.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace panel {

void CovSpec::validate() const {
  if (marginal_vars.empty()) {
    throw std::invalid_argument("CovSpec needs at least one marginal variance");
  }
  for (double v : marginal_vars) {
    if (!(v > 0.0)) {
      throw std::invalid_argument("marginal variances must be strictly positive");
    }
  }
  if (!(common_var >= 0.0)) {
    throw std::invalid_argument("common_var must be nonnegative");
  }
}

Matrix woodbury_inverse(const CovSpec& cov) {
  cov.validate();
  const std::size_t n = cov.size();
  std::vector<double> dinv(n);
  for (std::size_t i = 0; i < n; ++i) dinv[i] = 1.0 / cov.marginal_vars[i];

  Matrix inv(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) inv[i][i] = dinv[i];
  if (cov.common_var == 0.0) {
    return inv;
  }
  const double s = std::accumulate(dinv.begin(), dinv.end(), 0.0);
  const double factor = 1.0 / (1.0 / cov.common_var + s);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      inv[i][j] -= dinv[i] * factor * dinv[j];
    }
  }
  return inv;
}

std::vector<double> apply_inverse(const CovSpec& cov, std::span<const double> x) {
  cov.validate();
  const std::size_t n = cov.size();
  if (x.size() != n) {
    throw std::invalid_argument("apply_inverse: dimension mismatch");
  }
  std::vector<double> out(n);
  double s = 0.0;
  double dot = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = x[i] / cov.marginal_vars[i];
    s += 1.0 / cov.marginal_vars[i];
    dot += out[i];
  }
  if (cov.common_var > 0.0) {
    const double factor = dot / (1.0 / cov.common_var + s);
    for (std::size_t i = 0; i < n; ++i) {
      out[i] -= factor / cov.marginal_vars[i];
    }
  }
  return out;
}

std::vector<double> gls_weights(const CovSpec& cov) {
  const std::vector<double> ones(cov.size(), 1.0);
  std::vector<double> w = apply_inverse(cov, ones);
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  for (double& wi : w) wi /= total;
  return w;
}

PublicBelief gls_logit_update(const PublicBelief& belief, std::span<const double> z,
                              const CovSpec& cov, GlsMode mode) {
  if (z.size() != cov.size()) {
    throw std::invalid_argument("gls_logit_update: increment length must match CovSpec");
  }
  const std::vector<double> ones(cov.size(), 1.0);
  std::vector<double> w = apply_inverse(cov, ones);
  if (mode == GlsMode::Normalized) {
    const double total = std::accumulate(w.begin(), w.end(), 0.0);
    for (double& wi : w) wi /= total;
  }
  double shift = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) shift += w[i] * z[i];
  return PublicBelief::from_logit(belief.log_odds() + shift);
}

double information_increment(std::span<const double> loadings, const CovSpec& cov) {
  if (loadings.size() != cov.size()) {
    throw std::invalid_argument("information_increment: dimension mismatch");
  }
  const std::vector<double> sinv_h = apply_inverse(cov, loadings);
  double info = 0.0;
  for (std::size_t i = 0; i < loadings.size(); ++i) info += loadings[i] * sinv_h[i];
  return info;
}

GaussianBelief correlated_filter_update(const GaussianBelief& belief, std::span<const double> y,
                                        std::span<const double> loadings,
                                        std::span<const double> intercepts, const CovSpec& cov) {
  const std::size_t n = cov.size();
  if (y.size() != n || loadings.size() != n || intercepts.size() != n) {
    throw std::invalid_argument("correlated_filter_update: dimension mismatch");
  }
  std::vector<double> residual(n);
  for (std::size_t i = 0; i < n; ++i) {
    residual[i] = y[i] - intercepts[i] - loadings[i] * belief.mean;
  }
  const std::vector<double> sinv_r = apply_inverse(cov, residual);
  const std::vector<double> sinv_h = apply_inverse(cov, loadings);
  double info = 0.0;
  double innovation = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    info += loadings[i] * sinv_h[i];
    innovation += loadings[i] * sinv_r[i];
  }
  const double variance = 1.0 / (1.0 / belief.variance + info);
  return GaussianBelief(belief.mean + variance * innovation, variance);
}

}  // namespace panel
