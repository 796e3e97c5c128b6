#include "panel/estimation.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "panel/equilibrium.hpp"

namespace panel {

double smooth_report(int y, double eps) {
  if (y != 0 && y != 1) {
    throw std::invalid_argument("smooth_report: report must be 0 or 1");
  }
  if (!(eps > 0.0 && eps < 0.5)) {
    throw std::invalid_argument("smooth_report: eps must lie in (0, 1/2)");
  }
  return eps + (1.0 - 2.0 * eps) * y;
}

namespace {

struct DesignRow {
  double x;       // logit(pi)
  double offset;  // logit(prior) when enabled, else 0
  double y;       // outcome
};

std::vector<DesignRow> build_design(std::span<const ScoredObservation> observations,
                                    const CalibrationOptions& options) {
  std::vector<DesignRow> rows;
  rows.reserve(observations.size());
  for (const auto& obs : observations) {
    if (!(obs.value > 0.0 && obs.value < 1.0)) {
      throw std::invalid_argument("fit_calibration: forecasts must be strictly interior");
    }
    if (obs.outcome != 0.0 && obs.outcome != 1.0) {
      throw std::invalid_argument("fit_calibration: outcomes must be 0 or 1");
    }
    rows.push_back({logit(obs.value),
                    options.prior_offset ? logit(obs.prior) : 0.0,
                    obs.outcome});
  }
  return rows;
}

double log_likelihood(const std::vector<DesignRow>& rows, double a, double b) {
  double ll = 0.0;
  for (const auto& row : rows) {
    const double eta = a + b * row.x + row.offset;
    // log L = y*eta - log(1 + exp(eta)), stable form
    ll += row.y * eta - (eta > 0.0 ? eta + std::log1p(std::exp(-eta)) : std::log1p(std::exp(eta)));
  }
  return ll;
}

}  // namespace

CalibrationFit fit_calibration(std::span<const ScoredObservation> observations,
                               const CalibrationOptions& options) {
  const std::vector<DesignRow> rows = build_design(observations, options);
  if (rows.size() < 10) {
    throw insufficient_data_error("fit_calibration needs at least 10 observations");
  }
  std::size_t n_pos = 0;
  for (const auto& row : rows) n_pos += row.y > 0.5;
  if (n_pos == 0 || n_pos == rows.size()) {
    throw insufficient_data_error("fit_calibration needs both outcome values present");
  }
  const auto [xmin, xmax] =
      std::minmax_element(rows.begin(), rows.end(),
                          [](const DesignRow& l, const DesignRow& r) { return l.x < r.x; });
  if (xmax->x - xmin->x < 1e-12) {
    throw degenerate_design_error("slope is unidentified: forecasts are constant");
  }

  double a = 0.0;
  double b = 0.0;
  double ll = log_likelihood(rows, a, b);
  int iter = 0;
  for (; iter < options.max_iterations; ++iter) {
    // Score and observed information of the two-parameter logistic model.
    double g0 = 0.0, g1 = 0.0;
    double h00 = 0.0, h01 = 0.0, h11 = 0.0;
    for (const auto& row : rows) {
      const double mu = logistic(a + b * row.x + row.offset);
      const double r = row.y - mu;
      const double w = mu * (1.0 - mu);
      g0 += r;
      g1 += r * row.x;
      h00 += w;
      h01 += w * row.x;
      h11 += w * row.x * row.x;
    }
    const double grad_norm = std::sqrt(g0 * g0 + g1 * g1);
    if (grad_norm < options.gradient_tol) {
      break;
    }
    const double det = h00 * h11 - h01 * h01;
    if (!(det > 1e-300) || !std::isfinite(det)) {
      throw non_convergence_error(
          "fit_calibration: singular information matrix (likely separation)");
    }
    double step_a = (h11 * g0 - h01 * g1) / det;
    double step_b = (h00 * g1 - h01 * g0) / det;

    // Step-halving keeps the iteration ascending near separation.
    double scale = 1.0;
    bool improved = false;
    for (int halving = 0; halving < 30; ++halving) {
      const double ll_new = log_likelihood(rows, a + scale * step_a, b + scale * step_b);
      if (ll_new >= ll - 1e-12) {
        a += scale * step_a;
        b += scale * step_b;
        ll = ll_new;
        improved = true;
        break;
      }
      scale *= 0.5;
    }
    if (!improved) {
      throw non_convergence_error("fit_calibration: damped Newton failed to improve");
    }
    if (std::abs(b) > 50.0 || std::abs(a) > 50.0) {
      throw non_convergence_error(
          "fit_calibration: estimates diverged (perfect separation in the data)");
    }
  }
  if (iter == options.max_iterations) {
    throw non_convergence_error("fit_calibration: gradient tolerance not reached");
  }

  // Standard errors from the inverse observed information at the optimum.
  double h00 = 0.0, h01 = 0.0, h11 = 0.0;
  for (const auto& row : rows) {
    const double mu = logistic(a + b * row.x + row.offset);
    const double w = mu * (1.0 - mu);
    h00 += w;
    h01 += w * row.x;
    h11 += w * row.x * row.x;
  }
  const double det = h00 * h11 - h01 * h01;

  CalibrationFit fit;
  fit.intercept = a;
  fit.slope = b;
  fit.se_intercept = std::sqrt(h11 / det);
  fit.se_slope = std::sqrt(h00 / det);
  fit.converged = true;
  fit.iterations = iter;
  return fit;
}

GaussianFit estimate_gaussian(std::span<const ScoredObservation> observations) {
  const std::size_t n = observations.size();
  if (n < 2) {
    throw insufficient_data_error("estimate_gaussian needs at least 2 observations");
  }
  double sum = 0.0;
  for (const auto& obs : observations) sum += obs.value - obs.outcome;
  const double b_hat = sum / static_cast<double>(n);

  double ssr = 0.0;
  for (const auto& obs : observations) {
    const double r = obs.value - obs.outcome - b_hat;
    ssr += r * r;
  }

  GaussianFit fit;
  fit.b_hat = b_hat;
  if (ssr == 0.0) {
    fit.p_hat = GaussianFit::kPrecisionCap;
    fit.ssr_zero = true;
    fit.se_b = 0.0;
    fit.se_p = 0.0;
    return fit;
  }
  fit.p_hat = static_cast<double>(n - 1) / ssr;
  fit.se_b = std::sqrt(1.0 / (fit.p_hat * static_cast<double>(n)));
  fit.se_p = fit.p_hat * std::sqrt(2.0 / static_cast<double>(n - 1));
  return fit;
}

std::vector<ReliabilityBin> reliability_diagram(std::span<const ScoredObservation> observations,
                                                int n_bins) {
  if (n_bins < 1) {
    throw std::invalid_argument("reliability_diagram needs at least one bin");
  }
  std::vector<double> sum_forecast(n_bins, 0.0);
  std::vector<double> sum_outcome(n_bins, 0.0);
  std::vector<std::size_t> count(n_bins, 0);
  for (const auto& obs : observations) {
    int bin = static_cast<int>(obs.value * n_bins);
    bin = std::clamp(bin, 0, n_bins - 1);
    sum_forecast[bin] += obs.value;
    sum_outcome[bin] += obs.outcome;
    ++count[bin];
  }
  std::vector<ReliabilityBin> bins;
  for (int i = 0; i < n_bins; ++i) {
    if (count[i] == 0) continue;
    const double c = static_cast<double>(count[i]);
    bins.push_back({sum_forecast[i] / c, sum_outcome[i] / c, count[i]});
  }
  return bins;
}

void BiasPrecisionBelief::validate() const {
  if (atoms.empty()) {
    throw std::invalid_argument("BiasPrecisionBelief needs at least one atom");
  }
  double total = 0.0;
  for (const auto& atom : atoms) {
    if (atom.weight < 0.0) {
      throw std::invalid_argument("BiasPrecisionBelief weights must be nonnegative");
    }
    total += atom.weight;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw std::invalid_argument("BiasPrecisionBelief weights must sum to one");
  }
}

BiasPrecisionBelief BiasPrecisionBelief::uniform_grid(int n_bias_points, double bias_lo,
                                                      double bias_hi, double prior_high) {
  if (n_bias_points < 1) {
    throw std::invalid_argument("bias grid needs at least one point");
  }
  BiasPrecisionBelief belief;
  const double step =
      n_bias_points == 1 ? 0.0 : (bias_hi - bias_lo) / static_cast<double>(n_bias_points - 1);
  const double w = 1.0 / static_cast<double>(n_bias_points);
  for (int i = 0; i < n_bias_points; ++i) {
    const double b = n_bias_points == 1 ? 0.5 * (bias_lo + bias_hi) : bias_lo + step * i;
    belief.atoms.push_back({ExpertType::High, b, prior_high * w});
    belief.atoms.push_back({ExpertType::Low, b, (1.0 - prior_high) * w});
  }
  return belief;
}

double biased_expert_lr(int y, double lambda, const BiasPrecisionBelief& belief, double p_low,
                        double p_high) {
  belief.validate();
  double num = 0.0;
  double den = 0.0;
  for (const auto& atom : belief.atoms) {
    // The type-p strategy is evaluated at the bias-shifted subjective prior.
    const double shifted = logistic(logit(lambda) + atom.bias);
    const MixSpec mix = low_mixing(shifted, p_low, p_high);
    const ReportLikelihoods like =
        report_likelihoods(atom.type == ExpertType::High ? ExpertType::High : ExpertType::Low,
                           shifted, mix, p_low, p_high);
    num += atom.weight * like.pr(y, 1);
    den += atom.weight * like.pr(y, 0);
  }
  if (den <= 0.0) {
    throw off_path_error("biased_expert_lr: zero denominator");
  }
  return num / den;
}

}  // namespace panel
