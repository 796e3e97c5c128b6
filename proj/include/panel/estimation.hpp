#pragma once

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "panel/model.hpp"

namespace panel {

// One scored round for one expert: the report (a probability forecast in
// binary mode, a real report in Gaussian mode), the revealed outcome, and
// the public prior at reporting time.
struct ScoredObservation {
  int expert_id = 0;
  int topic_id = 0;
  int t = 0;
  double value = 0.0;    // forecast pi (binary) or report y (Gaussian)
  double outcome = 0.0;  // theta, 0/1 in binary mode
  double prior = 0.5;    // lambda_{t-1} (binary) or m_{t-1} (Gaussian)
};

struct insufficient_data_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct degenerate_design_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct non_convergence_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Map a binary report to an interior forecast: 1 -> 1-eps, 0 -> eps.
double smooth_report(int y, double eps);

struct CalibrationOptions {
  // When set, logit of the public prior enters as a fixed-coefficient offset
  // so the intercept stays an expert-specific shift.
  bool prior_offset = false;
  int max_iterations = 100;
  double gradient_tol = 1e-10;
};

// Logistic-calibration fit logit Pr(outcome=1 | pi) = intercept
// + slope * logit(pi) (+ offset). Intercept measures systematic bias,
// slope indexes precision; (0, 1) is perfect calibration.
struct CalibrationFit {
  double intercept = 0.0;
  double slope = 0.0;
  double se_intercept = 0.0;
  double se_slope = 0.0;
  bool converged = false;
  int iterations = 0;
};

// Two-parameter logistic MLE by damped Newton iterations. Throws
// insufficient_data_error (< 10 usable rows or one-sided outcomes),
// degenerate_design_error (constant forecasts) or non_convergence_error
// (perfect separation and similar).
CalibrationFit fit_calibration(std::span<const ScoredObservation> observations,
                               const CalibrationOptions& options = {});

// Closed-form Gaussian MLE from scored rounds: b_hat = mean(y - theta),
// p_hat = (n-1)/SSR. Zero residual variance is reported as a capped
// sentinel with ssr_zero set.
struct GaussianFit {
  double b_hat = 0.0;
  double p_hat = 0.0;
  double se_b = 0.0;
  double se_p = 0.0;
  bool ssr_zero = false;

  static constexpr double kPrecisionCap = 1e15;
};

GaussianFit estimate_gaussian(std::span<const ScoredObservation> observations);

struct ReliabilityBin {
  double mean_forecast = 0.0;
  double mean_outcome = 0.0;
  std::size_t count = 0;
};

// Equal-width bins on [0,1]; empty bins are omitted. Perfect calibration
// puts every bin on the 45-degree line.
std::vector<ReliabilityBin> reliability_diagram(std::span<const ScoredObservation> observations,
                                                int n_bins);

// Joint posterior over (type, bias) on a finite bias grid.
struct BiasPrecisionBelief {
  struct Atom {
    ExpertType type;
    double bias;
    double weight;
  };
  std::vector<Atom> atoms;

  void validate() const;
  static BiasPrecisionBelief uniform_grid(int n_bias_points = 21, double bias_lo = -2.0,
                                          double bias_hi = 2.0, double prior_high = 0.5);
};

// Likelihood ratio of a report mixing over the (type, bias) grid, with each
// type's strategy evaluated at the bias-shifted subjective prior. Collapses
// to expert_lr for the degenerate grid {b = 0}.
double biased_expert_lr(int y, double lambda, const BiasPrecisionBelief& belief, double p_low,
                        double p_high);

}  // namespace panel
