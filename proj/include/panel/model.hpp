#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "panel/mathutil.hpp"

namespace panel {

// Beliefs exactly at 1/2 (within this tolerance) put the low type on the
// truthful branch; the closed forms meet continuously there.
inline constexpr double kHalfBeliefTol = 1e-12;

// Public belief about the persistent state, carried in log-odds space so
// repeated updates never materialize probabilities near 0 or 1.
class PublicBelief {
 public:
  static PublicBelief from_lambda(double lambda) {
    return PublicBelief(logit(lambda));
  }
  static PublicBelief from_logit(double value) { return PublicBelief(value); }

  double lambda() const { return logistic(logit_); }
  double log_odds() const { return logit_; }

 private:
  explicit PublicBelief(double log_odds_value) : logit_(log_odds_value) {}
  double logit_;
};

enum class ExpertType { Low, High };

// Panel primitives of the binary baseline.
struct ModelParams {
  double p_low = 0.6;       // low-type signal accuracy, in [1/2, 1)
  double p_high = 0.8;      // high-type signal accuracy, in (1/2, 1)
  double prior_high = 0.5;  // prior Pr(type = High)
  int n_experts = 10;
  int true_state = 1;       // persistent state, 0 or 1
  double lambda0 = 0.5;     // initial public belief

  void validate() const;
};

enum class MixSide { MixAfterS1, MixAfterS0, Truthful };

// One-sided mixing solution at a public belief. For MixAfterS1 (lambda < 1/2)
// prob is alpha, the probability of truthfully reporting 1 after s=1; for
// MixAfterS0 (lambda > 1/2) prob is beta, the probability of falsely
// reporting 1 after s=0.
struct MixSpec {
  MixSide side = MixSide::Truthful;
  double prob = 1.0;

  static MixSpec truthful() { return {MixSide::Truthful, 1.0}; }
};

// Conditional report table Pr(y | theta) for one expert type.
struct ReportLikelihoods {
  // indexed [y][theta]
  std::array<std::array<double, 2>, 2> table{};

  double pr(int y, int theta) const { return table[y][theta]; }
};

using ReputationVector = std::vector<double>;

}  // namespace panel
