#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "panel/correlated.hpp"
#include "panel/gaussian.hpp"

using namespace panel;

namespace {

// Dense Gauss-Jordan inversion, the independent oracle for the Woodbury path.
Matrix dense_inverse(Matrix a) {
  const std::size_t n = a.size();
  Matrix inv(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) inv[i][i] = 1.0;
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < n; ++r) {
      if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
    }
    std::swap(a[pivot], a[col]);
    std::swap(inv[pivot], inv[col]);
    const double d = a[col][col];
    for (std::size_t j = 0; j < n; ++j) {
      a[col][j] /= d;
      inv[col][j] /= d;
    }
    for (std::size_t r = 0; r < n; ++r) {
      if (r == col) continue;
      const double f = a[r][col];
      for (std::size_t j = 0; j < n; ++j) {
        a[r][j] -= f * a[col][j];
        inv[r][j] -= f * inv[col][j];
      }
    }
  }
  return inv;
}

Matrix dense_sigma(const CovSpec& cov) {
  const std::size_t n = cov.size();
  Matrix sigma(n, std::vector<double>(n, cov.common_var));
  for (std::size_t i = 0; i < n; ++i) sigma[i][i] += cov.marginal_vars[i];
  return sigma;
}

struct TestRand {
  std::uint64_t state = 424242ull;
  double next() {
    state ^= state << 13;
    state ^= state >> 7;
    state ^= state << 17;
    return static_cast<double>(state >> 11) * 0x1.0p-53;
  }
  double uniform(double lo, double hi) { return lo + (hi - lo) * next(); }
};

}  // namespace

TEST_CASE("woodbury_inverse special cases") {
  // no common shock: plain precision diagonal
  const CovSpec diag{{1.0, 2.0, 4.0}, 0.0};
  const Matrix inv = woodbury_inverse(diag);
  CHECK(inv[0][0] == doctest::Approx(1.0));
  CHECK(inv[1][1] == doctest::Approx(0.5));
  CHECK(inv[2][2] == doctest::Approx(0.25));
  CHECK(inv[0][1] == doctest::Approx(0.0));

  // the 2x2 hand inverse
  const CovSpec pair{{1.0, 1.0}, 1.0};
  const Matrix inv2 = woodbury_inverse(pair);
  CHECK(inv2[0][0] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(inv2[0][1] == doctest::Approx(-1.0 / 3.0).epsilon(1e-12));
  CHECK(inv2[1][0] == doctest::Approx(-1.0 / 3.0).epsilon(1e-12));
  CHECK(inv2[1][1] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("woodbury exactness on random covariances") {
  TestRand rand;
  double worst = 0.0;
  for (int draw = 0; draw < 100; ++draw) {
    const std::size_t n = 1 + static_cast<std::size_t>(rand.uniform(0.0, 16.0));
    CovSpec cov;
    cov.common_var = rand.uniform(0.0, 3.0);
    for (std::size_t i = 0; i < n; ++i) {
      cov.marginal_vars.push_back(rand.uniform(0.1, 5.0));
    }
    const Matrix inv = woodbury_inverse(cov);
    const Matrix sigma = dense_sigma(cov);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        double sum = 0.0;
        for (std::size_t k = 0; k < n; ++k) sum += sigma[i][k] * inv[k][j];
        worst = std::max(worst, std::abs(sum - (i == j ? 1.0 : 0.0)));
      }
    }
    // the O(N) application agrees with the dense inverse on a random vector
    std::vector<double> x(n);
    for (auto& xi : x) xi = rand.uniform(-2.0, 2.0);
    const std::vector<double> fast = apply_inverse(cov, x);
    const Matrix dense = dense_inverse(dense_sigma(cov));
    for (std::size_t i = 0; i < n; ++i) {
      double sum = 0.0;
      for (std::size_t k = 0; k < n; ++k) sum += dense[i][k] * x[k];
      CHECK(std::abs(sum - fast[i]) < 1e-9);
    }
  }
  CHECK(worst < 1e-10);
}

TEST_CASE("gls_weights") {
  // exchangeable symmetry: equal marginals give 1/N for any common variance
  for (double tau2 : {0.0, 0.3, 2.0}) {
    const auto w = gls_weights(CovSpec::equal(3, 1.0, tau2));
    for (double wi : w) CHECK(wi == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  }
  // precision weights without a common shock
  const auto w = gls_weights(CovSpec{{1.0, 2.0}, 0.0});
  CHECK(w[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(w[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));

  // dense-solve cross-check and exact normalization on random draws
  TestRand rand;
  for (int draw = 0; draw < 50; ++draw) {
    const std::size_t n = 2 + static_cast<std::size_t>(rand.uniform(0.0, 8.0));
    CovSpec cov;
    cov.common_var = rand.uniform(0.0, 2.0);
    for (std::size_t i = 0; i < n; ++i) cov.marginal_vars.push_back(rand.uniform(0.2, 4.0));
    const auto weights = gls_weights(cov);
    double total = 0.0;
    for (double wi : weights) total += wi;
    CHECK(std::abs(total - 1.0) < 1e-12);

    const Matrix dense = dense_inverse(dense_sigma(cov));
    std::vector<double> sigma_inv_one(n, 0.0);
    double denom = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t k = 0; k < n; ++k) sigma_inv_one[i] += dense[i][k];
      denom += sigma_inv_one[i];
    }
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(weights[i] == doctest::Approx(sigma_inv_one[i] / denom).epsilon(1e-9));
    }
  }
}

TEST_CASE("gls_logit_update conventions") {
  const PublicBelief belief = PublicBelief::from_lambda(0.5);

  // zero increments leave the belief unchanged
  const std::vector<double> zeros{0.0, 0.0};
  CHECK(gls_logit_update(belief, zeros, CovSpec::equal(2, 1.0, 0.5)).log_odds() ==
        doctest::Approx(0.0));

  // information-weighted convention nests the plain sum at v = 1, tau2 = 0
  const std::vector<double> ones{1.0, 1.0};
  CHECK(gls_logit_update(belief, ones, CovSpec::equal(2, 1.0, 0.0)).log_odds() ==
        doctest::Approx(2.0).epsilon(1e-12));
  // normalized convention averages instead
  CHECK(gls_logit_update(belief, ones, CovSpec::equal(2, 1.0, 0.0), GlsMode::Normalized)
            .log_odds() == doctest::Approx(1.0).epsilon(1e-12));

  // definitional check: normalized shift equals w'z on random inputs
  TestRand rand;
  for (int draw = 0; draw < 20; ++draw) {
    CovSpec cov{{rand.uniform(0.3, 2.0), rand.uniform(0.3, 2.0), rand.uniform(0.3, 2.0)},
                rand.uniform(0.0, 1.5)};
    std::vector<double> z{rand.uniform(-1.0, 1.0), rand.uniform(-1.0, 1.0),
                          rand.uniform(-1.0, 1.0)};
    const auto w = gls_weights(cov);
    double expected = 0.0;
    for (std::size_t i = 0; i < 3; ++i) expected += w[i] * z[i];
    const double shift =
        gls_logit_update(belief, z, cov, GlsMode::Normalized).log_odds() - belief.log_odds();
    CHECK(shift == doctest::Approx(expected).epsilon(1e-12));
  }

  const std::vector<double> bad{1.0};
  CHECK_THROWS_AS(gls_logit_update(belief, bad, CovSpec::equal(2, 1.0, 0.0)),
                  std::invalid_argument);
}

TEST_CASE("correlated_filter_update") {
  const GaussianBelief prior(0.2, 1.0);

  // tau2 = 0 coincides with the independent filter
  const std::vector<double> y{1.3, -0.4, 0.9};
  const std::vector<double> h{1.0, 0.9, 0.8};
  const std::vector<double> c{0.0, 0.1, -0.2};
  const std::vector<double> v{1.0, 1.5, 0.7};
  const auto corr = correlated_filter_update(prior, y, h, c, CovSpec{v, 0.0});
  std::vector<std::pair<double, EffectiveObservation>> obs;
  for (std::size_t i = 0; i < 3; ++i) {
    obs.push_back({y[i], {h[i], v[i], c[i]}});
  }
  const auto indep = filter_update(prior, obs);
  CHECK(std::abs(corr.mean - indep.mean) < 1e-12);
  CHECK(std::abs(corr.variance - indep.variance) < 1e-12);

  // N = 1 is the ordinary scalar Kalman step
  const std::vector<double> y1{1.0};
  const std::vector<double> h1{1.0};
  const std::vector<double> c1{0.0};
  const auto scalar = correlated_filter_update(prior, y1, h1, c1, CovSpec{{1.0}, 0.0});
  CHECK(scalar.variance == doctest::Approx(0.5));
  CHECK(scalar.mean == doctest::Approx(0.2 + 0.5 * (1.0 - 0.2)).epsilon(1e-12));

  const std::vector<double> wrong{1.0, 2.0};
  CHECK_THROWS_AS(correlated_filter_update(prior, wrong, h1, c1, CovSpec{{1.0}, 0.0}),
                  std::invalid_argument);
}

TEST_CASE("correlation slows learning") {
  // with unit loadings and equal marginals the information increment
  // 1' Sigma^{-1} 1 strictly decreases in tau2
  const std::vector<double> ones(8, 1.0);
  double prev = 1e300;
  for (double tau2 : {0.0, 0.1, 0.25, 0.5, 1.0, 2.0, 4.0}) {
    const double info = information_increment(ones, CovSpec::equal(8, 1.0, tau2));
    CHECK(info < prev);
    CHECK(info > 0.0);
    prev = info;
  }
  // closed form for the exchangeable case: N / (v + N tau2)
  const double info = information_increment(ones, CovSpec::equal(8, 1.0, 0.5));
  CHECK(info == doctest::Approx(8.0 / (1.0 + 8.0 * 0.5)).epsilon(1e-12));
}

TEST_CASE("CovSpec validation") {
  CHECK_THROWS_AS(CovSpec{}.validate(), std::invalid_argument);
  CHECK_THROWS_AS((CovSpec{{1.0, -1.0}, 0.0}).validate(), std::invalid_argument);
  CHECK_THROWS_AS((CovSpec{{1.0}, -0.5}).validate(), std::invalid_argument);
  CHECK_NOTHROW((CovSpec{{1.0, 2.0}, 0.0}).validate());
}
