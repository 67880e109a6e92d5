#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "ccboot/design.hpp"

namespace ccboot {

// Outcome model:  log Pr(Y = 1 | x) = beta0 + beta1 x1 + beta2 x2 + beta3 x3
// Exposure model: logit Pr(X1 = 1 | z) = gamma0 + gamma1 z1 + gamma2 z2
// with z1 ~ Bernoulli(p_z1), z2 ~ N(0, 1) and (x2, x3) the dummies of a
// three-category draw with Pr(category 2) = q2, Pr(category 3) = q3.
struct SimParams {
  std::array<double, 4> beta{-1.8077026687, 0.96, -0.28, -0.39};
  // gamma0 puts Pr(X1 = 1) at 0.10 for gamma1 = 1, gamma2 = 0.5.
  std::array<double, 3> gamma{-2.4334374033, 1.0, 0.5};
  double p_z1 = 0.10;
  double q2 = 0.16;
  double q3 = 0.48;

  // Throws ModelValidityError if a probability parameter is out of range or
  // any of the six (x1, category) cells has an event probability above 1.
  void validate() const;

  // Largest event probability over the discrete design.
  [[nodiscard]] double max_event_probability() const;
};

inline constexpr std::size_t kCohortChunkSize = 4096;

// Chunk c of the cohort uses RandomStream::derive(seed, {kCohort, c}); ids
// are 0..N-1. Covariates are (x1, x2, x3) with z = (z1, z2) kept alongside.
Cohort generate_cohort(std::size_t n, const SimParams& params, std::uint64_t seed, unsigned threads = 1);

// E[exp(beta0 + beta1 X1 + beta2 X2 + beta3 X3)] with the z2 integral done by
// 64-node Gauss-Hermite quadrature.
double marginal_event_rate(const SimParams& params);

// Pr(X1 = 1) under the exposure model (same quadrature).
double exposure_prevalence(const SimParams& params);

struct GaussHermiteRule {
  std::vector<double> nodes;
  std::vector<double> weights;  // sum to 1; integrates against N(0, 1)
};

// Probabilists' Gauss-Hermite rule by the Golub-Welsch eigenvalue method.
const GaussHermiteRule& standard_normal_rule();

// Bisection on beta0 (to 1e-10) so that marginal_event_rate hits `target_rate`;
// other coefficients are taken from `params`. Throws CalibrationError when
// the root would make some cell probability exceed 1.
double calibrate_intercept(const SimParams& params, double target_rate);

// Bisection on gamma0 so that exposure_prevalence hits `target`.
double calibrate_exposure_intercept(const SimParams& params, double target);

}  // namespace ccboot
