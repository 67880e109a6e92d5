#include "ccboot/simgen.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>

#include "ccboot/errors.hpp"
#include "ccboot/parallel.hpp"

namespace ccboot {
namespace {

double expit(double eta) { return 1.0 / (1.0 + std::exp(-eta)); }

double max_positive_shift(const SimParams& params) {
  return std::max(0.0, params.beta[1]) + std::max({0.0, params.beta[2], params.beta[3]});
}

void validate_probabilities(const SimParams& params) {
  std::string problems;
  if (!(params.p_z1 >= 0.0 && params.p_z1 <= 1.0)) problems += " p_z1 outside [0, 1];";
  if (!(params.q2 >= 0.0) || !(params.q3 >= 0.0) || !(params.q2 + params.q3 <= 1.0)) {
    problems += " q2, q3 must be non-negative with q2 + q3 <= 1;";
  }
  for (double v : params.beta) {
    if (!std::isfinite(v)) problems += " non-finite beta;";
  }
  for (double v : params.gamma) {
    if (!std::isfinite(v)) problems += " non-finite gamma;";
  }
  if (!problems.empty()) throw ModelValidityError("invalid simulation parameters:" + problems);
}

template <typename F>
double bisect(F&& f, double lo, double hi, double tol) {
  for (int iter = 0; iter < 400 && hi - lo > tol; ++iter) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) < 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

double SimParams::max_event_probability() const {
  return std::exp(beta[0] + max_positive_shift(*this));
}

void SimParams::validate() const {
  validate_probabilities(*this);
  const double pmax = max_event_probability();
  if (!(pmax <= 1.0)) {
    throw ModelValidityError("log-link event probability " + std::to_string(pmax) +
                             " exceeds 1 for some covariate pattern");
  }
}

const GaussHermiteRule& standard_normal_rule() {
  static const GaussHermiteRule rule = [] {
    constexpr int n = 64;
    // Jacobi matrix of the monic probabilists' Hermite recurrence.
    Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
    for (int i = 1; i < n; ++i) {
      jacobi(i, i - 1) = jacobi(i - 1, i) = std::sqrt(static_cast<double>(i));
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(jacobi);
    GaussHermiteRule out;
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
      out.nodes.push_back(solver.eigenvalues()[i]);
      const double v0 = solver.eigenvectors()(0, i);
      out.weights.push_back(v0 * v0);
      total += v0 * v0;
    }
    for (double& w : out.weights) w /= total;
    return out;
  }();
  return rule;
}

double exposure_prevalence(const SimParams& params) {
  const auto& rule = standard_normal_rule();
  auto integrate = [&](double shift) {
    double acc = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
      acc += rule.weights[i] * expit(shift + params.gamma[2] * rule.nodes[i]);
    }
    return acc;
  };
  return (1.0 - params.p_z1) * integrate(params.gamma[0]) + params.p_z1 * integrate(params.gamma[0] + params.gamma[1]);
}

double marginal_event_rate(const SimParams& params) {
  params.validate();
  const double pi1 = exposure_prevalence(params);
  const double exposure_factor = (1.0 - pi1) + pi1 * std::exp(params.beta[1]);
  const double category_factor =
      (1.0 - params.q2 - params.q3) + params.q2 * std::exp(params.beta[2]) + params.q3 * std::exp(params.beta[3]);
  return std::exp(params.beta[0]) * exposure_factor * category_factor;
}

double calibrate_intercept(const SimParams& params, double target_rate) {
  if (!(target_rate > 0.0 && target_rate < 1.0)) {
    throw ContractViolation("calibrate_intercept: target rate must lie in (0, 1)");
  }
  validate_probabilities(params);
  SimParams trial = params;
  const double upper = -max_positive_shift(params);  // largest beta0 keeping every cell <= 1
  auto excess = [&](double beta0) {
    trial.beta[0] = beta0;
    return marginal_event_rate(trial) - target_rate;
  };
  if (excess(upper) < 0.0) {
    throw CalibrationError("calibrate_intercept: target rate " + std::to_string(target_rate) +
                           " needs some cell event probability above 1 under the log link");
  }
  const double lower = std::log(target_rate) - 60.0;
  return bisect(excess, lower, upper, 1e-11);
}

double calibrate_exposure_intercept(const SimParams& params, double target) {
  if (!(target > 0.0 && target < 1.0)) {
    throw ContractViolation("calibrate_exposure_intercept: target must lie in (0, 1)");
  }
  validate_probabilities(params);
  SimParams trial = params;
  auto excess = [&](double gamma0) {
    trial.gamma[0] = gamma0;
    return exposure_prevalence(trial) - target;
  };
  return bisect(excess, -60.0, 60.0, 1e-11);
}

Cohort generate_cohort(std::size_t n, const SimParams& params, std::uint64_t seed, unsigned threads) {
  params.validate();
  // Event probability per (x1, category) cell; category 0 is the reference.
  std::array<std::array<double, 3>, 2> cell_prob{};
  for (int x1 = 0; x1 < 2; ++x1) {
    for (int cat = 0; cat < 3; ++cat) {
      const double eta = params.beta[0] + params.beta[1] * x1 + (cat == 1 ? params.beta[2] : 0.0) +
                         (cat == 2 ? params.beta[3] : 0.0);
      cell_prob[static_cast<std::size_t>(x1)][static_cast<std::size_t>(cat)] = std::exp(eta);
    }
  }

  std::vector<CohortRecord> records(n);
  const std::size_t chunks = (n + kCohortChunkSize - 1) / kCohortChunkSize;
  parallel_for(chunks, threads, [&](std::size_t chunk) {
    RandomStream rng = RandomStream::derive(seed, {stream_tag::kCohort, chunk});
    const std::size_t end = std::min(n, (chunk + 1) * kCohortChunkSize);
    for (std::size_t i = chunk * kCohortChunkSize; i < end; ++i) {
      const double z1 = rng.bernoulli(params.p_z1) ? 1.0 : 0.0;
      const double z2 = rng.normal();
      const int x1 = rng.bernoulli(expit(params.gamma[0] + params.gamma[1] * z1 + params.gamma[2] * z2)) ? 1 : 0;
      const double u = rng.uniform();
      const int cat = u < params.q2 ? 1 : (u < params.q2 + params.q3 ? 2 : 0);
      const double prob = cell_prob[static_cast<std::size_t>(x1)][static_cast<std::size_t>(cat)];
      auto& rec = records[i];
      rec.id = ParticipantId{i};
      rec.y = rng.bernoulli(prob) ? 1 : 0;
      rec.x = {static_cast<double>(x1), cat == 1 ? 1.0 : 0.0, cat == 2 ? 1.0 : 0.0};
      rec.z = {z1, z2};
    }
  });
  return Cohort(std::move(records));
}

}  // namespace ccboot
