#include "ccboot/core_model.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <string>

#include <Eigen/Cholesky>

#include "ccboot/errors.hpp"

namespace ccboot {
namespace {

// Newton steps must shrink below this before a small score counts as converged.
constexpr double kStepTolerance = 1e-4;

// log(1 + exp(eta)) without overflow.
double softplus(double eta) {
  return eta > 0.0 ? eta + std::log1p(std::exp(-eta)) : std::log1p(std::exp(eta));
}

double expit(double eta) {
  if (eta >= 0.0) return 1.0 / (1.0 + std::exp(-eta));
  const double e = std::exp(eta);
  return e / (1.0 + e);
}

void require_dimension(const Vector& beta, const StackedDataset& data, const char* op) {
  if (static_cast<std::size_t>(beta.size()) != data.num_covariates() + 1) {
    throw ContractViolation(std::string(op) + ": beta has length " + std::to_string(beta.size()) +
                            ", expected " + std::to_string(data.num_covariates() + 1));
  }
}

double linear_predictor(const Vector& beta, std::span<const double> x) {
  double eta = beta[0];
  for (std::size_t j = 0; j < x.size(); ++j) eta += beta[static_cast<Eigen::Index>(j) + 1] * x[j];
  return eta;
}

// Some row's fitted probability is numerically 0 or 1.
bool has_degenerate_weights(const Vector& beta, const StackedDataset& data) {
  for (std::size_t i = 0; i < data.rows(); ++i) {
    const double prob = expit(linear_predictor(beta, data.x(i)));
    if (prob * (1.0 - prob) < 1e-10) return true;
  }
  return false;
}

struct Derivatives {
  double loglik = 0.0;
  Vector score;
  Matrix information;  // X'WX
};

// Rows grouped by identical covariate vectors: the likelihood depends on the
// data only through (x, #cases, #rows) per distinct x.
struct CovariatePatterns {
  std::size_t p = 0;
  std::vector<double> x;  // patterns x p
  std::vector<double> cases;
  std::vector<double> total;

  [[nodiscard]] std::size_t size() const { return cases.size(); }
  [[nodiscard]] std::span<const double> row(std::size_t i) const { return {x.data() + i * p, p}; }
};

CovariatePatterns collapse(const StackedDataset& data) {
  const std::size_t p = data.num_covariates();
  std::vector<std::size_t> order(data.rows());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto xa = data.x(a), xb = data.x(b);
    return std::lexicographical_compare(xa.begin(), xa.end(), xb.begin(), xb.end());
  });
  CovariatePatterns out;
  out.p = p;
  for (std::size_t idx = 0; idx < order.size(); ++idx) {
    const auto x = data.x(order[idx]);
    if (idx == 0 || !std::equal(x.begin(), x.end(), out.row(out.size() - 1).begin())) {
      out.x.insert(out.x.end(), x.begin(), x.end());
      out.cases.push_back(0.0);
      out.total.push_back(0.0);
    }
    out.cases.back() += data.d(order[idx]);
    out.total.back() += 1.0;
  }
  return out;
}

Derivatives evaluate(const Vector& beta, const CovariatePatterns& patterns) {
  const auto k = static_cast<Eigen::Index>(patterns.p + 1);
  Derivatives out{0.0, Vector::Zero(k), Matrix::Zero(k, k)};
  std::vector<double> xt(static_cast<std::size_t>(k));
  xt[0] = 1.0;
  for (std::size_t i = 0; i < patterns.size(); ++i) {
    const auto x = patterns.row(i);
    std::copy(x.begin(), x.end(), xt.begin() + 1);
    const double eta = linear_predictor(beta, x);
    const double prob = expit(eta);
    const double resid = patterns.cases[i] - patterns.total[i] * prob;
    const double weight = patterns.total[i] * prob * (1.0 - prob);
    out.loglik += patterns.cases[i] * eta - patterns.total[i] * softplus(eta);
    for (Eigen::Index a = 0; a < k; ++a) {
      out.score[a] += xt[static_cast<std::size_t>(a)] * resid;
      const double wa = weight * xt[static_cast<std::size_t>(a)];
      for (Eigen::Index b = a; b < k; ++b) out.information(a, b) += wa * xt[static_cast<std::size_t>(b)];
    }
  }
  out.information.triangularView<Eigen::StrictlyLower>() =
      out.information.triangularView<Eigen::StrictlyUpper>().transpose();
  return out;
}

Matrix invert_information(const Matrix& information) {
  Eigen::LLT<Matrix> llt(information);
  if (llt.info() != Eigen::Success || !(llt.rcond() > 1e-13)) {
    throw SingularityError("weighted information matrix is singular (collinear or constant covariates)");
  }
  Matrix inverse = llt.solve(Matrix::Identity(information.rows(), information.cols()));
  return 0.5 * (inverse + inverse.transpose());
}

}  // namespace

StackedDataset::StackedDataset(std::size_t num_covariates) : p_(num_covariates) {}

void StackedDataset::reserve(std::size_t rows) {
  d_.reserve(rows);
  x_.reserve(rows * p_);
  source_.reserve(rows);
}

void StackedDataset::add_row(int d, std::span<const double> x, ParticipantId source) {
  if (d != 0 && d != 1) throw ContractViolation("StackedDataset: d must be 0 or 1");
  if (x.size() != p_) {
    throw ContractViolation("StackedDataset: covariate vector has length " + std::to_string(x.size()) +
                            ", expected " + std::to_string(p_));
  }
  d_.push_back(static_cast<std::uint8_t>(d));
  x_.insert(x_.end(), x.begin(), x.end());
  source_.push_back(source);
}

std::size_t StackedDataset::count_cases() const {
  return static_cast<std::size_t>(std::count(d_.begin(), d_.end(), std::uint8_t{1}));
}

std::size_t StackedDataset::validate_duplication() const {
  // per id: bit 0 = seen with d=0, bit 1 = seen with d=1
  std::map<ParticipantId, unsigned> seen;
  std::size_t duplicated = 0;
  for (std::size_t i = 0; i < rows(); ++i) {
    const unsigned bit = d_[i] == 1 ? 2U : 1U;
    unsigned& mask = seen[source_[i]];
    if (mask & bit) {
      throw ContractViolation("StackedDataset: participant " + std::to_string(source_[i].value) +
                              " appears twice with the same indicator");
    }
    mask |= bit;
    if (mask == 3U) ++duplicated;
  }
  return duplicated;
}

std::string_view to_string(CovarianceMethod method) {
  switch (method) {
    case CovarianceMethod::model: return "model";
    case CovarianceMethod::robust: return "robust";
    case CovarianceMethod::boot_naive: return "boot_naive";
    case CovarianceMethod::boot_proposed: return "boot_proposed";
  }
  return "unknown";
}

Vector CovarianceEstimate::standard_errors() const {
  return matrix.diagonal().cwiseMax(0.0).cwiseSqrt();
}

double log_likelihood(const Vector& beta, const StackedDataset& data) {
  require_dimension(beta, data, "log_likelihood");
  double total = 0.0;
  for (std::size_t i = 0; i < data.rows(); ++i) {
    const double eta = linear_predictor(beta, data.x(i));
    total += data.d(i) * eta - softplus(eta);
  }
  return total;
}

Vector score(const Vector& beta, const StackedDataset& data) {
  require_dimension(beta, data, "score");
  const auto k = static_cast<Eigen::Index>(data.num_covariates() + 1);
  Vector g = Vector::Zero(k);
  for (std::size_t i = 0; i < data.rows(); ++i) {
    const auto x = data.x(i);
    const double resid = data.d(i) - expit(linear_predictor(beta, x));
    g[0] += resid;
    for (std::size_t j = 0; j < x.size(); ++j) g[static_cast<Eigen::Index>(j) + 1] += x[j] * resid;
  }
  return g;
}

FitResult fit_logistic(const StackedDataset& data, const FitOptions& opts) {
  const std::size_t k = data.num_covariates() + 1;
  const std::size_t cases = data.count_cases();
  if (cases == 0 || cases == data.rows()) {
    throw ContractViolation("fit_logistic: both outcome classes must be present");
  }
  if (k > data.rows()) throw ContractViolation("fit_logistic: more coefficients than rows");
  if (opts.max_iter < 1 || !(opts.tol > 0.0)) throw ContractViolation("fit_logistic: invalid options");

  const CovariatePatterns patterns = collapse(data);
  FitResult result;
  result.beta = Vector::Zero(static_cast<Eigen::Index>(k));
  Derivatives current = evaluate(result.beta, patterns);
  auto not_worse = [](double next, double prev) { return next >= prev - 1e-12 * (1.0 + std::abs(prev)); };
  while (true) {
    result.score_norm = current.score.lpNorm<Eigen::Infinity>();
    Eigen::LLT<Matrix> llt(current.information);
    if (llt.info() != Eigen::Success || !(llt.rcond() > 1e-13)) {
      if (result.beta.lpNorm<Eigen::Infinity>() > 0.5 * opts.divergence_bound) {
        throw SeparationError("fit_logistic: information vanished as coefficients diverged (separation)");
      }
      throw SingularityError("fit_logistic: weighted information matrix is singular");
    }
    const Vector step = llt.solve(current.score);

    // A small score alone is not enough: under complete separation the score
    // vanishes while the Newton step stays O(1).
    if (result.score_norm < opts.tol && step.lpNorm<Eigen::Infinity>() < kStepTolerance) {
      // One last full Newton step; quadratic convergence takes beta to
      // working precision.
      const Vector polished = result.beta + step;
      Derivatives next = evaluate(polished, patterns);
      if (next.score.lpNorm<Eigen::Infinity>() <= result.score_norm && not_worse(next.loglik, current.loglik)) {
        result.beta = polished;
        current = std::move(next);
        result.score_norm = current.score.lpNorm<Eigen::Infinity>();
      }
      result.converged = true;
      break;
    }
    if (result.iterations >= opts.max_iter) {
      if (has_degenerate_weights(result.beta, data)) {
        throw SeparationError("fit_logistic: fitted probabilities reached 0 or 1 without convergence (separation)");
      }
      break;
    }

    double scale = 1.0;
    Vector candidate = result.beta + step;
    Derivatives next = evaluate(candidate, patterns);
    for (int halving = 0; halving < 40 && !not_worse(next.loglik, current.loglik); ++halving) {
      scale *= 0.5;
      candidate = result.beta + scale * step;
      next = evaluate(candidate, patterns);
    }
    result.beta = std::move(candidate);
    current = std::move(next);
    ++result.iterations;

    if (!result.beta.allFinite() || result.beta.lpNorm<Eigen::Infinity>() > opts.divergence_bound) {
      throw SeparationError("fit_logistic: coefficients diverged beyond " +
                            std::to_string(opts.divergence_bound) + " (separation)");
    }
  }
  result.neg_inv_hessian = invert_information(current.information);
  return result;
}

CovarianceEstimate robust_covariance(const FitResult& fit, const StackedDataset& data) {
  require_dimension(fit.beta, data, "robust_covariance");
  if (!fit.converged) throw ContractViolation("robust_covariance: fit did not converge");
  const auto k = fit.beta.size();
  Matrix information = Matrix::Zero(k, k);
  Matrix meat = Matrix::Zero(k, k);
  Vector xt(k);
  xt[0] = 1.0;
  for (std::size_t i = 0; i < data.rows(); ++i) {
    const auto x = data.x(i);
    for (std::size_t j = 0; j < x.size(); ++j) xt[static_cast<Eigen::Index>(j) + 1] = x[j];
    const double prob = expit(linear_predictor(fit.beta, x));
    const double resid = data.d(i) - prob;
    information.noalias() += (prob * (1.0 - prob)) * xt * xt.transpose();
    meat.noalias() += (resid * resid) * xt * xt.transpose();
  }
  const Matrix bread = invert_information(information);
  Matrix sandwich = bread * meat * bread;
  return {0.5 * (sandwich + sandwich.transpose()), CovarianceMethod::robust};
}

CovarianceEstimate model_covariance(const FitResult& fit) {
  if (!fit.converged) throw ContractViolation("model_covariance: fit did not converge");
  return {fit.neg_inv_hessian, CovarianceMethod::model};
}

Interval wald_ci(double estimate, double se, double level) {
  if (!(level > 0.0 && level < 1.0)) throw ContractViolation("wald_ci: level must lie in (0, 1)");
  if (!(se >= 0.0)) throw ContractViolation("wald_ci: standard error must be non-negative");
  const double half_width = normal_quantile(0.5 * (1.0 + level)) * se;
  return {estimate - half_width, estimate + half_width};
}

}  // namespace ccboot
