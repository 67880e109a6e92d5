#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace ccboot {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

struct ParticipantId {
  std::uint64_t value = 0;
  friend auto operator<=>(const ParticipantId&, const ParticipantId&) = default;
};

// Pseudo-data for the case-cohort logistic fit. Row i carries an indicator
// d (1 = case sample, 0 = subcohort sample), a covariate vector of length p,
// and the participant it was copied from. p = 0 gives an intercept-only model.
class StackedDataset {
 public:
  explicit StackedDataset(std::size_t num_covariates);

  void reserve(std::size_t rows);
  void add_row(int d, std::span<const double> x, ParticipantId source);

  [[nodiscard]] std::size_t rows() const { return d_.size(); }
  [[nodiscard]] std::size_t num_covariates() const { return p_; }
  [[nodiscard]] int d(std::size_t row) const { return d_[row]; }
  [[nodiscard]] std::span<const double> x(std::size_t row) const {
    return {x_.data() + row * p_, p_};
  }
  [[nodiscard]] ParticipantId source(std::size_t row) const { return source_[row]; }
  [[nodiscard]] std::size_t count_cases() const;

  // Checks that each source id appears at most twice and, when twice, once
  // with d = 1 and once with d = 0. Holds for data built from a case-cohort
  // sample but not for bootstrap replicates. Returns the number of
  // duplicated participants; throws ContractViolation otherwise.
  [[nodiscard]] std::size_t validate_duplication() const;

 private:
  std::size_t p_;
  std::vector<std::uint8_t> d_;
  std::vector<double> x_;
  std::vector<ParticipantId> source_;
};

struct FitOptions {
  int max_iter = 50;
  double tol = 1e-8;
  // |beta_j| above this is treated as divergence caused by separation.
  double divergence_bound = 30.0;
};

struct FitResult {
  Vector beta;  // intercept first
  bool converged = false;
  int iterations = 0;
  double score_norm = 0.0;       // sup-norm of the score at beta
  Matrix neg_inv_hessian;        // (X'WX)^{-1} at beta
};

enum class CovarianceMethod { model, robust, boot_naive, boot_proposed };

std::string_view to_string(CovarianceMethod method);

struct CovarianceEstimate {
  Matrix matrix;
  CovarianceMethod method = CovarianceMethod::model;

  [[nodiscard]] Vector standard_errors() const;
};

struct Interval {
  double lower = 0.0;
  double upper = 0.0;
  [[nodiscard]] bool contains(double value) const { return lower <= value && value <= upper; }
};

double log_likelihood(const Vector& beta, const StackedDataset& data);
Vector score(const Vector& beta, const StackedDataset& data);

// Newton-Raphson (IRLS) with step halving, started at beta = 0. A run that
// exhausts max_iter returns converged = false. Divergent coefficients raise
// SeparationError, a non-invertible information matrix SingularityError.
FitResult fit_logistic(const StackedDataset& data, const FitOptions& opts = {});

// Sandwich A^{-1} B A^{-1} with one score contribution per row. Duplicated
// participants are treated as independent rows.
CovarianceEstimate robust_covariance(const FitResult& fit, const StackedDataset& data);

CovarianceEstimate model_covariance(const FitResult& fit);

// Inverse standard normal CDF (Acklam's rational approximation followed by
// one Halley refinement step; |error| < 1e-13 on (0, 1)).
double normal_quantile(double p);

Interval wald_ci(double estimate, double se, double level = 0.95);

}  // namespace ccboot
