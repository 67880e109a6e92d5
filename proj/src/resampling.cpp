#include "ccboot/resampling.hpp"

#include <algorithm>
#include <atomic>
#include <numeric>
#include <string>
#include <unordered_set>

#include "ccboot/errors.hpp"
#include "ccboot/parallel.hpp"

namespace ccboot {
namespace {

void add_rows(StackedDataset& data, const Cohort& cohort, int d, std::span<const std::size_t> positions) {
  for (std::size_t pos : positions) data.add_row(d, cohort[pos].x, cohort[pos].id);
}

void draw_with_replacement(std::span<const std::size_t> pool, std::size_t count, RandomStream& rng,
                           std::vector<std::size_t>& out) {
  for (std::size_t i = 0; i < count; ++i) out.push_back(pool[rng.below(pool.size())]);
}

enum class FailureMode { separation, singular, not_converged, count };

}  // namespace

std::string_view to_string(BootstrapStrategy strategy) {
  return strategy == BootstrapStrategy::proposed ? "proposed" : "naive";
}

ResamplingPools::ResamplingPools(const Cohort& cohort, const CaseCohortSample& sample)
    : cohort_(&cohort), m_(sample.m()) {
  cases_.reserve(sample.n1());
  for (ParticipantId id : sample.case_ids()) cases_.push_back(cohort.position(id));
  std::unordered_set<std::uint64_t> case_set;
  for (ParticipantId id : sample.case_ids()) case_set.insert(id.value);
  subcohort_.reserve(sample.n0());
  for (ParticipantId id : sample.subcohort_ids()) {
    const std::size_t pos = cohort.position(id);
    subcohort_.push_back(pos);
    if (!case_set.contains(id.value)) noncases_.push_back(pos);
  }
}

StackedDataset resample_proposed(const ResamplingPools& pools, RandomStream& rng, DuplicateSelection selection) {
  const std::size_t n1 = pools.cases().size();
  const std::size_t n0 = pools.subcohort().size();
  const std::size_t m = pools.m();
  if (m > n1) throw ContractViolation("resample_proposed: more duplicates than case samples");
  if (n1 == 0) throw ContractViolation("resample_proposed: no case samples");
  if (n0 < m) throw ContractViolation("resample_proposed: more duplicates than subcohort samples");

  std::vector<std::size_t> case_draws;
  case_draws.reserve(n1);
  draw_with_replacement(pools.cases(), n1, rng, case_draws);

  std::vector<std::size_t> control_draws;
  control_draws.reserve(n0);
  if (n0 > m) draw_with_replacement(pools.subcohort_noncases(), n0 - m, rng, control_draws);

  if (selection == DuplicateSelection::without_replacement) {
    std::vector<std::size_t> slots(n1);
    std::iota(slots.begin(), slots.end(), std::size_t{0});
    for (std::size_t i = 0; i < m; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng.below(n1 - i));
      std::swap(slots[i], slots[j]);
      control_draws.push_back(case_draws[slots[i]]);
    }
  } else {
    for (std::size_t i = 0; i < m; ++i) control_draws.push_back(case_draws[rng.below(n1)]);
  }

  StackedDataset data(pools.cohort().num_covariates());
  data.reserve(n1 + n0);
  add_rows(data, pools.cohort(), 1, case_draws);
  add_rows(data, pools.cohort(), 0, control_draws);
  return data;
}

StackedDataset resample_proposed(const CaseCohortSample& sample, const Cohort& cohort, RandomStream& rng,
                                 DuplicateSelection selection) {
  return resample_proposed(ResamplingPools(cohort, sample), rng, selection);
}

StackedDataset resample_naive(const ResamplingPools& pools, RandomStream& rng) {
  const std::size_t n1 = pools.cases().size();
  const std::size_t n0 = pools.subcohort().size();
  if (n1 == 0 || n0 == 0) throw ContractViolation("resample_naive: empty case or subcohort pool");

  std::vector<std::size_t> case_draws;
  case_draws.reserve(n1);
  draw_with_replacement(pools.cases(), n1, rng, case_draws);
  std::vector<std::size_t> control_draws;
  control_draws.reserve(n0);
  draw_with_replacement(pools.subcohort(), n0, rng, control_draws);

  StackedDataset data(pools.cohort().num_covariates());
  data.reserve(n1 + n0);
  add_rows(data, pools.cohort(), 1, case_draws);
  add_rows(data, pools.cohort(), 0, control_draws);
  return data;
}

StackedDataset resample_naive(const CaseCohortSample& sample, const Cohort& cohort, RandomStream& rng) {
  return resample_naive(ResamplingPools(cohort, sample), rng);
}

CovarianceEstimate BootstrapResult::estimate() const {
  return {covariance, strategy == BootstrapStrategy::proposed ? CovarianceMethod::boot_proposed
                                                              : CovarianceMethod::boot_naive};
}

Matrix empirical_covariance(const Matrix& draws) {
  if (draws.rows() < 2) throw ContractViolation("empirical_covariance: need at least two draws");
  const Eigen::RowVectorXd mean = draws.colwise().mean();
  const Matrix centered = draws.rowwise() - mean;
  Matrix cov = (centered.transpose() * centered) / static_cast<double>(draws.rows() - 1);
  return 0.5 * (cov + cov.transpose());
}

BootstrapResult bootstrap_variance(const CaseCohortSample& sample, const Cohort& cohort,
                                   const BootstrapOptions& opts, std::uint64_t seed) {
  const std::size_t replicates = opts.replicates;
  if (replicates < 2) throw ContractViolation("bootstrap_variance: at least two replicates are required");

  const ResamplingPools pools(cohort, sample);
  const auto k = static_cast<Eigen::Index>(cohort.num_covariates() + 1);
  const std::size_t failure_budget = 99 * replicates;

  Matrix draws(static_cast<Eigen::Index>(replicates), k);
  std::vector<std::size_t> failures(replicates, 0);
  std::atomic<std::size_t> total_failures{0};
  std::array<std::atomic<std::size_t>, static_cast<std::size_t>(FailureMode::count)> by_mode{};

  parallel_for(replicates, opts.threads, [&](std::size_t rep) {
    for (std::uint64_t attempt = 0;; ++attempt) {
      if (total_failures.load(std::memory_order_relaxed) > failure_budget) return;
      RandomStream rng = RandomStream::derive(seed, {rep, attempt});
      const StackedDataset data = opts.strategy == BootstrapStrategy::proposed
                                      ? resample_proposed(pools, rng, opts.selection)
                                      : resample_naive(pools, rng);
      FailureMode mode = FailureMode::not_converged;
      try {
        const FitResult fit = fit_logistic(data, opts.fit);
        if (fit.converged && fit.beta.allFinite()) {
          draws.row(static_cast<Eigen::Index>(rep)) = fit.beta.transpose();
          return;
        }
      } catch (const SeparationError&) {
        mode = FailureMode::separation;
      } catch (const SingularityError&) {
        mode = FailureMode::singular;
      } catch (const ContractViolation&) {
        // a replicate with a single outcome class cannot be fitted
        mode = FailureMode::singular;
      }
      ++failures[rep];
      ++by_mode[static_cast<std::size_t>(mode)];
      total_failures.fetch_add(1, std::memory_order_relaxed);
    }
  });

  const std::size_t failed = std::accumulate(failures.begin(), failures.end(), std::size_t{0});
  if (failed > failure_budget) {
    throw AggregationError("bootstrap_variance: redraw budget of " + std::to_string(100 * replicates) +
                           " attempts exhausted (separation: " + std::to_string(by_mode[0].load()) +
                           ", singular information: " + std::to_string(by_mode[1].load()) +
                           ", not converged: " + std::to_string(by_mode[2].load()) + ")");
  }

  BootstrapResult result;
  result.strategy = opts.strategy;
  result.replicates = replicates;
  result.covariance = empirical_covariance(draws);
  result.coefficient_draws = std::move(draws);
  result.failed_redraws = failed;
  return result;
}

}  // namespace ccboot
