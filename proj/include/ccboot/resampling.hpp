#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

#include "ccboot/core_model.hpp"
#include "ccboot/design.hpp"
#include "ccboot/rng.hpp"

namespace ccboot {

enum class BootstrapStrategy { proposed, naive };

std::string_view to_string(BootstrapStrategy strategy);

// How the m duplicated subcohort slots are picked from the n1 case draws.
enum class DuplicateSelection { without_replacement, with_replacement };

// Cohort positions of the case-cohort sample, resolved once so replicates
// can be drawn without id lookups.
class ResamplingPools {
 public:
  ResamplingPools(const Cohort& cohort, const CaseCohortSample& sample);

  [[nodiscard]] const Cohort& cohort() const { return *cohort_; }
  [[nodiscard]] std::span<const std::size_t> cases() const { return cases_; }
  [[nodiscard]] std::span<const std::size_t> subcohort() const { return subcohort_; }
  // Subcohort members that are not cases.
  [[nodiscard]] std::span<const std::size_t> subcohort_noncases() const { return noncases_; }
  [[nodiscard]] std::size_t m() const { return m_; }

 private:
  const Cohort* cohort_;
  std::vector<std::size_t> cases_;
  std::vector<std::size_t> subcohort_;
  std::vector<std::size_t> noncases_;
  std::size_t m_;
};

// Duplication-aware replicate: n1 case draws with replacement, n0 - m
// non-case subcohort draws with replacement, then m of the case draws copied
// to the subcohort side.
StackedDataset resample_proposed(const ResamplingPools& pools, RandomStream& rng,
                                 DuplicateSelection selection = DuplicateSelection::without_replacement);
StackedDataset resample_proposed(const CaseCohortSample& sample, const Cohort& cohort, RandomStream& rng,
                                 DuplicateSelection selection = DuplicateSelection::without_replacement);

// n1 draws from the cases and n0 draws from the whole subcohort,
// independently; duplication is not preserved.
StackedDataset resample_naive(const ResamplingPools& pools, RandomStream& rng);
StackedDataset resample_naive(const CaseCohortSample& sample, const Cohort& cohort, RandomStream& rng);

struct BootstrapOptions {
  std::size_t replicates = 2000;
  BootstrapStrategy strategy = BootstrapStrategy::proposed;
  DuplicateSelection selection = DuplicateSelection::without_replacement;
  FitOptions fit;
  unsigned threads = 1;
};

struct BootstrapResult {
  BootstrapStrategy strategy = BootstrapStrategy::proposed;
  std::size_t replicates = 0;
  Matrix coefficient_draws;  // replicates x (p + 1)
  Matrix covariance;         // divisor replicates - 1
  std::size_t failed_redraws = 0;

  [[nodiscard]] CovarianceEstimate estimate() const;
};

// Replicate k draws from RandomStream::derive(seed, {k, attempt}); replicates
// that fail to fit are redrawn with the next attempt index. Output is
// identical for any thread count. Throws AggregationError when more than
// 100 * B attempts would be needed in total.
BootstrapResult bootstrap_variance(const CaseCohortSample& sample, const Cohort& cohort,
                                   const BootstrapOptions& opts, std::uint64_t seed);

Matrix empirical_covariance(const Matrix& draws);

}  // namespace ccboot
