#pragma once

#include <cstddef>
#include <unordered_map>
#include <vector>

#include "ccboot/core_model.hpp"
#include "ccboot/rng.hpp"

namespace ccboot {

struct CohortRecord {
  ParticipantId id;
  int y = 0;
  std::vector<double> x;  // analysis covariates
  std::vector<double> z;  // latent covariates (simulation only)
};

// Cohort with id -> position lookup. Ids must be unique, y in {0, 1}, and
// every record must carry the same number of covariates.
class Cohort {
 public:
  Cohort() = default;
  explicit Cohort(std::vector<CohortRecord> records);

  [[nodiscard]] std::size_t size() const { return records_.size(); }
  [[nodiscard]] bool empty() const { return records_.empty(); }
  [[nodiscard]] std::size_t num_covariates() const { return p_; }
  [[nodiscard]] const std::vector<CohortRecord>& records() const { return records_; }
  [[nodiscard]] const CohortRecord& operator[](std::size_t pos) const { return records_[pos]; }

  // Position of `id`; throws LookupError when absent.
  [[nodiscard]] std::size_t position(ParticipantId id) const;
  [[nodiscard]] const CohortRecord& at(ParticipantId id) const { return records_[position(id)]; }

 private:
  std::vector<CohortRecord> records_;
  std::unordered_map<std::uint64_t, std::size_t> index_;
  std::size_t p_ = 0;
};

// All cases plus a simple random subcohort. Both id lists are sorted.
class CaseCohortSample {
 public:
  CaseCohortSample(std::vector<ParticipantId> case_ids, std::vector<ParticipantId> subcohort_ids);

  [[nodiscard]] const std::vector<ParticipantId>& case_ids() const { return case_ids_; }
  [[nodiscard]] const std::vector<ParticipantId>& subcohort_ids() const { return subcohort_ids_; }
  [[nodiscard]] std::size_t n1() const { return case_ids_.size(); }
  [[nodiscard]] std::size_t n0() const { return subcohort_ids_.size(); }
  // Participants that are both cases and subcohort members.
  [[nodiscard]] std::size_t m() const { return m_; }

 private:
  std::vector<ParticipantId> case_ids_;
  std::vector<ParticipantId> subcohort_ids_;
  std::size_t m_ = 0;
};

// round(fraction * N) participants drawn without replacement by a partial
// Fisher-Yates shuffle; every case is taken. Case ids are checked against
// the cohort (y = 1).
CaseCohortSample sample_case_cohort(const Cohort& cohort, double subcohort_fraction, RandomStream& rng);

// Case rows (d = 1) followed by subcohort rows (d = 0), each in sample order.
StackedDataset build_stacked(const Cohort& cohort, const CaseCohortSample& sample);

}  // namespace ccboot
