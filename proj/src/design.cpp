#include "ccboot/design.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "ccboot/errors.hpp"

namespace ccboot {

Cohort::Cohort(std::vector<CohortRecord> records) : records_(std::move(records)) {
  if (!records_.empty()) p_ = records_.front().x.size();
  index_.reserve(records_.size());
  for (std::size_t pos = 0; pos < records_.size(); ++pos) {
    const auto& rec = records_[pos];
    if (rec.y != 0 && rec.y != 1) throw ContractViolation("Cohort: outcome must be 0 or 1");
    if (rec.x.size() != p_) throw ContractViolation("Cohort: inconsistent covariate length");
    if (!index_.emplace(rec.id.value, pos).second) {
      throw ContractViolation("Cohort: duplicate participant id " + std::to_string(rec.id.value));
    }
  }
}

std::size_t Cohort::position(ParticipantId id) const {
  const auto it = index_.find(id.value);
  if (it == index_.end()) throw LookupError("unknown participant id " + std::to_string(id.value));
  return it->second;
}

CaseCohortSample::CaseCohortSample(std::vector<ParticipantId> case_ids, std::vector<ParticipantId> subcohort_ids)
    : case_ids_(std::move(case_ids)), subcohort_ids_(std::move(subcohort_ids)) {
  std::sort(case_ids_.begin(), case_ids_.end());
  std::sort(subcohort_ids_.begin(), subcohort_ids_.end());
  if (std::adjacent_find(case_ids_.begin(), case_ids_.end()) != case_ids_.end()) {
    throw ContractViolation("CaseCohortSample: repeated case id");
  }
  if (std::adjacent_find(subcohort_ids_.begin(), subcohort_ids_.end()) != subcohort_ids_.end()) {
    throw ContractViolation("CaseCohortSample: repeated subcohort id");
  }
  std::vector<ParticipantId> overlap;
  std::set_intersection(case_ids_.begin(), case_ids_.end(), subcohort_ids_.begin(), subcohort_ids_.end(),
                        std::back_inserter(overlap));
  m_ = overlap.size();
}

CaseCohortSample sample_case_cohort(const Cohort& cohort, double subcohort_fraction, RandomStream& rng) {
  if (!(subcohort_fraction > 0.0 && subcohort_fraction <= 1.0)) {
    throw ContractViolation("sample_case_cohort: subcohort fraction must lie in (0, 1]");
  }
  if (cohort.empty()) throw ContractViolation("sample_case_cohort: empty cohort");

  const std::size_t n = cohort.size();
  const auto n0 = static_cast<std::size_t>(std::llround(subcohort_fraction * static_cast<double>(n)));

  std::vector<ParticipantId> cases;
  for (const auto& rec : cohort.records()) {
    if (rec.y == 1) cases.push_back(rec.id);
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<ParticipantId> subcohort;
  subcohort.reserve(n0);
  for (std::size_t i = 0; i < n0; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(n - i));
    std::swap(order[i], order[j]);
    subcohort.push_back(cohort[order[i]].id);
  }
  return CaseCohortSample(std::move(cases), std::move(subcohort));
}

StackedDataset build_stacked(const Cohort& cohort, const CaseCohortSample& sample) {
  StackedDataset data(cohort.num_covariates());
  data.reserve(sample.n1() + sample.n0());
  for (ParticipantId id : sample.case_ids()) {
    const auto& rec = cohort.at(id);
    if (rec.y != 1) throw ContractViolation("build_stacked: case id " + std::to_string(id.value) + " has y = 0");
    data.add_row(1, rec.x, id);
  }
  for (ParticipantId id : sample.subcohort_ids()) data.add_row(0, cohort.at(id).x, id);
  return data;
}

}  // namespace ccboot
