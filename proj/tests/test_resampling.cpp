#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>
#include <set>
#include <string>

#include <boost/math/distributions/chi_squared.hpp>

#include "ccboot/errors.hpp"
#include "ccboot/resampling.hpp"

using namespace ccboot;

namespace {

// Random cohort with one binary and one normal covariate; outcome depends on
// both so that fits are well defined.
Cohort random_cohort(std::size_t n, RandomStream& rng, std::uint64_t id_offset = 0) {
  std::vector<CohortRecord> records;
  for (std::size_t i = 0; i < n; ++i) {
    const double x1 = rng.bernoulli(0.3) ? 1.0 : 0.0;
    const double x2 = rng.normal();
    const double p = 1.0 / (1.0 + std::exp(-(-1.5 + 0.8 * x1 + 0.4 * x2)));
    records.push_back({ParticipantId{i + id_offset}, rng.bernoulli(p) ? 1 : 0, {x1, x2}, {}});
  }
  return Cohort(std::move(records));
}

// Checks the proposed-replicate structure: sizes, and that the last m
// subcohort rows are copies of case-side draws.
void check_proposed_structure(const StackedDataset& data, const CaseCohortSample& sample) {
  const std::size_t n1 = sample.n1(), n0 = sample.n0(), m = sample.m();
  REQUIRE(data.rows() == n1 + n0);
  std::multiset<std::uint64_t> case_side;
  for (std::size_t i = 0; i < n1; ++i) {
    REQUIRE(data.d(i) == 1);
    case_side.insert(data.source(i).value);
  }
  std::set<std::uint64_t> case_ids;
  for (auto id : sample.case_ids()) case_ids.insert(id.value);
  for (std::size_t i = n1; i < n1 + n0; ++i) REQUIRE(data.d(i) == 0);
  for (std::size_t i = n1; i < n1 + n0 - m; ++i) REQUIRE_FALSE(case_ids.contains(data.source(i).value));
  // duplicated rows: a multiset drawn without replacement from the case draws
  std::multiset<std::uint64_t> remaining = case_side;
  for (std::size_t i = n1 + n0 - m; i < n1 + n0; ++i) {
    const auto it = remaining.find(data.source(i).value);
    REQUIRE(it != remaining.end());
    remaining.erase(it);
  }
}

std::string replicate_key(const StackedDataset& data) {
  std::string key;
  for (std::size_t i = 0; i < data.rows(); ++i) {
    key += std::to_string(data.d(i)) + ":" + std::to_string(data.source(i).value) + " ";
  }
  return key;
}

}  // namespace

TEST_CASE("proposed replicates preserve n1, n0 and the m duplicates") {
  RandomStream rng(12);
  for (int trial = 0; trial < 200; ++trial) {
    const auto cohort = random_cohort(20 + rng.below(200), rng);
    const auto sample = sample_case_cohort(cohort, 0.1 + 0.9 * rng.uniform(), rng);
    if (sample.n1() == 0) continue;
    const ResamplingPools pools(cohort, sample);
    for (int rep = 0; rep < 20; ++rep) check_proposed_structure(resample_proposed(pools, rng), sample);
    const auto alt = resample_proposed(pools, rng, DuplicateSelection::with_replacement);
    REQUIRE(alt.rows() == sample.n1() + sample.n0());
  }
}

TEST_CASE("with m = 0 the proposed and naive schemes draw identically") {
  std::vector<CohortRecord> records;
  for (std::uint64_t i = 0; i < 20; ++i) records.push_back({ParticipantId{i}, i < 6 ? 1 : 0, {double(i)}, {}});
  const Cohort cohort(std::move(records));
  const CaseCohortSample sample({ParticipantId{0}, ParticipantId{1}, ParticipantId{2}, ParticipantId{3}},
                                {ParticipantId{10}, ParticipantId{11}, ParticipantId{12}});
  REQUIRE(sample.m() == 0);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    RandomStream a(seed), b(seed);
    CHECK(replicate_key(resample_proposed(sample, cohort, a)) == replicate_key(resample_naive(sample, cohort, b)));
  }
}

TEST_CASE("exhaustive enumeration of the 2/2/1 micro-instance") {
  // cases {1, 2}; subcohort {1, 3}: participant 1 is the duplicate, 3 the
  // only non-case. Outcomes: ordered case draws (4) x duplicated slot (2).
  std::vector<CohortRecord> records = {{ParticipantId{1}, 1, {0.0}, {}},
                                       {ParticipantId{2}, 1, {1.0}, {}},
                                       {ParticipantId{3}, 0, {2.0}, {}}};
  const Cohort cohort(std::move(records));
  const CaseCohortSample sample({ParticipantId{1}, ParticipantId{2}}, {ParticipantId{1}, ParticipantId{3}});
  REQUIRE(sample.m() == 1);

  std::map<std::string, double> expected;
  std::map<std::string, double> case_pairs_expected;
  const std::uint64_t ids[2] = {1, 2};
  for (auto first : ids) {
    for (auto second : ids) {
      for (int slot = 0; slot < 2; ++slot) {
        const std::uint64_t dup = slot == 0 ? first : second;
        const std::string key = "1:" + std::to_string(first) + " 1:" + std::to_string(second) + " 0:3 0:" +
                                std::to_string(dup) + " ";
        expected[key] += 1.0 / 8.0;
      }
      case_pairs_expected[std::to_string(first) + std::to_string(second)] += 0.25;
    }
  }

  constexpr int draws = 100000;
  std::map<std::string, double> observed;
  std::map<std::string, double> case_pairs;
  RandomStream rng(2718);
  for (int i = 0; i < draws; ++i) {
    const auto data = resample_proposed(sample, cohort, rng);
    check_proposed_structure(data, sample);
    const std::string key = replicate_key(data);
    REQUIRE(expected.contains(key));
    observed[key] += 1.0;
    case_pairs[std::to_string(data.source(0).value) + std::to_string(data.source(1).value)] += 1.0;
  }

  auto chi2_pvalue = [&](const std::map<std::string, double>& probs, const std::map<std::string, double>& counts) {
    double stat = 0.0;
    for (const auto& [key, p] : probs) {
      const double e = p * draws;
      const double o = counts.contains(key) ? counts.at(key) : 0.0;
      stat += (o - e) * (o - e) / e;
    }
    const boost::math::chi_squared dist(static_cast<double>(probs.size() - 1));
    return boost::math::cdf(boost::math::complement(dist, stat));
  };
  CHECK(chi2_pvalue(expected, observed) > 0.001);
  CHECK(chi2_pvalue(case_pairs_expected, case_pairs) > 0.001);
}

TEST_CASE("naive replicates: sizes and per-member expected count") {
  RandomStream rng(4);
  const auto cohort = random_cohort(300, rng);
  const auto sample = sample_case_cohort(cohort, 0.2, rng);
  const ResamplingPools pools(cohort, sample);
  const auto tracked = sample.subcohort_ids().front();
  double total = 0.0;
  constexpr int reps = 10000;
  for (int r = 0; r < reps; ++r) {
    const auto data = resample_naive(pools, rng);
    REQUIRE(data.rows() == sample.n1() + sample.n0());
    REQUIRE(data.count_cases() == sample.n1());
    for (std::size_t i = sample.n1(); i < data.rows(); ++i) total += data.source(i) == tracked ? 1.0 : 0.0;
  }
  CHECK(std::abs(total / reps - 1.0) < 0.05);
}

TEST_CASE("resampling preconditions") {
  std::vector<CohortRecord> records = {{ParticipantId{1}, 0, {0.0}, {}}, {ParticipantId{2}, 0, {1.0}, {}}};
  const Cohort cohort(std::move(records));
  const CaseCohortSample no_cases({}, {ParticipantId{1}, ParticipantId{2}});
  RandomStream rng(1);
  CHECK_THROWS_AS(resample_proposed(no_cases, cohort, rng), ContractViolation);
  CHECK_THROWS_AS(resample_naive(no_cases, cohort, rng), ContractViolation);
  const CaseCohortSample unknown({ParticipantId{5}}, {ParticipantId{1}});
  CHECK_THROWS_AS(resample_naive(unknown, cohort, rng), LookupError);
}

TEST_CASE("bootstrap proportion of exposed cases has the binomial standard error") {
  RandomStream rng(8);
  const auto cohort = random_cohort(2000, rng);
  const auto sample = sample_case_cohort(cohort, 0.2, rng);
  const ResamplingPools pools(cohort, sample);
  const auto n1 = static_cast<double>(sample.n1());
  double exposed = 0.0;
  for (auto id : sample.case_ids()) exposed += cohort.at(id).x[0];
  const double p_hat = exposed / n1;

  constexpr int reps = 5000;
  std::vector<double> props;
  for (int r = 0; r < reps; ++r) {
    const auto data = resample_proposed(pools, rng);
    double e = 0.0;
    for (std::size_t i = 0; i < sample.n1(); ++i) e += data.x(i)[0];
    props.push_back(e / n1);
  }
  double mean = 0.0;
  for (double v : props) mean += v / reps;
  double ss = 0.0;
  for (double v : props) ss += (v - mean) * (v - mean);
  const double boot_se = std::sqrt(ss / (reps - 1));
  CHECK(std::abs(boot_se / std::sqrt(p_hat * (1 - p_hat) / n1) - 1.0) < 0.05);
}

TEST_CASE("naive bootstrap variance of a 2x2 log odds ratio approaches the Woolf variance") {
  std::vector<CohortRecord> records;
  std::uint64_t id = 0;
  auto add = [&](int count, int y, double x) {
    for (int i = 0; i < count; ++i) records.push_back({ParticipantId{id++}, y, {x}, {}});
  };
  add(100, 1, 1.0);
  add(50, 1, 0.0);
  add(150, 0, 1.0);
  add(200, 0, 0.0);
  const Cohort cohort(std::move(records));
  std::vector<ParticipantId> cases, controls;
  for (const auto& r : cohort.records()) (r.y == 1 ? cases : controls).push_back(r.id);
  const CaseCohortSample sample(cases, controls);

  BootstrapOptions opts;
  opts.replicates = 4000;
  opts.strategy = BootstrapStrategy::naive;
  const auto result = bootstrap_variance(sample, cohort, opts, 99);
  const double woolf = 1.0 / 100 + 1.0 / 50 + 1.0 / 150 + 1.0 / 200;
  CHECK(std::abs(result.covariance(1, 1) / woolf - 1.0) < 0.10);
  CHECK(result.estimate().method == CovarianceMethod::boot_naive);
}

TEST_CASE("bootstrap_variance is seed-deterministic across thread counts") {
  RandomStream rng(17);
  const auto cohort = random_cohort(600, rng);
  const auto sample = sample_case_cohort(cohort, 0.3, rng);
  BootstrapOptions opts;
  opts.replicates = 64;
  for (auto strategy : {BootstrapStrategy::proposed, BootstrapStrategy::naive}) {
    opts.strategy = strategy;
    opts.threads = 1;
    const auto serial = bootstrap_variance(sample, cohort, opts, 5);
    opts.threads = 4;
    const auto parallel = bootstrap_variance(sample, cohort, opts, 5);
    CHECK(serial.coefficient_draws == parallel.coefficient_draws);
    CHECK(serial.covariance == parallel.covariance);
    CHECK(serial.failed_redraws == parallel.failed_redraws);
    const auto other = bootstrap_variance(sample, cohort, opts, 6);
    CHECK(other.coefficient_draws != serial.coefficient_draws);
  }
  opts.replicates = 1;
  CHECK_THROWS_AS(bootstrap_variance(sample, cohort, opts, 5), ContractViolation);
}

TEST_CASE("identical draws give a zero covariance") {
  Matrix draws(5, 3);
  draws.rowwise() = Eigen::RowVector3d(0.3, -1.0, 2.0);
  CHECK(empirical_covariance(draws).isZero(0.0));
}

TEST_CASE("exhausting the redraw budget is an aggregation error") {
  // One case and one non-case: every replicate is perfectly separated.
  std::vector<CohortRecord> records = {{ParticipantId{1}, 1, {1.0}, {}}, {ParticipantId{2}, 0, {0.0}, {}}};
  const Cohort cohort(std::move(records));
  const CaseCohortSample sample({ParticipantId{1}}, {ParticipantId{2}});
  BootstrapOptions opts;
  opts.replicates = 3;
  CHECK_THROWS_AS(bootstrap_variance(sample, cohort, opts, 1), AggregationError);
}

TEST_CASE("relabelling participants does not change the bootstrap covariance beyond Monte Carlo error") {
  RandomStream rng(23);
  const auto base = random_cohort(1500, rng);
  // same participants, ids reversed so every pool is traversed in another order
  std::vector<CohortRecord> relabelled = base.records();
  for (auto& r : relabelled) r.id = ParticipantId{5000 - r.id.value};
  const Cohort other(std::move(relabelled));

  RandomStream srng(3);
  const auto sample = sample_case_cohort(base, 0.25, srng);
  std::vector<ParticipantId> cases, sub;
  for (auto id : sample.case_ids()) cases.push_back(ParticipantId{5000 - id.value});
  for (auto id : sample.subcohort_ids()) sub.push_back(ParticipantId{5000 - id.value});
  const CaseCohortSample mapped(cases, sub);
  REQUIRE(mapped.m() == sample.m());

  BootstrapOptions opts;
  opts.replicates = 1000;
  const auto a = bootstrap_variance(sample, base, opts, 41).estimate().standard_errors();
  const auto b = bootstrap_variance(mapped, other, opts, 41).estimate().standard_errors();
  for (Eigen::Index j = 0; j < a.size(); ++j) CHECK(std::abs(a[j] / b[j] - 1.0) < 0.10);
}
