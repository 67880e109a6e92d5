#include "ccboot/study.hpp"

#include <atomic>
#include <cmath>
#include <mutex>
#include <string>

#include "ccboot/design.hpp"
#include "ccboot/errors.hpp"
#include "ccboot/parallel.hpp"

namespace ccboot {
namespace {


struct SimulationOutcome {
  Vector estimate;
  Vector se_robust;
  Vector se_boot_naive;
  Vector se_boot_proposed;
  std::vector<bool> hit_robust;
  std::vector<bool> hit_boot_naive;
  std::vector<bool> hit_boot_proposed;
  std::size_t duplicates = 0;
  std::size_t failed_attempts = 0;
  std::size_t boot_failed_naive = 0;
  std::size_t boot_failed_proposed = 0;
};


constexpr std::array<std::string_view, kMetricCount> kMetricNames = {
    "true_value", "mean",       "sd",           "se_robust",       "se_boot_naive",
    "se_boot_proposed", "cp_robust", "cp_boot_naive", "cp_boot_proposed"};

// Runs one simulation attempt; returns nullopt when the original stacked fit
// or a bootstrap could not be completed.
std::optional<SimulationOutcome> simulate_once(const ScenarioConfig& config, const SimParams& params,
                                               const IntervalBuilder& interval, std::size_t sim,
                                               std::uint64_t attempt) {
  RandomStream base = RandomStream::derive(config.master_seed, {sim, attempt});
  const std::uint64_t cohort_seed = base();
  RandomStream sample_rng = base.split(stream_tag::kSubcohort);
  const std::uint64_t naive_seed = base.split(stream_tag::kBootNaive)();
  const std::uint64_t proposed_seed = base.split(stream_tag::kBootProposed)();

  const Cohort cohort = generate_cohort(config.n, params, cohort_seed);
  const CaseCohortSample sample = sample_case_cohort(cohort, config.subcohort_fraction, sample_rng);

  SimulationOutcome out;
  out.duplicates = sample.m();
  try {
    const StackedDataset stacked = build_stacked(cohort, sample);
    const FitResult fit = fit_logistic(stacked, config.fit);
    if (!fit.converged) return std::nullopt;

    BootstrapOptions boot;
    boot.replicates = config.b;
    boot.fit = config.fit;
    boot.selection = config.selection;
    boot.threads = 1;
    boot.strategy = BootstrapStrategy::naive;
    const BootstrapResult naive = bootstrap_variance(sample, cohort, boot, naive_seed);
    boot.strategy = BootstrapStrategy::proposed;
    const BootstrapResult proposed = bootstrap_variance(sample, cohort, boot, proposed_seed);

    out.estimate = fit.beta;
    out.se_robust = robust_covariance(fit, stacked).standard_errors();
    out.se_boot_naive = naive.estimate().standard_errors();
    out.se_boot_proposed = proposed.estimate().standard_errors();
    out.boot_failed_naive = naive.failed_redraws;
    out.boot_failed_proposed = proposed.failed_redraws;
  } catch (const FitError&) {
    return std::nullopt;
  } catch (const AggregationError&) {
    return std::nullopt;
  } catch (const ContractViolation&) {
    // e.g. a cohort without cases
    return std::nullopt;
  }

  const auto k = static_cast<std::size_t>(out.estimate.size());
  for (std::size_t j = 0; j < k; ++j) {
    const auto jj = static_cast<Eigen::Index>(j);
    const double truth = params.beta[j];
    out.hit_robust.push_back(interval(out.estimate[jj], out.se_robust[jj], config.level).contains(truth));
    out.hit_boot_naive.push_back(interval(out.estimate[jj], out.se_boot_naive[jj], config.level).contains(truth));
    out.hit_boot_proposed.push_back(
        interval(out.estimate[jj], out.se_boot_proposed[jj], config.level).contains(truth));
  }
  return out;
}

double mean_of(const std::vector<SimulationOutcome>& outs, const Vector SimulationOutcome::*field, Eigen::Index j) {
  double acc = 0.0;
  for (const auto& o : outs) acc += (o.*field)[j];
  return acc / static_cast<double>(outs.size());
}

double coverage_of(const std::vector<SimulationOutcome>& outs, const std::vector<bool> SimulationOutcome::*field,
                   std::size_t j) {
  std::vector<bool> hits;
  hits.reserve(outs.size());
  for (const auto& o : outs) hits.push_back((o.*field)[j]);
  return coverage(hits);
}

}  // namespace

std::string_view to_string(Metric metric) { return kMetricNames[static_cast<std::size_t>(metric)]; }

std::optional<Metric> metric_from_string(std::string_view name) {
  for (std::size_t i = 0; i < kMetricCount; ++i) {
    if (kMetricNames[i] == name) return static_cast<Metric>(i);
  }
  return std::nullopt;
}

double CoefficientSummary::get(Metric metric) const {
  switch (metric) {
    case Metric::true_value: return true_value;
    case Metric::mean: return mean_estimate;
    case Metric::sd: return empirical_sd;
    case Metric::se_robust: return mean_se_robust;
    case Metric::se_boot_naive: return mean_se_boot_naive;
    case Metric::se_boot_proposed: return mean_se_boot_proposed;
    case Metric::cp_robust: return cp_robust;
    case Metric::cp_boot_naive: return cp_boot_naive;
    case Metric::cp_boot_proposed: return cp_boot_proposed;
  }
  return 0.0;
}

void CoefficientSummary::set(Metric metric, double value) {
  switch (metric) {
    case Metric::true_value: true_value = value; break;
    case Metric::mean: mean_estimate = value; break;
    case Metric::sd: empirical_sd = value; break;
    case Metric::se_robust: mean_se_robust = value; break;
    case Metric::se_boot_naive: mean_se_boot_naive = value; break;
    case Metric::se_boot_proposed: mean_se_boot_proposed = value; break;
    case Metric::cp_robust: cp_robust = value; break;
    case Metric::cp_boot_naive: cp_boot_naive = value; break;
    case Metric::cp_boot_proposed: cp_boot_proposed = value; break;
  }
}

std::vector<std::string> ScenarioConfig::violations() const {
  std::vector<std::string> out;
  if (n < 2) out.emplace_back("n must be at least 2");
  if (!(subcohort_fraction > 0.0 && subcohort_fraction <= 1.0)) out.emplace_back("fraction must lie in (0, 1]");
  if (n_sims < 1) out.emplace_back("n_sims must be at least 1");
  if (b < 2) out.emplace_back("b must be at least 2");
  if (!(level > 0.0 && level < 1.0)) out.emplace_back("level must lie in (0, 1)");
  if (target_rate && !(*target_rate > 0.0 && *target_rate < 1.0)) {
    out.emplace_back("target_rate must lie in (0, 1)");
  }
  if (!(sim_params.p_z1 >= 0.0 && sim_params.p_z1 <= 1.0)) out.emplace_back("p_z1 must lie in [0, 1]");
  if (!(sim_params.q2 >= 0.0 && sim_params.q3 >= 0.0 && sim_params.q2 + sim_params.q3 <= 1.0)) {
    out.emplace_back("q2 and q3 must be non-negative with q2 + q3 <= 1");
  }
  if (!target_rate && !(sim_params.max_event_probability() <= 1.0)) {
    out.emplace_back("beta0 gives an event probability above 1 for some covariate pattern");
  }
  return out;
}

double coverage(const std::vector<bool>& hits) {
  if (hits.empty()) throw ContractViolation("coverage: no intervals");
  std::size_t inside = 0;
  for (bool h : hits) inside += h ? 1 : 0;
  return static_cast<double>(inside) / static_cast<double>(hits.size());
}

StudyReport run_scenario(const ScenarioConfig& config, const RunOptions& options) {
  if (const auto problems = config.violations(); !problems.empty()) {
    std::string msg = "invalid scenario:";
    for (const auto& p : problems) msg += " " + p + ";";
    throw ContractViolation(msg);
  }
  SimParams params = config.sim_params;
  if (config.target_rate) params.beta[0] = calibrate_intercept(params, *config.target_rate);
  params.validate();

  const IntervalBuilder interval = options.interval ? options.interval : IntervalBuilder(wald_ci);
  const std::size_t budget = config.n_sims / 100;

  std::vector<SimulationOutcome> outcomes(config.n_sims);
  std::atomic<std::size_t> completed{0};
  std::mutex progress_mutex;

  parallel_for(config.n_sims, options.threads, [&](std::size_t sim) {
    std::size_t failures = 0;
    for (std::uint64_t attempt = 0;; ++attempt) {
      if (auto out = simulate_once(config, params, interval, sim, attempt)) {
        out->failed_attempts = failures;
        outcomes[sim] = std::move(*out);
        break;
      }
      if (++failures > budget) {
        outcomes[sim].failed_attempts = failures;
        break;
      }
    }
    const std::size_t done = completed.fetch_add(1) + 1;
    if (options.progress) {
      std::lock_guard lock(progress_mutex);
      options.progress->on_progress(done, config.n_sims);
    }
  });

  StudyReport report;
  report.n = config.n;
  report.subcohort_fraction = config.subcohort_fraction;
  report.n_sims = config.n_sims;
  report.b = config.b;
  report.seed = config.master_seed;
  for (const auto& o : outcomes) {
    report.failed_simulations += o.failed_attempts;
    report.boot_failed_redraws_naive += o.boot_failed_naive;
    report.boot_failed_redraws_proposed += o.boot_failed_proposed;
  }
  if (report.failed_simulations > budget) {
    throw AggregationError("run_scenario: " + std::to_string(report.failed_simulations) +
                           " failed simulation attempts exceed the 1% allowance of " + std::to_string(budget));
  }

  double dup_total = 0.0;
  for (const auto& o : outcomes) dup_total += static_cast<double>(o.duplicates);
  report.mean_duplicates = dup_total / static_cast<double>(outcomes.size());

  const auto k = outcomes.front().estimate.size();
  for (Eigen::Index j = 0; j < k; ++j) {
    const auto jj = static_cast<std::size_t>(j);
    CoefficientSummary row;
    row.true_value = params.beta[jj];
    row.mean_estimate = mean_of(outcomes, &SimulationOutcome::estimate, j);
    if (outcomes.size() > 1) {
      double ss = 0.0;
      for (const auto& o : outcomes) ss += (o.estimate[j] - row.mean_estimate) * (o.estimate[j] - row.mean_estimate);
      row.empirical_sd = std::sqrt(ss / static_cast<double>(outcomes.size() - 1));
    }
    row.mean_se_robust = mean_of(outcomes, &SimulationOutcome::se_robust, j);
    row.mean_se_boot_naive = mean_of(outcomes, &SimulationOutcome::se_boot_naive, j);
    row.mean_se_boot_proposed = mean_of(outcomes, &SimulationOutcome::se_boot_proposed, j);
    row.cp_robust = coverage_of(outcomes, &SimulationOutcome::hit_robust, jj);
    row.cp_boot_naive = coverage_of(outcomes, &SimulationOutcome::hit_boot_naive, jj);
    row.cp_boot_proposed = coverage_of(outcomes, &SimulationOutcome::hit_boot_proposed, jj);
    report.coefficients.push_back(row);
  }
  return report;
}

}  // namespace ccboot
