#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ccboot/core_model.hpp"
#include "ccboot/resampling.hpp"
#include "ccboot/simgen.hpp"

namespace ccboot {

struct ScenarioConfig {
  std::size_t n = 2000;
  double subcohort_fraction = 0.20;
  std::size_t n_sims = 10000;
  std::size_t b = 2000;
  SimParams sim_params;
  // When set, beta0 is calibrated to this marginal event rate before the run.
  std::optional<double> target_rate = 0.1535;
  std::uint64_t master_seed = 1;
  double level = 0.95;
  FitOptions fit;
  DuplicateSelection selection = DuplicateSelection::without_replacement;

  // Every violated constraint, one message each; empty when valid.
  [[nodiscard]] std::vector<std::string> violations() const;
};

enum class Metric {
  true_value,
  mean,
  sd,
  se_robust,
  se_boot_naive,
  se_boot_proposed,
  cp_robust,
  cp_boot_naive,
  cp_boot_proposed,
};
inline constexpr std::size_t kMetricCount = 9;

std::string_view to_string(Metric metric);
std::optional<Metric> metric_from_string(std::string_view name);

struct CoefficientSummary {
  double true_value = 0.0;
  double mean_estimate = 0.0;
  double empirical_sd = 0.0;
  double mean_se_robust = 0.0;
  double mean_se_boot_naive = 0.0;
  double mean_se_boot_proposed = 0.0;
  double cp_robust = 0.0;
  double cp_boot_naive = 0.0;
  double cp_boot_proposed = 0.0;

  [[nodiscard]] double get(Metric metric) const;
  void set(Metric metric, double value);
  friend bool operator==(const CoefficientSummary&, const CoefficientSummary&) = default;
};

struct StudyReport {
  std::size_t n = 0;
  double subcohort_fraction = 0.0;
  std::size_t n_sims = 0;
  std::size_t b = 0;
  std::uint64_t seed = 0;
  // Index 0 is the intercept, which the stacked model does not estimate
  // consistently; it is reported but not interpreted.
  std::vector<CoefficientSummary> coefficients;
  double mean_duplicates = 0.0;
  std::size_t failed_simulations = 0;
  std::size_t boot_failed_redraws_naive = 0;
  std::size_t boot_failed_redraws_proposed = 0;

  friend bool operator==(const StudyReport&, const StudyReport&) = default;
};

// Receives (completed, total) simulation counts; may be called from worker
// threads but never concurrently.
class ProgressSink {
 public:
  virtual ~ProgressSink() = default;
  virtual void on_progress(std::size_t completed, std::size_t total) = 0;
};

// Test seam: builds the interval for (estimate, se, level). Defaults to wald_ci.
using IntervalBuilder = std::function<Interval(double estimate, double se, double level)>;

struct RunOptions {
  unsigned threads = 1;
  ProgressSink* progress = nullptr;
  IntervalBuilder interval;
};


// Simulation s draws everything from streams keyed on (master_seed, s,
// attempt); a simulation whose original fit fails is redrawn with the next
// attempt. Throws AggregationError when more than 1% of simulations need a
// redraw. The report is identical for any thread count.
StudyReport run_scenario(const ScenarioConfig& config, const RunOptions& options = {});

double coverage(const std::vector<bool>& hits);

}  // namespace ccboot
