#include "ccboot/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include <CLI11.hpp>

#include "ccboot/config.hpp"
#include "ccboot/core_model.hpp"
#include "ccboot/errors.hpp"
#include "ccboot/parallel.hpp"
#include "ccboot/report_io.hpp"
#include "ccboot/resampling.hpp"
#include "ccboot/simgen.hpp"
#include "ccboot/study.hpp"

namespace ccboot::cli {
namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(line.substr(start, comma == std::string::npos ? std::string::npos : comma - start));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

std::string line_ref(std::size_t line_no) { return "line " + std::to_string(line_no) + ": "; }

// Maps exceptions onto exit codes and prints the message.
template <typename F>
int guarded(std::ostream& err, F&& body) {
  try {
    return body();
  } catch (const InputError& e) {
    err << "input error: " << e.what() << '\n';
    return kInputError;
  } catch (const ContractViolation& e) {
    err << "input error: " << e.what() << '\n';
    return kInputError;
  } catch (const LookupError& e) {
    err << "input error: " << e.what() << '\n';
    return kInputError;
  } catch (const ModelValidityError& e) {
    err << "input error: " << e.what() << '\n';
    return kInputError;
  } catch (const FitError& e) {
    err << "computation failed: " << e.what() << '\n';
    return kComputationError;
  } catch (const CalibrationError& e) {
    err << "computation failed: " << e.what() << '\n';
    return kComputationError;
  } catch (const AggregationError& e) {
    err << "computation failed: " << e.what() << '\n';
    return kComputationError;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return kInternalError;
  }
}

std::string fixed(double v, int digits = 6) {
  std::ostringstream ss;
  ss << std::fixed << std::setprecision(digits) << v;
  return ss.str();
}

class StderrProgress : public ProgressSink {
 public:
  explicit StderrProgress(std::ostream& err) : err_(err) {}
  void on_progress(std::size_t completed, std::size_t total) override {
    const std::size_t decile = completed * 10 / total;
    if (decile > last_decile_ || completed == total) {
      last_decile_ = decile;
      err_ << "simulations: " << completed << "/" << total << '\n';
    }
  }

 private:
  std::ostream& err_;
  std::size_t last_decile_ = 0;
};

}  // namespace

CaseCohortData read_stacked_csv(std::istream& in, const AnalysisRequest& request) {
  std::string line;
  if (!std::getline(in, line)) throw InputError("data file is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_fields(line);

  auto column_index = [&](const std::string& name) -> std::optional<std::size_t> {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) return std::nullopt;
    return static_cast<std::size_t>(it - header.begin());
  };

  const auto outcome = column_index(request.outcome_column);
  if (!outcome) throw InputError("line 1: unknown outcome column '" + request.outcome_column + "'");

  std::optional<std::size_t> id_col;
  if (request.id_column) {
    id_col = column_index(*request.id_column);
    if (!id_col) throw InputError("line 1: unknown id column '" + *request.id_column + "'");
  } else {
    id_col = column_index("id");
  }

  CaseCohortData result;
  std::vector<std::size_t> covariate_cols;
  if (request.covariate_columns.empty()) {
    for (std::size_t c = 0; c < header.size(); ++c) {
      if (c != *outcome && (!id_col || c != *id_col)) {
        covariate_cols.push_back(c);
        result.covariate_names.push_back(header[c]);
      }
    }
  } else {
    for (const auto& name : request.covariate_columns) {
      const auto c = column_index(name);
      if (!c) throw InputError("line 1: unknown covariate column '" + name + "'");
      covariate_cols.push_back(*c);
      result.covariate_names.push_back(name);
    }
  }
  if (covariate_cols.empty()) throw InputError("line 1: no covariate columns");
  result.has_ids = id_col.has_value();

  struct Participant {
    std::vector<double> x;
    bool is_case = false;
    bool in_subcohort = false;
    std::size_t first_line = 0;
  };
  std::vector<Participant> participants;
  std::map<std::string, std::size_t> by_name;

  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() != header.size()) {
      throw InputError(line_ref(line_no) + "expected " + std::to_string(header.size()) + " fields, found " +
                       std::to_string(fields.size()));
    }
    const std::string& d_text = fields[*outcome];
    if (d_text != "0" && d_text != "1") {
      throw InputError(line_ref(line_no) + "outcome must be 0 or 1, found '" + d_text + "'");
    }
    const bool is_case = d_text == "1";
    std::vector<double> x;
    x.reserve(covariate_cols.size());
    for (std::size_t c : covariate_cols) {
      const std::string& text = fields[c];
      double value = 0.0;
      const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
      if (ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(value)) {
        throw InputError(line_ref(line_no) + "column '" + header[c] + "' is not a number: '" + text + "'");
      }
      x.push_back(value);
    }

    const std::string name = id_col ? fields[*id_col] : "row" + std::to_string(line_no);
    if (id_col && name.empty()) throw InputError(line_ref(line_no) + "empty participant id");
    auto [it, inserted] = by_name.emplace(name, participants.size());
    if (inserted) {
      participants.push_back({std::move(x), is_case, !is_case, line_no});
      result.participant_names.push_back(name);
      continue;
    }
    Participant& p = participants[it->second];
    const bool already = is_case ? p.is_case : p.in_subcohort;
    if (already || (p.is_case && p.in_subcohort)) {
      throw InputError(line_ref(line_no) + "participant '" + name +
                       "' appears more than twice or twice with the same outcome indicator");
    }
    if (p.x != x) {
      throw InputError(line_ref(line_no) + "participant '" + name + "' has covariates differing from line " +
                       std::to_string(p.first_line));
    }
    (is_case ? p.is_case : p.in_subcohort) = true;
  }
  if (participants.empty()) throw InputError("data file has no rows");

  std::vector<CohortRecord> records;
  std::vector<ParticipantId> cases;
  std::vector<ParticipantId> subcohort;
  records.reserve(participants.size());
  for (std::size_t i = 0; i < participants.size(); ++i) {
    const ParticipantId id{i};
    records.push_back({id, participants[i].is_case ? 1 : 0, std::move(participants[i].x), {}});
    if (participants[i].is_case) cases.push_back(id);
    if (participants[i].in_subcohort) subcohort.push_back(id);
  }
  result.cohort = Cohort(std::move(records));
  result.sample.emplace(std::move(cases), std::move(subcohort));
  return result;
}

int cmd_fit(const AnalysisRequest& request, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (!(request.level > 0.0 && request.level < 1.0)) throw InputError("--level must lie in (0, 1)");
    const bool want_naive = request.boot == BootMode::naive || request.boot == BootMode::both;
    const bool want_proposed = request.boot == BootMode::proposed || request.boot == BootMode::both;
    if ((want_naive || want_proposed) && request.b < 2) throw InputError("--b must be at least 2");

    std::ifstream in(request.data_path);
    if (!in) throw InputError("cannot open data file '" + request.data_path + "'");
    const CaseCohortData data = read_stacked_csv(in, request);
    if (want_proposed && !data.has_ids) {
      throw InputError("the proposed bootstrap needs a participant id column to identify duplicates");
    }
    const CaseCohortSample& sample = *data.sample;
    const StackedDataset stacked = build_stacked(data.cohort, sample);
    const FitResult fit = fit_logistic(stacked);
    if (!fit.converged) {
      throw FitError("logistic fit did not converge in " + std::to_string(fit.iterations) + " iterations");
    }

    std::vector<CovarianceEstimate> estimates = {model_covariance(fit), robust_covariance(fit, stacked)};
    std::vector<std::pair<std::string, std::size_t>> redraws;
    BootstrapOptions boot;
    boot.replicates = request.b;
    boot.threads = request.threads;
    if (want_naive) {
      boot.strategy = BootstrapStrategy::naive;
      const auto res = bootstrap_variance(sample, data.cohort, boot,
                                          RandomStream::derive(request.seed, {stream_tag::kBootNaive})());
      estimates.push_back(res.estimate());
      redraws.emplace_back("naive", res.failed_redraws);
    }
    if (want_proposed) {
      boot.strategy = BootstrapStrategy::proposed;
      const auto res = bootstrap_variance(sample, data.cohort, boot,
                                          RandomStream::derive(request.seed, {stream_tag::kBootProposed})());
      estimates.push_back(res.estimate());
      redraws.emplace_back("proposed", res.failed_redraws);
    }

    std::vector<std::string> terms = {"(intercept)"};
    terms.insert(terms.end(), data.covariate_names.begin(), data.covariate_names.end());

    out << "rows " << stacked.rows() << "  cases n1 = " << sample.n1() << "  subcohort n0 = " << sample.n0()
        << "  duplicated m = " << sample.m() << '\n';
    out << "level " << format_real(request.level);
    if (want_naive || want_proposed) out << "  bootstrap B = " << request.b << "  seed " << request.seed;
    out << '\n';
    for (const auto& [name, count] : redraws) {
      if (count > 0) out << "redrawn " << name << " replicates: " << count << '\n';
    }
    out << std::left << std::setw(16) << "term" << std::right << std::setw(12) << "estimate" << "  " << std::left
        << std::setw(14) << "method" << std::right << std::setw(12) << "se" << std::setw(12) << "lower"
        << std::setw(12) << "upper" << '\n';

    std::ostringstream csv;
    csv << "term,estimate,method,se,lower,upper,n1,n0,m\n";
    for (std::size_t j = 0; j < terms.size(); ++j) {
      const auto jj = static_cast<Eigen::Index>(j);
      for (const auto& est : estimates) {
        const double se = est.standard_errors()[jj];
        const Interval ci = wald_ci(fit.beta[jj], se, request.level);
        out << std::left << std::setw(16) << terms[j] << std::right << std::setw(12) << fixed(fit.beta[jj]) << "  "
            << std::left << std::setw(14) << to_string(est.method) << std::right << std::setw(12) << fixed(se)
            << std::setw(12) << fixed(ci.lower) << std::setw(12) << fixed(ci.upper) << '\n';
        csv << terms[j] << ',' << format_real(fit.beta[jj]) << ',' << to_string(est.method) << ','
            << format_real(se) << ',' << format_real(ci.lower) << ',' << format_real(ci.upper) << ','
            << sample.n1() << ',' << sample.n0() << ',' << sample.m() << '\n';
      }
    }
    if (!request.out_path.empty()) {
      std::ofstream file(request.out_path);
      if (!file) throw InputError("cannot write '" + request.out_path + "'");
      file << csv.str();
    }
    return static_cast<int>(kSuccess);
  });
}

int cmd_simulate(const std::string& config_path, const std::string& out_path, std::optional<std::uint64_t> seed,
                 std::optional<std::size_t> b, unsigned threads, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    ScenarioConfig config = load_scenario_config(config_path);
    if (seed) config.master_seed = *seed;
    if (b) {
      if (*b < 2) throw InputError("--b must be at least 2");
      config.b = *b;
    }
    StderrProgress progress(err);
    RunOptions options;
    options.threads = threads;
    options.progress = &progress;
    const StudyReport report = run_scenario(config, options);
    render_report_table(out, report);
    if (!out_path.empty()) {
      std::ofstream file(out_path);
      if (!file) throw InputError("cannot write '" + out_path + "'");
      write_report_csv(file, report);
    }
    return static_cast<int>(kSuccess);
  });
}

int cmd_calibrate(const std::string& config_path, std::optional<double> target, std::ostream& out,
                  std::ostream& err) {
  return guarded(err, [&] {
    ScenarioConfig config;
    if (!config_path.empty()) config = load_scenario_config(config_path);
    const double rate = target ? *target : config.target_rate.value_or(0.1535);
    if (!(rate > 0.0 && rate < 1.0)) throw InputError("target rate must lie in (0, 1), got " + format_real(rate));

    SimParams params = config.sim_params;
    params.beta[0] = calibrate_intercept(params, rate);
    const double achieved = marginal_event_rate(params);
    const auto n0 = static_cast<double>(std::llround(config.subcohort_fraction * static_cast<double>(config.n)));
    out << "beta0 " << fixed(params.beta[0], 10) << '\n';
    out << "achieved_rate " << fixed(achieved, 10) << '\n';
    out << "exposure_prevalence " << fixed(exposure_prevalence(params), 10) << '\n';
    out << "max_cell_probability " << fixed(params.max_event_probability(), 10) << '\n';
    out << "expected_duplicates " << fixed(n0 * achieved, 4) << "  (N = " << config.n
        << ", subcohort " << format_real(config.subcohort_fraction) << ")\n";
    return static_cast<int>(kSuccess);
  });
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Case-cohort logistic regression with duplication-aware bootstrap variance", "ccboot"};
  app.require_subcommand(1);

  unsigned threads = default_thread_count();

  AnalysisRequest request;
  std::string boot_mode = "both";
  std::vector<std::string> covariates;
  std::string id_column;
  auto* fit = app.add_subcommand("fit", "Fit stacked case-cohort data from CSV");
  fit->add_option("--data", request.data_path, "Stacked CSV (header required)")->required();
  fit->add_option("--outcome", request.outcome_column, "Case/subcohort indicator column")->capture_default_str();
  fit->add_option("--covariates", covariates, "Covariate columns (default: all others)")->delimiter(',');
  fit->add_option("--id", id_column, "Participant id column (default: 'id' when present)");
  fit->add_option("--boot", boot_mode, "Bootstrap variance: none, naive, proposed or both")
      ->check(CLI::IsMember({"none", "naive", "proposed", "both"}))
      ->capture_default_str();
  fit->add_option("--b", request.b, "Bootstrap replicates")->capture_default_str();
  fit->add_option("--seed", request.seed, "Bootstrap seed")->capture_default_str();
  fit->add_option("--level", request.level, "Confidence level")->capture_default_str();
  fit->add_option("--threads", threads, "Worker threads (default CCBOOT_THREADS or all cores)");
  fit->add_option("--out", request.out_path, "Write the table as CSV");

  std::string config_path;
  std::string sim_out = "simulate_report.csv";
  std::optional<std::uint64_t> sim_seed;
  std::optional<std::size_t> sim_b;
  auto* simulate = app.add_subcommand("simulate", "Run a Monte Carlo scenario from a config file");
  simulate->add_option("--config", config_path, "Scenario config file")->required();
  simulate->add_option("--out", sim_out, "Machine-readable report path")->capture_default_str();
  simulate->add_option("--seed", sim_seed, "Override the config seed");
  simulate->add_option("--b", sim_b, "Override the bootstrap replicate count");
  simulate->add_option("--threads", threads, "Worker threads (default CCBOOT_THREADS or all cores)");

  std::string params_path;
  std::optional<double> target;
  auto* calibrate = app.add_subcommand("calibrate", "Solve beta0 for a target marginal event rate");
  calibrate->add_option("--config", params_path, "Scenario/parameter config file");
  calibrate->add_option("--target", target, "Target marginal event rate");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e, out, err);
    err << "input error: " << e.what() << '\n';
    return kInputError;
  }
  if (threads == 0) threads = 1;

  if (*fit) {
    request.threads = threads;
    request.covariate_columns = covariates;
    if (!id_column.empty()) request.id_column = id_column;
    request.boot = boot_mode == "none"    ? BootMode::none
                   : boot_mode == "naive" ? BootMode::naive
                   : boot_mode == "proposed" ? BootMode::proposed
                                             : BootMode::both;
    return cmd_fit(request, out, err);
  }
  if (*simulate) return cmd_simulate(config_path, sim_out, sim_seed, sim_b, threads, out, err);
  return cmd_calibrate(params_path, target, out, err);
}

}  // namespace ccboot::cli
