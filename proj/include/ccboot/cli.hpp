#pragma once

#include <cstddef>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "ccboot/design.hpp"

namespace ccboot::cli {

enum ExitCode : int {
  kSuccess = 0,
  kInternalError = 1,
  kInputError = 2,
  kComputationError = 3,
};

enum class BootMode { none, naive, proposed, both };

struct AnalysisRequest {
  std::string data_path;
  std::string outcome_column = "d";
  std::vector<std::string> covariate_columns;  // empty: every other column
  std::optional<std::string> id_column;        // unset: "id" when present
  BootMode boot = BootMode::both;
  std::size_t b = 2000;
  std::uint64_t seed = 1;
  double level = 0.95;
  unsigned threads = 1;
  std::string out_path;  // machine-readable copy of the table when set
};

// Stacked case-cohort data read from CSV, regrouped by participant.
struct CaseCohortData {
  Cohort cohort;
  std::optional<CaseCohortSample> sample;
  std::vector<std::string> covariate_names;
  std::vector<std::string> participant_names;  // indexed by ParticipantId
  bool has_ids = false;
};

// Header row required, comma separated, no quoting. Rows sharing an id are
// one participant, allowed at most twice (once per indicator value) and with
// identical covariates. Errors name the offending line.
CaseCohortData read_stacked_csv(std::istream& in, const AnalysisRequest& request);

int cmd_fit(const AnalysisRequest& request, std::ostream& out, std::ostream& err);
int cmd_simulate(const std::string& config_path, const std::string& out_path, std::optional<std::uint64_t> seed,
                 std::optional<std::size_t> b, unsigned threads, std::ostream& out, std::ostream& err);
int cmd_calibrate(const std::string& config_path, std::optional<double> target, std::ostream& out,
                  std::ostream& err);

// Entry point used by the `ccboot` executable.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace ccboot::cli
