#pragma once

#include <istream>
#include <string>

#include "ccboot/study.hpp"

namespace ccboot {

// Flat `key = value` scenario file. '#' starts a comment. Recognised keys:
//   n, fraction, n_sims, b, seed, level,
//   beta0, beta1, beta2, beta3, gamma0, gamma1, gamma2, p_z1, q2, q3,
//   target_rate, duplicate_selection (without_replacement | with_replacement)
// beta0 and target_rate are mutually exclusive; with neither, beta0 is
// calibrated to the default target rate. Unknown keys, repeated keys,
// unparsable values and out-of-range values are all collected and reported
// together in one InputError.
ScenarioConfig parse_scenario_config(std::istream& in);
ScenarioConfig load_scenario_config(const std::string& path);

}  // namespace ccboot
