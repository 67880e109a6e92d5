#include "ccboot/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <set>

#include "ccboot/errors.hpp"

namespace ccboot {
namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

template <typename T>
bool parse_number(const std::string& text, T& out) {
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, out);
  return ec == std::errc() && ptr == end;
}

}  // namespace

ScenarioConfig parse_scenario_config(std::istream& in) {
  ScenarioConfig config;
  std::vector<std::string> errors;
  std::set<std::string> seen;
  bool has_beta0 = false;
  bool has_target = false;

  auto real = [&](double& field) {
    return [&field](const std::string& v) { return parse_number(v, field); };
  };
  auto count = [&](std::size_t& field) {
    return [&field](const std::string& v) { return parse_number(v, field); };
  };
  std::map<std::string, std::function<bool(const std::string&)>, std::less<>> setters = {
      {"n", count(config.n)},
      {"fraction", real(config.subcohort_fraction)},
      {"n_sims", count(config.n_sims)},
      {"b", count(config.b)},
      {"seed", [&](const std::string& v) { return parse_number(v, config.master_seed); }},
      {"level", real(config.level)},
      {"beta0", real(config.sim_params.beta[0])},
      {"beta1", real(config.sim_params.beta[1])},
      {"beta2", real(config.sim_params.beta[2])},
      {"beta3", real(config.sim_params.beta[3])},
      {"gamma0", real(config.sim_params.gamma[0])},
      {"gamma1", real(config.sim_params.gamma[1])},
      {"gamma2", real(config.sim_params.gamma[2])},
      {"p_z1", real(config.sim_params.p_z1)},
      {"q2", real(config.sim_params.q2)},
      {"q3", real(config.sim_params.q3)},
      {"target_rate",
       [&](const std::string& v) {
         double rate = 0.0;
         if (!parse_number(v, rate)) return false;
         config.target_rate = rate;
         return true;
       }},
      {"duplicate_selection",
       [&](const std::string& v) {
         if (v == "without_replacement") {
           config.selection = DuplicateSelection::without_replacement;
         } else if (v == "with_replacement") {
           config.selection = DuplicateSelection::with_replacement;
         } else {
           return false;
         }
         return true;
       }},
  };

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    const std::string content = trim(std::string_view(line).substr(0, hash));
    if (content.empty()) continue;
    const auto eq = content.find('=');
    const std::string where = "line " + std::to_string(line_no) + ": ";
    if (eq == std::string::npos) {
      errors.push_back(where + "expected key = value");
      continue;
    }
    const std::string key = trim(std::string_view(content).substr(0, eq));
    const std::string value = trim(std::string_view(content).substr(eq + 1));
    const auto it = setters.find(key);
    if (it == setters.end()) {
      errors.push_back(where + "unknown key '" + key + "'");
      continue;
    }
    if (!seen.insert(key).second) {
      errors.push_back(where + "key '" + key + "' given more than once");
      continue;
    }
    if (!it->second(value)) {
      errors.push_back(where + "invalid value '" + value + "' for " + key);
      continue;
    }
    has_beta0 |= key == "beta0";
    has_target |= key == "target_rate";
  }

  if (has_beta0 && has_target) {
    errors.emplace_back("beta0 and target_rate are mutually exclusive");
  } else if (has_beta0) {
    config.target_rate.reset();
  }
  for (auto& v : config.violations()) errors.push_back(std::move(v));

  if (!errors.empty()) {
    std::string msg = "invalid config:";
    for (const auto& e : errors) msg += "\n  " + e;
    throw InputError(msg);
  }
  return config;
}

ScenarioConfig load_scenario_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config file '" + path + "'");
  return parse_scenario_config(in);
}

}  // namespace ccboot
