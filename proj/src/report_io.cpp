#include "ccboot/report_io.hpp"

#include <array>
#include <charconv>
#include <iomanip>
#include <sstream>
#include <vector>

#include "ccboot/errors.hpp"

namespace ccboot {
namespace {

constexpr std::string_view kHeader = "n,fraction,n_sims,b,seed,coefficient,metric,value";

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, sep)) out.push_back(field);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

template <typename T>
T parse_field(const std::string& text, std::size_t line_no, std::string_view what) {
  T value{};
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) {
    throw InputError("report line " + std::to_string(line_no) + ": invalid " + std::string(what) + " '" + text + "'");
  }
  return value;
}

std::string fixed3(double v) {
  std::ostringstream ss;
  ss << std::fixed << std::setprecision(3) << v;
  return ss.str();
}

}  // namespace

std::string format_real(double value) {
  std::array<char, 32> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  return std::string(buf.data(), ptr);
}

void write_report_csv(std::ostream& out, const StudyReport& report) {
  const std::string prefix = std::to_string(report.n) + "," + format_real(report.subcohort_fraction) + "," +
                             std::to_string(report.n_sims) + "," + std::to_string(report.b) + "," +
                             std::to_string(report.seed) + ",";
  out << kHeader << '\n';
  for (std::size_t j = 0; j < report.coefficients.size(); ++j) {
    for (std::size_t m = 0; m < kMetricCount; ++m) {
      const auto metric = static_cast<Metric>(m);
      out << prefix << "beta" << j << ',' << to_string(metric) << ','
          << format_real(report.coefficients[j].get(metric)) << '\n';
    }
  }
  out << prefix << "scenario,mean_duplicates," << format_real(report.mean_duplicates) << '\n';
  out << prefix << "scenario,failed_simulations," << report.failed_simulations << '\n';
  out << prefix << "scenario,boot_failed_redraws_naive," << report.boot_failed_redraws_naive << '\n';
  out << prefix << "scenario,boot_failed_redraws_proposed," << report.boot_failed_redraws_proposed << '\n';
}

StudyReport read_report_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kHeader) throw InputError("report: missing or unexpected header");
  StudyReport report;
  std::size_t line_no = 1;
  bool first = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split(line, ',');
    if (fields.size() != 8) throw InputError("report line " + std::to_string(line_no) + ": expected 8 fields");
    const auto n = parse_field<std::size_t>(fields[0], line_no, "n");
    const auto fraction = parse_field<double>(fields[1], line_no, "fraction");
    const auto n_sims = parse_field<std::size_t>(fields[2], line_no, "n_sims");
    const auto b = parse_field<std::size_t>(fields[3], line_no, "b");
    const auto seed = parse_field<std::uint64_t>(fields[4], line_no, "seed");
    if (first) {
      report.n = n;
      report.subcohort_fraction = fraction;
      report.n_sims = n_sims;
      report.b = b;
      report.seed = seed;
      first = false;
    } else if (n != report.n || fraction != report.subcohort_fraction || n_sims != report.n_sims ||
               b != report.b || seed != report.seed) {
      throw InputError("report line " + std::to_string(line_no) + ": scenario metadata differs from first record");
    }
    const std::string& coefficient = fields[5];
    const std::string& metric = fields[6];
    const std::string& value = fields[7];
    if (coefficient == "scenario") {
      if (metric == "mean_duplicates") {
        report.mean_duplicates = parse_field<double>(value, line_no, "value");
      } else if (metric == "failed_simulations") {
        report.failed_simulations = parse_field<std::size_t>(value, line_no, "value");
      } else if (metric == "boot_failed_redraws_naive") {
        report.boot_failed_redraws_naive = parse_field<std::size_t>(value, line_no, "value");
      } else if (metric == "boot_failed_redraws_proposed") {
        report.boot_failed_redraws_proposed = parse_field<std::size_t>(value, line_no, "value");
      } else {
        throw InputError("report line " + std::to_string(line_no) + ": unknown scenario metric '" + metric + "'");
      }
      continue;
    }
    if (coefficient.rfind("beta", 0) != 0) {
      throw InputError("report line " + std::to_string(line_no) + ": unknown coefficient '" + coefficient + "'");
    }
    const auto index = parse_field<std::size_t>(coefficient.substr(4), line_no, "coefficient index");
    const auto parsed_metric = metric_from_string(metric);
    if (!parsed_metric) {
      throw InputError("report line " + std::to_string(line_no) + ": unknown metric '" + metric + "'");
    }
    if (report.coefficients.size() <= index) report.coefficients.resize(index + 1);
    report.coefficients[index].set(*parsed_metric, parse_field<double>(value, line_no, "value"));
  }
  if (first) throw InputError("report: no records");
  return report;
}

void render_report_table(std::ostream& out, const StudyReport& report) {
  constexpr int label_width = 22;
  out << std::left << std::setw(label_width) << "N" << report.n << '\n';
  out << std::setw(label_width) << "Subcohort size" << std::setprecision(4) << 100.0 * report.subcohort_fraction
      << "%\n";
  out << std::setw(label_width) << "Simulations" << report.n_sims << " (B = " << report.b << ")\n";
  out << std::setw(label_width) << "Mean duplicated" << std::fixed << std::setprecision(1) << report.mean_duplicates
      << '\n';
  out.unsetf(std::ios::fixed);

  static constexpr std::array<std::pair<Metric, std::string_view>, 8> rows = {{
      {Metric::mean, "Mean"},
      {Metric::sd, "SE"},
      {Metric::se_robust, "SE robust"},
      {Metric::se_boot_naive, "SE boot,naive"},
      {Metric::se_boot_proposed, "SE boot,proposed"},
      {Metric::cp_robust, "CP robust"},
      {Metric::cp_boot_naive, "CP boot,naive"},
      {Metric::cp_boot_proposed, "CP boot,proposed"},
  }};
  for (std::size_t j = 1; j < report.coefficients.size(); ++j) {
    const auto& c = report.coefficients[j];
    out << "beta" << j << " = " << fixed3(c.true_value) << '\n';
    for (const auto& [metric, label] : rows) {
      out << "  " << std::setw(label_width - 2) << label << std::right << std::setw(8) << fixed3(c.get(metric))
          << std::left << '\n';
    }
  }
  if (report.failed_simulations + report.boot_failed_redraws_naive + report.boot_failed_redraws_proposed > 0) {
    out << "Redraws: " << report.failed_simulations << " simulations, " << report.boot_failed_redraws_naive
        << " naive and " << report.boot_failed_redraws_proposed << " proposed bootstrap replicates\n";
  }
}

}  // namespace ccboot
