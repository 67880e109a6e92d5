#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "ccboot/cli.hpp"
#include "ccboot/parallel.hpp"
#include "ccboot/report_io.hpp"

using namespace ccboot;
namespace fs = std::filesystem;

namespace {

const fs::path kData = CCBOOT_TEST_DATA_DIR;

struct CliResult {
  int code;
  std::string out;
  std::string err;
};

CliResult run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "ccboot");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path write_temp(const std::string& name, const std::string& content) {
  const fs::path path = fs::temp_directory_path() / ("ccboot_test_" + name);
  std::ofstream(path) << content;
  return path;
}

std::map<std::string, double> parse_fit_csv(const std::string& text, const std::string& column) {
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);
  std::map<std::string, double> out;
  while (std::getline(in, line)) {
    std::vector<std::string> f;
    std::stringstream ls(line);
    std::string field;
    while (std::getline(ls, field, ',')) f.push_back(field);
    const int idx = column == "estimate" ? 1 : 3;
    out[f[0] + "/" + f[2]] = std::stod(f[static_cast<std::size_t>(idx)]);
  }
  return out;
}

}  // namespace

TEST_CASE("fit output matches the frozen golden files byte for byte") {
  const fs::path csv = fs::temp_directory_path() / "ccboot_test_golden.csv";
  const auto r = run_cli({"fit", "--data", (kData / "cohort2000_seed1_stacked.csv").string(), "--b", "200", "--seed",
                          "1", "--threads", "2", "--out", csv.string()});
  REQUIRE(r.code == cli::kSuccess);
  CHECK(r.out == slurp(kData / "fit_golden.txt"));
  CHECK(slurp(csv) == slurp(kData / "fit_golden.csv"));
}

TEST_CASE("fixture estimates agree with an external GLM fit") {
  // statsmodels GLM(Binomial) on the same file: params, model SE, HC0 SE
  const auto text = slurp(kData / "fit_golden.csv");
  const auto est = parse_fit_csv(text, "estimate");
  const auto se = parse_fit_csv(text, "se");
  const std::map<std::string, std::array<double, 3>> reference = {
      {"(intercept)", {-0.06940481, 0.12524438, 0.12529752}},
      {"x1", {0.56992698, 0.21111859, 0.21156887}},
      {"x2", {-0.45292862, 0.23382500, 0.23447624}},
      {"x3", {-0.51151246, 0.16714778, 0.16706526}},
  };
  for (const auto& [term, ref] : reference) {
    CHECK(std::abs(est.at(term + "/model") - ref[0]) < 1e-7);
    CHECK(std::abs(se.at(term + "/model") - ref[1]) < 1e-7);
    CHECK(std::abs(se.at(term + "/robust") - ref[2]) < 1e-7);
  }
  CHECK(text.find(",304,400,66\n") != std::string::npos);
}

TEST_CASE("fit without an id column when only naive/robust are requested") {
  const auto r = run_cli({"fit", "--data", (kData / "two_by_two.csv").string(), "--boot", "naive", "--b", "50"});
  REQUIRE(r.code == cli::kSuccess);
  CHECK(r.out.find("duplicated m = 0") != std::string::npos);
  CHECK(r.out.find("0.980829") != std::string::npos);

  const auto proposed = run_cli({"fit", "--data", (kData / "two_by_two.csv").string(), "--boot", "proposed"});
  CHECK(proposed.code == cli::kInputError);
  CHECK(proposed.err.find("id column") != std::string::npos);
}

TEST_CASE("fit input errors name the offending line") {
  struct Bad {
    std::string name;
    std::string content;
    std::string expect;
  };
  const std::vector<Bad> cases = {
      {"fields.csv", "id,d,x\na,1,0.5\nb,0\n", "line 3"},
      {"outcome.csv", "id,d,x\na,2,0.5\n", "line 2: outcome must be 0 or 1"},
      {"number.csv", "id,d,x\na,1,abc\n", "line 2: column 'x' is not a number"},
      {"thrice.csv", "id,d,x\na,1,0.5\na,0,0.5\na,0,0.5\n", "line 4: participant 'a'"},
      {"samed.csv", "id,d,x\na,0,0.5\na,0,0.5\n", "line 3: participant 'a'"},
      {"covariates.csv", "id,d,x\na,1,0.5\na,0,0.7\n", "differing from line 2"},
      {"empty.csv", "", "empty"},
  };
  for (const auto& c : cases) {
    const auto path = write_temp(c.name, c.content);
    const auto r = run_cli({"fit", "--data", path.string(), "--boot", "none"});
    CHECK_MESSAGE(r.code == cli::kInputError, c.name);
    CHECK_MESSAGE(r.err.find(c.expect) != std::string::npos, (c.name + ": " + r.err));
  }
  const auto unknown = run_cli({"fit", "--data", (kData / "two_by_two.csv").string(), "--covariates", "nope"});
  CHECK(unknown.code == cli::kInputError);
  CHECK(unknown.err.find("unknown covariate column 'nope'") != std::string::npos);
  const auto missing = run_cli({"fit", "--data", "/nonexistent/file.csv"});
  CHECK(missing.code == cli::kInputError);
}

TEST_CASE("separated data is a computation failure") {
  const auto path = write_temp("separated.csv", "d,x\n1,1\n1,2\n1,3\n0,-1\n0,-2\n0,-3\n");
  const auto r = run_cli({"fit", "--data", path.string(), "--boot", "none"});
  CHECK(r.code == cli::kComputationError);
  CHECK(r.err.find("separation") != std::string::npos);
}

TEST_CASE("simulate smoke config and determinism across threads") {
  const fs::path out1 = fs::temp_directory_path() / "ccboot_sim_t1.csv";
  const fs::path out3 = fs::temp_directory_path() / "ccboot_sim_t3.csv";
  const auto start = std::chrono::steady_clock::now();
  const auto r1 = run_cli({"simulate", "--config", (kData / "smoke.cfg").string(), "--out", out1.string(),
                           "--threads", "1"});
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  REQUIRE(r1.code == cli::kSuccess);
  CHECK(seconds < 30.0);
  CHECK(r1.out.find("N                     500") != std::string::npos);
  CHECK(r1.out.find("CP boot,proposed") != std::string::npos);
  const auto r3 = run_cli({"simulate", "--config", (kData / "smoke.cfg").string(), "--out", out3.string(),
                           "--threads", "3"});
  REQUIRE(r3.code == cli::kSuccess);
  CHECK(slurp(out1) == slurp(out3));

  std::ifstream in(out1);
  const auto report = read_report_csv(in);
  CHECK(report.n_sims == 50);
  CHECK(report.b == 50);
  for (const auto& c : report.coefficients) {
    for (std::size_t m = 0; m < kMetricCount; ++m) CHECK(std::isfinite(c.get(static_cast<Metric>(m))));
  }
}

TEST_CASE("simulate rejects invalid configs listing every violation") {
  const auto path = write_temp("bad.cfg", "n = 0\nfraction = 2\nwhatever = 1\n");
  const auto r = run_cli({"simulate", "--config", path.string(), "--out", "/dev/null"});
  CHECK(r.code == cli::kInputError);
  CHECK(r.err.find("unknown key 'whatever'") != std::string::npos);
  CHECK(r.err.find("n must be at least 2") != std::string::npos);
  CHECK(r.err.find("fraction must lie in (0, 1]") != std::string::npos);
}

TEST_CASE("calibrate") {
  const auto null = run_cli({"calibrate", "--config", (kData / "null_params.cfg").string(), "--target", "0.1535"});
  REQUIRE(null.code == cli::kSuccess);
  CHECK(null.out.find("beta0 -1.87405") != std::string::npos);

  const auto defaults = run_cli({"calibrate"});
  REQUIRE(defaults.code == cli::kSuccess);
  CHECK(defaults.out.find("expected_duplicates 61.4000") != std::string::npos);

  CHECK(run_cli({"calibrate", "--target", "1.5"}).code == cli::kInputError);
  CHECK(run_cli({"calibrate", "--target", "0.9"}).code == cli::kComputationError);
}

TEST_CASE("usage errors and help") {
  CHECK(run_cli({}).code == cli::kInputError);
  CHECK(run_cli({"frobnicate"}).code == cli::kInputError);
  CHECK(run_cli({"fit"}).code == cli::kInputError);
  CHECK(run_cli({"fit", "--data", "x.csv", "--boot", "sometimes"}).code == cli::kInputError);
  const auto help = run_cli({"--help"});
  CHECK(help.code == cli::kSuccess);
  CHECK(help.out.find("simulate") != std::string::npos);
}

TEST_CASE("CCBOOT_THREADS sets the default worker count") {
  ::setenv("CCBOOT_THREADS", "3", 1);
  CHECK(default_thread_count() == 3);
  ::setenv("CCBOOT_THREADS", "zero", 1);
  CHECK(default_thread_count() >= 1);
  ::unsetenv("CCBOOT_THREADS");
}
