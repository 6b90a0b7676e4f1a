#include "robin/cli.hpp"

#include "robin/io.hpp"

#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

using namespace robin;

namespace {

struct CliResult {
  int code = 0;
  std::string out;
  std::string err;
};

CliResult run(std::vector<std::string> args) {
  std::vector<const char*> argv;
  argv.push_back("robin");
  for (const std::string& arg : args) argv.push_back(arg.c_str());
  std::ostringstream out;
  std::ostringstream err;
  CliResult result;
  result.code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  result.out = out.str();
  result.err = err.str();
  return result;
}

std::string data_path(const std::string& name) {
  return std::string(ROBIN_DATA_DIR) + "/" + name;
}

std::string temp_file(const std::string& name, const std::string& contents) {
  std::string path = "cli_test_" + name;
  write_file(path, contents);
  return path;
}

}  // namespace

TEST_CASE("solve emits the two-agent report") {
  CliResult result = run({"solve", "--input", data_path("two_agent.json")});
  CHECK(result.code == kExitOk);
  CHECK(result.out.find("0.368421052631578") != std::string::npos);
  CHECK(result.out.find("0.026315789473684") != std::string::npos);
  CHECK(result.out.find("\"property_b\": true") != std::string::npos);
}

TEST_CASE("identical invocations produce byte-identical output") {
  for (std::vector<std::string> args :
       {std::vector<std::string>{"solve", "--input", data_path("two_agent.json")},
        std::vector<std::string>{"diagnose", "--input", data_path("two_agent.json")},
        std::vector<std::string>{"worst-case", "--input", data_path("two_agent.json"),
                                 "--signs", "+-"},
        std::vector<std::string>{"sweep", "--input", data_path("two_agent.json"), "--param",
                                 "v", "--from", "0", "--to", "3", "--steps", "30",
                                 "--format", "csv"},
        std::vector<std::string>{"higher-order", "--input", data_path("higher_order.json")},
        std::vector<std::string>{"expand", "--input", data_path("expansion_basic.json")},
        std::vector<std::string>{"oracle-check", "--input", data_path("two_agent.json"),
                                 "--grid", "41"}}) {
    CliResult first = run(args);
    CliResult second = run(args);
    CHECK(first.code == kExitOk);
    CHECK(first.out == second.out);
    CHECK(first.err == second.err);
  }
}

TEST_CASE("validate reports violations with exit code 2") {
  std::string bad = R"({
    "n": 2,
    "mean": [[1.0, 0.0], [0.0, 1.0]],
    "std": [[1.0, 0.0], [1.0, 1.0]],
    "cost": {"type": "scaled_identity", "c": 1.0},
    "target": [1.0, 1.0],
    "reference": [0.0, 0.0]
  })";
  std::string path = temp_file("zero_std.json", bad);
  CliResult result = run({"validate", "--input", path});
  CHECK(result.code == kExitValidation);
  CHECK(result.out.find("\"ok\": false") != std::string::npos);
  std::remove(path.c_str());

  CliResult good = run({"validate", "--input", data_path("two_agent.json")});
  CHECK(good.code == kExitOk);
  CHECK(good.out.find("\"full_rank\": false") != std::string::npos);
}

TEST_CASE("solver errors exit with code 3") {
  // v = 1 makes the second component vanish: a non-negligence failure.
  std::string degenerate = R"({
    "n": 2,
    "mean": [[2.0, 1.0], [2.0, 1.0]],
    "std": [[1.0, 1.0], [1.0, 1.0]],
    "cost": {"type": "scaled_identity", "c": 2.0},
    "target": [1.0, 1.0],
    "reference": [0.0, 0.0]
  })";
  std::string path = temp_file("degenerate.json", degenerate);
  CliResult result = run({"solve", "--input", path});
  CHECK(result.code == kExitSolver);
  CHECK(result.err.find("property_b_violation") != std::string::npos);
  std::remove(path.c_str());
}

TEST_CASE("missing input exits with code 4") {
  CliResult result = run({"solve", "--input", "does_not_exist.json"});
  CHECK(result.code == kExitIo);
  CHECK(result.err.find("io_error") != std::string::npos);
}

TEST_CASE("malformed JSON exits with code 4") {
  std::string path = temp_file("broken.json", "{ not json");
  CliResult result = run({"solve", "--input", path});
  CHECK(result.code == kExitIo);
  CHECK(result.err.find("parse_error") != std::string::npos);
  std::remove(path.c_str());
}

TEST_CASE("schema violations exit with code 2") {
  std::string path = temp_file("extra_key.json", R"({
    "n": 1, "mean": [[1.0]], "std": [[1.0]],
    "cost": {"type": "scaled_identity", "c": 1.0},
    "target": [1.0], "reference": [0.0], "bogus": true
  })");
  CliResult result = run({"solve", "--input", path});
  CHECK(result.code == kExitValidation);
  CHECK(result.err.find("schema_violation") != std::string::npos);

  CliResult lenient = run({"solve", "--input", path, "--lenient"});
  CHECK(lenient.code == kExitOk);
  CHECK(lenient.out.find("bogus") != std::string::npos);
  std::remove(path.c_str());
}

TEST_CASE("unknown flags are rejected") {
  CliResult result = run({"solve", "--input", data_path("two_agent.json"), "--frobnicate"});
  CHECK(result.code == kExitValidation);
  CHECK(result.err.find("usage") != std::string::npos);
}

TEST_CASE("oracle too-large instances exit with code 3") {
  std::string path = temp_file("four_agents.json", R"({
    "n": 4,
    "mean": [[1.0,0.0,0.0,0.0],[0.0,1.0,0.0,0.0],[0.0,0.0,1.0,0.0],[0.0,0.0,0.0,1.0]],
    "std": [[1.0,1.0,1.0,1.0],[1.0,1.0,1.0,1.0],[1.0,1.0,1.0,1.0],[1.0,1.0,1.0,1.0]],
    "cost": {"type": "scaled_identity", "c": 2.0},
    "target": [1.0,1.0,1.0,1.0],
    "reference": [0.0,0.0,0.0,0.0]
  })");
  CliResult result = run({"oracle-check", "--input", path, "--grid", "5"});
  CHECK(result.code == kExitSolver);
  CHECK(result.err.find("too_large") != std::string::npos);
  std::remove(path.c_str());
}

TEST_CASE("sweep brackets the threshold flip") {
  CliResult result = run({"sweep", "--input", data_path("two_agent.json"), "--param", "v",
                          "--from", "0", "--to", "3", "--steps", "300", "--format", "csv"});
  REQUIRE(result.code == kExitOk);

  std::istringstream lines(result.out);
  std::string header;
  std::getline(lines, header);
  CHECK(header == "parameter,x1,x2,objective,property_b");

  int rows = 0;
  int flips = 0;
  double flip_at = 0.0;
  double previous = 0.0;
  bool first = true;
  std::string line;
  while (std::getline(lines, line)) {
    ++rows;
    double v, x1, x2;
    std::sscanf(line.c_str(), "%lf,%lf,%lf", &v, &x1, &x2);
    double sign = x1 - x2 >= 0.0 ? 1.0 : -1.0;
    if (!first && sign != previous) {
      ++flips;
      flip_at = v;
    }
    previous = sign;
    first = false;
  }
  CHECK(rows == 301);
  CHECK(flips == 1);
  CHECK(std::abs(flip_at - 2.302776) <= 0.01 + 1e-9);
}

TEST_CASE("worst-case subcommand accepts a sign pattern") {
  CliResult result = run({"worst-case", "--input", data_path("two_agent.json"),
                          "--signs", "++"});
  CHECK(result.code == kExitOk);
  CHECK(result.out.find("\"sign_pattern\": \"++\"") != std::string::npos);
}

TEST_CASE("expand requires an expansion object") {
  CliResult result = run({"expand", "--input", data_path("two_agent.json")});
  CHECK(result.code == kExitValidation);
  CHECK(result.err.find("expansion") != std::string::npos);
}

TEST_CASE("higher-order requires a delta field") {
  CliResult result = run({"higher-order", "--input", data_path("two_agent.json")});
  CHECK(result.code == kExitValidation);
  CHECK(result.err.find("delta") != std::string::npos);
}

TEST_CASE("worst-case rejects malformed sign patterns") {
  CliResult wrong_len = run({"worst-case", "--input", data_path("two_agent.json"),
                             "--signs", "+-+"});
  CHECK(wrong_len.code == kExitValidation);
  CliResult wrong_char = run({"worst-case", "--input", data_path("two_agent.json"),
                              "--signs", "+x"});
  CHECK(wrong_char.code == kExitValidation);
}

TEST_CASE("sweep rejects unknown parameters and bad step counts") {
  CliResult bad_param = run({"sweep", "--input", data_path("two_agent.json"), "--param",
                             "w", "--from", "0", "--to", "1", "--steps", "10"});
  CHECK(bad_param.code == kExitValidation);
  CliResult bad_steps = run({"sweep", "--input", data_path("two_agent.json"), "--param",
                             "v", "--from", "0", "--to", "1", "--steps", "0"});
  CHECK(bad_steps.code == kExitValidation);
}

TEST_CASE("output lands in --out when given") {
  std::string path = "cli_test_report.json";
  CliResult result =
      run({"solve", "--input", data_path("two_agent.json"), "--out", path});
  CHECK(result.code == kExitOk);
  CHECK(result.out.empty());
  std::string contents = read_file(path);
  CHECK(contents.find("x_star") != std::string::npos);
  std::remove(path.c_str());
}
