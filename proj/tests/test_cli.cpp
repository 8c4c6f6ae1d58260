#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <regex>
#include <set>
#include <sstream>

#include "reluforge/cli.hpp"
#include "reluforge/io.hpp"

using namespace reluforge;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result call(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string value_of(const std::string& text, const std::string& key) {
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);)
    if (line.rfind(key + "=", 0) == 0) return line.substr(key.size() + 1);
  return {};
}

std::string read(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct TempDir {
  fs::path path;
  TempDir() : path(fs::temp_directory_path() / ("reluforge_cli_" + std::to_string(std::rand()))) {
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& name) const { return (path / name).string(); }
};

std::string shell(const std::string& command, int& status) {
  std::string output;
  FILE* pipe = popen(command.c_str(), "r");
  REQUIRE(pipe != nullptr);
  char buf[4096];
  while (std::fgets(buf, sizeof buf, pipe)) output += buf;
  status = pclose(pipe);
  return output;
}

}  // namespace

TEST_CASE("eval of phi at 1/2 prints 1") {
  TempDir dir;
  REQUIRE(call({"build", "triangle", "--i", "1", "--out", dir / "phi.relunet"}).code == 0);
  const auto r = call({"eval", "--net", dir / "phi.relunet", "--x", "0.5"});
  CHECK(r.code == 0);
  CHECK(r.out == "1\n");
}

TEST_CASE("missing required flag names the flag and exits 1") {
  const auto r = call({"build", "multiplier", "--M", "1"});
  CHECK(r.code == 1);
  CHECK(r.err.rfind("error:", 0) == 0);
  CHECK(r.err.find("--out") != std::string::npos);
  CHECK(call({"build", "multiplier", "--M", "1", "--eps", "0.1", "--out", "x", "--bogus", "2"}).code == 1);
  CHECK(call({}).code == 1);
}

TEST_CASE("invalid values exit 1, runtime failures exit 2") {
  TempDir dir;
  CHECK(call({"build", "multiplier", "--M", "1", "--eps", "3", "--out", dir / "m"}).code == 1);
  CHECK(call({"eval", "--net", dir / "missing.relunet", "--x", "1"}).code == 1);
  std::ofstream(dir / "bad.relunet") << "relunet v1 input=1 layers=1\nlayer 1 out=1 act=id\n";
  const auto bad = call({"eval", "--net", dir / "bad.relunet", "--x", "1"});
  CHECK(bad.code == 1);
  CHECK(bad.err.find("line 3") != std::string::npos);
  std::ofstream(dir / "deep.circ") << "bound M=100\nn0 = input 0\nn1 = mul n0 n0\nn2 = mul n1 n1\nn3 = mul n2 n2\n"
                                      "n4 = mul n3 n3\nn5 = mul n4 n4\nn6 = mul n5 n5\nn7 = mul n6 n6\noutput n7\n";
  CHECK(call({"build", "circuit", "--spec", dir / "deep.circ", "--eps", "1e-3", "--out", dir / "c"}).code == 1);
}

TEST_CASE("multiplier build and inspect report the width formula") {
  TempDir dir;
  const auto b = call({"build", "multiplier", "--M", "1", "--eps", "0.015625", "--out", dir / "m.relunet"});
  REQUIRE(b.code == 0);
  const auto r = call({"inspect", dir / "m.relunet", "--base", "0,0.5", "--direction", "1,0", "--lo", "-1", "--hi", "1"});
  REQUIRE(r.code == 0);
  CHECK(std::stoi(value_of(r.out, "width")) <= 37);
  CHECK(std::stoi(value_of(r.out, "depth")) <= 21);
  CHECK(std::stoi(value_of(r.out, "segments")) > 1);
  CHECK(r.out.find("t_break,slope_left,slope_right\n") != std::string::npos);
}

TEST_CASE("inspect of phi^3 lists seven breakpoints") {
  TempDir dir;
  REQUIRE(call({"build", "triangle", "--i", "3", "--out", dir / "t.relunet"}).code == 0);
  const auto r = call({"inspect", dir / "t.relunet", "--out", dir / "t.csv"});
  REQUIRE(r.code == 0);
  CHECK(value_of(r.out, "segments") == "8");
  // (2 m)^l with m = 2 and l = 4 layers, the linear output layer included.
  CHECK(value_of(r.out, "region_bound") == "256");
  const std::string csv = read(dir / "t.csv");
  CHECK(csv.rfind("t_break,slope_left,slope_right\n0.125,8,-8\n", 0) == 0);
}

TEST_CASE("other builders") {
  TempDir dir;
  const auto sq = call({"build", "square", "--M", "1", "--bits", "5", "--out", dir / "s.relunet"});
  REQUIRE(sq.code == 0);
  CHECK(value_of(sq.out, "bits") == "5");
  const auto ins = call({"inspect", dir / "s.relunet"});
  CHECK(std::stoi(value_of(ins.out, "segments")) >= 32);

  REQUIRE(call({"build", "ball", "--d", "2", "--delta", "0.05", "--shell", "0.2", "--out", dir / "b.relunet"}).code == 0);
  const auto ball = call({"eval", "--net", dir / "b.relunet", "--x", "2,2", "--x", "0.1,0.1"});
  REQUIRE(ball.code == 0);
  std::istringstream lines(ball.out);
  double outside = 0.0, inside = 0.0;
  lines >> outside >> inside;
  CHECK(std::abs(outside - 1.0) < std::sqrt(0.025));
  CHECK(std::abs(inside) < std::sqrt(0.025));

  REQUIRE(call({"build", "l1radial", "--d", "3", "--knots", "1", "--jumps", "1", "--out", dir / "r.relunet"}).code == 0);
  CHECK(call({"eval", "--net", dir / "r.relunet", "--x", "0.5,-0.25,0.75"}).out == "0.5\n");

  std::ofstream(dir / "cube.circ") << "bound M=1\nn0 = input 0\nn1 = mul n0 n0\nn2 = mul n1 n0\noutput n2\n";
  const auto circ = call({"build", "circuit", "--spec", dir / "cube.circ", "--eps", "0.01", "--out", dir / "c.relunet"});
  REQUIRE(circ.code == 0);
  CHECK(value_of(circ.out, "ops") == "2");
  const auto cube = call({"eval", "--net", dir / "c.relunet", "--x", "0.3"});
  CHECK(std::abs(std::stod(cube.out) - 0.027) <= 0.01);
}

TEST_CASE("bounds for x^2 on [0,1] has a~_2 = 1/6") {
  const auto r = call({"bounds", "--f", "x2", "--K", "4"});
  REQUIRE(r.code == 0);
  CHECK(r.out.rfind("i,a_i\n", 0) == 0);
  CHECK(r.out.find("\n2,0.166667\n") != std::string::npos);
  CHECK(r.out.find("linear_fit_error,0.00555556") != std::string::npos);
  CHECK(call({"bounds", "--f", "nope"}).code == 1);
}

TEST_CASE("oracle reports the two-piece error of x^2") {
  const auto r = call({"oracle", "--f", "x2", "--n", "2"});
  REQUIRE(r.code == 0);
  CHECK(std::stod(value_of(r.out, "error")) == doctest::Approx(1.0 / 2880.0).epsilon(0.02));
  CHECK(r.out.find("piece,start,end,slope,intercept") != std::string::npos);
}

TEST_CASE("slab prints estimate, interval and ratio") {
  const auto r = call({"slab", "--d", "50", "--eps", "0.02", "--samples", "20000", "--seed", "3"});
  REQUIRE(r.code == 0);
  CHECK(std::stod(value_of(r.out, "estimate")) > 0.0);
  CHECK(std::stod(value_of(r.out, "ci_half_width")) > 0.0);
  CHECK(std::stod(value_of(r.out, "ratio")) > 1.0);
  CHECK(r.out == call({"slab", "--d", "50", "--eps", "0.02", "--samples", "20000", "--seed", "3"}).out);
}

TEST_CASE("experiment writes per-run curves and a summary") {
  TempDir dir;
  const std::vector<std::string> args{"experiment", "--d", "3", "--scale", "0.01", "--seeds", "2",
                                      "--max-batches", "400", "--three-layer", "400,200", "--two-layer", "400,800",
                                      "--out-dir", dir / "exp"};
  const auto r = call(args);
  REQUIRE(r.code == 0);
  CHECK(value_of(r.out, "runs") == "6");
  const std::string summary = read(dir / "exp/summary.csv");
  CHECK(summary.rfind("arch,seed,final_valid_rmse,params\n", 0) == 0);
  CHECK(summary.find("3L-4-2,1,") != std::string::npos);
  const std::string curve = read(dir / "exp/2L-8_seed2.csv");
  CHECK(curve.rfind("batch,train_rmse,valid_rmse\n200,", 0) == 0);
  REQUIRE(call(args).code == 0);
  CHECK(read(dir / "exp/summary.csv") == summary);

  const auto empty = call({"experiment", "--seeds", "0", "--out-dir", dir / "empty"});
  REQUIRE(empty.code == 0);
  CHECK(read(dir / "empty/summary.csv") == "arch,seed,final_valid_rmse,params\n");
}

TEST_CASE("installed binary: exit codes and error prefix") {
  int status = 0;
  const std::string out = shell(std::string(RELUFORGE_CLI_PATH) + " bounds --K 2 2>&1", status);
  CHECK(status == 0);
  CHECK(out.find("2,0.166667") != std::string::npos);
  const std::string err = shell(std::string(RELUFORGE_CLI_PATH) + " eval 2>&1", status);
  CHECK(WEXITSTATUS(status) == 1);
  CHECK(err.rfind("error: ", 0) == 0);
}

TEST_CASE("help text and the README flag table agree") {
  const std::vector<std::string> commands{
      "build multiplier", "build square", "build ball", "build circuit", "build l1radial", "build triangle",
      "eval",             "inspect",      "bounds",     "oracle",        "slab",           "experiment"};
  const std::regex flag(R"(--[A-Za-z][A-Za-z0-9-]*)");

  std::map<std::string, std::set<std::string>> documented;
  std::ifstream readme(RELUFORGE_README_PATH);
  REQUIRE(readme.good());
  const std::regex row(R"(^\| `([a-z0-9 ]+)` \| `(--[A-Za-z0-9-]+)` \|)");
  for (std::string line; std::getline(readme, line);) {
    std::smatch m;
    if (std::regex_search(line, m, row)) documented[m[1]].insert(m[2]);
  }

  for (const auto& command : commands) {
    int status = 0;
    const std::string help = shell(std::string(RELUFORGE_CLI_PATH) + " " + command + " --help", status);
    CHECK(status == 0);
    std::set<std::string> listed;
    for (std::sregex_iterator it(help.begin(), help.end(), flag), end; it != end; ++it)
      if (it->str() != "--help") listed.insert(it->str());
    CAPTURE(command);
    CHECK(listed == documented[command]);
  }
}
