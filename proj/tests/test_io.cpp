#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "reluforge/constructors.hpp"
#include "reluforge/error.hpp"
#include "reluforge/io.hpp"
#include "reluforge/network.hpp"

using namespace reluforge;

TEST_CASE("double formatting is shortest and locale independent") {
  CHECK(io::format_double(1.0) == "1");
  CHECK(io::format_double(0.1) == "0.1");
  CHECK(io::format_double(1.0 / 6.0, 6) == "0.166667");
  CHECK(io::parse_double(io::format_double(1.0 / 3.0)) == 1.0 / 3.0);
}

TEST_CASE("strict number parsing") {
  CHECK(io::parse_double("2.5") == 2.5);
  CHECK(io::parse_double("-1e-3") == -1e-3);
  CHECK_THROWS_AS(io::parse_double("2.5x"), ValidationError);
  CHECK_THROWS_AS(io::parse_double(""), ValidationError);
  CHECK(io::parse_integer("42") == 42);
  CHECK_THROWS_AS(io::parse_integer("4.2"), ValidationError);
}

TEST_CASE("network text round trip is exact") {
  const Network net = multiplier(1.0, 0.1);
  std::stringstream ss;
  write_network(ss, net);
  CHECK(ss.str().rfind("relunet v1 input=2 layers=" + std::to_string(net.depth()), 0) == 0);
  const Network back = read_network(ss);
  REQUIRE(back.depth() == net.depth());
  for (std::size_t l = 0; l < net.depth(); ++l) {
    CHECK(back.layers()[l].weights == net.layers()[l].weights);
    CHECK(back.layers()[l].bias == net.layers()[l].bias);
    CHECK(back.layers()[l].activation == net.layers()[l].activation);
  }
}

TEST_CASE("parse errors carry line numbers") {
  std::istringstream truncated("relunet v1 input=1 layers=2\nlayer 1 out=2 act=relu\n2 0\n");
  try {
    read_network(truncated);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 4);
  }
  std::istringstream bad_header("relunet v2 input=1 layers=1\n");
  CHECK_THROWS_AS(read_network(bad_header), ParseError);
  std::istringstream bias("relunet v1 input=1 layers=1\nlayer 1 out=1 act=id\n1 0.5\n");
  CHECK_THROWS_AS(read_network(bias), ValidationError);
  std::istringstream junk("relunet v1 input=1 layers=1\nlayer 1 out=1 act=id\n1 zero\n");
  try {
    read_network(junk);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
  }
}

TEST_CASE("atomic writes replace the target and leave no temp file") {
  const auto dir = std::filesystem::temp_directory_path() / "reluforge_io_test";
  std::filesystem::create_directories(dir);
  const auto path = dir / "net.relunet";
  save(triangle_wave(2), path);
  save(triangle_wave(3), path);
  CHECK(load(path).depth() == 4);
  std::size_t files = 0;
  for (const auto& e : std::filesystem::directory_iterator(dir)) files += e.is_regular_file();
  CHECK(files == 1);
  std::filesystem::remove_all(dir);
}

TEST_CASE("csv table keeps header and rows") {
  io::CsvTable t({"a", "b"});
  CHECK(t.str() == "a,b\n");
  t.add_row({"1", "2"});
  CHECK(t.str() == "a,b\n1,2\n");
  CHECK_THROWS_AS(t.add_row({"1"}), ValidationError);
}
