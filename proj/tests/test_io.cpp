#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "tgmrf/errors.hpp"
#include "tgmrf/io.hpp"

using namespace tgmrf;

TEST_CASE("key=value records") {
  std::istringstream in("# comment\n\nalpha = 1\nbeta=two words\nempty=\n");
  const auto kv = read_key_values(in);
  REQUIRE(kv.size() == 3);
  CHECK(lookup(kv, "alpha") == "1");
  CHECK(lookup(kv, "beta") == "two words");
  CHECK(lookup(kv, "empty") == "");
  CHECK(!lookup(kv, "gamma"));
  std::ostringstream out;
  write_key_values(out, kv);
  CHECK(out.str() == "alpha=1\nbeta=two words\nempty=\n");

  std::istringstream dup("a=1\na=2\n");
  CHECK_THROWS_AS(read_key_values(dup), IngestionError);
  std::istringstream bare("a=1\nnovalue\n");
  try {
    read_key_values(bare);
    FAIL("expected an ingestion error");
  } catch (const IngestionError& e) {
    CHECK(e.line() == 2);
  }
}

TEST_CASE("shortest round-trip number text") {
  for (double v : {0.1, -0.09, 1.0 / 3.0, 2.25, 1e-300, -7.5e12, 0.0}) CHECK(std::stod(format_double(v)) == v);
  CHECK(format_double(2.25) == "2.25");
  CHECK(format_double(4.0) == "4");
}

TEST_CASE("FNV-1a digests") {
  // Published 64-bit FNV-1a test vectors.
  CHECK(digest_bytes("") == "fnv1a64:cbf29ce484222325");
  CHECK(digest_bytes("a") == "fnv1a64:af63dc4c8601ec8c");
  CHECK(digest_bytes("foobar") == "fnv1a64:85944171f73967e8");
}

TEST_CASE("numeric csv round trip") {
  const auto path = (std::filesystem::temp_directory_path() / "tgmrf-io-test.csv").string();
  Eigen::MatrixXd m(2, 3);
  m << 0.1, -2.0, 1e-17, 3.0 / 7.0, 5.0, -0.0;
  write_numeric_csv_file(path, {"a", "b", "c"}, m);
  const auto t = read_numeric_csv_file(path);
  CHECK(t.header == std::vector<std::string>{"a", "b", "c"});
  CHECK(t.values == m);
  CHECK_THROWS_AS(write_numeric_csv_file(path, {"a"}, m), InvalidArgument);
  std::ofstream(path) << "a,b\n1,x\n";
  CHECK_THROWS_AS(read_numeric_csv_file(path), IngestionError);
  std::ofstream(path) << "a,b\n1\n";
  CHECK_THROWS_AS(read_numeric_csv_file(path), IngestionError);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(read_numeric_csv_file(path), IngestionError);
}
