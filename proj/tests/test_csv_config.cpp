#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "postsel/config.hpp"
#include "postsel/csv.hpp"
#include "postsel/errors.hpp"
#include "postsel/rng.hpp"

using namespace postsel;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const std::string& name, const std::string& content) {
  const fs::path p = fs::temp_directory_path() / name;
  std::ofstream out(p);
  out << content;
  return p;
}

}  // namespace

TEST_CASE("format_double round-trips exactly through parse_double") {
  const double cases[] = {0.1,   1.0 / 3.0, -0.0,    12345.6789, 1e-300,
                          1e300, 2.5e-17,   -7.25e9, 0.574};
  for (const double v : cases) {
    CHECK(parse_double(format_double(v)) == v);
  }
  Rng r(404);
  for (int i = 0; i < 2000; ++i) {
    const double v = (r.uniform() - 0.5) * std::pow(10.0, 40.0 * (r.uniform() - 0.5));
    CHECK(parse_double(format_double(v)) == v);
  }
}

TEST_CASE("format_double renders integers without a trailing fraction") {
  CHECK(format_double(1.0) == "1");
  CHECK(format_double(0.75) == "0.75");
  CHECK(format_double(-3.0) == "-3");
}

TEST_CASE("parse_double rejects garbage") {
  CHECK_THROWS_AS(parse_double("12abc"), ValidationError);
  CHECK_THROWS_AS(parse_double(""), ValidationError);
  CHECK_THROWS_AS(parse_double("--5"), ValidationError);
}

TEST_CASE("csv round-trip preserves header, labels and values") {
  CsvTable t;
  t.header = {"alpha", "beta"};
  t.rows = {{"1.5", "x"}, {"-2", "y"}};
  const fs::path p = fs::temp_directory_path() / "postsel_csv_rt.csv";
  write_csv(p.string(), t);
  const CsvTable back = read_csv(p.string());
  CHECK(back.header == t.header);
  CHECK(back.rows == t.rows);
  fs::remove(p);
}

TEST_CASE("csv reader skips comment and blank lines") {
  const fs::path p = temp_file("postsel_csv_comments.csv",
                               "# leading comment\na,b\n\n1,2\n# mid\n3,4\n");
  const CsvTable t = read_csv(p.string());
  CHECK(t.header == std::vector<std::string>{"a", "b"});
  REQUIRE(t.rows.size() == 2);
  CHECK(t.rows[1][1] == "4");
  fs::remove(p);
}

TEST_CASE("matrix csv with a label column separates labels from numbers") {
  const fs::path p =
      temp_file("postsel_csv_mat.csv", "gene,s1,s2\nA,1,2\nB,3,4\n");
  const LabeledMatrix m = read_matrix_csv(p.string());
  CHECK(m.row_labels == std::vector<std::string>{"A", "B"});
  CHECK(m.col_labels == std::vector<std::string>{"s1", "s2"});
  REQUIRE(m.values.rows() == 2);
  CHECK(m.values(1, 0) == 3.0);
  fs::remove(p);
}

TEST_CASE("matrix csv without labels is fully numeric") {
  const fs::path p = temp_file("postsel_csv_mat2.csv", "c0,c1\n1,2\n3,4\n");
  const LabeledMatrix m = read_matrix_csv(p.string());
  CHECK(m.row_labels.empty());
  CHECK(m.values(0, 1) == 2.0);
  fs::remove(p);
}

TEST_CASE("config parses keys with defaults and records what was consumed") {
  const fs::path p = temp_file("postsel_cfg.cfg",
                               "# comment\nseed = 42\nname= run one\n"
                               "levels = 0.5, 0.9\nflag = true\n");
  ConfigMap cfg = ConfigMap::from_file(p.string());
  CHECK(cfg.get_u64("seed", 1) == 42);
  CHECK(cfg.get_string("name", "") == "run one");
  CHECK(cfg.get_bool("flag", false));
  const auto lv = cfg.get_double_list("levels", {});
  REQUIRE(lv.size() == 2);
  CHECK(lv[1] == 0.9);
  CHECK(cfg.get_double("missing", 3.5) == 3.5);
  CHECK(cfg.unknown_keys().empty());
  fs::remove(p);
}

TEST_CASE("unconsumed keys are reported as unknown") {
  ConfigMap cfg;
  cfg.set("real", "1");
  cfg.set("typo_key", "2");
  (void)cfg.get_double("real", 0.0);
  const auto unknown = cfg.unknown_keys();
  REQUIRE(unknown.size() == 1);
  CHECK(unknown[0] == "typo_key");
  CHECK_THROWS_AS(cfg.check_consumed(), ValidationError);
}

TEST_CASE("require_string throws on absent key") {
  ConfigMap cfg;
  CHECK_THROWS_AS(cfg.require_string("y_csv"), ValidationError);
}

TEST_CASE("config hash depends on resolved values, not insertion order") {
  ConfigMap a, b;
  a.set("x", "1");
  a.set("y", "2");
  b.set("y", "2");
  b.set("x", "1");
  (void)a.get_double("x", 0);
  (void)a.get_double("y", 0);
  (void)b.get_double("y", 0);
  (void)b.get_double("x", 0);
  CHECK(config_hash(a.resolved()) == config_hash(b.resolved()));

  ConfigMap c;
  c.set("x", "1");
  c.set("y", "3");
  (void)c.get_double("x", 0);
  (void)c.get_double("y", 0);
  CHECK(config_hash(a.resolved()) != config_hash(c.resolved()));
}
