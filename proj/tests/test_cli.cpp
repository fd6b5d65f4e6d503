#include <doctest.h>

#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "postsel/commands.hpp"
#include "postsel/config.hpp"
#include "postsel/csv.hpp"
#include "postsel/rng.hpp"

using namespace postsel;
namespace fs = std::filesystem;

namespace {

struct Workspace {
  fs::path root;
  Workspace() {
    root = fs::temp_directory_path() /
           ("postsel_cli_" + std::to_string(Rng(::time(nullptr)).next_u64()));
    fs::create_directories(root);
  }
  ~Workspace() { fs::remove_all(root); }
  std::string file(const std::string& name, const std::string& content) const {
    const fs::path p = root / name;
    std::ofstream out(p);
    out << content;
    return p.string();
  }
  std::string path(const std::string& name) const {
    return (root / name).string();
  }
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("select then infer produces deterministic artifacts") {
  Workspace ws;
  // simple deterministic dataset written by hand
  Rng r(77);
  std::ostringstream g, y;
  const int n = 70, p = 6;
  g << "g0,g1,g2,g3,g4,g5\n";
  y << "y\n";
  for (int i = 0; i < n; ++i) {
    double vals[p];
    for (int j = 0; j < p; ++j) vals[j] = r.normal();
    const double resp = 3.2 * vals[0] - 2.6 * vals[3] + r.normal();
    for (int j = 0; j < p; ++j) g << (j ? "," : "") << format_double(vals[j]);
    g << "\n";
    y << format_double(resp) << "\n";
  }
  const std::string g_csv = ws.file("g.csv", g.str());
  const std::string y_csv = ws.file("y.csv", y.str());

  // identical config rerun into the same out_dir must reproduce every byte,
  // so snapshot the first run before repeating it
  auto run_select = [&] {
    ConfigMap cfg;
    cfg.set("y_csv", y_csv);
    cfg.set("g_csv", g_csv);
    cfg.set("seed", "42");
    cfg.set("out_dir", ws.path("a"));
    return run_command("select", cfg);
  };
  REQUIRE(run_select() == 0);
  const std::string sel1 = slurp(ws.path("a/selection.json"));
  const std::string rep1 = slurp(ws.path("a/report.json"));
  REQUIRE(run_select() == 0);
  CHECK(slurp(ws.path("a/selection.json")) == sel1);
  CHECK(slurp(ws.path("a/report.json")) == rep1);

  auto run_infer = [&](const std::string& out, const std::string& seed) {
    ConfigMap cfg;
    cfg.set("selection_json", ws.path("a/selection.json"));
    cfg.set("seed", seed);
    cfg.set("n_samples", "1500");
    cfg.set("burn_in", "400");
    cfg.set("naive", "true");
    cfg.set("out_dir", ws.path(out));
    return run_command("infer", cfg);
  };
  REQUIRE(run_infer("ia", "9") == 0);
  const std::string int1 = slurp(ws.path("ia/intervals.csv"));
  const std::string diag1 = slurp(ws.path("ia/diagnostics.json"));
  REQUIRE(run_infer("ia", "9") == 0);
  CHECK(slurp(ws.path("ia/intervals.csv")) == int1);
  CHECK(slurp(ws.path("ia/diagnostics.json")) == diag1);
  REQUIRE(run_infer("ic", "10") == 0);
  CHECK(slurp(ws.path("ic/intervals.csv")) != int1);
}

TEST_CASE("unknown config keys and missing files exit with code 2") {
  Workspace ws;
  ConfigMap cfg;
  cfg.set("y_csv", ws.path("missing.csv"));
  cfg.set("g_csv", ws.path("missing2.csv"));
  cfg.set("out_dir", ws.path("out"));
  CHECK(run_command("select", cfg) == 2);

  ConfigMap cfg2;
  cfg2.set("selection_json", ws.path("nope.json"));
  CHECK(run_command("infer", cfg2) == 2);

  ConfigMap cfg3;
  cfg3.set("mode", "gsva");
  cfg3.set("expression_csv", ws.path("e.csv"));
  cfg3.set("genesets_csv", ws.path("s.csv"));
  cfg3.set("not_a_real_key", "1");
  CHECK(run_command("features", cfg3) == 2);

  ConfigMap cfg4;
  CHECK(run_command("mystery", cfg4) == 2);
}

TEST_CASE("features gsva command reproduces the committed golden csv") {
  Workspace ws;
  const std::string fixtures = POSTSEL_FIXTURE_DIR;
  ConfigMap cfg;
  cfg.set("mode", "gsva");
  cfg.set("expression_csv", fixtures + "/gsva_expression.csv");
  cfg.set("genesets_csv", fixtures + "/gsva_sets.csv");
  cfg.set("out_dir", ws.path("out"));
  REQUIRE(run_command("features", cfg) == 0);
  CHECK(slurp(ws.path("out/scores.csv")) ==
        slurp(fixtures + "/gsva_golden.csv"));
}

TEST_CASE("simulate smoke run writes aligned summary and replication files") {
  Workspace ws;
  ConfigMap cfg;
  cfg.set("n", "40");
  cfg.set("r", "8");
  cfg.set("pi", "0.7");
  cfg.set("s_list", "2.0");
  cfg.set("n_reps", "2");
  cfg.set("n_samples", "300");
  cfg.set("burn_in", "100");
  cfg.set("split_fractions", "0.5");
  cfg.set("seed", "3");
  cfg.set("out_dir", ws.path("sim"));
  REQUIRE(run_command("simulate", cfg) == 0);
  const std::string summary = slurp(ws.path("sim/summary.csv"));
  CHECK(summary.find("proposed") != std::string::npos);
  CHECK(summary.find("naive") != std::string::npos);
  CHECK(summary.find("split_0.5") != std::string::npos);
  CHECK(summary.find("coverage") != std::string::npos);
  const std::string reps = slurp(ws.path("sim/replications.csv"));
  CHECK(reps.find("proposed") != std::string::npos);

  // rerun into a second directory: byte identical
  ConfigMap cfg2;
  cfg2.set("n", "40");
  cfg2.set("r", "8");
  cfg2.set("pi", "0.7");
  cfg2.set("s_list", "2.0");
  cfg2.set("n_reps", "2");
  cfg2.set("n_samples", "300");
  cfg2.set("burn_in", "100");
  cfg2.set("split_fractions", "0.5");
  cfg2.set("seed", "3");
  cfg2.set("out_dir", ws.path("sim2"));
  REQUIRE(run_command("simulate", cfg2) == 0);
  CHECK(slurp(ws.path("sim2/summary.csv")) == summary);
}
