// End-to-end checks of the command-line surface: exit codes, file layout,
// and byte-identical reruns. Each case drives the real binary.

#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <catch2/catch_amalgamated.hpp>
#include <json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const char* kCli = BETABANDIT_CLI_PATH;

fs::path fresh_dir(const std::string& tag) {
  const fs::path dir = fs::temp_directory_path() / ("betabandit_cli_" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write_file(const fs::path& p, const std::string& body) {
  std::ofstream os(p, std::ios::binary);
  os << body;
}

std::string read_file(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(kCli) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

json base_config() {
  return {{"payoffs", {{"bad", 0.0}, {"avoid", 0.5}, {"good", 1.0}}},
          {"discount", 0.5},
          {"prior", {{"n_bad0", 1.0}, {"n_good0", 1.0}}},
          {"true_prob_bad", 0.45},
          {"horizon", 80},
          {"trials", 60},
          {"seed", 7},
          {"depth", 5}};
}

}  // namespace

TEST_CASE("emt subcommand writes the rule table") {
  const fs::path dir = fresh_dir("emt");
  json cfg = base_config();
  cfg["costs"] = {{"avoid", 2.0}, {"encounter", 5.0}, {"no_encounter", 1.0}};
  cfg.erase("payoffs");
  cfg["emt_grid"] = {0.1, 0.25, 0.5, 0.9};
  write_file(dir / "cfg.json", cfg.dump());
  REQUIRE(run_cli("emt --config " + (dir / "cfg.json").string() + " --out " +
                  (dir / "run").string()) == 0);
  const std::string table = read_file(dir / "run" / "emt_table.csv");
  CHECK(table.find("p_bad,p_c,action") == 0);
  // p_c = 0.25 for these costs; ties avoid
  CHECK(table.find("0.25,0.25,avoid") != std::string::npos);
  CHECK(table.find("0.1,0.25,experiment") != std::string::npos);
  const json echoed = json::parse(read_file(dir / "run" / "config.json"));
  CHECK(echoed.at("critical_probability") == 0.25);
}

TEST_CASE("index-table subcommand is deterministic byte for byte") {
  const fs::path dir = fresh_dir("table");
  write_file(dir / "cfg.json", base_config().dump());
  const std::string base = "index-table --config " + (dir / "cfg.json").string();
  REQUIRE(run_cli(base + " --out " + (dir / "a").string()) == 0);
  REQUIRE(run_cli(base + " --out " + (dir / "b").string()) == 0);
  const std::string a = read_file(dir / "a" / "index_table.csv");
  CHECK(a == read_file(dir / "b" / "index_table.csv"));
  // depth 5 triangle plus metadata and header lines
  CHECK(std::count(a.begin(), a.end(), '\n') == 2 + 21);
}

TEST_CASE("simulate subcommand reproduces runs and gates trajectories") {
  const fs::path dir = fresh_dir("simulate");
  json cfg = base_config();
  cfg["trials"] = 5;
  cfg["export_trajectories"] = true;
  cfg["trajectory_limit"] = 10;
  write_file(dir / "cfg.json", cfg.dump());
  const std::string base = "simulate --config " + (dir / "cfg.json").string();
  REQUIRE(run_cli(base + " --out " + (dir / "a").string()) == 0);
  REQUIRE(run_cli(base + " --out " + (dir / "b").string()) == 0);
  CHECK(read_file(dir / "a" / "summary.json") ==
        read_file(dir / "b" / "summary.json"));
  CHECK(read_file(dir / "a" / "trajectories.csv") ==
        read_file(dir / "b" / "trajectories.csv"));
  const json summary = json::parse(read_file(dir / "a" / "summary.json"));
  CHECK(summary.at("trajectories").size() == 5);
  const auto& pat = summary.at("report").at("patterns");
  CHECK(pat.at("no_learning").get<int>() +
            pat.at("finite_learning").get<int>() +
            pat.at("still_experimenting").get<int>() ==
        5);

  // over the gate: no trajectory csv
  cfg["trials"] = 20;
  write_file(dir / "cfg.json", cfg.dump());
  REQUIRE(run_cli(base + " --out " + (dir / "c").string()) == 0);
  CHECK_FALSE(fs::exists(dir / "c" / "trajectories.csv"));

  // a different seed changes the outputs
  REQUIRE(run_cli(base + " --seed 123 --out " + (dir / "d").string()) == 0);
  CHECK(read_file(dir / "c" / "summary.json") !=
        read_file(dir / "d" / "summary.json"));
}

TEST_CASE("biases subcommand emits the full run layout") {
  const fs::path dir = fresh_dir("biases");
  json cfg = base_config();
  cfg["true_prob_bad"] = {0.05, 0.45};
  cfg["trials"] = 100;
  cfg["svg"] = true;
  write_file(dir / "cfg.json", cfg.dump());
  REQUIRE(run_cli("biases --config " + (dir / "cfg.json").string() +
                  " --out " + (dir / "run").string()) == 0);
  for (const char* sub : {"p_0", "p_1"}) {
    const fs::path d = dir / "run" / sub;
    for (const char* f : {"config.json", "summary.json", "tau_hist.csv",
                          "phat_hist.csv", "index_table.csv", "tau_hist.svg"})
      REQUIRE(fs::exists(d / f));
    const json rep = json::parse(read_file(d / "summary.json")).at("report");
    CHECK(rep.at("status_quo_violations") == 0);
    CHECK(rep.at("salience_violations") == 0);
    CHECK(rep.at("fraction_overestimate_pc") == 1.0);
  }
}

TEST_CASE("oracle-check subcommand passes on a sane config") {
  const fs::path dir = fresh_dir("oracle");
  json cfg = base_config();
  cfg["dp_horizon"] = 25;
  cfg["lattice_depth"] = 4;
  cfg["mc_trials"] = 500;
  cfg["mc_horizon"] = 50;
  write_file(dir / "cfg.json", cfg.dump());
  REQUIRE(run_cli("oracle-check --config " + (dir / "cfg.json").string() +
                  " --out " + (dir / "run").string()) == 0);
  const json rep = json::parse(read_file(dir / "run" / "oracle_report.json"));
  CHECK(rep.at("ok") == true);
  CHECK(rep.at("dp_agreement").at("compared").get<int>() > 0);
}

TEST_CASE("invalid configs exit with code 1") {
  const fs::path dir = fresh_dir("invalid");
  json cfg = base_config();
  cfg["payoffs"] = {{"bad", 1.0}, {"avoid", 0.5}, {"good", 0.0}};  // bad order
  write_file(dir / "cfg.json", cfg.dump());
  CHECK(run_cli("emt --config " + (dir / "cfg.json").string() + " --out " +
                (dir / "x").string()) == 1);

  write_file(dir / "broken.json", "{ not json");
  CHECK(run_cli("emt --config " + (dir / "broken.json").string() + " --out " +
                (dir / "y").string()) == 1);

  json both = base_config();
  both["costs"] = {{"avoid", 2.0}, {"encounter", 5.0}, {"no_encounter", 1.0}};
  write_file(dir / "both.json", both.dump());
  CHECK(run_cli("simulate --config " + (dir / "both.json").string() +
                " --out " + (dir / "z").string()) == 1);
}

TEST_CASE("unachievable tolerances exit with code 3") {
  const fs::path dir = fresh_dir("resource");
  json cfg = base_config();
  cfg["discount"] = 0.99999;
  cfg["depth"] = 1;
  write_file(dir / "cfg.json", cfg.dump());
  CHECK(run_cli("index-table --config " + (dir / "cfg.json").string() +
                " --tolerance 1e-12 --out " + (dir / "run").string()) == 3);
}
