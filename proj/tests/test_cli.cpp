#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "stf/field.hpp"
#include "stf/io.hpp"
#include "stf/schemes.hpp"
#include "stf/state_space.hpp"
#include "test_util.hpp"

// Exercises the installed command-line binary end to end. CTest points
// STFCACHE_BIN at the built executable.

namespace fs = std::filesystem;

namespace {

struct RunResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

std::string binary_path() {
  const char* env = std::getenv("STFCACHE_BIN");
  REQUIRE_MESSAGE(env != nullptr,
                  "STFCACHE_BIN must point at the cli binary");
  return env;
}

fs::path scratch_dir() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() /
                 ("stfcache_cli_" + std::to_string(::getpid()));
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

fs::path scratch_file(const std::string& name) {
  return scratch_dir() / name;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE_MESSAGE(in.good(), "missing file: " << path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void spill(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  REQUIRE(out.good());
}

// args come after the binary; an optional shell prefix (env assignments)
// goes in front.
RunResult run_cli(const std::string& args, const std::string& prefix = "") {
  static int counter = 0;
  const fs::path out_path =
      scratch_file("stdout_" + std::to_string(counter) + ".txt");
  const fs::path err_path =
      scratch_file("stderr_" + std::to_string(counter) + ".txt");
  ++counter;
  const std::string command = prefix + (prefix.empty() ? "" : " ") +
                              binary_path() + " " + args + " > '" +
                              out_path.string() + "' 2> '" +
                              err_path.string() + "'";
  const int status = std::system(command.c_str());
  RunResult result;
  REQUIRE(status != -1);
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  result.out = slurp(out_path);
  result.err = slurp(err_path);
  return result;
}

fs::path write_config(const std::string& name, const nlohmann::json& cfg) {
  const fs::path path = scratch_file(name);
  spill(path, cfg.dump(2) + "\n");
  return path;
}

nlohmann::json rr_config() {
  return nlohmann::json{{"scheme", {{"scheme", "rr"}, {"phi", 0.45}}},
                        {"popularity", {0.5, 0.29, 0.21}},
                        {"cache_size", 2}};
}

}  // namespace

TEST_SUITE_BEGIN("cli");

TEST_CASE("states prints the enumerated space as JSON") {
  const fs::path cfg = write_config(
      "states.json", {{"n_contents", 5}, {"cache_size", 2}});
  const RunResult run = run_cli("--config " + cfg.string() + " states");
  CHECK(run.exit_code == 0);
  CHECK(run.err.empty());
  const nlohmann::json doc = nlohmann::json::parse(run.out);
  CHECK(doc["n_states"] == 10);
  CHECK(doc["states"][0] == nlohmann::json::array({1, 2}));
  CHECK(doc["neighbors"].size() == 10);
}

TEST_CASE("states csv produces a listing plus the membership matrix") {
  const fs::path cfg = write_config(
      "states_csv.json", {{"n_contents", 5}, {"cache_size", 2}});
  const fs::path listing = scratch_file("listing.csv");
  const RunResult run = run_cli("--config " + cfg.string() +
                                " --format csv --out " + listing.string() +
                                " states");
  CHECK(run.exit_code == 0);
  std::ifstream in(listing);
  const stf::StatesDocument doc = stf::read_states_csv(in);
  CHECK(doc.states.size() == 10);
  CHECK(doc.n_contents == 5);

  std::ifstream companion(scratch_file("listing_cs.csv"));
  const stf::Matrix cs = stf::read_cache_state_matrix_csv(companion);
  REQUIRE(cs.rows() == 5);
  REQUIRE(cs.cols() == 10);
  for (Eigen::Index k = 0; k < cs.cols(); ++k) {
    CHECK(cs.col(k).sum() == 2.0);
  }

  const RunResult to_stdout =
      run_cli("--config " + cfg.string() + " --format csv states");
  CHECK(to_stdout.exit_code == 1);
  CHECK(to_stdout.err.find("pass --out") != std::string::npos);
}

TEST_CASE("field evaluates the drift on the barycentric grid") {
  nlohmann::json cfg_json = rr_config();
  cfg_json["points"] = {{"kind", "grid"}, {"step", 0.1}};
  const fs::path cfg = write_config("field.json", cfg_json);
  const fs::path out = scratch_file("field.csv");
  const RunResult run = run_cli("--config " + cfg.string() +
                                " --format csv --out " + out.string() +
                                " field");
  REQUIRE(run.exit_code == 0);
  std::ifstream in(out);
  const stf::FieldDocument doc = stf::read_field_csv(in);
  REQUIRE(doc.rows.size() == 66);
  REQUIRE(doc.steady_state.has_value());

  const stf::StateSpace space = stf::StateSpace::enumerate(3, 2);
  const stf::Popularity upsilon = test_util::pop({0.5, 0.29, 0.21});
  const stf::Matrix theta =
      stf::overall_matrix(stf::RrScheme{0.45}, space, upsilon);
  for (const auto& row : doc.rows) {
    const stf::Vector expected =
        stf::field_at(theta, stf::SimplexPoint(row.point));
    CHECK(test_util::max_abs(row.field - expected) < 1e-9);
    CHECK_FALSE(row.decomposition.has_value());
  }

  const RunResult decomposed =
      run_cli("--config " + cfg.string() + " field --decompose");
  REQUIRE(decomposed.exit_code == 0);
  const nlohmann::json json_doc = nlohmann::json::parse(decomposed.out);
  REQUIRE(json_doc["samples"].size() == 66);
  CHECK(json_doc["samples"][0]["decomposition"].size() == 3);

  nlohmann::json big = cfg_json;
  big["popularity"] = {{"kind", "zipf"}, {"n_contents", 4}, {"exponent", 1.0}};
  const fs::path big_cfg = write_config("field_big.json", big);
  const RunResult rejected =
      run_cli("--config " + big_cfg.string() + " field");
  CHECK(rejected.exit_code == 1);
  CHECK(rejected.err.find("barycentric grid") != std::string::npos);
}

TEST_CASE("steady cross-checks the closed form against iteration") {
  const fs::path cfg = write_config("steady.json", rr_config());
  const fs::path out = scratch_file("steady.json.out");
  const RunResult run = run_cli("--config " + cfg.string() + " --out " +
                                out.string() + " steady");
  REQUIRE(run.exit_code == 0);
  std::ifstream in(out);
  const stf::SteadyDocument doc = stf::read_steady_json(in);
  CHECK(doc.primary.method == "rr-closed-form");
  REQUIRE(doc.cross_check.has_value());
  CHECK(doc.cross_check->method == "power-iteration");
  REQUIRE(doc.max_abs_diff.has_value());
  CHECK(*doc.max_abs_diff < 1e-9);
  CHECK(std::abs(doc.primary.eta_star.sum() - 1.0) < 1e-9);

  const RunResult csv =
      run_cli("--config " + cfg.string() + " --format csv steady");
  CHECK(csv.exit_code == 1);
  CHECK(csv.err.find("json only") != std::string::npos);
}

TEST_CASE("spectrum reports the closed-form second eigenvalue") {
  nlohmann::json cfg_json = rr_config();
  cfg_json["scheme"] = {{"scheme", "lp"},
                        {"alpha", 0.9},
                        {"predicted", {0.5, 0.29, 0.21}}};
  const fs::path cfg = write_config("spectrum.json", cfg_json);
  const RunResult run = run_cli("--config " + cfg.string() + " spectrum");
  REQUIRE(run.exit_code == 0);
  const nlohmann::json doc = nlohmann::json::parse(run.out);
  REQUIRE(doc["eigenvalues_sorted"].size() == 3);
  CHECK(doc["eigenvalues_sorted"][0].get<double>() ==
        doctest::Approx(1.0).epsilon(1e-9));
  CHECK(doc["closed_form"].get<double>() ==
        doctest::Approx(0.739).epsilon(1e-9));
  CHECK(doc["agreement"].get<bool>());
  CHECK(doc["second_largest"].get<double>() ==
        doctest::Approx(0.739).epsilon(1e-9));
}

TEST_CASE("simulated traces are reproducible and seed-sensitive") {
  nlohmann::json cfg_json = rr_config();
  cfg_json["scheme"] = {{"scheme", "lru"}};
  cfg_json["kind"] = "trace";
  cfg_json["n_requests"] = 60;
  cfg_json["seed"] = 9;
  cfg_json["record_states"] = true;
  const fs::path cfg = write_config("trace.json", cfg_json);

  const fs::path t1 = scratch_file("t1.csv");
  const fs::path t2 = scratch_file("t2.csv");
  const fs::path t3 = scratch_file("t3.csv");
  REQUIRE(run_cli("--config " + cfg.string() + " --format csv --out " +
                  t1.string() + " simulate")
              .exit_code == 0);
  REQUIRE(run_cli("--config " + cfg.string() + " --format csv --out " +
                  t2.string() + " simulate")
              .exit_code == 0);
  CHECK(slurp(t1) == slurp(t2));
  REQUIRE(run_cli("--config " + cfg.string() + " --set seed=10 --format csv "
                  "--out " + t3.string() + " simulate")
              .exit_code == 0);
  CHECK(slurp(t1) != slurp(t3));

  std::ifstream in(t1);
  const stf::Trajectory traj = stf::read_trajectory_csv(in);
  REQUIRE(traj.records.size() == 60);
  CHECK(traj.records.front().state_index == -1);
  CHECK(traj.records.back().state_index >= 0);

  // the --seed flag is equivalent to and overrides the config seed
  nlohmann::json unseeded = cfg_json;
  unseeded.erase("seed");
  const fs::path cfg2 = write_config("trace_unseeded.json", unseeded);
  const RunResult missing =
      run_cli("--config " + cfg2.string() + " --format csv simulate");
  CHECK(missing.exit_code == 1);
  CHECK(missing.err.find("a seed is required") != std::string::npos);

  const fs::path t4 = scratch_file("t4.csv");
  REQUIRE(run_cli("--config " + cfg2.string() + " --seed 9 --format csv "
                  "--out " + t4.string() + " simulate")
              .exit_code == 0);
  CHECK(slurp(t4) == slurp(t1));

  const fs::path t5 = scratch_file("t5.csv");
  REQUIRE(run_cli("--config " + cfg.string() + " --set seed=10 --seed 9 "
                  "--format csv --out " + t5.string() + " simulate")
              .exit_code == 0);
  CHECK(slurp(t5) == slurp(t1));
}

TEST_CASE("empirical transition sampling stays column-stochastic") {
  nlohmann::json cfg_json = rr_config();
  cfg_json["kind"] = "empirical-theta";
  cfg_json["samples_per_state"] = 2000;
  cfg_json["seed"] = 3;
  const fs::path cfg = write_config("etheta.json", cfg_json);
  const fs::path out = scratch_file("etheta.csv");
  REQUIRE(run_cli("--config " + cfg.string() + " --format csv --out " +
                  out.string() + " simulate")
              .exit_code == 0);
  std::ifstream in(out);
  const stf::Matrix theta = stf::read_matrix_csv(in);
  REQUIRE(theta.rows() == 3);
  REQUIRE(theta.cols() == 3);
  for (Eigen::Index k = 0; k < 3; ++k) {
    CHECK(std::abs(theta.col(k).sum() - 1.0) < 1e-9);
  }
}

TEST_CASE("empirical field sampling writes a single-row field document") {
  nlohmann::json cfg_json = rr_config();
  cfg_json["kind"] = "empirical-stf";
  cfg_json["eta"] = {0.5, 0.3, 0.2};
  cfg_json["m_realizations"] = 400;
  cfg_json["r_requests"] = 100;
  cfg_json["mode"] = "categorical";
  cfg_json["seed"] = 8;
  const fs::path cfg = write_config("estf.json", cfg_json);
  const RunResult run = run_cli("--config " + cfg.string() + " simulate");
  REQUIRE(run.exit_code == 0);
  std::istringstream in(run.out);
  const stf::FieldDocument doc = stf::read_field_json(in);
  REQUIRE(doc.rows.size() == 1);
  CHECK_FALSE(doc.steady_state.has_value());
  CHECK(std::abs(doc.rows[0].field.sum()) < 1e-9);

  nlohmann::json bad_mode = cfg_json;
  bad_mode["mode"] = "bootstrap";
  const fs::path bad = write_config("estf_bad.json", bad_mode);
  const RunResult rejected = run_cli("--config " + bad.string() + " simulate");
  CHECK(rejected.exit_code == 1);
  CHECK(rejected.err.find("unknown estimator mode") != std::string::npos);
}

TEST_CASE("ccp writes round-count metadata with both formats") {
  nlohmann::json cfg_json = rr_config();
  cfg_json["n_rounds"] = 200;
  cfg_json["n_requests"] = 10;
  cfg_json["tracked_contents"] = {1, 3};
  cfg_json["seed"] = 4;
  const fs::path cfg = write_config("ccp.json", cfg_json);
  const fs::path out = scratch_file("ccp.csv");
  REQUIRE(run_cli("--config " + cfg.string() + " --format csv --out " +
                  out.string() + " ccp")
              .exit_code == 0);
  const std::string text = slurp(out);
  CHECK(text.rfind("# rounds,200\n", 0) == 0);
  std::ifstream in(out);
  const stf::CcpEstimate est = stf::read_ccp_csv(in);
  CHECK(est.rounds == 200);
  CHECK(est.tracked == std::vector<int>({0, 2}));
  CHECK(est.ccp.rows() == 10);

  const RunResult json_run = run_cli("--config " + cfg.string() + " ccp");
  REQUIRE(json_run.exit_code == 0);
  const nlohmann::json doc = nlohmann::json::parse(json_run.out);
  CHECK(doc["tracked"] == nlohmann::json::array({1, 3}));
  CHECK(doc["rounds"] == 200);
  CHECK(doc["n_requests"] == 10);
}

TEST_CASE("compare contrasts the recency chain with random replacement") {
  const fs::path cfg = write_config(
      "compare.json",
      {{"popularity", {0.5, 0.29, 0.21}}, {"cache_size", 2}});
  const RunResult run = run_cli("--config " + cfg.string() + " compare");
  REQUIRE(run.exit_code == 0);
  const nlohmann::json doc = nlohmann::json::parse(run.out);
  CHECK(doc["top_state"]["contents"] == nlohmann::json::array({1, 2}));
  CHECK(doc["top_state"]["index"] == 1);
  CHECK(doc["top_state"]["delta"].get<double>() > 0.0);
  CHECK(doc["top_state"]["lru_field_component"].get<double>() > 0.0);
  double rr_sum = 0.0;
  for (const auto& v : doc["eta_star_rr"]) rr_sum += v.get<double>();
  CHECK(std::abs(rr_sum - 1.0) < 1e-9);
  const double delta0 = doc["eta_star_lru"][0].get<double>() -
                        doc["eta_star_rr"][0].get<double>();
  CHECK(doc["top_state"]["delta"].get<double>() ==
        doctest::Approx(delta0).epsilon(1e-9));
}

TEST_CASE("failures surface as stderr diagnostics with exit code one") {
  const fs::path empty_cfg = write_config("empty.json", nlohmann::json::object());
  const RunResult missing_keys =
      run_cli("--config " + empty_cfg.string() + " steady");
  CHECK(missing_keys.exit_code == 1);
  CHECK(missing_keys.err.find("missing required key") != std::string::npos);
  CHECK(missing_keys.err.rfind("error: ", 0) == 0);

  const fs::path states_cfg = write_config(
      "cap.json", {{"n_contents", 5}, {"cache_size", 2}});
  const RunResult bad_set = run_cli(
      "--config " + states_cfg.string() + " --set cache_size=abc states");
  CHECK(bad_set.exit_code == 1);
  CHECK(bad_set.err.find("positive integer") != std::string::npos);

  const RunResult bad_entry = run_cli(
      "--config " + states_cfg.string() + " --set justakey states");
  CHECK(bad_entry.exit_code == 1);
  CHECK(bad_entry.err.find("key=value") != std::string::npos);

  const RunResult no_config = run_cli("--config /nonexistent.json states");
  CHECK(no_config.exit_code == 1);
  CHECK(no_config.err.find("cannot open config") != std::string::npos);

  const RunResult bad_format =
      run_cli("--config " + states_cfg.string() + " --format xml states");
  CHECK(bad_format.exit_code != 0);
  CHECK_FALSE(bad_format.err.empty());
}

TEST_CASE("the state cap honors its environment variable") {
  const fs::path cfg = write_config(
      "cap_env.json", {{"n_contents", 5}, {"cache_size", 2}});
  const RunResult capped = run_cli("--config " + cfg.string() + " states",
                                   "STF_CACHE_MAX_STATES=5");
  CHECK(capped.exit_code == 1);
  CHECK(capped.err.find("exceeds the exact-regime cap of 5") !=
        std::string::npos);

  const RunResult invalid = run_cli("--config " + cfg.string() + " states",
                                    "STF_CACHE_MAX_STATES=zero");
  CHECK(invalid.exit_code == 1);
  CHECK(invalid.err.find("STF_CACHE_MAX_STATES") != std::string::npos);

  const RunResult roomy = run_cli("--config " + cfg.string() + " states",
                                  "STF_CACHE_MAX_STATES=10");
  CHECK(roomy.exit_code == 0);
}

TEST_SUITE_END();
