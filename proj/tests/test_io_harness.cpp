#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "bridgesmc/harness.hpp"
#include "support/fixtures.hpp"
#include "support/stats.hpp"

using namespace bridgesmc;
using namespace testfix;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string ou_smoke_config(const std::string& extra = {}) {
  return std::string(
             "[run]\n"
             "mode = umsa\nreplicates = 6\ngroup_size = 2\nparticles = 8\nseed = 5\n"
             "variant = backward\n"
             "[model]\nkind = ou\ntheta0 = -0.5, 1.0, 0.7\naux_reversion = -0.1\nx0 = 1.0\n"
             "[data]\nkind = synthetic_ou\nT = 4\nseed = 42\ntheta_true = -0.3, 0.8, 0.55\n"
             "[schedule]\nkind = theory\nl_min = 2\nl_max = 4\np_min = 0\np_max = 3\nn0 = 2\n"
             "gamma0 = 0.2\ngamma_decay = 1\ngamma_offset = 0\n") +
         extra;
}

ExperimentConfig config_from_string(const std::string& text, const std::string& tag) {
  const auto dir = std::filesystem::temp_directory_path() / "bridgesmc_tests";
  std::filesystem::create_directories(dir);
  const auto path = dir / (tag + ".ini");
  std::ofstream os(path);
  os << text;
  os.close();
  return load_config(path.string());
}

}  // namespace

TEST_CASE("observation csv parsing and validation") {
  {
    std::stringstream ss("1.0,5,7\n2.5,6,6\n");
    const ObservationSet obs = load_observations(ss);
    REQUIRE(obs.times.size() == 2);
    CHECK(obs.times[1] - obs.times[0] == doctest::Approx(1.5));
    CHECK(obs.values[0] == std::vector<double>{5.0, 7.0});
  }
  {
    std::stringstream ss("time,y\n1,0.5\n2,0.25\n");
    const ObservationSet obs = load_observations(ss);
    CHECK(obs.times.size() == 2);
  }
  {
    std::stringstream ss("");
    CHECK_THROWS_WITH_AS(load_observations(ss), "observations csv: no data rows",
                         std::runtime_error);
  }
  {
    std::stringstream ss("2.0,1\n1.0,2\n");
    CHECK_THROWS_AS(load_observations(ss), std::runtime_error);
  }
  {
    std::stringstream ss("1.0,1\nbroken,2\n");
    try {
      load_observations(ss);
      FAIL("expected a parse error");
    } catch (const std::runtime_error& e) {
      CHECK(std::string(e.what()).find("row 2") != std::string::npos);
    }
  }
  {
    std::stringstream ss("1.0\n");
    CHECK_THROWS_AS(load_observations(ss), std::runtime_error);
  }
}

TEST_CASE("observation csv round-trips bitwise") {
  Rng rng(81);
  ObservationSet obs;
  for (int k = 1; k <= 20; ++k) {
    obs.times.push_back(k * (1.0 + 0.01 * rng.uniform()));
    obs.values.push_back({rng.normal() * 1e3, rng.normal() * 1e-7});
  }
  std::stringstream ss;
  save_observations(ss, obs);
  const ObservationSet back = load_observations(ss);
  CHECK(back.times == obs.times);
  CHECK(back.values == obs.values);
}

TEST_CASE("records csv round-trips") {
  std::vector<EstimateRecord> recs(3);
  Rng rng(82);
  for (auto& r : recs) {
    r.theta_hat = {rng.normal(), rng.normal(), rng.normal()};
    r.l = 4;
    r.p = 2;
    r.iters = 8;
    r.cost = 123.5;
    r.seed = rng.raw();
  }
  std::stringstream ss;
  write_records_csv(ss, recs);
  const auto back = read_records_csv(ss);
  REQUIRE(back.size() == 3);
  for (size_t i = 0; i < 3; ++i) {
    CHECK(back[i].theta_hat == recs[i].theta_hat);
    CHECK(back[i].seed == recs[i].seed);
    CHECK(back[i].cost == recs[i].cost);
  }
}

TEST_CASE("ini parsing handles sections, comments and vectors") {
  std::stringstream ss(
      "# top comment\n[run]\nseed = 7\n\n[model]\ntheta0 = -0.5, 1.0, 0.7 ; trailing\n");
  const IniMap ini = parse_ini(ss);
  ExperimentConfig cfg;
  cfg.ini = ini;
  CHECK(cfg.get_long("run", "seed", 0) == 7);
  CHECK(cfg.get_vec("model", "theta0") == Vec{-0.5, 1.0, 0.7});
  CHECK(cfg.get("missing", "key", "fallback") == "fallback");
  CHECK_THROWS_AS(cfg.require("missing", "key"), std::runtime_error);
}

TEST_CASE("grouped error curve behaves like a Monte Carlo average") {
  Rng rng(83);
  std::vector<EstimateRecord> recs(4000);
  const Vec ref{2.0};
  for (auto& r : recs) {
    r.theta_hat = {2.0 + rng.normal()};
    r.cost = 1.0;
  }
  // all records equal the reference -> zero error
  std::vector<EstimateRecord> exact(10);
  for (auto& r : exact) {
    r.theta_hat = {2.0};
    r.cost = 1.0;
  }
  CHECK(estimate_mse(exact, ref, 2).eps2[0] == 0.0);

  const MseCurvePoint m4 = estimate_mse(recs, ref, 4);
  CHECK(m4.groups == 1000);
  // unit-variance noise averaged in groups of 4: eps2 ~ 1/4
  const double se = std::sqrt(2.0 / 4.0 / 4.0 / 1000.0);  // var of mean of chi2-like terms
  CHECK(std::fabs(m4.eps2[0] - 0.25) <= 5.0 * se);

  const MseCurvePoint m16 = estimate_mse(recs, ref, 16);
  CHECK(m16.eps2[0] <= 0.5 * m4.eps2[0]);
  CHECK(m16.eps2[0] >= 0.1 * 0.25);
  CHECK(m16.cost_per_group == doctest::Approx(16.0));

  CHECK_THROWS_AS(estimate_mse(exact, ref, 100), std::invalid_argument);
}

TEST_CASE("experiment runs are reproducible across worker counts") {
  const auto dir = std::filesystem::temp_directory_path() / "bridgesmc_tests";
  const ExperimentConfig cfg1 = config_from_string(ou_smoke_config(), "repro1");
  const RunManifest m1 = run_experiment(cfg1, (dir / "out1").string());
  CHECK(m1.completed == 6);
  CHECK(m1.failed == 0);

  ExperimentConfig cfg2 = cfg1;
  cfg2.ini["run"]["workers"] = "3";
  const RunManifest m2 = run_experiment(cfg2, (dir / "out2").string());
  CHECK(slurp(m1.records_path) == slurp(m2.records_path));

  // same config twice: bitwise identical records
  const RunManifest m3 = run_experiment(cfg1, (dir / "out3").string());
  CHECK(slurp(m1.records_path) == slurp(m3.records_path));

  // summary and manifest exist and carry the pooled fields
  const std::string summary = slurp((dir / "out1" / "summary.json").string());
  CHECK(summary.find("\"mean\"") != std::string::npos);
  const std::string manifest = slurp((dir / "out1" / "manifest.json").string());
  CHECK(manifest.find("\"root_seed\"") != std::string::npos);

  // record rows carry value, level, iteration index, cost and seed
  const auto records = read_records_csv_file(m1.records_path);
  REQUIRE(records.size() == 6);
  for (const auto& r : records) {
    CHECK(r.theta_hat.size() == 3);
    CHECK(r.cost > 0.0);
    CHECK(r.seed != 0);
    CHECK(r.l >= 2);
    CHECK(r.l <= 4);
  }
  // seeds pairwise distinct
  for (size_t i = 0; i < records.size(); ++i)
    for (size_t j = i + 1; j < records.size(); ++j) CHECK(records[i].seed != records[j].seed);
}

TEST_CASE("one replicate under a point-mass schedule is one plain recursion") {
  const auto dir = std::filesystem::temp_directory_path() / "bridgesmc_tests";
  ExperimentConfig cfg = config_from_string(ou_smoke_config(), "single");
  cfg.ini["run"]["replicates"] = "1";
  cfg.ini["run"]["group_size"] = "1";
  cfg.ini["schedule"]["l_min"] = "3";
  cfg.ini["schedule"]["l_max"] = "3";
  cfg.ini["schedule"]["p_min"] = "0";
  cfg.ini["schedule"]["p_max"] = "0";
  const RunManifest man = run_experiment(cfg, (dir / "single_out").string());
  CHECK(man.completed == 1);
  const auto records = read_records_csv_file(man.records_path);
  REQUIRE(records.size() == 1);
  CHECK(records[0].l == 3);
  CHECK(records[0].p == 0);
  CHECK(records[0].iters == 2);  // n0
}

TEST_CASE("replicate failures are preserved in the manifest") {
  const auto dir = std::filesystem::temp_directory_path() / "bridgesmc_tests";
  ExperimentConfig cfg = config_from_string(
      ou_smoke_config("[sa]\nlevel = -1\niters = 3\n"), "failing");
  cfg.ini["run"]["mode"] = "msa";
  cfg.ini["run"]["replicates"] = "3";
  cfg.ini["run"]["group_size"] = "1";
  const RunManifest man = run_experiment(cfg, (dir / "fail_out").string());
  CHECK(man.failed == 3);
  CHECK(man.completed == 0);
  CHECK(!man.errors.empty());
  CHECK(std::filesystem::exists(man.records_path));
  const std::string manifest = slurp((dir / "fail_out" / "manifest.json").string());
  CHECK(manifest.find("\"failed\": 3") != std::string::npos);
}

TEST_CASE("msa mode runs a plain single-level recursion") {
  const ExperimentConfig cfg = config_from_string(
      ou_smoke_config("[sa]\nlevel = 3\niters = 5\n") + "", "msa_mode");
  ExperimentConfig cfg2 = cfg;
  cfg2.ini["run"]["mode"] = "msa";
  cfg2.ini["run"]["replicates"] = "2";
  cfg2.ini["run"]["group_size"] = "1";
  const auto dir = std::filesystem::temp_directory_path() / "bridgesmc_tests";
  const RunManifest man = run_experiment(cfg2, (dir / "msa_out").string());
  CHECK(man.completed == 2);
  const auto records = read_records_csv_file(man.records_path);
  REQUIRE(records.size() == 2);
  for (const auto& r : records) {
    CHECK(r.l == 3);
    CHECK(r.p == -1);
    CHECK(r.iters == 5);
  }
}

TEST_CASE("logistic csv data attaches with the initial state observed") {
  const auto dir = std::filesystem::temp_directory_path() / "bridgesmc_tests";
  std::filesystem::create_directories(dir);
  const auto csv = dir / "logi.csv";
  {
    std::ofstream os(csv);
    os << "1.0,400,420\n2.5,430,410\n3.5,460,455\n";
  }
  const ExperimentConfig cfg = config_from_string(
      "[run]\nmode = umsa\nreplicates = 1\nparticles = 6\nseed = 3\n"
      "[model]\nkind = logistic\ntheta0 = 2.0, 0.0038, 0.8, 10\n"
      "[data]\nkind = csv\npath = " +
          csv.string() +
          "\n"
          "[schedule]\nkind = paper_logistic\nl_max = 5\np_max = 2\n",
      "logi");
  const Experiment ex = build_experiment(cfg);
  CHECK(ex.obs.t0 == 1.0);
  CHECK(ex.obs.intervals() == 2);
  CHECK(ex.obs.initial_observed());
  CHECK(ex.obs.initial_value == Vec{400.0, 420.0});
  CHECK(ex.obs.times == std::vector<double>{2.5, 3.5});

  // non-integer counts are rejected
  {
    std::ofstream os(csv);
    os << "1.0,400.5,420\n2.5,430,410\n";
  }
  CHECK_THROWS_AS(build_experiment(cfg), std::runtime_error);
}

TEST_CASE("a short logistic estimation run completes end to end") {
  const auto dir = std::filesystem::temp_directory_path() / "bridgesmc_tests";
  std::filesystem::create_directories(dir);
  const auto csv = dir / "logi_run.csv";
  {
    Rng rng(84);
    std::vector<double> times;
    for (int i = 0; i <= 6; ++i) times.push_back(1.0 + 1.0 * i);
    const Observations obs = models::simulate_logistic_data(kLogisticTheta, times, rng, 7);
    ObservationSet raw;
    raw.times.push_back(obs.t0);
    raw.values.push_back(obs.initial_value);
    for (int k = 1; k <= obs.intervals(); ++k) {
      raw.times.push_back(obs.time(k));
      raw.values.push_back(obs.value(k));
    }
    save_observations_file(csv.string(), raw);
  }
  const ExperimentConfig cfg = config_from_string(
      "[run]\nmode = umsa\nreplicates = 2\nparticles = 10\nseed = 11\n"
      "[model]\nkind = logistic\ntheta0 = 2.0, 0.0038, 0.8, 10\n"
      "[data]\nkind = csv\npath = " +
          csv.string() +
          "\n"
          "[schedule]\nkind = paper_logistic\nl0 = 2\nl_min = 3\nl_max = 4\np_min = 1\np_max = 2\n",
      "logi_run");
  const RunManifest man = run_experiment(cfg, (dir / "logi_out").string());
  CHECK(man.failed == 0);
  const auto records = read_records_csv_file(man.records_path);
  REQUIRE(records.size() == 2);
  for (const auto& r : records) {
    CHECK(r.theta_hat.size() == 4);
    for (double v : r.theta_hat) CHECK(std::isfinite(v));
  }
}
