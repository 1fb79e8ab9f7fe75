#pragma once

#include <functional>
#include <map>
#include <memory>

#include "bridgesmc/io.hpp"

namespace bridgesmc {

/// "[section] key = value" configuration text.
using IniMap = std::map<std::string, std::map<std::string, std::string>>;

IniMap parse_ini(std::istream&);
IniMap parse_ini_file(const std::string& path);

struct ExperimentConfig {
  IniMap ini;
  std::string source_path;

  std::string get(const std::string& section, const std::string& key,
                  const std::string& fallback = {}) const;
  std::string require(const std::string& section, const std::string& key) const;
  double get_double(const std::string& section, const std::string& key, double fallback) const;
  long get_long(const std::string& section, const std::string& key, long fallback) const;
  bool get_bool(const std::string& section, const std::string& key, bool fallback) const;
  Vec get_vec(const std::string& section, const std::string& key, const Vec& fallback = {}) const;
};

ExperimentConfig load_config(const std::string& path);

/// Everything a run needs, built from a config: model, data, schedule, options.
struct Experiment {
  std::unique_ptr<DiffusionModel> model;
  Observations obs;
  LevelSchedule schedule;
  SaOptions sa;
  ThetaVector theta0;
  std::string model_kind;
  std::string mode;  // umsa | msa
  long replicates = 1;
  int m_group = 1;
  std::uint64_t seed = 1;
  int workers = 0;
  // msa mode
  int msa_level = 4;
  long msa_iters = 100;
};

Experiment build_experiment(const ExperimentConfig&);

struct RunManifest {
  std::uint64_t root_seed = 0;
  long replicates = 0;
  long completed = 0;
  long failed = 0;
  int workers = 0;
  double wall_seconds = 0.0;
  double total_cost = 0.0;
  std::vector<std::string> errors;  // first few failure messages
  std::string records_path;
  std::string summary_path;
};

/// Runs the configured experiment, writing records.csv, summary.json and
/// manifest.json under out_dir. Results are deterministic given (config, seed)
/// regardless of the worker count; failed replicates are recorded and the
/// remaining records are still written.
RunManifest run_experiment(const ExperimentConfig&, const std::string& out_dir);

/// Grouped mean-squared-error point: records are cut into floor(n/m) disjoint
/// groups of m, each averaged, and eps^2 is the per-coordinate mean squared
/// deviation of the group means from theta_ref.
struct MseCurvePoint {
  int m_group = 1;
  long groups = 0;
  double cost_per_group = 0.0;
  Vec eps2;
};
MseCurvePoint estimate_mse(const std::vector<EstimateRecord>&, const Vec& theta_ref, int m_group);

/// Index-parallel map with deterministic output placement.
void parallel_for(long n, int workers, const std::function<void(long)>& body);

}  // namespace bridgesmc
