#include "bridgesmc/harness.hpp"

#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "bridgesmc/models/logistic.hpp"
#include "bridgesmc/models/ou.hpp"

namespace bridgesmc {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  const auto e = s.find_last_not_of(" \t\r");
  return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

}  // namespace

IniMap parse_ini(std::istream& in) {
  IniMap out;
  std::string line, section;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find_first_of("#;");
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw std::runtime_error("config line " + std::to_string(line_no) + ": bad section");
      section = trim(line.substr(1, line.size() - 2));
      out[section];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("config line " + std::to_string(line_no) + ": expected key = value");
    out[section][trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return out;
}

IniMap parse_ini_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config: " + path);
  return parse_ini(in);
}

std::string ExperimentConfig::get(const std::string& section, const std::string& key,
                                  const std::string& fallback) const {
  const auto s = ini.find(section);
  if (s == ini.end()) return fallback;
  const auto k = s->second.find(key);
  return k == s->second.end() ? fallback : k->second;
}

std::string ExperimentConfig::require(const std::string& section, const std::string& key) const {
  const auto v = get(section, key);
  if (v.empty())
    throw std::runtime_error("config: missing [" + section + "] " + key);
  return v;
}

double ExperimentConfig::get_double(const std::string& section, const std::string& key,
                                    double fallback) const {
  const auto v = get(section, key);
  return v.empty() ? fallback : std::stod(v);
}

long ExperimentConfig::get_long(const std::string& section, const std::string& key,
                                long fallback) const {
  const auto v = get(section, key);
  return v.empty() ? fallback : std::stol(v);
}

bool ExperimentConfig::get_bool(const std::string& section, const std::string& key,
                                bool fallback) const {
  const auto v = get(section, key);
  if (v.empty()) return fallback;
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw std::runtime_error("config: bad boolean for [" + section + "] " + key);
}

Vec ExperimentConfig::get_vec(const std::string& section, const std::string& key,
                              const Vec& fallback) const {
  const auto v = get(section, key);
  if (v.empty()) return fallback;
  Vec out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(std::stod(trim(item)));
  return out;
}

ExperimentConfig load_config(const std::string& path) {
  ExperimentConfig cfg;
  cfg.ini = parse_ini_file(path);
  cfg.source_path = path;
  return cfg;
}

namespace {

Observations build_data(const ExperimentConfig& cfg, const std::string& model_kind) {
  const std::string kind = cfg.get("data", "kind", "csv");
  if (kind == "synthetic_ou") {
    Rng rng(cfg.get_long("data", "seed", 42));
    const Vec theta_true = cfg.get_vec("data", "theta_true", {-0.3, 0.8, 0.55});
    return models::simulate_ou_data(theta_true, cfg.get_double("model", "x0", 1.0),
                                    static_cast<int>(cfg.get_long("data", "T", 10)), rng);
  }
  if (kind == "csv") {
    const ObservationSet raw = load_observations_file(cfg.require("data", "path"));
    Observations obs;
    if (model_kind == "logistic") {
      // initial state sits at the first observation time and is itself observed
      if (raw.times.size() < 2) throw std::runtime_error("config: logistic data needs >= 2 rows");
      obs.t0 = raw.times.front();
      obs.initial_value = raw.values.front();
      obs.times.assign(raw.times.begin() + 1, raw.times.end());
      obs.values.assign(raw.values.begin() + 1, raw.values.end());
      for (const auto& row : raw.values)
        for (double v : row)
          if (v < 0.0 || v != std::floor(v))
            throw std::runtime_error("config: logistic counts must be non-negative integers");
    } else {
      obs.t0 = cfg.get_double("data", "t0", 0.0);
      obs.times = raw.times;
      obs.values = raw.values;
    }
    obs.validate();
    return obs;
  }
  throw std::runtime_error("config: unknown data kind '" + kind + "'");
}

LevelSchedule build_schedule_from(const ExperimentConfig& cfg) {
  const std::string kind = cfg.get("schedule", "kind", "theory");
  ScheduleOverrides ov;
  auto set_int = [&](const char* key, std::optional<int>& slot) {
    const auto v = cfg.get("schedule", key);
    if (!v.empty()) slot = std::stoi(v);
  };
  set_int("l0", ov.l0);
  set_int("l_min", ov.l_min);
  set_int("l_max", ov.l_max);
  set_int("p_min", ov.p_min);
  set_int("p_max", ov.p_max);
  const auto n0 = cfg.get("schedule", "n0");
  if (!n0.empty()) ov.n0 = std::stol(n0);
  const auto q = cfg.get("schedule", "q");
  if (!q.empty()) ov.q = std::stod(q);
  const auto lb = cfg.get("schedule", "log_base");
  if (!lb.empty()) ov.log_base = std::stod(lb);
  const auto g0 = cfg.get_vec("schedule", "gamma0");
  if (!g0.empty()) ov.gamma0 = g0;
  const auto gd = cfg.get("schedule", "gamma_decay");
  if (!gd.empty()) ov.gamma_decay = std::stod(gd);
  const auto go = cfg.get("schedule", "gamma_offset");
  if (!go.empty()) ov.gamma_offset = std::stod(go);
  const auto bls = cfg.get("schedule", "base_level_single");
  if (!bls.empty()) ov.base_level_single = bls == "true" || bls == "1";
  const auto bpa = cfg.get("schedule", "base_p_absolute");
  if (!bpa.empty()) ov.base_p_absolute = bpa == "true" || bpa == "1";

  if (kind == "paper_ou") return build_schedule(ScheduleKind::paper_ou, ov);
  if (kind == "paper_logistic") return build_schedule(ScheduleKind::paper_logistic, ov);
  if (kind == "theory") return build_schedule(ScheduleKind::theory, ov);
  throw std::runtime_error("config: unknown schedule kind '" + kind + "'");
}

}  // namespace

Experiment build_experiment(const ExperimentConfig& cfg) {
  Experiment ex;
  ex.model_kind = cfg.get("model", "kind", "ou");
  if (ex.model_kind == "ou") {
    models::OuConfig mc;
    mc.aux_reversion = cfg.get_double("model", "aux_reversion", -0.1);
    mc.aux_tracks_drift = cfg.get_bool("model", "aux_tracks_drift", false);
    mc.x0 = cfg.get_double("model", "x0", 1.0);
    ex.model = std::make_unique<models::OuModel>(mc);
    ex.sa.box.lo = cfg.get_vec("sa", "box_lo", {-10.0, 0.02, 0.02});
    ex.sa.box.hi = cfg.get_vec("sa", "box_hi", {-1e-3, 10.0, 10.0});
  } else if (ex.model_kind == "logistic") {
    models::LogisticConfig mc;
    mc.stationary_gamma = cfg.get_bool("model", "stationary_gamma", false);
    ex.model = std::make_unique<models::LogisticModel>(mc);
    ex.sa.box.lo = cfg.get_vec("sa", "box_lo", {1e-4, 1e-8, 1e-2, 1e-2});
    ex.sa.box.hi = cfg.get_vec("sa", "box_hi", {50.0, 1.0, 5.0, 500.0});
  } else {
    throw std::runtime_error("config: unknown model kind '" + ex.model_kind + "'");
  }

  ex.obs = build_data(cfg, ex.model_kind);
  ex.schedule = build_schedule_from(cfg);
  ex.theta0 = cfg.get_vec("model", "theta0");
  if (static_cast<int>(ex.theta0.size()) != ex.model->theta_dim())
    throw std::runtime_error("config: [model] theta0 must have " +
                             std::to_string(ex.model->theta_dim()) + " entries");
  ex.model->constraints().require_admissible(ex.theta0);

  ex.mode = cfg.get("run", "mode", "umsa");
  ex.replicates = cfg.get_long("run", "replicates", 1);
  ex.m_group = static_cast<int>(cfg.get_long("run", "group_size", 1));
  ex.seed = static_cast<std::uint64_t>(cfg.get_long("run", "seed", 1));
  ex.workers = static_cast<int>(cfg.get_long("run", "workers", 0));
  ex.sa.n_particles = static_cast<int>(cfg.get_long("run", "particles", 50));
  const std::string variant = cfg.get("run", "variant", "backward");
  if (variant == "backward")
    ex.sa.variant = BackwardVariant::backward;
  else if (variant == "ancestral")
    ex.sa.variant = BackwardVariant::ancestral;
  else
    throw std::runtime_error("config: unknown variant '" + variant + "'");
  ex.sa.fd_step = cfg.get_double("sa", "fd_step", 0.0);
  ex.sa.step_clip = cfg.get_vec("sa", "step_clip",
                                ex.model_kind == "logistic" ? Vec{0.5, 0.002, 0.1, 2.0}
                                                            : Vec{0.5});
  ex.sa.gamma = ex.schedule.gamma;
  ex.msa_level = static_cast<int>(cfg.get_long("sa", "level", 4));
  ex.msa_iters = cfg.get_long("sa", "iters", 100);
  if (ex.replicates < 1 || ex.m_group < 1 || ex.replicates < ex.m_group)
    throw std::runtime_error("config: need replicates >= group_size >= 1");
  return ex;
}

void parallel_for(long n, int workers, const std::function<void(long)>& body) {
  if (n <= 0) return;
  if (workers <= 0) workers = static_cast<int>(std::thread::hardware_concurrency());
  if (workers < 1) workers = 1;
  workers = static_cast<int>(std::min<long>(workers, n));
  if (workers == 1) {
    for (long i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<long> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (;;) {
        const long i = next.fetch_add(1);
        if (i >= n) return;
        body(i);
      }
    });
  for (auto& t : pool) t.join();
}

MseCurvePoint estimate_mse(const std::vector<EstimateRecord>& records, const Vec& theta_ref,
                           int m_group) {
  if (m_group < 1 || static_cast<int>(records.size()) < m_group)
    throw std::invalid_argument("estimate_mse: need at least m_group records");
  const int dth = static_cast<int>(theta_ref.size());
  MseCurvePoint out;
  out.m_group = m_group;
  out.groups = static_cast<long>(records.size()) / m_group;
  out.eps2.assign(dth, 0.0);
  double cost = 0.0;
  for (long g = 0; g < out.groups; ++g) {
    Vec mean(dth, 0.0);
    for (int m = 0; m < m_group; ++m) {
      const auto& r = records[g * m_group + m];
      cost += r.cost;
      for (int c = 0; c < dth; ++c) mean[c] += r.theta_hat[c] / m_group;
    }
    for (int c = 0; c < dth; ++c) {
      const double d = mean[c] - theta_ref[c];
      out.eps2[c] += d * d / out.groups;
    }
  }
  out.cost_per_group = cost / out.groups;
  return out;
}

namespace {

nlohmann::json ini_to_json(const IniMap& ini) {
  nlohmann::json j;
  for (const auto& [sec, kv] : ini) {
    for (const auto& [k, v] : kv) j[sec][k] = v;
  }
  return j;
}

nlohmann::json summary_json(const PoolSummary& pool, const Experiment& ex) {
  nlohmann::json j;
  j["replicates"] = ex.replicates;
  j["m_group"] = pool.m_group;
  j["groups"] = pool.groups;
  j["mean"] = pool.mean;
  j["sd"] = pool.sd;
  j["se"] = pool.se;
  j["total_cost"] = pool.total_cost;
  return j;
}

}  // namespace

RunManifest run_experiment(const ExperimentConfig& cfg, const std::string& out_dir) {
  const auto start = std::chrono::steady_clock::now();
  Experiment ex = build_experiment(cfg);
  std::filesystem::create_directories(out_dir);

  RunManifest man;
  man.root_seed = ex.seed;
  man.replicates = ex.replicates;
  man.workers = ex.workers;

  std::vector<EstimateRecord> records(ex.replicates);
  std::vector<std::string> errors(ex.replicates);

  parallel_for(ex.replicates, ex.workers, [&](long i) {
    const std::uint64_t seed = Rng::derive(ex.seed, static_cast<std::uint64_t>(i));
    Rng rng(seed);
    try {
      if (ex.mode == "umsa") {
        records[i] =
            randomized_estimate(*ex.model, ex.theta0, ex.schedule, ex.sa, ex.obs, rng, seed);
      } else if (ex.mode == "msa") {
        const SaPath run =
            sa_chain_run(*ex.model, ex.theta0, ex.msa_level, ex.msa_iters, ex.sa, ex.obs, rng);
        EstimateRecord rec;
        rec.theta_hat = run.iterates.back();
        rec.l = ex.msa_level;
        rec.p = -1;
        rec.iters = ex.msa_iters;
        rec.cost = sa_cost(ex.obs, ex.msa_level, ex.sa.n_particles, ex.msa_iters, false);
        rec.seed = seed;
        records[i] = std::move(rec);
      } else {
        throw std::runtime_error("config: unknown run mode '" + ex.mode + "'");
      }
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  });

  std::vector<EstimateRecord> ok;
  ok.reserve(ex.replicates);
  for (long i = 0; i < ex.replicates; ++i) {
    if (errors[i].empty()) {
      ok.push_back(std::move(records[i]));
    } else {
      ++man.failed;
      if (man.errors.size() < 5)
        man.errors.push_back("replicate " + std::to_string(i) + ": " + errors[i]);
    }
  }
  man.completed = static_cast<long>(ok.size());

  man.records_path = out_dir + "/records.csv";
  {
    std::ofstream os(man.records_path);
    if (!os) throw std::runtime_error("cannot write " + man.records_path);
    write_records_csv(os, ok);
  }
  if (!ok.empty() && static_cast<int>(ok.size()) >= ex.m_group) {
    const PoolSummary pool = pool_estimates(ok, ex.m_group);
    man.total_cost = pool.total_cost;
    man.summary_path = out_dir + "/summary.json";
    std::ofstream os(man.summary_path);
    os << summary_json(pool, ex).dump(2) << '\n';
  }

  man.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  nlohmann::json j;
  j["config"] = ini_to_json(cfg.ini);
  j["config_path"] = cfg.source_path;
  j["root_seed"] = man.root_seed;
  j["replicates"] = man.replicates;
  j["completed"] = man.completed;
  j["failed"] = man.failed;
  j["errors"] = man.errors;
  j["workers"] = man.workers;
  j["wall_seconds"] = man.wall_seconds;
  j["total_cost"] = man.total_cost;
  j["records"] = man.records_path;
  std::ofstream os(out_dir + "/manifest.json");
  os << j.dump(2) << '\n';
  return man;
}

}  // namespace bridgesmc
