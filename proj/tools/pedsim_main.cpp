#include <omp.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "pedsim/batch.hpp"
#include "pedsim/calibration.hpp"
#include "pedsim/csv.hpp"
#include "pedsim/env.hpp"
#include "pedsim/metrics.hpp"
#include "pedsim/ppo.hpp"
#include "pedsim/report.hpp"
#include "pedsim/table_io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace pedsim;

namespace {

constexpr const char* kVersion = "0.1.0";

// Exit codes: 0 success, 2 usage, 3 missing input, 4 numeric failure.
struct MissingInput : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void require_input(const std::string& path, const char* what) {
  if (path.empty() || !fs::exists(path))
    throw MissingInput(std::string(what) + " not found: " + path);
}

// Relative output paths land under PEDSIM_OUTPUT_ROOT when it is set.
fs::path resolve_out_dir(const std::string& out) {
  fs::path p(out);
  if (p.is_relative()) {
    if (const char* root = std::getenv("PEDSIM_OUTPUT_ROOT"))
      if (*root) p = fs::path(root) / p;
  }
  fs::create_directories(p);
  return p;
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream os(p);
  if (!os) throw std::runtime_error("cannot open for writing: " + p.string());
  return os;
}

// Settings resolve as defaults < config file < command-line flags.
struct Overlay {
  const CLI::App* cmd = nullptr;
  json j = json::object();

  void load(const std::string& path) {
    if (path.empty()) return;
    require_input(path, "config file");
    std::ifstream is(path);
    j = json::parse(is);
  }
  template <typename T>
  void get(const char* flag, const char* key, T& v) const {
    if (cmd->count(flag) == 0 && j.contains(key)) v = j.at(key).get<T>();
  }
};

void write_manifest(const fs::path& dir, const char* command,
                    const json& config) {
  json m;
  m["tool"] = "pedsim";
  m["version"] = kVersion;
  m["command"] = command;
  m["config"] = config;
  open_out(dir / "manifest.json") << m.dump(2) << '\n';
}

json env_manifest(const EnvConfig& env) {
  json e;
  e["dt"] = env.dt;
  e["timeout_s"] = env.timeout_s;
  e["process_noise"] = env.process_noise;
  e["belief_speed_variance"] = env.belief_speed_variance;
  e["actions"] = env.actions.speeds.size();
  return e;
}

json params_manifest(const NonPolicyParams& p) {
  json e;
  e["sigma_day"] = p.sigma_v_day;
  e["sigma_night"] = p.sigma_v_night;
  e["time_pressure"] = p.time_pressure_gain;
  e["effort_weight"] = p.effort_weight;
  e["looming_weight"] = p.looming_weight;
  return e;
}

// Mid-behavior operating point for zero-config simulate runs: crossing pays
// off, waiting and looming still bite.
NonPolicyParams default_eval_params() {
  NonPolicyParams p;
  p.sigma_v_day = 2.0;
  p.sigma_v_night = 2.0;
  p.time_pressure_gain = 2.0;
  p.effort_weight = 1.5;
  p.looming_weight = 1.0;
  return p;
}

std::vector<ScenarioSpec> load_table_or_default(const std::string& path) {
  if (path.empty()) return default_scenario_table();
  require_input(path, "scenario table");
  return load_scenario_table(path);
}

void apply_thread_options(bool single_thread, int threads) {
  if (single_thread)
    omp_set_num_threads(1);
  else if (threads > 0)
    omp_set_num_threads(threads);
}

void write_csv_file(const LearningCurve& curve, const fs::path& path) {
  std::ofstream os = open_out(path);
  curve.write_csv(os);
}

// ---------------------------------------------------------------- train --

struct TrainOpts {
  std::string config;
  std::string variant = "SM";
  std::string out = "runs/train";
  long steps = 3'000'000;
  std::uint64_t seed = 1;
  int n_envs = 8;
  int rollout_len = 2048;
  int minibatch = 64;
  int epochs = 10;
  double lr = 3e-4;
  double gamma = 0.99;
  double gae_lambda = 0.95;
  double clip = 0.2;
  double vf_coef = 0.5;
  double ent_coef = 0.0;
  double max_grad_norm = 0.5;
  int checkpoint_every = 10;
  int progress_every = 5;
  bool quiet = false;
  bool single_thread = false;
  int threads = 0;
};

void add_train(CLI::App& app, TrainOpts& o, CLI::App*& cmd) {
  cmd = app.add_subcommand("train", "train a policy with PPO");
  cmd->add_option("--config", o.config, "JSON config file");
  cmd->add_option("--variant", o.variant, "model variant: SM, S or M");
  cmd->add_option("--steps", o.steps, "total environment decisions");
  cmd->add_option("--seed", o.seed, "master seed");
  cmd->add_option("--n-envs", o.n_envs, "parallel environments");
  cmd->add_option("--rollout-len", o.rollout_len, "decisions per env per iteration");
  cmd->add_option("--minibatch", o.minibatch, "minibatch size");
  cmd->add_option("--epochs", o.epochs, "optimization epochs per iteration");
  cmd->add_option("--lr", o.lr, "Adam learning rate");
  cmd->add_option("--gamma", o.gamma, "discount factor");
  cmd->add_option("--gae-lambda", o.gae_lambda, "GAE lambda");
  cmd->add_option("--clip", o.clip, "PPO clip range");
  cmd->add_option("--vf-coef", o.vf_coef, "value loss coefficient");
  cmd->add_option("--ent-coef", o.ent_coef, "entropy bonus coefficient");
  cmd->add_option("--max-grad-norm", o.max_grad_norm, "gradient clip norm");
  cmd->add_option("--checkpoint-every", o.checkpoint_every,
                  "iterations between checkpoint rewrites");
  cmd->add_option("--progress-every", o.progress_every,
                  "iterations between progress lines");
  cmd->add_flag("--quiet", o.quiet, "suppress progress lines");
  cmd->add_flag("--single-thread", o.single_thread,
                "serial env stepping, bit-reproducible");
  cmd->add_option("--threads", o.threads, "OpenMP thread count (0 = default)");
  cmd->add_option("--out", o.out, "output directory");
}

int cmd_train(const CLI::App* cmd, TrainOpts& o) {
  Overlay ov{cmd};
  ov.load(o.config);
  ov.get("--variant", "variant", o.variant);
  ov.get("--steps", "steps", o.steps);
  ov.get("--seed", "seed", o.seed);
  ov.get("--n-envs", "n_envs", o.n_envs);
  ov.get("--rollout-len", "rollout_len", o.rollout_len);
  ov.get("--minibatch", "minibatch", o.minibatch);
  ov.get("--epochs", "epochs", o.epochs);
  ov.get("--lr", "lr", o.lr);
  ov.get("--gamma", "gamma", o.gamma);
  ov.get("--gae-lambda", "gae_lambda", o.gae_lambda);
  ov.get("--clip", "clip", o.clip);
  ov.get("--vf-coef", "vf_coef", o.vf_coef);
  ov.get("--ent-coef", "ent_coef", o.ent_coef);
  ov.get("--max-grad-norm", "max_grad_norm", o.max_grad_norm);
  ov.get("--checkpoint-every", "checkpoint_every", o.checkpoint_every);
  ov.get("--progress-every", "progress_every", o.progress_every);
  ov.get("--quiet", "quiet", o.quiet);
  ov.get("--single-thread", "single_thread", o.single_thread);
  ov.get("--threads", "threads", o.threads);
  ov.get("--out", "out", o.out);

  TrainConfig cfg;
  cfg.variant = parse_variant(o.variant);
  cfg.total_env_steps = o.steps;
  cfg.n_envs = o.n_envs;
  cfg.rollout_len = o.rollout_len;
  cfg.minibatch = o.minibatch;
  cfg.epochs = o.epochs;
  cfg.lr = o.lr;
  cfg.gamma = o.gamma;
  cfg.gae_lambda = o.gae_lambda;
  cfg.clip = o.clip;
  cfg.vf_coef = o.vf_coef;
  cfg.ent_coef = o.ent_coef;
  cfg.max_grad_norm = o.max_grad_norm;
  cfg.parallel_envs = !o.single_thread;
  if (!o.quiet) cfg.progress = &std::cerr;
  cfg.progress_every = o.progress_every;
  cfg.validate();
  apply_thread_options(o.single_thread, o.threads);

  const fs::path dir = resolve_out_dir(o.out);
  json m;
  m["variant"] = variant_name(cfg.variant);
  m["steps"] = cfg.total_env_steps;
  m["seed"] = o.seed;
  m["n_envs"] = cfg.n_envs;
  m["rollout_len"] = cfg.rollout_len;
  m["minibatch"] = cfg.minibatch;
  m["epochs"] = cfg.epochs;
  m["lr"] = cfg.lr;
  m["gamma"] = cfg.gamma;
  m["gae_lambda"] = cfg.gae_lambda;
  m["clip"] = cfg.clip;
  m["vf_coef"] = cfg.vf_coef;
  m["ent_coef"] = cfg.ent_coef;
  m["max_grad_norm"] = cfg.max_grad_norm;
  m["single_thread"] = o.single_thread;
  m["env"] = env_manifest(cfg.env);
  write_manifest(dir, "train", m);

  const fs::path ck_path = dir / "checkpoint.bin";
  const fs::path curve_path = dir / "learning_curve.csv";
  const int every = std::max(o.checkpoint_every, 1);
  IterationHook hook = [&](const Checkpoint& ck, const LearningCurve& curve) {
    if (curve.points.size() % static_cast<std::size_t>(every) != 0) return;
    ck.save(ck_path.string());
    write_csv_file(curve, curve_path);
  };
  TrainResult res = train(cfg, o.seed, hook);
  res.checkpoint.save(ck_path.string());
  write_csv_file(res.curve, curve_path);

  std::cout << "checkpoint: " << ck_path.string() << '\n'
            << "learning curve: " << curve_path.string() << '\n';
  if (!res.curve.points.empty()) {
    const IterationStats& last = res.curve.points.back();
    std::cout << "final mean return: " << fmt_double(last.mean_return)
              << " over " << last.env_steps << " steps\n";
  }
  return 0;
}

// ------------------------------------------------------------- simulate --

struct SimOpts {
  std::string config;
  std::string checkpoint;
  std::string table;
  std::string out = "runs/simulate";
  int reps = 50;
  std::uint64_t seed = 1;
  double sigma_day = 2.0;
  double sigma_night = 2.0;
  double time_pressure = 2.0;
  double effort_weight = 1.5;
  double looming_weight = 1.0;
  bool day_night = true;
  bool single_thread = false;
};

void add_simulate(CLI::App& app, SimOpts& o, CLI::App*& cmd) {
  cmd = app.add_subcommand("simulate",
                           "greedy rollouts over a scenario table");
  cmd->add_option("--config", o.config, "JSON config file");
  cmd->add_option("--checkpoint", o.checkpoint, "trained policy file");
  cmd->add_option("--table", o.table,
                  "scenario table JSON (bundled conditions when omitted)");
  cmd->add_option("--reps", o.reps, "episodes per condition block");
  cmd->add_option("--seed", o.seed, "master seed");
  cmd->add_option("--sigma-day", o.sigma_day, "visual noise sd, day [deg]");
  cmd->add_option("--sigma-night", o.sigma_night, "visual noise sd, night [deg]");
  cmd->add_option("--time-pressure", o.time_pressure, "arrival reward slope");
  cmd->add_option("--effort-weight", o.effort_weight, "step effort weight");
  cmd->add_option("--looming-weight", o.looming_weight, "looming penalty weight");
  cmd->add_flag("--day-night,!--no-day-night", o.day_night,
                "expand every row into a day and a night block");
  cmd->add_flag("--single-thread", o.single_thread, "serial episode rollout");
  cmd->add_option("--out", o.out, "output directory");
}

int cmd_simulate(const CLI::App* cmd, SimOpts& o) {
  Overlay ov{cmd};
  ov.load(o.config);
  ov.get("--checkpoint", "checkpoint", o.checkpoint);
  ov.get("--table", "table", o.table);
  ov.get("--reps", "reps", o.reps);
  ov.get("--seed", "seed", o.seed);
  ov.get("--sigma-day", "sigma_day", o.sigma_day);
  ov.get("--sigma-night", "sigma_night", o.sigma_night);
  ov.get("--time-pressure", "time_pressure", o.time_pressure);
  ov.get("--effort-weight", "effort_weight", o.effort_weight);
  ov.get("--looming-weight", "looming_weight", o.looming_weight);
  ov.get("--day-night", "day_night", o.day_night);
  ov.get("--single-thread", "single_thread", o.single_thread);
  ov.get("--out", "out", o.out);

  if (o.reps <= 0) throw std::invalid_argument("reps must be positive");
  require_input(o.checkpoint, "checkpoint");
  const Checkpoint ck = Checkpoint::load(o.checkpoint);
  const std::vector<ScenarioSpec> table = load_table_or_default(o.table);

  NonPolicyParams params;
  params.sigma_v_day = o.sigma_day;
  params.sigma_v_night = o.sigma_night;
  params.time_pressure_gain = o.time_pressure;
  params.effort_weight = o.effort_weight;
  params.looming_weight = o.looming_weight;
  params.validate();
  apply_thread_options(o.single_thread, 0);

  Rng root(o.seed);
  std::vector<RolloutTask> tasks;
  for (const ScenarioSpec& row : table) {
    std::vector<bool> nights =
        o.day_night ? std::vector<bool>{false, true}
                    : std::vector<bool>{row.night};
    for (bool night : nights) {
      for (int r = 0; r < o.reps; ++r) {
        RolloutTask t;
        t.spec = row;
        t.spec.night = night;
        t.params = params;
        t.seed = root.fork(0x51ED0000ull + tasks.size()).next_u64();
        tasks.push_back(t);
      }
    }
  }

  const fs::path dir = resolve_out_dir(o.out);
  json m;
  m["checkpoint"] = o.checkpoint;
  m["variant"] = variant_name(ck.variant);
  m["table"] = o.table.empty() ? "(bundled)" : o.table;
  m["conditions"] = table.size();
  m["reps"] = o.reps;
  m["seed"] = o.seed;
  m["day_night"] = o.day_night;
  m["single_thread"] = o.single_thread;
  m["params"] = params_manifest(params);
  write_manifest(dir, "simulate", m);

  const std::vector<EpisodeRecord> records = run_episodes(
      ck, tasks, o.single_thread ? ExecMode::Serial : ExecMode::Parallel);

  std::ofstream eps = open_out(dir / "episodes.csv");
  write_episode_csv_header(eps);
  long crossed = 0, collided = 0, timeout = 0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    append_episode_csv(eps, records[i], i);
    crossed += records[i].outcome == Outcome::Crossed;
    collided += records[i].outcome == Outcome::Collision;
    timeout += records[i].outcome == Outcome::Timeout;
  }
  eps.close();

  const MetricTable metrics = aggregate(records);
  std::ofstream mt = open_out(dir / "metrics.csv");
  write_metric_table_csv(mt, metrics);
  mt.close();

  std::cout << "episodes: " << records.size() << " crossed: " << crossed
            << " collision: " << collided << " timeout: " << timeout << '\n'
            << "episode log: " << (dir / "episodes.csv").string() << '\n'
            << "metric table: " << (dir / "metrics.csv").string() << '\n';
  return 0;
}

// ------------------------------------------------------------ calibrate --

struct CalOpts {
  std::string config;
  std::string checkpoint;
  std::string observed;
  std::string table;
  std::string out = "runs/calibrate";
  int budget = 80;
  int init = 20;
  int reps = 20;
  double kappa = 2.0;
  std::uint64_t seed = 1;
  bool single_thread = false;
};

void add_calibrate(CLI::App& app, CalOpts& o, CLI::App*& cmd) {
  cmd = app.add_subcommand(
      "calibrate", "fit behavioral parameters to an observed metric table");
  cmd->add_option("--config", o.config, "JSON config file");
  cmd->add_option("--checkpoint", o.checkpoint, "trained policy file");
  cmd->add_option("--observed", o.observed, "observed metric table CSV");
  cmd->add_option("--table", o.table,
                  "scenario table JSON (bundled conditions when omitted)");
  cmd->add_option("--budget", o.budget, "acquisitions after initialization");
  cmd->add_option("--init", o.init, "space-filling initial evaluations");
  cmd->add_option("--reps", o.reps, "episodes per condition block per evaluation");
  cmd->add_option("--kappa", o.kappa, "LCB exploration weight");
  cmd->add_option("--seed", o.seed, "master seed");
  cmd->add_flag("--single-thread", o.single_thread, "serial episode rollout");
  cmd->add_option("--out", o.out, "output directory");
}

int cmd_calibrate(const CLI::App* cmd, CalOpts& o) {
  Overlay ov{cmd};
  ov.load(o.config);
  ov.get("--checkpoint", "checkpoint", o.checkpoint);
  ov.get("--observed", "observed", o.observed);
  ov.get("--table", "table", o.table);
  ov.get("--budget", "budget", o.budget);
  ov.get("--init", "init", o.init);
  ov.get("--reps", "reps", o.reps);
  ov.get("--kappa", "kappa", o.kappa);
  ov.get("--seed", "seed", o.seed);
  ov.get("--single-thread", "single_thread", o.single_thread);
  ov.get("--out", "out", o.out);

  require_input(o.checkpoint, "checkpoint");
  require_input(o.observed, "observed metric table");
  const Checkpoint ck = Checkpoint::load(o.checkpoint);
  const MetricTable observed = load_metric_table(o.observed);
  const std::vector<ScenarioSpec> table = load_table_or_default(o.table);

  BolfiOptions opt;
  opt.budget = o.budget;
  opt.init = o.init;
  opt.reps = o.reps;
  opt.kappa = o.kappa;
  opt.mode = o.single_thread ? ExecMode::Serial : ExecMode::Parallel;
  if (opt.budget < 0 || opt.init <= 0 || opt.reps <= 0)
    throw std::invalid_argument("budget/init/reps out of range");
  apply_thread_options(o.single_thread, 0);

  const fs::path dir = resolve_out_dir(o.out);
  json m;
  m["checkpoint"] = o.checkpoint;
  m["observed"] = o.observed;
  m["table"] = o.table.empty() ? "(bundled)" : o.table;
  m["budget"] = opt.budget;
  m["init"] = opt.init;
  m["reps"] = opt.reps;
  m["kappa"] = opt.kappa;
  m["seed"] = o.seed;
  m["single_thread"] = o.single_thread;
  write_manifest(dir, "calibrate", m);

  // The trace is flushed per evaluation so partial runs remain inspectable.
  std::ofstream trace = open_out(dir / "trace.csv");
  trace << "index,init_phase,sigma_day,sigma_night,time_pressure,"
           "effort_weight,looming_weight,discrepancy,best_so_far\n";
  TraceHook hook = [&trace](const BolfiTracePoint& p) {
    trace << p.index << ',' << (p.init_phase ? 1 : 0) << ','
          << fmt_double(p.point.sigma_v_day) << ','
          << fmt_double(p.point.sigma_v_night) << ','
          << fmt_double(p.point.time_pressure_gain) << ','
          << fmt_double(p.point.effort_weight) << ','
          << fmt_double(p.point.looming_weight) << ','
          << fmt_double(p.value) << ',' << fmt_double(p.best_so_far) << '\n';
    trace.flush();
  };

  const BolfiResult res = bolfi_run(ck, observed, table, opt, o.seed, hook);
  trace.close();

  json best;
  best["best"] = params_manifest(res.best);
  best["discrepancy"] = res.best_value;
  best["evaluations"] = res.trace.size();
  open_out(dir / "best_point.json") << best.dump(2) << '\n';

  std::cout << "best discrepancy: " << fmt_double(res.best_value) << '\n'
            << "best point: sigma_day " << fmt_double(res.best.sigma_v_day)
            << " sigma_night " << fmt_double(res.best.sigma_v_night)
            << " time_pressure " << fmt_double(res.best.time_pressure_gain)
            << " effort_weight " << fmt_double(res.best.effort_weight)
            << " looming_weight " << fmt_double(res.best.looming_weight)
            << '\n'
            << "trace: " << (dir / "trace.csv").string() << '\n'
            << "best point file: " << (dir / "best_point.json").string()
            << '\n';
  return 0;
}

// --------------------------------------------------------------- report --

struct ReportOpts {
  std::string config;
  std::string episodes;
  std::string table;
  std::string out = "runs/report";
  double bin_width = 0.25;
};

void add_report(CLI::App& app, ReportOpts& o, CLI::App*& cmd) {
  cmd = app.add_subcommand("report",
                           "metrics, checklist and plot-ready CSVs from an "
                           "episode log");
  cmd->add_option("--config", o.config, "JSON config file");
  cmd->add_option("--episodes", o.episodes, "episode log CSV from simulate");
  cmd->add_option("--table", o.table,
                  "scenario table JSON used to recover geometry");
  cmd->add_option("--bin-width", o.bin_width, "speed profile bin width [m]");
  cmd->add_option("--out", o.out, "output directory");
}

int cmd_report(const CLI::App* cmd, ReportOpts& o) {
  Overlay ov{cmd};
  ov.load(o.config);
  ov.get("--episodes", "episodes", o.episodes);
  ov.get("--table", "table", o.table);
  ov.get("--bin-width", "bin_width", o.bin_width);
  ov.get("--out", "out", o.out);

  require_input(o.episodes, "episode log");
  const std::vector<ScenarioSpec> table = load_table_or_default(o.table);
  std::ifstream is(o.episodes);
  const std::vector<EpisodeRecord> records = read_episode_csv(is, table);
  is.close();

  const fs::path dir = resolve_out_dir(o.out);
  json m;
  m["episodes"] = o.episodes;
  m["table"] = o.table.empty() ? "(bundled)" : o.table;
  m["bin_width"] = o.bin_width;
  m["record_count"] = records.size();
  write_manifest(dir, "report", m);

  const MetricTable metrics = aggregate(records);
  { std::ofstream os = open_out(dir / "metrics.csv");
    write_metric_table_csv(os, metrics); }

  const std::vector<PhenomenonResult> checks = phenomenon_checklist(metrics);
  { std::ofstream os = open_out(dir / "checklist.json");
    write_checklist_json(os, checks); }
  { std::ofstream os = open_out(dir / "checklist.txt");
    write_checklist_text(os, checks); }
  { std::ofstream os = open_out(dir / "speed_profiles.csv");
    write_speed_profiles_csv(os, records, o.bin_width); }
  { std::ofstream os = open_out(dir / "cit.csv");
    write_cit_csv(os, records); }

  // Per-variant roughness summary; an instant-speed policy scores far above
  // a stepping one.
  std::map<Variant, std::vector<EpisodeRecord>> by_variant;
  for (const EpisodeRecord& r : records) by_variant[r.variant].push_back(r);
  { std::ofstream os = open_out(dir / "roughness.csv");
    os << "variant,episodes,mean_roughness\n";
    for (const auto& [variant, group] : by_variant)
      os << variant_name(variant) << ',' << group.size() << ','
         << fmt_double(mean_speed_roughness(group)) << '\n'; }

  int evaluable = 0, holding = 0;
  for (const PhenomenonResult& c : checks) {
    evaluable += c.evaluable ? 1 : 0;
    holding += (c.evaluable && c.holds) ? 1 : 0;
  }
  std::cout << "records: " << records.size() << '\n'
            << "checklist: " << holding << '/' << evaluable
            << " evaluable phenomena hold\n"
            << "output: " << dir.string() << '\n';
  return 0;
}

// ------------------------------------------------------ compare-variants --

struct CompareOpts {
  std::string config;
  std::vector<std::string> checkpoints;
  std::string table;
  std::string out = "runs/compare";
  int reps = 20;
  std::uint64_t seed = 1;
  bool single_thread = false;
};

void add_compare(CLI::App& app, CompareOpts& o, CLI::App*& cmd) {
  cmd = app.add_subcommand(
      "compare-variants",
      "matched-scenario rollouts for several checkpoints, with roughness");
  cmd->add_option("--config", o.config, "JSON config file");
  cmd->add_option("checkpoints", o.checkpoints, "checkpoint files");
  cmd->add_option("--table", o.table,
                  "scenario table JSON (bundled conditions when omitted)");
  cmd->add_option("--reps", o.reps, "episodes per condition");
  cmd->add_option("--seed", o.seed, "master seed");
  cmd->add_flag("--single-thread", o.single_thread, "serial episode rollout");
  cmd->add_option("--out", o.out, "output directory");
}

int cmd_compare(const CLI::App* cmd, CompareOpts& o) {
  Overlay ov{cmd};
  ov.load(o.config);
  ov.get("checkpoints", "checkpoints", o.checkpoints);
  ov.get("--table", "table", o.table);
  ov.get("--reps", "reps", o.reps);
  ov.get("--seed", "seed", o.seed);
  ov.get("--single-thread", "single_thread", o.single_thread);
  ov.get("--out", "out", o.out);

  if (o.checkpoints.empty())
    throw std::invalid_argument("at least one checkpoint is required");
  if (o.reps <= 0) throw std::invalid_argument("reps must be positive");
  for (const std::string& path : o.checkpoints)
    require_input(path, "checkpoint");
  const std::vector<ScenarioSpec> table = load_table_or_default(o.table);
  apply_thread_options(o.single_thread, 0);

  // Identical tasks and seeds for every checkpoint, so the contrast is
  // paired.
  const NonPolicyParams params = default_eval_params();
  Rng root(o.seed);
  std::vector<RolloutTask> tasks;
  for (const ScenarioSpec& row : table) {
    for (int r = 0; r < o.reps; ++r) {
      RolloutTask t;
      t.spec = row;
      t.params = params;
      t.seed = root.fork(0xC03B4000ull + tasks.size()).next_u64();
      tasks.push_back(t);
    }
  }

  const fs::path dir = resolve_out_dir(o.out);
  json m;
  m["checkpoints"] = o.checkpoints;
  m["table"] = o.table.empty() ? "(bundled)" : o.table;
  m["reps"] = o.reps;
  m["seed"] = o.seed;
  m["single_thread"] = o.single_thread;
  m["params"] = params_manifest(params);
  write_manifest(dir, "compare-variants", m);

  std::ofstream cmp = open_out(dir / "variants.csv");
  cmp << "checkpoint,variant,episodes,crossed,collision,timeout,mean_return,"
         "mean_roughness\n";
  std::vector<std::pair<std::string, double>> roughness;
  for (std::size_t i = 0; i < o.checkpoints.size(); ++i) {
    const Checkpoint ck = Checkpoint::load(o.checkpoints[i]);
    const std::vector<EpisodeRecord> records = run_episodes(
        ck, tasks, o.single_thread ? ExecMode::Serial : ExecMode::Parallel);
    long crossed = 0, collided = 0, timeout = 0;
    double ret = 0;
    for (const EpisodeRecord& r : records) {
      crossed += r.outcome == Outcome::Crossed;
      collided += r.outcome == Outcome::Collision;
      timeout += r.outcome == Outcome::Timeout;
      ret += r.return_sum;
    }
    const double rough = mean_speed_roughness(records);
    roughness.emplace_back(variant_name(ck.variant), rough);
    cmp << o.checkpoints[i] << ',' << variant_name(ck.variant) << ','
        << records.size() << ',' << crossed << ',' << collided << ','
        << timeout << ','
        << fmt_double(records.empty() ? 0.0 : ret / records.size()) << ','
        << fmt_double(rough) << '\n';

    const std::string tag = std::to_string(i) + "_" + variant_name(ck.variant);
    { std::ofstream os = open_out(dir / ("episodes_" + tag + ".csv"));
      write_episode_csv_header(os);
      for (std::size_t e = 0; e < records.size(); ++e)
        append_episode_csv(os, records[e], e); }
    { std::ofstream os = open_out(dir / ("speed_profiles_" + tag + ".csv"));
      write_speed_profiles_csv(os, records); }
  }
  cmp.close();

  for (const auto& [name, rough] : roughness)
    std::cout << "variant " << name << " mean_roughness " << fmt_double(rough)
              << '\n';
  if (roughness.size() == 2 && roughness[1].second > 0)
    std::cout << "roughness ratio (" << roughness[0].first << "/"
              << roughness[1].first << "): "
              << fmt_double(roughness[0].second / roughness[1].second) << '\n';
  std::cout << "comparison: " << (dir / "variants.csv").string() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pedestrian road-crossing simulator"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  TrainOpts train_opts;
  SimOpts sim_opts;
  CalOpts cal_opts;
  ReportOpts report_opts;
  CompareOpts compare_opts;
  CLI::App *train_cmd, *sim_cmd, *cal_cmd, *report_cmd, *compare_cmd;
  add_train(app, train_opts, train_cmd);
  add_simulate(app, sim_opts, sim_cmd);
  add_calibrate(app, cal_opts, cal_cmd);
  add_report(app, report_opts, report_cmd);
  add_compare(app, compare_opts, compare_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*train_cmd) return cmd_train(train_cmd, train_opts);
    if (*sim_cmd) return cmd_simulate(sim_cmd, sim_opts);
    if (*cal_cmd) return cmd_calibrate(cal_cmd, cal_opts);
    if (*report_cmd) return cmd_report(report_cmd, report_opts);
    if (*compare_cmd) return cmd_compare(compare_cmd, compare_opts);
  } catch (const MissingInput& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const json::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::out_of_range& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 4;
  }
  return 2;
}
