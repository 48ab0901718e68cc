#include "pedsim/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "pedsim/gp.hpp"

namespace pedsim {

Eigen::VectorXd param_box_lower() { return Eigen::VectorXd::Zero(5); }

Eigen::VectorXd param_box_upper() {
  Eigen::VectorXd u(5);
  u << NonPolicyParams::kSigmaMax, NonPolicyParams::kSigmaMax,
      NonPolicyParams::kTimePressureMax, NonPolicyParams::kEffortMax,
      NonPolicyParams::kLoomingMax;
  return u;
}

Eigen::VectorXd params_to_vector(const NonPolicyParams& p) {
  Eigen::VectorXd v(5);
  v << p.sigma_v_day, p.sigma_v_night, p.time_pressure_gain, p.effort_weight,
      p.looming_weight;
  return v;
}

NonPolicyParams params_from_vector(const Eigen::VectorXd& v) {
  if (v.size() != 5) throw std::invalid_argument("param vector must have 5 entries");
  NonPolicyParams p;
  p.sigma_v_day = v(0);
  p.sigma_v_night = v(1);
  p.time_pressure_gain = v(2);
  p.effort_weight = v(3);
  p.looming_weight = v(4);
  return p;
}

namespace {

// Normalizers accumulate over both tables so the measure is symmetric.
struct MaxAcc {
  double m = 0;
  bool any = false;
  void add(double v) {
    m = std::max(m, std::abs(v));
    any = true;
  }
  double norm() const { return (any && m > 0) ? m : 1.0; }
};

void acc_rates(MaxAcc& acc, const MetricTable& t, bool yielding) {
  for (const auto& [key, row] : t.rows) {
    if (key.yielding != yielding) continue;
    const auto r = yielding ? row.early_share() : row.gap_acceptance();
    if (r) acc.add(*r);
  }
}

template <typename Sel>
void acc_cells(MaxAcc& acc, const MetricTable& t, Sel sel) {
  for (const auto& [key, row] : t.rows) {
    (void)key;
    for (const CellStats* c : sel(row))
      if (c->n > 0) acc.add(c->mean);
  }
}

}  // namespace

double discrepancy(const MetricTable& observed, const MetricTable& simulated) {
  if (observed.rows.size() != simulated.rows.size())
    throw std::invalid_argument("discrepancy: condition sets differ");
  for (const auto& [key, row] : observed.rows) {
    (void)row;
    if (!simulated.rows.count(key))
      throw std::invalid_argument("discrepancy: condition sets differ");
  }

  auto cit_cells = [](const ConditionMetrics& m) {
    return std::array<const CellStats*, 3>{&m.cit_cross, &m.cit_early,
                                           &m.cit_late};
  };
  auto speed_cells = [](const ConditionMetrics& m) {
    return std::array<const CellStats*, 3>{&m.speed_cross, &m.speed_early,
                                           &m.speed_late};
  };

  MaxAcc g_acc, e_acc, cit_acc, v_acc;
  for (const MetricTable* t : {&observed, &simulated}) {
    acc_rates(g_acc, *t, false);
    acc_rates(e_acc, *t, true);
    acc_cells(cit_acc, *t, cit_cells);
    acc_cells(v_acc, *t, speed_cells);
  }
  const double g_max = g_acc.norm();
  const double e_max = e_acc.norm();
  const double cit_max = cit_acc.norm();
  const double v_max = v_acc.norm();

  double sum_g = 0, sum_e = 0, sum_cit = 0, sum_v = 0;
  for (const auto& [key, obs] : observed.rows) {
    const ConditionMetrics& sim = simulated.rows.at(key);
    if (!key.yielding) {
      const auto go = obs.gap_acceptance(), gs = sim.gap_acceptance();
      if (go && gs) sum_g += std::abs(*go - *gs);
    } else {
      const auto eo = obs.early_share(), es = sim.early_share();
      if (eo && es) sum_e += std::abs(*eo - *es);
    }
    const auto oc = cit_cells(obs), sc = cit_cells(sim);
    for (std::size_t i = 0; i < oc.size(); ++i)
      if (oc[i]->n > 0 && sc[i]->n > 0)
        sum_cit += std::abs(oc[i]->mean - sc[i]->mean);
    const auto ov = speed_cells(obs), sv = speed_cells(sim);
    for (std::size_t i = 0; i < ov.size(); ++i)
      if (ov[i]->n > 0 && sv[i]->n > 0)
        sum_v += std::abs(ov[i]->mean - sv[i]->mean);
  }

  const double total =
      sum_g / g_max + sum_e / e_max + sum_cit / cit_max + sum_v / v_max;
  return std::log(std::max(total, 1e-9));
}

MetricTable simulate_participant(const Checkpoint& ck,
                                 const NonPolicyParams& point,
                                 const std::vector<ScenarioSpec>& table,
                                 int reps, std::uint64_t seed, ExecMode mode) {
  if (reps < 1) throw std::invalid_argument("simulate_participant: reps < 1");
  point.validate();
  const Rng root(seed);
  std::vector<RolloutTask> tasks;
  tasks.reserve(table.size() * 2 * reps);
  std::uint64_t idx = 0;
  for (const ScenarioSpec& row : table) {
    for (const bool night : {false, true}) {
      ScenarioSpec spec = row;
      spec.night = night;
      for (int r = 0; r < reps; ++r) {
        RolloutTask t;
        t.spec = spec;
        t.params = point;
        t.seed = root.fork(idx).seed();
        ++idx;
        tasks.push_back(t);
      }
    }
  }
  const std::vector<EpisodeRecord> records = run_episodes(ck, tasks, mode);
  return aggregate(records);
}

namespace {

std::vector<Eigen::VectorXd> latin_hypercube(int n, const Eigen::VectorXd& lo,
                                             const Eigen::VectorXd& hi,
                                             Rng& rng) {
  const int d = static_cast<int>(lo.size());
  std::vector<std::vector<int>> strata(d, std::vector<int>(n));
  for (int k = 0; k < d; ++k) {
    std::iota(strata[k].begin(), strata[k].end(), 0);
    for (int i = n - 1; i > 0; --i)
      std::swap(strata[k][i], strata[k][rng.uniform_int(i + 1)]);
  }
  std::vector<Eigen::VectorXd> pts(n, Eigen::VectorXd(d));
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < d; ++k) {
      const double u = (strata[k][i] + rng.uniform()) / n;
      pts[i](k) = lo(k) + u * (hi(k) - lo(k));
    }
  return pts;
}

Eigen::VectorXd clamp_box(Eigen::VectorXd x, const Eigen::VectorXd& lo,
                          const Eigen::VectorXd& hi) {
  for (int k = 0; k < x.size(); ++k) x(k) = std::clamp(x(k), lo(k), hi(k));
  return x;
}

double lcb(const GpSurrogate& gp, const Eigen::VectorXd& x, double kappa) {
  double m = 0, v = 0;
  gp.predict(x, m, v);
  return m - kappa * std::sqrt(std::max(v, 0.0));
}

// Multi-start pattern search of the LCB inside the box.
Eigen::VectorXd minimize_lcb(const GpSurrogate& gp, const BolfiOptions& opt,
                             const Eigen::VectorXd& lo,
                             const Eigen::VectorXd& hi,
                             const Eigen::VectorXd& incumbent, Rng& rng) {
  const int d = static_cast<int>(lo.size());
  Eigen::VectorXd best_x;
  double best_f = std::numeric_limits<double>::infinity();
  std::vector<Eigen::VectorXd> starts;
  for (int c = 0; c < opt.acq_candidates; ++c) {
    Eigen::VectorXd x(d);
    for (int k = 0; k < d; ++k) x(k) = rng.uniform(lo(k), hi(k));
    const double f = lcb(gp, x, opt.kappa);
    if (f < best_f) {
      best_f = f;
      best_x = x;
    }
    if (c < 3) starts.push_back(x);
  }
  starts.push_back(best_x);
  starts.push_back(clamp_box(incumbent, lo, hi));

  for (Eigen::VectorXd x : starts) {
    double f = lcb(gp, x, opt.kappa);
    Eigen::VectorXd step = 0.1 * (hi - lo);
    for (int it = 0; it < opt.acq_refine_iters; ++it) {
      bool improved = false;
      for (int k = 0; k < d; ++k) {
        for (const double dir : {+1.0, -1.0}) {
          Eigen::VectorXd xt = x;
          xt(k) = std::clamp(x(k) + dir * step(k), lo(k), hi(k));
          const double ft = lcb(gp, xt, opt.kappa);
          if (ft < f - 1e-12) {
            f = ft;
            x = xt;
            improved = true;
          }
        }
      }
      if (!improved) {
        step *= 0.5;
        if (step.maxCoeff() < 1e-4 * (hi - lo).maxCoeff()) break;
      }
    }
    if (f < best_f) {
      best_f = f;
      best_x = x;
    }
  }
  return best_x;
}

}  // namespace

BolfiResult bolfi_minimize(const Objective& objective, const BolfiOptions& opt,
                           std::uint64_t seed, const TraceHook& hook) {
  if (opt.init < 2) throw std::invalid_argument("bolfi: init < 2");
  if (opt.budget < 0) throw std::invalid_argument("bolfi: budget < 0");
  const Eigen::VectorXd lo = param_box_lower();
  const Eigen::VectorXd hi = param_box_upper();
  const Rng root(seed);
  Rng design_rng = root.fork(1);

  BolfiResult res;
  res.best_value = std::numeric_limits<double>::infinity();
  Eigen::MatrixXd X(opt.init + opt.budget, lo.size());
  Eigen::VectorXd y(opt.init + opt.budget);
  int n = 0;

  auto evaluate = [&](const Eigen::VectorXd& x, bool init_phase) {
    const NonPolicyParams p = params_from_vector(x);
    const double f = objective(p);
    X.row(n) = x.transpose();
    y(n) = f;
    if (f < res.best_value) {
      res.best_value = f;
      res.best = p;
    }
    BolfiTracePoint tp;
    tp.index = n;
    tp.init_phase = init_phase;
    tp.point = p;
    tp.value = f;
    tp.best_so_far = res.best_value;
    res.trace.push_back(tp);
    if (hook) hook(tp);
    ++n;
  };

  for (const Eigen::VectorXd& x :
       latin_hypercube(opt.init, lo, hi, design_rng))
    evaluate(x, true);

  for (int k = 0; k < opt.budget; ++k) {
    const GpSurrogate gp = GpSurrogate::fit(
        X.topRows(n), y.head(n), root.fork(100 + k).seed(), opt.gp_restarts,
        opt.gp_iters);
    Rng acq_rng = root.fork(1000 + k);
    const Eigen::VectorXd x =
        minimize_lcb(gp, opt, lo, hi, params_to_vector(res.best), acq_rng);
    evaluate(x, false);
  }
  return res;
}

BolfiResult bolfi_run(const Checkpoint& ck, const MetricTable& observed,
                      const std::vector<ScenarioSpec>& table,
                      const BolfiOptions& opt, std::uint64_t seed,
                      const TraceHook& hook) {
  const Rng root(seed);
  std::uint64_t eval_counter = 0;
  Objective objective = [&](const NonPolicyParams& p) {
    const std::uint64_t eval_seed = root.fork(0xCA11B000 + eval_counter).seed();
    ++eval_counter;
    const MetricTable sim =
        simulate_participant(ck, p, table, opt.reps, eval_seed, opt.mode);
    return discrepancy(observed, sim);
  };
  return bolfi_minimize(objective, opt, root.fork(7).seed(), hook);
}

}  // namespace pedsim
