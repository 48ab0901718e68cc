#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "pedsim/batch.hpp"
#include "pedsim/metrics.hpp"

namespace pedsim {

// Parameter box searched by calibration, in NonPolicyParams field order
// (sigma_day, sigma_night, time_pressure_gain, effort_weight, looming_weight).
Eigen::VectorXd param_box_lower();
Eigen::VectorXd param_box_upper();
Eigen::VectorXd params_to_vector(const NonPolicyParams& p);
NonPolicyParams params_from_vector(const Eigen::VectorXd& v);

// log of the normalized sum of absolute metric differences across matching
// condition cells. Maxima taken over both tables so the result is symmetric;
// cells undefined on either side are skipped; zero maxima fall back to
// divisor 1; the sum is floored at 1e-9 before the log. Throws when
// condition keys differ.
double discrepancy(const MetricTable& observed, const MetricTable& simulated);

// reps greedy rollouts per table row and per day/night block (the row's
// night flag is overridden), aggregated into a MetricTable.
MetricTable simulate_participant(const Checkpoint& ck,
                                 const NonPolicyParams& point,
                                 const std::vector<ScenarioSpec>& table,
                                 int reps, std::uint64_t seed,
                                 ExecMode mode = ExecMode::Parallel);

struct BolfiOptions {
  int budget = 80;  // acquisition evaluations after initialization
  int init = 20;    // space-filling initial evaluations
  double kappa = 2.0;
  int reps = 20;
  ExecMode mode = ExecMode::Parallel;
  int gp_restarts = 4;
  int gp_iters = 150;
  int acq_candidates = 512;
  int acq_refine_iters = 60;
};

struct BolfiTracePoint {
  int index = 0;  // evaluation order, 0-based
  bool init_phase = false;
  NonPolicyParams point;
  double value = 0;         // discrepancy at this point
  double best_so_far = 0;   // running minimum
};

struct BolfiResult {
  NonPolicyParams best;
  double best_value = 0;
  std::vector<BolfiTracePoint> trace;
};

using Objective = std::function<double(const NonPolicyParams&)>;
using TraceHook = std::function<void(const BolfiTracePoint&)>;

// GP-surrogate minimization: Latin-hypercube initialization, then `budget`
// lower-confidence-bound acquisitions (mu - kappa * sigma, multi-start local
// search inside the box). The hook fires after every evaluation so callers
// can persist the trace before any later failure.
BolfiResult bolfi_minimize(const Objective& objective, const BolfiOptions& opt,
                           std::uint64_t seed, const TraceHook& hook = {});

// Full pipeline: objective = discrepancy(observed, simulate_participant(...)).
BolfiResult bolfi_run(const Checkpoint& ck, const MetricTable& observed,
                      const std::vector<ScenarioSpec>& table,
                      const BolfiOptions& opt, std::uint64_t seed,
                      const TraceHook& hook = {});

}  // namespace pedsim
