// Times the batch episode rollout in serial reference mode against the
// OpenMP path on an identical task list and cross-checks the results.
#include <omp.h>

#include <chrono>
#include <cstdlib>
#include <iostream>
#include <vector>

#include "pedsim/batch.hpp"

using namespace pedsim;
using clock_type = std::chrono::steady_clock;

namespace {

double seconds_since(clock_type::time_point t0) {
  return std::chrono::duration<double>(clock_type::now() - t0).count();
}

}  // namespace

int main(int argc, char** argv) {
  const int n_episodes = argc > 1 ? std::atoi(argv[1]) : 256;
  if (n_episodes <= 0) {
    std::cerr << "usage: bench_rollouts [n_episodes]\n";
    return 2;
  }

  Rng rng(2718);
  Checkpoint ck;
  ck.net = MlpPolicy(CrossingEnv::kObsDim, 21, 128, 64, rng);
  ck.norm = ObsNormalizer(CrossingEnv::kObsDim);
  ck.variant = Variant::SM;
  ck.obs_layout_hash = CrossingEnv::observation_layout_hash();

  std::vector<RolloutTask> tasks;
  for (int i = 0; i < n_episodes; ++i) {
    RolloutTask t;
    t.spec = sample_training_scenario(rng);
    t.params = NonPolicyParams::sample(rng);
    t.seed = rng.next_u64();
    tasks.push_back(t);
  }

  // Warm-up pass so neither timing pays first-touch costs.
  run_episodes(ck, std::vector<RolloutTask>(tasks.begin(),
                                            tasks.begin() + std::min(8, n_episodes)),
               ExecMode::Serial);

  const auto t_serial = clock_type::now();
  const auto serial = run_episodes(ck, tasks, ExecMode::Serial);
  const double s_serial = seconds_since(t_serial);

  const auto t_parallel = clock_type::now();
  const auto parallel = run_episodes(ck, tasks, ExecMode::Parallel);
  const double s_parallel = seconds_since(t_parallel);

  long mismatches = 0;
  long total_ticks = 0;
  for (int i = 0; i < n_episodes; ++i) {
    total_ticks += static_cast<long>(serial[i].ticks.size());
    if (serial[i].outcome != parallel[i].outcome ||
        serial[i].return_sum != parallel[i].return_sum ||
        serial[i].ticks.size() != parallel[i].ticks.size())
      ++mismatches;
  }

  std::cout << "episodes:        " << n_episodes << " (" << total_ticks
            << " ticks)\n"
            << "threads:         " << omp_get_max_threads() << '\n'
            << "serial:          " << s_serial << " s ("
            << n_episodes / s_serial << " ep/s)\n"
            << "openmp:          " << s_parallel << " s ("
            << n_episodes / s_parallel << " ep/s)\n"
            << "speedup:         " << s_serial / s_parallel << "x\n"
            << "mismatches:      " << mismatches << '\n';
  return mismatches == 0 ? 0 : 1;
}
