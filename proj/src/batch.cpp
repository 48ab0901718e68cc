#include "pedsim/batch.hpp"

#include <omp.h>

namespace pedsim {

std::vector<EpisodeRecord> run_episodes(const Checkpoint& ck,
                                        std::span<const RolloutTask> tasks,
                                        ExecMode mode) {
  std::vector<EpisodeRecord> out(tasks.size());
  const auto n = static_cast<std::int64_t>(tasks.size());
  if (mode == ExecMode::Serial) {
    for (std::int64_t i = 0; i < n; ++i)
      out[i] = greedy_rollout(ck, tasks[i].spec, tasks[i].params, tasks[i].seed);
    return out;
  }
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t i = 0; i < n; ++i)
    out[i] = greedy_rollout(ck, tasks[i].spec, tasks[i].params, tasks[i].seed);
  return out;
}

}  // namespace pedsim
