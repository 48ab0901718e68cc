#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "pedsim/policy.hpp"
#include "pedsim/ppo.hpp"

namespace pedsim {

enum class ExecMode { Serial, Parallel };

struct RolloutTask {
  ScenarioSpec spec;
  NonPolicyParams params;
  std::uint64_t seed = 0;
};

// Greedy-policy rollouts for a batch of independent tasks. The parallel
// path distributes episodes across OpenMP threads and writes results by
// task index, so it is bit-identical to the serial reference; a test holds
// the two paths to exact equality.
std::vector<EpisodeRecord> run_episodes(const Checkpoint& ck,
                                        std::span<const RolloutTask> tasks,
                                        ExecMode mode);

}  // namespace pedsim
