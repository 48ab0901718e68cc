#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <vector>

#include "pedsim/env.hpp"
#include "pedsim/policy.hpp"

namespace pedsim {

struct TrainConfig {
  Variant variant = Variant::SM;
  long total_env_steps = 3'000'000;  // policy decisions, summed over envs
  int n_envs = 8;
  int rollout_len = 2048;  // decisions per env per iteration
  int minibatch = 64;
  int epochs = 10;
  double gamma = 0.99;
  double gae_lambda = 0.95;
  double clip = 0.2;
  double lr = 3e-4;
  double vf_coef = 0.5;
  double ent_coef = 0.0;
  double max_grad_norm = 0.5;
  double adam_eps = 1e-5;
  int hidden1 = 128;
  int hidden2 = 64;
  EnvConfig env;
  bool parallel_envs = true;  // OpenMP fan-out of env stepping
  // Overrides for fixed-task training (sanity checks, benchmarks). When
  // unset, every episode draws a fresh scenario and fresh NonPolicyParams.
  std::optional<ScenarioSpec> fixed_scenario;
  std::optional<NonPolicyParams> fixed_params;
  std::ostream* progress = nullptr;  // optional human-readable progress lines
  int progress_every = 5;            // iterations between progress lines

  void validate() const;  // throws std::invalid_argument
};

struct IterationStats {
  long iteration = 0;
  long env_steps = 0;       // cumulative decisions so far
  long episodes = 0;        // episodes finished during this iteration
  double mean_return = 0;   // over those episodes (NaN when none)
  double mean_length = 0;   // decisions per episode
  double collision_rate = 0;
  double crossed_rate = 0;
  double policy_loss = 0;   // averaged over minibatches
  double value_loss = 0;
  double entropy = 0;
  double clip_fraction = 0;
};

struct LearningCurve {
  std::vector<IterationStats> points;
  void write_csv(std::ostream& os) const;
};

struct RolloutBuffer {
  int n_steps = 0, n_envs = 0;
  Eigen::MatrixXd obs;  // (n_steps * n_envs) x obs_dim, row t * n_envs + e
  Eigen::VectorXi actions;
  Eigen::VectorXd logp, rewards, values, advantages, returns;
  std::vector<std::uint8_t> dones;  // episode ended at this decision

  int index(int t, int e) const { return t * n_envs + e; }
};

// Standard GAE over one trajectory slice. dones[t] marks an episode end at
// step t (no bootstrap across it); bootstrap_value estimates the state after
// the last step and applies only when the slice does not end an episode.
// Timeout truncation is handled upstream by folding gamma * V(terminal
// observation) into that step's reward and marking it done.
Eigen::VectorXd compute_gae(const Eigen::VectorXd& rewards,
                            const Eigen::VectorXd& values,
                            const std::vector<std::uint8_t>& dones,
                            double bootstrap_value, double gamma,
                            double lambda);

struct TrainResult {
  Checkpoint checkpoint;
  LearningCurve curve;
};

// Called after each iteration; useful for periodic checkpointing.
using IterationHook =
    std::function<void(const Checkpoint&, const LearningCurve&)>;

// Throws std::runtime_error on NaN loss or gradient.
TrainResult train(const TrainConfig& cfg, std::uint64_t seed,
                  const IterationHook& hook = {});

// Argmax-action evaluation rollout with a full tick log.
EpisodeRecord greedy_rollout(const Checkpoint& ck, const ScenarioSpec& spec,
                             const NonPolicyParams& params, std::uint64_t seed);

}  // namespace pedsim
