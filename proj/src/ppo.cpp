#include "pedsim/ppo.hpp"

#include <omp.h>

#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

#include "pedsim/csv.hpp"

namespace pedsim {

void TrainConfig::validate() const {
  if (total_env_steps <= 0) throw std::invalid_argument("total_env_steps <= 0");
  if (n_envs <= 0) throw std::invalid_argument("n_envs <= 0");
  if (rollout_len <= 0) throw std::invalid_argument("rollout_len <= 0");
  if (minibatch <= 0) throw std::invalid_argument("minibatch <= 0");
  if (epochs <= 0) throw std::invalid_argument("epochs <= 0");
  if (!(clip > 0 && clip < 1)) throw std::invalid_argument("clip outside (0,1)");
  if (!(gamma > 0 && gamma <= 1)) throw std::invalid_argument("gamma outside (0,1]");
  if (!(gae_lambda > 0 && gae_lambda <= 1))
    throw std::invalid_argument("gae_lambda outside (0,1]");
  if (lr <= 0) throw std::invalid_argument("lr <= 0");
  if (hidden1 <= 0 || hidden2 <= 0) throw std::invalid_argument("bad net width");
}

void LearningCurve::write_csv(std::ostream& os) const {
  os << "iteration,env_steps,episodes,mean_return,mean_length,"
        "collision_rate,crossed_rate,policy_loss,value_loss,entropy,"
        "clip_fraction\n";
  for (const IterationStats& p : points) {
    os << p.iteration << ',' << p.env_steps << ',' << p.episodes << ','
       << fmt_double(p.mean_return) << ',' << fmt_double(p.mean_length) << ','
       << fmt_double(p.collision_rate) << ',' << fmt_double(p.crossed_rate)
       << ',' << fmt_double(p.policy_loss) << ',' << fmt_double(p.value_loss)
       << ',' << fmt_double(p.entropy) << ',' << fmt_double(p.clip_fraction)
       << '\n';
  }
}

Eigen::VectorXd compute_gae(const Eigen::VectorXd& rewards,
                            const Eigen::VectorXd& values,
                            const std::vector<std::uint8_t>& dones,
                            double bootstrap_value, double gamma,
                            double lambda) {
  const int T = static_cast<int>(rewards.size());
  if (values.size() != T || static_cast<int>(dones.size()) != T)
    throw std::invalid_argument("compute_gae: length mismatch");
  Eigen::VectorXd adv(T);
  double gae = 0;
  for (int t = T - 1; t >= 0; --t) {
    const double not_done = dones[t] ? 0.0 : 1.0;
    const double next_value = (t == T - 1) ? bootstrap_value : values(t + 1);
    const double delta =
        rewards(t) + gamma * next_value * not_done - values(t);
    gae = delta + gamma * lambda * not_done * gae;
    adv(t) = gae;
  }
  return adv;
}

namespace {

struct EpisodeTracker {
  double ret = 0;
  long len = 0;
};

// Per-episode inputs are all derived from the master seed and a global
// episode counter, so trajectories are reproducible regardless of how env
// stepping is scheduled across threads.
struct EpisodeSource {
  Rng root;
  std::uint64_t counter = 0;
  const TrainConfig* cfg;

  void start(CrossingEnv& env, Eigen::VectorXd& raw_obs) {
    Rng er = root.fork(0x0E9150DE00000000ull + counter);
    ++counter;
    ScenarioSpec spec = cfg->fixed_scenario ? *cfg->fixed_scenario
                                            : sample_training_scenario(er);
    NonPolicyParams params =
        cfg->fixed_params ? *cfg->fixed_params : NonPolicyParams::sample(er);
    raw_obs = env.reset(spec, params, cfg->variant, er.next_u64());
  }
};

}  // namespace

TrainResult train(const TrainConfig& cfg, std::uint64_t seed,
                  const IterationHook& hook) {
  cfg.validate();
  const Rng root(seed);

  Rng init_rng = root.fork(1);
  const int n_actions = static_cast<int>(cfg.env.actions.speeds.size());
  MlpPolicy net(CrossingEnv::kObsDim, n_actions, cfg.hidden1, cfg.hidden2,
                init_rng);
  ObsNormalizer norm(CrossingEnv::kObsDim);
  AdamOptimizer adam(net.param_count(), cfg.adam_eps);
  Rng action_rng = root.fork(2);
  Rng shuffle_rng = root.fork(3);

  std::vector<CrossingEnv> envs(cfg.n_envs, CrossingEnv(cfg.env));
  std::vector<Eigen::VectorXd> raw_obs(cfg.n_envs);
  std::vector<EpisodeTracker> trackers(cfg.n_envs);
  EpisodeSource source{root, 0, &cfg};
  for (int e = 0; e < cfg.n_envs; ++e) source.start(envs[e], raw_obs[e]);

  RolloutBuffer buf;
  buf.n_steps = cfg.rollout_len;
  buf.n_envs = cfg.n_envs;
  const int total_rows = buf.n_steps * buf.n_envs;
  buf.obs.resize(total_rows, CrossingEnv::kObsDim);
  buf.actions.resize(total_rows);
  buf.logp.resize(total_rows);
  buf.rewards.resize(total_rows);
  buf.values.resize(total_rows);
  buf.advantages.resize(total_rows);
  buf.returns.resize(total_rows);
  buf.dones.assign(total_rows, 0);

  TrainResult result;
  long steps_done = 0;
  long iteration = 0;

  while (steps_done < cfg.total_env_steps) {
    ++iteration;
    IterationStats it;
    it.iteration = iteration;
    double ret_sum = 0, len_sum = 0;
    long collided = 0, crossed = 0;

    std::vector<CrossingEnv::StepResult> results(cfg.n_envs);
    for (int t = 0; t < cfg.rollout_len; ++t) {
      // choose actions (serial, deterministic draw order)
      for (int e = 0; e < cfg.n_envs; ++e) {
        norm.update(raw_obs[e]);
        const Eigen::VectorXd z = norm.normalize(raw_obs[e]);
        const int row = buf.index(t, e);
        buf.obs.row(row) = z.transpose();
        double logp = 0, value = 0;
        buf.actions(row) = net.sample_action(z, action_rng, logp, value);
        buf.logp(row) = logp;
        buf.values(row) = value;
      }

#pragma omp parallel for schedule(static) if (cfg.parallel_envs)
      for (int e = 0; e < cfg.n_envs; ++e)
        results[e] = envs[e].step(buf.actions(buf.index(t, e)));

      for (int e = 0; e < cfg.n_envs; ++e) {
        const int row = buf.index(t, e);
        double reward = results[e].reward;
        if (results[e].truncated)
          reward += cfg.gamma * net.value(norm.normalize(results[e].obs));
        buf.rewards(row) = reward;
        buf.dones[row] = results[e].done ? 1 : 0;
        trackers[e].ret += results[e].reward;
        trackers[e].len += 1;
        if (results[e].done) {
          ++it.episodes;
          ret_sum += trackers[e].ret;
          len_sum += static_cast<double>(trackers[e].len);
          if (envs[e].outcome() == Outcome::Collision) ++collided;
          if (envs[e].outcome() == Outcome::Crossed) ++crossed;
          trackers[e] = EpisodeTracker{};
          source.start(envs[e], raw_obs[e]);
        } else {
          raw_obs[e] = results[e].obs;
        }
      }
    }
    steps_done += static_cast<long>(cfg.rollout_len) * cfg.n_envs;

    // GAE per env over its slice of the buffer
    for (int e = 0; e < cfg.n_envs; ++e) {
      Eigen::VectorXd r(cfg.rollout_len), v(cfg.rollout_len);
      std::vector<std::uint8_t> d(cfg.rollout_len);
      for (int t = 0; t < cfg.rollout_len; ++t) {
        const int row = buf.index(t, e);
        r(t) = buf.rewards(row);
        v(t) = buf.values(row);
        d[t] = buf.dones[row];
      }
      const double bootstrap = net.value(norm.normalize(raw_obs[e]));
      const Eigen::VectorXd adv =
          compute_gae(r, v, d, bootstrap, cfg.gamma, cfg.gae_lambda);
      for (int t = 0; t < cfg.rollout_len; ++t) {
        const int row = buf.index(t, e);
        buf.advantages(row) = adv(t);
        buf.returns(row) = adv(t) + v(t);
      }
    }

    // clipped-objective epochs
    Eigen::VectorXd theta = net.to_vector();
    std::vector<int> order(total_rows);
    for (int i = 0; i < total_rows; ++i) order[i] = i;
    double pl = 0, vl = 0, ent = 0, cf = 0;
    long n_batches = 0;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
      for (int i = total_rows - 1; i > 0; --i)
        std::swap(order[i], order[shuffle_rng.uniform_int(i + 1)]);
      for (int start = 0; start + cfg.minibatch <= total_rows;
           start += cfg.minibatch) {
        const int B = cfg.minibatch;
        Eigen::MatrixXd X(B, CrossingEnv::kObsDim);
        Eigen::VectorXi act(B);
        Eigen::VectorXd old_logp(B), adv(B), ret(B);
        for (int i = 0; i < B; ++i) {
          const int row = order[start + i];
          X.row(i) = buf.obs.row(row);
          act(i) = buf.actions(row);
          old_logp(i) = buf.logp(row);
          adv(i) = buf.advantages(row);
          ret(i) = buf.returns(row);
        }
        const double mu = adv.mean();
        const double sd = std::sqrt((adv.array() - mu).square().sum() /
                                    std::max(B - 1, 1));
        adv = (adv.array() - mu) / (sd + 1e-8);

        Eigen::VectorXd grad;
        const MlpPolicy::LossStats ls = net.ppo_loss_grad(
            X, act, old_logp, adv, ret, cfg.clip, cfg.vf_coef, cfg.ent_coef,
            grad);
        if (!std::isfinite(ls.total) || !grad.allFinite())
          throw std::runtime_error(
              "ppo: non-finite loss or gradient at iteration " +
              std::to_string(iteration));
        clip_grad_norm(grad, cfg.max_grad_norm);
        adam.step(theta, grad, cfg.lr);
        net.from_vector(theta);
        pl += ls.policy;
        vl += ls.value;
        ent += ls.entropy;
        cf += ls.clip_fraction;
        ++n_batches;
      }
    }

    it.env_steps = steps_done;
    it.mean_return = it.episodes ? ret_sum / it.episodes
                                 : std::numeric_limits<double>::quiet_NaN();
    it.mean_length = it.episodes ? len_sum / it.episodes
                                 : std::numeric_limits<double>::quiet_NaN();
    it.collision_rate =
        it.episodes ? static_cast<double>(collided) / it.episodes : 0;
    it.crossed_rate =
        it.episodes ? static_cast<double>(crossed) / it.episodes : 0;
    it.policy_loss = n_batches ? pl / n_batches : 0;
    it.value_loss = n_batches ? vl / n_batches : 0;
    it.entropy = n_batches ? ent / n_batches : 0;
    it.clip_fraction = n_batches ? cf / n_batches : 0;
    result.curve.points.push_back(it);

    if (cfg.progress && (iteration % cfg.progress_every == 0)) {
      *cfg.progress << "iter " << iteration << " steps " << steps_done
                    << " mean_return " << fmt_double(it.mean_return)
                    << " collision_rate " << fmt_double(it.collision_rate)
                    << "\n";
      cfg.progress->flush();
    }

    if (hook) {
      Checkpoint snap;
      snap.net = net;
      snap.norm = norm;
      snap.variant = cfg.variant;
      snap.env = cfg.env;
      snap.obs_layout_hash = CrossingEnv::observation_layout_hash();
      hook(snap, result.curve);
    }
  }

  result.checkpoint.net = net;
  result.checkpoint.norm = norm;
  result.checkpoint.variant = cfg.variant;
  result.checkpoint.env = cfg.env;
  result.checkpoint.obs_layout_hash = CrossingEnv::observation_layout_hash();
  return result;
}

EpisodeRecord greedy_rollout(const Checkpoint& ck, const ScenarioSpec& spec,
                             const NonPolicyParams& params,
                             std::uint64_t seed) {
  if (ck.obs_layout_hash != CrossingEnv::observation_layout_hash())
    throw std::runtime_error("checkpoint observation layout mismatch");
  if (ck.net.n_actions() != static_cast<int>(ck.env.actions.speeds.size()))
    throw std::runtime_error("checkpoint action-set mismatch");
  CrossingEnv env(ck.env);
  Eigen::VectorXd obs = env.reset(spec, params, ck.variant, seed);
  while (!env.done()) {
    const int a = ck.net.argmax_action(ck.norm.normalize(obs));
    obs = env.step(a).obs;
  }
  return env.take_record();
}

}  // namespace pedsim
