#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>

#include "pedsim/env.hpp"
#include "pedsim/rng.hpp"

namespace pedsim {

// Two-hidden-layer tanh MLP with a shared trunk and separate policy/value
// heads. All math is double precision; forward and backward passes are
// hand-written so the gradient can be checked against finite differences.
class MlpPolicy {
 public:
  MlpPolicy() = default;
  MlpPolicy(int obs_dim, int n_actions, int hidden1, int hidden2, Rng& rng);

  // Rows of X are observations. logits: B x A, values: B.
  void forward(const Eigen::MatrixXd& X, Eigen::MatrixXd& logits,
               Eigen::VectorXd& values) const;

  Eigen::VectorXd action_logits(const Eigen::VectorXd& obs) const;
  double value(const Eigen::VectorXd& obs) const;
  int argmax_action(const Eigen::VectorXd& obs) const;
  // Categorical draw; fills the sampled action's log-prob and the value.
  int sample_action(const Eigen::VectorXd& obs, Rng& rng, double& logp,
                    double& value) const;

  struct LossStats {
    double total = 0;
    double policy = 0;
    double value = 0;
    double entropy = 0;
    double clip_fraction = 0;
  };

  // Clipped-surrogate PPO loss over one minibatch and its gradient with
  // respect to the flattened parameter vector.
  // loss = -mean(min(r A, clip(r) A)) + vf_coef * mean((v - ret)^2)
  //        - ent_coef * mean(entropy)
  LossStats ppo_loss_grad(const Eigen::MatrixXd& X,
                          const Eigen::VectorXi& actions,
                          const Eigen::VectorXd& old_logp,
                          const Eigen::VectorXd& advantages,
                          const Eigen::VectorXd& returns, double clip,
                          double vf_coef, double ent_coef,
                          Eigen::VectorXd& grad) const;

  int param_count() const;
  Eigen::VectorXd to_vector() const;
  void from_vector(const Eigen::VectorXd& theta);

  int obs_dim() const { return static_cast<int>(W1_.cols()); }
  int n_actions() const { return static_cast<int>(Wp_.rows()); }
  int hidden1() const { return static_cast<int>(W1_.rows()); }
  int hidden2() const { return static_cast<int>(W2_.rows()); }

  // Serialized in this order by to_vector/from_vector and the checkpoint.
  Eigen::MatrixXd W1_, W2_, Wp_;
  Eigen::VectorXd b1_, b2_, bp_;
  Eigen::RowVectorXd Wv_;
  double bv_ = 0;
};

// Log-probabilities of each row of logits (log-softmax).
Eigen::MatrixXd log_softmax_rows(const Eigen::MatrixXd& logits);

// Running observation standardizer (Welford over all seen observations).
// normalize() output is clipped to [-clip, clip] per component.
struct ObsNormalizer {
  Eigen::VectorXd mean;
  Eigen::VectorXd var;  // population variance estimate
  double count = 0;
  double clip = 10.0;

  explicit ObsNormalizer(int dim = 0);
  void update(const Eigen::VectorXd& x);
  Eigen::VectorXd normalize(const Eigen::VectorXd& x) const;
};

struct AdamOptimizer {
  Eigen::VectorXd m, v;
  long t = 0;
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-5;

  explicit AdamOptimizer(int n = 0, double eps_ = 1e-5);
  void step(Eigen::VectorXd& params, const Eigen::VectorXd& grad, double lr);
};

// Scales grad in place to max_norm when its L2 norm exceeds it; returns the
// pre-clip norm.
double clip_grad_norm(Eigen::VectorXd& grad, double max_norm);

// Everything needed to reproduce greedy behavior: network, frozen
// normalizer, variant, action set and env constants, plus a layout hash so
// stale files are rejected loudly.
struct Checkpoint {
  MlpPolicy net;
  ObsNormalizer norm;
  Variant variant = Variant::SM;
  EnvConfig env;
  std::uint64_t obs_layout_hash = 0;

  void save(const std::string& path) const;           // throws on I/O failure
  static Checkpoint load(const std::string& path);    // throws on mismatch
};

}  // namespace pedsim
