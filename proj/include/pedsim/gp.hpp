#pragma once

#include <Eigen/Dense>
#include <cstdint>

namespace pedsim {

// Log-parameterized squared-exponential ARD kernel plus observation noise.
struct GpHyper {
  Eigen::VectorXd log_length;  // per input dimension
  double log_signal = 0;       // log of signal sd
  double log_noise = std::log(0.1);
};

// Exact GP regression on a small point set (calibration uses ~100 points).
// Targets are standardized internally; predictions are returned in the
// original units. Hyperparameters are fit by Adam ascent on the marginal
// likelihood with analytic gradients and random restarts.
class GpSurrogate {
 public:
  static GpSurrogate fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                         std::uint64_t seed, int restarts = 6,
                         int iters = 200);

  // Latent-function posterior (noise not added to var).
  void predict(const Eigen::VectorXd& x, double& mean, double& var) const;

  double log_marginal() const { return loglik_; }
  const GpHyper& hyper() const { return hyper_; }
  double jitter() const { return jitter_; }

  // Negative marginal log-likelihood of standardized targets and its
  // gradient in (log_length..., log_signal, log_noise) order. Exposed so the
  // gradient can be finite-difference checked.
  static double neg_log_marginal(const Eigen::MatrixXd& X,
                                 const Eigen::VectorXd& y, const GpHyper& h,
                                 Eigen::VectorXd* grad);

 private:
  Eigen::MatrixXd X_;
  Eigen::VectorXd y_std_;  // standardized targets
  double y_mean_ = 0, y_sd_ = 1;
  GpHyper hyper_;
  Eigen::MatrixXd chol_L_;
  Eigen::VectorXd alpha_;
  double loglik_ = 0;
  double jitter_ = 0;

  void finalize();  // factorize at hyper_ and cache alpha
  Eigen::VectorXd kernel_row(const Eigen::VectorXd& x) const;
};

}  // namespace pedsim
