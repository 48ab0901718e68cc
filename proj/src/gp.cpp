#include "pedsim/gp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "pedsim/rng.hpp"

namespace pedsim {

namespace {

constexpr double kLogLo = -6.9;  // ~1e-3
constexpr double kLogHi = 6.9;   // ~1e3

Eigen::MatrixXd kernel_matrix(const Eigen::MatrixXd& X, const GpHyper& h) {
  const int n = static_cast<int>(X.rows());
  const int d = static_cast<int>(X.cols());
  const double sf2 = std::exp(2.0 * h.log_signal);
  const Eigen::VectorXd inv_l2 =
      (-2.0 * h.log_length.array()).exp();  // 1 / length^2
  Eigen::MatrixXd K(n, n);
  for (int i = 0; i < n; ++i) {
    K(i, i) = sf2;
    for (int j = i + 1; j < n; ++j) {
      double q = 0;
      for (int k = 0; k < d; ++k) {
        const double diff = X(i, k) - X(j, k);
        q += diff * diff * inv_l2(k);
      }
      K(i, j) = K(j, i) = sf2 * std::exp(-0.5 * q);
    }
  }
  return K;
}

// Cholesky with escalating diagonal jitter; throws when 1e-4 is not enough.
Eigen::LLT<Eigen::MatrixXd> chol_with_jitter(const Eigen::MatrixXd& K,
                                             double& jitter_used) {
  double jitter = 0;
  for (int attempt = 0; attempt < 8; ++attempt) {
    Eigen::MatrixXd Kj = K;
    if (jitter > 0)
      Kj.diagonal().array() += jitter;
    Eigen::LLT<Eigen::MatrixXd> llt(Kj);
    if (llt.info() == Eigen::Success) {
      jitter_used = jitter;
      return llt;
    }
    jitter = (jitter == 0) ? 1e-10 : jitter * 10.0;
    if (jitter > 1e-4) break;
  }
  throw std::runtime_error("gp: kernel matrix not positive definite at jitter 1e-4");
}

}  // namespace

double GpSurrogate::neg_log_marginal(const Eigen::MatrixXd& X,
                                     const Eigen::VectorXd& y,
                                     const GpHyper& h, Eigen::VectorXd* grad) {
  const int n = static_cast<int>(X.rows());
  const int d = static_cast<int>(X.cols());
  const Eigen::MatrixXd Kf = kernel_matrix(X, h);
  const double sn2 = std::exp(2.0 * h.log_noise);
  Eigen::MatrixXd K = Kf;
  K.diagonal().array() += sn2;
  double jitter = 0;
  const Eigen::LLT<Eigen::MatrixXd> llt = chol_with_jitter(K, jitter);
  const Eigen::VectorXd alpha = llt.solve(y);
  const Eigen::MatrixXd L = llt.matrixL();
  double logdet = 0;
  for (int i = 0; i < n; ++i) logdet += 2.0 * std::log(L(i, i));
  const double nll = 0.5 * y.dot(alpha) + 0.5 * logdet +
                     0.5 * n * std::log(2.0 * 3.14159265358979323846);
  if (grad) {
    const Eigen::MatrixXd Kinv =
        llt.solve(Eigen::MatrixXd::Identity(n, n));
    // d nll / d theta = -1/2 tr((alpha alpha^T - K^-1) dK/dtheta)
    const Eigen::MatrixXd W = alpha * alpha.transpose() - Kinv;
    grad->resize(d + 2);
    const Eigen::VectorXd inv_l2 = (-2.0 * h.log_length.array()).exp();
    for (int k = 0; k < d; ++k) {
      double s = 0;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          const double diff = X(i, k) - X(j, k);
          s += W(i, j) * Kf(i, j) * diff * diff * inv_l2(k);
        }
      (*grad)(k) = -0.5 * s;
    }
    (*grad)(d) = -0.5 * (W.array() * (2.0 * Kf).array()).sum();
    (*grad)(d + 1) = -0.5 * W.trace() * 2.0 * sn2;
  }
  return nll;
}

void GpSurrogate::finalize() {
  const int n = static_cast<int>(X_.rows());
  Eigen::MatrixXd K = kernel_matrix(X_, hyper_);
  K.diagonal().array() += std::exp(2.0 * hyper_.log_noise);
  const Eigen::LLT<Eigen::MatrixXd> llt = chol_with_jitter(K, jitter_);
  chol_L_ = llt.matrixL();
  alpha_ = llt.solve(y_std_);
  double logdet = 0;
  for (int i = 0; i < n; ++i) logdet += 2.0 * std::log(chol_L_(i, i));
  loglik_ = -0.5 * y_std_.dot(alpha_) - 0.5 * logdet -
            0.5 * n * std::log(2.0 * 3.14159265358979323846);
}

GpSurrogate GpSurrogate::fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                             std::uint64_t seed, int restarts, int iters) {
  if (X.rows() < 2) throw std::invalid_argument("gp: need at least 2 points");
  if (X.rows() != y.size()) throw std::invalid_argument("gp: X/y mismatch");

  GpSurrogate gp;
  gp.X_ = X;
  gp.y_mean_ = y.mean();
  const double var =
      (y.array() - gp.y_mean_).square().sum() / std::max<int>(1, y.size() - 1);
  gp.y_sd_ = std::sqrt(std::max(var, 1e-12));
  gp.y_std_ = (y.array() - gp.y_mean_) / gp.y_sd_;

  const int d = static_cast<int>(X.cols());
  // heuristic center: length = column spread, signal 1, noise 0.1
  Eigen::VectorXd base_log_length(d);
  for (int k = 0; k < d; ++k) {
    const double lo = X.col(k).minCoeff(), hi = X.col(k).maxCoeff();
    base_log_length(k) = std::log(std::max((hi - lo) * 0.5, 1e-2));
  }

  Rng rng(seed);
  double best_nll = std::numeric_limits<double>::infinity();
  GpHyper best;
  for (int r = 0; r < restarts; ++r) {
    GpHyper h;
    h.log_length = base_log_length;
    h.log_signal = 0;
    h.log_noise = std::log(0.1);
    if (r > 0) {
      for (int k = 0; k < d; ++k) h.log_length(k) += rng.normal(0, 0.7);
      h.log_signal += rng.normal(0, 0.5);
      h.log_noise += rng.normal(0, 0.7);
    }

    Eigen::VectorXd theta(d + 2);
    theta.head(d) = h.log_length;
    theta(d) = h.log_signal;
    theta(d + 1) = h.log_noise;
    Eigen::VectorXd m = Eigen::VectorXd::Zero(d + 2);
    Eigen::VectorXd v = Eigen::VectorXd::Zero(d + 2);
    double nll = std::numeric_limits<double>::infinity();
    for (int it = 1; it <= iters; ++it) {
      GpHyper ht;
      ht.log_length = theta.head(d);
      ht.log_signal = theta(d);
      ht.log_noise = theta(d + 1);
      Eigen::VectorXd g;
      try {
        nll = neg_log_marginal(X, gp.y_std_, ht, &g);
      } catch (const std::runtime_error&) {
        break;  // numerically hopeless restart
      }
      if (!std::isfinite(nll) || !g.allFinite()) break;
      m = 0.9 * m + 0.1 * g;
      v = 0.999 * v + 0.001 * g.cwiseProduct(g).eval();
      const double bc1 = 1.0 - std::pow(0.9, it);
      const double bc2 = 1.0 - std::pow(0.999, it);
      theta -= (0.05 / bc1) *
               m.cwiseQuotient(((v / bc2).array().sqrt() + 1e-8).matrix());
      for (int k = 0; k < d + 2; ++k)
        theta(k) = std::clamp(theta(k), kLogLo, kLogHi);
    }
    if (std::isfinite(nll) && nll < best_nll) {
      best_nll = nll;
      best.log_length = theta.head(d);
      best.log_signal = theta(d);
      best.log_noise = theta(d + 1);
    }
  }
  if (!std::isfinite(best_nll))
    throw std::runtime_error("gp: all hyperparameter restarts failed");
  gp.hyper_ = best;
  gp.finalize();
  return gp;
}

Eigen::VectorXd GpSurrogate::kernel_row(const Eigen::VectorXd& x) const {
  const int n = static_cast<int>(X_.rows());
  const int d = static_cast<int>(X_.cols());
  const double sf2 = std::exp(2.0 * hyper_.log_signal);
  const Eigen::VectorXd inv_l2 = (-2.0 * hyper_.log_length.array()).exp();
  Eigen::VectorXd k(n);
  for (int i = 0; i < n; ++i) {
    double q = 0;
    for (int j = 0; j < d; ++j) {
      const double diff = x(j) - X_(i, j);
      q += diff * diff * inv_l2(j);
    }
    k(i) = sf2 * std::exp(-0.5 * q);
  }
  return k;
}

void GpSurrogate::predict(const Eigen::VectorXd& x, double& mean,
                          double& var) const {
  const Eigen::VectorXd k = kernel_row(x);
  const double m_std = k.dot(alpha_);
  const Eigen::VectorXd w =
      chol_L_.triangularView<Eigen::Lower>().solve(k);
  const double sf2 = std::exp(2.0 * hyper_.log_signal);
  const double v_std = std::max(sf2 - w.squaredNorm(), 0.0);
  mean = y_mean_ + y_sd_ * m_std;
  var = y_sd_ * y_sd_ * v_std;
}

}  // namespace pedsim
