#include <doctest.h>

#include <cmath>

#include "pedsim/gp.hpp"
#include "pedsim/rng.hpp"

using namespace pedsim;

namespace {

Eigen::MatrixXd random_inputs(int n, int d, Rng& rng) {
  Eigen::MatrixXd X(n, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) X(i, j) = rng.uniform();
  return X;
}

}  // namespace

TEST_CASE("marginal likelihood gradient matches finite differences") {
  Rng rng(61);
  const int n = 8, d = 2;
  const Eigen::MatrixXd X = random_inputs(n, d, rng);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i)
    y(i) = std::sin(3.0 * X(i, 0)) + 0.5 * X(i, 1) + 0.05 * rng.normal();

  GpHyper h;
  h.log_length = Eigen::VectorXd::Constant(d, std::log(0.4));
  h.log_signal = std::log(0.9);
  h.log_noise = std::log(0.2);

  Eigen::VectorXd grad;
  const double f0 = GpSurrogate::neg_log_marginal(X, y, h, &grad);
  REQUIRE(grad.size() == d + 2);
  CHECK(std::isfinite(f0));

  const double eps = 1e-6;
  auto perturbed = [&](int k, double delta) {
    GpHyper hp = h;
    if (k < d)
      hp.log_length(k) += delta;
    else if (k == d)
      hp.log_signal += delta;
    else
      hp.log_noise += delta;
    return GpSurrogate::neg_log_marginal(X, y, hp, nullptr);
  };
  for (int k = 0; k < d + 2; ++k) {
    const double fd = (perturbed(k, eps) - perturbed(k, -eps)) / (2.0 * eps);
    const double scale = std::max({1.0, std::abs(fd), std::abs(grad(k))});
    CHECK(std::abs(fd - grad(k)) / scale < 1e-4);
  }
}

TEST_CASE("fit recovers the minimum of a quadratic") {
  Rng rng(67);
  const int n = 20;
  Eigen::MatrixXd X(n, 1);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    X(i, 0) = static_cast<double>(i) / (n - 1);
    y(i) = (X(i, 0) - 0.3) * (X(i, 0) - 0.3) + 0.001 * rng.normal();
  }
  const GpSurrogate gp = GpSurrogate::fit(X, y, 5, 4, 150);
  double best_x = 0, best_m = 1e18;
  for (double x = 0.0; x <= 1.0; x += 0.002) {
    double m = 0, v = 0;
    gp.predict(Eigen::VectorXd::Constant(1, x), m, v);
    if (m < best_m) {
      best_m = m;
      best_x = x;
    }
  }
  CHECK(std::abs(best_x - 0.3) < 0.05);
}

TEST_CASE("posterior interpolates the training data") {
  Rng rng(71);
  const int n = 15;
  const Eigen::MatrixXd X = random_inputs(n, 2, rng);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) y(i) = std::cos(2.0 * X(i, 0)) - X(i, 1);
  const GpSurrogate gp = GpSurrogate::fit(X, y, 9, 4, 150);
  const double noise_sd = std::exp(gp.hyper().log_noise);
  const double y_scale = std::sqrt((y.array() - y.mean()).square().mean());
  for (int i = 0; i < n; ++i) {
    double m = 0, v = 0;
    gp.predict(X.row(i).transpose(), m, v);
    CHECK(std::abs(m - y(i)) < 3.0 * noise_sd * y_scale + 1e-3);
    CHECK(v >= -1e-9);
  }
}

TEST_CASE("predictive variance grows away from the data") {
  Eigen::MatrixXd X(2, 1);
  X << 0.0, 1.0;
  Eigen::VectorXd y(2);
  y << 0.0, 1.0;
  const GpSurrogate gp = GpSurrogate::fit(X, y, 13, 4, 150);
  double m0 = 0, v_at = 0, v_far = 0;
  gp.predict(Eigen::VectorXd::Constant(1, 0.0), m0, v_at);
  gp.predict(Eigen::VectorXd::Constant(1, 5.0), m0, v_far);
  CHECK(v_far > v_at);
}

TEST_CASE("fit is invariant to row permutations") {
  Rng rng(73);
  const int n = 12;
  const Eigen::MatrixXd X = random_inputs(n, 2, rng);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) y(i) = X(i, 0) * X(i, 1) + 0.1 * rng.normal();

  Eigen::MatrixXd Xp(n, 2);
  Eigen::VectorXd yp(n);
  for (int i = 0; i < n; ++i) {
    Xp.row(i) = X.row(n - 1 - i);
    yp(i) = y(n - 1 - i);
  }
  const GpSurrogate a = GpSurrogate::fit(X, y, 17, 3, 120);
  const GpSurrogate b = GpSurrogate::fit(Xp, yp, 17, 3, 120);
  Rng probe(79);
  for (int k = 0; k < 10; ++k) {
    const Eigen::MatrixXd q = random_inputs(1, 2, probe);
    double ma = 0, va = 0, mb = 0, vb = 0;
    a.predict(q.row(0).transpose(), ma, va);
    b.predict(q.row(0).transpose(), mb, vb);
    CHECK(ma == doctest::Approx(mb).epsilon(1e-6));
    CHECK(va == doctest::Approx(vb).epsilon(1e-6));
  }
}

TEST_CASE("duplicated inputs do not break the factorization") {
  Eigen::MatrixXd X(4, 1);
  X << 0.2, 0.2, 0.7, 0.7;
  Eigen::VectorXd y(4);
  y << 0.1, 0.15, 0.9, 0.85;
  const GpSurrogate gp = GpSurrogate::fit(X, y, 19, 3, 120);
  double m = 0, v = 0;
  gp.predict(Eigen::VectorXd::Constant(1, 0.2), m, v);
  CHECK(std::isfinite(m));
  CHECK(std::isfinite(v));
  CHECK(m == doctest::Approx(0.125).epsilon(0.5));
}
