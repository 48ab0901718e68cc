#include "pedsim/perception.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pedsim {

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr double kAngleFloor = 1e-6;
}  // namespace

double deg_to_rad(double deg) { return deg * kPi / 180.0; }

double subtended_angle(double distance, double width) {
  if (distance <= 0) throw std::invalid_argument("subtended_angle: distance <= 0");
  return 2.0 * std::atan(width / (2.0 * distance));
}

double observe_distance(double true_distance, double width, double sigma_v_deg,
                        Rng& rng) {
  double theta = subtended_angle(true_distance, width);
  theta += rng.normal(0.0, deg_to_rad(sigma_v_deg));
  theta = std::clamp(theta, kAngleFloor, kPi - kAngleFloor);
  return width / (2.0 * std::tan(theta / 2.0));
}

double measurement_variance(double distance, double width, double sigma_v_deg) {
  // |d d / d theta| = (d^2 + w^2/4) / w at theta = 2*atan(w/(2d)).
  const double jac = (distance * distance + width * width / 4.0) / width;
  const double sigma_rad = deg_to_rad(sigma_v_deg);
  return jac * jac * sigma_rad * sigma_rad;
}

void kalman_predict(VehicleBelief& b, double dt, double q) {
  Eigen::Matrix2d F;
  F << 1.0, -dt, 0.0, 1.0;
  Eigen::Matrix2d Q;
  Q << dt * dt * dt / 3.0, dt * dt / 2.0, dt * dt / 2.0, dt;
  Q *= q;
  b.mean = F * b.mean;
  b.cov = F * b.cov * F.transpose() + Q;
}

void kalman_update(VehicleBelief& b, double measured_distance, double R) {
  const Eigen::RowVector2d H(1.0, 0.0);
  const double S = (H * b.cov * H.transpose())(0) + R;
  const Eigen::Vector2d K = b.cov * H.transpose() / S;
  const double innovation = measured_distance - b.mean(0);
  b.mean += K * innovation;
  const Eigen::Matrix2d A = Eigen::Matrix2d::Identity() - K * H;
  b.cov = A * b.cov * A.transpose() + K * R * K.transpose();
  // Guard symmetry against accumulated round-off.
  b.cov = 0.5 * (b.cov + b.cov.transpose()).eval();
}

VehicleBelief init_belief(double first_measurement, double R,
                          double speed_variance) {
  VehicleBelief b;
  b.mean << first_measurement, 0.0;
  b.cov << R, 0.0, 0.0, speed_variance;
  return b;
}

double estimate_tta(const VehicleBelief& b) {
  if (b.mean(1) > 0.01 && b.mean(0) > 0.0) return b.mean(0) / b.mean(1);
  return kTtaInfinity;
}

double looming_penalty(double tta, double c, bool pedestrian_moving) {
  if (!pedestrian_moving || !(tta < kTtaInfinity)) return 0.0;
  return c / tta;
}

}  // namespace pedsim
