#pragma once

#include <Eigen/Dense>
#include <limits>

#include "pedsim/rng.hpp"

namespace pedsim {

inline constexpr double kTtaInfinity = std::numeric_limits<double>::infinity();

// Belief over one vehicle: mean = [distance to line, approach speed],
// cov the matching 2x2 covariance. Approach speed is positive toward the
// crossing line; distance shrinks at that speed.
struct VehicleBelief {
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
};

double deg_to_rad(double deg);

// Visual angle subtended by a vehicle of width w at distance d (> 0).
double subtended_angle(double distance, double width);

// Distance read back from a noisy subtended angle. Angle noise is Gaussian
// with sd sigma_v_deg (degrees); the noisy angle is clamped to
// (1e-6, pi - 1e-6) before inversion so the measurement stays finite.
double observe_distance(double true_distance, double width, double sigma_v_deg,
                        Rng& rng);

// First-order (Jacobian) variance of the distance measurement.
double measurement_variance(double distance, double width, double sigma_v_deg);

// Constant-velocity predict. Distance shrinks at the believed speed:
// x' = F x with F = [[1, -dt], [0, 1]]; process noise q scales the
// white-acceleration covariance [[dt^3/3, dt^2/2], [dt^2/2, dt]].
void kalman_predict(VehicleBelief& b, double dt, double q);

// Scalar distance update (H = [1, 0]) in Joseph form, which keeps the
// covariance symmetric positive semidefinite under repeated use.
void kalman_update(VehicleBelief& b, double measured_distance, double R);

VehicleBelief init_belief(double first_measurement, double R,
                          double speed_variance);

// d_hat / v_hat when v_hat > 0.01 m/s and d_hat > 0, else +infinity.
double estimate_tta(const VehicleBelief& b);

// Per-tick looming cost c / tta; zero when the pedestrian is standing or
// tta is the infinity sentinel.
double looming_penalty(double tta, double c, bool pedestrian_moving);

}  // namespace pedsim
