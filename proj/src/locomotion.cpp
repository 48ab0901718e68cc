#include "pedsim/locomotion.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pedsim {

double step_length(double v) {
  if (v < 0) throw std::invalid_argument("step_length: v < 0");
  return std::pow(v, 0.42);
}

double step_duration(double v, const BodyParams& body) {
  if (v < 0) throw std::invalid_argument("step_duration: v < 0");
  if (v == 0) return body.standing_redecision_interval;
  return std::pow(v, -0.58);
}

double leg_angle(double step_len, double leg_length) {
  const double half = step_len / (2.0 * leg_length);
  if (half < 0 || half > 1)
    throw std::invalid_argument("leg_angle: step length exceeds leg reach");
  return 2.0 * std::asin(half);
}

double effort(double v_minus, double v_plus, double two_alpha) {
  const double s = std::sin(two_alpha);
  if (s == 0) throw std::invalid_argument("effort: degenerate swing angle");
  const double num = v_minus * std::cos(two_alpha) - v_plus;
  return num * num / (2.0 * s * s);
}

double speed_from_effort(double v_minus, double u, double two_alpha) {
  if (u < 0) throw std::invalid_argument("speed_from_effort: u < 0");
  return v_minus * std::cos(two_alpha) + std::sqrt(2.0 * u) * std::sin(two_alpha);
}

double step_effort(double v_minus, double target, const BodyParams& body) {
  if (target == 0 && v_minus == 0) return 0.0;
  // Stop commands have no stride of their own; cost them with the stride
  // geometry of the speed being abandoned.
  const double stride_speed = target > 0 ? target : v_minus;
  const double two_alpha =
      leg_angle(step_length(stride_speed), body.leg_length);
  return effort(v_minus, target, two_alpha);
}

void apply_step_command(GaitState& g, double target, const BodyParams& body) {
  if (target < 0) throw std::invalid_argument("apply_step_command: target < 0");
  const double duration = step_duration(target, body);
  g.step_target_speed = target;
  g.step_time_remaining = duration;
  g.step_accel = (target - g.speed) / duration;
}

void advance(GaitState& g, double dt) {
  if (dt <= 0) throw std::invalid_argument("advance: dt <= 0");
  const double t_acc = std::min(dt, std::max(g.step_time_remaining, 0.0));
  if (t_acc > 0) {
    g.position += g.speed * t_acc + 0.5 * g.step_accel * t_acc * t_acc;
    g.speed += g.step_accel * t_acc;
    g.step_time_remaining -= t_acc;
    if (g.step_time_remaining <= 1e-12) {
      g.step_time_remaining = 0.0;
      g.speed = g.step_target_speed;  // exact, kills round-off drift
    }
  }
  const double t_rest = dt - t_acc;
  if (t_rest > 0) g.position += g.speed * t_rest;
}

}  // namespace pedsim
