#pragma once

namespace pedsim {

struct BodyParams {
  double leg_length = 0.9;                    // [m]
  double standing_redecision_interval = 0.5;  // step duration at v = 0 [s]
};

// Gait-cycle walking state. A step command fixes a target speed, a constant
// within-step acceleration and the step duration; speed snaps exactly to the
// target when the step completes so no drift accumulates across steps.
struct GaitState {
  double position = 0;             // displacement from the start point [m]
  double speed = 0;                // current speed [m/s]
  double step_target_speed = 0;    // speed at step completion [m/s]
  double step_accel = 0;           // [m/s^2]
  double step_time_remaining = 0;  // [s]
};

double step_length(double v);                        // v^0.42 [m]
double step_duration(double v, const BodyParams& body);  // v^-0.58 [s], redecision interval at v = 0

// Full swing angle 2*alpha for a given step length and leg length.
double leg_angle(double step_len, double leg_length);

// Push-off work to leave a step entered at v_minus with exit speed v_plus,
// given full swing angle two_alpha: (v_minus*cos(2a) - v_plus)^2 / (2 sin^2(2a)).
double effort(double v_minus, double v_plus, double two_alpha);

// Exit speed produced by push-off work u (inverse of effort for the
// positive branch): v_minus*cos(2a) + sqrt(2u)*sin(2a).
double speed_from_effort(double v_minus, double u, double two_alpha);

// Effort for a step command, using the stride geometry of the commanded
// speed. A stop command (target 0) has zero stride length, so it is costed
// with the current-speed stride geometry; a 0 -> 0 command costs nothing.
double step_effort(double v_minus, double target, const BodyParams& body);

// Begin a step toward `target`: sets duration from the commanded speed and a
// constant acceleration that reaches the target at step completion.
void apply_step_command(GaitState& g, double target, const BodyParams& body);

// Advance the gait by dt (trapezoidal within the accelerating phase). If the
// step completes inside dt, speed snaps to the target and the remainder of
// the tick is walked at the target speed. Returns nothing; decisions are due
// when step_time_remaining reaches 0.
void advance(GaitState& g, double dt);

}  // namespace pedsim
