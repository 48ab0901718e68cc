#include "pedsim/env.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pedsim {

ActionSet ActionSet::with_wait() {
  ActionSet a;
  for (int i = 0; i <= 20; ++i) a.speeds.push_back(i * 0.1);
  return a;
}

ActionSet ActionSet::strides_only() {
  ActionSet a;
  for (int i = 1; i <= 20; ++i) a.speeds.push_back(i * 0.1);
  return a;
}

void ActionSet::validate() const {
  if (speeds.empty()) throw std::invalid_argument("action set is empty");
  for (double s : speeds)
    if (s < 0 || !std::isfinite(s))
      throw std::invalid_argument("action speeds must be finite and >= 0");
}

void advance_vehicle(VehicleSim& v, double dt) {
  double remaining = dt;
  if (!v.braking) {
    if (v.yields && v.speed > 0 && v.dist - v.speed * remaining <= v.yield_onset) {
      // Split the tick at the braking onset so the stop lands exactly at
      // stop_dist regardless of tick phase.
      const double t_onset = std::max((v.dist - v.yield_onset) / v.speed, 0.0);
      v.dist = v.yield_onset;
      remaining -= t_onset;
      v.braking = true;
    } else {
      v.dist -= v.speed * remaining;
      return;
    }
  }
  if (v.speed > 0 && remaining > 0) {
    const double t_stop = v.speed / v.decel;
    if (t_stop <= remaining) {
      v.dist -= v.speed * v.speed / (2.0 * v.decel);
      v.speed = 0;
    } else {
      v.dist -= v.speed * remaining - 0.5 * v.decel * remaining * remaining;
      v.speed -= v.decel * remaining;
    }
  }
}

bool collision_check(const WorldState& w, const RoadGeometry& g) {
  const double ped_y = w.ped.position - g.ped_start_offset;
  for (int i = 0; i < w.n_vehicles; ++i) {
    const VehicleSim& v = w.veh[i];
    const double x_front = -v.dist;
    const double x1 = x_front - g.vehicle_length, x2 = x_front;
    const double y1 = g.lane_center - g.vehicle_width / 2;
    const double y2 = g.lane_center + g.vehicle_width / 2;
    const double cx = std::clamp(0.0, x1, x2);
    const double cy = std::clamp(ped_y, y1, y2);
    const double dx = cx, dy = cy - ped_y;
    if (dx * dx + dy * dy <= g.ped_radius * g.ped_radius) return true;
  }
  return false;
}

Outcome terminal_state(const WorldState& w, const RoadGeometry& g,
                       double timeout_s) {
  if (collision_check(w, g)) return Outcome::Collision;
  if (w.ped.position >= g.ped_start_offset + g.road_width)
    return Outcome::Crossed;
  if (w.t >= timeout_s - 1e-9) return Outcome::Timeout;
  return Outcome::Running;
}

std::uint64_t CrossingEnv::observation_layout_hash() {
  const char* layout =
      "v1:pos,speed,(dhat,vhat,sd_d,sd_v)x2,t,ehmi,sigma,alpha,beta,c";
  std::uint64_t h = 1469598103934665603ull;
  for (const char* p = layout; *p; ++p) {
    h ^= static_cast<unsigned char>(*p);
    h *= 1099511628211ull;
  }
  return h;
}

CrossingEnv::CrossingEnv(EnvConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.actions.validate();
  if (cfg_.dt <= 0 || cfg_.timeout_s <= 0 || cfg_.process_noise < 0)
    throw std::invalid_argument("bad env config");
}

double CrossingEnv::active_sigma() const {
  return spec_.night ? params_.sigma_v_night : params_.sigma_v_day;
}

Eigen::VectorXd CrossingEnv::reset(const ScenarioSpec& spec,
                                   const NonPolicyParams& params,
                                   Variant variant, std::uint64_t seed) {
  spec.validate();
  params.validate();
  spec_ = spec;
  params_ = params;
  variant_ = variant;
  if (variant_ == Variant::M) {
    // Motor-only ablation: perfect vision, no looming aversion.
    params_.sigma_v_day = 0;
    params_.sigma_v_night = 0;
    params_.looming_weight = 0;
  } else if (variant_ == Variant::S) {
    // Sensory-only ablation: costless instantaneous speed control.
    params_.effort_weight = 0;
  }
  rng_ = Rng(seed);
  outcome_ = Outcome::Running;

  const InitialWorldState init = build_scenario(spec_);
  world_ = WorldState{};
  world_.n_vehicles = spec_.include_vehicles ? 2 : 0;
  world_.veh[0] = VehicleSim{init.d1, init.v1, false, false, 0, 0, 0};
  world_.veh[1] = VehicleSim{init.d2,
                             init.v2,
                             spec_.yielding,
                             false,
                             init.yield_onset,
                             spec_.decel,
                             spec_.geometry.stop_margin};

  const double sigma = active_sigma();
  for (int i = 0; i < world_.n_vehicles; ++i) {
    const double z = observe_distance(world_.veh[i].dist,
                                      spec_.geometry.vehicle_width, sigma, rng_);
    const double R =
        measurement_variance(z, spec_.geometry.vehicle_width, sigma);
    belief_[i] = init_belief(z, R, cfg_.belief_speed_variance);
  }

  record_ = EpisodeRecord{};
  record_.spec = spec_;
  record_.params = params_;
  record_.variant = variant_;
  record_.seed = seed;

  TickRow row;
  row.t = 0;
  for (int i = 0; i < world_.n_vehicles; ++i) {
    row.veh_d[i] = world_.veh[i].dist;
    row.veh_v[i] = world_.veh[i].speed;
    row.veh_d_est[i] = belief_[i].mean(0);
    row.veh_v_est[i] = belief_[i].mean(1);
  }
  record_.ticks.push_back(row);
  return observation();
}

Eigen::VectorXd CrossingEnv::observation() const {
  Eigen::VectorXd o(kObsDim);
  o(0) = world_.ped.position;
  o(1) = world_.ped.speed;
  for (int i = 0; i < 2; ++i) {
    const int base = 2 + 4 * i;
    if (i < world_.n_vehicles) {
      o(base + 0) = belief_[i].mean(0);
      o(base + 1) = belief_[i].mean(1);
      o(base + 2) = std::sqrt(std::max(belief_[i].cov(0, 0), 0.0));
      o(base + 3) = std::sqrt(std::max(belief_[i].cov(1, 1), 0.0));
    } else {
      o(base + 0) = o(base + 1) = o(base + 2) = o(base + 3) = 0;
    }
  }
  o(10) = world_.t;
  o(11) = (spec_.ehmi && world_.n_vehicles > 1 && world_.veh[1].braking) ? 1 : 0;
  o(12) = active_sigma();
  o(13) = params_.time_pressure_gain;
  o(14) = params_.effort_weight;
  o(15) = params_.looming_weight;
  return o;
}

void CrossingEnv::tick(double effort_logged, double& looming_acc,
                       bool& effort_pending) {
  for (int i = 0; i < world_.n_vehicles; ++i)
    advance_vehicle(world_.veh[i], cfg_.dt);
  advance(world_.ped, cfg_.dt);
  world_.t += cfg_.dt;

  const double sigma = active_sigma();
  double looming_tick = 0;
  for (int i = 0; i < world_.n_vehicles; ++i) {
    kalman_predict(belief_[i], cfg_.dt, cfg_.process_noise);
    if (world_.veh[i].dist > 0) {
      const double z = observe_distance(
          world_.veh[i].dist, spec_.geometry.vehicle_width, sigma, rng_);
      const double R =
          measurement_variance(z, spec_.geometry.vehicle_width, sigma);
      kalman_update(belief_[i], z, R);
    }
    looming_tick += looming_penalty(estimate_tta(belief_[i]),
                                    params_.looming_weight,
                                    world_.ped.speed > 0);
  }
  looming_acc += looming_tick;
  outcome_ = terminal_state(world_, spec_.geometry, cfg_.timeout_s);

  TickRow row;
  row.t = world_.t;
  row.ped_pos = world_.ped.position;
  row.ped_speed = world_.ped.speed;
  row.target_speed = world_.ped.step_target_speed;
  for (int i = 0; i < world_.n_vehicles; ++i) {
    row.veh_d[i] = world_.veh[i].dist;
    row.veh_v[i] = world_.veh[i].speed;
    row.veh_d_est[i] = belief_[i].mean(0);
    row.veh_v_est[i] = belief_[i].mean(1);
  }
  row.r_looming = looming_tick;
  if (effort_pending) {
    row.r_effort = effort_logged;
    effort_pending = false;
  }
  record_.ticks.push_back(row);
}

CrossingEnv::StepResult CrossingEnv::step(int action_index) {
  if (done()) throw std::logic_error("step() after episode end");
  if (action_index < 0 || action_index >= action_count())
    throw std::out_of_range("action index out of range");
  const double target = cfg_.actions.speeds[action_index];

  double effort_cost = 0;
  if (variant_ == Variant::S) {
    world_.ped.speed = target;
    world_.ped.step_target_speed = target;
    world_.ped.step_accel = 0;
    world_.ped.step_time_remaining = 0;
  } else {
    effort_cost =
        params_.effort_weight * step_effort(world_.ped.speed, target, cfg_.body);
    apply_step_command(world_.ped, target, cfg_.body);
  }

  double looming_sum = 0;
  bool effort_pending = true;
  if (variant_ == Variant::S) {
    tick(effort_cost, looming_sum, effort_pending);
  } else {
    while (outcome_ == Outcome::Running && world_.ped.step_time_remaining > 0)
      tick(effort_cost, looming_sum, effort_pending);
  }

  double arrival = 0, collision = 0;
  if (outcome_ == Outcome::Crossed)
    arrival = 20.0 - params_.time_pressure_gain * world_.t;
  else if (outcome_ == Outcome::Collision)
    collision = 20.0;

  const double raw = arrival - collision - effort_cost - looming_sum;
  const double reward = std::clamp(raw, -20.0, 20.0);

  TickRow& last = record_.ticks.back();
  last.r_arrival = arrival;
  last.r_collision = collision;
  last.step_reward = reward;

  record_.totals.arrival += arrival;
  record_.totals.collision += collision;
  record_.totals.effort += effort_cost;
  record_.totals.looming += looming_sum;
  record_.return_sum += reward;
  record_.outcome = outcome_;

  StepResult res;
  res.obs = observation();
  res.reward = reward;
  res.done = done();
  res.truncated = outcome_ == Outcome::Timeout;
  return res;
}

}  // namespace pedsim
