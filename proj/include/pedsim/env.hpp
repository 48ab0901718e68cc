#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "pedsim/locomotion.hpp"
#include "pedsim/perception.hpp"
#include "pedsim/record.hpp"
#include "pedsim/scenario.hpp"

namespace pedsim {

// Discrete target-speed menu. Default adds an explicit wait action to the
// 0.1..2.0 m/s grid; strides_only() is the 20-action grid without it.
struct ActionSet {
  std::vector<double> speeds;

  static ActionSet with_wait();
  static ActionSet strides_only();
  void validate() const;  // throws std::invalid_argument
  bool operator==(const ActionSet&) const = default;
};

struct EnvConfig {
  ActionSet actions = ActionSet::with_wait();
  BodyParams body;
  double dt = 0.1;                    // world tick [s]
  double timeout_s = 30.0;            // episode truncation [s]
  double process_noise = 0.5;         // Kalman q
  double belief_speed_variance = 1e4; // initial speed variance
};

struct VehicleSim {
  double dist = 0;   // front distance to the crossing line, negative once past
  double speed = 0;  // [m/s], toward the line
  bool yields = false;
  bool braking = false;
  double yield_onset = 0;  // braking starts when dist reaches this [m]
  double decel = 0;        // [m/s^2]
  double stop_dist = 0;    // comes to rest at this distance [m]
};

struct WorldState {
  double t = 0;
  GaitState ped;
  VehicleSim veh[2];
  int n_vehicles = 0;
};

// Moves one vehicle dt forward with event-exact handling of the braking
// onset and the stop inside the tick.
void advance_vehicle(VehicleSim& v, double dt);

// Pedestrian body disc against vehicle rectangles, closest-point test.
bool collision_check(const WorldState& w, const RoadGeometry& g);

// Collision beats arrival; arrival beats timeout.
Outcome terminal_state(const WorldState& w, const RoadGeometry& g,
                       double timeout_s);

// One pedestrian-crossing episode. SM and M act once per walking step
// (ballistic speed control); S re-chooses speed every tick and moves at the
// chosen speed instantly. Per-decision reward is
// clamp(arrival - collision - effort - looming, -20, +20).
class CrossingEnv {
 public:
  static constexpr int kObsDim = 16;
  static std::uint64_t observation_layout_hash();

  explicit CrossingEnv(EnvConfig cfg = {});

  Eigen::VectorXd reset(const ScenarioSpec& spec, const NonPolicyParams& params,
                        Variant variant, std::uint64_t seed);

  struct StepResult {
    Eigen::VectorXd obs;
    double reward = 0;
    bool done = false;
    bool truncated = false;  // done by timeout, value bootstrap applies
  };
  StepResult step(int action_index);  // throws std::logic_error after done

  bool done() const { return outcome_ != Outcome::Running; }
  Outcome outcome() const { return outcome_; }
  const WorldState& world() const { return world_; }
  const EnvConfig& config() const { return cfg_; }
  int action_count() const { return static_cast<int>(cfg_.actions.speeds.size()); }
  const EpisodeRecord& record() const { return record_; }
  EpisodeRecord take_record() { return std::move(record_); }
  Eigen::VectorXd observation() const;

 private:
  void tick(double effort_logged, double& looming_acc, bool& effort_pending);
  double active_sigma() const;

  EnvConfig cfg_;
  ScenarioSpec spec_;
  NonPolicyParams params_;  // effective (after variant forcing)
  Variant variant_ = Variant::SM;
  WorldState world_;
  VehicleBelief belief_[2];
  Rng rng_{0};
  Outcome outcome_ = Outcome::Running;
  EpisodeRecord record_;
};

}  // namespace pedsim
