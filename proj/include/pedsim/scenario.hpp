#pragma once

#include <cstdint>

#include "pedsim/rng.hpp"

namespace pedsim {

struct RoadGeometry {
  double road_width = 3.5;        // near curb to far curb [m]
  double ped_start_offset = 0.5;  // start point behind the near curb [m]
  double lane_center = 1.75;      // lane center measured from the near curb [m]
  double vehicle_length = 4.5;    // [m]
  double vehicle_width = 1.8;     // [m]
  double ped_radius = 0.25;       // pedestrian body disc [m]
  double stop_margin = 3.0;       // yielding vehicle stops this far from the crossing line [m]

  void validate() const;  // throws std::invalid_argument
};

// One experimental condition. v0 is the approach speed [m/s], tau0 the
// initial time gap of vehicle 2 behind vehicle 1 [s]. Vehicle 1 never
// yields; vehicle 2 yields iff `yielding`. eHMI is only meaningful on a
// yielding vehicle. lead_time places vehicle 1 lead_time seconds from the
// crossing line at t = 0.
struct ScenarioSpec {
  double v0 = 13.4112;
  double tau0 = 3.0;
  bool yielding = false;
  bool ehmi = false;
  bool night = false;
  double decel = 2.3;      // deceleration magnitude of a yielding vehicle [m/s^2]
  double lead_time = 2.0;  // [s]
  bool include_vehicles = true;  // false gives an empty road (sanity/benchmark use)
  RoadGeometry geometry;

  void validate() const;  // throws std::invalid_argument
};

struct InitialWorldState {
  double d1 = 0;           // vehicle 1 front distance to the crossing line [m]
  double d2 = 0;           // vehicle 2 front distance to the crossing line [m]
  double v1 = 0;           // [m/s]
  double v2 = 0;           // [m/s]
  double yield_onset = 0;  // distance at which vehicle 2 starts braking [m]
  double ped_position = 0; // pedestrian displacement from the start point [m]
};

double mph_to_mps(double mph);

// Distance-to-line at which a vehicle must start braking at constant decel
// to stop exactly stop_margin before the line.
double yield_onset_distance(double v0, double decel, double stop_margin);

// Places both vehicles from (v0, tau0, lead_time). Throws on invalid spec.
InitialWorldState build_scenario(const ScenarioSpec& spec);

// Draws a training scenario: v0 ~ U(8, 17) m/s, tau0 ~ U(0.1, 10) s,
// yielding/night ~ Bernoulli(0.5), ehmi ~ Bernoulli(0.5) given yielding.
ScenarioSpec sample_training_scenario(Rng& rng);

}  // namespace pedsim
