#include "pedsim/scenario.hpp"

#include <stdexcept>

namespace pedsim {

namespace {

void require(bool ok, const char* msg) {
  if (!ok) throw std::invalid_argument(msg);
}

}  // namespace

void RoadGeometry::validate() const {
  require(road_width > 0, "road_width must be > 0");
  require(ped_start_offset >= 0, "ped_start_offset must be >= 0");
  require(lane_center > 0 && lane_center < road_width,
          "lane_center must lie inside the road");
  require(vehicle_length > 0, "vehicle_length must be > 0");
  require(vehicle_width > 0, "vehicle_width must be > 0");
  require(vehicle_width / 2 <= lane_center &&
              lane_center + vehicle_width / 2 <= road_width,
          "vehicle body must fit inside the road");
  require(ped_radius > 0, "ped_radius must be > 0");
  require(stop_margin > 0, "stop_margin must be > 0");
}

void ScenarioSpec::validate() const {
  geometry.validate();
  require(v0 > 0, "v0 must be > 0");
  require(tau0 > 0, "tau0 must be > 0");
  require(decel > 0, "decel must be > 0");
  require(lead_time >= 0, "lead_time must be >= 0");
  require(!ehmi || yielding, "ehmi requires a yielding vehicle");
}

double mph_to_mps(double mph) { return mph * 0.44704; }

double yield_onset_distance(double v0, double decel, double stop_margin) {
  if (decel <= 0) throw std::invalid_argument("decel must be positive");
  return v0 * v0 / (2.0 * decel) + stop_margin;
}

InitialWorldState build_scenario(const ScenarioSpec& spec) {
  spec.validate();
  InitialWorldState w;
  w.d1 = spec.v0 * spec.lead_time;
  w.d2 = w.d1 + spec.v0 * spec.tau0;
  w.v1 = spec.v0;
  w.v2 = spec.v0;
  w.yield_onset =
      yield_onset_distance(spec.v0, spec.decel, spec.geometry.stop_margin);
  if (spec.yielding) {
    // The braking point must still be ahead of vehicle 2 at t = 0, otherwise
    // the stop-before-line guarantee is unattainable.
    require(w.d2 >= w.yield_onset,
            "yielding vehicle starts inside its braking distance");
  }
  w.ped_position = 0.0;
  return w;
}

ScenarioSpec sample_training_scenario(Rng& rng) {
  ScenarioSpec s;
  s.v0 = rng.uniform(8.0, 17.0);
  s.tau0 = rng.uniform(0.1, 10.0);
  s.yielding = rng.bernoulli(0.5);
  s.ehmi = s.yielding && rng.bernoulli(0.5);
  s.night = rng.bernoulli(0.5);
  if (s.yielding) {
    // Redraw tau0 until the braking point lies ahead of vehicle 2 at t = 0;
    // only short gaps at high approach speed are affected.
    const double onset =
        yield_onset_distance(s.v0, s.decel, s.geometry.stop_margin);
    while (s.v0 * (s.lead_time + s.tau0) < onset) s.tau0 = rng.uniform(0.1, 10.0);
  }
  return s;
}

}  // namespace pedsim
