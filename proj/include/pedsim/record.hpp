#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "pedsim/scenario.hpp"

namespace pedsim {

enum class Variant { SM, S, M };

Variant parse_variant(const std::string& name);  // throws on unknown name
const char* variant_name(Variant v);

// Per-episode behavioral parameters held fixed within an episode.
struct NonPolicyParams {
  double sigma_v_day = 0;       // visual angle noise sd, daylight [deg]
  double sigma_v_night = 0;     // visual angle noise sd, night [deg]
  double time_pressure_gain = 0;  // arrival reward slope alpha [1/s]
  double effort_weight = 0;     // beta
  double looming_weight = 0;    // c

  void validate() const;  // throws std::invalid_argument when out of range
  static NonPolicyParams sample(Rng& rng);

  static constexpr double kSigmaMax = 10.0;
  static constexpr double kTimePressureMax = 4.0;
  static constexpr double kEffortMax = 10.0;
  static constexpr double kLoomingMax = 10.0;
};

enum class Outcome { Running, Crossed, Collision, Timeout };
const char* outcome_name(Outcome o);

struct RewardBreakdown {
  double arrival = 0;
  double collision = 0;
  double effort = 0;
  double looming = 0;
};

struct TickRow {
  double t = 0;
  double ped_pos = 0;
  double ped_speed = 0;
  double target_speed = 0;
  double veh_d[2] = {0, 0};      // true front distance to the crossing line
  double veh_v[2] = {0, 0};      // true speed
  double veh_d_est[2] = {0, 0};  // belief mean distance
  double veh_v_est[2] = {0, 0};  // belief mean speed
  double r_arrival = 0;          // raw per-tick reward contributions
  double r_collision = 0;
  double r_effort = 0;
  double r_looming = 0;
  double step_reward = 0;  // clamped decision reward, on decision-final ticks
};

struct EpisodeRecord {
  ScenarioSpec spec;
  NonPolicyParams params;
  Variant variant = Variant::SM;
  std::uint64_t seed = 0;
  Outcome outcome = Outcome::Running;
  RewardBreakdown totals;  // unclamped component totals (costs positive)
  double return_sum = 0;   // sum of clamped decision rewards
  std::vector<TickRow> ticks;
};

// Long-format CSV: one row per tick, each prefixed with the episode id and
// condition columns. write_episode_csv_header emits the column line once.
void write_episode_csv_header(std::ostream& os);
void append_episode_csv(std::ostream& os, const EpisodeRecord& rec,
                        std::uint64_t episode_id);

}  // namespace pedsim
