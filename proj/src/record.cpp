#include "pedsim/record.hpp"

#include <ostream>
#include <stdexcept>

#include "pedsim/csv.hpp"

namespace pedsim {

Variant parse_variant(const std::string& name) {
  if (name == "SM" || name == "sm") return Variant::SM;
  if (name == "S" || name == "s") return Variant::S;
  if (name == "M" || name == "m") return Variant::M;
  throw std::invalid_argument("unknown variant: " + name);
}

const char* variant_name(Variant v) {
  switch (v) {
    case Variant::SM: return "SM";
    case Variant::S: return "S";
    case Variant::M: return "M";
  }
  return "?";
}

const char* outcome_name(Outcome o) {
  switch (o) {
    case Outcome::Running: return "running";
    case Outcome::Crossed: return "crossed";
    case Outcome::Collision: return "collision";
    case Outcome::Timeout: return "timeout";
  }
  return "?";
}

void NonPolicyParams::validate() const {
  auto in = [](double x, double hi) { return x >= 0 && x <= hi; };
  if (!in(sigma_v_day, kSigmaMax) || !in(sigma_v_night, kSigmaMax))
    throw std::invalid_argument("sigma_v out of [0, 10] deg");
  if (!in(time_pressure_gain, kTimePressureMax))
    throw std::invalid_argument("time_pressure_gain out of [0, 4]");
  if (!in(effort_weight, kEffortMax))
    throw std::invalid_argument("effort_weight out of [0, 10]");
  if (!in(looming_weight, kLoomingMax))
    throw std::invalid_argument("looming_weight out of [0, 10]");
}

NonPolicyParams NonPolicyParams::sample(Rng& rng) {
  NonPolicyParams p;
  p.sigma_v_day = rng.uniform(0.0, kSigmaMax);
  p.sigma_v_night = rng.uniform(0.0, kSigmaMax);
  p.time_pressure_gain = rng.uniform(0.0, kTimePressureMax);
  p.effort_weight = rng.uniform(0.0, kEffortMax);
  p.looming_weight = rng.uniform(0.0, kLoomingMax);
  return p;
}

void write_episode_csv_header(std::ostream& os) {
  os << "episode,variant,seed,v0,tau0,yielding,ehmi,night,outcome,"
        "t,ped_pos,ped_speed,target_speed,"
        "veh1_d,veh1_v,veh1_d_est,veh1_v_est,"
        "veh2_d,veh2_v,veh2_d_est,veh2_v_est,"
        "r_arrival,r_collision,r_effort,r_looming,step_reward\n";
}

void append_episode_csv(std::ostream& os, const EpisodeRecord& rec,
                        std::uint64_t episode_id) {
  const std::string prefix =
      std::to_string(episode_id) + "," + variant_name(rec.variant) + "," +
      std::to_string(rec.seed) + "," + fmt_double(rec.spec.v0) + "," +
      fmt_double(rec.spec.tau0) + "," + (rec.spec.yielding ? "1" : "0") + "," +
      (rec.spec.ehmi ? "1" : "0") + "," + (rec.spec.night ? "1" : "0") + "," +
      outcome_name(rec.outcome) + ",";
  for (const TickRow& r : rec.ticks) {
    os << prefix << fmt_double(r.t) << ',' << fmt_double(r.ped_pos) << ','
       << fmt_double(r.ped_speed) << ',' << fmt_double(r.target_speed) << ','
       << fmt_double(r.veh_d[0]) << ',' << fmt_double(r.veh_v[0]) << ','
       << fmt_double(r.veh_d_est[0]) << ',' << fmt_double(r.veh_v_est[0]) << ','
       << fmt_double(r.veh_d[1]) << ',' << fmt_double(r.veh_v[1]) << ','
       << fmt_double(r.veh_d_est[1]) << ',' << fmt_double(r.veh_v_est[1]) << ','
       << fmt_double(r.r_arrival) << ',' << fmt_double(r.r_collision) << ','
       << fmt_double(r.r_effort) << ',' << fmt_double(r.r_looming) << ','
       << fmt_double(r.step_reward) << '\n';
  }
}

}  // namespace pedsim
