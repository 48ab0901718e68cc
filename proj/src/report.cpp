#include "pedsim/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "pedsim/csv.hpp"

namespace pedsim {

void write_checklist_json(std::ostream& os,
                          std::span<const PhenomenonResult> results) {
  nlohmann::json arr = nlohmann::json::array();
  int evaluable = 0, holding = 0;
  for (const PhenomenonResult& r : results) {
    nlohmann::json j;
    j["name"] = r.name;
    j["evaluable"] = r.evaluable;
    j["holds"] = r.holds;
    j["raw_diff"] = r.raw_diff;
    j["effect"] = r.effect;
    j["detail"] = r.detail;
    arr.push_back(std::move(j));
    evaluable += r.evaluable ? 1 : 0;
    holding += (r.evaluable && r.holds) ? 1 : 0;
  }
  nlohmann::json top;
  top["evaluable"] = evaluable;
  top["holding"] = holding;
  top["phenomena"] = std::move(arr);
  os << top.dump(2) << '\n';
}

void write_checklist_text(std::ostream& os,
                          std::span<const PhenomenonResult> results) {
  int evaluable = 0, holding = 0;
  for (const PhenomenonResult& r : results) {
    const char* tag = !r.evaluable ? "[ -- ]" : (r.holds ? "[ OK ]" : "[FAIL]");
    char buf[128];
    if (r.evaluable) {
      std::snprintf(buf, sizeof buf, "diff=%+.4f effect=%+.3f", r.raw_diff,
                    r.effect);
    } else {
      buf[0] = '\0';
    }
    os << tag << ' ' << r.name;
    for (std::size_t i = r.name.size(); i < 38; ++i) os << ' ';
    os << ' ' << buf;
    if (!r.detail.empty()) os << "  " << r.detail;
    os << '\n';
    evaluable += r.evaluable ? 1 : 0;
    holding += (r.evaluable && r.holds) ? 1 : 0;
  }
  os << holding << '/' << evaluable << " evaluable phenomena hold\n";
}

void write_speed_profiles_csv(std::ostream& os,
                              std::span<const EpisodeRecord> records,
                              double bin_width) {
  if (bin_width <= 0) throw std::invalid_argument("bin_width must be > 0");
  double path_len = 0;
  for (const EpisodeRecord& rec : records)
    path_len = std::max(path_len, rec.spec.geometry.ped_start_offset +
                                      rec.spec.geometry.road_width);
  const int n_bins = std::max(1, (int)std::ceil(path_len / bin_width - 1e-9));
  const int n_eps = (int)records.size();

  // sums[bin][ep], counts[bin][ep]
  std::vector<std::vector<double>> sums(n_bins, std::vector<double>(n_eps, 0));
  std::vector<std::vector<long>> counts(n_bins, std::vector<long>(n_eps, 0));
  for (int e = 0; e < n_eps; ++e) {
    for (const TickRow& t : records[e].ticks) {
      int b = (int)std::floor(t.ped_pos / bin_width);
      if (b < 0) b = 0;
      if (b >= n_bins) b = n_bins - 1;
      sums[b][e] += t.ped_speed;
      counts[b][e] += 1;
    }
  }

  os << "bin_center,mean_speed";
  for (int e = 0; e < n_eps; ++e) os << ",ep" << e;
  os << '\n';
  for (int b = 0; b < n_bins; ++b) {
    double acc = 0;
    int n = 0;
    std::vector<double> per_ep(n_eps,
                               std::numeric_limits<double>::quiet_NaN());
    for (int e = 0; e < n_eps; ++e) {
      if (counts[b][e] > 0) {
        per_ep[e] = sums[b][e] / counts[b][e];
        acc += per_ep[e];
        ++n;
      }
    }
    const double mean =
        n > 0 ? acc / n : std::numeric_limits<double>::quiet_NaN();
    os << fmt_double((b + 0.5) * bin_width) << ',' << fmt_double(mean);
    for (int e = 0; e < n_eps; ++e) os << ',' << fmt_double(per_ep[e]);
    os << '\n';
  }
}

void write_cit_csv(std::ostream& os, std::span<const EpisodeRecord> records) {
  os << "episode,variant,seed,v0,tau0,yielding,ehmi,night,outcome,class,"
        "gap_onset,movement_onset,entry,exit,cit,avg_speed\n";
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t e = 0; e < records.size(); ++e) {
    const EpisodeRecord& rec = records[e];
    const EpisodeEvents ev = derive_events(rec);
    const auto cit = crossing_initiation_time(rec);
    const auto speed = average_crossing_speed(rec);
    os << e << ',' << variant_name(rec.variant) << ',' << rec.seed << ','
       << fmt_double(rec.spec.v0) << ',' << fmt_double(rec.spec.tau0) << ','
       << (rec.spec.yielding ? 1 : 0) << ',' << (rec.spec.ehmi ? 1 : 0) << ','
       << (rec.spec.night ? 1 : 0) << ',' << outcome_name(rec.outcome) << ','
       << cross_class_name(classify_crossing(rec)) << ','
       << fmt_double(ev.gap_onset) << ',' << fmt_double(ev.movement_onset)
       << ',' << fmt_double(ev.entry) << ',' << fmt_double(ev.exit) << ','
       << fmt_double(cit ? *cit : nan) << ','
       << fmt_double(speed ? *speed : nan) << '\n';
  }
}

double speed_roughness(const EpisodeRecord& rec) {
  if (rec.ticks.size() < 2) return 0;
  double acc = 0;
  for (std::size_t i = 1; i < rec.ticks.size(); ++i)
    acc += std::abs(rec.ticks[i].ped_speed - rec.ticks[i - 1].ped_speed);
  return acc / (double)(rec.ticks.size() - 1);
}

double mean_speed_roughness(std::span<const EpisodeRecord> records) {
  double acc = 0;
  long pairs = 0;
  for (const EpisodeRecord& rec : records) {
    for (std::size_t i = 1; i < rec.ticks.size(); ++i)
      acc += std::abs(rec.ticks[i].ped_speed - rec.ticks[i - 1].ped_speed);
    pairs += rec.ticks.empty() ? 0 : (long)rec.ticks.size() - 1;
  }
  return pairs > 0 ? acc / (double)pairs : 0;
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

Outcome parse_outcome(const std::string& s) {
  if (s == "running") return Outcome::Running;
  if (s == "crossed") return Outcome::Crossed;
  if (s == "collision") return Outcome::Collision;
  if (s == "timeout") return Outcome::Timeout;
  throw std::invalid_argument("unknown outcome: " + s);
}

ScenarioSpec match_spec(const std::vector<ScenarioSpec>& specs, double v0,
                        double tau0, bool yielding, bool ehmi, bool night) {
  for (const ScenarioSpec& s : specs) {
    if (std::abs(s.v0 - v0) < 1e-6 && std::abs(s.tau0 - tau0) < 1e-6 &&
        s.yielding == yielding && s.ehmi == ehmi && s.night == night)
      return s;
  }
  ScenarioSpec s;
  s.v0 = v0;
  s.tau0 = tau0;
  s.yielding = yielding;
  s.ehmi = ehmi;
  s.night = night;
  return s;
}

}  // namespace

std::vector<EpisodeRecord> read_episode_csv(
    std::istream& is, const std::vector<ScenarioSpec>& condition_specs) {
  std::string line;
  if (!std::getline(is, line))
    throw std::invalid_argument("episode csv: empty stream");
  if (line.rfind("episode,variant,seed,", 0) != 0)
    throw std::invalid_argument("episode csv: unexpected header");

  std::vector<EpisodeRecord> out;
  long long current_id = -1;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const std::vector<std::string> f = split_csv(line);
    if (f.size() != 26)
      throw std::invalid_argument("episode csv: expected 26 fields, got " +
                               std::to_string(f.size()));
    const long long id = std::stoll(f[0]);
    if (id != current_id) {
      current_id = id;
      EpisodeRecord rec;
      rec.variant = parse_variant(f[1]);
      rec.seed = std::stoull(f[2]);
      rec.spec = match_spec(condition_specs, std::stod(f[3]), std::stod(f[4]),
                            f[5] == "1", f[6] == "1", f[7] == "1");
      rec.outcome = parse_outcome(f[8]);
      out.push_back(std::move(rec));
    }
    EpisodeRecord& rec = out.back();
    TickRow row;
    row.t = std::stod(f[9]);
    row.ped_pos = std::stod(f[10]);
    row.ped_speed = std::stod(f[11]);
    row.target_speed = std::stod(f[12]);
    row.veh_d[0] = std::stod(f[13]);
    row.veh_v[0] = std::stod(f[14]);
    row.veh_d_est[0] = std::stod(f[15]);
    row.veh_v_est[0] = std::stod(f[16]);
    row.veh_d[1] = std::stod(f[17]);
    row.veh_v[1] = std::stod(f[18]);
    row.veh_d_est[1] = std::stod(f[19]);
    row.veh_v_est[1] = std::stod(f[20]);
    row.r_arrival = std::stod(f[21]);
    row.r_collision = std::stod(f[22]);
    row.r_effort = std::stod(f[23]);
    row.r_looming = std::stod(f[24]);
    row.step_reward = std::stod(f[25]);
    rec.totals.arrival += row.r_arrival;
    rec.totals.collision += row.r_collision;
    rec.totals.effort += row.r_effort;
    rec.totals.looming += row.r_looming;
    rec.return_sum += row.step_reward;
    rec.ticks.push_back(row);
  }
  return out;
}

}  // namespace pedsim
