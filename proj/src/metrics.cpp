#include "pedsim/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <set>
#include <stdexcept>

namespace pedsim {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

bool has(double t) { return !std::isnan(t); }

std::string fmt4(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4g", x);
  return buf;
}

}  // namespace

const char* cross_class_name(CrossClass c) {
  switch (c) {
    case CrossClass::AcceptedGap: return "accepted_gap";
    case CrossClass::RejectedGap: return "rejected_gap";
    case CrossClass::EarlyCross: return "early_cross";
    case CrossClass::LateCross: return "late_cross";
    case CrossClass::NoCross: return "no_cross";
  }
  return "?";
}

EpisodeEvents derive_events(const EpisodeRecord& rec,
                            double movement_threshold) {
  EpisodeEvents ev{kNan, kNan, kNan, kNan};
  const RoadGeometry& g = rec.spec.geometry;
  for (const TickRow& r : rec.ticks) {
    if (!has(ev.gap_onset) && rec.spec.include_vehicles &&
        r.veh_d[0] <= -g.vehicle_length)
      ev.gap_onset = r.t;
    if (!has(ev.movement_onset) && r.ped_pos > movement_threshold)
      ev.movement_onset = r.t;
    if (!has(ev.entry) && r.ped_pos >= g.ped_start_offset) ev.entry = r.t;
    if (!has(ev.exit) && r.ped_pos >= g.ped_start_offset + g.road_width)
      ev.exit = r.t;
  }
  return ev;
}

CrossClass classify_crossing(const EpisodeRecord& rec) {
  const RoadGeometry& g = rec.spec.geometry;
  if (!rec.spec.yielding) {
    // Band cleared once the trailing edge of the body passes the far side of
    // the vehicle lane.
    const double clear_pos =
        g.ped_start_offset + g.lane_center + g.vehicle_width / 2 + g.ped_radius;
    double t_clear = kNan, t_v2 = kNan;
    for (const TickRow& r : rec.ticks) {
      if (!has(t_clear) && r.ped_pos >= clear_pos) t_clear = r.t;
      if (!has(t_v2) && r.veh_d[1] <= 0) t_v2 = r.t;
    }
    const bool accepted = has(t_clear) && (!has(t_v2) || t_clear <= t_v2);
    return accepted ? CrossClass::AcceptedGap : CrossClass::RejectedGap;
  }
  if (rec.outcome == Outcome::Timeout) return CrossClass::NoCross;
  const EpisodeEvents ev = derive_events(rec);
  if (!has(ev.movement_onset)) return CrossClass::NoCross;
  const TickRow* at_onset = nullptr;
  for (const TickRow& r : rec.ticks)
    if (r.t >= ev.movement_onset - 1e-9) {
      at_onset = &r;
      break;
    }
  const double threshold = (2.0 / 3.0) * rec.spec.v0;
  return (at_onset && at_onset->veh_v[1] > threshold) ? CrossClass::EarlyCross
                                                      : CrossClass::LateCross;
}

std::optional<double> crossing_initiation_time(const EpisodeRecord& rec) {
  const EpisodeEvents ev = derive_events(rec);
  if (!has(ev.gap_onset) || !has(ev.movement_onset)) return std::nullopt;
  return ev.movement_onset - ev.gap_onset;
}

std::optional<double> average_crossing_speed(const EpisodeRecord& rec) {
  const EpisodeEvents ev = derive_events(rec);
  if (!has(ev.movement_onset) || !has(ev.exit)) return std::nullopt;
  const double dt = ev.exit - ev.movement_onset;
  if (dt <= 0) return std::nullopt;
  const RoadGeometry& g = rec.spec.geometry;
  return (g.ped_start_offset + g.road_width) / dt;
}

ConditionKey condition_of(const ScenarioSpec& spec) {
  return ConditionKey{spec.v0, spec.tau0, spec.yielding, spec.ehmi, spec.night};
}

void CellStats::add(double x) {
  ++n;
  const double delta = x - mean;
  mean += delta / static_cast<double>(n);
  m2 += delta * (x - mean);
}

void CellStats::merge(const CellStats& o) {
  if (o.n == 0) return;
  if (n == 0) {
    *this = o;
    return;
  }
  const double delta = o.mean - mean;
  const long nn = n + o.n;
  m2 += o.m2 + delta * delta * static_cast<double>(n) *
                   static_cast<double>(o.n) / static_cast<double>(nn);
  mean += delta * static_cast<double>(o.n) / static_cast<double>(nn);
  n = nn;
}

std::optional<double> CellStats::sd() const {
  if (n < 2) return std::nullopt;
  return std::sqrt(m2 / static_cast<double>(n - 1));
}

std::optional<double> ConditionMetrics::gap_acceptance() const {
  const long d = accepted + rejected;
  if (d == 0) return std::nullopt;
  return static_cast<double>(accepted) / static_cast<double>(d);
}

std::optional<double> ConditionMetrics::early_share() const {
  const long d = early + late;
  if (d == 0) return std::nullopt;
  return static_cast<double>(early) / static_cast<double>(d);
}

void MetricTable::add(const EpisodeRecord& rec) {
  ConditionMetrics& m = rows[condition_of(rec.spec)];
  ++m.n;
  const CrossClass cls = classify_crossing(rec);
  switch (cls) {
    case CrossClass::AcceptedGap: ++m.accepted; break;
    case CrossClass::RejectedGap: ++m.rejected; break;
    case CrossClass::EarlyCross: ++m.early; break;
    case CrossClass::LateCross: ++m.late; break;
    case CrossClass::NoCross: ++m.nocross; break;
  }
  if (rec.outcome != Outcome::Crossed) return;
  const auto cit = crossing_initiation_time(rec);
  const auto spd = average_crossing_speed(rec);
  CellStats* cit_cell = nullptr;
  CellStats* spd_cell = nullptr;
  switch (cls) {
    case CrossClass::AcceptedGap: cit_cell = &m.cit_cross; spd_cell = &m.speed_cross; break;
    case CrossClass::EarlyCross: cit_cell = &m.cit_early; spd_cell = &m.speed_early; break;
    case CrossClass::LateCross: cit_cell = &m.cit_late; spd_cell = &m.speed_late; break;
    default: break;
  }
  if (cit_cell && cit) cit_cell->add(*cit);
  if (spd_cell && spd) spd_cell->add(*spd);
}

MetricTable aggregate(std::span<const EpisodeRecord> records) {
  MetricTable t;
  for (const EpisodeRecord& r : records) t.add(r);
  return t;
}

std::optional<double> cohen_d(const CellStats& a, const CellStats& b) {
  if (a.n < 2 || b.n < 2) return std::nullopt;
  const double va = a.m2 / static_cast<double>(a.n - 1);
  const double vb = b.m2 / static_cast<double>(b.n - 1);
  const double pooled =
      ((a.n - 1) * va + (b.n - 1) * vb) / static_cast<double>(a.n + b.n - 2);
  if (pooled <= 0) return std::nullopt;
  return (a.mean - b.mean) / std::sqrt(pooled);
}

double cohen_h(double p1, double p2) {
  if (p1 < 0 || p1 > 1 || p2 < 0 || p2 > 1)
    throw std::invalid_argument("cohen_h: proportions must be in [0, 1]");
  return 2.0 * std::asin(std::sqrt(p1)) - 2.0 * std::asin(std::sqrt(p2));
}

namespace {

struct RatePool {
  long hits = 0, trials = 0;
  bool ok() const { return trials > 0; }
  double rate() const { return static_cast<double>(hits) / trials; }
};

template <typename Pred>
RatePool pool_gap(const MetricTable& t, Pred pred) {
  RatePool p;
  for (const auto& [key, m] : t.rows) {
    if (key.yielding || !pred(key)) continue;
    p.hits += m.accepted;
    p.trials += m.accepted + m.rejected;
  }
  return p;
}

template <typename Pred>
RatePool pool_early(const MetricTable& t, Pred pred) {
  RatePool p;
  for (const auto& [key, m] : t.rows) {
    if (!key.yielding || !pred(key)) continue;
    p.hits += m.early;
    p.trials += m.early + m.late;
  }
  return p;
}

enum class Cell { CitCross, CitEarly, CitLate, SpeedCross, SpeedAllCrossings };

template <typename Pred>
CellStats pool_cell(const MetricTable& t, Cell which, Pred pred) {
  CellStats out;
  for (const auto& [key, m] : t.rows) {
    if (!pred(key)) continue;
    switch (which) {
      case Cell::CitCross: out.merge(m.cit_cross); break;
      case Cell::CitEarly: out.merge(m.cit_early); break;
      case Cell::CitLate: out.merge(m.cit_late); break;
      case Cell::SpeedCross: out.merge(m.speed_cross); break;
      case Cell::SpeedAllCrossings:
        out.merge(m.speed_cross);
        out.merge(m.speed_early);
        out.merge(m.speed_late);
        break;
    }
  }
  return out;
}

PhenomenonResult rate_phenomenon(const std::string& name, const RatePool& hi,
                                 const RatePool& lo, const std::string& hi_lab,
                                 const std::string& lo_lab) {
  PhenomenonResult r;
  r.name = name;
  if (!hi.ok() || !lo.ok()) {
    r.detail = "empty cells";
    return r;
  }
  r.evaluable = true;
  r.raw_diff = hi.rate() - lo.rate();
  r.holds = r.raw_diff > 0;
  r.effect = cohen_h(hi.rate(), lo.rate());
  r.detail = hi_lab + "=" + fmt4(hi.rate()) + " vs " + lo_lab + "=" +
             fmt4(lo.rate());
  return r;
}

PhenomenonResult mean_phenomenon(const std::string& name, const CellStats& hi,
                                 const CellStats& lo, const std::string& hi_lab,
                                 const std::string& lo_lab) {
  PhenomenonResult r;
  r.name = name;
  if (hi.n == 0 || lo.n == 0) {
    r.detail = "empty cells";
    return r;
  }
  r.evaluable = true;
  r.raw_diff = hi.mean - lo.mean;
  r.holds = r.raw_diff > 0;
  if (auto d = cohen_d(hi, lo)) r.effect = *d;
  r.detail = hi_lab + "=" + fmt4(hi.mean) + " vs " + lo_lab + "=" +
             fmt4(lo.mean);
  return r;
}

// Two distinct levels of a numeric factor, or empty.
std::optional<std::pair<double, double>> two_levels(const std::set<double>& s) {
  if (s.size() != 2) return std::nullopt;
  auto it = s.begin();
  const double lo = *it++;
  return std::make_pair(lo, *it);
}

}  // namespace

std::vector<PhenomenonResult> phenomenon_checklist(const MetricTable& table) {
  std::vector<PhenomenonResult> out;
  std::set<double> taus, speeds;
  bool any_ehmi = false, any_plain_yield = false;
  for (const auto& [key, m] : table.rows) {
    (void)m;
    taus.insert(key.tau0);
    speeds.insert(key.v0);
    if (key.yielding && key.ehmi) any_ehmi = true;
    if (key.yielding && !key.ehmi) any_plain_yield = true;
  }
  const auto tau_pair = two_levels(taus);
  const auto v_pair = two_levels(speeds);

  auto not_eval = [&](const std::string& name, const std::string& why) {
    PhenomenonResult r;
    r.name = name;
    r.detail = why;
    out.push_back(r);
  };

  // Gap-acceptance rate and early-cross share rise with time gap and speed.
  if (tau_pair) {
    auto [lo, hi] = *tau_pair;
    auto at = [](double v) { return [v](const ConditionKey& k) { return k.tau0 == v; }; };
    out.push_back(rate_phenomenon("gap_acceptance_rises_with_time_gap",
                                  pool_gap(table, at(hi)), pool_gap(table, at(lo)),
                                  "g(tau=" + fmt4(hi) + ")",
                                  "g(tau=" + fmt4(lo) + ")"));
    out.push_back(rate_phenomenon("early_share_rises_with_time_gap",
                                  pool_early(table, at(hi)), pool_early(table, at(lo)),
                                  "e(tau=" + fmt4(hi) + ")",
                                  "e(tau=" + fmt4(lo) + ")"));
    out.push_back(mean_phenomenon(
        "cit_nonyield_rises_with_time_gap",
        pool_cell(table, Cell::CitCross,
                  [&](const ConditionKey& k) { return !k.yielding && k.tau0 == hi; }),
        pool_cell(table, Cell::CitCross,
                  [&](const ConditionKey& k) { return !k.yielding && k.tau0 == lo; }),
        "cit(tau=" + fmt4(hi) + ")", "cit(tau=" + fmt4(lo) + ")"));
    out.push_back(mean_phenomenon(
        "crossing_speed_falls_with_time_gap",
        pool_cell(table, Cell::SpeedAllCrossings,
                  [&](const ConditionKey& k) { return k.tau0 == lo; }),
        pool_cell(table, Cell::SpeedAllCrossings,
                  [&](const ConditionKey& k) { return k.tau0 == hi; }),
        "speed(tau=" + fmt4(lo) + ")", "speed(tau=" + fmt4(hi) + ")"));
  } else {
    not_eval("gap_acceptance_rises_with_time_gap", "need exactly two time gaps");
    not_eval("early_share_rises_with_time_gap", "need exactly two time gaps");
    not_eval("cit_nonyield_rises_with_time_gap", "need exactly two time gaps");
    not_eval("crossing_speed_falls_with_time_gap", "need exactly two time gaps");
  }

  if (v_pair) {
    auto [lo, hi] = *v_pair;
    auto at = [](double v) { return [v](const ConditionKey& k) { return k.v0 == v; }; };
    out.push_back(rate_phenomenon("gap_acceptance_rises_with_speed",
                                  pool_gap(table, at(hi)), pool_gap(table, at(lo)),
                                  "g(v0=" + fmt4(hi) + ")",
                                  "g(v0=" + fmt4(lo) + ")"));
    out.push_back(rate_phenomenon("early_share_rises_with_speed",
                                  pool_early(table, at(hi)), pool_early(table, at(lo)),
                                  "e(v0=" + fmt4(hi) + ")",
                                  "e(v0=" + fmt4(lo) + ")"));
    out.push_back(mean_phenomenon(
        "cit_nonyield_rises_with_speed",
        pool_cell(table, Cell::CitCross,
                  [&](const ConditionKey& k) { return !k.yielding && k.v0 == hi; }),
        pool_cell(table, Cell::CitCross,
                  [&](const ConditionKey& k) { return !k.yielding && k.v0 == lo; }),
        "cit(v0=" + fmt4(hi) + ")", "cit(v0=" + fmt4(lo) + ")"));
  } else {
    not_eval("gap_acceptance_rises_with_speed", "need exactly two speeds");
    not_eval("early_share_rises_with_speed", "need exactly two speeds");
    not_eval("cit_nonyield_rises_with_speed", "need exactly two speeds");
  }

  CellStats early_speed, late_speed;
  for (const auto& [key, m] : table.rows) {
    if (!key.yielding) continue;
    early_speed.merge(m.speed_early);
    late_speed.merge(m.speed_late);
  }
  out.push_back(mean_phenomenon("early_crossers_faster_than_late", early_speed,
                                late_speed, "early speed", "late speed"));

  if (any_ehmi && any_plain_yield) {
    out.push_back(mean_phenomenon(
        "ehmi_shortens_late_cit",
        pool_cell(table, Cell::CitLate,
                  [](const ConditionKey& k) { return k.yielding && !k.ehmi; }),
        pool_cell(table, Cell::CitLate,
                  [](const ConditionKey& k) { return k.yielding && k.ehmi; }),
        "cit(no ehmi)", "cit(ehmi)"));
  } else {
    not_eval("ehmi_shortens_late_cit", "need yielding trials with and without ehmi");
  }

  auto day = [](const ConditionKey& k) { return !k.night; };
  auto night = [](const ConditionKey& k) { return k.night; };
  out.push_back(rate_phenomenon("daylight_raises_gap_acceptance",
                                pool_gap(table, day), pool_gap(table, night),
                                "g(day)", "g(night)"));
  out.push_back(rate_phenomenon("daylight_raises_early_share",
                                pool_early(table, day), pool_early(table, night),
                                "e(day)", "e(night)"));
  return out;
}

}  // namespace pedsim
