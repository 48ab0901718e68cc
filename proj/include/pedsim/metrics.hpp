#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pedsim/record.hpp"

namespace pedsim {

enum class CrossClass { AcceptedGap, RejectedGap, EarlyCross, LateCross, NoCross };
const char* cross_class_name(CrossClass c);

// Timestamps derived from one episode log [s]; NaN when the event never
// happened. gap_onset = vehicle 1 rear passes the crossing line;
// movement_onset = cumulative displacement first exceeds the threshold;
// entry/exit = pedestrian enters the road / reaches the far curb.
struct EpisodeEvents {
  double gap_onset;
  double movement_onset;
  double entry;
  double exit;
};

EpisodeEvents derive_events(const EpisodeRecord& rec,
                            double movement_threshold = 0.05);

// Total, deterministic classification.
// Non-yielding: AcceptedGap iff the pedestrian clears the vehicle lane band
// before vehicle 2 reaches the line, else RejectedGap. Yielding: timeout is
// NoCross; otherwise EarlyCross iff vehicle 2 still moves faster than
// (2/3) v0 at movement onset, else LateCross.
CrossClass classify_crossing(const EpisodeRecord& rec);

// Crossing initiation time = movement onset - gap onset. Empty when either
// event is missing.
std::optional<double> crossing_initiation_time(const EpisodeRecord& rec);

// (ped_start_offset + road_width) / (exit - movement onset); empty unless
// the crossing completed.
std::optional<double> average_crossing_speed(const EpisodeRecord& rec);

struct ConditionKey {
  double v0 = 0;
  double tau0 = 0;
  bool yielding = false;
  bool ehmi = false;
  bool night = false;
  auto operator<=>(const ConditionKey&) const = default;
};
ConditionKey condition_of(const ScenarioSpec& spec);

// Streaming mean/sd cell (Welford).
struct CellStats {
  long n = 0;
  double mean = 0;
  double m2 = 0;
  void add(double x);
  void merge(const CellStats& other);
  std::optional<double> sd() const;  // empty when n < 2
};

struct ConditionMetrics {
  long n = 0;
  long accepted = 0, rejected = 0;         // non-yielding episodes
  long early = 0, late = 0, nocross = 0;   // yielding episodes
  CellStats cit_cross, cit_early, cit_late;      // completed crossings only
  CellStats speed_cross, speed_early, speed_late;

  std::optional<double> gap_acceptance() const;  // accepted / (accepted+rejected)
  std::optional<double> early_share() const;     // early / (early+late)
};

struct MetricTable {
  std::map<ConditionKey, ConditionMetrics> rows;
  void add(const EpisodeRecord& rec);
};

MetricTable aggregate(std::span<const EpisodeRecord> records);

// (mean1 - mean2) / pooled sd, empty when either side has n < 2 or the
// pooled sd is zero.
std::optional<double> cohen_d(const CellStats& a, const CellStats& b);
// 2 asin sqrt(p1) - 2 asin sqrt(p2).
double cohen_h(double p1, double p2);

// One directional claim checked against a table: which factor level should
// score higher and whether it does. effect is Cohen's h for rates, Cohen's d
// for means; raw_diff is the plain difference (higher-expected minus lower).
struct PhenomenonResult {
  std::string name;
  bool evaluable = false;
  bool holds = false;
  double raw_diff = 0;
  double effect = 0;
  std::string detail;
};

std::vector<PhenomenonResult> phenomenon_checklist(const MetricTable& table);

}  // namespace pedsim
