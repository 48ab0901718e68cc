#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "pedsim/metrics.hpp"
#include "pedsim/scenario.hpp"

namespace pedsim {

// Wide one-row-per-condition CSV; the exact header is documented in
// FORMATS.md and enforced on read so external tables fail loudly.
void write_metric_table_csv(std::ostream& os, const MetricTable& table);
MetricTable read_metric_table_csv(std::istream& is);
MetricTable load_metric_table(const std::string& path);  // throws if missing

// The eight bundled vehicle-approach conditions: 25/30 mph x 3/5 s time gap,
// constant-speed and yielding blocks, daylight, no eHMI.
std::vector<ScenarioSpec> default_scenario_table();

// JSON: {"defaults": {...}, "scenarios": [{"v0_mph"|"v0", "tau0",
// "yielding", "ehmi", "night"}, ...]}. Defaults may set decel, lead_time and
// geometry fields applied to every row.
std::vector<ScenarioSpec> parse_scenario_table_json(const std::string& text);
std::vector<ScenarioSpec> load_scenario_table(const std::string& path);

}  // namespace pedsim
