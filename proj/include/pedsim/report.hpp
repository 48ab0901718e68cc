#pragma once

#include <iosfwd>
#include <span>
#include <vector>

#include "pedsim/metrics.hpp"
#include "pedsim/record.hpp"
#include "pedsim/scenario.hpp"

namespace pedsim {

void write_checklist_json(std::ostream& os,
                          std::span<const PhenomenonResult> results);
void write_checklist_text(std::ostream& os,
                          std::span<const PhenomenonResult> results);

// Wide CSV: one row per position bin, a mean column, then one column per
// episode (nan where the episode has no samples in the bin).
void write_speed_profiles_csv(std::ostream& os,
                              std::span<const EpisodeRecord> records,
                              double bin_width = 0.25);

// Long CSV: one row per episode with its class, CIT and average speed.
void write_cit_csv(std::ostream& os, std::span<const EpisodeRecord> records);

// Mean absolute speed change per tick (pooled over all consecutive tick
// pairs of all records). The sensory-only variant scores much higher than
// the full model because it may jump speeds every tick.
double speed_roughness(const EpisodeRecord& rec);
double mean_speed_roughness(std::span<const EpisodeRecord> records);

// Reads the long-format episode CSV back into records. Geometry and vehicle
// dynamics are recovered by matching each episode's condition to
// condition_specs (falling back to defaults when no row matches).
std::vector<EpisodeRecord> read_episode_csv(
    std::istream& is, const std::vector<ScenarioSpec>& condition_specs);

}  // namespace pedsim
