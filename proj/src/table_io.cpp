#include "pedsim/table_io.hpp"

#include <cmath>
#include <fstream>
#include <json.hpp>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "pedsim/csv.hpp"

namespace pedsim {

namespace {

const char* kMetricHeader =
    "v0,tau0,yielding,ehmi,night,n,n_ny,n_y,accepted,rejected,early,late,"
    "nocross,gap_acceptance,early_share,"
    "cit_cross_n,cit_cross_mean,cit_cross_sd,"
    "cit_early_n,cit_early_mean,cit_early_sd,"
    "cit_late_n,cit_late_mean,cit_late_sd,"
    "speed_cross_n,speed_cross_mean,speed_cross_sd,"
    "speed_early_n,speed_early_mean,speed_early_sd,"
    "speed_late_n,speed_late_mean,speed_late_sd";

void write_cell(std::ostream& os, const CellStats& c) {
  os << ',' << c.n << ',' << fmt_double(c.n ? c.mean : std::nan(""));
  const auto sd = c.sd();
  os << ',' << fmt_double(sd ? *sd : std::nan(""));
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

CellStats cell_from(const std::string& n_s, const std::string& mean_s,
                    const std::string& sd_s) {
  CellStats c;
  c.n = std::stol(n_s);
  if (c.n > 0) c.mean = std::stod(mean_s);
  if (c.n >= 2) {
    const double sd = std::stod(sd_s);
    if (std::isfinite(sd)) c.m2 = sd * sd * static_cast<double>(c.n - 1);
  }
  return c;
}

}  // namespace

void write_metric_table_csv(std::ostream& os, const MetricTable& table) {
  os << kMetricHeader << '\n';
  for (const auto& [key, m] : table.rows) {
    os << fmt_double(key.v0) << ',' << fmt_double(key.tau0) << ','
       << (key.yielding ? 1 : 0) << ',' << (key.ehmi ? 1 : 0) << ','
       << (key.night ? 1 : 0) << ',' << m.n << ','
       << (m.accepted + m.rejected) << ',' << (m.early + m.late + m.nocross)
       << ',' << m.accepted << ',' << m.rejected << ',' << m.early << ','
       << m.late << ',' << m.nocross;
    const auto g = m.gap_acceptance();
    const auto e = m.early_share();
    os << ',' << fmt_double(g ? *g : std::nan(""));
    os << ',' << fmt_double(e ? *e : std::nan(""));
    write_cell(os, m.cit_cross);
    write_cell(os, m.cit_early);
    write_cell(os, m.cit_late);
    write_cell(os, m.speed_cross);
    write_cell(os, m.speed_early);
    write_cell(os, m.speed_late);
    os << '\n';
  }
}

MetricTable read_metric_table_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line))
    throw std::invalid_argument("metric table: empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kMetricHeader)
    throw std::invalid_argument("metric table: unexpected header");
  MetricTable t;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const std::vector<std::string> f = split_csv(line);
    if (f.size() != 33)
      throw std::invalid_argument("metric table: wrong column count");
    ConditionKey key;
    key.v0 = std::stod(f[0]);
    key.tau0 = std::stod(f[1]);
    key.yielding = f[2] == "1";
    key.ehmi = f[3] == "1";
    key.night = f[4] == "1";
    ConditionMetrics m;
    m.n = std::stol(f[5]);
    m.accepted = std::stol(f[8]);
    m.rejected = std::stol(f[9]);
    m.early = std::stol(f[10]);
    m.late = std::stol(f[11]);
    m.nocross = std::stol(f[12]);
    m.cit_cross = cell_from(f[15], f[16], f[17]);
    m.cit_early = cell_from(f[18], f[19], f[20]);
    m.cit_late = cell_from(f[21], f[22], f[23]);
    m.speed_cross = cell_from(f[24], f[25], f[26]);
    m.speed_early = cell_from(f[27], f[28], f[29]);
    m.speed_late = cell_from(f[30], f[31], f[32]);
    t.rows[key] = m;
  }
  return t;
}

MetricTable load_metric_table(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open metric table: " + path);
  return read_metric_table_csv(is);
}

std::vector<ScenarioSpec> default_scenario_table() {
  std::vector<ScenarioSpec> out;
  for (const bool yielding : {false, true})
    for (const double mph : {25.0, 30.0})
      for (const double tau : {3.0, 5.0}) {
        ScenarioSpec s;
        s.v0 = mph_to_mps(mph);
        s.tau0 = tau;
        s.yielding = yielding;
        out.push_back(s);
      }
  return out;
}

std::vector<ScenarioSpec> parse_scenario_table_json(const std::string& text) {
  const nlohmann::json j = nlohmann::json::parse(text);
  ScenarioSpec base;
  if (j.contains("defaults")) {
    const auto& d = j.at("defaults");
    base.decel = d.value("decel", base.decel);
    base.lead_time = d.value("lead_time", base.lead_time);
    if (d.contains("geometry")) {
      const auto& g = d.at("geometry");
      RoadGeometry& geo = base.geometry;
      geo.road_width = g.value("road_width", geo.road_width);
      geo.ped_start_offset = g.value("ped_start_offset", geo.ped_start_offset);
      geo.lane_center = g.value("lane_center", geo.lane_center);
      geo.vehicle_length = g.value("vehicle_length", geo.vehicle_length);
      geo.vehicle_width = g.value("vehicle_width", geo.vehicle_width);
      geo.ped_radius = g.value("ped_radius", geo.ped_radius);
      geo.stop_margin = g.value("stop_margin", geo.stop_margin);
    }
  }
  std::vector<ScenarioSpec> out;
  for (const auto& row : j.at("scenarios")) {
    ScenarioSpec s = base;
    if (row.contains("v0_mph"))
      s.v0 = mph_to_mps(row.at("v0_mph").get<double>());
    else
      s.v0 = row.at("v0").get<double>();
    s.tau0 = row.at("tau0").get<double>();
    s.yielding = row.value("yielding", false);
    s.ehmi = row.value("ehmi", false);
    s.night = row.value("night", false);
    s.decel = row.value("decel", s.decel);
    s.lead_time = row.value("lead_time", s.lead_time);
    s.validate();
    out.push_back(s);
  }
  if (out.empty())
    throw std::invalid_argument("scenario table: no scenarios");
  return out;
}

std::vector<ScenarioSpec> load_scenario_table(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open scenario table: " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_scenario_table_json(ss.str());
}

}  // namespace pedsim
