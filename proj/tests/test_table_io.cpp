#include <doctest.h>

#include <json.hpp>
#include <sstream>
#include <stdexcept>

#include "pedsim/table_io.hpp"

using namespace pedsim;

namespace {

MetricTable sample_table() {
  MetricTable t;
  {
    ConditionMetrics& m = t.rows[ConditionKey{11.176, 3.0, false, false, false}];
    m.n = 10;
    m.accepted = 7;
    m.rejected = 3;
    m.cit_cross.add(1.0);
    m.cit_cross.add(2.0);
    m.speed_cross.add(1.6);  // n = 1, sd undefined
  }
  {
    ConditionMetrics& m = t.rows[ConditionKey{13.4112, 5.0, true, true, true}];
    m.n = 6;
    m.early = 2;
    m.late = 3;
    m.nocross = 1;
    m.cit_early.add(0.9);
    m.cit_early.add(1.1);
    m.cit_early.add(1.3);
    m.speed_late.add(1.25);
    m.speed_late.add(1.25);
  }
  return t;
}

}  // namespace

TEST_CASE("default scenario table enumerates the bundled conditions") {
  const std::vector<ScenarioSpec> table = default_scenario_table();
  REQUIRE(table.size() == 8);
  const bool yieldings[] = {false, false, false, false, true, true, true, true};
  const double v0s[] = {11.176, 11.176, 13.4112, 13.4112,
                        11.176, 11.176, 13.4112, 13.4112};
  const double taus[] = {3, 5, 3, 5, 3, 5, 3, 5};
  for (int i = 0; i < 8; ++i) {
    CHECK(table[i].yielding == yieldings[i]);
    CHECK(table[i].v0 == doctest::Approx(v0s[i]).epsilon(1e-12));
    CHECK(table[i].tau0 == taus[i]);
    CHECK(table[i].ehmi == false);
    CHECK(table[i].night == false);
    CHECK(table[i].decel == 2.3);
    CHECK(table[i].lead_time == 2.0);
    CHECK_NOTHROW(build_scenario(table[i]));
  }
}

TEST_CASE("metric table survives a write/read/write round trip byte for byte") {
  const MetricTable t = sample_table();
  std::ostringstream first;
  write_metric_table_csv(first, t);

  std::istringstream back(first.str());
  const MetricTable u = read_metric_table_csv(back);
  REQUIRE(u.rows.size() == 2);

  const ConditionMetrics& m =
      u.rows.at(ConditionKey{11.176, 3.0, false, false, false});
  CHECK(m.n == 10);
  CHECK(m.accepted == 7);
  CHECK(m.rejected == 3);
  REQUIRE(m.gap_acceptance().has_value());
  CHECK(*m.gap_acceptance() == doctest::Approx(0.7).epsilon(1e-12));
  CHECK(m.cit_cross.n == 2);
  CHECK(m.cit_cross.mean == 1.5);
  REQUIRE(m.cit_cross.sd().has_value());
  CHECK(*m.cit_cross.sd() == doctest::Approx(0.7071067811865476).epsilon(1e-9));
  CHECK(m.speed_cross.n == 1);
  CHECK(m.speed_cross.mean == 1.6);
  CHECK(!m.speed_cross.sd().has_value());

  const ConditionMetrics& y =
      u.rows.at(ConditionKey{13.4112, 5.0, true, true, true});
  CHECK(y.early == 2);
  CHECK(y.late == 3);
  CHECK(y.nocross == 1);
  REQUIRE(y.early_share().has_value());
  CHECK(*y.early_share() == doctest::Approx(0.4).epsilon(1e-12));
  CHECK(y.cit_early.n == 3);
  CHECK(y.cit_early.mean == doctest::Approx(1.1).epsilon(1e-9));

  std::ostringstream second;
  write_metric_table_csv(second, u);
  CHECK(second.str() == first.str());
}

TEST_CASE("metric table reader rejects malformed input") {
  std::istringstream empty("");
  CHECK_THROWS_AS(read_metric_table_csv(empty), std::invalid_argument);

  std::istringstream bad_header("a,b,c\n1,2,3\n");
  CHECK_THROWS_AS(read_metric_table_csv(bad_header), std::invalid_argument);

  std::ostringstream good;
  write_metric_table_csv(good, sample_table());
  std::string text = good.str();
  const std::size_t header_end = text.find('\n');
  std::istringstream short_row(text.substr(0, header_end + 1) + "1,2,3\n");
  CHECK_THROWS_AS(read_metric_table_csv(short_row), std::invalid_argument);
}

TEST_CASE("loading a missing metric table fails loudly") {
  CHECK_THROWS_AS(load_metric_table("/nonexistent/table.csv"),
                  std::runtime_error);
}

TEST_CASE("scenario table json, minimal row") {
  const auto rows = parse_scenario_table_json(
      R"({"scenarios": [{"v0_mph": 30, "tau0": 3}]})");
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].v0 == doctest::Approx(13.4112).epsilon(1e-12));
  CHECK(rows[0].tau0 == 3.0);
  CHECK(rows[0].yielding == false);
  CHECK(rows[0].ehmi == false);
  CHECK(rows[0].night == false);
  CHECK(rows[0].decel == 2.3);
  CHECK(rows[0].lead_time == 2.0);
  CHECK(rows[0].geometry.road_width == 3.5);
}

TEST_CASE("scenario table json, defaults and per-row overrides") {
  const auto rows = parse_scenario_table_json(R"({
    "defaults": {
      "decel": 3.5,
      "lead_time": 1.0,
      "geometry": {"road_width": 4.0, "stop_margin": 2.0}
    },
    "scenarios": [
      {"v0": 10.0, "tau0": 2.0, "yielding": true, "ehmi": true, "night": true},
      {"v0": 9.0, "tau0": 4.0, "yielding": true, "decel": 2.0}
    ]
  })");
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].v0 == 10.0);
  CHECK(rows[0].decel == 3.5);
  CHECK(rows[0].lead_time == 1.0);
  CHECK(rows[0].yielding);
  CHECK(rows[0].ehmi);
  CHECK(rows[0].night);
  CHECK(rows[0].geometry.road_width == 4.0);
  CHECK(rows[0].geometry.stop_margin == 2.0);
  CHECK(rows[0].geometry.lane_center == 1.75);
  CHECK(rows[1].decel == 2.0);
  CHECK(rows[1].lead_time == 1.0);
  CHECK(!rows[1].ehmi);
}

TEST_CASE("scenario table json rejects invalid content") {
  CHECK_THROWS_AS(
      parse_scenario_table_json(R"({"scenarios": [{"v0": 10, "tau0": 3, "ehmi": true}]})"),
      std::invalid_argument);
  CHECK_THROWS_AS(parse_scenario_table_json(R"({"scenarios": []})"),
                  std::invalid_argument);
  CHECK_THROWS_AS(parse_scenario_table_json("{}"), nlohmann::json::exception);
  CHECK_THROWS_AS(parse_scenario_table_json("not json"),
                  nlohmann::json::exception);
}

TEST_CASE("loading a missing scenario table fails loudly") {
  CHECK_THROWS_AS(load_scenario_table("/nonexistent/table.json"),
                  std::runtime_error);
}
