#include <doctest.h>

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include "pedsim/env.hpp"
#include "pedsim/metrics.hpp"
#include "pedsim/record.hpp"
#include "pedsim/report.hpp"

using namespace pedsim;

namespace {

TickRow tick(double t, double ped_pos, double veh1_d = 50.0,
             double veh2_d = 50.0, double veh2_v = 0.0) {
  TickRow r;
  r.t = t;
  r.ped_pos = ped_pos;
  r.veh_d[0] = veh1_d;
  r.veh_d[1] = veh2_d;
  r.veh_v[1] = veh2_v;
  return r;
}

EpisodeRecord make_record(bool yielding, Outcome outcome,
                          std::vector<TickRow> ticks) {
  EpisodeRecord rec;
  rec.spec.v0 = 11.176;
  rec.spec.tau0 = 3.0;
  rec.spec.yielding = yielding;
  rec.outcome = outcome;
  rec.ticks = std::move(ticks);
  return rec;
}

}  // namespace

TEST_CASE("event derivation from a tick log") {
  // gap onset when vehicle 1's rear clears the line, movement onset at the
  // displacement threshold, entry and exit at the curbs.
  EpisodeRecord rec = make_record(false, Outcome::Crossed,
                                  {
                                      tick(0.0, 0.0, 2.0),
                                      tick(0.5, 0.0, -1.0),
                                      tick(1.0, 0.04, -4.5),
                                      tick(2.4, 0.06, -20.0),
                                      tick(3.0, 0.5, -30.0),
                                      tick(4.9, 4.0, -50.0),
                                  });
  const EpisodeEvents ev = derive_events(rec);
  CHECK(ev.gap_onset == doctest::Approx(1.0));
  CHECK(ev.movement_onset == doctest::Approx(2.4));
  CHECK(ev.entry == doctest::Approx(3.0));
  CHECK(ev.exit == doctest::Approx(4.9));
  CHECK(*crossing_initiation_time(rec) == doctest::Approx(1.4).epsilon(1e-12));
  CHECK(*average_crossing_speed(rec) == doctest::Approx(1.6).epsilon(1e-12));
}

TEST_CASE("events missing from the log stay NaN") {
  EpisodeRecord rec =
      make_record(false, Outcome::Timeout, {tick(0.0, 0.0, 2.0)});
  const EpisodeEvents ev = derive_events(rec);
  CHECK(std::isnan(ev.gap_onset));
  CHECK(std::isnan(ev.movement_onset));
  CHECK_FALSE(crossing_initiation_time(rec).has_value());
  CHECK_FALSE(average_crossing_speed(rec).has_value());
}

TEST_CASE("zero CIT when movement starts with the gap") {
  EpisodeRecord rec = make_record(false, Outcome::Crossed,
                                  {tick(0.0, 0.0, 2.0), tick(1.0, 0.1, -4.5)});
  CHECK(*crossing_initiation_time(rec) == doctest::Approx(0.0));
}

TEST_CASE("no vehicles means no gap onset") {
  EpisodeRecord rec = make_record(false, Outcome::Crossed,
                                  {tick(0.0, 0.0, -9.0), tick(1.0, 4.0, -9.0)});
  rec.spec.include_vehicles = false;
  CHECK(std::isnan(derive_events(rec).gap_onset));
}

TEST_CASE("non-yielding classification by lane clearance") {
  // clear_pos = 0.5 + 1.75 + 0.9 + 0.25 = 3.4 with the default geometry
  SUBCASE("cleared before vehicle 2 arrives") {
    EpisodeRecord rec = make_record(false, Outcome::Crossed,
                                    {tick(0.0, 0.0, 2.0, 40.0),
                                     tick(2.0, 3.4, -25.0, 10.0),
                                     tick(3.0, 4.0, -40.0, -5.0)});
    CHECK(classify_crossing(rec) == CrossClass::AcceptedGap);
  }
  SUBCASE("tie counts as accepted") {
    EpisodeRecord rec = make_record(false, Outcome::Crossed,
                                    {tick(0.0, 0.0, 2.0, 40.0),
                                     tick(2.0, 3.4, -25.0, 0.0)});
    CHECK(classify_crossing(rec) == CrossClass::AcceptedGap);
  }
  SUBCASE("cleared after vehicle 2 reached the line") {
    EpisodeRecord rec = make_record(false, Outcome::Crossed,
                                    {tick(0.0, 0.0, 2.0, 40.0),
                                     tick(2.0, 1.0, -25.0, -1.0),
                                     tick(5.0, 3.4, -60.0, -30.0)});
    CHECK(classify_crossing(rec) == CrossClass::RejectedGap);
  }
  SUBCASE("never cleared") {
    EpisodeRecord rec = make_record(false, Outcome::Timeout,
                                    {tick(0.0, 0.0, 2.0, 40.0)});
    CHECK(classify_crossing(rec) == CrossClass::RejectedGap);
  }
}

TEST_CASE("yielding classification by vehicle speed at movement onset") {
  // threshold = (2/3) * 11.176 = 7.450666667
  auto rec_with_v2 = [](double v2_at_onset) {
    return make_record(true, Outcome::Crossed,
                       {tick(0.0, 0.0, 2.0, 40.0, 11.176),
                        tick(1.0, 0.0, -4.5, 30.0, 11.176),
                        tick(2.0, 0.2, -15.0, 25.0, v2_at_onset),
                        tick(5.0, 4.0, -50.0, 5.0, 0.0)});
  };
  CHECK(classify_crossing(rec_with_v2(8.0)) == CrossClass::EarlyCross);
  CHECK(classify_crossing(rec_with_v2(7.0)) == CrossClass::LateCross);
  // Early only when strictly above the threshold.
  CHECK(classify_crossing(rec_with_v2((2.0 / 3.0) * 11.176)) ==
        CrossClass::LateCross);
  CHECK(classify_crossing(rec_with_v2(7.46)) == CrossClass::EarlyCross);
}

TEST_CASE("yielding timeout or no movement is NoCross") {
  EpisodeRecord rec = make_record(true, Outcome::Timeout,
                                  {tick(0.0, 0.0, 2.0, 40.0, 11.176),
                                   tick(2.0, 0.2, -15.0, 25.0, 8.0)});
  CHECK(classify_crossing(rec) == CrossClass::NoCross);
  EpisodeRecord still = make_record(true, Outcome::Collision,
                                    {tick(0.0, 0.0, 2.0, 40.0, 11.176)});
  CHECK(classify_crossing(still) == CrossClass::NoCross);
}

TEST_CASE("aggregate counts classes per condition") {
  std::vector<EpisodeRecord> recs;
  for (int i = 0; i < 7; ++i)
    recs.push_back(make_record(false, Outcome::Crossed,
                               {tick(0.0, 0.0, 2.0, 50.0),
                                tick(0.5, 0.0, -4.5, 45.0),
                                tick(1.0, 0.2, -10.0, 40.0),
                                tick(3.0, 4.0, -30.0, 20.0)}));
  for (int i = 0; i < 3; ++i)
    recs.push_back(make_record(false, Outcome::Timeout,
                               {tick(0.0, 0.0, 2.0, 50.0),
                                tick(0.5, 0.0, -4.5, 45.0)}));
  MetricTable t = aggregate(recs);
  REQUIRE(t.rows.size() == 1);
  const ConditionMetrics& m = t.rows.begin()->second;
  CHECK(m.n == 10);
  CHECK(m.accepted == 7);
  CHECK(m.rejected == 3);
  CHECK(*m.gap_acceptance() == doctest::Approx(0.7).epsilon(1e-12));
  CHECK(m.cit_cross.n == 7);
  CHECK(m.cit_cross.mean == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(m.speed_cross.mean == doctest::Approx(4.0 / 2.0).epsilon(1e-12));

  // Order invariance.
  std::reverse(recs.begin(), recs.end());
  MetricTable t2 = aggregate(recs);
  CHECK(t2.rows.begin()->second.accepted == 7);
  CHECK(t2.rows.begin()->second.cit_cross.mean ==
        doctest::Approx(m.cit_cross.mean).epsilon(1e-12));
}

TEST_CASE("cell statistics") {
  CellStats c;
  for (double x : {1.0, 2.0, 3.0, 4.0}) c.add(x);
  CHECK(c.n == 4);
  CHECK(c.mean == doctest::Approx(2.5).epsilon(1e-12));
  CHECK(*c.sd() == doctest::Approx(std::sqrt(5.0 / 3.0)).epsilon(1e-12));
  CellStats single;
  single.add(1.0);
  CHECK_FALSE(single.sd().has_value());
}

TEST_CASE("cell merge equals sequential accumulation") {
  CellStats a, b, whole;
  for (int i = 0; i < 10; ++i) {
    const double x = 0.3 * i - 1.0;
    (i < 4 ? a : b).add(x);
    whole.add(x);
  }
  a.merge(b);
  CHECK(a.n == whole.n);
  CHECK(a.mean == doctest::Approx(whole.mean).epsilon(1e-12));
  CHECK(a.m2 == doctest::Approx(whole.m2).epsilon(1e-12));
  CellStats empty;
  empty.merge(whole);
  CHECK(empty.mean == doctest::Approx(whole.mean).epsilon(1e-12));
  whole.merge(CellStats{});
  CHECK(whole.n == 10);
}

TEST_CASE("effect sizes") {
  CellStats a, b;
  const double s = 0.4 / std::sqrt(2.0);
  a.add(1.4 - s);
  a.add(1.4 + s);
  b.add(1.2 - s);
  b.add(1.2 + s);
  CHECK(*cohen_d(a, b) == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(*cohen_d(b, a) == doctest::Approx(-0.5).epsilon(1e-9));
  CellStats single;
  single.add(1.0);
  CHECK_FALSE(cohen_d(single, b).has_value());

  CHECK(cohen_h(0.9, 0.4) == doctest::Approx(1.128653139).epsilon(1e-9));
  CHECK(cohen_h(0.4, 0.9) == doctest::Approx(-1.128653139).epsilon(1e-9));
  CHECK(cohen_h(0.5, 0.5) == 0.0);
  CHECK_THROWS_AS(cohen_h(-0.1, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(cohen_h(0.5, 1.1), std::invalid_argument);
}

namespace {

// Synthetic table where every documented trend holds by construction.
MetricTable trending_table() {
  MetricTable t;
  const double v_lo = 11.176, v_hi = 13.4112;
  for (double v0 : {v_lo, v_hi})
    for (double tau : {3.0, 5.0})
      for (bool night : {false, true}) {
        const long bump_g = (tau == 5.0 ? 20 : 0) + (v0 == v_hi ? 10 : 0) +
                            (night ? 0 : 10);
        ConditionKey nk{v0, tau, false, false, night};
        ConditionMetrics& nm = t.rows[nk];
        nm.accepted = 40 + bump_g;
        nm.rejected = 100 - nm.accepted;
        nm.n = 100;
        const double cit = 1.0 + (tau == 5.0 ? 0.5 : 0.0) +
                           (v0 == v_hi ? 0.3 : 0.0);
        nm.cit_cross.add(cit - 0.1);
        nm.cit_cross.add(cit + 0.1);
        const double spd = 1.6 - (tau == 5.0 ? 0.2 : 0.0);
        nm.speed_cross.add(spd - 0.05);
        nm.speed_cross.add(spd + 0.05);

        ConditionKey yk{v0, tau, true, false, night};
        ConditionMetrics& ym = t.rows[yk];
        ym.early = 30 + bump_g;
        ym.late = 100 - ym.early;
        ym.n = 100;
        ym.cit_late.add(2.0 - 0.1);
        ym.cit_late.add(2.0 + 0.1);
        ym.speed_early.add(1.7 - (tau == 5.0 ? 0.2 : 0.0));
        ym.speed_early.add(1.7 - (tau == 5.0 ? 0.2 : 0.0) + 0.02);
        ym.speed_late.add(1.3 - (tau == 5.0 ? 0.2 : 0.0));
        ym.speed_late.add(1.3 - (tau == 5.0 ? 0.2 : 0.0) + 0.02);

        ConditionKey ek{v0, tau, true, true, night};
        ConditionMetrics& em = t.rows[ek];
        em.early = 30 + bump_g;
        em.late = 100 - em.early;
        em.n = 100;
        em.cit_late.add(1.5 - 0.1);
        em.cit_late.add(1.5 + 0.1);
      }
  return t;
}

}  // namespace

TEST_CASE("checklist on a table where every trend holds") {
  const auto results = phenomenon_checklist(trending_table());
  REQUIRE(results.size() == 11);
  const char* names[] = {"gap_acceptance_rises_with_time_gap",
                         "early_share_rises_with_time_gap",
                         "cit_nonyield_rises_with_time_gap",
                         "crossing_speed_falls_with_time_gap",
                         "gap_acceptance_rises_with_speed",
                         "early_share_rises_with_speed",
                         "cit_nonyield_rises_with_speed",
                         "early_crossers_faster_than_late",
                         "ehmi_shortens_late_cit",
                         "daylight_raises_gap_acceptance",
                         "daylight_raises_early_share"};
  for (std::size_t i = 0; i < results.size(); ++i) {
    CAPTURE(results[i].name);
    CHECK(results[i].name == names[i]);
    CHECK(results[i].evaluable);
    CHECK(results[i].holds);
    CHECK(results[i].raw_diff > 0);
  }
}

TEST_CASE("flat tables are evaluable but nothing holds") {
  MetricTable t = trending_table();
  for (auto& [key, m] : t.rows) {
    (void)key;
    m.accepted = 50;
    m.rejected = 50;
    m.early = 50;
    m.late = 50;
    m.cit_cross = CellStats{};
    m.cit_cross.add(0.9);
    m.cit_cross.add(1.1);
    m.cit_late = CellStats{};
    m.cit_late.add(1.9);
    m.cit_late.add(2.1);
    m.speed_cross = CellStats{};
    m.speed_cross.add(1.5);
    m.speed_cross.add(1.7);
    m.speed_early = m.speed_cross;
    m.speed_late = m.speed_cross;
  }
  for (const auto& r : phenomenon_checklist(t)) {
    CAPTURE(r.name);
    CHECK(r.evaluable);
    CHECK_FALSE(r.holds);
  }
}

TEST_CASE("checklist reports why a phenomenon cannot be evaluated") {
  MetricTable t;
  ConditionKey k{11.176, 3.0, false, false, false};
  t.rows[k].accepted = 5;
  t.rows[k].rejected = 5;
  t.rows[k].n = 10;
  const auto results = phenomenon_checklist(t);
  REQUIRE(results.size() == 11);
  for (const auto& r : results) CHECK_FALSE(r.evaluable);
  CHECK(results[0].detail == "need exactly two time gaps");
  CHECK(results[4].detail == "need exactly two speeds");
  CHECK(results[7].detail == "empty cells");
  CHECK(results[8].detail == "need yielding trials with and without ehmi");
  CHECK(results[9].detail == "empty cells");  // no night rows
}

TEST_CASE("speed roughness") {
  EpisodeRecord rec;
  for (double v : {0.0, 1.0, 1.0, 0.5}) {
    TickRow r;
    r.ped_speed = v;
    rec.ticks.push_back(r);
  }
  CHECK(speed_roughness(rec) == doctest::Approx(0.5).epsilon(1e-12));
  EpisodeRecord flat;
  for (int i = 0; i < 3; ++i) {
    TickRow r;
    r.ped_speed = 1.0;
    flat.ticks.push_back(r);
  }
  CHECK(speed_roughness(flat) == 0.0);
  const std::vector<EpisodeRecord> both{rec, flat};
  // Pooled over 3 + 2 consecutive pairs.
  CHECK(mean_speed_roughness(both) == doctest::Approx(1.5 / 5.0).epsilon(1e-12));
}

TEST_CASE("episode CSV round trip preserves metrics") {
  std::vector<ScenarioSpec> specs;
  ScenarioSpec a;
  a.v0 = mph_to_mps(25.0);
  a.tau0 = 5.0;
  a.yielding = true;
  specs.push_back(a);
  ScenarioSpec b;
  b.v0 = mph_to_mps(30.0);
  b.tau0 = 3.0;
  specs.push_back(b);

  NonPolicyParams p;
  p.sigma_v_day = 2.0;
  p.time_pressure_gain = 1.0;
  p.effort_weight = 1.0;
  p.looming_weight = 0.5;

  std::vector<EpisodeRecord> recs;
  std::uint64_t id = 0;
  std::ostringstream os;
  write_episode_csv_header(os);
  for (const ScenarioSpec& s : specs) {
    CrossingEnv env;
    env.reset(s, p, Variant::SM, 1000 + id);
    Rng rng(id);
    while (!env.done()) env.step(rng.uniform_int(env.action_count()));
    recs.push_back(env.take_record());
    append_episode_csv(os, recs.back(), id);
    ++id;
  }

  std::istringstream is(os.str());
  const std::vector<EpisodeRecord> back = read_episode_csv(is, specs);
  REQUIRE(back.size() == recs.size());
  for (std::size_t i = 0; i < recs.size(); ++i) {
    CHECK(back[i].ticks.size() == recs[i].ticks.size());
    CHECK(back[i].outcome == recs[i].outcome);
    CHECK(back[i].variant == recs[i].variant);
    CHECK(back[i].spec.v0 == doctest::Approx(recs[i].spec.v0).epsilon(1e-9));
    CHECK(back[i].spec.yielding == recs[i].spec.yielding);
    CHECK(back[i].return_sum ==
          doctest::Approx(recs[i].return_sum).epsilon(1e-6));
    CHECK(classify_crossing(back[i]) == classify_crossing(recs[i]));
    const auto cit0 = crossing_initiation_time(recs[i]);
    const auto cit1 = crossing_initiation_time(back[i]);
    CHECK(cit0.has_value() == cit1.has_value());
    if (cit0 && cit1) CHECK(*cit1 == doctest::Approx(*cit0).epsilon(1e-6));
  }
}

TEST_CASE("episode CSV reader rejects a foreign header") {
  std::istringstream is("a,b,c\n1,2,3\n");
  CHECK_THROWS_AS(read_episode_csv(is, {}), std::invalid_argument);
}

TEST_CASE("speed profile CSV shape") {
  EpisodeRecord rec;
  for (int i = 0; i <= 10; ++i) {
    TickRow r;
    r.ped_pos = 0.1 * i;
    r.ped_speed = 1.0;
    rec.ticks.push_back(r);
  }
  std::ostringstream os;
  write_speed_profiles_csv(os, std::vector<EpisodeRecord>{rec}, 0.25);
  std::istringstream is(os.str());
  std::string header;
  std::getline(is, header);
  CHECK(header == "bin_center,mean_speed,ep0");
  int rows = 0;
  int nan_rows = 0;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    ++rows;
    if (line.find("nan") != std::string::npos) ++nan_rows;
  }
  CHECK(rows == 16);      // 4 m path at 0.25 m per bin
  CHECK(nan_rows == 11);  // ticks only reach 1.0 m, bins past that are empty
}

TEST_CASE("checklist JSON is machine readable") {
  const auto results = phenomenon_checklist(trending_table());
  std::ostringstream os;
  write_checklist_json(os, results);
  const nlohmann::json j = nlohmann::json::parse(os.str());
  CHECK(j["evaluable"] == 11);
  CHECK(j["holding"] == 11);
  REQUIRE(j["phenomena"].size() == 11);
  CHECK(j["phenomena"][0]["name"] == "gap_acceptance_rises_with_time_gap");
  CHECK(j["phenomena"][0]["holds"] == true);
}
