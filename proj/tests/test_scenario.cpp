#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "pedsim/rng.hpp"
#include "pedsim/scenario.hpp"

using namespace pedsim;

TEST_CASE("mph conversion") {
  CHECK(mph_to_mps(25.0) == doctest::Approx(11.176).epsilon(1e-12));
  CHECK(mph_to_mps(30.0) == doctest::Approx(13.4112).epsilon(1e-12));
  CHECK(mph_to_mps(0.0) == 0.0);
}

TEST_CASE("yield onset distance") {
  CHECK(yield_onset_distance(11.176, 2.3, 3.0) ==
        doctest::Approx(30.15282087).epsilon(1e-9));
  CHECK(yield_onset_distance(13.4112, 2.3, 3.0) ==
        doctest::Approx(42.10006205).epsilon(1e-9));
  CHECK_THROWS_AS(yield_onset_distance(11.176, 0.0, 3.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(yield_onset_distance(11.176, -1.0, 3.0),
                  std::invalid_argument);
}

TEST_CASE("vehicle placement from speed, gap and lead time") {
  ScenarioSpec s;
  s.v0 = mph_to_mps(30.0);
  s.tau0 = 3.0;
  s.lead_time = 2.0;
  InitialWorldState w = build_scenario(s);
  CHECK(w.d1 == doctest::Approx(26.8224).epsilon(1e-12));
  CHECK(w.d2 == doctest::Approx(67.056).epsilon(1e-12));
  CHECK(w.v1 == s.v0);
  CHECK(w.v2 == s.v0);
  CHECK(w.ped_position == 0.0);

  s.v0 = mph_to_mps(25.0);
  s.tau0 = 5.0;
  w = build_scenario(s);
  CHECK(w.d1 == doctest::Approx(22.352).epsilon(1e-12));
  CHECK(w.d2 == doctest::Approx(78.232).epsilon(1e-12));
}

TEST_CASE("yielding scenario carries braking geometry") {
  ScenarioSpec s;
  s.v0 = mph_to_mps(25.0);
  s.tau0 = 5.0;
  s.yielding = true;
  const InitialWorldState w = build_scenario(s);
  CHECK(w.yield_onset == doctest::Approx(30.15282087).epsilon(1e-9));
  CHECK(w.d2 >= w.yield_onset);
}

TEST_CASE("spec validation rejects bad values") {
  ScenarioSpec s;
  SUBCASE("v0") { s.v0 = 0; }
  SUBCASE("negative v0") { s.v0 = -1; }
  SUBCASE("tau0") { s.tau0 = 0; }
  SUBCASE("decel") { s.decel = 0; }
  SUBCASE("lead_time") { s.lead_time = -0.1; }
  SUBCASE("ehmi without yielding") { s.ehmi = true; }
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
}

TEST_CASE("geometry validation") {
  RoadGeometry g;
  CHECK_NOTHROW(g.validate());
  SUBCASE("road width") { g.road_width = 0; }
  SUBCASE("lane center outside road") { g.lane_center = 4.0; }
  SUBCASE("vehicle length") { g.vehicle_length = 0; }
  SUBCASE("ped radius") { g.ped_radius = 0; }
  CHECK_THROWS_AS(g.validate(), std::invalid_argument);
}

TEST_CASE("yielding vehicle must start outside its braking distance") {
  ScenarioSpec s;
  s.v0 = mph_to_mps(30.0);
  s.yielding = true;
  s.lead_time = 0.5;
  s.tau0 = 0.2;  // d2 = 13.4 * 0.7 << onset 42.1
  CHECK_THROWS_AS(build_scenario(s), std::invalid_argument);
}

TEST_CASE("training scenario sampler") {
  Rng rng(12345);
  const int n = 100000;
  double v0_sum = 0;
  int yielding = 0, ehmi = 0, night = 0;
  for (int i = 0; i < n; ++i) {
    const ScenarioSpec s = sample_training_scenario(rng);
    CHECK(s.v0 >= 8.0);
    CHECK(s.v0 <= 17.0);
    CHECK(s.tau0 >= 0.1);
    CHECK(s.tau0 <= 10.0);
    if (s.ehmi) CHECK(s.yielding);
    if (s.yielding) {
      const double onset =
          yield_onset_distance(s.v0, s.decel, s.geometry.stop_margin);
      CHECK(s.v0 * (s.lead_time + s.tau0) >= onset);
      CHECK_NOTHROW(build_scenario(s));
    }
    v0_sum += s.v0;
    yielding += s.yielding;
    ehmi += s.ehmi;
    night += s.night;
  }
  CHECK(v0_sum / n == doctest::Approx(12.5).epsilon(0.01));
  CHECK(static_cast<double>(yielding) / n == doctest::Approx(0.5).epsilon(0.03));
  CHECK(static_cast<double>(night) / n == doctest::Approx(0.5).epsilon(0.03));
  // ehmi ~ 0.5 among yielding draws
  CHECK(static_cast<double>(ehmi) / yielding ==
        doctest::Approx(0.5).epsilon(0.05));
}

TEST_CASE("sampler is deterministic in the seed") {
  Rng a(777), b(777);
  for (int i = 0; i < 50; ++i) {
    const ScenarioSpec x = sample_training_scenario(a);
    const ScenarioSpec y = sample_training_scenario(b);
    CHECK(x.v0 == y.v0);
    CHECK(x.tau0 == y.tau0);
    CHECK(x.yielding == y.yielding);
    CHECK(x.ehmi == y.ehmi);
    CHECK(x.night == y.night);
  }
}

TEST_CASE("rng fork does not advance the parent") {
  Rng a(42);
  const Rng c(42);
  (void)a.fork(3);
  Rng b(42);
  CHECK(a.fork(9).next_u64() == b.fork(9).next_u64());
  CHECK(a.next_u64() == b.next_u64());
  (void)c;
}

TEST_CASE("rng streams differ across fork ids") {
  const Rng root(42);
  CHECK(root.fork(0).next_u64() != root.fork(1).next_u64());
  CHECK(root.fork(1).next_u64() == root.fork(1).next_u64());
}
