#include "test_support.hpp"

#include "mobility/metrics.hpp"

#include <doctest.h>

#include <random>

using namespace mobility;
using testing::cell;
using testing::ping;
using testing::rec;

namespace {

std::vector<Ping> visits(std::initializer_list<std::tuple<int, int, int>> spec) {
  std::vector<Ping> out;
  int slot = 0;
  for (auto [x, y, n] : spec)
    for (int i = 0; i < n; ++i, ++slot) out.push_back(ping(slot / 48, slot % 48, x, y));
  return out;
}

}  // namespace

TEST_SUITE("mobility_metrics") {

TEST_CASE("center of mass") {
  auto h = build_visit_histogram(visits({{1, 1, 1}, {3, 1, 1}}));
  CHECK(h.center_of_mass.x() == doctest::Approx(2.0));
  CHECK(h.center_of_mass.y() == doctest::Approx(1.0));
  h = build_visit_histogram(visits({{1, 1, 3}, {5, 1, 1}}));
  CHECK(h.center_of_mass.x() == doctest::Approx(2.0));
  CHECK(h.center_of_mass.y() == doctest::Approx(1.0));
  CHECK(h.total == 4);
  CHECK(h.distinct() == 2);
}

TEST_CASE("radius of gyration examples") {
  CHECK(radius_of_gyration(build_visit_histogram(visits({{1, 1, 1}, {5, 1, 1}}))) == doctest::Approx(1.0));
  CHECK(radius_of_gyration(build_visit_histogram(visits({{1, 1, 3}, {5, 1, 1}}))) ==
        doctest::Approx(0.8660254).epsilon(1e-6));
  CHECK(radius_of_gyration(build_visit_histogram(visits({{7, 7, 10}}))) == 0.0);
}

TEST_CASE("k-radius of gyration keeps the k most visited cells") {
  const auto h = build_visit_histogram(visits({{1, 1, 5}, {3, 1, 3}, {11, 1, 1}}));
  CHECK(k_radius_of_gyration(h, 2) == doctest::Approx(0.4841229).epsilon(1e-6));
  CHECK(k_radius_of_gyration(h, 3) == radius_of_gyration(h));
  CHECK(k_radius_of_gyration(h, 10) == radius_of_gyration(h));
  CHECK_THROWS(k_radius_of_gyration(h, 1));
}

TEST_CASE("top-k ranking breaks ties by x then y") {
  const auto h = build_visit_histogram(visits({{9, 1, 2}, {4, 7, 2}, {4, 2, 2}, {1, 1, 1}}));
  const auto p = top_k_profile(h, 2);
  REQUIRE(p.ranked.size() == 2);
  CHECK(p.ranked[0].cell == cell(4, 2));
  CHECK(p.ranked[1].cell == cell(4, 7));
  CHECK(p.total == 4);
}

TEST_CASE("classification") {
  auto c = classify(3.0, 2.7);
  CHECK(c.s_k == doctest::Approx(0.9));
  CHECK(c.label == Label::Returner);
  c = classify(3.0, 0.3);
  CHECK(c.s_k == doctest::Approx(0.1));
  CHECK(c.label == Label::Explorer);
  c = classify(0.0, 0.0);
  CHECK(c.s_k == 1.0);
  CHECK(c.label == Label::Returner);
  CHECK(classify(2.0, 1.0).label == Label::Returner);
  CHECK(classify(2.0, 1.0, 0.5, ClassificationRule::ReturnerBelow).label == Label::Explorer);
}

TEST_CASE("home is the most frequent night cell") {
  std::vector<Ping> r;
  for (int d = 0; d < 30; ++d) r.push_back(ping(d, 44, 5, 5));
  for (int d = 0; d < 10; ++d) r.push_back(ping(d, 2, 7, 7));
  for (int d = 0; d < 50; ++d) r.push_back(ping(d, 24, 9, 9));  // daytime, ignored
  std::sort(r.begin(), r.end(), [](auto& a, auto& b) { return std::pair(a.day, a.slot) < std::pair(b.day, b.slot); });
  const auto h = infer_home(1, r);
  REQUIRE(h);
  CHECK(h->cell == cell(5, 5));
  CHECK(h->night_visit_count == 30);
  CHECK_FALSE(h->fallback);
}

TEST_CASE("home ties resolve to the smaller x then y") {
  const std::vector<Ping> r{ping(0, 40, 4, 9), ping(0, 41, 4, 2)};
  CHECK(infer_home(1, r)->cell == cell(4, 2));
}

TEST_CASE("night window starts at slot 40") {
  const std::vector<Ping> r{ping(0, 39, 9, 9), ping(0, 41, 2, 2)};
  CHECK(infer_home(1, r)->cell == cell(2, 2));
  CHECK(is_night_slot(40));
  CHECK(is_night_slot(15));
  CHECK_FALSE(is_night_slot(16));
  CHECK_FALSE(is_night_slot(39));
}

TEST_CASE("home ignores days outside the usual window and falls back without night records") {
  const std::vector<Ping> r{ping(5, 20, 3, 3), ping(61, 44, 8, 8)};
  const auto h = infer_home(1, r);
  REQUIRE(h);
  CHECK(h->cell == cell(3, 3));
  CHECK(h->fallback);
  CHECK_FALSE(infer_home(1, std::vector<Ping>{ping(70, 44, 1, 1)}));
}

TEST_CASE("stay segmentation") {
  const std::vector<Ping> r{ping(0, 0, 1, 1), ping(0, 1, 1, 1), ping(0, 2, 1, 1), ping(0, 3, 2, 2)};
  const auto s = segment_stays(r);
  REQUIRE(s.size() == 2);
  CHECK(s[0].duration_minutes() == 90);
  CHECK(s[1].duration_minutes() == 30);

  const std::vector<Ping> gap{ping(0, 0, 1, 1), ping(0, 2, 1, 1)};
  const auto g = segment_stays(gap);
  REQUIRE(g.size() == 2);
  CHECK(g[0].duration_minutes() == 30);
  CHECK(g[1].duration_minutes() == 30);
  const auto b = segment_stays(gap, 1);
  REQUIRE(b.size() == 1);
  CHECK(b[0].duration_minutes() == 60);

  const std::vector<Ping> midnight{ping(0, 47, 1, 1), ping(1, 0, 1, 1)};
  CHECK(segment_stays(midnight, 5).size() == 2);
}

TEST_CASE("stay durations conserve observed slots") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<Ping> r;
    for (int d = 0; d < 3; ++d)
      for (int t = 0; t < 48; ++t)
        if (rng() % 3) r.push_back(ping(d, t, 1 + int(rng() % 3), 1));
    const int bridge = int(rng() % 3);
    int minutes = 0;
    for (const auto& s : segment_stays(r, bridge)) {
      minutes += s.duration_minutes();
      CHECK(s.start_slot <= s.end_slot);
    }
    CHECK(minutes == int(r.size()) * kSlotMinutes);
  }
}

TEST_CASE("stay weighting counts one visit per stay") {
  const std::vector<Ping> r{ping(0, 0, 1, 1), ping(0, 1, 1, 1), ping(0, 2, 5, 1), ping(0, 3, 1, 1)};
  const auto h = build_visit_histogram(r, VisitWeighting::Stays);
  CHECK(h.total == 3);
  REQUIRE(h.visits.size() == 2);
  CHECK(h.visits[0].count == 2);
}

TEST_CASE("max distance from home") {
  const CellId home = cell(1, 1);
  CHECK(*max_distance_from_home(std::vector<Ping>{ping(0, 0, 1, 1), ping(0, 1, 4, 5)}, home) == doctest::Approx(2.5));
  CHECK_FALSE(max_distance_from_home(std::vector<Ping>{}, home));

  const auto store = TrajectoryStore::from_records({rec(1, 43, 0, 4, 5), rec(1, 44, 0, 1, 1)});
  const auto view = select_period(store, normal_period());
  const auto per_day = max_distance_per_day(view, 0, home);
  REQUIRE(per_day.size() == 15);
  CHECK(*per_day[0] == doctest::Approx(2.5));
  CHECK(*per_day[1] == 0.0);
  CHECK_FALSE(per_day[2]);
}

TEST_CASE("non-home dwelling") {
  const CellId home = cell(1, 1);
  std::vector<Ping> at_home, away, mixed;
  for (int t = 0; t < 48; ++t) {
    at_home.push_back(ping(0, t, 1, 1));
    away.push_back(ping(0, t, 2, 2));
  }
  for (int t = 0; t < 10; ++t) mixed.push_back(ping(0, t, t < 4 ? 3 : 1, 1));
  CHECK(non_home_dwelling(at_home, home) == 0);
  CHECK(non_home_dwelling(away, home) == 1440);
  CHECK(non_home_dwelling(mixed, home) == 120);
}

TEST_CASE("gyration matches an independent pairwise computation") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 2000; ++trial) {
    std::map<CellId, int> counts;
    std::vector<Ping> r;
    const int n = 1 + int(rng() % 60);
    const int spread = 1 + int(rng() % 200);
    for (int i = 0; i < n; ++i) {
      const auto c = cell(1 + int(rng() % spread), 1 + int(rng() % spread));
      ++counts[c];
      r.push_back(ping(i / 48, i % 48, c.x, c.y));
    }
    const auto h = build_visit_histogram(r);
    const double rg = radius_of_gyration(h);
    CHECK(rg == doctest::Approx(testing::pairwise_gyration(testing::top_cells(counts, 0), 0.5)).epsilon(1e-12));
    for (int k : {2, 3, 5}) {
      const double rk = k_radius_of_gyration(h, k);
      CHECK(rk == doctest::Approx(testing::pairwise_gyration(testing::top_cells(counts, k), 0.5)).epsilon(1e-12));
      if (int(counts.size()) <= k) CHECK(rk == rg);
    }
  }
}

TEST_CASE("gyration is translation invariant and scales with the cell size") {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<Ping> a, b;
    const int dx = int(rng() % 50), dy = int(rng() % 50);
    for (int i = 0; i < 30; ++i) {
      const int x = 1 + int(rng() % 100), y = 1 + int(rng() % 100);
      a.push_back(ping(0, i, x, y));
      b.push_back(ping(0, i, x + dx, y + dy));
    }
    const auto ha = build_visit_histogram(a), hb = build_visit_histogram(b);
    CHECK(radius_of_gyration(ha) == doctest::Approx(radius_of_gyration(hb)).epsilon(1e-12));
    CHECK(k_radius_of_gyration(ha, 3) == doctest::Approx(k_radius_of_gyration(hb, 3)).epsilon(1e-12));
    CHECK(radius_of_gyration(ha, 2.0) == doctest::Approx(4.0 * radius_of_gyration(ha, 0.5)).epsilon(1e-12));
  }
}

TEST_CASE("homes for a store") {
  const auto store = TrajectoryStore::from_records({rec(1, 0, 44, 3, 3), rec(2, 70, 44, 1, 1)});
  const auto homes = infer_homes(store);
  REQUIRE(homes.size() == 2);
  CHECK(homes[0]->cell == cell(3, 3));
  CHECK_FALSE(homes[1]);
}

}  // TEST_SUITE
