#include "test_support.hpp"

#include "mobility/hypothesis_tests.hpp"

#include <doctest.h>
#include <nlohmann/json.hpp>

#include <random>

using namespace mobility;

TEST_SUITE("hypothesis_tests") {

TEST_CASE("KS examples") {
  const std::vector<double> a{1, 2, 3, 4, 5}, b{2, 3, 4, 5, 6}, far{10, 11, 12};
  auto r = ks_two_sample(a, a);
  CHECK(r.statistic == 0.0);
  CHECK(r.p_value == doctest::Approx(1.0));
  r = ks_two_sample(a, far);
  CHECK(r.statistic == 1.0);
  r = ks_two_sample(a, b);
  CHECK(r.statistic == doctest::Approx(0.2));
  CHECK(r.n1 == 5);
  CHECK(r.n2 == 5);
}

TEST_CASE("Kolmogorov survival function") {
  CHECK(kolmogorov_q(0.0) == 1.0);
  CHECK(kolmogorov_q(1.0) == doctest::Approx(0.26999967).epsilon(1e-7));
  CHECK(kolmogorov_q(0.5) == doctest::Approx(0.96394524).epsilon(1e-7));
  CHECK(kolmogorov_q(3.0) < 1e-7);
}

TEST_CASE("MWU examples") {
  const std::vector<double> a{1, 2}, b{3, 4};
  CHECK(mann_whitney_u(a, b).statistic == 0.0);
  const std::vector<double> c{1, 2, 3, 4};
  CHECK(mann_whitney_u(c, c).statistic == 8.0);
  const std::vector<double> ties(6, 3.0);
  const auto r = mann_whitney_u(ties, ties);
  CHECK(r.degenerate);
  CHECK(r.p_value == 1.0);
}

TEST_CASE("MWU statistics of both orders sum to n1 n2") {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<double> a(1 + rng() % 40), b(1 + rng() % 40);
    for (auto& v : a) v = double(rng() % 10);
    for (auto& v : b) v = double(rng() % 12);
    const auto ab = mann_whitney_u(a, b), ba = mann_whitney_u(b, a);
    CHECK(ab.statistic + ba.statistic == double(a.size() * b.size()));
    CHECK(ab.p_value == doctest::Approx(ba.p_value).epsilon(1e-12));
    const auto ka = ks_two_sample(a, b), kb = ks_two_sample(b, a);
    CHECK(ka.statistic == kb.statistic);
    CHECK(ka.p_value >= 0.0);
    CHECK(ka.p_value <= 1.0);
  }
}

TEST_CASE("shifted normals are detected") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n0(0.0, 1.0), n3(3.0, 1.0);
  std::vector<double> a(500), b(500);
  for (auto& v : a) v = n0(rng);
  for (auto& v : b) v = n3(rng);
  CHECK(ks_two_sample(a, b).significant());
  CHECK(mann_whitney_u(a, b).significant());
}

TEST_CASE("agreement with the frozen reference fixtures") {
  const auto j = nlohmann::json::parse(testing::read_file(testing::data_dir() / "ks_mwu_fixtures.json"));
  REQUIRE(j["fixtures"].size() == 50);
  for (const auto& f : j["fixtures"]) {
    const std::vector<double> a = f["a"], b = f["b"];
    INFO(std::string(f["name"]));
    const auto ks = ks_two_sample(a, b);
    const auto mw = mann_whitney_u(a, b);
    CHECK(ks.statistic == doctest::Approx(double(f["ks_D"])).epsilon(1e-12));
    CHECK(std::abs(ks.p_value - double(f["ks_p"])) <= 1e-6);
    CHECK(mw.statistic == double(f["mwu_U"]));
    CHECK(std::abs(mw.p_value - double(f["mwu_p"])) <= 1e-6);
  }
}

}  // TEST_SUITE
