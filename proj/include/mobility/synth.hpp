#pragma once

#include "mobility/distribution_fit.hpp"
#include "mobility/trajectory_store.hpp"
#include "mobility/types.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace mobility::synth {

/// Per-user streams: MT19937-64 seeded with splitmix64(seed ^ (uid * golden ratio)).
std::uint64_t splitmix64(std::uint64_t x);
std::mt19937_64 user_stream(std::uint64_t seed, Uid uid);
/// Uniform double in [0, 1) from the top 53 bits.
double uniform01(std::mt19937_64& rng);
/// Uniform integer in [lo, hi], rejection-sampled (platform independent).
int uniform_int(std::mt19937_64& rng, int lo, int hi);

struct Archetype {
  Label kind = Label::Returner;
  /// Returner: recurrent non-home anchors (visited every day, one of them
  /// being the primary) within `anchor_spread` cells of home.
  int anchors = 3;
  int anchor_spread = 4;
  /// Explorer: one primary anchor plus `rare_per_day` one-off cells per
  /// day at Chebyshev offsets in [rare_min_offset, rare_max_offset].
  int rare_per_day = 2;
  int rare_min_offset = 20;
  int rare_max_offset = 60;
};

struct GroupSpec {
  std::string name;  // e.g. "R-E"
  std::size_t users = 0;
  Archetype normal;
  Archetype emergency;
};

struct ScenarioSpec {
  std::uint64_t seed = 1;
  std::vector<GroupSpec> groups;
  int first_day = 0;
  int last_day = kMaxDay;
  PeriodSpec normal = normal_period();
  PeriodSpec emergency = emergency_period();
  int k = 4;
  /// Homes are drawn uniformly from [home_lo, home_hi]^2.
  int home_lo = 70;
  int home_hi = 130;
  /// Percent chance that a slot is dropped from the output (sparser data).
  int drop_percent = 0;
  /// Absolute day index of a Monday; Sundays keep users at home all day.
  std::optional<int> sunday_dip_monday;
  /// When false the sidecar omits histograms and per-day records (large runs).
  bool detailed_truth = true;
  int onn_radius = 2;
  double cell_km = kDefaultCellKm;

  void validate() const;
};

ScenarioSpec scenario_from_json(const nlohmann::json& j);
nlohmann::json scenario_to_json(const ScenarioSpec& spec);

/// Four equal transition groups (R-R, R-E, E-E, E-R) of `per_group` users.
ScenarioSpec four_group_scenario(std::uint64_t seed, std::size_t per_group);

struct PeriodTruth {
  Label label = Label::Returner;
  double r_g = 0.0;
  double r_g_k = 0.0;
  double s_k = 1.0;
  std::map<CellId, int> histogram;
  /// cell -> (stay count, stay minutes)
  std::map<CellId, std::pair<int, int>> stays;
};

struct DayTruth {
  int day = 0;
  int records = 0;
  int stays = 0;
  int onn_minutes = 0;
  double onn_km = 0.0;
};

struct UserTruth {
  Uid uid = 0;
  std::string group;
  CellId home;
  std::map<std::string, PeriodTruth> periods;  // keyed "normal" / "emergency"
  std::vector<DayTruth> days;
};

struct Population {
  std::vector<ObservationRecord> records;  // sorted by (uid, day, slot)
  std::vector<UserTruth> truth;
};

/// Deterministic generation; planted labels are checked against a direct
/// evaluation of the gyration formulas and regenerated on mismatch.
Population generate(const ScenarioSpec& spec);

nlohmann::json truth_to_json(const ScenarioSpec& spec, const Population& pop);
std::vector<UserTruth> truth_from_json(const nlohmann::json& j);

/// Writes trajectories.csv and ground_truth.json into `dir`.
void write_population(const ScenarioSpec& spec, const Population& pop,
                      const std::filesystem::path& dir);
std::string records_to_csv(const std::vector<ObservationRecord>& records);

/// Deterministic POI field over the grid: a smooth urban bump plus noise.
std::string poi_csv(std::uint64_t seed);

/// Draws via inverse CDF (exponential, lognormal) or rejection (truncated power law).
std::vector<double> gen_raw_samples(const FitParams& params, std::size_t n, std::uint64_t seed);

/// Direct double-loop evaluation of the (k-)radius of gyration over a cell histogram.
double brute_force_gyration(const std::map<CellId, int>& histogram, double cell_km,
                            int k = 0 /* 0: all cells */);

}  // namespace mobility::synth
