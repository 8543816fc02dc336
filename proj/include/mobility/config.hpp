#pragma once

#include "mobility/cohort.hpp"
#include "mobility/distribution_fit.hpp"
#include "mobility/metrics.hpp"
#include "mobility/onn.hpp"
#include "mobility/synth.hpp"
#include "mobility/trajectory_store.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace mobility {

/// Everything a run depends on. Every field has a default that is echoed
/// into the manifest; validate() names the offending key on failure.
struct RunConfig {
  std::filesystem::path data;
  std::filesystem::path poi;
  std::filesystem::path out = "out";

  /// Ordered; transition analyses use the first two.
  std::vector<PeriodSpec> periods{normal_period(), emergency_period()};
  /// When set, period-level reports cover only this period.
  std::optional<std::string> period;
  DedupPolicy dedup = DedupPolicy::KeepFirst;

  int k = 4;
  int k_min = 2;
  int k_max = 10;
  double threshold = 0.5;
  ClassificationRule rule = ClassificationRule::ReturnerAtOrAbove;
  VisitWeighting weighting = VisitWeighting::Records;
  double cell_km = kDefaultCellKm;
  HomeOptions home;
  int bridge_gap_slots = 0;
  double sk_bin_width = 0.05;

  int radius = 2;
  OnnAttribution onn_attribution = OnnAttribution::Destination;
  PoiWeighting poi_weighting = PoiWeighting::PerRecord;
  /// Also report the distinct-cell POI variant next to the configured one.
  bool poi_report_both = false;

  Bins max_distance_bins = mobility::max_distance_bins();
  Bins dwelling_bins = mobility::dwelling_bins();
  Bins onn_time_bins = mobility::onn_time_bins();
  Bins onn_distance_bins = mobility::onn_distance_bins();

  XminPolicy x_min;
  FitOptions fit;
  std::vector<int> fit_topk{2, 3, 4, 5};

  int min_users = 5;
  std::uint64_t seed = 1;
  int threads = 1;

  /// Scenario for the `synth` subcommand; the four-group scenario by default.
  std::optional<synth::ScenarioSpec> scenario;
  std::size_t synth_users_per_group = 250;
  int synth_drop_percent = 0;

  void validate() const;
  [[nodiscard]] AnalysisOptions analysis() const;
  [[nodiscard]] OnnOptions onn() const;
  [[nodiscard]] std::vector<PeriodSpec> selected_periods() const;
};

/// Parses a config document; unknown keys and wrong types are InputErrors
/// naming the key path (e.g. "periods.normal.start").
RunConfig config_from_json(const nlohmann::json& j);
RunConfig load_config(const std::filesystem::path& path);
/// Full effective configuration, defaults included.
nlohmann::json config_to_json(const RunConfig& cfg);

/// 64-bit FNV-1a, hex encoded.
std::string fnv1a_hex(std::string_view bytes);
std::string file_digest(const std::filesystem::path& path);

}  // namespace mobility
