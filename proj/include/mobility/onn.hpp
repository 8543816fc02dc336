#pragma once

#include "mobility/cohort.hpp"
#include "mobility/metrics.hpp"
#include "mobility/trajectory_store.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace mobility {

/// Cells within Chebyshev distance `radius` of home, clipped to the grid.
struct Neighborhood {
  CellId home;
  int radius = 2;

  [[nodiscard]] bool contains(CellId c) const {
    return std::max(std::abs(c.x - home.x), std::abs(c.y - home.y)) <= radius;
  }
  [[nodiscard]] std::vector<CellId> members() const;
};

Neighborhood neighborhood(CellId home, int radius = 2);

/// Which movement segments count toward the outside distance.
enum class OnnAttribution {
  Destination,    // destination cell outside
  BothEndpoints,  // origin and destination outside
};

struct OnnDailyMetrics {
  int minutes = 0;
  double km = 0.0;
};

/// Time and distance outside the neighborhood over one day's records.
OnnDailyMetrics onn_metrics(std::span<const Ping> day_records, const Neighborhood& nbhd,
                            double cell_km = kDefaultCellKm,
                            OnnAttribution attribution = OnnAttribution::Destination);

enum class DaytypeSplit { Weekday, WeekendHoliday };
const char* to_string(DaytypeSplit s);
bool matches(DayType t, DaytypeSplit s);

enum class OnnMetric { Time, Distance };
const char* to_string(OnnMetric m);

struct OnnOptions {
  int radius = 2;
  OnnAttribution attribution = OnnAttribution::Destination;
  double cell_km = kDefaultCellKm;
};

/// Per-user average over the user's observed days of one day type, or
/// nullopt when the user has no such day.
std::optional<double> average_onn(const PeriodView& view, std::size_t user, CellId home,
                                  DaytypeSplit split, OnnMetric metric, const OnnOptions& opts = {});

struct OnnCompositionBin {
  std::size_t returners = 0;
  std::size_t explorers = 0;

  [[nodiscard]] bool empty() const { return returners + explorers == 0; }
  [[nodiscard]] double pct_returners() const;
  [[nodiscard]] double pct_explorers() const;
};

struct OnnGroupDistribution {
  DaytypeSplit split = DaytypeSplit::Weekday;
  OnnMetric metric = OnnMetric::Time;
  Bins bins;
  std::vector<OnnCompositionBin> composition;  // one per bin, empty bins kept
};

OnnGroupDistribution onn_group_distribution(const PeriodView& view,
                                            std::span<const ClassificationRecord> records,
                                            std::span<const std::optional<HomeLocation>> homes,
                                            DaytypeSplit split, OnnMetric metric, const Bins& bins,
                                            const OnnOptions& opts = {});

/// Per-cell POI counts on the 200x200 grid; cells absent from the input read as 0.
struct PoiGrid {
  Eigen::ArrayXXd counts = Eigen::ArrayXXd::Zero(kGridSize, kGridSize);
  std::size_t covered_cells = 0;

  [[nodiscard]] double at(CellId c) const { return counts(c.x - 1, c.y - 1); }
  [[nodiscard]] bool complete() const { return covered_cells == std::size_t(kGridSize) * kGridSize; }
};

/// Accepts `x,y,POI_count` or the long form `x,y,category,count` (summed per cell).
PoiGrid load_poi_csv(const std::filesystem::path& path);
PoiGrid parse_poi_csv(std::string_view text);

enum class PoiWeighting { PerRecord, DistinctCell };

struct GroupPoiStat {
  std::string group;
  double mean = 0.0;  // NaN when no ONN visits
  std::size_t n = 0;  // visits (records or distinct user cells) averaged
};

/// Mean POI count over ONN visits on days of the given type, per group.
std::vector<GroupPoiStat> poi_onn_stats(const PeriodView& view, const Grouping& grouping,
                                        std::span<const std::optional<HomeLocation>> homes,
                                        const PoiGrid& poi, DaytypeSplit split,
                                        PoiWeighting weighting = PoiWeighting::PerRecord,
                                        const OnnOptions& opts = {});

double home_neighborhood_poi(const Neighborhood& nbhd, const PoiGrid& poi);

/// Population mean of home_neighborhood_poi per group.
std::vector<GroupPoiStat> home_poi_by_group(const Grouping& grouping,
                                            std::span<const std::optional<HomeLocation>> homes,
                                            const PoiGrid& poi, int radius = 2);

enum class GridStatistic { ReturnerShareByHome, StopsPerPerson, AvgStayMinutes };
const char* to_string(GridStatistic s);

struct SpatialGrid {
  GridStatistic statistic = GridStatistic::ReturnerShareByHome;
  Eigen::ArrayXXd value = Eigen::ArrayXXd::Constant(kGridSize, kGridSize, std::nan(""));
  Eigen::ArrayXXi users = Eigen::ArrayXXi::Zero(kGridSize, kGridSize);
  int min_users = 5;
  std::size_t group_size = 0;

  [[nodiscard]] bool masked(CellId c) const { return users(c.x - 1, c.y - 1) < min_users; }
  [[nodiscard]] double at(CellId c) const { return value(c.x - 1, c.y - 1); }
};

/// `group_filter` restricts contributing users to one class (nullopt: all classified users).
SpatialGrid spatial_grid(const PeriodView& view, GridStatistic statistic,
                         std::span<const ClassificationRecord> records,
                         std::span<const std::optional<HomeLocation>> homes,
                         std::optional<Label> group_filter = std::nullopt, int min_users = 5,
                         int bridge_gap_slots = 0);

}  // namespace mobility
