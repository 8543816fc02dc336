#include "mobility/onn.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <unordered_map>

namespace mobility {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}

std::vector<CellId> Neighborhood::members() const {
  std::vector<CellId> out;
  for (int x = std::max(1, home.x - radius); x <= std::min(kGridSize, home.x + radius); ++x)
    for (int y = std::max(1, home.y - radius); y <= std::min(kGridSize, home.y + radius); ++y)
      out.push_back({static_cast<std::int16_t>(x), static_cast<std::int16_t>(y)});
  return out;
}

Neighborhood neighborhood(CellId home, int radius) {
  if (!home.valid()) throw InputError("neighborhood: home cell outside the grid");
  if (radius < 0) throw InputError("neighborhood: radius must be non-negative");
  return {home, radius};
}

OnnDailyMetrics onn_metrics(std::span<const Ping> day_records, const Neighborhood& nbhd,
                            double cell_km, OnnAttribution attribution) {
  OnnDailyMetrics m;
  for (std::size_t i = 0; i < day_records.size(); ++i) {
    const bool outside = !nbhd.contains(day_records[i].cell);
    if (outside) m.minutes += kSlotMinutes;
    if (i == 0 || !outside) continue;
    const CellId from = day_records[i - 1].cell;
    if (attribution == OnnAttribution::BothEndpoints && nbhd.contains(from)) continue;
    m.km += cell_distance_km(from, day_records[i].cell, cell_km);
  }
  return m;
}

const char* to_string(DaytypeSplit s) { return s == DaytypeSplit::Weekday ? "weekday" : "weekend_holiday"; }

bool matches(DayType t, DaytypeSplit s) {
  return s == DaytypeSplit::Weekday ? t == DayType::Weekday : t != DayType::Weekday;
}

const char* to_string(OnnMetric m) { return m == OnnMetric::Time ? "onn_time_min" : "onn_distance_km"; }

std::optional<double> average_onn(const PeriodView& view, std::size_t user, CellId home,
                                  DaytypeSplit split, OnnMetric metric, const OnnOptions& opts) {
  const auto nbhd = neighborhood(home, opts.radius);
  double total = 0.0;
  int days = 0;
  for (int d = 1; d <= view.length(); ++d) {
    if (!matches(view.spec().day_type(d), split)) continue;
    const auto recs = view.day_records(user, d);
    if (recs.empty()) continue;
    const auto m = onn_metrics(recs, nbhd, opts.cell_km, opts.attribution);
    total += metric == OnnMetric::Time ? double(m.minutes) : m.km;
    ++days;
  }
  if (days == 0) return std::nullopt;
  return total / days;
}

double OnnCompositionBin::pct_returners() const {
  return empty() ? kNaN : 100.0 * double(returners) / double(returners + explorers);
}

double OnnCompositionBin::pct_explorers() const {
  return empty() ? kNaN : 100.0 * double(explorers) / double(returners + explorers);
}

OnnGroupDistribution onn_group_distribution(const PeriodView& view,
                                            std::span<const ClassificationRecord> records,
                                            std::span<const std::optional<HomeLocation>> homes,
                                            DaytypeSplit split, OnnMetric metric, const Bins& bins,
                                            const OnnOptions& opts) {
  OnnGroupDistribution dist;
  dist.split = split;
  dist.metric = metric;
  dist.bins = bins;
  dist.composition.resize(bins.size());
  const auto& store = view.store();
  for (const auto& r : records) {
    const std::size_t u = store.find(r.uid);
    if (u >= store.user_count() || !homes[u]) continue;
    const auto avg = average_onn(view, u, homes[u]->cell, split, metric, opts);
    if (!avg) continue;
    auto& bin = dist.composition[bins.index(*avg)];
    ++(r.label == Label::Returner ? bin.returners : bin.explorers);
  }
  return dist;
}

PoiGrid parse_poi_csv(std::string_view text) {
  PoiGrid grid;
  std::vector<bool> seen(std::size_t(kGridSize) * kGridSize, false);
  std::size_t pos = 0, row = 0;
  int columns = 0;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++row;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    if (columns == 0) {
      if (line == "x,y,POI_count") columns = 3;
      else if (line == "x,y,category,count") columns = 4;
      else throw InputError("POI file row 1: expected header 'x,y,POI_count' or 'x,y,category,count'");
      continue;
    }
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= line.size(); ++i) {
      if (i == line.size() || line[i] == ',') {
        fields.push_back(line.substr(start, i - start));
        start = i + 1;
      }
    }
    auto fail = [&](const std::string& what) {
      std::ostringstream os;
      os << "POI file row " << row << ": " << what;
      throw InputError(os.str());
    };
    if (int(fields.size()) != columns) fail("expected " + std::to_string(columns) + " fields");
    auto parse_int = [&](std::string_view f, const char* name) {
      long long v = 0;
      auto [p, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
      if (ec != std::errc{} || p != f.data() + f.size()) fail(std::string("malformed field '") + name + "'");
      return v;
    };
    const long long x = parse_int(fields[0], "x");
    const long long y = parse_int(fields[1], "y");
    const long long count = parse_int(fields[std::size_t(columns - 1)], columns == 3 ? "POI_count" : "count");
    if (x < 1 || x > kGridSize || y < 1 || y > kGridSize) fail("cell out of range");
    if (count < 0) fail("negative POI count");
    grid.counts(x - 1, y - 1) += double(count);
    const std::size_t idx = std::size_t((x - 1) * kGridSize + (y - 1));
    if (!seen[idx]) {
      seen[idx] = true;
      ++grid.covered_cells;
    }
  }
  if (columns == 0) throw InputError("POI file is empty");
  return grid;
}

PoiGrid load_poi_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open POI file '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_poi_csv(ss.str());
}

std::vector<GroupPoiStat> poi_onn_stats(const PeriodView& view, const Grouping& grouping,
                                        std::span<const std::optional<HomeLocation>> homes,
                                        const PoiGrid& poi, DaytypeSplit split,
                                        PoiWeighting weighting, const OnnOptions& opts) {
  std::vector<double> sums(grouping.names.size(), 0.0);
  std::vector<std::size_t> counts(grouping.names.size(), 0);
  for (std::size_t u = 0; u < grouping.of_user.size(); ++u) {
    if (!grouping.of_user[u] || !homes[u]) continue;
    const std::size_t g = std::size_t(*grouping.of_user[u]);
    const auto nbhd = neighborhood(homes[u]->cell, opts.radius);
    std::set<CellId> distinct;
    for (int d = 1; d <= view.length(); ++d) {
      if (!matches(view.spec().day_type(d), split)) continue;
      for (const auto& p : view.day_records(u, d)) {
        if (nbhd.contains(p.cell)) continue;
        if (weighting == PoiWeighting::DistinctCell) {
          distinct.insert(p.cell);
        } else {
          sums[g] += poi.at(p.cell);
          ++counts[g];
        }
      }
    }
    for (const CellId c : distinct) {
      sums[g] += poi.at(c);
      ++counts[g];
    }
  }
  std::vector<GroupPoiStat> out;
  for (std::size_t g = 0; g < grouping.names.size(); ++g)
    out.push_back({grouping.names[g], counts[g] ? sums[g] / double(counts[g]) : kNaN, counts[g]});
  return out;
}

double home_neighborhood_poi(const Neighborhood& nbhd, const PoiGrid& poi) {
  const auto cells = nbhd.members();
  double sum = 0.0;
  for (const CellId c : cells) sum += poi.at(c);
  return sum / double(cells.size());
}

std::vector<GroupPoiStat> home_poi_by_group(const Grouping& grouping,
                                            std::span<const std::optional<HomeLocation>> homes,
                                            const PoiGrid& poi, int radius) {
  std::vector<double> sums(grouping.names.size(), 0.0);
  std::vector<std::size_t> counts(grouping.names.size(), 0);
  for (std::size_t u = 0; u < grouping.of_user.size(); ++u) {
    if (!grouping.of_user[u] || !homes[u]) continue;
    const std::size_t g = std::size_t(*grouping.of_user[u]);
    sums[g] += home_neighborhood_poi(neighborhood(homes[u]->cell, radius), poi);
    ++counts[g];
  }
  std::vector<GroupPoiStat> out;
  for (std::size_t g = 0; g < grouping.names.size(); ++g)
    out.push_back({grouping.names[g], counts[g] ? sums[g] / double(counts[g]) : kNaN, counts[g]});
  return out;
}

const char* to_string(GridStatistic s) {
  switch (s) {
    case GridStatistic::ReturnerShareByHome: return "returner_share_by_home";
    case GridStatistic::StopsPerPerson: return "stops_per_person";
    case GridStatistic::AvgStayMinutes: return "avg_stay_minutes";
  }
  return "?";
}

SpatialGrid spatial_grid(const PeriodView& view, GridStatistic statistic,
                         std::span<const ClassificationRecord> records,
                         std::span<const std::optional<HomeLocation>> homes,
                         std::optional<Label> group_filter, int min_users, int bridge_gap_slots) {
  SpatialGrid grid;
  grid.statistic = statistic;
  grid.min_users = min_users;
  const auto& store = view.store();
  Eigen::ArrayXXd numer = Eigen::ArrayXXd::Zero(kGridSize, kGridSize);
  Eigen::ArrayXXd denom = Eigen::ArrayXXd::Zero(kGridSize, kGridSize);

  for (const auto& r : records) {
    if (group_filter && r.label != *group_filter) continue;
    const std::size_t u = store.find(r.uid);
    if (u >= store.user_count()) continue;
    if (statistic == GridStatistic::ReturnerShareByHome) {
      if (!homes[u]) continue;
      const CellId h = homes[u]->cell;
      ++grid.group_size;
      numer(h.x - 1, h.y - 1) += r.label == Label::Returner ? 100.0 : 0.0;
      denom(h.x - 1, h.y - 1) += 1.0;
      grid.users(h.x - 1, h.y - 1) += 1;
      continue;
    }
    ++grid.group_size;
    std::set<CellId> visited;
    for (const auto& s : segment_stays(view.records(u), bridge_gap_slots)) {
      numer(s.cell.x - 1, s.cell.y - 1) +=
          statistic == GridStatistic::StopsPerPerson ? 1.0 : double(s.duration_minutes());
      denom(s.cell.x - 1, s.cell.y - 1) += 1.0;
      visited.insert(s.cell);
    }
    for (const CellId c : visited) grid.users(c.x - 1, c.y - 1) += 1;
  }

  for (int i = 0; i < kGridSize; ++i) {
    for (int j = 0; j < kGridSize; ++j) {
      if (grid.users(i, j) == 0) continue;
      grid.value(i, j) = statistic == GridStatistic::StopsPerPerson
                             ? numer(i, j) / double(grid.group_size)
                             : numer(i, j) / denom(i, j);
    }
  }
  return grid;
}

}  // namespace mobility
