#include "mobility/metrics.hpp"

#include "mobility/parallel.hpp"

#include <algorithm>

namespace mobility {

Eigen::Matrix2Xd VisitHistogram::points() const {
  Eigen::Matrix2Xd p(2, static_cast<Eigen::Index>(visits.size()));
  for (std::size_t i = 0; i < visits.size(); ++i) p.col(Eigen::Index(i)) = visits[i].cell.center();
  return p;
}

Eigen::ArrayXd VisitHistogram::counts() const {
  Eigen::ArrayXd c(static_cast<Eigen::Index>(visits.size()));
  for (std::size_t i = 0; i < visits.size(); ++i) c(Eigen::Index(i)) = visits[i].count;
  return c;
}

namespace {

std::vector<CellCount> count_cells(std::vector<CellId> cells) {
  std::sort(cells.begin(), cells.end());
  std::vector<CellCount> out;
  for (const CellId c : cells) {
    if (!out.empty() && out.back().cell == c)
      ++out.back().count;
    else
      out.push_back({c, 1});
  }
  return out;
}

template <typename Range>
Eigen::Matrix2Xd points_of(const Range& cells) {
  Eigen::Matrix2Xd p(2, static_cast<Eigen::Index>(cells.size()));
  Eigen::Index i = 0;
  for (const auto& cc : cells) p.col(i++) = cc.cell.center();
  return p;
}

template <typename Range>
Eigen::ArrayXd counts_of(const Range& cells) {
  Eigen::ArrayXd c(static_cast<Eigen::Index>(cells.size()));
  Eigen::Index i = 0;
  for (const auto& cc : cells) c(i++) = cc.count;
  return c;
}

}  // namespace

VisitHistogram build_visit_histogram(std::span<const Ping> records, VisitWeighting weighting) {
  std::vector<CellId> cells;
  if (weighting == VisitWeighting::Records) {
    cells.reserve(records.size());
    for (const auto& p : records) cells.push_back(p.cell);
  } else {
    for (const auto& s : segment_stays(records)) cells.push_back(s.cell);
  }
  VisitHistogram h;
  h.visits = count_cells(std::move(cells));
  for (const auto& v : h.visits) h.total += v.count;
  if (!h.visits.empty()) h.center_of_mass = center_of_mass(h.points(), h.counts());
  return h;
}

std::optional<VisitHistogram> build_visit_histogram(const PeriodView& view, std::size_t user,
                                                    VisitWeighting weighting) {
  auto recs = view.records(user);
  if (recs.empty()) return std::nullopt;
  return build_visit_histogram(recs, weighting);
}

TopKProfile top_k_profile(const VisitHistogram& hist, int k) {
  TopKProfile prof;
  prof.k = k;
  prof.ranked = hist.visits;
  const auto by_rank = [](const CellCount& a, const CellCount& b) {
    if (a.count != b.count) return a.count > b.count;
    return a.cell < b.cell;
  };
  const std::size_t keep = std::min<std::size_t>(static_cast<std::size_t>(std::max(k, 0)),
                                                 prof.ranked.size());
  std::partial_sort(prof.ranked.begin(), prof.ranked.begin() + static_cast<std::ptrdiff_t>(keep),
                    prof.ranked.end(), by_rank);
  prof.ranked.resize(keep);
  for (const auto& c : prof.ranked) prof.total += c.count;
  if (keep > 0) prof.center_of_mass = center_of_mass(points_of(prof.ranked), counts_of(prof.ranked));
  return prof;
}

double radius_of_gyration(const VisitHistogram& hist, double cell_km) {
  if (hist.visits.size() <= 1) return 0.0;
  return cell_km * gyration_radius(hist.points(), hist.counts());
}

double k_radius_of_gyration(const VisitHistogram& hist, int k, double cell_km) {
  if (k < 2) throw InputError("k must be >= 2");
  if (hist.visits.size() <= static_cast<std::size_t>(k)) return radius_of_gyration(hist, cell_km);
  const auto prof = top_k_profile(hist, k);
  return cell_km * gyration_radius(points_of(prof.ranked), counts_of(prof.ranked));
}

Classification classify(double r_g, double r_g_k, double threshold, ClassificationRule rule) {
  Classification c;
  c.s_k = (r_g == 0.0) ? 1.0 : r_g_k / r_g;
  const bool returner = rule == ClassificationRule::ReturnerAtOrAbove ? c.s_k >= threshold
                                                                      : c.s_k < threshold;
  c.label = returner ? Label::Returner : Label::Explorer;
  return c;
}

bool is_night_slot(int slot, const HomeOptions& opts) {
  return slot >= opts.night_start_slot || slot < opts.night_end_slot;
}

std::optional<HomeLocation> infer_home(Uid uid, std::span<const Ping> records,
                                       const HomeOptions& opts) {
  std::vector<CellId> night, all;
  for (const auto& p : records) {
    if (p.day < opts.usual_first_day || p.day > opts.usual_last_day) continue;
    all.push_back(p.cell);
    if (is_night_slot(p.slot, opts)) night.push_back(p.cell);
  }
  if (all.empty()) return std::nullopt;
  const bool fallback = night.empty();
  const auto counts = count_cells(fallback ? std::move(all) : std::move(night));
  // counts is sorted by (x, y): the first maximum is the tie winner.
  const auto best = std::max_element(counts.begin(), counts.end(),
                                     [](const CellCount& a, const CellCount& b) {
                                       return a.count < b.count;
                                     });
  return HomeLocation{uid, best->cell, fallback ? 0 : best->count, fallback};
}

std::vector<std::optional<HomeLocation>> infer_homes(const TrajectoryStore& store,
                                                     const HomeOptions& opts, int threads) {
  std::vector<std::optional<HomeLocation>> homes(store.user_count());
  parallel_for(store.user_count(), threads,
               [&](std::size_t u) { homes[u] = infer_home(store.uid(u), store.records(u), opts); });
  return homes;
}

std::vector<StaySegment> segment_stays(std::span<const Ping> records, int bridge_gap_slots) {
  std::vector<StaySegment> stays;
  for (const auto& p : records) {
    if (!stays.empty()) {
      auto& s = stays.back();
      if (s.day == p.day && s.cell == p.cell && p.slot - s.end_slot <= 1 + bridge_gap_slots) {
        s.end_slot = p.slot;
        ++s.observed_slots;
        continue;
      }
    }
    stays.push_back({p.day, p.cell, p.slot, p.slot, 1});
  }
  return stays;
}

std::optional<double> max_distance_from_home(std::span<const Ping> records, CellId home,
                                             double cell_km) {
  if (records.empty()) return std::nullopt;
  double best = 0.0;
  for (const auto& p : records) best = std::max(best, cell_distance_km(p.cell, home, cell_km));
  return best;
}

std::vector<std::optional<double>> max_distance_per_day(const PeriodView& view, std::size_t user,
                                                        CellId home, double cell_km) {
  std::vector<std::optional<double>> out;
  out.reserve(static_cast<std::size_t>(view.length()));
  for (int d = 1; d <= view.length(); ++d)
    out.push_back(max_distance_from_home(view.day_records(user, d), home, cell_km));
  return out;
}

int non_home_dwelling(std::span<const Ping> records, CellId home) {
  return kSlotMinutes * static_cast<int>(std::count_if(
                            records.begin(), records.end(), [&](const Ping& p) { return p.cell != home; }));
}

int non_home_dwelling(const PeriodView& view, std::size_t user, CellId home, int period_day) {
  return non_home_dwelling(view.day_records(user, period_day), home);
}

}  // namespace mobility
