#include "mobility/cohort.hpp"

#include "mobility/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <unordered_map>

namespace mobility {

GyrationTable compute_gyration(const PeriodView& view, int k_min, int k_max,
                               const AnalysisOptions& opts) {
  if (k_min < 2 || k_max < k_min) throw InputError("k range must satisfy 2 <= k_min <= k_max");
  GyrationTable table;
  table.period = view.spec().name;
  table.k_min = k_min;
  table.k_max = k_max;
  table.absent = view.absent().size();
  const auto present = view.present();
  table.users.resize(present.size());
  parallel_for(present.size(), opts.threads, [&](std::size_t i) {
    const std::size_t user = present[i];
    const auto hist = build_visit_histogram(view.records(user), opts.weighting);
    UserGyration& g = table.users[i];
    g.user = user;
    g.uid = view.store().uid(user);
    g.distinct_cells = hist.distinct();
    g.r_g = radius_of_gyration(hist, opts.cell_km);
    g.r_g_k.reserve(std::size_t(k_max - k_min + 1));
    for (int k = k_min; k <= k_max; ++k) g.r_g_k.push_back(k_radius_of_gyration(hist, k, opts.cell_km));
  });
  return table;
}

std::vector<ClassificationRecord> classify_population(const GyrationTable& table, int k,
                                                      const AnalysisOptions& opts) {
  if (k < table.k_min || k > table.k_max) throw InputError("k outside the gyration table range");
  std::vector<ClassificationRecord> out;
  out.reserve(table.users.size());
  for (const auto& u : table.users) {
    const double rk = table.r_g_k(u, k);
    const auto c = classify(u.r_g, rk, opts.threshold, opts.rule);
    out.push_back({u.uid, table.period, k, u.r_g, rk, c.s_k, c.label});
  }
  return out;
}

std::vector<ClassificationRecord> classify_view(const PeriodView& view, int k,
                                                const AnalysisOptions& opts) {
  return classify_population(compute_gyration(view, k, k, opts), k, opts);
}

SkHistogram sk_distribution(std::span<const ClassificationRecord> records, double bin_width) {
  if (!(bin_width > 0.0)) throw InputError("bin width must be positive");
  SkHistogram h;
  h.bin_width = bin_width;
  h.n = records.size();
  if (records.empty()) return h;
  double max_s = 0.0;
  for (const auto& r : records) max_s = std::max(max_s, r.s_k);
  h.mass.assign(static_cast<std::size_t>(std::floor(max_s / bin_width)) + 1, 0.0);
  const double unit = 1.0 / static_cast<double>(records.size());
  for (const auto& r : records) {
    if (r.s_k == 0.0)
      h.mass_at_zero += unit;
    else if (r.s_k == 1.0)
      h.mass_at_one += unit;
    else
      h.mass[static_cast<std::size_t>(std::floor(r.s_k / bin_width))] += unit;
  }
  return h;
}

ClassShareCurve share_by_k(const GyrationTable& table, const AnalysisOptions& opts) {
  ClassShareCurve curve;
  curve.period = table.period;
  curve.absent = table.absent;
  for (int k = table.k_min; k <= table.k_max; ++k) {
    std::size_t returners = 0;
    for (const auto& u : table.users)
      if (classify(u.r_g, table.r_g_k(u, k), opts.threshold, opts.rule).label == Label::Returner)
        ++returners;
    ClassSharePoint p;
    p.k = k;
    p.classified = table.users.size();
    if (p.classified > 0) {
      p.pct_returners = 100.0 * double(returners) / double(p.classified);
      p.pct_explorers = 100.0 * double(p.classified - returners) / double(p.classified);
    }
    curve.points.push_back(p);
  }
  return curve;
}

ClassShareCurve share_by_k(const PeriodView& view, int k_min, int k_max, const AnalysisOptions& opts) {
  return share_by_k(compute_gyration(view, k_min, k_max, opts), opts);
}

std::optional<int> crossover_k(const ClassShareCurve& curve) {
  for (const auto& p : curve.points)
    if (p.classified > 0 && p.pct_returners >= p.pct_explorers) return p.k;
  return std::nullopt;
}

std::vector<WindowResult> window_sweep(const TrajectoryStore& store,
                                       const std::vector<PeriodSpec>& windows, int k_min, int k_max,
                                       const AnalysisOptions& opts) {
  int first_day = kMaxDay, last_day = 0;
  for (std::size_t u = 0; u < store.user_count(); ++u) {
    auto recs = store.records(u);
    if (recs.empty()) continue;
    first_day = std::min<int>(first_day, recs.front().day);
    last_day = std::max<int>(last_day, recs.back().day);
  }
  std::vector<WindowResult> out;
  for (const auto& w : windows) {
    w.validate();
    if (w.start_day < first_day || w.end_day > last_day) {
      std::ostringstream os;
      os << "window '" << w.name << "' [" << w.start_day << ", " << w.end_day
         << "] outside data range [" << first_day << ", " << last_day << "]";
      throw InputError(os.str());
    }
    WindowResult r;
    r.window = w;
    r.curve = share_by_k(select_period(store, w), k_min, k_max, opts);
    r.curve.period = w.name;
    r.crossover = crossover_k(r.curve);
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<PeriodSpec> standard_windows(const PeriodSpec& base) {
  std::vector<PeriodSpec> out;
  const int s = base.start_day;
  auto add = [&](std::string name, int lo, int hi) {
    if (lo >= 0 && hi <= kMaxDay && lo <= hi) out.push_back(make_period(std::move(name), lo, hi));
  };
  for (int d : {1, 3, 5, 7, 14}) add("first_" + std::to_string(d) + "d", s, s + d - 1);
  for (int j = 1; j <= 3; ++j) {
    const int lo = s - 14 * j;
    add("segment_" + std::to_string(lo) + "-" + std::to_string(lo + 13), lo, lo + 13);
  }
  for (int w : {2, 4, 6, 8}) add("weeks_" + std::to_string(w), s + 13 - 7 * w + 1, s + 13);
  return out;
}

// ---------------------------------------------------------------------------

const char* to_string(TransitionGroup g) {
  switch (g) {
    case TransitionGroup::RR: return "R-R";
    case TransitionGroup::RE: return "R-E";
    case TransitionGroup::EE: return "E-E";
    case TransitionGroup::ER: return "E-R";
  }
  return "?";
}

TransitionGroup transition_group(Label normal, Label emergency) {
  if (normal == Label::Returner)
    return emergency == Label::Returner ? TransitionGroup::RR : TransitionGroup::RE;
  return emergency == Label::Explorer ? TransitionGroup::EE : TransitionGroup::ER;
}

double TransitionMatrix::share(TransitionGroup g) const {
  if (total == 0) return std::numeric_limits<double>::quiet_NaN();
  return 100.0 * double(count(g)) / double(total);
}

double TransitionMatrix::row_share(TransitionGroup g) const {
  const bool from_returner = g == TransitionGroup::RR || g == TransitionGroup::RE;
  const std::size_t row = from_returner ? count(TransitionGroup::RR) + count(TransitionGroup::RE)
                                        : count(TransitionGroup::EE) + count(TransitionGroup::ER);
  if (row == 0) return std::numeric_limits<double>::quiet_NaN();
  return 100.0 * double(count(g)) / double(row);
}

TransitionMatrix transition_matrix(std::span<const ClassificationRecord> first,
                                   std::span<const ClassificationRecord> second) {
  TransitionMatrix m;
  if (!first.empty()) m.k = first.front().k;
  for (const auto& r : second)
    if (r.k != m.k && !first.empty()) throw InputError("transition_matrix: classifications use different k");
  std::unordered_map<Uid, Label> first_labels;
  first_labels.reserve(first.size());
  for (const auto& r : first) first_labels.emplace(r.uid, r.label);
  std::unordered_map<Uid, bool> seen;
  for (const auto& r : second) {
    auto it = first_labels.find(r.uid);
    if (it == first_labels.end()) {
      m.only_second.push_back(r.uid);
      continue;
    }
    seen[r.uid] = true;
    ++m.counts[std::size_t(transition_group(it->second, r.label))];
    ++m.total;
  }
  for (const auto& r : first)
    if (!seen.contains(r.uid)) m.only_first.push_back(r.uid);
  std::sort(m.only_first.begin(), m.only_first.end());
  std::sort(m.only_second.begin(), m.only_second.end());
  return m;
}

// ---------------------------------------------------------------------------

std::size_t Bins::index(double v) const {
  const std::size_t offset = zero_bin ? 1 : 0;
  if (zero_bin && v == 0.0) return 0;
  const auto it = right_closed ? std::lower_bound(edges.begin(), edges.end(), v)
                               : std::upper_bound(edges.begin(), edges.end(), v);
  return offset + static_cast<std::size_t>(it - edges.begin());
}

std::string Bins::label(std::size_t i) const {
  auto num = [](double v) {
    std::ostringstream os;
    os << v;
    return os.str();
  };
  if (zero_bin) {
    if (i == 0) return "0";
    --i;
  }
  if (i == edges.size()) return (right_closed ? ">" : ">=") + num(edges.back());
  if (i == 0 && !right_closed && !zero_bin) return "<" + num(edges[0]);
  const double lo = i == 0 ? 0.0 : edges[i - 1];
  return num(lo) + "-" + num(edges[i]);
}

Bins max_distance_bins() { return {{1, 2, 5, 10, 20}, true, false}; }
Bins dwelling_bins() { return {{60, 120, 240, 480, 720}, true, false}; }
Bins onn_time_bins() { return {{30, 60, 120, 240, 480}, false, false}; }
Bins onn_distance_bins() { return {{1, 5, 10, 20}, true, true}; }

Grouping class_grouping(const TrajectoryStore& store, std::span<const ClassificationRecord> records) {
  Grouping g;
  g.names = {to_string(Label::Returner), to_string(Label::Explorer)};
  g.of_user.assign(store.user_count(), std::nullopt);
  for (const auto& r : records) {
    const std::size_t u = store.find(r.uid);
    if (u < store.user_count()) g.of_user[u] = r.label == Label::Returner ? 0 : 1;
  }
  return g;
}

Grouping transition_grouping(const TrajectoryStore& store,
                             std::span<const ClassificationRecord> first,
                             std::span<const ClassificationRecord> second) {
  Grouping g;
  for (auto t : kTransitionGroups) g.names.emplace_back(to_string(t));
  g.of_user.assign(store.user_count(), std::nullopt);
  std::unordered_map<Uid, Label> first_labels;
  for (const auto& r : first) first_labels.emplace(r.uid, r.label);
  for (const auto& r : second) {
    auto it = first_labels.find(r.uid);
    const std::size_t u = store.find(r.uid);
    if (it != first_labels.end() && u < store.user_count())
      g.of_user[u] = static_cast<int>(transition_group(it->second, r.label));
  }
  return g;
}

const char* to_string(DailyMetric m) {
  return m == DailyMetric::MaxDistance ? "max_distance_km" : "non_home_dwelling_min";
}

std::optional<double> user_day_metric(const PeriodView& view, std::size_t user, CellId home,
                                      int period_day, DailyMetric metric, double cell_km) {
  const auto recs = view.day_records(user, period_day);
  if (recs.empty()) return std::nullopt;
  if (metric == DailyMetric::MaxDistance) return max_distance_from_home(recs, home, cell_km);
  return static_cast<double>(non_home_dwelling(recs, home));
}

double BinnedDistribution::share(std::size_t day_index, std::size_t group, std::size_t bin) const {
  if (population == 0) return 0.0;
  return double(days.at(day_index).counts.at(group).at(bin)) / double(population);
}

BinnedDistribution daily_group_distribution(const PeriodView& view, DailyMetric metric,
                                            const Grouping& grouping,
                                            std::span<const std::optional<HomeLocation>> homes,
                                            const Bins& bins, const AnalysisOptions& opts) {
  BinnedDistribution dist;
  dist.metric = metric;
  dist.bins = bins;
  dist.groups = grouping.names;
  std::vector<std::size_t> eligible;
  for (std::size_t u = 0; u < grouping.of_user.size(); ++u)
    if (grouping.of_user[u] && homes[u]) eligible.push_back(u);
  dist.population = eligible.size();

  for (int d = 1; d <= view.length(); ++d) {
    DailyPanel panel;
    panel.period_day = d;
    panel.counts.assign(grouping.names.size(), std::vector<std::size_t>(bins.size() + 1, 0));
    for (std::size_t u : eligible) {
      const auto v = user_day_metric(view, u, homes[u]->cell, d, metric, opts.cell_km);
      auto& row = panel.counts[std::size_t(*grouping.of_user[u])];
      ++row[v ? bins.index(*v) : bins.size()];
    }
    dist.days.push_back(std::move(panel));
  }
  return dist;
}

namespace {

void run_tests(GroupComparison& c) {
  if (c.returners.size() < 2 || c.explorers.size() < 2) return;
  c.ks = ks_two_sample(c.returners, c.explorers);
  c.mwu = mann_whitney_u(c.returners, c.explorers);
  c.degenerate = c.mwu->degenerate;
}

}  // namespace

GroupComparison compare_daily_metric(const PeriodView& view, DailyMetric metric,
                                     std::span<const ClassificationRecord> records,
                                     std::span<const std::optional<HomeLocation>> homes,
                                     const AnalysisOptions& opts) {
  GroupComparison c;
  const auto& store = view.store();
  for (const auto& r : records) {
    const std::size_t u = store.find(r.uid);
    if (u >= store.user_count() || !homes[u]) continue;
    auto& out = r.label == Label::Returner ? c.returners : c.explorers;
    for (int d = 1; d <= view.length(); ++d)
      if (auto v = user_day_metric(view, u, homes[u]->cell, d, metric, opts.cell_km)) out.push_back(*v);
  }
  run_tests(c);
  return c;
}

std::vector<UserEntropy> compute_entropies(const PeriodView& view, int threads) {
  const auto present = view.present();
  std::vector<UserEntropy> out(present.size());
  parallel_for(present.size(), threads, [&](std::size_t i) {
    const std::size_t u = present[i];
    out[i].user = u;
    out[i].uid = view.store().uid(u);
    const auto seq = location_sequence(view.records(u));
    if (seq.size() >= 2) out[i].estimate = real_entropy_lz(seq);
  });
  return out;
}

EntropyComparison entropy_by_class(std::span<const UserEntropy> entropies,
                                   std::span<const ClassificationRecord> records) {
  std::unordered_map<Uid, Label> labels;
  for (const auto& r : records) labels.emplace(r.uid, r.label);
  EntropyComparison c;
  for (const auto& e : entropies) {
    auto it = labels.find(e.uid);
    if (it == labels.end()) continue;
    if (!e.estimate) {
      ++c.excluded_short;
      continue;
    }
    (it->second == Label::Returner ? c.samples.returners : c.samples.explorers).push_back(e.estimate->bits);
  }
  run_tests(c.samples);
  return c;
}

std::vector<DailyFitRow> daily_fit_table(const PeriodView& view, XminPolicy x_min,
                                         const FitOptions& fit_opts, const AnalysisOptions& opts) {
  std::vector<DailyFitRow> rows;
  const auto present = view.present();
  for (int d = 1; d <= view.length(); ++d) {
    std::vector<double> sample(present.size(), 0.0);
    parallel_for(present.size(), opts.threads, [&](std::size_t i) {
      const auto recs = view.day_records(present[i], d);
      if (!recs.empty())
        sample[i] = radius_of_gyration(build_visit_histogram(recs, opts.weighting), opts.cell_km);
    });
    DailyFitRow row;
    row.period_day = d;
    row.sample_size = std::size_t(std::count_if(sample.begin(), sample.end(), [](double v) { return v > 0.0; }));
    try {
      row.fit = fit_row({"day_" + std::to_string(d), std::move(sample)}, x_min, fit_opts);
      row.status = "ok";
    } catch (const ComputationError& e) {
      row.status = e.what();
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::array<std::size_t, kMaxDay + 1> daily_activity(const TrajectoryStore& store, int bridge_gap_slots) {
  std::array<std::size_t, kMaxDay + 1> counts{};
  for (std::size_t u = 0; u < store.user_count(); ++u)
    for (const auto& s : segment_stays(store.records(u), bridge_gap_slots)) ++counts[std::size_t(s.day)];
  return counts;
}

}  // namespace mobility
