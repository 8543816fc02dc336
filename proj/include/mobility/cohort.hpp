#pragma once

#include "mobility/distribution_fit.hpp"
#include "mobility/entropy.hpp"
#include "mobility/hypothesis_tests.hpp"
#include "mobility/metrics.hpp"
#include "mobility/trajectory_store.hpp"

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace mobility {

struct AnalysisOptions {
  double cell_km = kDefaultCellKm;
  double threshold = 0.5;
  ClassificationRule rule = ClassificationRule::ReturnerAtOrAbove;
  VisitWeighting weighting = VisitWeighting::Records;
  int threads = 1;
};

// ---------------------------------------------------------------------------
// Gyration and classification over a population

struct UserGyration {
  std::size_t user = 0;  // store index
  Uid uid = 0;
  std::size_t distinct_cells = 0;
  double r_g = 0.0;
  std::vector<double> r_g_k;  // r_g_k[k - k_min]
};

struct GyrationTable {
  std::string period;
  int k_min = 2;
  int k_max = 2;
  std::vector<UserGyration> users;  // present users, in store order
  std::size_t absent = 0;

  [[nodiscard]] double r_g_k(const UserGyration& u, int k) const { return u.r_g_k.at(std::size_t(k - k_min)); }
};

GyrationTable compute_gyration(const PeriodView& view, int k_min, int k_max,
                               const AnalysisOptions& opts = {});

std::vector<ClassificationRecord> classify_population(const GyrationTable& table, int k,
                                                      const AnalysisOptions& opts = {});
std::vector<ClassificationRecord> classify_view(const PeriodView& view, int k,
                                                const AnalysisOptions& opts = {});

// ---------------------------------------------------------------------------
// S_k distribution, class shares and crossover

struct SkHistogram {
  double bin_width = 0.05;
  std::vector<double> mass;  // bin i covers [i w, (i+1) w), exact 0 and 1 excluded
  double mass_at_zero = 0.0;
  double mass_at_one = 0.0;
  std::size_t n = 0;
};

SkHistogram sk_distribution(std::span<const ClassificationRecord> records, double bin_width = 0.05);

struct ClassSharePoint {
  int k = 0;
  double pct_returners = 0.0;
  double pct_explorers = 0.0;
  std::size_t classified = 0;
};

struct ClassShareCurve {
  std::string period;
  std::vector<ClassSharePoint> points;
  std::size_t absent = 0;
};

ClassShareCurve share_by_k(const GyrationTable& table, const AnalysisOptions& opts = {});
ClassShareCurve share_by_k(const PeriodView& view, int k_min = 2, int k_max = 10,
                           const AnalysisOptions& opts = {});

/// Smallest k with %returners >= %explorers.
std::optional<int> crossover_k(const ClassShareCurve& curve);

struct WindowResult {
  PeriodSpec window;
  ClassShareCurve curve;
  std::optional<int> crossover;
};

/// Re-runs the whole classification independently per window.
std::vector<WindowResult> window_sweep(const TrajectoryStore& store,
                                       const std::vector<PeriodSpec>& windows, int k_min = 2,
                                       int k_max = 10, const AnalysisOptions& opts = {});

/// First 1/3/5/7/14 days of `base`, three earlier 14-day segments, and
/// 2/4/6/8-week windows ending on the 14th day of `base`. Windows that would
/// start before day 0 are omitted.
std::vector<PeriodSpec> standard_windows(const PeriodSpec& base);

// ---------------------------------------------------------------------------
// Transitions between two periods

enum class TransitionGroup { RR = 0, RE = 1, EE = 2, ER = 3 };
inline constexpr std::array<TransitionGroup, 4> kTransitionGroups{
    TransitionGroup::RR, TransitionGroup::RE, TransitionGroup::EE, TransitionGroup::ER};
const char* to_string(TransitionGroup g);
TransitionGroup transition_group(Label normal, Label emergency);

struct TransitionMatrix {
  int k = 4;
  std::array<std::size_t, 4> counts{};  // indexed by TransitionGroup
  std::size_t total = 0;
  std::vector<Uid> only_first;   // classified in the first period only
  std::vector<Uid> only_second;  // classified in the second period only

  [[nodiscard]] std::size_t count(TransitionGroup g) const { return counts[std::size_t(g)]; }
  [[nodiscard]] double share(TransitionGroup g) const;
  /// Share of the group within its first-period class (e.g. % of returners who became explorers).
  [[nodiscard]] double row_share(TransitionGroup g) const;
};

/// Joins by uid; both inputs must be at the same k.
TransitionMatrix transition_matrix(std::span<const ClassificationRecord> first,
                                   std::span<const ClassificationRecord> second);

// ---------------------------------------------------------------------------
// Grouped, binned daily distributions

/// Bins over [0, inf) given interior edges. A right-closed set is
/// [0,e1], (e1,e2], ..., (em,inf); a left-closed set is [0,e1), ..., [em,inf).
/// With zero_bin, exact zero gets its own leading bin.
struct Bins {
  std::vector<double> edges;
  bool right_closed = true;
  bool zero_bin = false;

  [[nodiscard]] std::size_t size() const { return edges.size() + 1 + (zero_bin ? 1 : 0); }
  [[nodiscard]] std::size_t index(double v) const;
  [[nodiscard]] std::string label(std::size_t i) const;
};

Bins max_distance_bins();  // km
Bins dwelling_bins();      // minutes
Bins onn_time_bins();      // minutes
Bins onn_distance_bins();  // km

/// names[g] labels group g; of_user[store index] is that user's group.
struct Grouping {
  std::vector<std::string> names;
  std::vector<std::optional<int>> of_user;
};

Grouping class_grouping(const TrajectoryStore& store, std::span<const ClassificationRecord> records);
Grouping transition_grouping(const TrajectoryStore& store,
                             std::span<const ClassificationRecord> first,
                             std::span<const ClassificationRecord> second);

enum class DailyMetric { MaxDistance, NonHomeDwelling };
const char* to_string(DailyMetric m);

/// nullopt when the user has no record that day.
std::optional<double> user_day_metric(const PeriodView& view, std::size_t user, CellId home,
                                      int period_day, DailyMetric metric,
                                      double cell_km = kDefaultCellKm);

struct DailyPanel {
  int period_day = 0;
  /// counts[g][b]; the extra last column counts users without records that day.
  std::vector<std::vector<std::size_t>> counts;
};

struct BinnedDistribution {
  DailyMetric metric = DailyMetric::MaxDistance;
  Bins bins;
  std::vector<std::string> groups;
  std::size_t population = 0;  // grouped users with a known home
  std::vector<DailyPanel> days;

  [[nodiscard]] double share(std::size_t day_index, std::size_t group, std::size_t bin) const;
};

BinnedDistribution daily_group_distribution(const PeriodView& view, DailyMetric metric,
                                            const Grouping& grouping,
                                            std::span<const std::optional<HomeLocation>> homes,
                                            const Bins& bins, const AnalysisOptions& opts = {});

struct GroupComparison {
  std::vector<double> returners;
  std::vector<double> explorers;
  std::optional<TestResult> ks;   // absent when a class has < 2 values
  std::optional<TestResult> mwu;
  bool degenerate = false;
};

/// Per user-day metric values of returners vs explorers with KS and MWU tests.
GroupComparison compare_daily_metric(const PeriodView& view, DailyMetric metric,
                                     std::span<const ClassificationRecord> records,
                                     std::span<const std::optional<HomeLocation>> homes,
                                     const AnalysisOptions& opts = {});

// ---------------------------------------------------------------------------
// Entropy by class

struct UserEntropy {
  std::size_t user = 0;
  Uid uid = 0;
  std::optional<EntropyEstimate> estimate;  // absent for n < 2
};

std::vector<UserEntropy> compute_entropies(const PeriodView& view, int threads = 1);

struct EntropyComparison {
  GroupComparison samples;
  std::size_t excluded_short = 0;
};

EntropyComparison entropy_by_class(std::span<const UserEntropy> entropies,
                                   std::span<const ClassificationRecord> records);

// ---------------------------------------------------------------------------
// Per-day fits and activity

struct DailyFitRow {
  int period_day = 0;
  std::size_t sample_size = 0;  // users with positive daily r_g
  std::optional<FitTableRow> fit;
  std::string status;  // "ok" or the reason the fit was skipped
};

/// r_g per user from each day's records alone, fitted per period-day.
std::vector<DailyFitRow> daily_fit_table(const PeriodView& view, XminPolicy x_min = std::nullopt,
                                         const FitOptions& fit_opts = {},
                                         const AnalysisOptions& opts = {});

/// Total stays per absolute day 0..74 over all users.
std::array<std::size_t, kMaxDay + 1> daily_activity(const TrajectoryStore& store,
                                                    int bridge_gap_slots = 0);

}  // namespace mobility
