#pragma once

#include "mobility/trajectory_store.hpp"
#include "mobility/types.hpp"

#include <Eigen/Core>

#include <cmath>
#include <optional>
#include <span>
#include <vector>

namespace mobility {

/// Visit-weighted center of mass of 2xL `points` with weights `counts`.
template <typename PointsDerived, typename WeightsDerived>
Eigen::Matrix<typename PointsDerived::Scalar, 2, 1> center_of_mass(
    const Eigen::MatrixBase<PointsDerived>& points, const Eigen::ArrayBase<WeightsDerived>& counts) {
  using Scalar = typename PointsDerived::Scalar;
  const Scalar total = counts.sum();
  return (points * counts.matrix()) / total;
}

/// sqrt( (1/N) sum_i n_i |p_i - cm|^2 ) in the units of `points`.
template <typename PointsDerived, typename WeightsDerived>
typename PointsDerived::Scalar gyration_radius(const Eigen::MatrixBase<PointsDerived>& points,
                                               const Eigen::ArrayBase<WeightsDerived>& counts) {
  using Scalar = typename PointsDerived::Scalar;
  if (points.cols() == 0) return Scalar(0);
  const auto cm = center_of_mass(points, counts);
  const Scalar total = counts.sum();
  const Scalar moment =
      ((points.colwise() - cm).colwise().squaredNorm().transpose().array() * counts).sum();
  return std::sqrt(moment / total);
}

enum class VisitWeighting { Records, Stays };

struct CellCount {
  CellId cell;
  int count = 0;
};

/// Cell -> visit count for one user and period, cells sorted by (x, y).
struct VisitHistogram {
  std::vector<CellCount> visits;
  long total = 0;  // N
  Eigen::Vector2d center_of_mass{0.0, 0.0};

  [[nodiscard]] std::size_t distinct() const { return visits.size(); }  // L
  [[nodiscard]] Eigen::Matrix2Xd points() const;
  [[nodiscard]] Eigen::ArrayXd counts() const;
};

/// Top-k cells ranked by count desc, then x asc, then y asc.
struct TopKProfile {
  int k = 0;
  std::vector<CellCount> ranked;
  long total = 0;  // N_k
  Eigen::Vector2d center_of_mass{0.0, 0.0};
};

struct ClassificationRecord {
  Uid uid = 0;
  std::string period;
  int k = 0;
  double r_g = 0.0;
  double r_g_k = 0.0;
  double s_k = 1.0;
  Label label = Label::Returner;
};

/// Direction of the S_k threshold rule.
enum class ClassificationRule {
  ReturnerAtOrAbove,  // Returner iff S_k >= threshold
  ReturnerBelow,      // Returner iff S_k < threshold
};

struct StaySegment {
  int day = 0;
  CellId cell;
  int start_slot = 0;
  int end_slot = 0;
  int observed_slots = 0;

  [[nodiscard]] int duration_minutes() const { return observed_slots * kSlotMinutes; }
  bool operator==(const StaySegment&) const = default;
};

struct HomeLocation {
  Uid uid = 0;
  CellId cell;
  int night_visit_count = 0;
  bool fallback = false;  // no night records; argmax over all usual-day records
};

struct HomeOptions {
  int usual_first_day = 0;
  int usual_last_day = 59;
  int night_start_slot = 40;  // 20:00
  int night_end_slot = 16;    // 08:00, exclusive
};

bool is_night_slot(int slot, const HomeOptions& opts = {});

/// Histogram of a user's records (or of their stays under VisitWeighting::Stays).
VisitHistogram build_visit_histogram(std::span<const Ping> records,
                                     VisitWeighting weighting = VisitWeighting::Records);
/// Empty optional when the user has no records in the view.
std::optional<VisitHistogram> build_visit_histogram(const PeriodView& view, std::size_t user,
                                                    VisitWeighting weighting = VisitWeighting::Records);

TopKProfile top_k_profile(const VisitHistogram& hist, int k);

double radius_of_gyration(const VisitHistogram& hist, double cell_km = kDefaultCellKm);
/// Equals radius_of_gyration exactly when L <= k. Requires k >= 2.
double k_radius_of_gyration(const VisitHistogram& hist, int k, double cell_km = kDefaultCellKm);

struct Classification {
  double s_k = 1.0;
  Label label = Label::Returner;
};

/// S_k = r_g_k / r_g with S_k := 1 when r_g == 0.
Classification classify(double r_g, double r_g_k, double threshold = 0.5,
                        ClassificationRule rule = ClassificationRule::ReturnerAtOrAbove);

std::optional<HomeLocation> infer_home(Uid uid, std::span<const Ping> records,
                                       const HomeOptions& opts = {});
/// One entry per store user; users with no usual-day records get nullopt.
std::vector<std::optional<HomeLocation>> infer_homes(const TrajectoryStore& store,
                                                     const HomeOptions& opts = {},
                                                     int threads = 1);

/// Stays over a (day, slot)-sorted record span. Runs never cross days.
std::vector<StaySegment> segment_stays(std::span<const Ping> records, int bridge_gap_slots = 0);

/// Largest home distance over the records, nullopt when empty.
std::optional<double> max_distance_from_home(std::span<const Ping> records, CellId home,
                                             double cell_km = kDefaultCellKm);
/// One entry per period-day of the view.
std::vector<std::optional<double>> max_distance_per_day(const PeriodView& view, std::size_t user,
                                                        CellId home,
                                                        double cell_km = kDefaultCellKm);

/// Minutes observed away from home.
int non_home_dwelling(std::span<const Ping> records, CellId home);
int non_home_dwelling(const PeriodView& view, std::size_t user, CellId home, int period_day);

}  // namespace mobility
