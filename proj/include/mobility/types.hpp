#pragma once

#include <Eigen/Core>

#include <compare>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace mobility {

inline constexpr int kGridSize = 200;
inline constexpr int kMaxDay = 74;
inline constexpr int kSlotsPerDay = 48;
inline constexpr int kSlotMinutes = 30;
inline constexpr double kDefaultCellKm = 0.5;

/// Input problem: bad file, malformed row, invalid config. Maps to CLI exit 1.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Computation could not produce a result (degenerate sample, ...). CLI exit 2.
class ComputationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A 500 m grid cell, both coordinates in [1, 200].
struct CellId {
  std::int16_t x = 1;
  std::int16_t y = 1;

  constexpr auto operator<=>(const CellId&) const = default;

  [[nodiscard]] constexpr bool valid() const {
    return x >= 1 && x <= kGridSize && y >= 1 && y <= kGridSize;
  }
  [[nodiscard]] Eigen::Vector2d center() const { return {double(x), double(y)}; }
  /// Row-major index into a 200x200 grid (x outer, y inner).
  [[nodiscard]] constexpr int index() const { return (x - 1) * kGridSize + (y - 1); }
  static constexpr CellId from_index(int i) {
    return {static_cast<std::int16_t>(i / kGridSize + 1),
            static_cast<std::int16_t>(i % kGridSize + 1)};
  }
};

using Uid = std::uint32_t;

/// One trajectory record with the user held by the owning store.
struct Ping {
  std::uint8_t day = 0;
  std::uint8_t slot = 0;
  CellId cell;

  constexpr bool operator==(const Ping&) const = default;
};

struct ObservationRecord {
  Uid uid = 0;
  int day = 0;
  int slot = 0;
  CellId cell;

  constexpr bool operator==(const ObservationRecord&) const = default;
};

enum class DayType { Weekday, Weekend, Holiday };
enum class Label { Returner, Explorer };

const char* to_string(DayType t);
const char* to_string(Label l);
DayType parse_day_type(const std::string& s);

/// Euclidean distance between cell centers in km.
inline double cell_distance_km(CellId a, CellId b, double cell_km) {
  return cell_km * (a.center() - b.center()).norm();
}

}  // namespace mobility
