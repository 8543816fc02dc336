#pragma once

#include "mobility/trajectory_store.hpp"
#include "mobility/types.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <tuple>
#include <sstream>
#include <string>
#include <vector>

namespace testing {

inline mobility::CellId cell(int x, int y) {
  return {static_cast<std::int16_t>(x), static_cast<std::int16_t>(y)};
}

inline mobility::Ping ping(int day, int slot, int x, int y) {
  return {static_cast<std::uint8_t>(day), static_cast<std::uint8_t>(slot), cell(x, y)};
}

inline mobility::ObservationRecord rec(mobility::Uid uid, int day, int slot, int x, int y) {
  return {uid, day, slot, cell(x, y)};
}

inline std::filesystem::path data_dir() { return MOBILITY_TEST_DATA; }

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline bool close_rel(double a, double b, double rel) {
  return std::abs(a - b) <= rel * std::max({1.0, std::abs(a), std::abs(b)});
}

/// Direct evaluation of the gyration radius from pairwise distances:
/// r^2 = sum_ij n_i n_j |p_i - p_j|^2 / (2 N^2). Independent of the center of mass.
inline double pairwise_gyration(const std::vector<std::pair<mobility::CellId, int>>& cells, double cell_km) {
  double n = 0.0, acc = 0.0;
  for (const auto& [c, k] : cells) n += k;
  for (const auto& [a, ka] : cells)
    for (const auto& [b, kb] : cells) {
      const double dx = a.x - b.x, dy = a.y - b.y;
      acc += double(ka) * double(kb) * (dx * dx + dy * dy);
    }
  return n == 0.0 ? 0.0 : cell_km * std::sqrt(acc / (2.0 * n * n));
}

/// Top-k cells by count desc, x asc, y asc.
inline std::vector<std::pair<mobility::CellId, int>> top_cells(const std::map<mobility::CellId, int>& h, int k) {
  std::vector<std::pair<mobility::CellId, int>> v(h.begin(), h.end());
  std::stable_sort(v.begin(), v.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  if (k > 0 && int(v.size()) > k) v.resize(std::size_t(k));
  return v;
}

}  // namespace testing
