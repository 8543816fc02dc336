#pragma once

#include "mobility/types.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace mobility {

enum class EntropyEstimator { LempelZiv, NaivePlugin };

struct EntropyEstimate {
  double bits = 0.0;
  EntropyEstimator estimator = EntropyEstimator::LempelZiv;
  std::size_t n = 0;
};

/// Symbols are opaque ids; only equality matters.
using Symbol = std::int32_t;

/// Cells of a (day, slot)-ordered span as dense symbols.
std::vector<Symbol> location_sequence(std::span<const Ping> records);

/// Match lengths: lengths[i] is the length of the shortest substring starting
/// at i that does not occur inside seq[0, i), or n - i + 1 when none exists.
std::vector<std::size_t> lz_match_lengths(std::span<const Symbol> seq);

/// E = n log2 n / sum_i lengths[i]. Throws InputError for n < 2.
EntropyEstimate real_entropy_lz(std::span<const Symbol> seq);

/// Shannon entropy of length-m windows divided by m (bits per symbol).
EntropyEstimate naive_plugin_entropy(std::span<const Symbol> seq, std::size_t window = 1);

}  // namespace mobility
