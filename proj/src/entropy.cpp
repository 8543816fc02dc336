#include "mobility/entropy.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <utility>

namespace mobility {

std::vector<Symbol> location_sequence(std::span<const Ping> records) {
  std::vector<Symbol> seq;
  seq.reserve(records.size());
  for (const auto& p : records) seq.push_back(p.cell.index());
  return seq;
}

namespace {

/// Online suffix automaton; accepts exactly the substrings of the text fed so far.
class SuffixAutomaton {
 public:
  explicit SuffixAutomaton(std::size_t capacity) {
    states_.reserve(2 * capacity + 1);
    states_.push_back({});
  }

  void extend(Symbol c) {
    const int cur = static_cast<int>(states_.size());
    states_.push_back({states_[last_].len + 1, -1, {}});
    int p = last_;
    while (p != -1 && !states_[p].next.contains(c)) {
      states_[p].next[c] = cur;
      p = states_[p].link;
    }
    if (p == -1) {
      states_[cur].link = 0;
    } else {
      const int q = states_[p].next[c];
      if (states_[p].len + 1 == states_[q].len) {
        states_[cur].link = q;
      } else {
        const int clone = static_cast<int>(states_.size());
        State copy = states_[q];
        copy.len = states_[p].len + 1;
        states_.push_back(std::move(copy));
        while (p != -1 && states_[p].next[c] == q) {
          states_[p].next[c] = clone;
          p = states_[p].link;
        }
        states_[q].link = clone;
        states_[cur].link = clone;
      }
    }
    last_ = cur;
  }

  /// Length of the longest prefix of `s` that is a substring of the text.
  [[nodiscard]] std::size_t longest_prefix(std::span<const Symbol> s) const {
    int state = 0;
    std::size_t len = 0;
    for (Symbol c : s) {
      const auto& next = states_[state].next;
      auto it = next.find(c);
      if (it == next.end()) break;
      state = it->second;
      ++len;
    }
    return len;
  }

 private:
  struct State {
    int len = 0;
    int link = -1;
    std::map<Symbol, int> next;
  };
  std::vector<State> states_;
  int last_ = 0;
};

}  // namespace

std::vector<std::size_t> lz_match_lengths(std::span<const Symbol> seq) {
  const std::size_t n = seq.size();
  std::vector<std::size_t> lengths(n);
  SuffixAutomaton sam(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t match = sam.longest_prefix(seq.subspan(i));
    // A match running to the end of the sequence never finds a novel substring.
    lengths[i] = (i + match < n) ? match + 1 : n - i + 1;
    sam.extend(seq[i]);
  }
  return lengths;
}

EntropyEstimate real_entropy_lz(std::span<const Symbol> seq) {
  const std::size_t n = seq.size();
  if (n < 2) throw InputError("sequence too short");
  const auto lengths = lz_match_lengths(seq);
  double total = 0.0;
  for (auto l : lengths) total += static_cast<double>(l);
  const double nd = static_cast<double>(n);
  return {nd * std::log2(nd) / total, EntropyEstimator::LempelZiv, n};
}

EntropyEstimate naive_plugin_entropy(std::span<const Symbol> seq, std::size_t window) {
  if (window < 1 || seq.size() < window)
    throw InputError("naive entropy needs n >= m >= 1");
  std::map<std::vector<Symbol>, std::size_t> counts;
  const std::size_t windows = seq.size() - window + 1;
  for (std::size_t i = 0; i < windows; ++i)
    ++counts[std::vector<Symbol>(seq.begin() + static_cast<std::ptrdiff_t>(i),
                                 seq.begin() + static_cast<std::ptrdiff_t>(i + window))];
  double h = 0.0;
  for (const auto& [w, c] : counts) {
    const double p = static_cast<double>(c) / static_cast<double>(windows);
    h -= p * std::log2(p);
  }
  return {std::max(0.0, h) / static_cast<double>(window), EntropyEstimator::NaivePlugin, seq.size()};
}

}  // namespace mobility
