#pragma once

#include "mobility/types.hpp"

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mobility {

enum class DedupPolicy { KeepFirst, Reject };

DedupPolicy parse_dedup_policy(const std::string& s);
const char* to_string(DedupPolicy p);

struct IngestReport {
  std::size_t read = 0;
  std::size_t kept = 0;
  std::size_t dropped = 0;
  std::size_t distinct_users = 0;
};

/// Immutable per-user index of pings, sorted by (day, slot) within each user.
///
/// Pings are stored contiguously (CSR layout): user i owns
/// pings_[offsets_[i], offsets_[i+1]). Users are sorted by uid.
class TrajectoryStore {
 public:
  TrajectoryStore() : offsets_{0} {}

  /// Builds a store from arbitrary-order records. Records sharing a
  /// (uid, day, slot) key are resolved by `policy`; under KeepFirst the
  /// earliest record in input order wins.
  static TrajectoryStore from_records(std::vector<ObservationRecord> records,
                                      DedupPolicy policy = DedupPolicy::KeepFirst,
                                      IngestReport* report = nullptr);

  [[nodiscard]] std::size_t user_count() const { return uids_.size(); }
  [[nodiscard]] std::size_t record_count() const { return pings_.size(); }
  [[nodiscard]] Uid uid(std::size_t user) const { return uids_[user]; }
  [[nodiscard]] std::span<const Uid> uids() const { return uids_; }
  [[nodiscard]] std::span<const Ping> records(std::size_t user) const {
    return {pings_.data() + offsets_[user], offsets_[user + 1] - offsets_[user]};
  }
  /// Index of `uid`, or user_count() when absent.
  [[nodiscard]] std::size_t find(Uid uid) const;

  bool operator==(const TrajectoryStore&) const = default;

 private:
  std::vector<Uid> uids_;
  std::vector<std::size_t> offsets_;
  std::vector<Ping> pings_;
};

/// Reads `uid,d,t,x,y` CSV. Throws InputError naming the row on any defect.
TrajectoryStore ingest_csv(const std::filesystem::path& path,
                           DedupPolicy policy = DedupPolicy::KeepFirst,
                           IngestReport* report = nullptr);

/// Same as ingest_csv over an in-memory buffer.
TrajectoryStore ingest_csv_text(std::string_view text,
                                DedupPolicy policy = DedupPolicy::KeepFirst,
                                IngestReport* report = nullptr);

struct PeriodSpec {
  std::string name;
  int start_day = 0;
  int end_day = kMaxDay;
  /// calendar[d - 1] is the type of period-day d.
  std::vector<DayType> calendar;

  [[nodiscard]] int length() const { return end_day - start_day + 1; }
  [[nodiscard]] DayType day_type(int period_day) const { return calendar.at(period_day - 1); }
  /// Throws InputError if the range or calendar is inconsistent.
  void validate() const;
};

/// Period-day 1 is a Monday; Saturdays and Sundays are weekends and
/// period-day 8 (the second Monday) is a holiday.
std::vector<DayType> default_calendar(int period_length);

PeriodSpec normal_period();
PeriodSpec emergency_period();
PeriodSpec make_period(std::string name, int start_day, int end_day);

/// Records of a store restricted to a day range. Holds a pointer to the
/// store, which must outlive the view.
class PeriodView {
 public:
  PeriodView(const TrajectoryStore& store, PeriodSpec spec);

  [[nodiscard]] const TrajectoryStore& store() const { return *store_; }
  [[nodiscard]] const PeriodSpec& spec() const { return spec_; }
  [[nodiscard]] int length() const { return spec_.length(); }

  /// Store indices of users with at least one record in range.
  [[nodiscard]] std::span<const std::size_t> present() const { return present_; }
  /// Uids of store users without any record in range.
  [[nodiscard]] std::span<const Uid> absent() const { return absent_; }
  [[nodiscard]] bool empty() const { return present_.empty(); }

  /// In-range records of store user `user` (empty when absent).
  [[nodiscard]] std::span<const Ping> records(std::size_t user) const;
  /// Records of `user` on 1-based period-day `period_day`.
  [[nodiscard]] std::span<const Ping> day_records(std::size_t user, int period_day) const;
  [[nodiscard]] std::size_t record_count() const;

  [[nodiscard]] int period_day(int day) const { return day - spec_.start_day + 1; }
  [[nodiscard]] int absolute_day(int period_day) const { return period_day - 1 + spec_.start_day; }

  bool operator==(const PeriodView& other) const;

 private:
  const TrajectoryStore* store_;
  PeriodSpec spec_;
  std::vector<std::size_t> present_;
  std::vector<Uid> absent_;
  // Per store user, [begin, end) into that user's record span.
  std::vector<std::pair<std::uint32_t, std::uint32_t>> ranges_;
};

PeriodView select_period(const TrajectoryStore& store, const PeriodSpec& spec);
/// Narrows an existing view; `spec` must lie within the view's range.
PeriodView select_period(const PeriodView& view, const PeriodSpec& spec);

/// Records of one day from a (day, slot)-sorted span.
std::span<const Ping> records_on_day(std::span<const Ping> records, int day);

}  // namespace mobility
