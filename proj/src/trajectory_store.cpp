#include "mobility/trajectory_store.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

namespace mobility {

const char* to_string(DayType t) {
  switch (t) {
    case DayType::Weekday: return "weekday";
    case DayType::Weekend: return "weekend";
    case DayType::Holiday: return "holiday";
  }
  return "?";
}

const char* to_string(Label l) { return l == Label::Returner ? "returner" : "explorer"; }

DayType parse_day_type(const std::string& s) {
  if (s == "weekday") return DayType::Weekday;
  if (s == "weekend") return DayType::Weekend;
  if (s == "holiday") return DayType::Holiday;
  throw InputError("unknown day type '" + s + "'");
}

DedupPolicy parse_dedup_policy(const std::string& s) {
  if (s == "keep_first") return DedupPolicy::KeepFirst;
  if (s == "reject") return DedupPolicy::Reject;
  throw InputError("unknown dedup policy '" + s + "'");
}

const char* to_string(DedupPolicy p) { return p == DedupPolicy::KeepFirst ? "keep_first" : "reject"; }

namespace {

std::uint64_t sort_key(const ObservationRecord& r) {
  return (std::uint64_t(r.uid) << 16) | (std::uint64_t(r.day) << 8) | std::uint64_t(r.slot);
}

void check_record(const ObservationRecord& r, std::size_t row) {
  auto fail = [&](const char* field, int value) {
    std::ostringstream os;
    os << "row " << row << ": field '" << field << "' out of range (" << value << ")";
    throw InputError(os.str());
  };
  if (r.day < 0 || r.day > kMaxDay) fail("d", r.day);
  if (r.slot < 0 || r.slot >= kSlotsPerDay) fail("t", r.slot);
  if (r.cell.x < 1 || r.cell.x > kGridSize) fail("x", r.cell.x);
  if (r.cell.y < 1 || r.cell.y > kGridSize) fail("y", r.cell.y);
}

}  // namespace

TrajectoryStore TrajectoryStore::from_records(std::vector<ObservationRecord> records,
                                              DedupPolicy policy, IngestReport* report) {
  const auto by_key = [](const ObservationRecord& a, const ObservationRecord& b) {
    return sort_key(a) < sort_key(b);
  };
  if (!std::is_sorted(records.begin(), records.end(), by_key))
    std::stable_sort(records.begin(), records.end(), by_key);

  TrajectoryStore store;
  store.pings_.reserve(records.size());
  std::size_t dropped = 0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    if (i > 0 && sort_key(records[i - 1]) == sort_key(r)) {
      if (policy == DedupPolicy::Reject) {
        std::ostringstream os;
        os << "duplicate key (uid=" << r.uid << ", d=" << r.day << ", t=" << r.slot << ")";
        throw InputError(os.str());
      }
      ++dropped;
      continue;
    }
    if (store.uids_.empty() || store.uids_.back() != r.uid) {
      if (!store.uids_.empty()) store.offsets_.push_back(store.pings_.size());
      store.uids_.push_back(r.uid);
    }
    store.pings_.push_back(
        {static_cast<std::uint8_t>(r.day), static_cast<std::uint8_t>(r.slot), r.cell});
  }
  if (!store.uids_.empty()) store.offsets_.push_back(store.pings_.size());

  if (report) {
    report->read = records.size();
    report->kept = store.pings_.size();
    report->dropped = dropped;
    report->distinct_users = store.uids_.size();
  }
  return store;
}

std::size_t TrajectoryStore::find(Uid uid) const {
  auto it = std::lower_bound(uids_.begin(), uids_.end(), uid);
  if (it == uids_.end() || *it != uid) return uids_.size();
  return static_cast<std::size_t>(it - uids_.begin());
}

TrajectoryStore ingest_csv_text(std::string_view text, DedupPolicy policy, IngestReport* report) {
  std::vector<ObservationRecord> records;
  records.reserve(text.size() / 20);

  std::size_t pos = 0;
  std::size_t row = 0;
  bool header_seen = false;
  if (text.starts_with("\xEF\xBB\xBF")) pos = 3;

  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++row;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;

    if (!header_seen) {
      if (line != "uid,d,t,x,y")
        throw InputError("row 1: expected header 'uid,d,t,x,y', got '" + std::string(line) + "'");
      header_seen = true;
      continue;
    }

    long long fields[5];
    const char* p = line.data();
    const char* end = line.data() + line.size();
    static constexpr const char* kNames[5] = {"uid", "d", "t", "x", "y"};
    for (int f = 0; f < 5; ++f) {
      auto [next, ec] = std::from_chars(p, end, fields[f]);
      const bool bad_sep = (f < 4) ? (next == end || *next != ',') : (next != end);
      if (ec != std::errc{} || bad_sep) {
        std::ostringstream os;
        os << "row " << row << ": malformed field '" << kNames[f] << "' in '" << line << "'";
        throw InputError(os.str());
      }
      p = next + (f < 4 ? 1 : 0);
    }
    if (fields[0] < 0 || fields[0] > 0xFFFFFFFFLL) {
      std::ostringstream os;
      os << "row " << row << ": field 'uid' out of range (" << fields[0] << ")";
      throw InputError(os.str());
    }
    auto clamp16 = [](long long v) {
      return static_cast<std::int16_t>(std::clamp<long long>(v, -32768, 32767));
    };
    ObservationRecord r{static_cast<Uid>(fields[0]),
                        static_cast<int>(std::clamp<long long>(fields[1], -1, 1000)),
                        static_cast<int>(std::clamp<long long>(fields[2], -1, 1000)),
                        {clamp16(fields[3]), clamp16(fields[4])}};
    check_record(r, row);
    records.push_back(r);
  }
  if (!header_seen) throw InputError("row 1: missing header 'uid,d,t,x,y'");
  return TrajectoryStore::from_records(std::move(records), policy, report);
}

TrajectoryStore ingest_csv(const std::filesystem::path& path, DedupPolicy policy,
                           IngestReport* report) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open trajectory file '" + path.string() + "'");
  std::string text;
  in.seekg(0, std::ios::end);
  text.resize(static_cast<std::size_t>(in.tellg()));
  in.seekg(0);
  in.read(text.data(), static_cast<std::streamsize>(text.size()));
  return ingest_csv_text(text, policy, report);
}

// ---------------------------------------------------------------------------
// Periods

std::vector<DayType> default_calendar(int period_length) {
  if (period_length < 1) throw InputError("period length must be >= 1");
  std::vector<DayType> cal(static_cast<std::size_t>(period_length), DayType::Weekday);
  for (int d = 1; d <= period_length; ++d) {
    const int weekday = (d - 1) % 7;  // 0 = Monday
    if (weekday >= 5) cal[d - 1] = DayType::Weekend;
    if (d == 8) cal[d - 1] = DayType::Holiday;
  }
  return cal;
}

PeriodSpec make_period(std::string name, int start_day, int end_day) {
  PeriodSpec p{std::move(name), start_day, end_day, {}};
  if (end_day >= start_day) p.calendar = default_calendar(end_day - start_day + 1);
  p.validate();
  return p;
}

PeriodSpec normal_period() { return make_period("normal", 43, 57); }
PeriodSpec emergency_period() { return make_period("emergency", 60, 74); }

void PeriodSpec::validate() const {
  if (start_day < 0 || end_day > kMaxDay || start_day > end_day) {
    std::ostringstream os;
    os << "period '" << name << "': invalid day range [" << start_day << ", " << end_day << "]";
    throw InputError(os.str());
  }
  if (static_cast<int>(calendar.size()) != length()) {
    std::ostringstream os;
    os << "period '" << name << "': calendar has " << calendar.size() << " entries for "
       << length() << " days";
    throw InputError(os.str());
  }
}

std::span<const Ping> records_on_day(std::span<const Ping> records, int day) {
  auto lo = std::lower_bound(records.begin(), records.end(), day,
                             [](const Ping& p, int d) { return p.day < d; });
  auto hi = std::upper_bound(lo, records.end(), day,
                             [](int d, const Ping& p) { return d < p.day; });
  return {lo, hi};
}

PeriodView::PeriodView(const TrajectoryStore& store, PeriodSpec spec)
    : store_(&store), spec_(std::move(spec)) {
  spec_.validate();
  ranges_.resize(store.user_count());
  for (std::size_t u = 0; u < store.user_count(); ++u) {
    auto recs = store.records(u);
    auto lo = std::lower_bound(recs.begin(), recs.end(), spec_.start_day,
                               [](const Ping& p, int d) { return p.day < d; });
    auto hi = std::upper_bound(lo, recs.end(), spec_.end_day,
                               [](int d, const Ping& p) { return d < p.day; });
    ranges_[u] = {static_cast<std::uint32_t>(lo - recs.begin()),
                  static_cast<std::uint32_t>(hi - recs.begin())};
    if (lo != hi)
      present_.push_back(u);
    else
      absent_.push_back(store.uid(u));
  }
}

std::span<const Ping> PeriodView::records(std::size_t user) const {
  auto [b, e] = ranges_[user];
  return store_->records(user).subspan(b, e - b);
}

std::span<const Ping> PeriodView::day_records(std::size_t user, int period_day) const {
  return records_on_day(records(user), absolute_day(period_day));
}

std::size_t PeriodView::record_count() const {
  std::size_t n = 0;
  for (auto [b, e] : ranges_) n += e - b;
  return n;
}

bool PeriodView::operator==(const PeriodView& other) const {
  return store_ == other.store_ && spec_.start_day == other.spec_.start_day &&
         spec_.end_day == other.spec_.end_day && spec_.calendar == other.spec_.calendar &&
         present_ == other.present_ && absent_ == other.absent_ && ranges_ == other.ranges_;
}

PeriodView select_period(const TrajectoryStore& store, const PeriodSpec& spec) {
  return PeriodView(store, spec);
}

PeriodView select_period(const PeriodView& view, const PeriodSpec& spec) {
  if (spec.start_day < view.spec().start_day || spec.end_day > view.spec().end_day)
    throw InputError("period '" + spec.name + "' lies outside the view's day range");
  return PeriodView(view.store(), spec);
}

}  // namespace mobility
