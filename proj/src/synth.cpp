#include "mobility/synth.hpp"

#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace mobility::synth {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::mt19937_64 user_stream(std::uint64_t seed, Uid uid) {
  return std::mt19937_64(splitmix64(seed ^ (std::uint64_t(uid) * 0x9E3779B97F4A7C15ULL)));
}

double uniform01(std::mt19937_64& rng) { return double(rng() >> 11) * 0x1.0p-53; }

int uniform_int(std::mt19937_64& rng, int lo, int hi) {
  const std::uint64_t span = std::uint64_t(hi - lo) + 1;
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % span;
  std::uint64_t v;
  do {
    v = rng();
  } while (v >= limit);
  return lo + int(v % span);
}

// ---------------------------------------------------------------------------
// Scenario I/O

void ScenarioSpec::validate() const {
  if (first_day < 0 || last_day > kMaxDay || first_day > last_day)
    throw InputError("scenario: invalid day range");
  normal.validate();
  emergency.validate();
  if (home_lo < 1 || home_hi > kGridSize || home_lo > home_hi)
    throw InputError("scenario: home range outside the grid");
  if (drop_percent < 0 || drop_percent > 99) throw InputError("scenario: drop_percent must be in [0, 99]");
  if (k < 2) throw InputError("scenario: k must be >= 2");
  for (const auto& g : groups) {
    for (const Archetype* a : {&g.normal, &g.emergency}) {
      if (a->anchors < 1 || a->anchor_spread < 1) throw InputError("scenario: group '" + g.name + "' needs anchors >= 1");
      if ((2 * a->anchor_spread + 1) * (2 * a->anchor_spread + 1) - 1 < a->anchors)
        throw InputError("scenario: group '" + g.name + "' has more anchors than cells in its spread");
      const int lo = home_lo - std::max(a->anchor_spread, a->rare_max_offset);
      const int hi = home_hi + std::max(a->anchor_spread, a->rare_max_offset);
      if (lo < 1 || hi > kGridSize)
        throw InputError("scenario: group '" + g.name + "' can place cells outside the grid");
      if (a->rare_min_offset < 0 || a->rare_min_offset > a->rare_max_offset)
        throw InputError("scenario: group '" + g.name + "' has an invalid rare offset range");
    }
  }
}

namespace {

nlohmann::json archetype_to_json(const Archetype& a) {
  return {{"kind", to_string(a.kind)},           {"anchors", a.anchors},
          {"anchor_spread", a.anchor_spread},    {"rare_per_day", a.rare_per_day},
          {"rare_min_offset", a.rare_min_offset}, {"rare_max_offset", a.rare_max_offset}};
}

Label parse_label(const std::string& s) {
  if (s == "returner") return Label::Returner;
  if (s == "explorer") return Label::Explorer;
  throw InputError("unknown label '" + s + "'");
}

Archetype archetype_from_json(const nlohmann::json& j) {
  Archetype a;
  a.kind = parse_label(j.value("kind", "returner"));
  a.anchors = j.value("anchors", a.anchors);
  a.anchor_spread = j.value("anchor_spread", a.anchor_spread);
  a.rare_per_day = j.value("rare_per_day", a.rare_per_day);
  a.rare_min_offset = j.value("rare_min_offset", a.rare_min_offset);
  a.rare_max_offset = j.value("rare_max_offset", a.rare_max_offset);
  return a;
}

PeriodSpec period_from_json(const nlohmann::json& j, const std::string& name) {
  return make_period(name, j.at("start").get<int>(), j.at("end").get<int>());
}

}  // namespace

ScenarioSpec scenario_from_json(const nlohmann::json& j) {
  ScenarioSpec s;
  try {
    s.seed = j.value("seed", s.seed);
    for (const auto& g : j.at("groups")) {
      GroupSpec gs;
      gs.name = g.at("name").get<std::string>();
      gs.users = g.at("users").get<std::size_t>();
      gs.normal = archetype_from_json(g.at("normal"));
      gs.emergency = archetype_from_json(g.value("emergency", g.at("normal")));
      s.groups.push_back(gs);
    }
    s.first_day = j.value("first_day", s.first_day);
    s.last_day = j.value("last_day", s.last_day);
    if (j.contains("normal")) s.normal = period_from_json(j["normal"], "normal");
    if (j.contains("emergency")) s.emergency = period_from_json(j["emergency"], "emergency");
    s.k = j.value("k", s.k);
    s.home_lo = j.value("home_lo", s.home_lo);
    s.home_hi = j.value("home_hi", s.home_hi);
    s.drop_percent = j.value("drop_percent", s.drop_percent);
    if (j.contains("sunday_dip_monday") && !j["sunday_dip_monday"].is_null())
      s.sunday_dip_monday = j["sunday_dip_monday"].get<int>();
    s.detailed_truth = j.value("detailed_truth", s.detailed_truth);
    s.onn_radius = j.value("onn_radius", s.onn_radius);
    s.cell_km = j.value("cell_km", s.cell_km);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("scenario: ") + e.what());
  }
  s.validate();
  return s;
}

nlohmann::json scenario_to_json(const ScenarioSpec& s) {
  nlohmann::json groups = nlohmann::json::array();
  for (const auto& g : s.groups)
    groups.push_back({{"name", g.name},
                      {"users", g.users},
                      {"normal", archetype_to_json(g.normal)},
                      {"emergency", archetype_to_json(g.emergency)}});
  return {{"seed", s.seed},
          {"groups", groups},
          {"first_day", s.first_day},
          {"last_day", s.last_day},
          {"normal", {{"start", s.normal.start_day}, {"end", s.normal.end_day}}},
          {"emergency", {{"start", s.emergency.start_day}, {"end", s.emergency.end_day}}},
          {"k", s.k},
          {"home_lo", s.home_lo},
          {"home_hi", s.home_hi},
          {"drop_percent", s.drop_percent},
          {"sunday_dip_monday", s.sunday_dip_monday ? nlohmann::json(*s.sunday_dip_monday) : nlohmann::json()},
          {"detailed_truth", s.detailed_truth},
          {"onn_radius", s.onn_radius},
          {"cell_km", s.cell_km}};
}

ScenarioSpec four_group_scenario(std::uint64_t seed, std::size_t per_group) {
  ScenarioSpec s;
  s.seed = seed;
  Archetype returner;
  Archetype explorer;
  explorer.kind = Label::Explorer;
  explorer.anchors = 1;
  s.groups = {{"R-R", per_group, returner, returner},
              {"R-E", per_group, returner, explorer},
              {"E-E", per_group, explorer, explorer},
              {"E-R", per_group, explorer, returner}};
  return s;
}

// ---------------------------------------------------------------------------
// Generation

double brute_force_gyration(const std::map<CellId, int>& histogram, double cell_km, int k) {
  std::vector<std::pair<CellId, int>> cells(histogram.begin(), histogram.end());
  if (k > 0 && cells.size() > std::size_t(k)) {
    std::sort(cells.begin(), cells.end(), [](const auto& a, const auto& b) {
      if (a.second != b.second) return a.second > b.second;
      return a.first < b.first;
    });
    cells.resize(std::size_t(k));
  }
  if (cells.size() <= 1) return 0.0;
  double n = 0.0, sx = 0.0, sy = 0.0;
  for (const auto& [c, cnt] : cells) {
    n += cnt;
    sx += double(cnt) * c.x;
    sy += double(cnt) * c.y;
  }
  const double cx = sx / n, cy = sy / n;
  double moment = 0.0;
  for (const auto& [c, cnt] : cells)
    moment += double(cnt) * ((c.x - cx) * (c.x - cx) + (c.y - cy) * (c.y - cy));
  return cell_km * std::sqrt(moment / n);
}

namespace {

struct DayPing {
  int day;
  int slot;
  CellId cell;
};

CellId offset_cell(CellId base, int dx, int dy) {
  return {static_cast<std::int16_t>(base.x + dx), static_cast<std::int16_t>(base.y + dy)};
}

std::vector<CellId> draw_anchors(std::mt19937_64& rng, CellId home, const Archetype& a) {
  std::vector<CellId> out;
  while (int(out.size()) < a.anchors) {
    const CellId c = offset_cell(home, uniform_int(rng, -a.anchor_spread, a.anchor_spread),
                                 uniform_int(rng, -a.anchor_spread, a.anchor_spread));
    if (c == home || std::find(out.begin(), out.end(), c) != out.end()) continue;
    out.push_back(c);
  }
  return out;
}

CellId draw_rare(std::mt19937_64& rng, CellId home, const Archetype& a) {
  const int far = uniform_int(rng, a.rare_min_offset, a.rare_max_offset) * (uniform_int(rng, 0, 1) ? 1 : -1);
  const int free = uniform_int(rng, -a.rare_max_offset, a.rare_max_offset);
  return uniform_int(rng, 0, 1) ? offset_cell(home, far, free) : offset_cell(home, free, far);
}

void fill_day(std::mt19937_64& rng, const Archetype& a, CellId home,
              const std::vector<CellId>& anchors, std::vector<CellId>& slots) {
  const int morning = uniform_int(rng, 16, 18);
  const int evening = uniform_int(rng, 38, 40);
  std::fill(slots.begin(), slots.end(), home);
  if (a.kind == Label::Returner) {
    std::size_t prev = anchors.size();
    for (int s = morning; s < evening;) {
      std::size_t pick;
      do {
        const int w = uniform_int(rng, 0, int(anchors.size()) + 1);  // primary weighted 3:1
        pick = w <= 2 ? 0 : std::size_t(w - 2);
      } while (anchors.size() > 1 && pick == prev);
      const int len = std::min(uniform_int(rng, 2, 4), evening - s);
      for (int i = 0; i < len; ++i) slots[std::size_t(s + i)] = anchors[pick];
      prev = pick;
      s += len;
    }
  } else {
    for (int s = morning; s < evening; ++s) slots[std::size_t(s)] = anchors.front();
    std::set<int> used;
    for (int r = 0; r < a.rare_per_day && int(used.size()) < evening - morning; ++r) {
      int pos;
      do {
        pos = uniform_int(rng, morning, evening - 1);
      } while (used.contains(pos));
      used.insert(pos);
      slots[std::size_t(pos)] = draw_rare(rng, home, a);
    }
  }
}

struct UserDraw {
  std::vector<DayPing> pings;
  UserTruth truth;
};

bool in_range(int day, const PeriodSpec& p) { return day >= p.start_day && day <= p.end_day; }

PeriodTruth period_truth(const std::vector<DayPing>& pings, const PeriodSpec& p, int k, double cell_km) {
  PeriodTruth t;
  for (std::size_t i = 0; i < pings.size(); ++i) {
    const auto& q = pings[i];
    if (!in_range(q.day, p)) continue;
    ++t.histogram[q.cell];
    const bool continues = i > 0 && pings[i - 1].day == q.day && pings[i - 1].slot + 1 == q.slot &&
                           pings[i - 1].cell == q.cell;
    auto& st = t.stays[q.cell];
    if (!continues) ++st.first;
    st.second += kSlotMinutes;
  }
  t.r_g = brute_force_gyration(t.histogram, cell_km);
  t.r_g_k = brute_force_gyration(t.histogram, cell_km, k);
  t.s_k = t.r_g == 0.0 ? 1.0 : t.r_g_k / t.r_g;
  t.label = t.s_k >= 0.5 ? Label::Returner : Label::Explorer;
  return t;
}

std::vector<DayTruth> day_truths(const std::vector<DayPing>& pings, CellId home, int radius, double cell_km) {
  std::vector<DayTruth> days;
  auto outside = [&](CellId c) { return std::abs(c.x - home.x) > radius || std::abs(c.y - home.y) > radius; };
  for (std::size_t i = 0; i < pings.size(); ++i) {
    const auto& q = pings[i];
    if (days.empty() || days.back().day != q.day) days.push_back({q.day, 0, 0, 0, 0.0});
    auto& d = days.back();
    const bool same_day_prev = i > 0 && pings[i - 1].day == q.day;
    ++d.records;
    if (!(same_day_prev && pings[i - 1].slot + 1 == q.slot && pings[i - 1].cell == q.cell)) ++d.stays;
    if (outside(q.cell)) {
      d.onn_minutes += kSlotMinutes;
      if (same_day_prev) {
        const double dx = q.cell.x - pings[i - 1].cell.x, dy = q.cell.y - pings[i - 1].cell.y;
        d.onn_km += cell_km * std::sqrt(dx * dx + dy * dy);
      }
    }
  }
  return days;
}

UserDraw draw_user(const ScenarioSpec& spec, const GroupSpec& group, Uid uid, int attempt) {
  auto rng = user_stream(spec.seed + std::uint64_t(attempt) * 0xD1B54A32D192ED03ULL, uid);
  UserDraw u;
  const CellId home{static_cast<std::int16_t>(uniform_int(rng, spec.home_lo, spec.home_hi)),
                    static_cast<std::int16_t>(uniform_int(rng, spec.home_lo, spec.home_hi))};
  const auto normal_anchors = draw_anchors(rng, home, group.normal);
  const auto emergency_anchors = draw_anchors(rng, home, group.emergency);

  std::vector<CellId> slots(kSlotsPerDay);
  for (int day = spec.first_day; day <= spec.last_day; ++day) {
    const bool emergency = in_range(day, spec.emergency);
    const Archetype& a = emergency ? group.emergency : group.normal;
    const bool sunday = spec.sunday_dip_monday && (((day - *spec.sunday_dip_monday) % 7 + 7) % 7) == 6;
    if (sunday)
      std::fill(slots.begin(), slots.end(), home);
    else
      fill_day(rng, a, home, emergency ? emergency_anchors : normal_anchors, slots);
    for (int s = 0; s < kSlotsPerDay; ++s) {
      if (spec.drop_percent > 0 && uniform_int(rng, 0, 99) < spec.drop_percent) continue;
      u.pings.push_back({day, s, slots[std::size_t(s)]});
    }
  }

  u.truth.uid = uid;
  u.truth.group = group.name;
  u.truth.home = home;
  u.truth.periods["normal"] = period_truth(u.pings, spec.normal, spec.k, spec.cell_km);
  u.truth.periods["emergency"] = period_truth(u.pings, spec.emergency, spec.k, spec.cell_km);
  u.truth.days = day_truths(u.pings, home, spec.onn_radius, spec.cell_km);
  return u;
}

bool planted_labels_hold(const ScenarioSpec& spec, const GroupSpec& g, const UserTruth& t) {
  auto holds = [&](const char* name, const PeriodSpec& p, const Archetype& a) {
    const auto& pt = t.periods.at(name);
    // Periods outside the generated day range carry no data and no planted label.
    if (pt.histogram.empty()) return p.end_day < spec.first_day || p.start_day > spec.last_day;
    return pt.label == a.kind;
  };
  return holds("normal", spec.normal, g.normal) && holds("emergency", spec.emergency, g.emergency);
}

}  // namespace

Population generate(const ScenarioSpec& spec) {
  spec.validate();
  Population pop;
  Uid uid = 1;
  for (const auto& g : spec.groups) {
    for (std::size_t i = 0; i < g.users; ++i, ++uid) {
      UserDraw u;
      int attempt = 0;
      for (;; ++attempt) {
        u = draw_user(spec, g, uid, attempt);
        if (planted_labels_hold(spec, g, u.truth)) break;
        if (attempt == 50)
          throw ComputationError("scenario: cannot plant the labels of group '" + g.name + "'");
      }
      for (const auto& p : u.pings) pop.records.push_back({uid, p.day, p.slot, p.cell});
      pop.truth.push_back(std::move(u.truth));
    }
  }
  return pop;
}

// ---------------------------------------------------------------------------
// Serialization

nlohmann::json truth_to_json(const ScenarioSpec& spec, const Population& pop) {
  nlohmann::json users = nlohmann::json::array();
  for (const auto& t : pop.truth) {
    nlohmann::json periods = nlohmann::json::object();
    for (const auto& [name, p] : t.periods) {
      nlohmann::json pj = {{"label", to_string(p.label)}, {"r_g", p.r_g}, {"r_g_k", p.r_g_k}, {"s_k", p.s_k}};
      if (spec.detailed_truth) {
        nlohmann::json hist = nlohmann::json::array(), stays = nlohmann::json::array();
        for (const auto& [c, n] : p.histogram) hist.push_back({c.x, c.y, n});
        for (const auto& [c, s] : p.stays) stays.push_back({c.x, c.y, s.first, s.second});
        pj["histogram"] = hist;
        pj["stays"] = stays;
      }
      periods[name] = pj;
    }
    nlohmann::json u = {{"uid", t.uid}, {"group", t.group}, {"home", {t.home.x, t.home.y}}, {"periods", periods}};
    if (spec.detailed_truth) {
      nlohmann::json days = nlohmann::json::array();
      for (const auto& d : t.days) days.push_back({d.day, d.records, d.stays, d.onn_minutes, d.onn_km});
      u["days"] = days;
    }
    users.push_back(u);
  }
  return {{"scenario", scenario_to_json(spec)}, {"users", users}};
}

std::vector<UserTruth> truth_from_json(const nlohmann::json& j) {
  std::vector<UserTruth> out;
  auto cell = [](const nlohmann::json& a) {
    return CellId{a.at(0).get<std::int16_t>(), a.at(1).get<std::int16_t>()};
  };
  for (const auto& u : j.at("users")) {
    UserTruth t;
    t.uid = u.at("uid").get<Uid>();
    t.group = u.at("group").get<std::string>();
    t.home = cell(u.at("home"));
    for (const auto& [name, p] : u.at("periods").items()) {
      PeriodTruth pt;
      pt.label = parse_label(p.at("label").get<std::string>());
      pt.r_g = p.at("r_g").get<double>();
      pt.r_g_k = p.at("r_g_k").get<double>();
      pt.s_k = p.at("s_k").get<double>();
      if (p.contains("histogram"))
        for (const auto& h : p["histogram"]) pt.histogram[cell(h)] = h.at(2).get<int>();
      if (p.contains("stays"))
        for (const auto& s : p["stays"]) pt.stays[cell(s)] = {s.at(2).get<int>(), s.at(3).get<int>()};
      t.periods[name] = std::move(pt);
    }
    if (u.contains("days"))
      for (const auto& d : u["days"])
        t.days.push_back({d.at(0).get<int>(), d.at(1).get<int>(), d.at(2).get<int>(), d.at(3).get<int>(),
                          d.at(4).get<double>()});
    out.push_back(std::move(t));
  }
  return out;
}

std::string records_to_csv(const std::vector<ObservationRecord>& records) {
  std::string out = "uid,d,t,x,y\n";
  out.reserve(records.size() * 18 + out.size());
  char buf[64];
  for (const auto& r : records) {
    char* p = buf;
    for (long long v : {(long long)r.uid, (long long)r.day, (long long)r.slot, (long long)r.cell.x, (long long)r.cell.y}) {
      p = std::to_chars(p, buf + sizeof(buf), v).ptr;
      *p++ = ',';
    }
    p[-1] = '\n';
    out.append(buf, p);
  }
  return out;
}

void write_population(const ScenarioSpec& spec, const Population& pop, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "trajectories.csv", std::ios::binary);
    if (!out) throw InputError("cannot write to '" + dir.string() + "'");
    out << records_to_csv(pop.records);
  }
  std::ofstream out(dir / "ground_truth.json", std::ios::binary);
  out << truth_to_json(spec, pop).dump() << '\n';
}

std::string poi_csv(std::uint64_t seed) {
  std::mt19937_64 rng(splitmix64(seed));
  std::ostringstream os;
  os << "x,y,POI_count\n";
  for (int x = 1; x <= kGridSize; ++x)
    for (int y = 1; y <= kGridSize; ++y) {
      const double r2 = double((x - 100) * (x - 100) + (y - 100) * (y - 100));
      const int bump = int(std::lround(200.0 * std::exp(-r2 / (2.0 * 30.0 * 30.0))));
      os << x << ',' << y << ',' << bump + uniform_int(rng, 0, 5) << '\n';
    }
  return os.str();
}

std::vector<double> gen_raw_samples(const FitParams& params, std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(splitmix64(seed));
  auto open01 = [&] { return (double(rng() >> 11) + 0.5) * 0x1.0p-53; };
  std::vector<double> out;
  out.reserve(n);
  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, ExponentialParams>) {
          if (!(p.lambda > 0.0)) throw InputError("exponential sampler: lambda must be > 0");
          for (std::size_t i = 0; i < n; ++i) out.push_back(p.x_min - std::log(open01()) / p.lambda);
        } else if constexpr (std::is_same_v<T, LognormalParams>) {
          if (!(p.sigma > 0.0)) throw InputError("lognormal sampler: sigma must be > 0");
          const boost::math::normal_distribution<double> normal;
          const double floor_cdf = p.x_min > 0.0 ? boost::math::cdf(normal, (std::log(p.x_min) - p.mu) / p.sigma) : 0.0;
          for (std::size_t i = 0; i < n; ++i) {
            const double u = floor_cdf + open01() * (1.0 - floor_cdf);
            out.push_back(std::exp(p.mu + p.sigma * boost::math::quantile(normal, u)));
          }
        } else {
          if (!(p.alpha > 0.0) || !(p.lambda > 0.0) || !(p.x_min > 0.0))
            throw InputError("truncated power law sampler: alpha, lambda and x_min must be > 0");
          while (out.size() < n) {
            const double x = p.x_min - std::log(open01()) / p.lambda;
            if (open01() < std::pow(x / p.x_min, -p.alpha)) out.push_back(x);
          }
        }
      },
      params);
  return out;
}

}  // namespace mobility::synth
