#include "mobility/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace mobility {

namespace {

using nlohmann::json;

[[noreturn]] void bad(const std::string& key, const std::string& what) {
  throw InputError("config key '" + key + "': " + what);
}

// Reads keys from one JSON object and rejects any key nobody asked for.
class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) bad(path_.empty() ? "<root>" : path_, "expected an object");
  }

  std::string key(const std::string& k) const { return path_.empty() ? k : path_ + "." + k; }

  const json* get(const std::string& k) {
    seen_.insert(k);
    auto it = j_.find(k);
    return it == j_.end() || it->is_null() ? nullptr : &*it;
  }

  template <typename T>
  void read(const std::string& k, T& out) {
    if (const json* v = get(k)) out = as<T>(*v, key(k));
  }

  template <typename T>
  static T as(const json& v, const std::string& key) {
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) bad(key, "expected a boolean");
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) bad(key, "expected an integer");
      if constexpr (std::is_unsigned_v<T>)
        if (v.is_number_integer() && !v.is_number_unsigned() && v.get<long long>() < 0) bad(key, "must be non-negative");
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) bad(key, "expected a number");
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) bad(key, "expected a string");
    }
    return v.get<T>();
  }

  void finish() const {
    for (const auto& [k, v] : j_.items())
      if (!seen_.contains(k)) bad(key(k), "unknown key");
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

template <typename Enum>
Enum parse_enum(const std::string& key, const std::string& value,
                std::initializer_list<std::pair<const char*, Enum>> options) {
  std::string names;
  for (const auto& [name, e] : options) {
    if (value == name) return e;
    names += names.empty() ? name : std::string(", ") + name;
  }
  bad(key, "unknown value '" + value + "' (expected one of: " + names + ")");
}

constexpr std::initializer_list<std::pair<const char*, ClassificationRule>> kRules{
    {"returner_at_or_above", ClassificationRule::ReturnerAtOrAbove},
    {"returner_below", ClassificationRule::ReturnerBelow}};
constexpr std::initializer_list<std::pair<const char*, VisitWeighting>> kWeightings{
    {"records", VisitWeighting::Records}, {"stays", VisitWeighting::Stays}};
constexpr std::initializer_list<std::pair<const char*, OnnAttribution>> kAttributions{
    {"destination", OnnAttribution::Destination}, {"both_endpoints", OnnAttribution::BothEndpoints}};
constexpr std::initializer_list<std::pair<const char*, PoiWeighting>> kPoiWeightings{
    {"per_record", PoiWeighting::PerRecord}, {"distinct_cell", PoiWeighting::DistinctCell}};
constexpr std::initializer_list<std::pair<const char*, DedupPolicy>> kDedup{
    {"keep_first", DedupPolicy::KeepFirst}, {"reject", DedupPolicy::Reject}};

template <typename Enum>
const char* enum_name(Enum e, std::initializer_list<std::pair<const char*, Enum>> options) {
  for (const auto& [name, v] : options)
    if (v == e) return name;
  return "?";
}

PeriodSpec period_from_json(const json& j, const std::string& key, const std::string& name) {
  Reader r(j, key);
  int start = -1, end = -1;
  r.read("start", start);
  r.read("end", end);
  if (start < 0) bad(r.key("start"), "required non-negative day");
  if (end < 0) bad(r.key("end"), "required non-negative day");
  if (start > end || end > kMaxDay) bad(key, "day range must satisfy 0 <= start <= end <= 74");
  PeriodSpec p = make_period(name, start, end);
  if (const json* cal = r.get("calendar")) {
    const std::string ck = r.key("calendar");
    auto type_of = [&](const json& v, const std::string& k) {
      const auto s = Reader::as<std::string>(v, k);
      try {
        return parse_day_type(s);
      } catch (const std::exception&) {
        bad(k, "unknown day type '" + s + "' (expected weekday, weekend or holiday)");
      }
    };
    if (cal->is_array()) {
      if (int(cal->size()) != p.length())
        bad(ck, "expected " + std::to_string(p.length()) + " entries, one per period day");
      for (std::size_t i = 0; i < cal->size(); ++i) p.calendar[i] = type_of((*cal)[i], ck + "[" + std::to_string(i) + "]");
    } else if (cal->is_object()) {
      for (const auto& [day, v] : cal->items()) {
        int d = 0;
        try {
          std::size_t used = 0;
          d = std::stoi(day, &used);
          if (used != day.size()) throw std::invalid_argument(day);
        } catch (const std::exception&) {
          bad(ck + "." + day, "calendar override keys are 1-based period days");
        }
        if (d < 1 || d > p.length()) bad(ck + "." + day, "period day outside [1, " + std::to_string(p.length()) + "]");
        p.calendar[std::size_t(d - 1)] = type_of(v, ck + "." + day);
      }
    } else {
      bad(ck, "expected an array of day types or an object of overrides");
    }
  }
  r.finish();
  return p;
}

Bins bins_from_json(const json& v, const std::string& key, Bins base) {
  if (!v.is_array() || v.empty()) bad(key, "expected a non-empty array of bin edges");
  base.edges.clear();
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double e = Reader::as<double>(v[i], key + "[" + std::to_string(i) + "]");
    if (!(e > 0.0) || !std::isfinite(e)) bad(key, "edges must be positive and finite");
    if (!base.edges.empty() && e <= base.edges.back()) bad(key, "edges must be strictly increasing");
    base.edges.push_back(e);
  }
  return base;
}

json bins_to_json(const Bins& b) {
  return b.edges;
}

}  // namespace

void RunConfig::validate() const {
  if (periods.empty()) bad("periods", "at least one period is required");
  std::set<std::string> names;
  for (const auto& p : periods) {
    try {
      p.validate();
    } catch (const InputError& e) {
      bad("periods." + p.name, e.what());
    }
    if (!names.insert(p.name).second) bad("periods." + p.name, "duplicate period name");
  }
  if (period && !names.contains(*period)) bad("period", "no period named '" + *period + "'");
  if (k_min < 2) bad("k_range", "k_min must be >= 2");
  if (k_max < k_min) bad("k_range", "k_max must be >= k_min");
  if (k < 2) bad("k", "must be >= 2");
  for (int t : fit_topk)
    if (t < 2) bad("fit.topk", "every k must be >= 2");
  if (!(threshold > 0.0) || !std::isfinite(threshold)) bad("threshold", "must be positive and finite");
  if (!(cell_km > 0.0) || !std::isfinite(cell_km)) bad("cell_km", "must be positive and finite");
  if (home.usual_first_day < 0 || home.usual_last_day > kMaxDay || home.usual_first_day > home.usual_last_day)
    bad("home.usual_days", "must satisfy 0 <= first <= last <= 74");
  if (home.night_start_slot < 0 || home.night_start_slot >= kSlotsPerDay) bad("home.night_start_slot", "must be in [0, 47]");
  if (home.night_end_slot < 0 || home.night_end_slot > kSlotsPerDay) bad("home.night_end_slot", "must be in [0, 48]");
  if (bridge_gap_slots < 0) bad("bridge_gap_slots", "must be >= 0");
  if (!(sk_bin_width > 0.0) || sk_bin_width > 1.0) bad("sk_bin_width", "must be in (0, 1]");
  if (radius < 0) bad("neighborhood_radius", "must be >= 0");
  if (x_min && !(*x_min > 0.0)) bad("x_min", "must be \"sample_min\" or a positive number");
  if (!(fit.tolerance > 0.0)) bad("fit.tolerance", "must be positive");
  if (fit.max_iterations < 1) bad("fit.max_iterations", "must be >= 1");
  if (!(fit.alpha_hi > 0.0)) bad("fit.alpha_max", "must be positive");
  if (!(fit.lambda_lo > 0.0) || !(fit.lambda_hi > fit.lambda_lo)) bad("fit.lambda_range", "must satisfy 0 < lo < hi");
  if (min_users < 1) bad("min_users", "must be >= 1");
  if (threads < 1) bad("threads", "must be >= 1");
  if (synth_drop_percent < 0 || synth_drop_percent > 99) bad("synth.drop_percent", "must be in [0, 99]");
}

AnalysisOptions RunConfig::analysis() const {
  return {cell_km, threshold, rule, weighting, threads};
}

OnnOptions RunConfig::onn() const { return {radius, onn_attribution, cell_km}; }

std::vector<PeriodSpec> RunConfig::selected_periods() const {
  if (!period) return periods;
  for (const auto& p : periods)
    if (p.name == *period) return {p};
  bad("period", "no period named '" + *period + "'");
}

RunConfig config_from_json(const json& j) {
  RunConfig c;
  Reader r(j, "");
  std::string s;
  if (const json* v = r.get("data")) c.data = Reader::as<std::string>(*v, "data");
  if (const json* v = r.get("poi")) c.poi = Reader::as<std::string>(*v, "poi");
  if (const json* v = r.get("out")) c.out = Reader::as<std::string>(*v, "out");
  if (const json* v = r.get("periods")) {
    if (!v->is_object() || v->empty()) bad("periods", "expected a non-empty object of named periods");
    c.periods.clear();
    // nlohmann::json objects iterate in key order; "order" fixes the sequence explicitly.
    std::vector<std::string> order;
    for (const auto& [name, p] : v->items()) order.push_back(name);
    if (const json* o = r.get("period_order")) {
      order.clear();
      if (!o->is_array()) bad("period_order", "expected an array of period names");
      for (const auto& n : *o) {
        const auto name = Reader::as<std::string>(n, "period_order");
        if (!v->contains(name)) bad("period_order", "unknown period '" + name + "'");
        order.push_back(name);
      }
      if (order.size() != v->size()) bad("period_order", "must list every period once");
    } else if (v->contains("normal") && v->contains("emergency")) {
      std::stable_partition(order.begin(), order.end(), [](const std::string& n) { return n == "normal"; });
      std::stable_partition(order.begin() + 1, order.end(), [](const std::string& n) { return n == "emergency"; });
    }
    for (const auto& name : order) c.periods.push_back(period_from_json((*v)[name], "periods." + name, name));
  } else {
    r.get("period_order");
  }
  if (const json* v = r.get("period")) c.period = Reader::as<std::string>(*v, "period");
  if (r.get("dedup_policy")) {
    r.read("dedup_policy", s);
    c.dedup = parse_enum("dedup_policy", s, kDedup);
  }
  r.read("k", c.k);
  if (const json* v = r.get("k_range")) {
    if (!v->is_array() || v->size() != 2) bad("k_range", "expected [k_min, k_max]");
    c.k_min = Reader::as<int>((*v)[0], "k_range[0]");
    c.k_max = Reader::as<int>((*v)[1], "k_range[1]");
  }
  r.read("threshold", c.threshold);
  if (r.get("direction")) {
    r.read("direction", s);
    c.rule = parse_enum("direction", s, kRules);
  }
  if (r.get("visit_weighting")) {
    r.read("visit_weighting", s);
    c.weighting = parse_enum("visit_weighting", s, kWeightings);
  }
  r.read("cell_km", c.cell_km);
  if (const json* v = r.get("home")) {
    Reader h(*v, "home");
    if (const json* d = h.get("usual_days")) {
      if (!d->is_array() || d->size() != 2) bad("home.usual_days", "expected [first_day, last_day]");
      c.home.usual_first_day = Reader::as<int>((*d)[0], "home.usual_days[0]");
      c.home.usual_last_day = Reader::as<int>((*d)[1], "home.usual_days[1]");
    }
    h.read("night_start_slot", c.home.night_start_slot);
    h.read("night_end_slot", c.home.night_end_slot);
    h.finish();
  }
  r.read("bridge_gap_slots", c.bridge_gap_slots);
  r.read("sk_bin_width", c.sk_bin_width);
  r.read("neighborhood_radius", c.radius);
  if (r.get("onn_attribution")) {
    r.read("onn_attribution", s);
    c.onn_attribution = parse_enum("onn_attribution", s, kAttributions);
  }
  if (r.get("poi_weighting")) {
    r.read("poi_weighting", s);
    c.poi_weighting = parse_enum("poi_weighting", s, kPoiWeightings);
  }
  r.read("poi_report_both", c.poi_report_both);
  if (const json* v = r.get("bins")) {
    Reader b(*v, "bins");
    if (const json* e = b.get("max_distance_km")) c.max_distance_bins = bins_from_json(*e, "bins.max_distance_km", c.max_distance_bins);
    if (const json* e = b.get("dwelling_min")) c.dwelling_bins = bins_from_json(*e, "bins.dwelling_min", c.dwelling_bins);
    if (const json* e = b.get("onn_time_min")) c.onn_time_bins = bins_from_json(*e, "bins.onn_time_min", c.onn_time_bins);
    if (const json* e = b.get("onn_distance_km")) c.onn_distance_bins = bins_from_json(*e, "bins.onn_distance_km", c.onn_distance_bins);
    b.finish();
  }
  if (const json* v = r.get("x_min")) {
    if (v->is_string()) {
      if (v->get<std::string>() != "sample_min") bad("x_min", "expected \"sample_min\" or a positive number");
    } else {
      c.x_min = Reader::as<double>(*v, "x_min");
    }
  }
  if (const json* v = r.get("fit")) {
    Reader f(*v, "fit");
    f.read("tolerance", c.fit.tolerance);
    f.read("max_iterations", c.fit.max_iterations);
    f.read("alpha_max", c.fit.alpha_hi);
    if (const json* l = f.get("lambda_range")) {
      if (!l->is_array() || l->size() != 2) bad("fit.lambda_range", "expected [lo, hi]");
      c.fit.lambda_lo = Reader::as<double>((*l)[0], "fit.lambda_range[0]");
      c.fit.lambda_hi = Reader::as<double>((*l)[1], "fit.lambda_range[1]");
    }
    f.read("min_sample", c.fit.min_sample);
    if (const json* t = f.get("topk")) {
      if (!t->is_array()) bad("fit.topk", "expected an array of k values");
      c.fit_topk.clear();
      for (std::size_t i = 0; i < t->size(); ++i) c.fit_topk.push_back(Reader::as<int>((*t)[i], "fit.topk"));
    }
    f.finish();
  }
  r.read("min_users", c.min_users);
  r.read("seed", c.seed);
  r.read("threads", c.threads);
  if (const json* v = r.get("synth")) {
    Reader sy(*v, "synth");
    sy.read("users_per_group", c.synth_users_per_group);
    sy.read("drop_percent", c.synth_drop_percent);
    if (const json* sc = sy.get("scenario")) c.scenario = synth::scenario_from_json(*sc);
    sy.finish();
  }
  r.finish();
  c.validate();
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config file '" + path.string() + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw InputError("config file '" + path.string() + "' is not valid JSON: " + e.what());
  }
  return config_from_json(j);
}

json config_to_json(const RunConfig& c) {
  json periods = json::object();
  json order = json::array();
  for (const auto& p : c.periods) {
    json cal = json::array();
    for (auto t : p.calendar) cal.push_back(to_string(t));
    periods[p.name] = {{"start", p.start_day}, {"end", p.end_day}, {"calendar", cal}};
    order.push_back(p.name);
  }
  json j = {
      {"data", c.data.string()},
      {"poi", c.poi.string()},
      {"out", c.out.string()},
      {"periods", periods},
      {"period_order", order},
      {"period", c.period ? json(*c.period) : json()},
      {"dedup_policy", to_string(c.dedup)},
      {"k", c.k},
      {"k_range", {c.k_min, c.k_max}},
      {"threshold", c.threshold},
      {"direction", enum_name(c.rule, kRules)},
      {"visit_weighting", enum_name(c.weighting, kWeightings)},
      {"cell_km", c.cell_km},
      {"home",
       {{"usual_days", {c.home.usual_first_day, c.home.usual_last_day}},
        {"night_start_slot", c.home.night_start_slot},
        {"night_end_slot", c.home.night_end_slot}}},
      {"bridge_gap_slots", c.bridge_gap_slots},
      {"sk_bin_width", c.sk_bin_width},
      {"neighborhood_radius", c.radius},
      {"onn_attribution", enum_name(c.onn_attribution, kAttributions)},
      {"poi_weighting", enum_name(c.poi_weighting, kPoiWeightings)},
      {"poi_report_both", c.poi_report_both},
      {"bins",
       {{"max_distance_km", bins_to_json(c.max_distance_bins)},
        {"dwelling_min", bins_to_json(c.dwelling_bins)},
        {"onn_time_min", bins_to_json(c.onn_time_bins)},
        {"onn_distance_km", bins_to_json(c.onn_distance_bins)}}},
      {"x_min", c.x_min ? json(*c.x_min) : json("sample_min")},
      {"fit",
       {{"tolerance", c.fit.tolerance},
        {"max_iterations", c.fit.max_iterations},
        {"alpha_max", c.fit.alpha_hi},
        {"lambda_range", {c.fit.lambda_lo, c.fit.lambda_hi}},
        {"min_sample", c.fit.min_sample},
        {"topk", c.fit_topk}}},
      {"min_users", c.min_users},
      {"seed", c.seed},
      {"threads", c.threads},
      {"synth",
       {{"users_per_group", c.synth_users_per_group},
        {"drop_percent", c.synth_drop_percent},
        {"scenario", c.scenario ? synth::scenario_to_json(*c.scenario) : json()}}},
  };
  return j;
}

std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string file_digest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path.string() + "'");
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof(buf));
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ULL;
    }
  }
  char out[17];
  std::snprintf(out, sizeof(out), "%016llx", static_cast<unsigned long long>(h));
  return out;
}

}  // namespace mobility
