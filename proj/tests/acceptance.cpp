// Acceptance runner: one PASS/FAIL/SKIP line per criterion, nonzero exit on any FAIL.
//
// Dataset criteria need YJMOB_DATA (trajectory CSV) and, for the POI table,
// YJMOB_POI. Without them they print SKIP.

#include "test_support.hpp"

#include "mobility/cohort.hpp"
#include "mobility/config.hpp"
#include "mobility/distribution_fit.hpp"
#include "mobility/entropy.hpp"
#include "mobility/hypothesis_tests.hpp"
#include "mobility/onn.hpp"
#include "mobility/reports.hpp"
#include "mobility/synth.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <sstream>
#include <thread>

using namespace mobility;
namespace fs = std::filesystem;

namespace {

enum class Status { Pass, Fail, Skip };

struct Outcome {
  Status status = Status::Pass;
  std::string detail;
};

/// Collects failed sub-checks so one criterion reports every miss at once.
class Checks {
 public:
  void expect(bool ok, const std::string& what) {
    ++count_;
    if (!ok && failures_.size() < 8) failures_.push_back(what);
    failed_ += !ok;
  }
  void note(const std::string& s) { notes_ += (notes_.empty() ? "" : "; ") + s; }

  [[nodiscard]] Outcome outcome() const {
    std::ostringstream os;
    os << notes_;
    if (failed_) {
      os << (notes_.empty() ? "" : "; ") << failed_ << "/" << count_ << " checks failed:";
      for (const auto& f : failures_) os << " [" << f << "]";
    }
    return {failed_ ? Status::Fail : Status::Pass, os.str()};
  }
  [[nodiscard]] std::size_t count() const { return count_; }

 private:
  std::size_t count_ = 0, failed_ = 0;
  std::vector<std::string> failures_;
  std::string notes_;
};

std::string fmt(double v, int precision = 4) {
  std::ostringstream os;
  os.precision(precision);
  os << v;
  return os.str();
}

bool within(double v, double target, double tol) { return std::abs(v - target) <= tol; }

// ---------------------------------------------------------------------------
// Dataset-dependent criteria

struct Dataset {
  TrajectoryStore store;
  std::optional<PoiGrid> poi;
  std::vector<std::optional<HomeLocation>> homes;
  std::map<std::string, GyrationTable> gyration;
  std::map<std::string, std::vector<ClassificationRecord>> classes;
  std::map<std::string, PeriodSpec> periods;
};

std::unique_ptr<Dataset> load_dataset(int threads) {
  const char* path = std::getenv("YJMOB_DATA");
  if (!path || !*path) return nullptr;
  auto ds = std::make_unique<Dataset>();
  ds->store = ingest_csv(path);
  if (const char* poi = std::getenv("YJMOB_POI"); poi && *poi) ds->poi = load_poi_csv(poi);
  ds->homes = infer_homes(ds->store, {}, threads);
  AnalysisOptions opts;
  opts.threads = threads;
  for (const auto& p : {normal_period(), emergency_period()}) {
    ds->periods[p.name] = p;
    const auto view = select_period(ds->store, p);
    ds->gyration[p.name] = compute_gyration(view, 2, 10, opts);
    ds->classes[p.name] = classify_population(ds->gyration[p.name], 4, opts);
  }
  return ds;
}

std::vector<double> positive(const GyrationTable& t, int k) {
  std::vector<double> out;
  for (const auto& u : t.users) {
    const double v = k == 0 ? u.r_g : t.r_g_k(u, k);
    if (v > 0.0) out.push_back(v);
  }
  return out;
}

Outcome total_fit(const Dataset* ds) {
  if (!ds) return {Status::Skip, "YJMOB_DATA not set"};
  Checks c;
  const std::map<std::string, std::pair<double, double>> target{{"normal", {2.01, 0.70}}, {"emergency", {1.96, 0.72}}};
  for (const auto& [name, t] : target) {
    const auto row = fit_row({"total", positive(ds->gyration.at(name), 0)});
    const auto& p = std::get<LognormalParams>(row.lognormal.params);
    c.note(name + " mu=" + fmt(p.mu) + " sigma=" + fmt(p.sigma));
    c.expect(within(p.mu, t.first, 0.05) && within(p.sigma, t.second, 0.05), name + " (mu, sigma)");
    c.expect(row.r_vs_tpl && *row.r_vs_tpl > 0.0, name + " R vs TPL > 0");
    c.expect(row.r_vs_exp && *row.r_vs_exp > 0.0, name + " R vs Exp > 0");
  }
  return c.outcome();
}

Outcome topk_fits(const Dataset* ds) {
  if (!ds) return {Status::Skip, "YJMOB_DATA not set"};
  const std::map<std::string, std::map<int, std::pair<double, double>>> table{
      {"normal", {{2, {1.34, 0.89}}, {3, {1.33, 0.90}}, {4, {1.36, 0.89}}, {5, {1.40, 0.90}}}},
      {"emergency", {{2, {1.34, 0.88}}, {3, {1.37, 0.89}}, {4, {1.42, 0.88}}, {5, {1.47, 0.87}}}}};
  Checks c;
  for (const auto& [name, rows] : table)
    for (const auto& [k, t] : rows) {
      const auto fit = fit_mle(positive(ds->gyration.at(name), k), Family::Lognormal);
      const auto& p = std::get<LognormalParams>(fit.params);
      c.expect(within(p.mu, t.first, 0.05) && within(p.sigma, t.second, 0.05),
               name + " r" + std::to_string(k) + " = (" + fmt(p.mu) + ", " + fmt(p.sigma) + ")");
    }
  return c.outcome();
}

Outcome crossover(const Dataset* ds, int threads) {
  if (!ds) return {Status::Skip, "YJMOB_DATA not set"};
  AnalysisOptions opts;
  opts.threads = threads;
  Checks c;
  auto k_of = [&](int start, int end) {
    const auto r = window_sweep(ds->store, {make_period("w", start, end)}, 2, 10, opts);
    return r.front().crossover;
  };
  const std::vector<std::tuple<std::string, int, int, int>> cases{
      {"normal 14d", 43, 56, 4}, {"emergency 14d", 60, 73, 3}, {"4 weeks", 29, 56, 5},
      {"6 weeks", 15, 56, 6},    {"8 weeks", 1, 56, 6}};
  for (const auto& [name, s, e, want] : cases) {
    const auto k = k_of(s, e);
    const std::string got = k ? std::to_string(*k) : "none";
    c.note(name + " k=" + got);
    c.expect(k == want, name + " expected " + std::to_string(want));
  }
  return c.outcome();
}

Outcome transitions(const Dataset* ds) {
  if (!ds) return {Status::Skip, "YJMOB_DATA not set"};
  const auto m = transition_matrix(ds->classes.at("normal"), ds->classes.at("emergency"));
  Checks c;
  const double re = m.row_share(TransitionGroup::RE), er = m.row_share(TransitionGroup::ER);
  c.note("R->E " + fmt(re) + "% E->R " + fmt(er) + "%");
  c.expect(within(re, 36.27, 3.0), "R->E within 3 pp of 36.27");
  c.expect(within(er, 49.13, 3.0), "E->R within 3 pp of 49.13");
  return c.outcome();
}

Outcome class_tests(const Dataset* ds, int threads) {
  if (!ds) return {Status::Skip, "YJMOB_DATA not set"};
  AnalysisOptions opts;
  opts.threads = threads;
  Checks c;
  for (const auto& [name, spec] : ds->periods) {
    const auto view = select_period(ds->store, spec);
    const auto& recs = ds->classes.at(name);
    auto check = [&](const GroupComparison& g, const std::string& metric) {
      c.expect(g.ks && g.ks->p_value < 0.01, name + " " + metric + " KS p=" + (g.ks ? fmt(g.ks->p_value) : "n/a"));
      c.expect(g.mwu && g.mwu->p_value < 0.01, name + " " + metric + " MWU p=" + (g.mwu ? fmt(g.mwu->p_value) : "n/a"));
    };
    check(compare_daily_metric(view, DailyMetric::MaxDistance, recs, ds->homes, opts), "max distance");
    check(compare_daily_metric(view, DailyMetric::NonHomeDwelling, recs, ds->homes, opts), "dwelling");
    check(entropy_by_class(compute_entropies(view, threads), recs).samples, "entropy");
  }
  return c.outcome();
}

Outcome poi_table(const Dataset* ds) {
  if (!ds) return {Status::Skip, "YJMOB_DATA not set"};
  if (!ds->poi) return {Status::Skip, "YJMOB_POI not set"};
  const auto grouping = transition_grouping(ds->store, ds->classes.at("normal"), ds->classes.at("emergency"));
  const auto view = select_period(ds->store, ds->periods.at("normal"));
  auto rr = [&](const std::vector<GroupPoiStat>& stats) {
    for (const auto& s : stats)
      if (s.group == "R-R") return s.mean;
    return std::nan("");
  };
  Checks c;
  const double weekday = rr(poi_onn_stats(view, grouping, ds->homes, *ds->poi, DaytypeSplit::Weekday));
  const double holiday = rr(poi_onn_stats(view, grouping, ds->homes, *ds->poi, DaytypeSplit::WeekendHoliday));
  c.expect(within(weekday, 108.03, 0.1 * 108.03), "R-R weekday normal = " + fmt(weekday));
  c.expect(within(holiday, 95.28, 0.1 * 95.28), "R-R holiday normal = " + fmt(holiday));
  for (const auto& s : home_poi_by_group(grouping, ds->homes, *ds->poi))
    c.expect(within(s.mean, 61.0, 6.1), s.group + " home neighborhood = " + fmt(s.mean));
  return c.outcome();
}

// ---------------------------------------------------------------------------
// Runtime on a synthetic population of the dataset's size

Outcome runtime(const fs::path& work, std::size_t users, int threads) {
  auto spec = synth::four_group_scenario(20240101, users / 4);
  spec.drop_percent = 60;  // about 1,440 records per user, denser than the real data
  spec.detailed_truth = false;
  const fs::path data = work / "runtime_data";
  fs::create_directories(data);
  const auto gen_start = std::chrono::steady_clock::now();
  {
    const auto pop = synth::generate(spec);
    synth::write_population(spec, pop, data);
  }
  std::ofstream(data / "poi.csv", std::ios::binary) << synth::poi_csv(spec.seed);
  const double gen_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - gen_start).count();

  RunConfig cfg;
  cfg.data = data / "trajectories.csv";
  cfg.poi = data / "poi.csv";
  cfg.out = work / "runtime_out";
  cfg.threads = threads;
  std::ostringstream log;
  const auto start = std::chrono::steady_clock::now();
  const int rc = run_command("all", cfg, log);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const auto m = nlohmann::json::parse(testing::read_file(cfg.out / "manifest_all.json"));
  const std::size_t records = m["ingest"]["kept"].get<std::size_t>();
  fs::remove_all(data);
  Checks c;
  c.note(std::to_string(users) + " users, " + std::to_string(records) + " records, 'all' took " + fmt(secs, 3) +
         " s on " + std::to_string(threads) + " thread(s) (generation " + fmt(gen_s, 3) + " s)");
  c.expect(rc == 0, "exit code " + std::to_string(rc));
  c.expect(secs <= 60.0, "runtime <= 60 s");
  return c.outcome();
}

// ---------------------------------------------------------------------------
// Dataset-independent criteria

Outcome brute_force() {
  std::mt19937_64 rng(1000);
  std::vector<ObservationRecord> recs;
  std::vector<std::map<CellId, int>> hists(1000);
  for (Uid u = 0; u < 1000; ++u) {
    const int cells = 1 + int(rng() % 12);
    const int spread = 1 + int(rng() % 80);
    std::vector<CellId> pool;
    for (int i = 0; i < cells; ++i)
      pool.push_back(testing::cell(60 + int(rng() % std::uint64_t(spread)), 60 + int(rng() % std::uint64_t(spread))));
    const int n = 1 + int(rng() % 150);
    for (int i = 0; i < n; ++i) {
      // Skewed draw so ranks and ties both occur.
      const CellId c = pool[std::min(rng() % pool.size(), rng() % pool.size())];
      const int slot = i;  // one record per slot, spread over the period
      recs.push_back({u + 1, 43 + slot / 48, slot % 48, c});
      ++hists[u][c];
    }
  }
  const auto store = TrajectoryStore::from_records(recs);
  const auto view = select_period(store, normal_period());
  const auto table = compute_gyration(view, 2, 10);
  Checks c;
  c.expect(table.users.size() == 1000, "all users present");
  for (std::size_t i = 0; i < table.users.size(); ++i) {
    const auto& u = table.users[i];
    const auto& h = hists[u.uid - 1];
    const double rg = testing::pairwise_gyration(testing::top_cells(h, 0), kDefaultCellKm);
    c.expect(testing::close_rel(u.r_g, rg, 1e-12) || std::abs(u.r_g - rg) <= 1e-12, "uid " + std::to_string(u.uid) + " r_g");
    for (int k = 2; k <= 10; ++k) {
      const double rk = testing::pairwise_gyration(testing::top_cells(h, k), kDefaultCellKm);
      c.expect(std::abs(table.r_g_k(u, k) - rk) <= 1e-12 * std::max(1.0, rk), "uid " + std::to_string(u.uid) + " k=" + std::to_string(k));
    }
    for (int k : {2, 4, 7}) {
      const auto recs_k = classify_population(table, k);
      const double rk = testing::pairwise_gyration(testing::top_cells(h, k), kDefaultCellKm);
      const double sk = rg == 0.0 ? 1.0 : rk / rg;
      c.expect(std::abs(recs_k[i].s_k - sk) <= 1e-12 * std::max(1.0, sk), "S_k");
      c.expect(recs_k[i].label == (sk >= 0.5 ? Label::Returner : Label::Explorer), "label");
    }
  }
  c.note(std::to_string(c.count()) + " comparisons");
  return c.outcome();
}

Outcome fitter_recovery() {
  constexpr std::size_t n = 200000;
  Checks c;
  const auto ln_s = synth::gen_raw_samples(LognormalParams{2.01, 0.70, 0.0}, n, 11);
  const auto ex_s = synth::gen_raw_samples(ExponentialParams{0.5, 1.0}, n, 12);
  const auto tp_s = synth::gen_raw_samples(TruncPowerLawParams{1.5, 0.1, 1.0}, n, 13);

  const auto ln = fit_mle(ln_s, Family::Lognormal);
  const auto& lp = std::get<LognormalParams>(ln.params);
  c.note("lognormal (" + fmt(lp.mu) + ", " + fmt(lp.sigma) + ")");
  c.expect(within(lp.mu, 2.01, 0.01) && within(lp.sigma, 0.70, 0.01), "lognormal recovery");

  const auto ex = fit_mle(ex_s, Family::Exponential, 1.0);
  const double lam = std::get<ExponentialParams>(ex.params).lambda;
  c.note("exponential " + fmt(lam));
  c.expect(within(lam, 0.5, 0.01), "exponential recovery");

  const auto tp = fit_mle(tp_s, Family::TruncatedPowerLaw, 1.0);
  const auto& tpp = std::get<TruncPowerLawParams>(tp.params);
  c.note("tpl (" + fmt(tpp.alpha) + ", " + fmt(tpp.lambda) + ")");
  c.expect(within(tpp.alpha, 1.5, 0.05) && within(tpp.lambda, 0.1, 0.05), "tpl recovery");

  // Each planted family must beat its rivals on its own sample. Pairs whose
  // rival fit sits on a parameter bracket edge are not comparable and are
  // listed instead: on lognormal data with x_min at the sample minimum the
  // power-law exponent collapses to its lower bound, and on exponential data
  // the truncated power law nests the planted family.
  auto duel = [&](const std::vector<double>& s, Family planted, Family rival, std::optional<double> x_min) {
    const auto own = fit_mle(s, planted, x_min);
    const auto alt = fit_mle(s, rival, own.x_min);
    const std::string pair = std::string(to_string(planted)) + " vs " + to_string(rival);
    if (!alt.converged) {
      c.note(pair + " not comparable (" + to_string(rival) + " fit at a bracket edge)");
      return;
    }
    const double R = compare_fits(s, own, alt).R;
    c.expect(R > 0.0, pair + " R=" + fmt(R));
  };
  duel(ln_s, Family::Lognormal, Family::Exponential, std::nullopt);
  duel(ln_s, Family::Lognormal, Family::TruncatedPowerLaw, std::nullopt);
  duel(ex_s, Family::Exponential, Family::Lognormal, 1.0);
  duel(tp_s, Family::TruncatedPowerLaw, Family::Lognormal, 1.0);
  duel(tp_s, Family::TruncatedPowerLaw, Family::Exponential, 1.0);
  return c.outcome();
}

Outcome entropy_bounds() {
  Checks c;
  const double constant = real_entropy_lz(std::vector<Symbol>(10000, 3)).bits;
  std::vector<Symbol> alt(10000);
  for (std::size_t i = 0; i < alt.size(); ++i) alt[i] = Symbol(i % 2);
  const double alternating = real_entropy_lz(alt).bits;
  std::mt19937_64 rng(4);
  std::vector<Symbol> iid(100000);
  for (auto& v : iid) v = Symbol(rng() % 4);
  const double uniform = real_entropy_lz(iid).bits;
  c.note("constant " + fmt(constant) + ", alternating " + fmt(alternating) + ", uniform-4 " + fmt(uniform));
  c.expect(constant < 0.01, "constant < 0.01");
  c.expect(alternating < 0.02, "alternating < 0.02");
  c.expect(uniform >= 1.8 && uniform <= 2.2, "uniform-4 in [1.8, 2.2]");
  for (int trial = 0; trial < 2000; ++trial) {
    const int alphabet = 1 + int(rng() % 16);
    std::vector<Symbol> s(2 + rng() % 500);
    for (auto& v : s) v = Symbol(rng() % std::uint64_t(alphabet));
    c.expect(naive_plugin_entropy(s, 1).bits <= std::log2(double(alphabet)) + 1e-12, "plug-in bound");
  }
  return c.outcome();
}

Outcome statistical_oracle() {
  const auto j = nlohmann::json::parse(testing::read_file(testing::data_dir() / "ks_mwu_fixtures.json"));
  Checks c;
  double worst = 0.0;
  for (const auto& f : j["fixtures"]) {
    const std::vector<double> a = f["a"], b = f["b"];
    const std::string name = f["name"];
    const auto ks = ks_two_sample(a, b);
    const auto mw = mann_whitney_u(a, b);
    const double dk = std::abs(ks.p_value - f["ks_p"].get<double>());
    const double dm = std::abs(mw.p_value - f["mwu_p"].get<double>());
    worst = std::max({worst, dk, dm});
    c.expect(a.size() >= 50 && b.size() >= 50, name + " n >= 50");
    c.expect(std::abs(ks.statistic - f["ks_D"].get<double>()) <= 1e-12, name + " D");
    c.expect(dk <= 1e-6, name + " KS p");
    c.expect(mw.statistic == f["mwu_U"].get<double>(), name + " U");
    c.expect(dm <= 1e-6, name + " MWU p");
  }
  c.note(std::to_string(j["fixtures"].size()) + " fixtures, max |dp| = " + fmt(worst, 3));
  return c.outcome();
}

/// Sidecar closure on a detailed scenario plus randomized invariants.
Outcome closure_and_properties() {
  Checks c;
  std::size_t cases = 0;

  const auto spec = synth::four_group_scenario(99, 50);
  const auto pop = synth::generate(spec);
  const auto store = TrajectoryStore::from_records(pop.records);
  const auto homes = infer_homes(store);
  std::map<std::string, std::vector<ClassificationRecord>> classes;
  for (const auto* p : {&spec.normal, &spec.emergency}) {
    const auto view = select_period(store, *p);
    classes[p->name] = classify_view(view, spec.k);
    for (std::size_t i = 0; i < pop.truth.size(); ++i)
      c.expect(classes[p->name][i].label == pop.truth[i].periods.at(p->name).label, "planted label");
    for (auto label : {Label::Returner, Label::Explorer}) {
      const auto grid = spatial_grid(view, GridStatistic::StopsPerPerson, classes[p->name], homes, label, 1);
      Eigen::ArrayXXd stops = Eigen::ArrayXXd::Zero(kGridSize, kGridSize);
      std::size_t members = 0;
      for (const auto& t : pop.truth) {
        if (t.periods.at(p->name).label != label) continue;
        ++members;
        for (const auto& [cell, s] : t.periods.at(p->name).stays) stops(cell.x - 1, cell.y - 1) += s.first;
      }
      for (int x = 0; x < kGridSize; ++x)
        for (int y = 0; y < kGridSize; ++y)
          if (stops(x, y) > 0)
            c.expect(std::abs(grid.value(x, y) - stops(x, y) / double(members)) <= 1e-12, "stops grid cell");
      ++cases;
    }
  }
  const auto m = transition_matrix(classes.at("normal"), classes.at("emergency"));
  for (auto g : kTransitionGroups) c.expect(m.count(g) == 50, std::string("transition group ") + to_string(g));
  for (const auto& t : pop.truth) {
    const std::size_t u = store.find(t.uid);
    c.expect(homes[u] && homes[u]->cell == t.home, "home");
    const auto nbhd = neighborhood(t.home, spec.onn_radius);
    for (const auto& d : t.days) {
      const auto om = onn_metrics(records_on_day(store.records(u), d.day), nbhd, spec.cell_km);
      c.expect(om.minutes == d.onn_minutes && std::abs(om.km - d.onn_km) <= 1e-12, "ONN day");
      ++cases;
    }
  }

  std::mt19937_64 rng(2718);
  // Scale equivariance and k-exhaustion on random users.
  for (int trial = 0; trial < 4000; ++trial, ++cases) {
    std::vector<Ping> r;
    const int n = 1 + int(rng() % 80), spread = 1 + int(rng() % 100);
    for (int i = 0; i < n; ++i)
      r.push_back(testing::ping(i / 48, i % 48, 1 + int(rng() % std::uint64_t(spread)), 1 + int(rng() % std::uint64_t(spread))));
    const auto h = build_visit_histogram(r);
    const double scale = 0.1 + double(rng() % 100) / 10.0;
    c.expect(testing::close_rel(radius_of_gyration(h, scale), scale / 0.5 * radius_of_gyration(h, 0.5), 1e-12), "scale r_g");
    const int k = 2 + int(rng() % 8);
    c.expect(testing::close_rel(k_radius_of_gyration(h, k, scale), scale / 0.5 * k_radius_of_gyration(h, k, 0.5), 1e-12), "scale r_g_k");
    if (h.distinct() <= std::size_t(k)) c.expect(k_radius_of_gyration(h, k) == radius_of_gyration(h), "k-exhaustion");
  }
  // Partition sums of transition matrices.
  for (int trial = 0; trial < 3000; ++trial, ++cases) {
    std::vector<ClassificationRecord> a, b;
    for (Uid u = 1; u <= 30; ++u) {
      ClassificationRecord r;
      r.uid = u;
      r.k = 4;
      if (rng() % 4) { r.label = rng() % 2 ? Label::Returner : Label::Explorer; a.push_back(r); }
      if (rng() % 4) { r.label = rng() % 2 ? Label::Returner : Label::Explorer; b.push_back(r); }
    }
    const auto tm = transition_matrix(a, b);
    std::size_t sum = 0;
    double share = 0.0;
    for (auto g : kTransitionGroups) {
      sum += tm.count(g);
      share += tm.share(g);
    }
    c.expect(sum == tm.total && tm.total + tm.only_first.size() == a.size() &&
                 tm.total + tm.only_second.size() == b.size(),
             "transition partition");
    if (tm.total) c.expect(std::abs(share - 100.0) <= 1e-9, "transition shares");
  }
  // Stay conservation.
  for (int trial = 0; trial < 2500; ++trial, ++cases) {
    std::vector<Ping> r;
    for (int d = 0; d < 2; ++d)
      for (int t = 0; t < 48; ++t)
        if (rng() % 3) r.push_back(testing::ping(d, t, 1 + int(rng() % 3), 1));
    int minutes = 0;
    for (const auto& s : segment_stays(r, int(rng() % 3))) minutes += s.duration_minutes();
    c.expect(minutes == int(r.size()) * kSlotMinutes, "stay conservation");
  }
  // Grid mass conservation.
  for (int trial = 0; trial < 500; ++trial, ++cases) {
    std::vector<ObservationRecord> rs;
    std::vector<ClassificationRecord> labels;
    for (Uid u = 1; u <= 8; ++u) {
      for (int i = 0; i < 30; ++i)
        rs.push_back({u, 43 + int(rng() % 15), int(rng() % 48), testing::cell(90 + int(rng() % 6), 90 + int(rng() % 6))});
      ClassificationRecord r;
      r.uid = u;
      r.label = rng() % 2 ? Label::Returner : Label::Explorer;
      labels.push_back(r);
    }
    const auto st = TrajectoryStore::from_records(rs);
    const auto view = select_period(st, normal_period());
    const auto hm = infer_homes(st);
    const auto grid = spatial_grid(view, GridStatistic::StopsPerPerson, labels, hm, std::nullopt, 1);
    std::size_t stays = 0;
    for (std::size_t u = 0; u < st.user_count(); ++u) stays += segment_stays(view.records(u)).size();
    double mass = 0.0;
    for (int x = 85; x < 100; ++x)
      for (int y = 85; y < 100; ++y)
        if (grid.users(x, y)) mass += grid.value(x, y) * double(grid.group_size);
    c.expect(std::abs(mass - double(stays)) <= 1e-9 * double(stays), "grid mass");
  }
  c.note(std::to_string(cases) + " generated cases, " + std::to_string(c.count()) + " checks");
  c.expect(cases >= 10000, "at least 10^4 generated cases");
  return c.outcome();
}

}  // namespace

int main(int argc, char** argv) {
  fs::path work = fs::temp_directory_path() / "mobility_acceptance";
  std::size_t runtime_users = 25000;
  for (int i = 1; i + 1 < argc; i += 2) {
    const std::string a = argv[i];
    if (a == "--work-dir") work = argv[i + 1];
    else if (a == "--runtime-users") runtime_users = std::stoul(argv[i + 1]);
  }
  fs::create_directories(work);
  const int threads = int(std::max(1u, std::thread::hardware_concurrency()));

  int failures = 0;
  auto report = [&](const std::string& id, const std::string& name, const std::function<Outcome()>& run) {
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {Status::Fail, std::string("exception: ") + e.what()};
    }
    const char* tag = o.status == Status::Pass ? "PASS" : o.status == Status::Fail ? "FAIL" : "SKIP";
    failures += o.status == Status::Fail;
    std::cout << tag << "  " << id << "  " << name << (o.detail.empty() ? "" : "  -- " + o.detail) << std::endl;
  };

  std::unique_ptr<Dataset> ds;
  try {
    ds = load_dataset(threads);
  } catch (const std::exception& e) {
    std::cout << "FAIL  dataset  could not load YJMOB_DATA: " << e.what() << std::endl;
    ++failures;
  }
  const Dataset* d = ds.get();

  report("AC1a", "total r_g lognormal fit and R signs (dataset)", [&] { return total_fit(d); });
  report("AC1b", "25,000-user pipeline runtime <= 60 s", [&] { return runtime(work, runtime_users, threads); });
  report("AC2", "top-k lognormal fits (dataset)", [&] { return topk_fits(d); });
  report("AC3", "crossover k and window sweep (dataset)", [&] { return crossover(d, threads); });
  report("AC4", "transition shares at k = 4 (dataset)", [&] { return transitions(d); });
  report("AC5", "returner vs explorer KS and MWU p < 0.01 (dataset)", [&] { return class_tests(d, threads); });
  report("AC6", "POI table (dataset)", [&] { return poi_table(d); });
  report("AC7", "brute-force gyration equivalence on 1,000 users", brute_force);
  report("AC8", "fitter recovery at n = 200,000", fitter_recovery);
  report("AC9", "entropy ordering and bounds", entropy_bounds);
  report("AC10", "KS and MWU against reference fixtures", statistical_oracle);
  report("AC11", "synthetic oracle closure and property harness", closure_and_properties);
  return failures ? 1 : 0;
}
