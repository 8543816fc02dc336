#include "mobility/reports.hpp"

#include "mobility/parallel.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <set>

namespace mobility {

std::string format_double(double v) {
  if (std::isnan(v)) return {};
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (v == 0.0) return "0";
  char buf[32];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, p);
}

CsvTable::CsvTable(std::vector<std::string> header) : columns_(header.size()) {
  std::vector<Field> fields(header.begin(), header.end());
  append(fields.data(), fields.data() + fields.size());
  rows_ = 0;
}

void CsvTable::row(std::initializer_list<Field> fields) { append(fields.begin(), fields.end()); }

void CsvTable::row(const std::vector<Field>& fields) { append(fields.data(), fields.data() + fields.size()); }

void CsvTable::append(const Field* begin, const Field* end) {
  if (std::size_t(end - begin) != columns_) throw std::logic_error("CSV row width does not match header");
  for (const Field* f = begin; f != end; ++f) {
    if (f != begin) text_ += ',';
    const auto& s = f->text();
    if (s.find_first_of(",\"\n") == std::string::npos) {
      text_ += s;
    } else {
      text_ += '"';
      for (char c : s) text_ += c == '"' ? std::string("\"\"") : std::string(1, c);
      text_ += '"';
    }
  }
  text_ += '\n';
  ++rows_;
}

ReportSink::ReportSink(std::filesystem::path dir) : dir_(std::move(dir)) {}

void ReportSink::write(const std::string& name, const CsvTable& table) {
  write_text(name, table.text(), table.rows());
}

void ReportSink::write_text(const std::string& name, std::string_view text, std::size_t rows) {
  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);
  std::ofstream out(dir_ / name, std::ios::binary);
  if (!out) throw InputError("cannot write '" + (dir_ / name).string() + "'");
  out.write(text.data(), std::streamsize(text.size()));
  if (!out) throw InputError("failed writing '" + (dir_ / name).string() + "'");
  outputs_.push_back({name, rows, fnv1a_hex(text)});
}

void ReportSink::warn(std::string message) { warnings_.push_back(std::move(message)); }

const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> names{"validate", "metrics",     "classify", "fit",   "fit-daily",
                                              "entropy",  "cohort",      "transitions", "daily", "onn",
                                              "spatial",  "activity",    "synth",    "all"};
  return names;
}

namespace {

using nlohmann::json;

// Lazily computed, shared intermediate results for one run.
class Session {
 public:
  Session(const RunConfig& cfg, ReportSink& sink) : cfg_(cfg), sink_(sink) {}

  const RunConfig& cfg() const { return cfg_; }
  ReportSink& sink() { return sink_; }
  json& inputs() { return inputs_; }
  const std::optional<IngestReport>& ingest_report() const { return ingest_; }

  const TrajectoryStore& store() {
    if (!store_) {
      if (cfg_.data.empty()) throw InputError("no trajectory file given (use --data or the 'data' config key)");
      if (!std::filesystem::exists(cfg_.data))
        throw InputError("trajectory file '" + cfg_.data.string() + "' does not exist");
      IngestReport rep;
      store_ = std::make_unique<TrajectoryStore>(ingest_csv(cfg_.data, cfg_.dedup, &rep));
      ingest_ = rep;
      add_input("data", cfg_.data);
    }
    return *store_;
  }

  const PeriodView& view(const PeriodSpec& p) {
    auto& slot = views_[p.name];
    if (!slot) {
      slot = std::make_unique<PeriodView>(select_period(store(), p));
      if (slot->empty()) sink_.warn("period '" + p.name + "' has no records");
    }
    return *slot;
  }

  const std::vector<std::optional<HomeLocation>>& homes() {
    if (!homes_) {
      homes_ = infer_homes(store(), cfg_.home, cfg_.threads);
      std::size_t missing = 0, fallback = 0;
      for (const auto& h : *homes_) {
        if (!h) ++missing;
        else if (h->fallback) ++fallback;
      }
      if (missing) sink_.warn(std::to_string(missing) + " users have no records on usual days and no home");
      if (fallback) sink_.warn(std::to_string(fallback) + " users have no night records; home is their most visited usual-day cell");
    }
    return *homes_;
  }

  const GyrationTable& gyration(const PeriodSpec& p) {
    auto& slot = gyration_[p.name];
    if (!slot) {
      int lo = std::min(cfg_.k_min, cfg_.k), hi = std::max(cfg_.k_max, cfg_.k);
      for (int t : cfg_.fit_topk) {
        lo = std::min(lo, t);
        hi = std::max(hi, t);
      }
      slot = std::make_unique<GyrationTable>(compute_gyration(view(p), lo, hi, cfg_.analysis()));
    }
    return *slot;
  }

  const std::vector<ClassificationRecord>& classes(const PeriodSpec& p) {
    auto& slot = classes_[p.name];
    if (!slot)
      slot = std::make_unique<std::vector<ClassificationRecord>>(
          classify_population(gyration(p), cfg_.k, cfg_.analysis()));
    return *slot;
  }

  const PoiGrid* poi() {
    if (cfg_.poi.empty()) return nullptr;
    if (!poi_) {
      poi_ = std::make_unique<PoiGrid>(load_poi_csv(cfg_.poi));
      add_input("poi", cfg_.poi);
      if (!poi_->complete())
        sink_.warn("POI file covers " + std::to_string(poi_->covered_cells) +
                   " of 40000 cells; missing cells read as 0");
    }
    return poi_.get();
  }

  /// Transition grouping from the first two configured periods, or nullopt with one period.
  std::optional<Grouping> transition_groups() {
    if (cfg_.periods.size() < 2) return std::nullopt;
    return transition_grouping(store(), classes(cfg_.periods[0]), classes(cfg_.periods[1]));
  }

 private:
  void add_input(const char* role, const std::filesystem::path& path) {
    inputs_.push_back({{"role", role},
                       {"path", path.string()},
                       {"bytes", std::filesystem::file_size(path)},
                       {"fnv1a64", file_digest(path)}});
  }

  const RunConfig& cfg_;
  ReportSink& sink_;
  json inputs_ = json::array();
  std::unique_ptr<TrajectoryStore> store_;
  std::optional<IngestReport> ingest_;
  std::map<std::string, std::unique_ptr<PeriodView>> views_;
  std::optional<std::vector<std::optional<HomeLocation>>> homes_;
  std::map<std::string, std::unique_ptr<GyrationTable>> gyration_;
  std::map<std::string, std::unique_ptr<std::vector<ClassificationRecord>>> classes_;
  std::unique_ptr<PoiGrid> poi_;
};

Field opt_int(std::optional<int> v) { return v ? Field(*v) : Field(""); }

std::string bin_label(const Bins& bins, std::size_t b) {
  return b == bins.size() ? std::string("no_data") : bins.label(b);
}

// ---------------------------------------------------------------------------

void cmd_validate(Session& s) {
  s.store();
  const auto& rep = *s.ingest_report();
  CsvTable t({"read", "kept", "dropped", "distinct_users", "dedup_policy"});
  t.row({rep.read, rep.kept, rep.dropped, rep.distinct_users, to_string(s.cfg().dedup)});
  s.sink().write("ingest_report.csv", t);

  CsvTable cov({"period", "start_day", "end_day", "days", "present_users", "absent_users", "records"});
  for (const auto& p : s.cfg().periods) {
    const auto& v = s.view(p);
    cov.row({p.name, p.start_day, p.end_day, p.length(), v.present().size(), v.absent().size(), v.record_count()});
  }
  s.sink().write("period_coverage.csv", cov);
}

void cmd_metrics(Session& s) {
  const auto& store = s.store();
  const auto& homes = s.homes();
  CsvTable t({"uid", "period", "r_g_km", "r_g_k_km", "s_k", "label", "home_x", "home_y"});
  for (const auto& p : s.cfg().selected_periods())
    for (const auto& r : s.classes(p)) {
      const auto& h = homes[store.find(r.uid)];
      t.row({r.uid, r.period, r.r_g, r.r_g_k, r.s_k, to_string(r.label),
             opt_int(h ? std::optional<int>(h->cell.x) : std::nullopt),
             opt_int(h ? std::optional<int>(h->cell.y) : std::nullopt)});
    }
  s.sink().write("user_metrics.csv", t);

  CsvTable ht({"uid", "home_x", "home_y", "night_visit_count", "fallback"});
  for (std::size_t u = 0; u < store.user_count(); ++u) {
    const auto& h = homes[u];
    if (h)
      ht.row({store.uid(u), h->cell.x, h->cell.y, h->night_visit_count, h->fallback});
    else
      ht.row({store.uid(u), "", "", "", ""});
  }
  s.sink().write("homes.csv", ht);
}

void cmd_classify(Session& s) {
  CsvTable t({"uid", "period", "k", "r_g_km", "r_g_k_km", "s_k", "label"});
  CsvTable absent({"uid", "period"});
  for (const auto& p : s.cfg().selected_periods()) {
    for (const auto& r : s.classes(p)) t.row({r.uid, r.period, r.k, r.r_g, r.r_g_k, r.s_k, to_string(r.label)});
    for (Uid u : s.view(p).absent()) absent.row({u, p.name});
  }
  s.sink().write("classifications.csv", t);
  s.sink().write("absent_users.csv", absent);
}

const std::vector<std::string> kFitHeader{"period", "family", "k_or_total", "mu", "sigma", "lambda", "alpha",
                                          "x_min", "loglik", "n", "R_vs_tpl", "R_vs_exp", "converged"};

std::vector<std::vector<Field>> fit_fields(const FitTableRow& row) {
  std::vector<std::vector<Field>> out;
  for (const FitResult* f : {&row.lognormal, &row.exponential, &row.trunc_power_law}) {
    std::optional<double> mu, sigma, lambda, alpha, r_tpl, r_exp;
    if (auto* p = std::get_if<LognormalParams>(&f->params)) {
      mu = p->mu;
      sigma = p->sigma;
      r_tpl = row.r_vs_tpl;
      r_exp = row.r_vs_exp;
    } else if (auto* p = std::get_if<ExponentialParams>(&f->params)) {
      lambda = p->lambda;
    } else if (auto* p = std::get_if<TruncPowerLawParams>(&f->params)) {
      lambda = p->lambda;
      alpha = p->alpha;
    }
    out.push_back({to_string(f->family), mu, sigma, lambda, alpha, f->x_min, f->log_likelihood, f->n, r_tpl,
                   r_exp, f->converged});
  }
  return out;
}

FitTableRow fit_or_throw(const LabeledSample& sample, const std::string& context, const RunConfig& cfg) {
  try {
    return fit_row(sample, cfg.x_min, cfg.fit);
  } catch (const ComputationError& e) {
    throw ComputationError(context + ": " + e.what());
  }
}

void cmd_fit(Session& s) {
  CsvTable total(kFitHeader), topk(kFitHeader);
  for (const auto& p : s.cfg().selected_periods()) {
    const auto& g = s.gyration(p);
    LabeledSample rg{"total", {}};
    for (const auto& u : g.users) rg.values.push_back(u.r_g);
    const auto row = fit_or_throw(rg, "period '" + p.name + "', total r_g", s.cfg());
    for (auto& f : fit_fields(row)) {
      f.insert(f.begin(), Field(p.name));
      f.insert(f.begin() + 2, Field("total"));
      total.row(f);
    }
    for (int k : s.cfg().fit_topk) {
      LabeledSample sk{std::to_string(k), {}};
      for (const auto& u : g.users) sk.values.push_back(g.r_g_k(u, k));
      const auto krow = fit_or_throw(sk, "period '" + p.name + "', r_g^(" + std::to_string(k) + ")", s.cfg());
      for (auto& f : fit_fields(krow)) {
        f.insert(f.begin(), Field(p.name));
        f.insert(f.begin() + 2, Field(k));
        topk.row(f);
      }
    }
    for (const FitResult* f : {&row.lognormal, &row.exponential, &row.trunc_power_law})
      if (!f->converged)
        s.sink().warn("period '" + p.name + "': " + to_string(f->family) + " fit of total r_g did not converge");
  }
  s.sink().write("si_table1_fits.csv", total);
  s.sink().write("si_table3_topk_fits.csv", topk);
}

void cmd_fit_daily(Session& s) {
  CsvTable t({"period", "day", "day_type", "status", "sample_size", "family", "mu", "sigma", "lambda", "alpha",
              "x_min", "loglik", "n", "R_vs_tpl", "R_vs_exp", "converged"});
  for (const auto& p : s.cfg().selected_periods()) {
    for (const auto& row : daily_fit_table(s.view(p), s.cfg().x_min, s.cfg().fit, s.cfg().analysis())) {
      std::vector<Field> head{p.name, row.period_day, to_string(p.day_type(row.period_day)), row.status,
                              row.sample_size};
      if (!row.fit) {
        auto f = head;
        for (int i = 0; i < 11; ++i) f.emplace_back("");
        t.row(f);
        s.sink().warn("period '" + p.name + "' day " + std::to_string(row.period_day) + ": " + row.status);
        continue;
      }
      for (auto& fields : fit_fields(*row.fit)) {
        auto f = head;
        f.insert(f.end(), fields.begin(), fields.end());
        t.row(f);
      }
    }
  }
  s.sink().write("si_table2_daily_fits.csv", t);
}

const std::vector<std::string> kTestHeader{"comparison_name", "period", "metric", "ks_D",  "ks_p",       "mwu_U",
                                           "mwu_p",           "n1",     "n2",     "significant_0_01", "status"};

void test_row(CsvTable& t, const std::string& name, const std::string& period, const std::string& metric,
              const GroupComparison& c) {
  if (!c.ks || !c.mwu) {
    t.row({name, period, metric, "", "", "", "", c.returners.size(), c.explorers.size(), "",
           "skipped: a class has fewer than 2 values"});
    return;
  }
  t.row({name, period, metric, c.ks->statistic, c.ks->p_value, c.mwu->statistic, c.mwu->p_value, c.ks->n1,
         c.ks->n2, c.ks->significant() && c.mwu->significant(), c.degenerate ? "degenerate" : "ok"});
}

void cmd_entropy(Session& s) {
  CsvTable t({"uid", "period", "label", "entropy_bits", "n"});
  CsvTable tests(kTestHeader);
  for (const auto& p : s.cfg().selected_periods()) {
    const auto& classes = s.classes(p);
    std::map<Uid, Label> labels;
    for (const auto& r : classes) labels.emplace(r.uid, r.label);
    const auto entropies = compute_entropies(s.view(p), s.cfg().threads);
    for (const auto& e : entropies) {
      const auto recs = s.view(p).records(e.user);
      t.row({e.uid, p.name, to_string(labels.at(e.uid)),
             e.estimate ? Field(e.estimate->bits) : Field(""), recs.size()});
    }
    const auto cmp = entropy_by_class(entropies, classes);
    if (cmp.excluded_short)
      s.sink().warn("period '" + p.name + "': " + std::to_string(cmp.excluded_short) +
                    " users with fewer than 2 records excluded from entropy tests");
    test_row(tests, "returner_vs_explorer", p.name, "entropy_bits", cmp.samples);
  }
  s.sink().write("entropy.csv", t);
  s.sink().write("si_table4_entropy_tests.csv", tests);
}

void cmd_cohort(Session& s) {
  const auto& cfg = s.cfg();
  CsvTable sk({"period", "k", "kind", "bin_lo", "bin_hi", "mass", "n"});
  CsvTable shares({"period", "k", "pct_returners", "pct_explorers", "classified", "absent", "crossover_k"});
  for (const auto& p : cfg.selected_periods()) {
    const auto& g = s.gyration(p);
    for (int k = cfg.k_min; k <= cfg.k_max; ++k) {
      const auto recs = classify_population(g, k, cfg.analysis());
      const auto h = sk_distribution(recs, cfg.sk_bin_width);
      sk.row({p.name, k, "exact_zero", 0.0, 0.0, h.mass_at_zero, h.n});
      for (std::size_t i = 0; i < h.mass.size(); ++i)
        sk.row({p.name, k, "interval", double(i) * h.bin_width, double(i + 1) * h.bin_width, h.mass[i], h.n});
      sk.row({p.name, k, "exact_one", 1.0, 1.0, h.mass_at_one, h.n});
    }
    const auto curve = share_by_k(g, cfg.analysis());
    const auto cross = crossover_k(curve);
    for (const auto& pt : curve.points) {
      if (pt.k < cfg.k_min || pt.k > cfg.k_max) continue;
      shares.row({p.name, pt.k, pt.pct_returners, pt.pct_explorers, pt.classified, curve.absent, opt_int(cross)});
    }
    if (!cross) s.sink().warn("period '" + p.name + "': no crossover in the k range");
  }
  s.sink().write("fig1_sk_distribution.csv", sk);
  s.sink().write("fig2_class_shares.csv", shares);

  // Window sweep anchored on the selected (or first) period.
  const auto base = cfg.selected_periods().front();
  const auto& store = s.store();
  int first_day = kMaxDay, last_day = 0;
  for (std::size_t u = 0; u < store.user_count(); ++u) {
    const auto recs = store.records(u);
    if (recs.empty()) continue;
    first_day = std::min<int>(first_day, recs.front().day);
    last_day = std::max<int>(last_day, recs.back().day);
  }
  std::vector<PeriodSpec> windows;
  for (const auto& w : standard_windows(base)) {
    if (w.start_day < first_day || w.end_day > last_day)
      s.sink().warn("window '" + w.name + "' lies outside the data range; skipped");
    else
      windows.push_back(w);
  }
  CsvTable sweep({"window", "start_day", "end_day", "days", "k", "pct_returners", "pct_explorers", "classified",
                  "crossover_k"});
  for (const auto& r : window_sweep(store, windows, cfg.k_min, cfg.k_max, cfg.analysis()))
    for (const auto& pt : r.curve.points)
      sweep.row({r.window.name, r.window.start_day, r.window.end_day, r.window.length(), pt.k, pt.pct_returners,
                 pt.pct_explorers, pt.classified, opt_int(r.crossover)});
  s.sink().write("fig3_window_sweep.csv", sweep);
}

void require_two_periods(const RunConfig& cfg, const char* what) {
  if (cfg.periods.size() < 2)
    throw InputError(std::string(what) + " needs two configured periods (key 'periods')");
}

void cmd_transitions(Session& s) {
  const auto& cfg = s.cfg();
  require_two_periods(cfg, "transitions");
  const auto& a = cfg.periods[0];
  const auto& b = cfg.periods[1];
  const auto m = transition_matrix(s.classes(a), s.classes(b));
  CsvTable t({"k", "from_period", "to_period", "group", "count", "share_pct", "row_share_pct", "total"});
  for (auto g : kTransitionGroups)
    t.row({m.k, a.name, b.name, to_string(g), m.count(g), m.share(g), m.row_share(g), m.total});
  s.sink().write("fig7_transitions.csv", t);

  CsvTable cov({"uid", "classified_in"});
  for (Uid u : m.only_first) cov.row({u, a.name + "_only"});
  for (Uid u : m.only_second) cov.row({u, b.name + "_only"});
  s.sink().write("transitions_coverage.csv", cov);
  if (!m.only_first.empty() || !m.only_second.empty())
    s.sink().warn(std::to_string(m.only_first.size() + m.only_second.size()) +
                  " users classified in only one period are excluded from transitions");

  const auto groups = *s.transition_groups();
  const auto& store = s.store();
  CsvTable ug({"uid", "group"});
  for (std::size_t u = 0; u < store.user_count(); ++u)
    if (groups.of_user[u]) ug.row({store.uid(u), groups.names[std::size_t(*groups.of_user[u])]});
  s.sink().write("transition_groups.csv", ug);
}

void distribution_rows(CsvTable& t, const std::string& period, const PeriodSpec& spec,
                       const BinnedDistribution& d) {
  for (std::size_t di = 0; di < d.days.size(); ++di) {
    const auto& panel = d.days[di];
    for (std::size_t g = 0; g < d.groups.size(); ++g)
      for (std::size_t b = 0; b <= d.bins.size(); ++b)
        t.row({period, panel.period_day, to_string(spec.day_type(panel.period_day)), d.groups[g],
               bin_label(d.bins, b), panel.counts[g][b], d.share(di, g, b)});
  }
}

// Period-level aggregate over user-days, per group.
void aggregate_rows(CsvTable& t, const std::string& period, const BinnedDistribution& d) {
  std::vector<std::vector<std::size_t>> sums(d.groups.size(), std::vector<std::size_t>(d.bins.size(), 0));
  std::size_t total = 0;
  for (const auto& panel : d.days)
    for (std::size_t g = 0; g < d.groups.size(); ++g)
      for (std::size_t b = 0; b < d.bins.size(); ++b) {
        sums[g][b] += panel.counts[g][b];
        total += panel.counts[g][b];
      }
  for (std::size_t g = 0; g < d.groups.size(); ++g)
    for (std::size_t b = 0; b < d.bins.size(); ++b)
      t.row({period, to_string(d.metric), d.groups[g], d.bins.label(b), sums[g][b],
             total ? double(sums[g][b]) / double(total) : std::nan("")});
}

void cmd_daily(Session& s) {
  const auto& cfg = s.cfg();
  const auto& store = s.store();
  const auto& homes = s.homes();
  const std::vector<std::string> header{"period", "day", "day_type", "group", "bin", "count", "share"};
  CsvTable fig5(header), fig6(header), fig4({"period", "metric", "group", "bin", "user_days", "share"});
  CsvTable tests(kTestHeader);
  for (const auto& p : cfg.selected_periods()) {
    const auto& view = s.view(p);
    const auto grouping = class_grouping(store, s.classes(p));
    const auto md = daily_group_distribution(view, DailyMetric::MaxDistance, grouping, homes, cfg.max_distance_bins,
                                             cfg.analysis());
    const auto dw = daily_group_distribution(view, DailyMetric::NonHomeDwelling, grouping, homes, cfg.dwelling_bins,
                                             cfg.analysis());
    distribution_rows(fig5, p.name, p, md);
    distribution_rows(fig6, p.name, p, dw);
    aggregate_rows(fig4, p.name, md);
    aggregate_rows(fig4, p.name, dw);
    for (auto metric : {DailyMetric::MaxDistance, DailyMetric::NonHomeDwelling})
      test_row(tests, "returner_vs_explorer", p.name, to_string(metric),
               compare_daily_metric(view, metric, s.classes(p), homes, cfg.analysis()));
  }
  s.sink().write("fig4_period_distributions.csv", fig4);
  s.sink().write("fig5_max_distance_daily.csv", fig5);
  s.sink().write("fig6_dwelling_daily.csv", fig6);
  s.sink().write("table1_tests.csv", tests);

  if (auto groups = s.transition_groups()) {
    CsvTable g6(header), g7(header);
    for (const auto& p : {cfg.periods[0], cfg.periods[1]}) {
      const auto& view = s.view(p);
      distribution_rows(g6, p.name, p,
                        daily_group_distribution(view, DailyMetric::MaxDistance, *groups, homes,
                                                 cfg.max_distance_bins, cfg.analysis()));
      distribution_rows(g7, p.name, p,
                        daily_group_distribution(view, DailyMetric::NonHomeDwelling, *groups, homes,
                                                 cfg.dwelling_bins, cfg.analysis()));
    }
    s.sink().write("si_fig6_max_distance_groups.csv", g6);
    s.sink().write("si_fig7_dwelling_groups.csv", g7);
  } else {
    s.sink().warn("one period configured; four-group daily panels skipped");
  }
}

void cmd_onn(Session& s) {
  const auto& cfg = s.cfg();
  const auto& store = s.store();
  const auto& homes = s.homes();
  const auto opts = cfg.onn();
  const std::vector<std::string> header{"period", "daytype", "bin", "returners", "explorers", "pct_returners",
                                        "pct_explorers"};
  CsvTable time(header), dist(header);
  CsvTable daily({"uid", "period", "day", "day_type", "onn_time_min", "onn_distance_km"});
  for (const auto& p : cfg.selected_periods()) {
    const auto& view = s.view(p);
    for (auto split : {DaytypeSplit::Weekday, DaytypeSplit::WeekendHoliday}) {
      for (auto metric : {OnnMetric::Time, OnnMetric::Distance}) {
        const Bins& bins = metric == OnnMetric::Time ? cfg.onn_time_bins : cfg.onn_distance_bins;
        const auto d = onn_group_distribution(view, s.classes(p), homes, split, metric, bins, opts);
        auto& t = metric == OnnMetric::Time ? time : dist;
        for (std::size_t b = 0; b < bins.size(); ++b) {
          const auto& c = d.composition[b];
          t.row({p.name, to_string(split), bins.label(b), c.returners, c.explorers, c.pct_returners(),
                 c.pct_explorers()});
        }
      }
    }
    for (std::size_t u : view.present()) {
      if (!homes[u]) continue;
      const auto nbhd = neighborhood(homes[u]->cell, opts.radius);
      for (int d = 1; d <= view.length(); ++d) {
        const auto recs = view.day_records(u, d);
        if (recs.empty()) continue;
        const auto m = onn_metrics(recs, nbhd, opts.cell_km, opts.attribution);
        daily.row({store.uid(u), p.name, d, to_string(p.day_type(d)), m.minutes, m.km});
      }
    }
  }
  s.sink().write("fig10_onn_time.csv", time);
  s.sink().write("fig11_onn_distance.csv", dist);
  s.sink().write("onn_user_daily.csv", daily);

  const PoiGrid* poi = s.poi();
  if (!poi) {
    s.sink().warn("no POI file given (--poi); table2_poi.csv not produced");
    return;
  }
  auto grouping = s.transition_groups();
  if (!grouping) grouping = class_grouping(store, s.classes(cfg.periods[0]));
  std::vector<PoiWeighting> weightings{cfg.poi_weighting};
  if (cfg.poi_report_both)
    weightings.push_back(cfg.poi_weighting == PoiWeighting::PerRecord ? PoiWeighting::DistinctCell
                                                                      : PoiWeighting::PerRecord);
  CsvTable t({"period", "daytype", "group", "statistic", "weighting", "mean_poi", "n"});
  for (const auto& p : cfg.selected_periods())
    for (auto split : {DaytypeSplit::Weekday, DaytypeSplit::WeekendHoliday})
      for (auto w : weightings)
        for (const auto& g : poi_onn_stats(s.view(p), *grouping, homes, *poi, split, w, opts))
          t.row({p.name, to_string(split), g.group, "onn_visit_poi",
                 w == PoiWeighting::PerRecord ? "per_record" : "distinct_cell", g.mean, g.n});
  for (const auto& g : home_poi_by_group(*grouping, homes, *poi, opts.radius))
    t.row({"all", "all", g.group, "home_neighborhood_poi", "cell_mean", g.mean, g.n});
  s.sink().write("table2_poi.csv", t);
}

void write_grid(Session& s, const std::string& name, const SpatialGrid& g) {
  CsvTable t({"x", "y", "value", "user_count", "masked"});
  for (int x = 1; x <= kGridSize; ++x)
    for (int y = 1; y <= kGridSize; ++y) {
      const CellId c{std::int16_t(x), std::int16_t(y)};
      t.row({x, y, g.at(c), g.users(x - 1, y - 1), g.masked(c)});
    }
  s.sink().write(name, t);
}

void cmd_spatial(Session& s) {
  const auto& cfg = s.cfg();
  const auto& homes = s.homes();
  for (const auto& p : cfg.selected_periods()) {
    const auto& view = s.view(p);
    const auto& recs = s.classes(p);
    write_grid(s, "fig9_returner_share_" + p.name + ".csv",
               spatial_grid(view, GridStatistic::ReturnerShareByHome, recs, homes, std::nullopt, cfg.min_users,
                            cfg.bridge_gap_slots));
    for (auto label : {Label::Returner, Label::Explorer}) {
      const std::string suffix = p.name + "_" + to_string(label) + ".csv";
      write_grid(s, "si_fig9_stops_per_person_" + suffix,
                 spatial_grid(view, GridStatistic::StopsPerPerson, recs, homes, label, cfg.min_users,
                              cfg.bridge_gap_slots));
      write_grid(s, "si_fig10_avg_stay_min_" + suffix,
                 spatial_grid(view, GridStatistic::AvgStayMinutes, recs, homes, label, cfg.min_users,
                              cfg.bridge_gap_slots));
    }
  }
}

void cmd_activity(Session& s) {
  const auto counts = daily_activity(s.store(), s.cfg().bridge_gap_slots);
  CsvTable t({"day", "stops"});
  for (std::size_t d = 0; d < counts.size(); ++d) t.row({d, counts[d]});
  s.sink().write("si_fig11_daily_activity.csv", t);
}

void cmd_synth(Session& s) {
  const auto& cfg = s.cfg();
  synth::ScenarioSpec spec;
  if (cfg.scenario) {
    spec = *cfg.scenario;
  } else {
    spec = synth::four_group_scenario(cfg.seed, cfg.synth_users_per_group);
    spec.drop_percent = cfg.synth_drop_percent;
    spec.normal = cfg.periods.size() > 0 ? cfg.periods[0] : normal_period();
    if (cfg.periods.size() > 1) spec.emergency = cfg.periods[1];
    spec.k = cfg.k;
    spec.onn_radius = cfg.radius;
    spec.cell_km = cfg.cell_km;
  }
  const auto pop = synth::generate(spec);
  const auto csv = synth::records_to_csv(pop.records);
  s.sink().write_text("trajectories.csv", csv, pop.records.size());
  s.sink().write_text("ground_truth.json", synth::truth_to_json(spec, pop).dump() + "\n", pop.truth.size());
  s.sink().write_text("poi.csv", synth::poi_csv(spec.seed), std::size_t(kGridSize) * kGridSize);
  s.sink().write_text("scenario.json", synth::scenario_to_json(spec).dump(2) + "\n", spec.groups.size());
}

void cmd_all(Session& s) {
  cmd_validate(s);
  cmd_metrics(s);
  cmd_classify(s);
  cmd_fit(s);
  cmd_fit_daily(s);
  cmd_entropy(s);
  cmd_cohort(s);
  if (s.cfg().periods.size() >= 2) cmd_transitions(s);
  cmd_daily(s);
  cmd_onn(s);
  cmd_spatial(s);
  cmd_activity(s);
}

std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

int run_command(const std::string& subcommand, const RunConfig& cfg, std::ostream& log) {
  static const std::map<std::string, std::function<void(Session&)>> commands{
      {"validate", cmd_validate}, {"metrics", cmd_metrics},         {"classify", cmd_classify},
      {"fit", cmd_fit},           {"fit-daily", cmd_fit_daily},     {"entropy", cmd_entropy},
      {"cohort", cmd_cohort},     {"transitions", cmd_transitions}, {"daily", cmd_daily},
      {"onn", cmd_onn},           {"spatial", cmd_spatial},         {"activity", cmd_activity},
      {"synth", cmd_synth},       {"all", cmd_all}};

  const auto started = utc_now();
  const auto t0 = std::chrono::steady_clock::now();
  ReportSink sink(cfg.out);
  Session session(cfg, sink);
  int code = 0;
  std::string error;
  try {
    auto it = commands.find(subcommand);
    if (it == commands.end()) throw InputError("unknown subcommand '" + subcommand + "'");
    cfg.validate();
    it->second(session);
  } catch (const InputError& e) {
    code = 1;
    error = e.what();
  } catch (const std::filesystem::filesystem_error& e) {
    code = 1;
    error = e.what();
  } catch (const ComputationError& e) {
    code = 2;
    error = e.what();
  } catch (const std::exception& e) {
    code = 2;
    error = std::string("internal error: ") + e.what();
  }

  json outputs = json::array();
  for (const auto& o : sink.outputs()) outputs.push_back({{"file", o.file}, {"rows", o.rows}, {"fnv1a64", o.digest}});
  const json config = config_to_json(cfg);
  json manifest = {
      {"tool", "mobility"},
      {"subcommand", subcommand},
      {"status", code == 0 ? "ok" : "failed"},
      {"exit_code", code},
      {"error", code == 0 ? json() : json(error)},
      {"config", config},
      {"config_hash", fnv1a_hex(config.dump())},
      {"inputs", session.inputs()},
      {"outputs", outputs},
      {"warnings", sink.warnings()},
  };
  if (const auto& rep = session.ingest_report())
    manifest["ingest"] = {{"read", rep->read}, {"kept", rep->kept}, {"dropped", rep->dropped},
                          {"distinct_users", rep->distinct_users}};
  const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  manifest["metadata"] = {{"started_utc", started}, {"finished_utc", utc_now()}, {"elapsed_seconds", elapsed}};

  try {
    std::filesystem::create_directories(cfg.out);
    std::ofstream out(cfg.out / ("manifest_" + subcommand + ".json"), std::ios::binary);
    out << manifest.dump(2) << '\n';
    if (!out) throw InputError("cannot write manifest");
  } catch (const std::exception& e) {
    log << "error: cannot write manifest into '" << cfg.out.string() << "': " << e.what() << '\n';
    if (code == 0) code = 1;
  }
  for (const auto& w : sink.warnings()) log << "warning: " << w << '\n';
  if (code != 0) log << "error: " << error << '\n';
  return code;
}

}  // namespace mobility
