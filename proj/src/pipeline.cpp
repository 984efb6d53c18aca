#include "otpto/pipeline.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <map>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "otpto/csv.hpp"
#include "otpto/errors.hpp"
#include "otpto/parallel.hpp"

namespace otpto::pipeline {

using nlohmann::json;

// ---------------------------------------------------------------- config

PipelineConfig::PipelineConfig() {
  label_solver.objective_mode = om1::ObjectiveMode::rate_plus_gmv;
  label_solver.node_limit = 5'000'000;
  opt_solver.objective_mode = om1::ObjectiveMode::rate_only;
  opt_solver.node_limit = 5'000'000;
}

void PipelineConfig::validate() const {
  warehouse.validate();
  smoothing.validate();
  features.validate();
  pm1.validate();
  pm2.validate();
  if (pm1.objective != ml::Objective::binary) throw ValidationError("pm1 must use the binary objective");
  if (pm2.objective != ml::Objective::regression) throw ValidationError("pm2 must use the regression objective");
  if (seeds.empty()) throw ValidationError("seeds must not be empty");
  if (!dataset) generator.validate();
  if (train_start && test_start && *train_start >= *test_start)
    throw ValidationError("train_start must precede test_start");
}

namespace {

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ValidationError(where + " must be a JSON object");
  for (const auto& [k, v] : j.items())
    if (!allowed.count(k)) throw ValidationError("unknown key '" + k + "' in " + where);
}

template <class T>
void get_opt(const json& j, const char* key, T& field) {
  if (j.contains(key)) j.at(key).get_to(field);
}

void read_gbdt(const json& j, ml::GbdtParams& p, const std::string& where) {
  check_keys(j,
             {"objective", "metric", "learning_rate", "num_leaves", "max_depth", "min_child_samples", "subsample",
              "subsample_freq", "colsample_bytree", "n_estimators", "reg_alpha", "reg_lambda",
              "early_stopping_rounds"},
             where);
  if (j.contains("objective")) {
    auto o = j.at("objective").get<std::string>();
    if (o != "binary" && o != "regression") throw ValidationError(where + ": objective must be binary or regression");
    p.objective = o == "binary" ? ml::Objective::binary : ml::Objective::regression;
  }
  if (j.contains("metric")) {
    auto m = j.at("metric").get<std::string>();
    if (m != "auc" && m != "rmse") throw ValidationError(where + ": metric must be auc or rmse");
    p.metric = m == "auc" ? ml::Metric::auc : ml::Metric::rmse;
  }
  get_opt(j, "learning_rate", p.learning_rate);
  get_opt(j, "num_leaves", p.num_leaves);
  get_opt(j, "max_depth", p.max_depth);
  get_opt(j, "min_child_samples", p.min_child_samples);
  get_opt(j, "subsample", p.subsample);
  get_opt(j, "subsample_freq", p.subsample_freq);
  get_opt(j, "colsample_bytree", p.colsample_bytree);
  get_opt(j, "n_estimators", p.n_estimators);
  get_opt(j, "reg_alpha", p.reg_alpha);
  get_opt(j, "reg_lambda", p.reg_lambda);
  get_opt(j, "early_stopping_rounds", p.early_stopping_rounds);
}

json write_gbdt(const ml::GbdtParams& p) {
  return {{"objective", ml::to_string(p.objective)},
          {"metric", ml::to_string(p.metric)},
          {"learning_rate", p.learning_rate},
          {"num_leaves", p.num_leaves},
          {"max_depth", p.max_depth},
          {"min_child_samples", p.min_child_samples},
          {"subsample", p.subsample},
          {"subsample_freq", p.subsample_freq},
          {"colsample_bytree", p.colsample_bytree},
          {"n_estimators", p.n_estimators},
          {"reg_alpha", p.reg_alpha},
          {"reg_lambda", p.reg_lambda},
          {"early_stopping_rounds", p.early_stopping_rounds}};
}

void read_solver(const json& j, om1::SolverConfig& s, const std::string& where) {
  check_keys(j, {"time_limit_seconds", "node_limit", "tie_break_node_limit"}, where);
  if (j.contains("time_limit_seconds")) {
    if (j.at("time_limit_seconds").is_null()) s.time_limit_seconds.reset();
    else s.time_limit_seconds = j.at("time_limit_seconds").get<double>();
  }
  if (j.contains("node_limit")) {
    if (j.at("node_limit").is_null()) s.node_limit.reset();
    else s.node_limit = j.at("node_limit").get<long>();
  }
  get_opt(j, "tie_break_node_limit", s.tie_break_node_limit);
}

json write_solver(const om1::SolverConfig& s) {
  json j;
  j["time_limit_seconds"] = s.time_limit_seconds ? json(*s.time_limit_seconds) : json(nullptr);
  j["node_limit"] = s.node_limit ? json(*s.node_limit) : json(nullptr);
  j["tie_break_node_limit"] = s.tie_break_node_limit;
  return j;
}

PipelineConfig parse_config(const json& j) {
  PipelineConfig c;
  check_keys(j,
             {"dataset", "generator", "warehouse", "smoothing", "features", "pm1", "pm2", "label_solver",
              "opt_solver", "train", "pto_key", "train_start", "test_start", "seeds", "workers"},
             "config");
  if (j.contains("dataset") && !j.at("dataset").is_null()) c.dataset = j.at("dataset").get<std::string>();
  if (j.contains("generator")) {
    check_keys(j.at("generator"),
               {"n_skus", "n_days", "orders_per_day_mean", "basket_size_mean", "zipf_s", "price_log_mean",
                "price_log_sd", "weekday_multipliers", "start", "seed"},
               "generator");
    j.at("generator").get_to(c.generator);
  }
  if (j.contains("warehouse")) {
    const auto& w = j.at("warehouse");
    check_keys(w, {"max_skus", "max_units", "min_units", "horizon_days"}, "warehouse");
    get_opt(w, "max_skus", c.warehouse.max_skus);
    get_opt(w, "max_units", c.warehouse.max_units);
    get_opt(w, "min_units", c.warehouse.min_units);
    get_opt(w, "horizon_days", c.warehouse.horizon_days);
  }
  if (j.contains("smoothing")) {
    const auto& s = j.at("smoothing");
    check_keys(s, {"lambda", "mu", "gamma"}, "smoothing");
    get_opt(s, "lambda", c.smoothing.lambda);
    get_opt(s, "mu", c.smoothing.mu);
    get_opt(s, "gamma", c.smoothing.gamma);
  }
  if (j.contains("features")) {
    const auto& f = j.at("features");
    check_keys(f, {"rho", "enabled_families", "pm0_window", "warmup_days"}, "features");
    get_opt(f, "rho", c.features.rho);
    get_opt(f, "pm0_window", c.features.pm0_window);
    get_opt(f, "warmup_days", c.features.warmup_days);
    if (f.contains("enabled_families")) {
      c.features.enabled.clear();
      for (const auto& name : f.at("enabled_families")) c.features.enabled.insert(features::parse_family(name));
    }
  }
  if (j.contains("pm1")) read_gbdt(j.at("pm1"), c.pm1, "pm1");
  if (j.contains("pm2")) read_gbdt(j.at("pm2"), c.pm2, "pm2");
  if (j.contains("label_solver")) read_solver(j.at("label_solver"), c.label_solver, "label_solver");
  if (j.contains("opt_solver")) read_solver(j.at("opt_solver"), c.opt_solver, "opt_solver");
  if (j.contains("train")) {
    const auto& t = j.at("train");
    check_keys(t, {"pm2_keep_unstocked", "pm1_raw_label", "valid_fraction"}, "train");
    get_opt(t, "pm2_keep_unstocked", c.train.pm2_keep_unstocked);
    get_opt(t, "pm1_raw_label", c.train.pm1_raw_label);
    get_opt(t, "valid_fraction", c.train.valid_fraction);
  }
  if (j.contains("pto_key")) {
    auto k = j.at("pto_key").get<std::string>();
    if (k != "q_hat" && k != "y_hat") throw ValidationError("pto_key must be q_hat or y_hat");
    c.pto_key = k == "q_hat" ? om2::PtoKey::q_hat : om2::PtoKey::y_hat;
  }
  if (j.contains("train_start") && !j.at("train_start").is_null())
    c.train_start = Date::parse(j.at("train_start").get<std::string>());
  if (j.contains("test_start") && !j.at("test_start").is_null())
    c.test_start = Date::parse(j.at("test_start").get<std::string>());
  get_opt(j, "seeds", c.seeds);
  get_opt(j, "workers", c.workers);
  return c;
}

}  // namespace

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot read config " + path.string());
  PipelineConfig c;
  try {
    c = parse_config(json::parse(in));
  } catch (const json::exception& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
  if (c.dataset && c.dataset->is_relative()) c.dataset = path.parent_path() / *c.dataset;
  c.validate();
  return c;
}

std::string config_to_json(const PipelineConfig& c) {
  json j;
  j["dataset"] = c.dataset ? json(c.dataset->string()) : json(nullptr);
  j["generator"] = c.generator;
  j["warehouse"] = {{"max_skus", c.warehouse.max_skus},
                    {"max_units", c.warehouse.max_units},
                    {"min_units", c.warehouse.min_units},
                    {"horizon_days", c.warehouse.horizon_days}};
  j["smoothing"] = {{"lambda", c.smoothing.lambda}, {"mu", c.smoothing.mu}, {"gamma", c.smoothing.gamma}};
  std::vector<std::string> fams;
  for (auto f : c.features.enabled) fams.push_back(features::to_string(f));
  j["features"] = {{"rho", c.features.rho},
                   {"enabled_families", fams},
                   {"pm0_window", c.features.pm0_window},
                   {"warmup_days", c.features.warmup_days}};
  j["pm1"] = write_gbdt(c.pm1);
  j["pm2"] = write_gbdt(c.pm2);
  j["label_solver"] = write_solver(c.label_solver);
  j["opt_solver"] = write_solver(c.opt_solver);
  j["train"] = {{"pm2_keep_unstocked", c.train.pm2_keep_unstocked},
                {"pm1_raw_label", c.train.pm1_raw_label},
                {"valid_fraction", c.train.valid_fraction}};
  j["pto_key"] = c.pto_key == om2::PtoKey::q_hat ? "q_hat" : "y_hat";
  j["train_start"] = c.train_start ? json(c.train_start->str()) : json(nullptr);
  j["test_start"] = c.test_start ? json(c.test_start->str()) : json(nullptr);
  j["seeds"] = c.seeds;
  j["workers"] = c.workers;
  return j.dump(2);
}

// ---------------------------------------------------------------- stages

namespace {

void say(const RunOptions& o, const std::string& msg) {
  if (o.log) *o.log << msg << std::endl;
}

// Re-raise with the stage name prefixed, keeping the error kind for exit codes.
template <class F>
auto stage(const char* name, F&& f) {
  const std::string tag = std::string("[") + name + "] ";
  try {
    return f();
  } catch (const ValidationError& e) {
    throw ValidationError(tag + e.what());
  } catch (const SchemaError& e) {
    throw SchemaError(tag + e.what());
  } catch (const TrainingError& e) {
    throw TrainingError(tag + e.what());
  } catch (const EmptyDayError& e) {
    throw EmptyDayError(tag + e.what());
  } catch (const Error& e) {
    throw Error(tag + e.what());
  }
}

std::filesystem::path seed_dir(const RunOptions& o, std::uint64_t seed) {
  auto dir = *o.out_dir / ("seed_" + std::to_string(seed));
  std::filesystem::create_directories(dir);
  return dir;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << text;
}

}  // namespace

Split make_split(const IndexedHistory& history, const PipelineConfig& cfg) {
  if (history.days.empty()) throw ValidationError("dataset has no orders");
  const int T = cfg.warehouse.horizon_days;
  const Date first = history.days.front().day, last = history.days.back().day;
  Split s;
  Date test_start = cfg.test_start.value_or(last - (T - 1));
  s.train.start = cfg.train_start.value_or(first);
  s.train.end = test_start - 1;
  if (s.train.end < s.train.start) throw ValidationError("train window is empty");
  if (test_start + (T - 1) > last)
    throw ValidationError("test horizon " + test_start.str() + " + " + std::to_string(T) +
                          " days runs past the data (last day " + last.str() + ")");
  for (int d = 0; d < T; ++d) s.test_days.push_back(test_start + d);
  bool has_train = std::any_of(history.days.begin(), history.days.end(),
                               [&](const DayHistory& d) { return d.day >= s.train.start && d.day <= s.train.end; });
  if (!has_train) throw ValidationError("train window has no orders");
  return s;
}

Prepared prepare(const PipelineConfig& cfg, std::uint64_t seed, const RunOptions& opts) {
  cfg.validate();
  Prepared p;
  p.seed = seed;
  std::optional<std::filesystem::path> dir;
  if (opts.out_dir) dir = seed_dir(opts, seed);

  std::vector<OrderLine> lines = stage("load", [&] {
    if (cfg.dataset) {
      say(opts, "[load] reading " + cfg.dataset->string());
      return read_orders_csv(*cfg.dataset);
    }
    auto gen = cfg.generator;
    gen.seed = seed;
    say(opts, "[load] generating synthetic data, seed " + std::to_string(seed));
    auto out = datagen::generate_synthetic(gen);
    if (dir) {
      write_orders_csv(*dir / "orders.csv", out);
      datagen::write_params_json(*dir / "orders.params.json", gen);
    }
    return out;
  });
  p.history = stage("index", [&] { return validate_and_index(lines); });
  p.split = stage("split", [&] { return make_split(p.history, cfg); });
  p.train_history.catalogue = p.history.catalogue;
  for (std::size_t i = 0; i < p.history.days.size(); ++i) {
    const auto& d = p.history.days[i];
    if (d.day >= p.split.train.start && d.day <= p.split.train.end) p.train_history.days.push_back(d);
    if (d.day >= p.split.test_days.front() && d.day <= p.split.test_days.back()) p.test_index.push_back(i);
  }

  p.raw_labels = stage("label", [&] {
    say(opts, "[label] solving " + std::to_string(p.train_history.days.size()) + " training days");
    auto solver = cfg.label_solver;
    solver.objective_mode = om1::ObjectiveMode::rate_plus_gmv;
    return labeling::generate_optimal_labels(p.train_history, cfg.warehouse, solver, cfg.workers);
  });
  p.labels = stage("smooth", [&] { return labeling::smooth_labels(p.raw_labels, p.train_history, cfg.smoothing, seed); });

  p.opt.resize(p.test_index.size());
  stage("opt", [&] {
    say(opts, "[opt] solving " + std::to_string(p.test_index.size()) + " test days on realized orders");
    auto solver = cfg.opt_solver;
    solver.objective_mode = om1::ObjectiveMode::rate_only;
    parallel_for(p.test_index.size(), cfg.workers, [&](std::size_t i) {
      p.opt[i] = om1::solve_exact(p.history.days[p.test_index[i]], cfg.warehouse, solver);
    });
  });

  if (dir) {
    labeling::write_labels_csv(*dir / "labels.csv", p.labels);
    std::ofstream info(*dir / "label_days.csv", std::ios::binary);
    info << "date,status,nodes,rate_plus_gmv_rate,flagged\n";
    for (const auto& d : p.raw_labels.days)
      info << d.day.str() << ',' << om1::to_string(d.status) << ',' << d.nodes << ',' << format_double(d.rate) << ','
           << (d.flagged ? 1 : 0) << '\n';
    std::vector<StockPlan> plans;
    for (const auto& o : p.opt) plans.push_back(o.plan);
    write_plans_csv(*dir / "plans_opt.csv", plans);
  }
  return p;
}

VariantResult run_variant(const Prepared& p, const PipelineConfig& cfg, const Variant& v, const RunOptions& opts) {
  VariantResult r;
  r.name = v.name;
  auto fcfg = v.features;
  fcfg.seed = p.seed;
  stage("features", [&] {
    say(opts, "[features] " + v.name);
    auto days = features::training_days(p.train_history, p.split.train, fcfg.warmup_days);
    r.train_matrix = features::build_feature_matrix(p.train_history, p.labels, fcfg, p.split.train, days);
    r.test_matrix = features::build_feature_matrix(p.train_history, p.labels, fcfg, p.split.train, p.split.test_days);
  });
  r.models = stage("train", [&] {
    say(opts, "[train] " + v.name + ": " + std::to_string(r.train_matrix.keys.size()) + " rows");
    auto pm1 = cfg.pm1, pm2 = cfg.pm2;
    pm1.seed = p.seed;
    pm2.seed = p.seed + 1;
    return predict::train_models(r.train_matrix, p.labels, pm1, pm2, v.train);
  });
  r.bundle = stage("predict", [&] { return predict::predict_models(r.models, r.test_matrix); });
  stage("plan", [&] {
    for (Date day : p.split.test_days) {
      auto rows = r.bundle.for_day(day);
      om2::PostprocessConfig pc;
      pc.warehouse = cfg.warehouse;
      pc.pto_key = cfg.pto_key;
      pc.algo = om2::Algo::otpto;
      r.otpto.push_back(om2::postprocess_plan(day, rows, pc));
      pc.algo = om2::Algo::pto;
      r.pto.push_back(om2::postprocess_plan(day, rows, pc));
    }
  });
  return r;
}

// ---------------------------------------------------------------- reports

InventorySummary summarize_plan(const std::string& algo, const StockPlan& plan) {
  InventorySummary s;
  s.algo = algo;
  s.day = plan.day();
  std::vector<double> q;
  for (const auto& [id, v] : plan.entries()) q.push_back(v);
  s.skus = static_cast<int>(q.size());
  if (q.empty()) return s;
  std::sort(q.begin(), q.end());
  s.units = std::accumulate(q.begin(), q.end(), 0.0);
  s.min_qty = q.front();
  s.max_qty = q.back();
  s.mean_qty = s.units / static_cast<double>(q.size());
  std::size_t n = q.size();
  s.median_qty = n % 2 ? q[n / 2] : 0.5 * (q[n / 2 - 1] + q[n / 2]);
  return s;
}

namespace {

template <class F>
double mean_over(const std::vector<DayResult>& days, F f) {
  if (days.empty()) return 0.0;
  double s = 0.0;
  for (const auto& d : days) s += f(d);
  return s / static_cast<double>(days.size());
}

std::array<double, 3> weighted(const RunReport& r) {
  double n = 0, a = 0, b = 0, c = 0;
  for (const auto& d : r.days) {
    n += d.orders;
    a += d.otpto_fulfilled;
    b += d.pto_fulfilled;
    c += d.opt_fulfilled;
  }
  if (n == 0) return {0, 0, 0};
  return {a / n, b / n, c / n};
}

std::string pct(double v) { return format_fixed(100.0 * v, 2) + "%"; }
std::string signed_pct(double v) { return (v >= 0 ? "+" : "") + format_fixed(100.0 * v, 2) + "%"; }

}  // namespace

double RunReport::mean_otpto() const { return mean_over(days, [](const DayResult& d) { return d.otpto; }); }
double RunReport::mean_pto() const { return mean_over(days, [](const DayResult& d) { return d.pto; }); }
double RunReport::mean_opt() const { return mean_over(days, [](const DayResult& d) { return d.opt; }); }
double RunReport::mean_diff() const { return mean_over(days, [](const DayResult& d) { return d.diff(); }); }

RunReport make_report(const Prepared& p, const VariantResult& v) {
  RunReport r;
  r.seed = p.seed;
  r.metrics = v.models.metrics;
  r.label_days = static_cast<int>(p.raw_labels.days.size());
  for (const auto& d : p.raw_labels.days) r.label_days_limited += d.flagged ? 1 : 0;
  std::map<Date, std::size_t> slot;
  for (std::size_t i = 0; i < p.split.test_days.size(); ++i) slot[p.split.test_days[i]] = i;
  for (std::size_t i = 0; i < p.test_index.size(); ++i) {
    const auto& day = p.history.days[p.test_index[i]];
    const auto& opt = p.opt[i];
    std::size_t k = slot.at(day.day);
    auto a = simulate_day(day, v.otpto[k]);
    auto b = simulate_day(day, v.pto[k]);
    DayResult d;
    d.day = day.day;
    d.orders = day.order_count();
    d.otpto = a.rate;
    d.pto = b.rate;
    d.otpto_fulfilled = a.fulfilled_count;
    d.pto_fulfilled = b.fulfilled_count;
    d.opt_proven = opt.status == om1::SolveStatus::proven_optimal;
    d.opt = d.opt_proven ? opt.objective_rate : opt.upper_bound;
    d.opt_fulfilled = opt.fulfilled_count;
    if (!d.opt_proven) ++r.opt_days_limited;
    if (!opt.tie_break_complete) ++r.opt_ties_incomplete;
    r.days.push_back(d);
  }
  for (std::size_t k = 0; k < p.split.test_days.size(); ++k) {
    r.inventory.push_back(summarize_plan("OTPTO", v.otpto[k]));
    r.inventory.push_back(summarize_plan("PTO", v.pto[k]));
  }
  for (const auto& o : p.opt) r.inventory.push_back(summarize_plan("OPT", o.plan));
  return r;
}

void write_report_csv(const std::filesystem::path& path, const RunReport& r) {
  std::ostringstream out;
  out << "Date,Ord qtty,OTPTO,PTO,OPT,Diff\n";
  for (const auto& d : r.days)
    out << d.day.str() << ',' << d.orders << ',' << format_double(d.otpto) << ',' << format_double(d.pto) << ','
        << format_double(d.opt) << ',' << format_double(d.diff()) << '\n';
  double orders = mean_over(r.days, [](const DayResult& d) { return d.orders; });
  out << "Average," << format_double(orders) << ',' << format_double(r.mean_otpto()) << ','
      << format_double(r.mean_pto()) << ',' << format_double(r.mean_opt()) << ',' << format_double(r.mean_diff())
      << '\n';
  // informational only: pooled over all orders instead of averaged per day
  auto w = weighted(r);
  out << "Order-weighted,," << format_double(w[0]) << ',' << format_double(w[1]) << ',' << format_double(w[2]) << ','
      << format_double(w[0] - w[1]) << '\n';
  write_text(path, out.str());
}

std::string render_report_markdown(const RunReport& r) {
  std::ostringstream md;
  md << "# Fulfillment report, seed " << r.seed << "\n\n";
  md << "| Date | Ord qtty | OTPTO | PTO | OPT | Diff |\n|---|---:|---:|---:|---:|---:|\n";
  for (const auto& d : r.days)
    md << "| " << d.day.str() << " | " << d.orders << " | " << pct(d.otpto) << " | " << pct(d.pto) << " | "
       << (d.opt_proven ? "" : "<= ") << pct(d.opt) << " | " << signed_pct(d.diff()) << " |\n";
  double orders = mean_over(r.days, [](const DayResult& d) { return d.orders; });
  md << "| Average | " << format_fixed(orders, 1) << " | " << pct(r.mean_otpto()) << " | " << pct(r.mean_pto())
     << " | " << pct(r.mean_opt()) << " | " << signed_pct(r.mean_diff()) << " |\n";
  auto w = weighted(r);
  md << "| Order-weighted | | " << pct(w[0]) << " | " << pct(w[1]) << " | " << pct(w[2]) << " | "
     << signed_pct(w[0] - w[1]) << " |\n\n";
  md << "Average is the unweighted mean of the daily rates; the order-weighted row pools all test orders.\n\n";
  if (r.opt_days_limited > 0)
    md << "OPT hit a solver limit on " << r.opt_days_limited << " day(s); those cells show the upper bound.\n\n";

  md << "## Inventory allocation (mean over test days)\n\n";
  md << "| Plan | SKUs | Units | Min qty | Max qty | Mean qty | Median qty |\n|---|---:|---:|---:|---:|---:|---:|\n";
  for (const char* algo : {"OTPTO", "PTO", "OPT"}) {
    double n = 0, skus = 0, units = 0, mn = 0, mx = 0, mean = 0, med = 0;
    for (const auto& s : r.inventory)
      if (s.algo == algo) {
        ++n;
        skus += s.skus;
        units += s.units;
        mn += s.min_qty;
        mx += s.max_qty;
        mean += s.mean_qty;
        med += s.median_qty;
      }
    if (n == 0) continue;
    md << "| " << algo << " | " << format_fixed(skus / n, 1) << " | " << format_fixed(units / n, 1) << " | "
       << format_fixed(mn / n, 1) << " | " << format_fixed(mx / n, 1) << " | " << format_fixed(mean / n, 1) << " | "
       << format_fixed(med / n, 1) << " |\n";
  }
  md << "\n## Models and labels\n\n";
  const auto& m = r.metrics;
  md << "- PM1 rows: " << m.pm1_rows << " train, " << m.pm1_valid_rows << " validation; trees kept: " << m.pm1_trees
     << "; validation AUC: " << (m.pm1_valid_auc ? format_fixed(*m.pm1_valid_auc, 4) : std::string("n/a")) << "\n";
  md << "- PM2 rows: " << m.pm2_rows << " train, " << m.pm2_valid_rows << " validation; trees kept: " << m.pm2_trees
     << "; validation RMSE: " << (m.pm2_valid_rmse ? format_fixed(*m.pm2_valid_rmse, 4) : std::string("n/a"))
     << "\n";
  md << "- Label days: " << r.label_days << ", solved at a limit: " << r.label_days_limited << "\n";
  return md.str();
}

void write_inventory_csv(const std::filesystem::path& path, const RunReport& r) {
  std::ostringstream out;
  out << "plan,date,skus,units,min_qty,max_qty,mean_qty,median_qty\n";
  for (const auto& s : r.inventory)
    out << s.algo << ',' << s.day.str() << ',' << s.skus << ',' << format_double(s.units) << ','
        << format_double(s.min_qty) << ',' << format_double(s.max_qty) << ',' << format_double(s.mean_qty) << ','
        << format_double(s.median_qty) << '\n';
  write_text(path, out.str());
}

namespace {

void write_metrics_json(const std::filesystem::path& path, const RunReport& r) {
  const auto& m = r.metrics;
  json j = {{"seed", r.seed},
            {"pm1_rows", m.pm1_rows},
            {"pm1_valid_rows", m.pm1_valid_rows},
            {"pm1_trees", m.pm1_trees},
            {"pm1_valid_auc", m.pm1_valid_auc ? json(*m.pm1_valid_auc) : json(nullptr)},
            {"pm2_rows", m.pm2_rows},
            {"pm2_valid_rows", m.pm2_valid_rows},
            {"pm2_trees", m.pm2_trees},
            {"pm2_valid_rmse", m.pm2_valid_rmse ? json(*m.pm2_valid_rmse) : json(nullptr)},
            {"label_days", r.label_days},
            {"label_days_limited", r.label_days_limited},
            {"opt_days_limited", r.opt_days_limited}};
  write_text(path, j.dump(2) + "\n");
}

}  // namespace

RunReport run_seed(const PipelineConfig& cfg, std::uint64_t seed, const RunOptions& opts) {
  auto prep = prepare(cfg, seed, opts);
  Variant base;
  base.features = cfg.features;
  base.train = cfg.train;
  auto v = run_variant(prep, cfg, base, opts);
  auto report = stage("report", [&] { return make_report(prep, v); });
  if (opts.out_dir) {
    auto dir = seed_dir(opts, seed);
    features::write_feature_csv(dir / "features_train.csv", v.train_matrix);
    features::write_feature_csv(dir / "features_test.csv", v.test_matrix);
    features::write_schema_manifest(dir / "feature_schema.json", v.train_matrix, base.features);
    predict::save_models(dir / "models.json", v.models);
    predict::write_predictions_csv(dir / "predictions.csv", v.bundle);
    write_plans_csv(dir / "plans_otpto.csv", v.otpto);
    write_plans_csv(dir / "plans_pto.csv", v.pto);
    write_report_csv(dir / "report.csv", report);
    write_text(dir / "report.md", render_report_markdown(report));
    write_inventory_csv(dir / "inventory.csv", report);
    write_metrics_json(dir / "metrics.json", report);
  }
  say(opts, "[report] seed " + std::to_string(seed) + ": OTPTO " + pct(report.mean_otpto()) + ", PTO " +
                pct(report.mean_pto()) + ", OPT " + pct(report.mean_opt()));
  return report;
}

double MultiReport::mean_diff() const {
  double s = 0;
  for (const auto& r : runs) s += r.mean_diff();
  return runs.empty() ? 0.0 : s / static_cast<double>(runs.size());
}

double MultiReport::mean_gap_otpto() const {
  double s = 0;
  for (const auto& r : runs) s += r.mean_opt() - r.mean_otpto();
  return runs.empty() ? 0.0 : s / static_cast<double>(runs.size());
}

double MultiReport::mean_gap_pto() const {
  double s = 0;
  for (const auto& r : runs) s += r.mean_opt() - r.mean_pto();
  return runs.empty() ? 0.0 : s / static_cast<double>(runs.size());
}

bool MultiReport::hit_solver_limit() const {
  return std::any_of(runs.begin(), runs.end(), [](const RunReport& r) { return r.hit_solver_limit(); });
}

MultiReport run_pipeline(const PipelineConfig& cfg, const RunOptions& opts) {
  cfg.validate();
  MultiReport m;
  for (auto seed : cfg.seeds) m.runs.push_back(run_seed(cfg, seed, opts));
  if (opts.out_dir) {
    std::filesystem::create_directories(*opts.out_dir);
    write_text(*opts.out_dir / "config.json", config_to_json(cfg) + "\n");
    write_summary(*opts.out_dir, m);
  }
  return m;
}

void write_summary(const std::filesystem::path& dir, const MultiReport& m) {
  std::ostringstream csv, md;
  csv << "seed,OTPTO,PTO,OPT,Diff,Gap OTPTO,Gap PTO\n";
  md << "# Multi-seed summary\n\n| Seed | OTPTO | PTO | OPT | Diff | Gap to OPT (OTPTO) | Gap to OPT (PTO) |\n"
        "|---:|---:|---:|---:|---:|---:|---:|\n";
  double o = 0, p = 0, opt = 0;
  for (const auto& r : m.runs) {
    o += r.mean_otpto();
    p += r.mean_pto();
    opt += r.mean_opt();
    csv << r.seed << ',' << format_double(r.mean_otpto()) << ',' << format_double(r.mean_pto()) << ','
        << format_double(r.mean_opt()) << ',' << format_double(r.mean_diff()) << ','
        << format_double(r.mean_opt() - r.mean_otpto()) << ',' << format_double(r.mean_opt() - r.mean_pto()) << '\n';
    md << "| " << r.seed << " | " << pct(r.mean_otpto()) << " | " << pct(r.mean_pto()) << " | " << pct(r.mean_opt())
       << " | " << signed_pct(r.mean_diff()) << " | " << pct(r.mean_opt() - r.mean_otpto()) << " | "
       << pct(r.mean_opt() - r.mean_pto()) << " |\n";
  }
  double n = m.runs.empty() ? 1.0 : static_cast<double>(m.runs.size());
  csv << "mean," << format_double(o / n) << ',' << format_double(p / n) << ',' << format_double(opt / n) << ','
      << format_double(m.mean_diff()) << ',' << format_double(m.mean_gap_otpto()) << ','
      << format_double(m.mean_gap_pto()) << '\n';
  md << "| mean | " << pct(o / n) << " | " << pct(p / n) << " | " << pct(opt / n) << " | " << signed_pct(m.mean_diff())
     << " | " << pct(m.mean_gap_otpto()) << " | " << pct(m.mean_gap_pto()) << " |\n";
  std::filesystem::create_directories(dir);
  write_text(dir / "summary.csv", csv.str());
  write_text(dir / "summary.md", md.str());
}

// ---------------------------------------------------------------- ablation

std::vector<std::string> parse_groups(const std::string& text) {
  static const std::set<std::string> known = {"A1", "A2", "A3", "A4", "A5", "A6"};
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, ',')) {
    item.erase(std::remove_if(item.begin(), item.end(), ::isspace), item.end());
    if (item.empty()) continue;
    if (!known.count(item)) throw ValidationError("unknown ablation group '" + item + "' (expected A1..A6)");
    if (std::find(out.begin(), out.end(), item) == out.end()) out.push_back(item);
  }
  return out;
}

Variant ablation_variant(const PipelineConfig& cfg, const std::string& group) {
  Variant v;
  v.name = group;
  v.features = cfg.features;
  v.train = cfg.train;
  if (group == "A1") v.train.pm2_keep_unstocked = true;
  else if (group == "A2") v.train.pm1_raw_label = true;
  else if (group == "A3") v.features.enabled.erase(features::Family::decision);
  else if (group == "A4") v.features.enabled.erase(features::Family::sales_pred);
  else if (group == "A5") v.features.enabled.erase(features::Family::clustering);
  else if (group == "A6") v.features.enabled.erase(features::Family::cross);
  else throw ValidationError("unknown ablation group '" + group + "'");
  return v;
}

AblationReport run_ablation(const PipelineConfig& cfg, const std::vector<std::string>& groups, std::uint64_t seed,
                            const RunOptions& opts) {
  for (const auto& g : groups) ablation_variant(cfg, g);  // reject unknown ids before any work
  auto prep = prepare(cfg, seed, opts);
  AblationReport a;
  a.seed = seed;
  a.groups = groups;
  Variant base;
  base.features = cfg.features;
  base.train = cfg.train;
  auto vb = run_variant(prep, cfg, base, opts);
  auto rb = make_report(prep, vb);
  a.hit_solver_limit = rb.hit_solver_limit();
  for (const auto& d : rb.days) {
    a.days.push_back(d.day);
    a.orders.push_back(d.orders);
    a.baseline.push_back(d.otpto);
  }
  a.pm2_rmse.push_back(vb.models.metrics.pm2_valid_rmse);
  a.pm1_auc.push_back(vb.models.metrics.pm1_valid_auc);
  for (const auto& g : groups) {
    auto v = run_variant(prep, cfg, ablation_variant(cfg, g), opts);
    auto r = make_report(prep, v);
    std::vector<double> rates;
    for (const auto& d : r.days) rates.push_back(d.otpto);
    a.by_group.push_back(std::move(rates));
    a.pm2_rmse.push_back(v.models.metrics.pm2_valid_rmse);
    a.pm1_auc.push_back(v.models.metrics.pm1_valid_auc);
  }
  if (opts.out_dir) write_ablation(*opts.out_dir, a);
  return a;
}

void write_ablation(const std::filesystem::path& dir, const AblationReport& a) {
  auto mean = [](const std::vector<double>& v) {
    return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  };
  std::ostringstream csv, md;
  csv << "Date,Ord qtty,OTPTO";
  md << "# Ablation, seed " << a.seed << "\n\n| Date | Ord qtty | OTPTO |";
  for (const auto& g : a.groups) {
    csv << ',' << g;
    md << ' ' << g << " |";
  }
  csv << '\n';
  md << "\n|---|---:|---:|";
  for (std::size_t i = 0; i < a.groups.size(); ++i) md << "---:|";
  md << '\n';
  for (std::size_t d = 0; d < a.days.size(); ++d) {
    csv << a.days[d].str() << ',' << a.orders[d] << ',' << format_double(a.baseline[d]);
    md << "| " << a.days[d].str() << " | " << a.orders[d] << " | " << pct(a.baseline[d]) << " |";
    for (const auto& col : a.by_group) {
      csv << ',' << format_double(col[d]);
      md << ' ' << pct(col[d]) << " |";
    }
    csv << '\n';
    md << '\n';
  }
  const double base = mean(a.baseline);
  csv << "Average,," << format_double(base);
  md << "| Average | | " << pct(base) << " |";
  for (const auto& col : a.by_group) {
    csv << ',' << format_double(mean(col));
    md << ' ' << pct(mean(col)) << " |";
  }
  csv << "\nDiff,,0";
  md << "\n| Diff | | |";
  for (const auto& col : a.by_group) {
    csv << ',' << format_double(mean(col) - base);
    md << ' ' << signed_pct(mean(col) - base) << " |";
  }
  csv << '\n';
  md << "\n\n| Variant | PM1 validation AUC | PM2 validation RMSE |\n|---|---:|---:|\n";
  for (std::size_t i = 0; i < a.pm2_rmse.size(); ++i) {
    auto name = i == 0 ? std::string("OTPTO") : a.groups[i - 1];
    md << "| " << name << " | " << (a.pm1_auc[i] ? format_fixed(*a.pm1_auc[i], 4) : "n/a") << " | "
       << (a.pm2_rmse[i] ? format_fixed(*a.pm2_rmse[i], 4) : "n/a") << " |\n";
  }
  std::filesystem::create_directories(dir);
  write_text(dir / "ablation.csv", csv.str());
  write_text(dir / "ablation.md", md.str());
}

// ---------------------------------------------------------------- robustness

datagen::GenParams robustness_profile(const datagen::GenParams& base, int i) {
  auto p = base;
  switch (i) {
    case 0: break;
    case 1: p.zipf_s = base.zipf_s * 0.8; break;
    case 2: p.zipf_s = base.zipf_s * 1.3; break;
    case 3: p.orders_per_day_mean = base.orders_per_day_mean * 0.67; break;
    case 4: p.orders_per_day_mean = base.orders_per_day_mean * 1.4; break;
    case 5: p.basket_size_mean = base.basket_size_mean + 1.0; break;
    default: throw ValidationError("robustness profiles are numbered 0..5");
  }
  return p;
}

std::string robustness_profile_name(int i) {
  static const char* names[] = {"base",          "flatter popularity", "steeper popularity",
                                "fewer orders",  "more orders",        "larger baskets"};
  if (i < 0 || i > 5) throw ValidationError("robustness profiles are numbered 0..5");
  return names[i];
}

RobustnessReport run_robustness(const PipelineConfig& cfg, int profiles, const RunOptions& opts) {
  if (cfg.dataset) throw ValidationError("robustness sweeps need the generator, not a dataset file");
  if (profiles < 1 || profiles > 6) throw ValidationError("profiles must be between 1 and 6");
  RobustnessReport out;
  for (int i = 0; i < profiles; ++i) {
    auto c = cfg;
    c.generator = robustness_profile(cfg.generator, i);
    std::uint64_t seed = cfg.seeds.front() + static_cast<std::uint64_t>(i);
    RunOptions sub = opts;
    if (opts.out_dir) sub.out_dir = *opts.out_dir / ("profile_" + std::to_string(i));
    say(opts, "[robustness] profile " + std::to_string(i) + " (" + robustness_profile_name(i) + ")");
    auto r = run_seed(c, seed, sub);
    out.hit_solver_limit = out.hit_solver_limit || r.hit_solver_limit();
    out.rows.push_back({i, robustness_profile_name(i), seed, r.mean_otpto(), r.mean_pto(), r.mean_opt()});
  }
  if (opts.out_dir) write_robustness(*opts.out_dir, out);
  return out;
}

void write_robustness(const std::filesystem::path& dir, const RobustnessReport& r) {
  std::ostringstream csv, md;
  csv << "profile,name,seed,OTPTO,PTO,OPT,Gap OTPTO,Gap PTO\n";
  md << "# Robustness sweep\n\n| Profile | Setting | OTPTO | PTO | OPT | Gap to OPT (OTPTO) | Gap to OPT (PTO) |\n"
        "|---:|---|---:|---:|---:|---:|---:|\n";
  for (const auto& row : r.rows) {
    csv << row.profile << ',' << row.name << ',' << row.seed << ',' << format_double(row.otpto) << ','
        << format_double(row.pto) << ',' << format_double(row.opt) << ',' << format_double(row.gap_otpto()) << ','
        << format_double(row.gap_pto()) << '\n';
    md << "| " << row.profile << " | " << row.name << " | " << pct(row.otpto) << " | " << pct(row.pto) << " | "
       << pct(row.opt) << " | " << pct(row.gap_otpto()) << " | " << pct(row.gap_pto()) << " |\n";
  }
  std::filesystem::create_directories(dir);
  write_text(dir / "robustness.csv", csv.str());
  write_text(dir / "robustness.md", md.str());
}

}  // namespace otpto::pipeline
