#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "otpto/csv.hpp"
#include "otpto/errors.hpp"
#include "otpto/pipeline.hpp"

namespace fs = std::filesystem;
using namespace otpto;

namespace {

constexpr int kOk = 0, kFailed = 1, kInvalid = 2, kSolverLimit = 3;

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = "out";
  std::optional<unsigned> workers;
  bool quiet = false;
};

pipeline::PipelineConfig load(const Globals& g) {
  pipeline::PipelineConfig c = g.config.empty() ? pipeline::PipelineConfig{} : pipeline::load_config(g.config);
  if (g.seed) c.seeds = {*g.seed};
  if (g.workers) c.workers = *g.workers;
  c.validate();
  return c;
}

std::uint64_t seed_of(const Globals& g, const pipeline::PipelineConfig& c) { return g.seed.value_or(c.seeds.front()); }

fs::path out_dir(const Globals& g) {
  fs::path p(g.out);
  fs::create_directories(p);
  return p;
}

pipeline::RunOptions run_options(const Globals& g) {
  pipeline::RunOptions o;
  o.out_dir = out_dir(g);
  if (!g.quiet) o.log = &std::cerr;
  return o;
}

fs::path orders_path(const std::string& flag, const pipeline::PipelineConfig& c) {
  if (!flag.empty()) return flag;
  if (c.dataset) return *c.dataset;
  throw ValidationError("no orders file: pass --orders or set \"dataset\" in the config");
}

void write_json(const fs::path& p, const nlohmann::json& j) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + p.string());
  out << j.dump(2) << '\n';
}

void note(const Globals& g, const std::string& msg) {
  if (!g.quiet) std::cerr << msg << '\n';
}

// ---------------------------------------------------------------- commands

int cmd_gen(const Globals& g, const std::string& params_file) {
  auto c = load(g);
  auto p = params_file.empty() ? c.generator : datagen::read_params_json(params_file);
  p.seed = seed_of(g, c);
  auto lines = datagen::generate_synthetic(p);
  auto dir = out_dir(g);
  write_orders_csv(dir / "orders.csv", lines);
  datagen::write_params_json(dir / "orders.params.json", p);
  note(g, "wrote " + std::to_string(lines.size()) + " order lines to " + (dir / "orders.csv").string());
  return kOk;
}

int cmd_index(const Globals& g, const std::string& orders) {
  auto c = load(g);
  auto path = orders_path(orders, c);
  auto lines = read_orders_csv(path);
  auto h = validate_and_index(lines);
  std::size_t n_orders = 0;
  for (const auto& d : h.days) n_orders += d.orders.size();
  nlohmann::json j = {{"file", path.string()},
                      {"lines", lines.size()},
                      {"days", h.days.size()},
                      {"orders", n_orders},
                      {"skus", h.catalogue.size()},
                      {"first_day", h.days.empty() ? "" : h.days.front().day.str()},
                      {"last_day", h.days.empty() ? "" : h.days.back().day.str()}};
  write_json(out_dir(g) / "index.json", j);
  std::cout << j.dump(2) << '\n';
  return kOk;
}

struct Loaded {
  pipeline::PipelineConfig cfg;
  IndexedHistory history, train_history;
  pipeline::Split split;
};

Loaded load_history(const Globals& g, const std::string& orders) {
  Loaded l;
  l.cfg = load(g);
  auto lines = read_orders_csv(orders_path(orders, l.cfg));
  l.history = validate_and_index(lines);
  l.split = pipeline::make_split(l.history, l.cfg);
  l.train_history.catalogue = l.history.catalogue;
  for (const auto& d : l.history.days)
    if (d.day >= l.split.train.start && d.day <= l.split.train.end) l.train_history.days.push_back(d);
  return l;
}

int cmd_label(const Globals& g, const std::string& orders) {
  auto l = load_history(g, orders);
  auto solver = l.cfg.label_solver;
  solver.objective_mode = om1::ObjectiveMode::rate_plus_gmv;
  note(g, "solving " + std::to_string(l.train_history.days.size()) + " training days");
  auto raw = labeling::generate_optimal_labels(l.train_history, l.cfg.warehouse, solver, l.cfg.workers);
  auto smooth = labeling::smooth_labels(raw, l.train_history, l.cfg.smoothing, seed_of(g, l.cfg));
  auto dir = out_dir(g);
  labeling::write_labels_csv(dir / "labels_raw.csv", raw);
  labeling::write_labels_csv(dir / "labels.csv", smooth);
  int flagged = 0;
  std::ofstream info(dir / "label_days.csv", std::ios::binary);
  info << "date,status,nodes,rate_plus_gmv_rate,flagged\n";
  for (const auto& d : raw.days) {
    info << d.day.str() << ',' << om1::to_string(d.status) << ',' << d.nodes << ',' << format_double(d.rate) << ','
         << (d.flagged ? 1 : 0) << '\n';
    flagged += d.flagged ? 1 : 0;
  }
  if (flagged) {
    std::cerr << flagged << " day(s) stopped at a solver limit; their labels come from the incumbent\n";
    return kSolverLimit;
  }
  return kOk;
}

int cmd_features(const Globals& g, const std::string& orders, const std::string& labels_file) {
  auto l = load_history(g, orders);
  auto labels = labeling::read_labels_csv(labels_file.empty() ? (out_dir(g) / "labels.csv") : fs::path(labels_file));
  auto f = l.cfg.features;
  f.seed = seed_of(g, l.cfg);
  auto days = features::training_days(l.train_history, l.split.train, f.warmup_days);
  auto train = features::build_feature_matrix(l.train_history, labels, f, l.split.train, days);
  auto test = features::build_feature_matrix(l.train_history, labels, f, l.split.train, l.split.test_days);
  auto dir = out_dir(g);
  features::write_feature_csv(dir / "features_train.csv", train);
  features::write_feature_csv(dir / "features_test.csv", test);
  features::write_schema_manifest(dir / "feature_schema.json", train, f);
  note(g, std::to_string(train.keys.size()) + " training rows, " + std::to_string(test.keys.size()) + " test rows");
  return kOk;
}

int cmd_train(const Globals& g, const std::string& features_file, const std::string& labels_file) {
  auto c = load(g);
  auto dir = out_dir(g);
  auto m = features::read_feature_csv(features_file.empty() ? dir / "features_train.csv" : fs::path(features_file),
                                      c.features);
  auto labels = labeling::read_labels_csv(labels_file.empty() ? dir / "labels.csv" : fs::path(labels_file));
  auto pm1 = c.pm1, pm2 = c.pm2;
  pm1.seed = seed_of(g, c);
  pm2.seed = seed_of(g, c) + 1;
  auto models = predict::train_models(m, labels, pm1, pm2, c.train);
  predict::save_models(dir / "models.json", models);
  const auto& mt = models.metrics;
  nlohmann::json j = {{"pm1_rows", mt.pm1_rows},
                      {"pm1_trees", mt.pm1_trees},
                      {"pm1_valid_auc", mt.pm1_valid_auc ? nlohmann::json(*mt.pm1_valid_auc) : nlohmann::json()},
                      {"pm2_rows", mt.pm2_rows},
                      {"pm2_trees", mt.pm2_trees},
                      {"pm2_valid_rmse", mt.pm2_valid_rmse ? nlohmann::json(*mt.pm2_valid_rmse) : nlohmann::json()}};
  write_json(dir / "train_metrics.json", j);
  std::cout << j.dump(2) << '\n';
  return kOk;
}

int cmd_plan(const Globals& g, const std::string& algo, const std::string& models_file,
             const std::string& features_file, const std::string& predictions_file) {
  auto c = load(g);
  auto dir = out_dir(g);
  predict::PredictionBundle bundle;
  if (!predictions_file.empty()) {
    bundle = predict::read_predictions_csv(predictions_file);
  } else {
    auto models = predict::load_models(models_file.empty() ? dir / "models.json" : fs::path(models_file));
    auto m = features::read_feature_csv(features_file.empty() ? dir / "features_test.csv" : fs::path(features_file),
                                        c.features);
    bundle = predict::predict_models(models, m);
    predict::write_predictions_csv(dir / "predictions.csv", bundle);
  }
  om2::PostprocessConfig pc;
  pc.algo = om2::parse_algo(algo);
  pc.warehouse = c.warehouse;
  pc.pto_key = c.pto_key;
  auto plans = om2::postprocess_all(bundle, pc);
  auto path = dir / ("plans_" + om2::to_string(pc.algo) + ".csv");
  write_plans_csv(path, plans);
  note(g, "wrote " + std::to_string(plans.size()) + " plan(s) to " + path.string());
  return kOk;
}

int cmd_eval(const Globals& g, const std::string& orders, const std::string& plans_file, bool with_opt) {
  auto c = load(g);
  auto h = validate_and_index(read_orders_csv(orders_path(orders, c)));
  auto plans = read_plans_csv(plans_file);
  std::ostringstream csv;
  csv << "Date,Ord qtty,Rate" << (with_opt ? ",OPT,OPT proven" : "") << '\n';
  double sum = 0, opt_sum = 0;
  int n = 0;
  bool limited = false;
  auto solver = c.opt_solver;
  solver.objective_mode = om1::ObjectiveMode::rate_only;
  for (const auto& plan : plans) {
    auto it = std::find_if(h.days.begin(), h.days.end(), [&](const DayHistory& d) { return d.day == plan.day(); });
    if (it == h.days.end()) {
      note(g, plan.day().str() + ": no orders, skipped");
      continue;
    }
    if (auto v = plan.violation(c.warehouse)) throw ValidationError(plan.day().str() + ": plan infeasible: " + *v);
    auto rep = simulate_day(*it, plan);
    csv << plan.day().str() << ',' << it->order_count() << ',' << format_double(rep.rate);
    sum += rep.rate;
    if (with_opt) {
      auto opt = om1::solve_exact(*it, c.warehouse, solver);
      bool proven = opt.status == om1::SolveStatus::proven_optimal;
      limited = limited || !proven;
      double v = proven ? opt.objective_rate : opt.upper_bound;
      opt_sum += v;
      csv << ',' << format_double(v) << ',' << (proven ? 1 : 0);
    }
    csv << '\n';
    ++n;
  }
  if (n == 0) throw ValidationError("no plan day has orders in " + orders_path(orders, c).string());
  csv << "Average,," << format_double(sum / n);
  if (with_opt) csv << ',' << format_double(opt_sum / n) << ',';
  csv << '\n';
  auto path = out_dir(g) / "eval.csv";
  std::ofstream(path, std::ios::binary) << csv.str();
  std::cout << csv.str();
  return limited ? kSolverLimit : kOk;
}

int cmd_pipeline(const Globals& g) {
  auto c = load(g);
  auto m = pipeline::run_pipeline(c, run_options(g));
  std::cout << "mean OTPTO - PTO: " << format_fixed(100 * m.mean_diff(), 2) << "%, gap to OPT: OTPTO "
            << format_fixed(100 * m.mean_gap_otpto(), 2) << "%, PTO " << format_fixed(100 * m.mean_gap_pto(), 2)
            << "%\n";
  return m.hit_solver_limit() ? kSolverLimit : kOk;
}

int cmd_ablation(const Globals& g, const std::string& groups) {
  auto c = load(g);
  auto gs = pipeline::parse_groups(groups);
  auto a = pipeline::run_ablation(c, gs, seed_of(g, c), run_options(g));
  std::cout << "wrote " << (out_dir(g) / "ablation.csv").string() << '\n';
  return a.hit_solver_limit ? kSolverLimit : kOk;
}

int cmd_robustness(const Globals& g, int profiles) {
  auto c = load(g);
  auto r = pipeline::run_robustness(c, profiles, run_options(g));
  for (const auto& row : r.rows)
    std::cout << row.profile << ' ' << row.name << ": gap OTPTO " << format_fixed(100 * row.gap_otpto(), 2)
              << "%, PTO " << format_fixed(100 * row.gap_pto(), 2) << "%\n";
  return r.hit_solver_limit ? kSolverLimit : kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Front-end warehouse stocking: labels, models, plans and evaluation"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the subcommand
  Globals g;
  app.add_option("--config", g.config, "JSON config file")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "seed (overrides the config's seed list)");
  app.add_option("--out", g.out, "output directory")->capture_default_str();
  app.add_option("--workers", g.workers, "worker threads (0 = hardware)");
  app.add_flag("-q,--quiet", g.quiet, "no progress on stderr");

  std::string orders, labels, feats, models, preds, plans, algo = "otpto", params, groups;
  bool with_opt = false;
  int profiles = 6;

  auto* gen = app.add_subcommand("gen", "generate a synthetic order stream");
  gen->add_option("--params", params, "generator parameters JSON (default: config)")->check(CLI::ExistingFile);
  auto* index = app.add_subcommand("index", "validate an orders CSV and print its summary");
  index->add_option("--orders", orders)->check(CLI::ExistingFile);
  auto* label = app.add_subcommand("label", "optimal and smoothed labels for the training window");
  label->add_option("--orders", orders)->check(CLI::ExistingFile);
  auto* feat = app.add_subcommand("features", "feature matrices for the training and test days");
  feat->add_option("--orders", orders)->check(CLI::ExistingFile);
  feat->add_option("--labels", labels, "labels CSV (default: <out>/labels.csv)");
  auto* train = app.add_subcommand("train", "train the selection and quantity models");
  train->add_option("--features", feats, "training features (default: <out>/features_train.csv)");
  train->add_option("--labels", labels, "labels CSV (default: <out>/labels.csv)");
  auto* plan = app.add_subcommand("plan", "turn predictions into stock plans");
  plan->add_option("--algo", algo)->check(CLI::IsMember({"otpto", "pto"}))->capture_default_str();
  plan->add_option("--models", models, "models JSON (default: <out>/models.json)");
  plan->add_option("--features", feats, "test features (default: <out>/features_test.csv)");
  plan->add_option("--predictions", preds, "use an existing predictions CSV instead of models + features");
  auto* eval = app.add_subcommand("eval", "replay plans against realized orders");
  eval->add_option("--orders", orders)->check(CLI::ExistingFile);
  eval->add_option("--plans", plans)->required()->check(CLI::ExistingFile);
  eval->add_flag("--opt", with_opt, "also solve each day's optimum");
  auto* pipe = app.add_subcommand("pipeline", "end-to-end run for every configured seed");
  auto* abl = app.add_subcommand("ablation", "disable one strategy at a time");
  abl->add_option("--groups", groups, "comma list of A1..A6")->required();
  auto* rob = app.add_subcommand("robustness", "sweep generator profiles");
  rob->add_option("--profiles", profiles)->check(CLI::Range(1, 6))->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? kOk : kInvalid;
  }

  try {
    if (*gen) return cmd_gen(g, params);
    if (*index) return cmd_index(g, orders);
    if (*label) return cmd_label(g, orders);
    if (*feat) return cmd_features(g, orders, labels);
    if (*train) return cmd_train(g, feats, labels);
    if (*plan) return cmd_plan(g, algo, models, feats, preds);
    if (*eval) return cmd_eval(g, orders, plans, with_opt);
    if (*pipe) return cmd_pipeline(g);
    if (*abl) return cmd_ablation(g, groups);
    if (*rob) return cmd_robustness(g, profiles);
  } catch (const ValidationError& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return kInvalid;
  } catch (const SchemaError& e) {
    std::cerr << "schema mismatch: " << e.what() << '\n';
    return kInvalid;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailed;
  }
  return kFailed;
}
