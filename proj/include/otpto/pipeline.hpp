#pragma once

// End-to-end runs: data, labels, features, models, plans for both algorithms,
// per-day optimum on realized orders, and the report tables. Ablation and
// multi-profile robustness sweeps reuse the same stages.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "otpto/core.hpp"
#include "otpto/datagen.hpp"
#include "otpto/features.hpp"
#include "otpto/labeling.hpp"
#include "otpto/mlcore.hpp"
#include "otpto/om1.hpp"
#include "otpto/om2.hpp"
#include "otpto/predict.hpp"

namespace otpto::pipeline {

struct PipelineConfig {
  std::optional<std::filesystem::path> dataset;  // orders CSV; generated when absent
  datagen::GenParams generator;
  WarehouseConfig warehouse{40, 900, 5, 7};
  labeling::SmoothingConfig smoothing;
  features::FeatureConfig features;
  ml::GbdtParams pm1 = ml::GbdtParams::pm1();
  ml::GbdtParams pm2 = ml::GbdtParams::pm2();
  om1::SolverConfig label_solver;  // forced to rate_plus_gmv
  om1::SolverConfig opt_solver;    // forced to rate_only
  predict::TrainOptions train;
  om2::PtoKey pto_key = om2::PtoKey::q_hat;
  std::optional<Date> train_start;  // default: first data day
  std::optional<Date> test_start;   // default: last T calendar days of the data
  std::vector<std::uint64_t> seeds = {1};
  unsigned workers = 0;

  PipelineConfig();
  /// Throws ValidationError on inconsistent settings.
  void validate() const;
};

/// Reads a JSON config; absent keys keep their defaults.
PipelineConfig load_config(const std::filesystem::path& path);
std::string config_to_json(const PipelineConfig& cfg);

struct Split {
  features::Window train;
  std::vector<Date> test_days;  // T consecutive calendar days after the train window
};

/// Train/test windows for a history. Throws ValidationError when the windows do
/// not fit the data or overlap.
Split make_split(const IndexedHistory& history, const PipelineConfig& cfg);

/// Everything shared by variants of one seed: data, split, labels, per-day optimum.
struct Prepared {
  std::uint64_t seed = 0;
  IndexedHistory history;
  IndexedHistory train_history;
  Split split;
  labeling::LabelSet raw_labels;
  labeling::LabelSet labels;  // smoothed
  std::vector<std::size_t> test_index;  // history.days of test days with orders
  std::vector<om1::SolveOutcome> opt;   // aligned with test_index
};

struct Variant {
  std::string name = "OTPTO";
  features::FeatureConfig features;
  predict::TrainOptions train;
};

struct VariantResult {
  std::string name;
  features::FeatureMatrix train_matrix;
  features::FeatureMatrix test_matrix;
  predict::Models models;
  predict::PredictionBundle bundle;
  std::vector<StockPlan> otpto;  // aligned with Prepared::split.test_days
  std::vector<StockPlan> pto;
};

struct RunOptions {
  std::optional<std::filesystem::path> out_dir;
  std::ostream* log = nullptr;
};

Prepared prepare(const PipelineConfig& cfg, std::uint64_t seed, const RunOptions& opts = {});
VariantResult run_variant(const Prepared& prep, const PipelineConfig& cfg, const Variant& variant,
                          const RunOptions& opts = {});

// ---------------------------------------------------------------- reports

struct DayResult {
  Date day;
  int orders = 0;
  double otpto = 0.0, pto = 0.0, opt = 0.0;
  int otpto_fulfilled = 0, pto_fulfilled = 0, opt_fulfilled = 0;
  bool opt_proven = true;  // false: OPT column holds the solver's upper bound
  double diff() const { return otpto - pto; }
};

struct InventorySummary {
  std::string algo;
  Date day;
  int skus = 0;
  double units = 0, min_qty = 0, max_qty = 0, mean_qty = 0, median_qty = 0;
};

InventorySummary summarize_plan(const std::string& algo, const StockPlan& plan);

struct RunReport {
  std::uint64_t seed = 0;
  std::vector<DayResult> days;
  std::vector<InventorySummary> inventory;
  predict::TrainMetrics metrics;
  int label_days = 0;
  int label_days_limited = 0;     // labels from an unproven incumbent
  int opt_ties_incomplete = 0;  // OPT tie-break budget ran out; the rate is still optimal
  int opt_days_limited = 0;

  double mean_otpto() const;
  double mean_pto() const;
  double mean_opt() const;
  double mean_diff() const;
  bool hit_solver_limit() const { return label_days_limited > 0 || opt_days_limited > 0; }
};

RunReport make_report(const Prepared& prep, const VariantResult& v);

/// Date,Ord qtty,OTPTO,PTO,OPT,Diff, then Average and Order-weighted rows.
void write_report_csv(const std::filesystem::path& path, const RunReport& r);
std::string render_report_markdown(const RunReport& r);
void write_inventory_csv(const std::filesystem::path& path, const RunReport& r);

/// Full pipeline for one seed; writes artifacts under out_dir/seed_<seed>/ if set.
RunReport run_seed(const PipelineConfig& cfg, std::uint64_t seed, const RunOptions& opts = {});

struct MultiReport {
  std::vector<RunReport> runs;
  double mean_diff() const;
  double mean_gap_otpto() const;  // mean over runs and days of OPT - OTPTO
  double mean_gap_pto() const;
  bool hit_solver_limit() const;
};

/// Every seed of cfg.seeds; writes summary.csv / summary.md at out_dir when set.
MultiReport run_pipeline(const PipelineConfig& cfg, const RunOptions& opts = {});
void write_summary(const std::filesystem::path& dir, const MultiReport& m);

// ---------------------------------------------------------------- ablation

/// Parses "A1,A4" style lists. Throws ValidationError on unknown ids.
std::vector<std::string> parse_groups(const std::string& text);

/// The configuration with exactly one strategy disabled.
Variant ablation_variant(const PipelineConfig& cfg, const std::string& group);

struct AblationReport {
  std::uint64_t seed = 0;
  std::vector<std::string> groups;
  std::vector<Date> days;
  std::vector<int> orders;
  std::vector<double> baseline;               // full OTPTO per day
  std::vector<std::vector<double>> by_group;  // [group][day]
  std::vector<std::optional<double>> pm2_rmse;  // baseline first, then groups
  std::vector<std::optional<double>> pm1_auc;
  bool hit_solver_limit = false;
};

AblationReport run_ablation(const PipelineConfig& cfg, const std::vector<std::string>& groups,
                            std::uint64_t seed, const RunOptions& opts = {});
void write_ablation(const std::filesystem::path& dir, const AblationReport& a);

// ---------------------------------------------------------------- robustness

/// Generator settings for sweep profile i (0 is the configured generator).
datagen::GenParams robustness_profile(const datagen::GenParams& base, int i);
std::string robustness_profile_name(int i);

struct RobustnessRow {
  int profile = 0;
  std::string name;
  std::uint64_t seed = 0;
  double otpto = 0, pto = 0, opt = 0;
  double gap_otpto() const { return opt - otpto; }
  double gap_pto() const { return opt - pto; }
};

struct RobustnessReport {
  std::vector<RobustnessRow> rows;
  bool hit_solver_limit = false;
};

RobustnessReport run_robustness(const PipelineConfig& cfg, int profiles, const RunOptions& opts = {});
void write_robustness(const std::filesystem::path& dir, const RobustnessReport& r);

}  // namespace otpto::pipeline
