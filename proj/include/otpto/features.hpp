#pragma once

// Per (day, SKU) feature rows for the selection and quantity models, including
// the baseline sales forecaster (PM0) that feeds the sales-prediction family.

#include <cstdint>
#include <filesystem>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "otpto/core.hpp"
#include "otpto/labeling.hpp"
#include "otpto/mlcore.hpp"

namespace otpto::features {

enum class Family { common, decision, sales_pred, clustering, cross };

std::string to_string(Family f);
Family parse_family(const std::string& name);

struct FeatureConfig {
  int rho = 4;  // clusters for the stocking-frequency one-hot
  std::set<Family> enabled = {Family::common, Family::decision, Family::sales_pred, Family::clustering,
                              Family::cross};
  int pm0_window = 28;  // days of backtest residuals
  int warmup_days = 7;  // first train days get no training rows
  std::uint64_t seed = 0;

  void validate() const;
  bool has(Family f) const { return enabled.count(f) > 0; }
};

// ---------------------------------------------------------------- PM0

struct Pm0Output {
  double q_hat = 0.0;
  double residual_mean = 0.0;
  double residual_std = 0.0;

  bool operator==(const Pm0Output&) const = default;
};

/// Forecast for calendar index `target` from daily sales known up to index
/// `cutoff` (< target). With at least 7 known days: half the mean of the same
/// weekday over the last 4 weeks plus half a 7-day exponentially weighted mean
/// (half-life 3 days) ending at `cutoff`; with fewer, the mean of the known days;
/// with none, 0.
double pm0_value(std::span<const double> sales, long target, long cutoff);

/// Forecast plus mean / population std of one-step-ahead residuals on the last
/// `window` known days.
Pm0Output pm0_point(std::span<const double> sales, long target, long cutoff, int window);

struct Pm0Row {
  Date day;
  std::string sku_id;
  Pm0Output out;
};

/// PM0 for each target day and each catalogue SKU. Data after min(day - 1, cutoff)
/// is ignored.
std::vector<Pm0Row> pm0_forecast(const IndexedHistory& history, std::span<const Date> target_days,
                                 int window, Date cutoff);

// ---------------------------------------------------------------- matrix

struct Column {
  std::string name;
  Family family;
  bool operator==(const Column&) const = default;
};

struct RowKey {
  Date day;
  std::string sku_id;
  Date window_end;  // last day whose data entered the row
  bool operator==(const RowKey&) const = default;
};

struct FeatureMatrix {
  std::vector<Column> columns;
  std::vector<RowKey> keys;
  ml::Matrix values;
  std::vector<double> q_hat;  // PM0 forecast per row, kept even if sales_pred is off

  std::vector<std::string> column_names() const;
  /// Index of a column; throws SchemaError if absent.
  std::size_t column(const std::string& name) const;
  bool operator==(const FeatureMatrix&) const = default;
};

/// Column layout for a configuration.
std::vector<Column> schema(const FeatureConfig& cfg);

struct Window {
  Date start;
  Date end;  // inclusive
};

/// SKUs sold at least once inside the window, sorted.
std::vector<std::string> sku_universe(const IndexedHistory& history, Window train);

/// One row per (target day, SKU of the universe). Aggregates for target day t use
/// days in [train.start, min(t - 1, train.end)]. Decision features read the raw
/// x*, y* of `labels`.
FeatureMatrix build_feature_matrix(const IndexedHistory& history, const labeling::LabelSet& labels,
                                   const FeatureConfig& cfg, Window train,
                                   std::span<const Date> target_days);

/// Training days: every history day in the train window after the warmup.
std::vector<Date> training_days(const IndexedHistory& history, Window train, int warmup_days);

void write_feature_csv(const std::filesystem::path& path, const FeatureMatrix& m);
FeatureMatrix read_feature_csv(const std::filesystem::path& path, const FeatureConfig& cfg);
void write_schema_manifest(const std::filesystem::path& path, const FeatureMatrix& m,
                           const FeatureConfig& cfg);

}  // namespace otpto::features
