#pragma once

// PM1 (selection classifier) and PM2 (quantity regressor) trained on historical
// optimum labels, and the per-(day, SKU) prediction bundle OM2 consumes.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "otpto/features.hpp"
#include "otpto/labeling.hpp"
#include "otpto/mlcore.hpp"

namespace otpto::predict {

struct PredictionRow {
  Date day;
  std::string sku_id;
  double y_hat = 0.0;  // selection probability, in (0,1)
  double x_hat = 0.0;  // quantity, >= 0
  double q_hat = 0.0;  // PM0 sales forecast, >= 0

  bool operator==(const PredictionRow&) const = default;
};

/// Rows sorted by (day, sku_id).
struct PredictionBundle {
  std::vector<PredictionRow> rows;

  std::vector<Date> days() const;
  std::vector<PredictionRow> for_day(Date day) const;
  bool operator==(const PredictionBundle&) const = default;
};

struct TrainOptions {
  bool pm2_keep_unstocked = false;  // ablation: PM2 also trains on x* = 0 rows
  bool pm1_raw_label = false;       // ablation: PM1 target is y* instead of y_final
  double valid_fraction = 0.2;      // trailing share of training days held out
};

struct TrainMetrics {
  std::size_t pm1_rows = 0, pm1_valid_rows = 0;
  std::size_t pm2_rows = 0, pm2_valid_rows = 0;
  int pm1_trees = 0, pm2_trees = 0;
  std::optional<double> pm1_valid_auc;   // absent when the slice has one class
  std::optional<double> pm2_valid_rmse;  // absent when the slice is empty
  std::vector<Date> valid_days;
};

struct Models {
  std::vector<std::string> columns;  // feature schema the models were trained on
  ml::GbdtModel pm1;
  ml::GbdtModel pm2;
  TrainMetrics metrics;

  bool operator==(const Models& o) const { return columns == o.columns && pm1 == o.pm1 && pm2 == o.pm2; }
};

/// Days held out for early stopping: the last floor(fraction * days)
/// distinct days of the matrix (at least one when there are two or more days).
std::vector<Date> validation_days(const features::FeatureMatrix& matrix, double fraction);

/// Trains both models. Rows without a label count as x* = 0, y = 0.
/// Throws TrainingError when PM1's targets have a single class or PM2 has no rows.
Models train_models(const features::FeatureMatrix& matrix, const labeling::LabelSet& labels,
                    const ml::GbdtParams& pm1, const ml::GbdtParams& pm2, const TrainOptions& opt = {});

/// Throws SchemaError if the matrix columns differ from the training schema.
PredictionBundle predict_models(const Models& models, const features::FeatureMatrix& matrix);

void save_models(const std::filesystem::path& path, const Models& models);
Models load_models(const std::filesystem::path& path);

/// predictions CSV: date,sku_id,y_hat,x_hat,q_hat
void write_predictions_csv(const std::filesystem::path& path, const PredictionBundle& bundle);
PredictionBundle read_predictions_csv(const std::filesystem::path& path);

}  // namespace otpto::predict
