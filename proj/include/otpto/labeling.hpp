#pragma once

// Historical-optimum labels per (day, SKU) and the cluster / history based
// smoothing of the selection label.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "otpto/core.hpp"
#include "otpto/om1.hpp"

namespace otpto::labeling {

struct LabelRow {
  Date day;
  std::string sku_id;
  double x_star = 0.0;
  int y_star = 0;
  int y_cs = 0;
  int y_ts = 0;
  int y_final = 0;

  bool operator==(const LabelRow&) const = default;
};

struct DayLabelInfo {
  Date day;
  om1::SolveStatus status = om1::SolveStatus::proven_optimal;
  long nodes = 0;
  double rate = 0.0;
  bool flagged = false;  // solver stopped at a limit; labels come from the incumbent

  bool operator==(const DayLabelInfo&) const = default;
};

/// Rows sorted by (day, sku_id); one row per SKU with sales on that day.
struct LabelSet {
  std::vector<LabelRow> rows;
  std::vector<DayLabelInfo> days;

  const LabelRow* find(Date day, std::string_view sku_id) const;
  bool operator==(const LabelSet&) const = default;
};

struct SmoothingConfig {
  int lambda = 80;     // clusters per day
  double mu = 0.8;     // cross-sectional threshold
  double gamma = 0.8;  // time-series threshold

  void validate() const;
  bool operator==(const SmoothingConfig&) const = default;
};

/// Solves the stocking model with the GMV-augmented objective on every day and
/// records x*, y* for each SKU sold that day. y_cs, y_ts and y_final start equal
/// to y*. Throws ValidationError unless solver.objective_mode is rate_plus_gmv.
LabelSet generate_optimal_labels(const IndexedHistory& history, const WarehouseConfig& config,
                                 const om1::SolverConfig& solver, unsigned workers = 0);

/// y_final = 1 where both smoothed labels are 1, otherwise y*.
int merge_label(int y_star, int y_cs, int y_ts);

/// Five per-day clustering features of one SKU: units sold, orders containing
/// it, its GMV, mean units of those orders, mean distinct SKUs of those orders.
std::vector<double> smoothing_features(const DayHistory& day, int sku);

/// Cross-sectional smoothing (per-day K-Means over the features above),
/// time-series smoothing (per-SKU stocked share of active days) and merge.
LabelSet smooth_labels(const LabelSet& labels, const IndexedHistory& history,
                       const SmoothingConfig& cfg, std::uint64_t seed);

void write_labels_csv(const std::filesystem::path& path, const LabelSet& labels);
LabelSet read_labels_csv(const std::filesystem::path& path);

}  // namespace otpto::labeling
