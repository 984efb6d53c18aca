#pragma once

// Greedy post-processing of predictions into a feasible daily stock plan, for the
// learned pipeline (OTPTO) and the forecast-only baseline (PTO).

#include <span>
#include <string>
#include <vector>

#include "otpto/core.hpp"
#include "otpto/predict.hpp"

namespace otpto::om2 {

enum class Algo { otpto, pto };
/// PTO ranking key. q_hat follows the prose description; y_hat is the literal listing.
enum class PtoKey { q_hat, y_hat };

std::string to_string(Algo a);
Algo parse_algo(const std::string& name);

struct PostprocessConfig {
  Algo algo = Algo::otpto;
  WarehouseConfig warehouse;
  PtoKey pto_key = PtoKey::q_hat;
};

struct PostprocessTrace {
  double alpha = 0.0;
  std::vector<std::string> order;  // selected SKUs in processing order
  std::vector<double> provisional;
  std::vector<double> scaled;
  int admitted = 0;
};

/// Plan for one day from that day's prediction rows. OTPTO: top K by y_hat, then
/// processed by x_hat descending with provisional max(B, min(x_hat, q_hat)). PTO:
/// top K by q_hat with provisional max(B, q_hat). Quantities are scaled by
/// N / sum(provisional), rounded half away from zero, raised to B, and admitted in
/// order until the running total would exceed N. Sort ties go to the smaller sku_id.
StockPlan postprocess_plan(Date day, std::span<const predict::PredictionRow> rows, const PostprocessConfig& cfg,
                           PostprocessTrace* trace = nullptr);

/// One plan per day of the bundle, in date order.
std::vector<StockPlan> postprocess_all(const predict::PredictionBundle& bundle, const PostprocessConfig& cfg);

}  // namespace otpto::om2
