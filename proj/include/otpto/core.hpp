#pragma once

// Domain types shared by every stage: raw order lines, the per-day indexed view
// with cumulative-demand statistics, warehouse capacity limits, stock plans, and
// the order-replay simulator that defines what "fully fulfilled" means.

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "otpto/date.hpp"

namespace otpto {

struct OrderLine {
  Date day;
  std::string order_id;
  std::string sku_id;
  int quantity = 0;
  std::int64_t unit_price_cents = 0;

  bool operator==(const OrderLine&) const = default;
};

/// Daily capacity limits of one front-end warehouse.
struct WarehouseConfig {
  int max_skus = 0;     // K: distinct SKUs stocked per day
  int max_units = 0;    // N: total units stocked per day
  int min_units = 0;    // B: minimum units for any stocked SKU
  int horizon_days = 7; // T: evaluation horizon

  /// Throws ValidationError unless K, N, B, T are positive and B <= N.
  void validate() const;

  bool operator==(const WarehouseConfig&) const = default;
};

/// One line of an indexed order. `cumulative` is c_oi: units of this SKU requested
/// by this order and every earlier order of the day.
struct IndexedLine {
  int sku = 0;  // day-local SKU index
  int quantity = 0;
  std::int64_t unit_price_cents = 0;
  int cumulative = 0;
  int position = 0;  // index of this line within DayHistory::sku_lines[sku]

  bool operator==(const IndexedLine&) const = default;
};

struct IndexedOrder {
  std::string id;
  std::vector<IndexedLine> lines;  // sorted by sku
  std::int64_t gmv_cents = 0;
  int units = 0;

  /// s_o: number of distinct SKUs in the order.
  int distinct_skus() const { return static_cast<int>(lines.size()); }

  bool operator==(const IndexedOrder&) const = default;
};

/// Reverse index: one entry per order containing a SKU, in arrival order.
struct SkuLine {
  int order = 0;
  int quantity = 0;
  int cumulative = 0;

  bool operator==(const SkuLine&) const = default;
};

/// All orders of one day plus derived statistics. Day-local SKU indices follow the
/// lexicographic order of `sku_ids`, so index order and id order agree.
struct DayHistory {
  Date day;
  std::vector<std::string> sku_ids;
  std::vector<std::size_t> global_sku;  // position in IndexedHistory::catalogue
  std::vector<IndexedOrder> orders;     // arrival order
  std::vector<int> sales;               // d_i
  std::vector<std::vector<SkuLine>> sku_lines;

  int order_count() const { return static_cast<int>(orders.size()); }
  int sku_count() const { return static_cast<int>(sku_ids.size()); }
  std::int64_t total_gmv_cents() const;

  /// c_oi for any order/SKU pair, including SKUs the order does not contain.
  int cumulative(int order, int sku) const;

  std::optional<int> find_sku(std::string_view sku_id) const;
  std::optional<int> find_sku_global(std::size_t global) const;

  bool operator==(const DayHistory&) const = default;
};

struct IndexedHistory {
  std::vector<std::string> catalogue;  // every SKU id seen, sorted
  std::vector<DayHistory> days;        // sorted by date, only days with orders

  const DayHistory* find(Date day) const;
  std::optional<std::size_t> find_sku(std::string_view sku_id) const;

  bool operator==(const IndexedHistory&) const = default;
};

/// Validates raw lines and builds the indexed view. Orders within a day keep the
/// arrival order given by their first row; order_id breaks ties.
/// Throws ValidationError (naming the 1-based data row) on duplicate
/// (day, order, sku) lines, non-positive quantities or negative prices.
IndexedHistory validate_and_index(std::span<const OrderLine> lines);

/// Flattens an indexed history back into order lines in arrival order.
std::vector<OrderLine> to_lines(const IndexedHistory& history);

/// Per-day stocking decision: SKU id to stocked quantity. Zero quantities are dropped,
/// so presence of an entry means the SKU is selected.
class StockPlan {
 public:
  using Entries = std::map<std::string, double, std::less<>>;

  StockPlan() = default;
  StockPlan(Date day, Entries entries);

  /// Builds a plan and rejects it unless it satisfies the K/N/B limits.
  static StockPlan feasible(Date day, Entries entries, const WarehouseConfig& config);

  Date day() const { return day_; }
  const Entries& entries() const { return entries_; }
  double quantity(std::string_view sku_id) const;
  std::size_t sku_count() const { return entries_.size(); }
  double total_units() const;

  /// Human-readable description of the first violated limit, if any.
  std::optional<std::string> violation(const WarehouseConfig& config) const;
  bool satisfies(const WarehouseConfig& config) const { return !violation(config); }

  bool operator==(const StockPlan&) const = default;

 private:
  Date day_;
  Entries entries_;
};

struct FulfillmentReport {
  Date day;
  std::vector<bool> fulfilled;               // p_o
  std::vector<std::vector<bool>> supplied;   // z_oi, aligned with IndexedOrder::lines
  int fulfilled_count = 0;
  int order_count = 0;
  double rate = 0.0;
  std::int64_t fulfilled_gmv_cents = 0;
};

/// Replays the day's orders against the plan. A line is supplied when the stocked
/// quantity covers the cumulative demand c_oi; an order is fulfilled when all its
/// lines are. Throws EmptyDayError when the day has no orders.
FulfillmentReport simulate_day(const DayHistory& day, const StockPlan& plan);

/// Unweighted mean of daily rates.
double average_rate(std::span<const FulfillmentReport> reports);
double average_rate(std::span<const double> daily_rates);

/// Total fulfilled orders over total orders.
double order_weighted_rate(std::span<const FulfillmentReport> reports);

/// Parses a non-negative decimal with at most two fractional digits into cents.
std::int64_t parse_price_cents(std::string_view text);
std::string format_cents(std::int64_t cents);

}  // namespace otpto
