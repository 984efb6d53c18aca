#include "otpto/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

#include "otpto/errors.hpp"

namespace otpto {

void WarehouseConfig::validate() const {
  if (max_skus < 1) throw ValidationError("K (max_skus) must be positive");
  if (max_units < 1) throw ValidationError("N (max_units) must be positive");
  if (min_units < 1) throw ValidationError("B (min_units) must be positive");
  if (horizon_days < 1) throw ValidationError("T (horizon_days) must be positive");
  if (min_units > max_units) throw ValidationError("B (min_units) must not exceed N (max_units)");
}

std::int64_t DayHistory::total_gmv_cents() const {
  std::int64_t total = 0;
  for (const auto& o : orders) total += o.gmv_cents;
  return total;
}

int DayHistory::cumulative(int order, int sku) const {
  const auto& lines = sku_lines.at(static_cast<std::size_t>(sku));
  // Last line of this SKU at or before `order`.
  auto it = std::upper_bound(lines.begin(), lines.end(), order,
                             [](int o, const SkuLine& l) { return o < l.order; });
  return it == lines.begin() ? 0 : std::prev(it)->cumulative;
}

std::optional<int> DayHistory::find_sku(std::string_view sku_id) const {
  auto it = std::lower_bound(sku_ids.begin(), sku_ids.end(), sku_id);
  if (it == sku_ids.end() || *it != sku_id) return std::nullopt;
  return static_cast<int>(it - sku_ids.begin());
}

std::optional<int> DayHistory::find_sku_global(std::size_t global) const {
  auto it = std::lower_bound(global_sku.begin(), global_sku.end(), global);
  if (it == global_sku.end() || *it != global) return std::nullopt;
  return static_cast<int>(it - global_sku.begin());
}

const DayHistory* IndexedHistory::find(Date day) const {
  auto it = std::lower_bound(days.begin(), days.end(), day,
                             [](const DayHistory& d, Date x) { return d.day < x; });
  if (it == days.end() || it->day != day) return nullptr;
  return &*it;
}

std::optional<std::size_t> IndexedHistory::find_sku(std::string_view sku_id) const {
  auto it = std::lower_bound(catalogue.begin(), catalogue.end(), sku_id);
  if (it == catalogue.end() || *it != sku_id) return std::nullopt;
  return static_cast<std::size_t>(it - catalogue.begin());
}

namespace {

struct RawOrder {
  std::size_t first_row = 0;
  std::string id;
  std::vector<std::size_t> rows;
};

std::string row_label(std::size_t i) { return "row " + std::to_string(i + 1); }

}  // namespace

IndexedHistory validate_and_index(std::span<const OrderLine> lines) {
  std::map<Date, std::unordered_map<std::string, RawOrder>> by_day;
  for (std::size_t r = 0; r < lines.size(); ++r) {
    const auto& line = lines[r];
    if (line.quantity < 1)
      throw ValidationError(row_label(r) + ": quantity must be a positive integer");
    if (line.unit_price_cents < 0)
      throw ValidationError(row_label(r) + ": unit_price must be non-negative");
    if (line.order_id.empty() || line.sku_id.empty())
      throw ValidationError(row_label(r) + ": empty order_id or sku_id");
    auto& order = by_day[line.day][line.order_id];
    if (order.rows.empty()) {
      order.first_row = r;
      order.id = line.order_id;
    }
    for (std::size_t prev : order.rows) {
      if (lines[prev].sku_id == line.sku_id) {
        throw ValidationError(row_label(r) + ": duplicate line (" + line.day.str() + ", " +
                              line.order_id + ", " + line.sku_id + "), first seen at " +
                              row_label(prev));
      }
    }
    order.rows.push_back(r);
  }

  IndexedHistory history;
  for (const auto& line : lines) history.catalogue.push_back(line.sku_id);
  std::sort(history.catalogue.begin(), history.catalogue.end());
  history.catalogue.erase(std::unique(history.catalogue.begin(), history.catalogue.end()),
                          history.catalogue.end());

  for (auto& [day, raw_orders] : by_day) {
    DayHistory dh;
    dh.day = day;

    std::vector<const RawOrder*> ordered;
    ordered.reserve(raw_orders.size());
    for (const auto& [id, o] : raw_orders) ordered.push_back(&o);
    std::sort(ordered.begin(), ordered.end(), [](const RawOrder* a, const RawOrder* b) {
      if (a->first_row != b->first_row) return a->first_row < b->first_row;
      return a->id < b->id;
    });

    for (const auto* o : ordered)
      for (std::size_t r : o->rows) dh.sku_ids.push_back(lines[r].sku_id);
    std::sort(dh.sku_ids.begin(), dh.sku_ids.end());
    dh.sku_ids.erase(std::unique(dh.sku_ids.begin(), dh.sku_ids.end()), dh.sku_ids.end());
    for (const auto& id : dh.sku_ids) dh.global_sku.push_back(*history.find_sku(id));

    const auto m = dh.sku_ids.size();
    dh.sales.assign(m, 0);
    dh.sku_lines.assign(m, {});

    for (const auto* raw : ordered) {
      IndexedOrder order;
      order.id = raw->id;
      for (std::size_t r : raw->rows) {
        const auto& line = lines[r];
        IndexedLine il;
        il.sku = *dh.find_sku(line.sku_id);
        il.quantity = line.quantity;
        il.unit_price_cents = line.unit_price_cents;
        order.lines.push_back(il);
      }
      std::sort(order.lines.begin(), order.lines.end(),
                [](const IndexedLine& a, const IndexedLine& b) { return a.sku < b.sku; });
      const int order_index = static_cast<int>(dh.orders.size());
      for (auto& il : order.lines) {
        auto sku = static_cast<std::size_t>(il.sku);
        dh.sales[sku] += il.quantity;
        il.cumulative = dh.sales[sku];
        il.position = static_cast<int>(dh.sku_lines[sku].size());
        dh.sku_lines[sku].push_back({order_index, il.quantity, il.cumulative});
        order.gmv_cents += il.unit_price_cents * il.quantity;
        order.units += il.quantity;
      }
      dh.orders.push_back(std::move(order));
    }
    history.days.push_back(std::move(dh));
  }
  return history;
}

std::vector<OrderLine> to_lines(const IndexedHistory& history) {
  std::vector<OrderLine> out;
  for (const auto& day : history.days)
    for (const auto& order : day.orders)
      for (const auto& line : order.lines)
        out.push_back({day.day, order.id, day.sku_ids[static_cast<std::size_t>(line.sku)],
                       line.quantity, line.unit_price_cents});
  return out;
}

StockPlan::StockPlan(Date day, Entries entries) : day_(day) {
  for (auto& [sku, qty] : entries) {
    if (!std::isfinite(qty) || qty < 0)
      throw ValidationError("stock quantity for " + sku + " must be a non-negative number");
    if (qty > 0) entries_.emplace(sku, qty);
  }
}

StockPlan StockPlan::feasible(Date day, Entries entries, const WarehouseConfig& config) {
  StockPlan plan(day, std::move(entries));
  if (auto why = plan.violation(config)) throw ValidationError("infeasible plan: " + *why);
  return plan;
}

double StockPlan::quantity(std::string_view sku_id) const {
  auto it = entries_.find(sku_id);
  return it == entries_.end() ? 0.0 : it->second;
}

double StockPlan::total_units() const {
  double total = 0;
  for (const auto& [sku, qty] : entries_) total += qty;
  return total;
}

std::optional<std::string> StockPlan::violation(const WarehouseConfig& config) const {
  if (entries_.size() > static_cast<std::size_t>(std::max(config.max_skus, 0)))
    return std::to_string(entries_.size()) + " SKUs exceed K=" + std::to_string(config.max_skus);
  if (total_units() > config.max_units + 1e-9)
    return "total units exceed N=" + std::to_string(config.max_units);
  for (const auto& [sku, qty] : entries_)
    if (qty < config.min_units - 1e-9)
      return "SKU " + sku + " stocked below B=" + std::to_string(config.min_units);
  return std::nullopt;
}

FulfillmentReport simulate_day(const DayHistory& day, const StockPlan& plan) {
  if (plan.day() != day.day)
    throw ValidationError("plan for " + plan.day().str() + " applied to day " + day.day.str());
  if (day.orders.empty())
    throw EmptyDayError("day " + day.day.str() + " has no orders; fulfillment rate undefined");

  std::vector<double> stock(day.sku_ids.size(), 0.0);
  for (std::size_t i = 0; i < stock.size(); ++i) stock[i] = plan.quantity(day.sku_ids[i]);

  FulfillmentReport report;
  report.day = day.day;
  report.order_count = day.order_count();
  report.fulfilled.reserve(day.orders.size());
  report.supplied.reserve(day.orders.size());
  for (const auto& order : day.orders) {
    std::vector<bool> z;
    z.reserve(order.lines.size());
    bool all = true;
    for (const auto& line : order.lines) {
      bool ok = stock[static_cast<std::size_t>(line.sku)] >= line.cumulative;
      z.push_back(ok);
      all = all && ok;
    }
    report.supplied.push_back(std::move(z));
    report.fulfilled.push_back(all);
    if (all) {
      ++report.fulfilled_count;
      report.fulfilled_gmv_cents += order.gmv_cents;
    }
  }
  report.rate = static_cast<double>(report.fulfilled_count) / report.order_count;
  return report;
}

double average_rate(std::span<const FulfillmentReport> reports) {
  std::vector<double> rates;
  rates.reserve(reports.size());
  for (const auto& r : reports) rates.push_back(r.rate);
  return average_rate(std::span<const double>(rates));
}

double average_rate(std::span<const double> daily_rates) {
  if (daily_rates.empty()) throw ValidationError("average_rate needs at least one day");
  return std::accumulate(daily_rates.begin(), daily_rates.end(), 0.0) /
         static_cast<double>(daily_rates.size());
}

double order_weighted_rate(std::span<const FulfillmentReport> reports) {
  if (reports.empty()) throw ValidationError("order_weighted_rate needs at least one day");
  long fulfilled = 0, total = 0;
  for (const auto& r : reports) {
    fulfilled += r.fulfilled_count;
    total += r.order_count;
  }
  return static_cast<double>(fulfilled) / static_cast<double>(total);
}

std::int64_t parse_price_cents(std::string_view text) {
  auto bad = [&] {
    return ValidationError("invalid unit_price '" + std::string(text) +
                           "', expected a non-negative decimal with at most 2 fractional digits");
  };
  if (text.empty()) throw bad();
  std::size_t dot = text.find('.');
  std::string_view whole = text.substr(0, dot);
  std::string_view frac = dot == std::string_view::npos ? std::string_view{} : text.substr(dot + 1);
  if (whole.empty() || whole.size() > 12 || frac.size() > 2 ||
      (dot != std::string_view::npos && frac.empty()))
    throw bad();
  std::int64_t cents = 0;
  for (char c : whole) {
    if (c < '0' || c > '9') throw bad();
    cents = cents * 10 + (c - '0');
  }
  std::int64_t f = 0;
  for (std::size_t k = 0; k < 2; ++k) {
    int digit = 0;
    if (k < frac.size()) {
      if (frac[k] < '0' || frac[k] > '9') throw bad();
      digit = frac[k] - '0';
    }
    f = f * 10 + digit;
  }
  return cents * 100 + f;
}

std::string format_cents(std::int64_t cents) {
  std::string sign = cents < 0 ? "-" : "";
  auto a = cents < 0 ? -cents : cents;
  auto frac = std::to_string(a % 100);
  if (frac.size() < 2) frac = "0" + frac;
  return sign + std::to_string(a / 100) + "." + frac;
}

}  // namespace otpto
