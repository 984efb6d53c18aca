#include "otpto/features.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>

#include <nlohmann/json.hpp>

#include "otpto/csv.hpp"
#include "otpto/errors.hpp"

namespace otpto::features {

std::string to_string(Family f) {
  switch (f) {
    case Family::common: return "common";
    case Family::decision: return "decision";
    case Family::sales_pred: return "sales_pred";
    case Family::clustering: return "clustering";
    case Family::cross: return "cross";
  }
  return "unknown";
}

Family parse_family(const std::string& name) {
  for (auto f : {Family::common, Family::decision, Family::sales_pred, Family::clustering, Family::cross})
    if (to_string(f) == name) return f;
  throw ValidationError("unknown feature family '" + name + "'");
}

void FeatureConfig::validate() const {
  if (rho < 1) throw ValidationError("rho must be >= 1");
  if (!has(Family::common)) throw ValidationError("the common feature family cannot be disabled");
  if (pm0_window < 1) throw ValidationError("pm0_window must be >= 1");
  if (warmup_days < 0) throw ValidationError("warmup_days must be >= 0");
}

// ---------------------------------------------------------------- PM0

double pm0_value(std::span<const double> sales, long target, long cutoff) {
  cutoff = std::min(cutoff, target - 1);
  cutoff = std::min(cutoff, static_cast<long>(sales.size()) - 1);
  if (cutoff < 0) return 0.0;
  const long known = cutoff + 1;
  auto at = [&](long i) { return sales[static_cast<std::size_t>(i)]; };
  if (known < 7) {
    double s = 0.0;
    for (long i = 0; i <= cutoff; ++i) s += at(i);
    return s / static_cast<double>(known);
  }
  double seasonal = 0.0;
  int weeks = 0;
  for (int j = 1; j <= 4; ++j) {
    long i = target - 7L * j;
    if (i < 0) break;
    if (i > cutoff) continue;
    seasonal += at(i);
    ++weeks;
  }
  double ewma = 0.0, wsum = 0.0;
  for (int k = 1; k <= 7; ++k) {
    double w = std::pow(0.5, (k - 1) / 3.0);
    ewma += w * at(cutoff - k + 1);
    wsum += w;
  }
  ewma /= wsum;
  // no same-weekday observation yet
  if (weeks == 0) return ewma;
  return 0.5 * (seasonal / weeks) + 0.5 * ewma;
}

Pm0Output pm0_point(std::span<const double> sales, long target, long cutoff, int window) {
  Pm0Output out;
  cutoff = std::min(cutoff, target - 1);
  out.q_hat = pm0_value(sales, target, cutoff);
  double sum = 0.0, sq = 0.0;
  int n = 0;
  for (long u = std::max(1L, cutoff - window + 1); u <= cutoff && u < static_cast<long>(sales.size()); ++u) {
    double r = sales[static_cast<std::size_t>(u)] - pm0_value(sales, u, u - 1);
    sum += r;
    sq += r * r;
    ++n;
  }
  if (n > 0) {
    out.residual_mean = sum / n;
    out.residual_std = std::sqrt(std::max(0.0, sq / n - out.residual_mean * out.residual_mean));
  }
  return out;
}

namespace {

Date first_day(const IndexedHistory& h) {
  if (h.days.empty()) throw ValidationError("history has no days");
  return h.days.front().day;
}

// Daily sales per catalogue SKU indexed by calendar day from `base`.
std::vector<std::vector<double>> daily_sales(const IndexedHistory& h, Date base, long days) {
  std::vector<std::vector<double>> s(h.catalogue.size(), std::vector<double>(static_cast<std::size_t>(days), 0.0));
  for (const auto& day : h.days) {
    long d = day.day - base;
    if (d < 0 || d >= days) continue;
    for (std::size_t i = 0; i < day.sku_ids.size(); ++i)
      s[day.global_sku[i]][static_cast<std::size_t>(d)] = day.sales[i];
  }
  return s;
}

}  // namespace

std::vector<Pm0Row> pm0_forecast(const IndexedHistory& history, std::span<const Date> target_days,
                                 int window, Date cutoff) {
  std::vector<Pm0Row> rows;
  if (history.days.empty()) return rows;
  const Date base = first_day(history);
  const long days = history.days.back().day - base + 1;
  auto sales = daily_sales(history, base, days);
  for (Date t : target_days) {
    long cut = std::min(t - 1, cutoff) - base;
    for (std::size_t i = 0; i < history.catalogue.size(); ++i)
      rows.push_back({t, history.catalogue[i], pm0_point(sales[i], t - base, cut, window)});
  }
  return rows;
}

// ---------------------------------------------------------------- matrix

std::vector<std::string> FeatureMatrix::column_names() const {
  std::vector<std::string> out;
  for (const auto& c : columns) out.push_back(c.name);
  return out;
}

std::size_t FeatureMatrix::column(const std::string& name) const {
  for (std::size_t i = 0; i < columns.size(); ++i)
    if (columns[i].name == name) return i;
  throw SchemaError("feature column '" + name + "' is not in the schema");
}

std::vector<Column> schema(const FeatureConfig& cfg) {
  cfg.validate();
  std::vector<Column> cols;
  auto add = [&](Family f, std::initializer_list<const char*> names) {
    for (const char* n : names) cols.push_back({n, f});
  };
  add(Family::common, {"sales_mean_7", "sales_std_7", "sales_mean_28", "sales_std_28", "price_mean", "active_days"});
  for (int d = 0; d < 7; ++d) cols.push_back({"dow_" + std::to_string(d), Family::common});
  if (cfg.has(Family::decision))
    add(Family::decision, {"x_star_mean", "x_star_max", "stocked_days", "stocked_prop", "fulfilled_orders_mean",
                           "fulfilled_gmv_mean"});
  if (cfg.has(Family::sales_pred)) add(Family::sales_pred, {"q_hat", "residual_mean", "residual_std"});
  if (cfg.has(Family::clustering))
    for (int c = 0; c < cfg.rho; ++c) cols.push_back({"cluster_" + std::to_string(c), Family::clustering});
  if (cfg.has(Family::cross))
    add(Family::cross, {"order_units_mean", "order_skus_mean", "order_gmv_mean", "order_count"});
  return cols;
}

std::vector<std::string> sku_universe(const IndexedHistory& history, Window train) {
  std::set<std::string> seen;
  for (const auto& day : history.days)
    if (day.day >= train.start && day.day <= train.end)
      for (std::size_t i = 0; i < day.sku_ids.size(); ++i)
        if (day.sales[i] > 0) seen.insert(day.sku_ids[i]);
  return {seen.begin(), seen.end()};
}

std::vector<Date> training_days(const IndexedHistory& history, Window train, int warmup_days) {
  std::vector<Date> out;
  for (const auto& day : history.days)
    if (day.day >= train.start + warmup_days && day.day <= train.end && day.day > train.start)
      out.push_back(day.day);
  return out;
}

namespace {

// Per-SKU daily statistics with prefix sums over calendar days.
struct Series {
  std::vector<double> sales, lines, price_sum, order_units, order_skus, order_gmv;
  std::vector<double> x_star, y_star, active, ful_orders, ful_gmv;
};

std::vector<double> prefix(const std::vector<double>& v) {
  std::vector<double> p(v.size() + 1, 0.0);
  for (std::size_t i = 0; i < v.size(); ++i) p[i + 1] = p[i] + v[i];
  return p;
}

struct Prefixed {
  std::vector<double> sales, lines, price_sum, order_units, order_skus, order_gmv;
  std::vector<double> x_star, y_star, active, ful_orders, ful_gmv, x_max;  // x_max is a running max
};

double sum(const std::vector<double>& p, long from, long to) {
  return p[static_cast<std::size_t>(to + 1)] - p[static_cast<std::size_t>(from)];
}

std::pair<double, double> mean_std(const std::vector<double>& v, long from, long to) {
  if (to < from) return {0.0, 0.0};
  double s = 0.0, sq = 0.0;
  for (long i = from; i <= to; ++i) {
    s += v[static_cast<std::size_t>(i)];
    sq += v[static_cast<std::size_t>(i)] * v[static_cast<std::size_t>(i)];
  }
  double n = static_cast<double>(to - from + 1);
  double m = s / n;
  return {m, std::sqrt(std::max(0.0, sq / n - m * m))};
}

}  // namespace

FeatureMatrix build_feature_matrix(const IndexedHistory& history, const labeling::LabelSet& labels,
                                   const FeatureConfig& cfg, Window train,
                                   std::span<const Date> target_days) {
  cfg.validate();
  if (train.end < train.start) throw ValidationError("train window ends before it starts");
  FeatureMatrix m;
  m.columns = schema(cfg);
  const auto universe = sku_universe(history, train);
  const std::size_t U = universe.size();
  const Date base = train.start;
  const long D = train.end - base + 1;
  auto uidx = [&](std::string_view id) -> long {
    auto it = std::lower_bound(universe.begin(), universe.end(), id);
    return it != universe.end() && *it == id ? it - universe.begin() : -1;
  };

  std::vector<Series> ser(U);
  for (auto& s : ser)
    for (auto* v : {&s.sales, &s.lines, &s.price_sum, &s.order_units, &s.order_skus, &s.order_gmv, &s.x_star,
                    &s.y_star, &s.active, &s.ful_orders, &s.ful_gmv})
      v->assign(static_cast<std::size_t>(D), 0.0);

  for (const auto& day : history.days) {
    long d = day.day - base;
    if (d < 0 || d >= D) continue;
    auto sd = static_cast<std::size_t>(d);
    // Replay the day's label plan to count fulfilled orders per SKU.
    StockPlan::Entries entries;
    for (const auto& id : day.sku_ids)
      if (const auto* row = labels.find(day.day, id); row && row->x_star > 0) entries.emplace(id, row->x_star);
    auto report = simulate_day(day, StockPlan(day.day, std::move(entries)));
    std::vector<long> local_u(day.sku_ids.size());
    for (std::size_t i = 0; i < day.sku_ids.size(); ++i) local_u[i] = uidx(day.sku_ids[i]);
    for (std::size_t o = 0; o < day.orders.size(); ++o) {
      const auto& order = day.orders[o];
      for (const auto& line : order.lines) {
        long u = local_u[static_cast<std::size_t>(line.sku)];
        if (u < 0) continue;
        auto& s = ser[static_cast<std::size_t>(u)];
        s.lines[sd] += 1;
        s.price_sum[sd] += static_cast<double>(line.unit_price_cents) / 100.0;
        s.order_units[sd] += order.units;
        s.order_skus[sd] += order.distinct_skus();
        s.order_gmv[sd] += static_cast<double>(order.gmv_cents) / 100.0;
        if (report.fulfilled[o]) {
          s.ful_orders[sd] += 1;
          s.ful_gmv[sd] += static_cast<double>(order.gmv_cents) / 100.0;
        }
      }
    }
    for (std::size_t i = 0; i < day.sku_ids.size(); ++i) {
      long u = local_u[i];
      if (u < 0) continue;
      auto& s = ser[static_cast<std::size_t>(u)];
      s.sales[sd] = day.sales[i];
      s.active[sd] = day.sales[i] > 0 ? 1 : 0;
      if (const auto* row = labels.find(day.day, day.sku_ids[i])) {
        s.x_star[sd] = row->x_star;
        s.y_star[sd] = row->y_star;
      }
    }
  }

  std::vector<Prefixed> pre(U);
  for (std::size_t u = 0; u < U; ++u) {
    const auto& s = ser[u];
    auto& p = pre[u];
    p.sales = prefix(s.sales);
    p.lines = prefix(s.lines);
    p.price_sum = prefix(s.price_sum);
    p.order_units = prefix(s.order_units);
    p.order_skus = prefix(s.order_skus);
    p.order_gmv = prefix(s.order_gmv);
    p.x_star = prefix(s.x_star);
    p.y_star = prefix(s.y_star);
    p.active = prefix(s.active);
    p.ful_orders = prefix(s.ful_orders);
    p.ful_gmv = prefix(s.ful_gmv);
    p.x_max.assign(static_cast<std::size_t>(D), 0.0);
    double run = 0.0;
    for (long d = 0; d < D; ++d) {
      run = std::max(run, s.x_star[static_cast<std::size_t>(d)]);
      p.x_max[static_cast<std::size_t>(d)] = run;
    }
  }

  // Stocking-frequency clusters, one fit per window end.
  std::map<long, std::vector<int>> cluster_cache;
  auto clusters_for = [&](long e) -> const std::vector<int>& {
    auto it = cluster_cache.find(e);
    if (it != cluster_cache.end()) return it->second;
    std::vector<int> assign(U, 0);
    // Fit only on SKUs already seen by day e so later arrivals cannot move the centroids.
    ml::Matrix pts(U, 2);
    std::vector<std::size_t> seen;
    const double days = static_cast<double>(e + 1);
    for (std::size_t u = 0; u < U; ++u) {
      double active = sum(pre[u].active, 0, e);
      pts(u, 0) = active > 0 ? sum(pre[u].y_star, 0, e) / active : 0.0;
      pts(u, 1) = sum(pre[u].x_star, 0, e) / days;
      if (active > 0) seen.push_back(u);
    }
    if (!seen.empty()) {
      double lo[2], range[2];
      for (std::size_t j = 0; j < 2; ++j) {
        double a = pts(seen[0], j), b = a;
        for (auto u : seen) a = std::min(a, pts(u, j)), b = std::max(b, pts(u, j));
        lo[j] = a;
        range[j] = b - a;
      }
      auto scale = [&](std::size_t u, std::size_t j) { return range[j] > 0 ? (pts(u, j) - lo[j]) / range[j] : 0.0; };
      ml::Matrix fit(seen.size(), 2);
      for (std::size_t i = 0; i < seen.size(); ++i)
        for (std::size_t j = 0; j < 2; ++j) fit(i, j) = scale(seen[i], j);
      auto km = ml::kmeans(fit, cfg.rho, cfg.seed * 7919ULL + static_cast<std::uint64_t>(e));
      // canonical ids: centroids sorted by (stocked share, inventory)
      std::vector<int> order(km.centroids.rows);
      std::iota(order.begin(), order.end(), 0);
      std::sort(order.begin(), order.end(), [&](int a, int b) {
        auto ra = km.centroids.row(static_cast<std::size_t>(a)), rb = km.centroids.row(static_cast<std::size_t>(b));
        return std::lexicographical_compare(ra.begin(), ra.end(), rb.begin(), rb.end());
      });
      std::vector<int> rank(order.size());
      for (std::size_t r = 0; r < order.size(); ++r) rank[static_cast<std::size_t>(order[r])] = static_cast<int>(r);
      for (std::size_t u = 0; u < U; ++u) {
        double q[2] = {scale(u, 0), scale(u, 1)};
        assign[u] = rank[static_cast<std::size_t>(ml::nearest_centroid(km.centroids, q))];
      }
    }
    return cluster_cache.emplace(e, std::move(assign)).first->second;
  };

  const std::size_t cols = m.columns.size();
  m.values = ml::Matrix(target_days.size() * U, cols);
  m.keys.reserve(target_days.size() * U);
  m.q_hat.reserve(target_days.size() * U);
  std::size_t r = 0;
  for (Date t : target_days) {
    const Date end_day = std::min(t - 1, train.end);
    const long e = end_day - base;
    if (e < 0) throw ValidationError("target day " + t.str() + " has no train data before it");
    const double window_days = static_cast<double>(e + 1);
    const std::vector<int>* clusters = cfg.has(Family::clustering) ? &clusters_for(e) : nullptr;
    for (std::size_t u = 0; u < U; ++u, ++r) {
      const auto& s = ser[u];
      const auto& p = pre[u];
      std::size_t c = 0;
      auto put = [&](double v) { m.values(r, c++) = v; };

      auto [m7, s7] = mean_std(s.sales, std::max(0L, e - 6), e);
      auto [m28, s28] = mean_std(s.sales, std::max(0L, e - 27), e);
      double lines = sum(p.lines, 0, e);
      double active = sum(p.active, 0, e);
      put(m7);
      put(s7);
      put(m28);
      put(s28);
      put(lines > 0 ? sum(p.price_sum, 0, e) / lines : 0.0);
      put(active);
      for (int d = 0; d < 7; ++d) put(t.weekday() == d ? 1.0 : 0.0);

      if (cfg.has(Family::decision)) {
        double stocked = sum(p.y_star, 0, e);
        put(sum(p.x_star, 0, e) / window_days);
        put(p.x_max[static_cast<std::size_t>(e)]);
        put(stocked);
        put(active > 0 ? stocked / active : 0.0);
        put(stocked > 0 ? sum(p.ful_orders, 0, e) / stocked : 0.0);
        put(stocked > 0 ? sum(p.ful_gmv, 0, e) / stocked : 0.0);
      }
      auto pm0 = pm0_point(s.sales, t - base, e, cfg.pm0_window);
      if (cfg.has(Family::sales_pred)) {
        put(pm0.q_hat);
        put(pm0.residual_mean);
        put(pm0.residual_std);
      }
      if (clusters)
        for (int k = 0; k < cfg.rho; ++k) put((*clusters)[u] == k ? 1.0 : 0.0);
      if (cfg.has(Family::cross)) {
        put(lines > 0 ? sum(p.order_units, 0, e) / lines : 0.0);
        put(lines > 0 ? sum(p.order_skus, 0, e) / lines : 0.0);
        put(lines > 0 ? sum(p.order_gmv, 0, e) / lines : 0.0);
        put(lines);
      }
      m.keys.push_back({t, universe[u], end_day});
      m.q_hat.push_back(pm0.q_hat);
    }
  }
  return m;
}

void write_feature_csv(const std::filesystem::path& path, const FeatureMatrix& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << "date,sku_id,window_end,aux_q_hat";
  for (const auto& c : m.columns) out << ',' << c.name;
  out << '\n';
  for (std::size_t r = 0; r < m.keys.size(); ++r) {
    out << m.keys[r].day.str() << ',' << m.keys[r].sku_id << ',' << m.keys[r].window_end.str() << ','
        << format_double(m.q_hat[r]);
    for (std::size_t c = 0; c < m.columns.size(); ++c) out << ',' << format_double(m.values(r, c));
    out << '\n';
  }
}

FeatureMatrix read_feature_csv(const std::filesystem::path& path, const FeatureConfig& cfg) {
  FeatureMatrix m;
  m.columns = schema(cfg);
  std::vector<std::string> header = {"date", "sku_id", "window_end", "aux_q_hat"};
  for (const auto& c : m.columns) header.push_back(c.name);
  CsvTable table;
  try {
    table = CsvTable::read(path, header);
  } catch (const ValidationError& e) {
    throw SchemaError(e.what());
  }
  m.values = ml::Matrix(table.rows().size(), m.columns.size());
  for (std::size_t r = 0; r < table.rows().size(); ++r) {
    const auto& f = table.rows()[r];
    const auto where = table.where(r);
    try {
      m.keys.push_back({Date::parse(f[0]), f[1], Date::parse(f[2])});
    } catch (const ValidationError& e) {
      throw ValidationError(where + ": " + e.what());
    }
    m.q_hat.push_back(parse_double_field(f[3], where));
    for (std::size_t c = 0; c < m.columns.size(); ++c) m.values(r, c) = parse_double_field(f[4 + c], where);
  }
  return m;
}

void write_schema_manifest(const std::filesystem::path& path, const FeatureMatrix& m, const FeatureConfig& cfg) {
  nlohmann::json j;
  j["format"] = "otpto-feature-schema";
  j["version"] = 1;
  j["rho"] = cfg.rho;
  j["pm0_window"] = cfg.pm0_window;
  j["warmup_days"] = cfg.warmup_days;
  std::vector<std::string> fams;
  for (auto f : cfg.enabled) fams.push_back(to_string(f));
  j["enabled_families"] = fams;
  auto& cols = j["columns"] = nlohmann::json::array();
  for (const auto& c : m.columns) {
    nlohmann::json cj = {{"name", c.name}, {"family", to_string(c.family)}};
    // The common family approximates production attributes that synthetic data lacks.
    if (c.family == Family::common) cj["stand_in"] = true;
    cols.push_back(std::move(cj));
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

}  // namespace otpto::features
