#include "otpto/labeling.hpp"

#include <algorithm>
#include <fstream>
#include <map>

#include "otpto/csv.hpp"
#include "otpto/errors.hpp"
#include "otpto/mlcore.hpp"
#include "otpto/parallel.hpp"

namespace otpto::labeling {

const LabelRow* LabelSet::find(Date day, std::string_view sku_id) const {
  auto it = std::lower_bound(rows.begin(), rows.end(), std::pair{day, sku_id},
                             [](const LabelRow& r, const std::pair<Date, std::string_view>& key) {
                               if (r.day != key.first) return r.day < key.first;
                               return std::string_view(r.sku_id) < key.second;
                             });
  if (it == rows.end() || it->day != day || it->sku_id != sku_id) return nullptr;
  return &*it;
}

void SmoothingConfig::validate() const {
  if (lambda < 1) throw ValidationError("lambda must be >= 1");
  if (!(mu > 0 && mu <= 1)) throw ValidationError("mu must be in (0,1]");
  if (!(gamma > 0 && gamma <= 1)) throw ValidationError("gamma must be in (0,1]");
}

LabelSet generate_optimal_labels(const IndexedHistory& history, const WarehouseConfig& config,
                                 const om1::SolverConfig& solver, unsigned workers) {
  if (solver.objective_mode != om1::ObjectiveMode::rate_plus_gmv)
    throw ValidationError("label generation uses the rate_plus_gmv objective");
  const std::size_t n = history.days.size();
  std::vector<std::vector<LabelRow>> per_day(n);
  std::vector<DayLabelInfo> info(n);
  parallel_for(n, workers, [&](std::size_t d) {
    const auto& day = history.days[d];
    auto out = om1::solve_exact(day, config, solver);
    info[d] = {day.day, out.status, out.nodes_explored, out.objective_rate,
               out.status != om1::SolveStatus::proven_optimal};
    auto& rows = per_day[d];
    rows.reserve(day.sku_ids.size());
    for (std::size_t i = 0; i < day.sku_ids.size(); ++i) {
      if (day.sales[i] <= 0) continue;
      LabelRow r;
      r.day = day.day;
      r.sku_id = day.sku_ids[i];
      r.x_star = out.plan.quantity(r.sku_id);
      r.y_star = r.x_star > 0 ? 1 : 0;
      r.y_cs = r.y_ts = r.y_final = r.y_star;
      rows.push_back(std::move(r));
    }
  });
  LabelSet set;
  set.days = std::move(info);
  for (auto& rows : per_day) set.rows.insert(set.rows.end(), rows.begin(), rows.end());
  return set;
}

int merge_label(int y_star, int y_cs, int y_ts) { return y_cs == 1 && y_ts == 1 ? 1 : y_star; }

std::vector<double> smoothing_features(const DayHistory& day, int sku) {
  const auto& lines = day.sku_lines.at(static_cast<std::size_t>(sku));
  double gmv = 0.0, units = 0.0, skus = 0.0;
  for (const auto& sl : lines) {
    const auto& order = day.orders[static_cast<std::size_t>(sl.order)];
    for (const auto& l : order.lines)
      if (l.sku == sku) gmv += static_cast<double>(l.unit_price_cents) * l.quantity / 100.0;
    units += order.units;
    skus += order.distinct_skus();
  }
  const double cnt = static_cast<double>(lines.size());
  return {static_cast<double>(day.sales[static_cast<std::size_t>(sku)]), cnt, gmv,
          cnt > 0 ? units / cnt : 0.0, cnt > 0 ? skus / cnt : 0.0};
}

LabelSet smooth_labels(const LabelSet& labels, const IndexedHistory& history,
                       const SmoothingConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  LabelSet out = labels;
  auto& rows = out.rows;

  // Cross-sectional pass, one day at a time.
  std::size_t begin = 0;
  while (begin < rows.size()) {
    std::size_t end = begin;
    while (end < rows.size() && rows[end].day == rows[begin].day) ++end;
    const DayHistory* day = history.find(rows[begin].day);
    if (!day) throw ValidationError("labels reference day " + rows[begin].day.str() + " missing from history");
    ml::Matrix feats(end - begin, 5);
    for (std::size_t r = begin; r < end; ++r) {
      auto sku = day->find_sku(rows[r].sku_id);
      if (!sku) throw ValidationError("label SKU " + rows[r].sku_id + " not sold on " + day->day.str());
      auto f = smoothing_features(*day, *sku);
      for (std::size_t j = 0; j < 5; ++j) feats(r - begin, j) = f[j];
    }
    auto norm = ml::min_max_normalize(feats);
    const int k = std::min<int>(cfg.lambda, static_cast<int>(end - begin));
    auto km = ml::kmeans(norm, k, seed * 1000003ULL + static_cast<std::uint64_t>(day->day.serial()));
    const auto clusters = km.centroids.rows;
    std::vector<int> size(clusters, 0), stocked(clusters, 0);
    for (std::size_t r = begin; r < end; ++r) {
      auto c = static_cast<std::size_t>(km.assignments[r - begin]);
      ++size[c];
      stocked[c] += rows[r].y_star;
    }
    for (std::size_t r = begin; r < end; ++r) {
      auto c = static_cast<std::size_t>(km.assignments[r - begin]);
      double share = static_cast<double>(stocked[c]) / size[c];
      rows[r].y_cs = share > cfg.mu ? 1 : rows[r].y_star;
    }
    begin = end;
  }

  // Time-series pass: share of a SKU's active days on which it was stocked.
  std::map<std::string, std::pair<int, int>, std::less<>> history_share;  // active, stocked
  for (const auto& r : rows) {
    auto& [active, stocked] = history_share[r.sku_id];
    ++active;
    stocked += r.y_star;
  }
  for (auto& r : rows) {
    const auto& [active, stocked] = history_share.find(r.sku_id)->second;
    r.y_ts = static_cast<double>(stocked) / active > cfg.gamma ? 1 : r.y_star;
    r.y_final = merge_label(r.y_star, r.y_cs, r.y_ts);
  }
  return out;
}

void write_labels_csv(const std::filesystem::path& path, const LabelSet& labels) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << "date,sku_id,x_star,y_star,y_cs,y_ts,y_final\n";
  for (const auto& r : labels.rows)
    out << r.day.str() << ',' << r.sku_id << ',' << format_double(r.x_star) << ',' << r.y_star << ','
        << r.y_cs << ',' << r.y_ts << ',' << r.y_final << '\n';
}

LabelSet read_labels_csv(const std::filesystem::path& path) {
  auto table = CsvTable::read(path, {"date", "sku_id", "x_star", "y_star", "y_cs", "y_ts", "y_final"});
  LabelSet set;
  for (std::size_t i = 0; i < table.rows().size(); ++i) {
    const auto& f = table.rows()[i];
    const auto where = table.where(i);
    LabelRow r;
    try {
      r.day = Date::parse(f[0]);
    } catch (const ValidationError& e) {
      throw ValidationError(where + ": " + e.what());
    }
    r.sku_id = f[1];
    r.x_star = parse_double_field(f[2], where);
    int* flags[] = {&r.y_star, &r.y_cs, &r.y_ts, &r.y_final};
    for (int k = 0; k < 4; ++k) {
      *flags[k] = parse_int_field(f[3 + static_cast<std::size_t>(k)], where);
      if (*flags[k] != 0 && *flags[k] != 1) throw ValidationError(where + ": labels must be 0 or 1");
    }
    set.rows.push_back(std::move(r));
  }
  std::sort(set.rows.begin(), set.rows.end(), [](const LabelRow& a, const LabelRow& b) {
    return a.day != b.day ? a.day < b.day : a.sku_id < b.sku_id;
  });
  return set;
}

}  // namespace otpto::labeling
