#include "otpto/om2.hpp"

#include <algorithm>
#include <cmath>

#include "otpto/errors.hpp"

namespace otpto::om2 {

std::string to_string(Algo a) { return a == Algo::otpto ? "otpto" : "pto"; }

Algo parse_algo(const std::string& name) {
  if (name == "otpto") return Algo::otpto;
  if (name == "pto") return Algo::pto;
  throw ValidationError("unknown algorithm '" + name + "' (expected otpto or pto)");
}

StockPlan postprocess_plan(Date day, std::span<const predict::PredictionRow> rows, const PostprocessConfig& cfg,
                           PostprocessTrace* trace) {
  const auto& w = cfg.warehouse;
  PostprocessTrace local;
  PostprocessTrace& t = trace ? *trace : local;
  t = {};
  if (rows.empty() || w.max_units < w.min_units || w.max_skus <= 0) return StockPlan(day, {});

  std::vector<const predict::PredictionRow*> cand;
  for (const auto& r : rows) {
    if (r.day != day) throw ValidationError("prediction row for " + r.day.str() + " passed for day " + day.str());
    cand.push_back(&r);
  }
  auto by = [](auto key) {
    return [key](const predict::PredictionRow* a, const predict::PredictionRow* b) {
      double ka = key(*a), kb = key(*b);
      if (ka != kb) return ka > kb;
      return a->sku_id < b->sku_id;
    };
  };
  const bool pto = cfg.algo == Algo::pto;
  if (pto && cfg.pto_key == PtoKey::q_hat)
    std::stable_sort(cand.begin(), cand.end(), by([](const predict::PredictionRow& r) { return r.q_hat; }));
  else
    std::stable_sort(cand.begin(), cand.end(), by([](const predict::PredictionRow& r) { return r.y_hat; }));
  if (cand.size() > static_cast<std::size_t>(w.max_skus)) cand.resize(static_cast<std::size_t>(w.max_skus));
  if (!pto) std::stable_sort(cand.begin(), cand.end(), by([](const predict::PredictionRow& r) { return r.x_hat; }));

  const double b = w.min_units;
  double total = 0.0;
  for (const auto* r : cand) {
    double q = pto ? std::max(b, r->q_hat) : std::max(b, std::min(r->x_hat, r->q_hat));
    t.order.push_back(r->sku_id);
    t.provisional.push_back(q);
    total += q;
  }
  t.alpha = static_cast<double>(w.max_units) / total;

  StockPlan::Entries entries;
  double used = 0.0;
  for (std::size_t i = 0; i < cand.size(); ++i) {
    // literal rounding can fall below B; raise it so the minimum holds
    double q = std::max(b, std::round(t.provisional[i] * t.alpha));
    t.scaled.push_back(q);
    if (used + q > w.max_units) break;
    used += q;
    entries.emplace(cand[i]->sku_id, q);
    ++t.admitted;
  }
  return StockPlan(day, std::move(entries));
}

std::vector<StockPlan> postprocess_all(const predict::PredictionBundle& bundle, const PostprocessConfig& cfg) {
  std::vector<StockPlan> plans;
  auto& rows = bundle.rows;
  for (std::size_t i = 0; i < rows.size();) {
    std::size_t j = i;
    while (j < rows.size() && rows[j].day == rows[i].day) ++j;
    plans.push_back(postprocess_plan(rows[i].day, std::span(rows).subspan(i, j - i), cfg));
    i = j;
  }
  return plans;
}

}  // namespace otpto::om2
