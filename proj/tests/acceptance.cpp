// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
// Oracles here are written independently of the library code they check.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "otpto/core.hpp"
#include "otpto/labeling.hpp"
#include "otpto/mlcore.hpp"
#include "otpto/om1.hpp"
#include "otpto/om2.hpp"
#include "otpto/pipeline.hpp"

namespace fs = std::filesystem;
using namespace otpto;

namespace {

struct Verdict {
  bool pass = true;
  std::string detail;
};

const Date kDay{2023, 9, 1};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Random single day: `skus` SKUs, `orders` orders of 1-3 distinct SKUs, qty 1-3.
std::vector<OrderLine> random_day_lines(std::mt19937_64& rng, int skus, int orders, Date day = kDay) {
  std::vector<std::int64_t> price(static_cast<std::size_t>(skus));
  for (auto& p : price) p = 1 + static_cast<std::int64_t>(rng() % 3000);
  std::vector<OrderLine> lines;
  for (int o = 0; o < orders; ++o) {
    int size = 1 + static_cast<int>(rng() % static_cast<unsigned>(std::min(3, skus)));
    std::vector<int> all(static_cast<std::size_t>(skus));
    std::iota(all.begin(), all.end(), 0);
    std::shuffle(all.begin(), all.end(), rng);
    for (int k = 0; k < size; ++k) {
      int s = all[static_cast<std::size_t>(k)];
      lines.push_back({day, "o" + std::to_string(o), "S" + std::to_string(s), 1 + static_cast<int>(rng() % 3),
                       price[static_cast<std::size_t>(s)]});
    }
  }
  return lines;
}

// ------------------------------------------------------------------ 1

Verdict solver_exactness() {
  Verdict v;
  auto t0 = std::chrono::steady_clock::now();
  int checked = 0;
  for (std::uint64_t i = 0; i < 100; ++i) {
    std::mt19937_64 rng(7000 + i);
    int skus = 1 + static_cast<int>(rng() % 6);
    int orders = 1 + static_cast<int>(rng() % 12);
    auto day = validate_and_index(random_day_lines(rng, skus, orders)).days.at(0);
    WarehouseConfig cfg{1 + static_cast<int>(rng() % 6), 4 + static_cast<int>(rng() % 17), 2, 7};
    for (auto mode : {om1::ObjectiveMode::rate_only, om1::ObjectiveMode::rate_plus_gmv}) {
      om1::SolverConfig s;
      s.objective_mode = mode;
      auto exact = om1::solve_exact(day, cfg, s);
      auto oracle = om1::brute_force_oracle(day, cfg, mode);
      ++checked;
      if (exact.status != om1::SolveStatus::proven_optimal || exact.objective_rate != oracle.objective_rate ||
          exact.objective_gmv_term != oracle.objective_gmv_term) {
        v.pass = false;
        v.detail = "instance " + std::to_string(i) + " mode " + om1::to_string(mode) + " differs";
        return v;
      }
    }
  }
  double secs = seconds_since(t0);
  if (secs >= 60) v.pass = false;
  v.detail = std::to_string(checked) + " solves equal the oracle in " + std::to_string(secs) + " s";
  return v;
}

// ------------------------------------------------------------------ 2

Verdict fulfillment_semantics() {
  Verdict v;
  const double delta = 1e-3, M = 1e5;
  int violations = 0;
  for (std::uint64_t i = 0; i < 100; ++i) {
    std::mt19937_64 rng(8100 + i);
    auto day = validate_and_index(random_day_lines(rng, 2 + static_cast<int>(rng() % 5),
                                                   1 + static_cast<int>(rng() % 12)))
                   .days.at(0);
    StockPlan::Entries e;
    for (const auto& id : day.sku_ids)
      if (rng() % 4) e[id] = static_cast<double>(rng() % 9);
    StockPlan plan(day.day, e);
    auto rep = simulate_day(day, plan);
    // c_oi recomputed from scratch by scanning earlier orders.
    int sum_p = 0;
    for (std::size_t o = 0; o < day.orders.size(); ++o) {
      const auto& order = day.orders[o];
      double zsum = 0;
      for (std::size_t k = 0; k < order.lines.size(); ++k) {
        int sku = order.lines[k].sku;
        int c = 0;
        for (std::size_t u = 0; u <= o; ++u)
          for (const auto& l : day.orders[u].lines)
            if (l.sku == sku) c += l.quantity;
        double x = plan.quantity(day.sku_ids[static_cast<std::size_t>(sku)]);
        double z = rep.supplied[o][k] ? 1 : 0;
        zsum += z;
        if (!(x - c + delta <= M * z)) ++violations;
        if (!(x - c >= M * (z - 1))) ++violations;
      }
      double p = rep.fulfilled[o] ? 1 : 0;
      double s = static_cast<double>(order.lines.size());
      if (!(zsum - s + delta <= M * p)) ++violations;
      if (!(zsum - s >= M * (p - 1))) ++violations;
      sum_p += rep.fulfilled[o] ? 1 : 0;
    }
    if (rep.rate * rep.order_count != sum_p || rep.fulfilled_count != sum_p) ++violations;
  }
  v.pass = violations == 0;
  v.detail = "100 (instance, plan) pairs, " + std::to_string(violations) + " constraint violations";
  return v;
}

// ------------------------------------------------------------------ 3

Verdict reference_average() {
  // Reference daily rates (percent) with a stated average of 65.91%.
  const std::vector<double> daily = {72.11, 58.21, 64.02, 66.14, 69.32, 61.91, 69.66};
  std::vector<double> rates;
  for (double d : daily) rates.push_back(d / 100.0);
  double mean = average_rate(std::span<const double>(rates)) * 100.0;
  Verdict v;
  v.pass = std::abs(mean - 65.91) <= 0.005;
  std::ostringstream s;
  s.precision(6);
  s << "mean of daily rates " << std::fixed << mean << "% vs reference 65.91%";
  v.detail = s.str();
  return v;
}

// ------------------------------------------------------------------ 4

Verdict smoothing_monotone() {
  Verdict v;
  int bad = 0;
  for (std::uint64_t i = 0; i < 50; ++i) {
    std::mt19937_64 rng(9300 + i);
    std::vector<OrderLine> lines;
    int days = 3 + static_cast<int>(rng() % 6);
    for (int d = 0; d < days; ++d) {
      auto l = random_day_lines(rng, 10, 6 + static_cast<int>(rng() % 10), kDay + d);
      lines.insert(lines.end(), l.begin(), l.end());
    }
    auto h = validate_and_index(lines);
    labeling::LabelSet set;
    for (const auto& day : h.days)
      for (const auto& id : day.sku_ids) {
        labeling::LabelRow r;
        r.day = day.day;
        r.sku_id = id;
        r.y_star = rng() % 2 ? 1 : 0;
        r.x_star = r.y_star ? 2.0 + static_cast<double>(rng() % 5) : 0.0;
        r.y_cs = r.y_ts = r.y_final = r.y_star;
        set.rows.push_back(r);
      }
    labeling::SmoothingConfig cfg{1 + static_cast<int>(rng() % 5), 0.3 + 0.1 * static_cast<double>(rng() % 7),
                                  0.3 + 0.1 * static_cast<double>(rng() % 7)};
    auto s = labeling::smooth_labels(set, h, cfg, i);
    if (s.rows.size() != set.rows.size()) ++bad;
    for (std::size_t k = 0; k < s.rows.size() && k < set.rows.size(); ++k)
      if (s.rows[k].y_final < set.rows[k].y_star) ++bad;
    auto same = labeling::smooth_labels(set, h, {cfg.lambda, 1.0, 1.0}, i);
    for (std::size_t k = 0; k < same.rows.size(); ++k)
      if (same.rows[k].y_final != set.rows[k].y_star) ++bad;
  }
  v.pass = bad == 0;
  v.detail = "50 label sets, " + std::to_string(bad) + " violations";
  return v;
}

// ------------------------------------------------------------------ 5

Verdict om2_feasibility() {
  Verdict v;
  int bad = 0, pto_changed = 0;
  for (std::uint64_t i = 0; i < 1000; ++i) {
    std::mt19937_64 rng(11000 + i);
    int n = static_cast<int>(rng() % 40);
    WarehouseConfig w{static_cast<int>(rng() % 12), static_cast<int>(rng() % 200), 1 + static_cast<int>(rng() % 10),
                      7};
    std::vector<predict::PredictionRow> rows;
    std::uniform_real_distribution<double> u(1e-6, 1 - 1e-6);
    std::exponential_distribution<double> e(0.05);
    for (int k = 0; k < n; ++k) rows.push_back({kDay, "S" + std::to_string(k), u(rng), e(rng), e(rng)});
    om2::PostprocessConfig pc;
    pc.warehouse = w;
    for (auto algo : {om2::Algo::otpto, om2::Algo::pto}) {
      pc.algo = algo;
      auto plan = om2::postprocess_plan(kDay, rows, pc);
      if (static_cast<int>(plan.sku_count()) > w.max_skus) ++bad;
      if (plan.total_units() > w.max_units) ++bad;
      for (const auto& [id, q] : plan.entries())
        if (q < w.min_units) ++bad;
    }
    pc.algo = om2::Algo::pto;
    auto base = om2::postprocess_plan(kDay, rows, pc);
    auto moved = rows;
    for (auto& r : moved) {
      r.y_hat = u(rng);
      r.x_hat = e(rng);
    }
    if (!(om2::postprocess_plan(kDay, moved, pc) == base)) ++pto_changed;
  }
  v.pass = bad == 0 && pto_changed == 0;
  v.detail = "1000 bundles: " + std::to_string(bad) + " limit violations, " + std::to_string(pto_changed) +
             " PTO plans moved by y_hat/x_hat";
  return v;
}

// ------------------------------------------------------------------ 6

double pair_auc(const std::vector<double>& y, const std::vector<double>& s) {
  double num = 0, pairs = 0;
  for (std::size_t i = 0; i < y.size(); ++i)
    for (std::size_t j = 0; j < y.size(); ++j)
      if (y[i] == 1 && y[j] == 0) {
        pairs += 1;
        num += s[i] > s[j] ? 1.0 : s[i] == s[j] ? 0.5 : 0.0;
      }
  return num / pairs;
}

Verdict learner_sanity() {
  Verdict v;
  std::ostringstream d;
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(-1, 1);
  ml::Matrix x(200, 2);
  std::vector<double> y(200);
  for (std::size_t r = 0; r < 200; ++r) {
    x(r, 0) = u(rng);
    x(r, 1) = u(rng);
    y[r] = 2 * x(r, 0) - x(r, 1) > 0.1 ? 1.0 : 0.0;
  }
  auto clf = ml::train_gbdt(x, y, {}, {}, ml::GbdtParams::pm1());
  double auc = ml::eval_metric(ml::Metric::auc, y, clf.predict(x));
  d << "train AUC " << auc;
  if (auc < 0.99) v.pass = false;

  std::uniform_real_distribution<double> u01(0, 1);
  auto make = [&](std::size_t n, ml::Matrix& m, std::vector<double>& t) {
    m = ml::Matrix(n, 2);
    t.resize(n);
    for (std::size_t r = 0; r < n; ++r) {
      m(r, 0) = u01(rng);
      m(r, 1) = u01(rng);
      t[r] = 8 * m(r, 0) + 4 * m(r, 1) * m(r, 0);
    }
  };
  ml::Matrix tx, vx;
  std::vector<double> ty, vy;
  make(2000, tx, ty);
  make(500, vx, vy);
  auto reg = ml::train_gbdt(tx, ty, vx, vy, ml::GbdtParams::pm2());
  double mean = std::accumulate(vy.begin(), vy.end(), 0.0) / static_cast<double>(vy.size());
  double sd = 0;
  for (double t : vy) sd += (t - mean) * (t - mean);
  sd = std::sqrt(sd / static_cast<double>(vy.size()));
  double rmse = ml::eval_metric(ml::Metric::rmse, vy, reg.predict(vx));
  d << "; RMSE/SD " << rmse / sd;
  if (rmse > 0.05 * sd) v.pass = false;

  double worst = 0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    std::mt19937_64 r2(500 + s);
    std::vector<double> yy(50), ss(50);
    for (auto& t : yy) t = static_cast<double>(r2() % 2);
    yy[0] = 0;
    yy[1] = 1;
    for (auto& t : ss) t = static_cast<double>(r2() % 12) / 7.0;
    worst = std::max(worst, std::abs(ml::eval_metric(ml::Metric::auc, yy, ss) - pair_auc(yy, ss)));
  }
  d << "; max |AUC - pair oracle| on n=50: " << worst;
  if (worst > 1e-12) v.pass = false;
  v.detail = d.str();
  return v;
}

// ------------------------------------------------------------------ 7, 8

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

pipeline::PipelineConfig benchmark_config() {
  pipeline::PipelineConfig c;  // defaults are the desk-scale profile
  c.seeds = {1, 2, 3, 4, 5};
  return c;
}

Verdict directional(const pipeline::MultiReport& m, double secs) {
  Verdict v;
  int dominance = 0, unproven = 0;
  double rel_o = 0, rel_p = 0;
  for (const auto& r : m.runs) {
    for (const auto& d : r.days) {
      if (d.opt < std::max(d.otpto, d.pto)) ++dominance;
      if (!d.opt_proven) ++unproven;
    }
    rel_o += 1 - r.mean_otpto() / r.mean_opt();
    rel_p += 1 - r.mean_pto() / r.mean_opt();
  }
  const double n = static_cast<double>(m.runs.size());
  rel_o /= n;
  rel_p /= n;
  std::ostringstream d;
  d.precision(4);
  d << std::fixed << "mean OTPTO-PTO " << 100 * m.mean_diff() << "%; abs gap OTPTO " << 100 * m.mean_gap_otpto()
    << "% vs PTO " << 100 * m.mean_gap_pto() << "%; rel gap " << 100 * rel_o << "% vs " << 100 * rel_p
    << "%; per seed diff";
  for (const auto& r : m.runs) d << ' ' << 100 * r.mean_diff();
  d << "; dominance violations " << dominance << " (unproven OPT days " << unproven << "); " << secs << " s";
  v.pass = dominance == 0 && m.mean_diff() >= 0 && m.mean_gap_otpto() <= m.mean_gap_pto() && rel_o <= rel_p &&
           secs < 1800;
  v.detail = d.str();
  return v;
}

Verdict identical_trees(const fs::path& a, const fs::path& b) {
  Verdict v;
  int files = 0, diffs = 0;
  std::string first;
  for (const auto& entry : fs::recursive_directory_iterator(a)) {
    if (!entry.is_regular_file()) continue;
    auto rel = fs::relative(entry.path(), a);
    if (rel == "config.json") continue;  // records the worker count
    ++files;
    if (!fs::exists(b / rel) || slurp(entry.path()) != slurp(b / rel)) {
      ++diffs;
      if (first.empty()) first = rel.string();
    }
  }
  v.pass = diffs == 0 && files > 0;
  v.detail = std::to_string(files) + " artifacts compared, " + std::to_string(diffs) + " differ" +
             (first.empty() ? "" : " (first: " + first + ")");
  return v;
}

// ------------------------------------------------------------------ 9

Verdict gmv_tie_break() {
  Verdict v;
  // One order per SKU, room for one SKU: both single-SKU plans fulfil half the
  // orders; B's order is worth more.
  std::vector<OrderLine> lines = {{kDay, "o1", "A", 4, 1000}, {kDay, "o2", "B", 4, 2500}};
  auto day = validate_and_index(lines).days.at(0);
  WarehouseConfig cfg{1, 4, 4, 7};
  om1::SolverConfig rate, gmv;
  gmv.objective_mode = om1::ObjectiveMode::rate_plus_gmv;
  auto r = om1::solve_exact(day, cfg, rate);
  auto g = om1::solve_exact(day, cfg, gmv);
  auto og = om1::brute_force_oracle(day, cfg, om1::ObjectiveMode::rate_plus_gmv);
  auto orr = om1::brute_force_oracle(day, cfg, om1::ObjectiveMode::rate_only);
  // Hand oracle: stocking A fulfils o1 (gmv 40.00), B fulfils o2 (gmv 100.00).
  StockPlan richer(kDay, {{"B", 4}});
  double a_rate = simulate_day(day, StockPlan(kDay, {{"A", 4}})).rate;
  double b_rate = simulate_day(day, richer).rate;
  v.pass = g.plan == richer && og.plan == richer && a_rate == 0.5 && b_rate == 0.5 && r.objective_rate == 0.5 &&
           g.objective_rate == r.objective_rate && orr.objective_rate == r.objective_rate;
  v.detail = "gmv plan {" + (g.plan.entries().empty() ? std::string() : g.plan.entries().begin()->first) +
             "}, rates rate_only " + std::to_string(r.objective_rate) + " / rate_plus_gmv " +
             std::to_string(g.objective_rate);
  return v;
}

void report(int id, const std::string& name, const Verdict& v, bool& all) {
  std::cout << (v.pass ? "PASS" : "FAIL") << " criterion " << id << " (" << name << "): " << v.detail << std::endl;
  all = all && v.pass;
}

template <class F>
Verdict guarded(F f) {
  try {
    return f();
  } catch (const std::exception& e) {
    return {false, std::string("exception: ") + e.what()};
  }
}

}  // namespace

int main(int argc, char** argv) {
  fs::path work = argc > 1 ? fs::path(argv[1]) : fs::temp_directory_path() / "otpto_acceptance";
  bool all = true;
  report(1, "solver exactness", guarded(solver_exactness), all);
  report(2, "fulfillment semantics", guarded(fulfillment_semantics), all);
  report(3, "average rate regression", guarded(reference_average), all);
  report(4, "smoothing monotonicity", guarded(smoothing_monotone), all);
  report(5, "OM2 feasibility", guarded(om2_feasibility), all);
  report(6, "learner sanity", guarded(learner_sanity), all);

  fs::remove_all(work);
  auto cfg = benchmark_config();
  pipeline::MultiReport first;
  Verdict v7 = guarded([&] {
    auto t0 = std::chrono::steady_clock::now();
    first = pipeline::run_pipeline(cfg, {work / "run_a", nullptr});
    return directional(first, seconds_since(t0));
  });
  report(7, "end-to-end directional benchmark", v7, all);
  Verdict v8 = guarded([&] {
    pipeline::run_pipeline(cfg, {work / "run_b", nullptr});
    return identical_trees(work / "run_a", work / "run_b");
  });
  report(8, "determinism", v8, all);
  report(9, "GMV tie-break", guarded(gmv_tie_break), all);
  return all ? 0 : 1;
}
