#include "otpto/om1.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <ostream>

#include "otpto/csv.hpp"
#include "otpto/errors.hpp"

namespace otpto::om1 {

std::string to_string(ObjectiveMode mode) {
  return mode == ObjectiveMode::rate_only ? "rate_only" : "rate_plus_gmv";
}

std::string to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::proven_optimal: return "proven_optimal";
    case SolveStatus::incumbent_with_bound: return "incumbent_with_bound";
    case SolveStatus::infeasible: return "infeasible";
  }
  return "unknown";
}

ObjectiveMode parse_objective_mode(const std::string& text) {
  if (text == "rate_only") return ObjectiveMode::rate_only;
  if (text == "rate_plus_gmv") return ObjectiveMode::rate_plus_gmv;
  throw ValidationError("unknown objective mode '" + text + "'");
}

std::vector<int> candidate_levels(const DayHistory& day, int sku, int min_units) {
  std::vector<int> levels;
  for (const auto& line : day.sku_lines.at(static_cast<std::size_t>(sku))) {
    int level = std::max(min_units, line.cumulative);
    if (levels.empty() || levels.back() != level) levels.push_back(level);
  }
  return levels;
}

std::string milp_file_name(Date day) { return "om1_" + day.str() + ".lp"; }

namespace {

constexpr double kTol = 1e-9;

// Flattened instance. A SKU's stock is described by `cover`: the number of its lines
// (in arrival order) that are supplied. Stock for a cover c > 0 is line_cost[c - 1],
// i.e. max(B, cumulative demand of the c-th line).
struct Problem {
  int n = 0;
  int m = 0;
  int max_skus = 0;
  int max_units = 0;
  bool use_gmv = false;
  std::int64_t total_gmv = 0;
  std::vector<double> value;  // objective weight of each order
  std::vector<std::int64_t> order_gmv;
  std::vector<std::vector<int>> level_cover;  // per SKU, ascending, stock <= N
  std::vector<std::vector<int>> line_order;
  std::vector<std::vector<int>> line_cost;
  std::vector<std::vector<int>> line_qty;
  std::vector<std::vector<std::pair<int, int>>> order_lines;  // (sku, position)

  Problem(const DayHistory& day, const WarehouseConfig& config, ObjectiveMode mode) {
    n = day.order_count();
    m = day.sku_count();
    max_skus = config.max_skus;
    max_units = config.max_units;
    use_gmv = mode == ObjectiveMode::rate_plus_gmv;
    total_gmv = day.total_gmv_cents();
    value.resize(static_cast<std::size_t>(n));
    order_gmv.resize(static_cast<std::size_t>(n));
    order_lines.resize(static_cast<std::size_t>(n));
    for (int o = 0; o < n; ++o) {
      const auto& order = day.orders[static_cast<std::size_t>(o)];
      order_gmv[static_cast<std::size_t>(o)] = order.gmv_cents;
      value[static_cast<std::size_t>(o)] =
          1.0 + (use_gmv && total_gmv > 0 ? static_cast<double>(order.gmv_cents) /
                                                 static_cast<double>(total_gmv)
                                           : 0.0);
      for (const auto& line : order.lines)
        order_lines[static_cast<std::size_t>(o)].emplace_back(line.sku, line.position);
    }
    level_cover.resize(static_cast<std::size_t>(m));
    line_order.resize(static_cast<std::size_t>(m));
    line_cost.resize(static_cast<std::size_t>(m));
    line_qty.resize(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) {
      const auto& lines = day.sku_lines[static_cast<std::size_t>(i)];
      auto si = static_cast<std::size_t>(i);
      for (std::size_t p = 0; p < lines.size(); ++p) {
        int cost = std::max(config.min_units, lines[p].cumulative);
        line_order[si].push_back(lines[p].order);
        line_cost[si].push_back(cost);
        line_qty[si].push_back(lines[p].quantity);
        if (cost > max_units) continue;
        bool last_of_level = p + 1 == lines.size() ||
                             std::max(config.min_units, lines[p + 1].cumulative) != cost;
        if (last_of_level) level_cover[si].push_back(static_cast<int>(p) + 1);
      }
    }
  }

  double score(int count, std::int64_t gmv) const {
    if (!use_gmv || total_gmv <= 0) return count;
    return count + static_cast<double>(gmv) / static_cast<double>(total_gmv);
  }

  int stock(int sku, int cover) const {
    return cover <= 0 ? 0 : line_cost[static_cast<std::size_t>(sku)][static_cast<std::size_t>(cover - 1)];
  }
};

struct Evaluation {
  int count = 0;
  std::int64_t gmv = 0;
  std::vector<int> stock;  // trimmed stock per SKU
  int units = 0;
};

// Scores a cover assignment and trims every SKU down to the smallest level that
// still supplies all of its lines in fulfilled orders.
Evaluation evaluate(const Problem& p, const std::vector<int>& cover) {
  Evaluation ev;
  std::vector<char> ok(static_cast<std::size_t>(p.n), 1);
  for (int o = 0; o < p.n; ++o) {
    for (auto [sku, pos] : p.order_lines[static_cast<std::size_t>(o)]) {
      if (cover[static_cast<std::size_t>(sku)] <= pos) {
        ok[static_cast<std::size_t>(o)] = 0;
        break;
      }
    }
    if (ok[static_cast<std::size_t>(o)]) {
      ++ev.count;
      ev.gmv += p.order_gmv[static_cast<std::size_t>(o)];
    }
  }
  ev.stock.assign(static_cast<std::size_t>(p.m), 0);
  for (int i = 0; i < p.m; ++i) {
    auto si = static_cast<std::size_t>(i);
    int last = -1;
    for (int pos = 0; pos < cover[si]; ++pos)
      if (ok[static_cast<std::size_t>(p.line_order[si][static_cast<std::size_t>(pos)])]) last = pos;
    if (last >= 0) {
      ev.stock[si] = p.line_cost[si][static_cast<std::size_t>(last)];
      ev.units += ev.stock[si];
    }
  }
  return ev;
}

std::vector<int> stocked_set(const std::vector<int>& stock) {
  std::vector<int> set;
  for (std::size_t i = 0; i < stock.size(); ++i)
    if (stock[i] > 0) set.push_back(static_cast<int>(i));
  return set;
}

// Residual tie-break for equal objective: fewer units, then lexicographically
// smaller SKU set (day-local indices follow SKU id order), then smaller quantities
// in SKU order.
bool tie_break_prefers(const Evaluation& a, const std::vector<int>& set_a, const Evaluation& b,
                       const std::vector<int>& set_b) {
  if (a.units != b.units) return a.units < b.units;
  if (set_a != set_b) return set_a < set_b;
  return a.stock < b.stock;
}

double quick_score(const Problem& p, const std::vector<int>& cover) {
  int count = 0;
  std::int64_t gmv = 0;
  for (int o = 0; o < p.n; ++o) {
    bool ok = true;
    for (auto [sku, pos] : p.order_lines[static_cast<std::size_t>(o)]) {
      if (cover[static_cast<std::size_t>(sku)] <= pos) {
        ok = false;
        break;
      }
    }
    if (ok) {
      ++count;
      gmv += p.order_gmv[static_cast<std::size_t>(o)];
    }
  }
  return p.score(count, gmv);
}

// Greedy construction followed by add/drop/swap local search. Every SKU is stocked
// at its largest level that still fits the remaining units.
std::vector<int> heuristic_cover(const Problem& p) {
  std::vector<int> cover(static_cast<std::size_t>(p.m), 0);
  auto max_cover_within = [&](int sku, int units_left) {
    const auto& levels = p.level_cover[static_cast<std::size_t>(sku)];
    int best = 0;
    for (int c : levels)
      if (p.stock(sku, c) <= units_left) best = c;
    return best;
  };
  auto units_of = [&](const std::vector<int>& cv) {
    int u = 0;
    for (int i = 0; i < p.m; ++i) u += p.stock(i, cv[static_cast<std::size_t>(i)]);
    return u;
  };
  auto selected = [&](const std::vector<int>& cv) {
    return static_cast<int>(std::count_if(cv.begin(), cv.end(), [](int c) { return c > 0; }));
  };
  // Fractional potential: each open order spreads its value over the SKUs it still lacks.
  auto potential = [&](const std::vector<int>& cv) {
    std::vector<double> pot(static_cast<std::size_t>(p.m), 0.0);
    for (int o = 0; o < p.n; ++o) {
      int missing = 0;
      bool dead = false;
      for (auto [sku, pos] : p.order_lines[static_cast<std::size_t>(o)]) {
        int c = cv[static_cast<std::size_t>(sku)];
        if (c == 0) ++missing;
        else if (c <= pos) dead = true;
      }
      if (dead || missing == 0) continue;
      for (auto [sku, pos] : p.order_lines[static_cast<std::size_t>(o)])
        if (cv[static_cast<std::size_t>(sku)] == 0)
          pot[static_cast<std::size_t>(sku)] += p.value[static_cast<std::size_t>(o)] / missing;
    }
    return pot;
  };

  while (selected(cover) < p.max_skus) {
    int units_left = p.max_units - units_of(cover);
    auto pot = potential(cover);
    double base_score = quick_score(p, cover);
    int best_sku = -1;
    double best_gain = 0.0;
    for (int i = 0; i < p.m; ++i) {
      if (cover[static_cast<std::size_t>(i)] > 0) continue;
      int c = max_cover_within(i, units_left);
      if (c == 0 || pot[static_cast<std::size_t>(i)] <= 0) continue;
      cover[static_cast<std::size_t>(i)] = c;
      double gain_score = quick_score(p, cover);
      cover[static_cast<std::size_t>(i)] = 0;
      double gain = gain_score - base_score + 1e-3 * pot[static_cast<std::size_t>(i)];
      if (gain > best_gain + kTol) {
        best_gain = gain;
        best_sku = i;
      }
    }
    if (best_sku < 0) break;
    cover[static_cast<std::size_t>(best_sku)] = max_cover_within(best_sku, units_left);
  }

  double current_score = quick_score(p, cover);
  for (int pass = 0; pass < 20; ++pass) {
    bool improved = false;
    for (int out = -1; out < p.m && !improved; ++out) {
      if (out >= 0 && cover[static_cast<std::size_t>(out)] == 0) continue;
      int saved_out = out >= 0 ? cover[static_cast<std::size_t>(out)] : 0;
      if (out >= 0) cover[static_cast<std::size_t>(out)] = 0;
      int units_left = p.max_units - units_of(cover);
      bool room = selected(cover) < p.max_skus;
      for (int in = 0; in < p.m && !improved; ++in) {
        if (in == out) continue;
        if (cover[static_cast<std::size_t>(in)] > 0 || !room) continue;
        int c = max_cover_within(in, units_left);
        if (c == 0) continue;
        cover[static_cast<std::size_t>(in)] = c;
        double s = quick_score(p, cover);
        if (s > current_score + kTol) {
          current_score = s;
          improved = true;
        } else {
          cover[static_cast<std::size_t>(in)] = 0;
        }
      }
      if (!improved && out >= 0) cover[static_cast<std::size_t>(out)] = saved_out;
    }
    if (!improved) break;
  }
  return cover;
}

class BranchAndBound {
 public:
  BranchAndBound(const Problem& p, const SolverConfig& cfg)
      : p_(p),
        cfg_(cfg),
        cover_(static_cast<std::size_t>(p.m), -1),
        missing_(static_cast<std::size_t>(p.n), 0),
        dead_(static_cast<std::size_t>(p.n), 0),
        load_(static_cast<std::size_t>(p.m), 0.0),
        load_prev_(static_cast<std::size_t>(p.m), 0.0),
        attributed_(static_cast<std::size_t>(p.m)) {
    for (int o = 0; o < p.n; ++o)
      missing_[static_cast<std::size_t>(o)] =
          static_cast<int>(p.order_lines[static_cast<std::size_t>(o)].size());
    for (int i = 0; i < p.m; ++i)
      attributed_[static_cast<std::size_t>(i)].assign(p.line_order[static_cast<std::size_t>(i)].size(), 0);

    // Branching order: SKUs by how many of their lines an affordable level can cover.
    branch_order_.resize(static_cast<std::size_t>(p.m));
    std::iota(branch_order_.begin(), branch_order_.end(), 0);
    std::vector<int> potential(static_cast<std::size_t>(p.m));
    for (int i = 0; i < p.m; ++i) {
      const auto& lv = p.level_cover[static_cast<std::size_t>(i)];
      potential[static_cast<std::size_t>(i)] = lv.empty() ? 0 : lv.back();
    }
    std::stable_sort(branch_order_.begin(), branch_order_.end(),
                     [&](int a, int b) { return potential[static_cast<std::size_t>(a)] > potential[static_cast<std::size_t>(b)]; });
    cap_units_ = p.max_units;
    start_ = std::chrono::steady_clock::now();
  }

  void seed_incumbent(const std::vector<int>& cover) {
    auto ev = evaluate(p_, cover);
    best_score_ = p_.score(ev.count, ev.gmv);
    best_ = std::move(ev);
    best_set_ = stocked_set(best_.stock);
  }

  void run() {
    // SKUs that cannot be stocked within N at any level are fixed out up front.
    for (int i = 0; i < p_.m; ++i)
      if (p_.level_cover[static_cast<std::size_t>(i)].empty()) assign(i, 0);
    dfs(0);
    if (aborted_) return;
    // Second pass: the optimum value is known, now visit every plan that reaches it
    // with no more units than the incumbent so the residual tie-break is exact.
    tie_pass_ = true;
    cap_units_ = std::min(cap_units_, best_.units);
    tie_start_nodes_ = nodes_;
    dfs(0);
    if (aborted_) {
      aborted_ = false;
      tie_break_incomplete_ = true;
    }
  }

  bool tie_break_incomplete() const { return tie_break_incomplete_; }

  bool aborted() const { return aborted_; }
  long nodes() const { return nodes_; }
  const Evaluation& best() const { return best_; }
  double best_score() const { return best_score_; }
  double open_bound() const { return open_bound_; }

 private:
  const Problem& p_;
  const SolverConfig& cfg_;
  std::vector<int> branch_order_;
  std::vector<int> cover_;  // -1 undecided, 0 not stocked, >0 lines covered
  std::vector<int> missing_;  // undecided SKUs per order
  std::vector<int> dead_;     // decided SKUs per order that leave it uncovered
  int count_ = 0;
  std::int64_t gmv_ = 0;
  int used_skus_ = 0;
  int used_units_ = 0;

  Evaluation best_;
  double best_score_ = -1.0;
  std::vector<int> best_set_;

  long nodes_ = 0;
  int cap_units_ = 0;  // N, or the incumbent's units during the tie pass
  long checks_ = 0;
  long tie_start_nodes_ = 0;  // own counter: pruned nodes would otherwise skip the clock
  bool aborted_ = false;
  bool tie_pass_ = false;
  bool tie_break_incomplete_ = false;
  double open_bound_ = -1.0;
  std::chrono::steady_clock::time_point start_;

  std::vector<double> load_, load_prev_;
  std::vector<std::vector<int>> attributed_;
  struct OpenOrder {
    int order;
    int need_units;
    double value;
  };
  std::vector<OpenOrder> open_;

  bool open(int o) const {
    return dead_[static_cast<std::size_t>(o)] == 0 && missing_[static_cast<std::size_t>(o)] > 0;
  }

  void assign(int sku, int cover) {
    auto si = static_cast<std::size_t>(sku);
    cover_[si] = cover;
    if (cover > 0) {
      ++used_skus_;
      used_units_ += p_.stock(sku, cover);
    }
    const auto& orders = p_.line_order[si];
    for (std::size_t pos = 0; pos < orders.size(); ++pos) {
      auto o = static_cast<std::size_t>(orders[pos]);
      --missing_[o];
      if (static_cast<int>(pos) >= cover) {
        ++dead_[o];
      } else if (missing_[o] == 0 && dead_[o] == 0) {
        ++count_;
        gmv_ += p_.order_gmv[o];
      }
    }
  }

  void unassign(int sku) {
    auto si = static_cast<std::size_t>(sku);
    int cover = cover_[si];
    const auto& orders = p_.line_order[si];
    for (std::size_t pos = 0; pos < orders.size(); ++pos) {
      auto o = static_cast<std::size_t>(orders[pos]);
      if (static_cast<int>(pos) >= cover) {
        --dead_[o];
      } else if (missing_[o] == 0 && dead_[o] == 0) {
        --count_;
        gmv_ -= p_.order_gmv[o];
      }
      ++missing_[o];
    }
    if (cover > 0) {
      --used_skus_;
      used_units_ -= p_.stock(sku, cover);
    }
    cover_[si] = -1;
  }

  void consider_incumbent() {
    double s = p_.score(count_, gmv_);
    if (s < best_score_ - kTol) return;
    std::vector<int> cv(cover_.size());
    for (std::size_t i = 0; i < cv.size(); ++i) cv[i] = std::max(cover_[i], 0);
    auto ev = evaluate(p_, cv);
    auto set = stocked_set(ev.stock);
    if (s > best_score_ + kTol || tie_break_prefers(ev, set, best_, best_set_)) {
      best_score_ = s;
      best_ = std::move(ev);
      best_set_ = std::move(set);
      if (tie_pass_) cap_units_ = std::min(cap_units_, best_.units);
    }
  }

  double top_sum(std::vector<double>& values, int k) const {
    if (k <= 0 || values.empty()) return 0.0;
    if (static_cast<std::size_t>(k) < values.size()) {
      std::nth_element(values.begin(), values.begin() + (k - 1), values.end(), std::greater<>());
      values.resize(static_cast<std::size_t>(k));
    }
    return std::accumulate(values.begin(), values.end(), 0.0);
  }

  // Upper bound on the objective of any completion of the current node.
  double bound() {
    const int rem_skus = p_.max_skus - used_skus_;
    const int rem_units = cap_units_ - used_units_;
    const double current = p_.score(count_, gmv_);
    if (rem_skus <= 0) return current;

    // Units an undecided SKU must hold to reach a line include every earlier line
    // that can no longer be fulfilled; attribute those to the next live line.
    for (int i = 0; i < p_.m; ++i) {
      auto si = static_cast<std::size_t>(i);
      if (cover_[si] != -1) continue;
      int acc = 0;
      const auto& orders = p_.line_order[si];
      for (std::size_t pos = 0; pos < orders.size(); ++pos) {
        acc += p_.line_qty[si][pos];
        if (dead_[static_cast<std::size_t>(orders[pos])] == 0) {
          attributed_[si][pos] = acc;
          acc = 0;
        }
      }
    }

    open_.clear();
    double open_value = 0.0;
    for (int o = 0; o < p_.n; ++o) {
      auto so = static_cast<std::size_t>(o);
      if (!open(o) || missing_[so] > rem_skus) continue;
      int need_cost = 0;
      int need_units = 0;
      for (auto [sku, pos] : p_.order_lines[so]) {
        auto si = static_cast<std::size_t>(sku);
        if (cover_[si] != -1) continue;
        need_cost += p_.line_cost[si][static_cast<std::size_t>(pos)];
        need_units += attributed_[si][static_cast<std::size_t>(pos)];
      }
      if (need_cost > rem_units) continue;
      open_.push_back({o, need_units, p_.value[so]});
      open_value += p_.value[so];
    }
    if (open_.empty()) return current;

    // Capacity relaxation: fractional knapsack over open orders.
    std::sort(open_.begin(), open_.end(), [](const OpenOrder& a, const OpenOrder& b) {
      double ra = a.value / a.need_units, rb = b.value / b.need_units;
      if (ra != rb) return ra > rb;
      return a.order < b.order;
    });
    double units_bound = 0.0;
    int left = rem_units;
    for (const auto& oo : open_) {
      if (oo.need_units <= left) {
        units_bound += oo.value;
        left -= oo.need_units;
      } else {
        units_bound += oo.value * left / oo.need_units;
        break;
      }
    }

    // SKU-count relaxation: attribute each order's value to the SKUs it lacks; any
    // set of rem_skus new SKUs fulfills at most the sum of its largest loads.
    double skus_bound = std::numeric_limits<double>::infinity();
    std::vector<double> loads;
    for (int pass = 0; pass < 3; ++pass) {
      std::fill(load_.begin(), load_.end(), 0.0);
      for (const auto& oo : open_) {
        const auto& lines = p_.order_lines[static_cast<std::size_t>(oo.order)];
        if (pass == 0) {
          double share = oo.value / missing_[static_cast<std::size_t>(oo.order)];
          for (auto [sku, pos] : lines)
            if (cover_[static_cast<std::size_t>(sku)] == -1) load_[static_cast<std::size_t>(sku)] += share;
        } else {
          int target = -1;
          for (auto [sku, pos] : lines) {
            if (cover_[static_cast<std::size_t>(sku)] != -1) continue;
            if (target < 0 || load_prev_[static_cast<std::size_t>(sku)] < load_prev_[static_cast<std::size_t>(target)])
              target = sku;
          }
          load_[static_cast<std::size_t>(target)] += oo.value;
        }
      }
      loads.clear();
      for (int i = 0; i < p_.m; ++i)
        if (load_[static_cast<std::size_t>(i)] > 0) loads.push_back(load_[static_cast<std::size_t>(i)]);
      skus_bound = std::min(skus_bound, top_sum(loads, rem_skus));
      std::swap(load_, load_prev_);
    }

    double extra = std::min({open_value, units_bound, skus_bound});
    if (!p_.use_gmv) extra = std::floor(extra + kTol);
    return current + extra;
  }

  bool limits_hit() {
    if (cfg_.node_limit && nodes_ > *cfg_.node_limit) return true;
    if (tie_pass_ && nodes_ - tie_start_nodes_ > cfg_.tie_break_node_limit) return true;
    if (cfg_.time_limit_seconds && (++checks_ & 255) == 0) {
      std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start_;
      if (elapsed.count() > *cfg_.time_limit_seconds) return true;
    }
    return false;
  }

  bool can_improve(double b) const {
    if (tie_pass_) return b > best_score_ - kTol && used_units_ <= best_.units;
    if (!p_.use_gmv) return b > best_score_ + 0.5;
    return b > best_score_ + kTol;
  }

  void dfs(std::size_t depth) {
    ++nodes_;
    consider_incumbent();
    if (used_skus_ >= p_.max_skus) return;
    // Skip SKUs whose lines all sit in orders that can no longer be fulfilled.
    while (depth < branch_order_.size()) {
      int sku = branch_order_[depth];
      const auto& orders = p_.line_order[static_cast<std::size_t>(sku)];
      bool live = std::any_of(orders.begin(), orders.end(),
                              [&](int o) { return dead_[static_cast<std::size_t>(o)] == 0; });
      if (live && !p_.level_cover[static_cast<std::size_t>(sku)].empty()) break;
      ++depth;
    }
    if (depth >= branch_order_.size()) return;

    double b = bound();
    if (!can_improve(b)) return;
    if (aborted_ || limits_hit()) {
      aborted_ = true;
      if (!tie_pass_) open_bound_ = std::max(open_bound_, b);
      return;
    }

    const int sku = branch_order_[depth];
    const auto si = static_cast<std::size_t>(sku);
    const int rem_units = cap_units_ - used_units_;
    const auto& levels = p_.level_cover[si];
    const auto& orders = p_.line_order[si];

    // A level is worth trying only if it newly covers a line of a live order;
    // otherwise the next lower level supplies the same orders with fewer units.
    std::vector<int> children;
    int prev = 0;
    std::vector<int> useful;
    for (int c : levels) {
      if (p_.stock(sku, c) > rem_units) break;
      bool adds_live = false;
      for (int pos = prev; pos < c; ++pos)
        if (dead_[static_cast<std::size_t>(orders[static_cast<std::size_t>(pos)])] == 0) adds_live = true;
      if (adds_live) useful.push_back(c);
      prev = c;
    }
    if (!useful.empty()) {
      if (!tie_pass_ && units_slack()) {
        children.push_back(useful.back());
      } else {
        children.assign(useful.rbegin(), useful.rend());
      }
    }
    children.push_back(0);

    for (int c : children) {
      assign(sku, c);
      dfs(depth + 1);
      unassign(sku);
      if (aborted_) {
        if (!tie_pass_) open_bound_ = std::max(open_bound_, b);
        return;
      }
      if (!can_improve(b)) return;
    }
  }

  // True when the remaining units could hold every SKU that may still be chosen at
  // its largest affordable level, so lower levels are dominated.
  bool units_slack() const {
    const int rem_units = cap_units_ - used_units_;
    const int rem_skus = p_.max_skus - used_skus_;
    std::vector<int> costs;
    for (int i = 0; i < p_.m; ++i) {
      auto si = static_cast<std::size_t>(i);
      if (cover_[si] != -1) continue;
      int top = 0;
      for (int c : p_.level_cover[si])
        if (p_.stock(i, c) <= rem_units) top = p_.stock(i, c);
      if (top > 0) costs.push_back(top);
    }
    if (static_cast<int>(costs.size()) > rem_skus) {
      std::nth_element(costs.begin(), costs.begin() + (rem_skus - 1), costs.end(), std::greater<>());
      costs.resize(static_cast<std::size_t>(rem_skus));
    }
    long total = std::accumulate(costs.begin(), costs.end(), 0L);
    return total <= rem_units;
  }
};

SolveOutcome make_outcome(const DayHistory& day, const Problem& p, const Evaluation& ev) {
  SolveOutcome out;
  StockPlan::Entries entries;
  for (int i = 0; i < p.m; ++i)
    if (ev.stock[static_cast<std::size_t>(i)] > 0)
      entries.emplace(day.sku_ids[static_cast<std::size_t>(i)], ev.stock[static_cast<std::size_t>(i)]);
  out.plan = StockPlan(day.day, std::move(entries));
  out.fulfilled_count = ev.count;
  out.objective_rate = static_cast<double>(ev.count) / p.n;
  if (p.use_gmv && p.total_gmv > 0)
    out.objective_gmv_term =
        static_cast<double>(ev.gmv) / static_cast<double>(p.total_gmv) / p.n;
  return out;
}

}  // namespace

SolveOutcome solve_exact(const DayHistory& day, const WarehouseConfig& config,
                         const SolverConfig& solver) {
  if (day.orders.empty())
    throw EmptyDayError("day " + day.day.str() + " has no orders to optimize");
  Problem p(day, config, solver.objective_mode);
  if (config.max_skus <= 0 || config.max_units < config.min_units) {
    SolveOutcome out;
    out.plan = StockPlan(day.day, {});
    return out;
  }

  BranchAndBound search(p, solver);
  search.seed_incumbent(heuristic_cover(p));
  search.run();

  SolveOutcome out = make_outcome(day, p, search.best());
  out.nodes_explored = search.nodes();
  out.tie_break_complete = !search.tie_break_incomplete();
  if (search.aborted()) {
    out.status = SolveStatus::incumbent_with_bound;
    // Every plan's order count is at most its score, so the floor bounds the rate.
    out.upper_bound = std::floor(std::max(search.best_score(), search.open_bound()) + 1e-9) / p.n;
  } else {
    out.status = SolveStatus::proven_optimal;
    out.upper_bound = out.objective_rate;
  }
  return out;
}

SolveOutcome brute_force_oracle(const DayHistory& day, const WarehouseConfig& config,
                                ObjectiveMode mode) {
  const auto m = static_cast<std::size_t>(day.sku_count());
  if (m > 8) throw SizeError("brute_force_oracle supports at most 8 SKUs, got " + std::to_string(m));
  std::vector<std::vector<int>> options(m);
  double combinations = 1.0;
  for (std::size_t i = 0; i < m; ++i) {
    options[i].push_back(0);
    for (int level : candidate_levels(day, static_cast<int>(i), config.min_units))
      options[i].push_back(level);
    combinations *= static_cast<double>(options[i].size());
  }
  if (combinations > 1e7)
    throw SizeError("brute_force_oracle guard: " + format_double(combinations) + " combinations");

  SolveOutcome best;
  best.plan = StockPlan(day.day, {});
  if (day.orders.empty()) return best;

  const double total_gmv = static_cast<double>(day.total_gmv_cents());
  const double n = day.order_count();
  double best_obj = -1.0;
  double best_units = 0.0;
  std::vector<std::string> best_set;
  std::vector<double> best_qty;

  std::vector<std::size_t> digit(m, 0);
  while (true) {
    int skus = 0;
    long units = 0;
    for (std::size_t i = 0; i < m; ++i) {
      int q = options[i][digit[i]];
      if (q > 0) {
        ++skus;
        units += q;
      }
    }
    if (skus <= config.max_skus && units <= config.max_units) {
      StockPlan::Entries entries;
      for (std::size_t i = 0; i < m; ++i)
        if (options[i][digit[i]] > 0) entries.emplace(day.sku_ids[i], options[i][digit[i]]);
      StockPlan plan(day.day, std::move(entries));
      auto report = simulate_day(day, plan);
      double gmv_term = mode == ObjectiveMode::rate_plus_gmv && total_gmv > 0
                            ? static_cast<double>(report.fulfilled_gmv_cents) / total_gmv / n
                            : 0.0;
      double obj = report.rate + gmv_term;
      std::vector<std::string> set;
      std::vector<double> qty;
      for (const auto& [sku, q] : plan.entries()) {
        set.push_back(sku);
        qty.push_back(q);
      }
      bool better = obj > best_obj + 1e-12;
      if (!better && std::abs(obj - best_obj) <= 1e-12) {
        if (static_cast<double>(units) != best_units) better = static_cast<double>(units) < best_units;
        else if (set != best_set) better = set < best_set;
        else better = qty < best_qty;
      }
      if (better) {
        best_obj = obj;
        best_units = static_cast<double>(units);
        best_set = std::move(set);
        best_qty = std::move(qty);
        best.plan = std::move(plan);
        best.objective_rate = report.rate;
        best.objective_gmv_term = gmv_term;
        best.fulfilled_count = report.fulfilled_count;
      }
    }
    ++best.nodes_explored;
    std::size_t k = 0;
    while (k < m && ++digit[k] == options[k].size()) digit[k++] = 0;
    if (k == m) break;
  }
  best.status = SolveStatus::proven_optimal;
  best.upper_bound = best.objective_rate;
  return best;
}

namespace {
// Plain decimal notation; some LP readers reject exponents.
std::string lp_num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}
}  // namespace

void write_milp(std::ostream& out, const DayHistory& day, const WarehouseConfig& config,
                const SolverConfig& solver) {
  const int n = day.order_count();
  const int m = day.sku_count();
  const double big_m = solver.big_m;
  const double delta = solver.delta;
  const double total_gmv = static_cast<double>(day.total_gmv_cents());
  const bool gmv = solver.objective_mode == ObjectiveMode::rate_plus_gmv && total_gmv > 0;

  out << "\\ front-end warehouse stocking model for " << day.day.str() << '\n';
  out << "\\ K=" << config.max_skus << " N=" << config.max_units << " B=" << config.min_units
      << " delta=" << lp_num(delta) << " M=" << lp_num(big_m) << '\n';
  for (int i = 0; i < m; ++i) out << "\\ sku " << i << " = " << day.sku_ids[static_cast<std::size_t>(i)] << '\n';
  for (int o = 0; o < n; ++o) out << "\\ order " << o << " = " << day.orders[static_cast<std::size_t>(o)].id << '\n';

  out << "Maximize\n obj:";
  for (int o = 0; o < n; ++o) {
    double w = 1.0;
    if (gmv) w += static_cast<double>(day.orders[static_cast<std::size_t>(o)].gmv_cents) / total_gmv;
    out << (o == 0 ? " " : " + ") << lp_num(w / n) << " p_" << o;
  }
  out << "\nSubject To\n";

  out << " max_skus:";
  for (int i = 0; i < m; ++i) out << (i == 0 ? " " : " + ") << "y_" << i;
  out << " <= " << config.max_skus << '\n';
  out << " max_units:";
  for (int i = 0; i < m; ++i) out << (i == 0 ? " " : " + ") << "x_" << i;
  out << " <= " << config.max_units << '\n';
  for (int i = 0; i < m; ++i)
    out << " min_units_" << i << ": x_" << i << " - " << config.min_units << " y_" << i << " >= 0\n";

  // Line coverage constraints are emitted for the pairs where the SKU is in the order.
  for (int o = 0; o < n; ++o) {
    const auto& order = day.orders[static_cast<std::size_t>(o)];
    for (const auto& line : order.lines) {
      const int i = line.sku;
      out << " cover_lo_" << o << '_' << i << ": x_" << i << " - " << lp_num(big_m) << " z_"
          << o << '_' << i << " <= " << lp_num(line.cumulative - delta) << '\n';
      out << " cover_hi_" << o << '_' << i << ": x_" << i << " - " << lp_num(big_m) << " z_"
          << o << '_' << i << " >= " << lp_num(line.cumulative - big_m) << '\n';
    }
    std::string zsum;
    for (const auto& line : order.lines)
      zsum += (zsum.empty() ? " " : " + ") + ("z_" + std::to_string(o) + "_" + std::to_string(line.sku));
    const int s = order.distinct_skus();
    out << " full_lo_" << o << ":" << zsum << " - " << lp_num(big_m) << " p_" << o
        << " <= " << lp_num(s - delta) << '\n';
    out << " full_hi_" << o << ":" << zsum << " - " << lp_num(big_m) << " p_" << o
        << " >= " << lp_num(s - big_m) << '\n';
  }
  for (int i = 0; i < m; ++i) {
    out << " link_x_" << i << ": x_" << i << " - " << lp_num(big_m) << " y_" << i << " <= 0\n";
    out << " link_y_" << i << ": " << lp_num(big_m) << " x_" << i << " - y_" << i << " >= 0\n";
  }

  out << "Bounds\n";
  for (int i = 0; i < m; ++i)
    out << " 0 <= x_" << i << " <= "
        << std::max(config.min_units, day.sales[static_cast<std::size_t>(i)]) << '\n';
  out << "Binary\n";
  for (int i = 0; i < m; ++i) out << " y_" << i << '\n';
  for (int o = 0; o < n; ++o) {
    out << " p_" << o << '\n';
    for (const auto& line : day.orders[static_cast<std::size_t>(o)].lines)
      out << " z_" << o << '_' << line.sku << '\n';
  }
  out << "End\n";
}

}  // namespace otpto::om1
