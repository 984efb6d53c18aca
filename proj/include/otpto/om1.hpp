#pragma once

// Historical-optimum stocking model: choose which SKUs to stock and how many units,
// subject to the K/N/B limits, so that the largest share of the day's orders is
// fully supplied. Solved exactly by branch-and-bound over per-SKU breakpoint levels.

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "otpto/core.hpp"

namespace otpto::om1 {

enum class ObjectiveMode {
  rate_only,      // maximize (1/n) * sum p_o
  rate_plus_gmv,  // maximize (1/n) * sum (1 + gmv_o / total_gmv) * p_o
};

enum class SolveStatus { proven_optimal, incumbent_with_bound, infeasible };

std::string to_string(ObjectiveMode mode);
std::string to_string(SolveStatus status);
ObjectiveMode parse_objective_mode(const std::string& text);

struct SolverConfig {
  ObjectiveMode objective_mode = ObjectiveMode::rate_only;
  std::optional<double> time_limit_seconds;
  std::optional<long> node_limit;
  // Nodes allowed for the search among optimal plans once the optimum is proven.
  // When it runs out the plan is still optimal but the unit/id tie-break may not be.
  long tie_break_node_limit = 50000;
  // Big-M constants; only used when exporting the MILP.
  double delta = 1e-3;
  double big_m = 1e5;
};

struct SolveOutcome {
  StockPlan plan;
  double objective_rate = 0.0;      // fraction of orders fully fulfilled by `plan`
  double objective_gmv_term = 0.0;  // (1/n) * sum (gmv_o / total_gmv) p_o; 0 in rate_only mode
  SolveStatus status = SolveStatus::proven_optimal;
  double upper_bound = 0.0;  // bound on the best achievable objective_rate
  long nodes_explored = 0;
  int fulfilled_count = 0;
  bool tie_break_complete = true;

  /// Value of the configured objective (rate plus GMV term).
  double objective() const { return objective_rate + objective_gmv_term; }
};

/// Sorted distinct stocking levels max(B, c_oi) of one SKU; these are the only
/// quantities at which an additional order line becomes covered.
std::vector<int> candidate_levels(const DayHistory& day, int sku, int min_units);

/// Exact optimum of the stocking model for one day. Zero-sales SKUs are never
/// stocked, every quantity is a candidate level, and the returned plan is trimmed
/// to the smallest levels that keep its fulfilled orders. Among plans with equal
/// objective, fewer total units win, then the lexicographically smaller SKU-id set,
/// then the smaller quantity vector in SKU-id order. K = 0 or N < B yields the
/// empty plan.
/// Throws EmptyDayError for a day without orders.
SolveOutcome solve_exact(const DayHistory& day, const WarehouseConfig& config,
                         const SolverConfig& solver);

/// Exhaustive enumeration over {0} plus candidate levels per SKU, scored with
/// simulate_day. Refuses (SizeError) beyond 8 SKUs or 10^7 combinations.
SolveOutcome brute_force_oracle(const DayHistory& day, const WarehouseConfig& config,
                                ObjectiveMode mode);

/// Writes the big-M 0-1 MILP for one day in CPLEX LP format.
void write_milp(std::ostream& out, const DayHistory& day, const WarehouseConfig& config,
                const SolverConfig& solver);
std::string milp_file_name(Date day);

}  // namespace otpto::om1
