#include <algorithm>
#include <filesystem>
#include <map>
#include <random>
#include <sstream>

#include "doctest.h"
#include "fixtures.hpp"
#include "otpto/core.hpp"
#include "otpto/csv.hpp"
#include "otpto/errors.hpp"

using namespace otpto;
using otpto::testing::kDay;
using otpto::testing::make_day;

TEST_CASE("cumulative demand is a running sum per SKU") {
  auto day = make_day({{"o1", {{"A", 2}}}, {"o2", {{"A", 3}}}});
  auto a = *day.find_sku("A");
  CHECK(day.orders[0].lines[0].cumulative == 2);
  CHECK(day.orders[1].lines[0].cumulative == 5);
  CHECK(day.sales[static_cast<std::size_t>(a)] == 5);
  CHECK(day.cumulative(0, a) == 2);
  CHECK(day.cumulative(1, a) == 5);
}

TEST_CASE("distinct SKU count and order GMV") {
  auto day = make_day({{"o1", {{"A", 1}, {"B", 1}}}}, {{"A", 300}, {"B", 450}});
  CHECK(day.orders[0].distinct_skus() == 2);
  CHECK(day.orders[0].gmv_cents == 750);
  CHECK(format_cents(day.orders[0].gmv_cents) == "7.50");
}

TEST_CASE("cumulative matches a naive prefix-sum recomputation") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    auto lines = otpto::testing::random_lines(rng, 6, 10);
    auto day = validate_and_index(lines).days.at(0);
    REQUIRE(day.order_count() == 10);
    for (int o = 0; o < day.order_count(); ++o) {
      for (int i = 0; i < day.sku_count(); ++i) {
        // Oracle: sum quantities of SKU i over raw rows of orders o0..o.
        int expected = 0;
        for (int k = 0; k <= o; ++k) {
          for (const auto& l : lines)
            if (l.order_id == day.orders[static_cast<std::size_t>(k)].id &&
                l.sku_id == day.sku_ids[static_cast<std::size_t>(i)])
              expected += l.quantity;
        }
        CHECK(day.cumulative(o, i) == expected);
      }
    }
    for (std::size_t i = 0; i < day.sku_lines.size(); ++i) {
      const auto& sl = day.sku_lines[i];
      CHECK(std::is_sorted(sl.begin(), sl.end(),
                           [](const SkuLine& a, const SkuLine& b) { return a.cumulative < b.cumulative; }));
      CHECK(sl.back().cumulative == day.sales[i]);
    }
  }
}

TEST_CASE("arrival order follows first row, then order id") {
  std::vector<OrderLine> lines = {
      {kDay, "z9", "A", 1, 100},
      {kDay, "a1", "B", 1, 100},
      {kDay, "z9", "C", 1, 100},
  };
  auto day = validate_and_index(lines).days.at(0);
  REQUIRE(day.order_count() == 2);
  CHECK(day.orders[0].id == "z9");
  CHECK(day.orders[0].distinct_skus() == 2);
  CHECK(day.orders[1].id == "a1");
}

TEST_CASE("indexing is idempotent") {
  std::mt19937_64 rng(11);
  auto lines = otpto::testing::random_lines(rng, 5, 12);
  auto more = otpto::testing::random_lines(rng, 4, 6, kDay + 1);
  lines.insert(lines.end(), more.begin(), more.end());
  auto once = validate_and_index(lines);
  auto again = validate_and_index(to_lines(once));
  CHECK(once == again);
  CHECK(once.days.size() == 2);
}

TEST_CASE("validation errors name the offending row") {
  std::vector<OrderLine> dup = {
      {kDay, "o1", "A", 1, 100},
      {kDay, "o1", "B", 1, 100},
      {kDay, "o1", "A", 2, 100},
  };
  try {
    validate_and_index(dup);
    FAIL("expected a validation error");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("row 3") != std::string::npos);
    CHECK(std::string(e.what()).find("row 1") != std::string::npos);
  }
  std::vector<OrderLine> zero = {{kDay, "o1", "A", 0, 100}};
  CHECK_THROWS_AS(validate_and_index(zero), ValidationError);
}

TEST_CASE("simulate_day replays cumulative coverage") {
  auto day = make_day({{"o1", {{"A", 2}}}, {"o2", {{"A", 3}, {"B", 1}}}, {"o3", {{"B", 2}}}});
  StockPlan plan(kDay, {{"A", 5}, {"B", 2}});
  auto r = simulate_day(day, plan);
  CHECK(r.supplied[0] == std::vector<bool>{true});
  CHECK(r.supplied[1] == std::vector<bool>{true, true});
  CHECK(r.supplied[2] == std::vector<bool>{false});
  CHECK(r.fulfilled == std::vector<bool>{true, true, false});
  CHECK(r.fulfilled_count == 2);
  CHECK(r.rate == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("full coverage and empty plans") {
  auto day = make_day({{"o1", {{"A", 1}}}, {"o2", {{"B", 4}}}, {"o3", {{"A", 2}, {"C", 1}}},
                       {"o4", {{"C", 1}}}});
  const int b = 3;
  StockPlan::Entries full;
  for (int i = 0; i < day.sku_count(); ++i)
    full[day.sku_ids[static_cast<std::size_t>(i)]] = std::max(b, day.sales[static_cast<std::size_t>(i)]);
  CHECK(simulate_day(day, StockPlan(kDay, full)).rate == 1.0);
  auto none = simulate_day(day, StockPlan(kDay, {}));
  CHECK(none.rate == 0.0);
  CHECK(none.order_count == 4);
}

TEST_CASE("simulate_day rejects an empty day and a mismatched plan") {
  DayHistory empty;
  empty.day = kDay;
  CHECK_THROWS_AS(simulate_day(empty, StockPlan(kDay, {})), EmptyDayError);
  auto day = make_day({{"o1", {{"A", 1}}}});
  CHECK_THROWS_AS(simulate_day(day, StockPlan(kDay + 1, {})), ValidationError);
}

TEST_CASE("average rate") {
  // Seven reference daily rates whose stated average is 65.91%.
  std::vector<double> daily = {0.7211, 0.5821, 0.6402, 0.6614, 0.6932, 0.6191, 0.6966};
  CHECK(std::abs(average_rate(daily) - 0.6591) <= 0.00005);
  std::vector<double> one = {0.5};
  CHECK(average_rate(one) == 0.5);
  CHECK(std::abs(812.0 / 1126.0 - 0.7211) <= 0.00005);
  std::vector<double> none;
  CHECK_THROWS_AS(average_rate(none), ValidationError);
}

TEST_CASE("order-weighted rate differs from the unweighted mean") {
  FulfillmentReport a, b;
  a.fulfilled_count = 1;
  a.order_count = 1;
  a.rate = 1.0;
  b.fulfilled_count = 0;
  b.order_count = 3;
  b.rate = 0.0;
  std::vector<FulfillmentReport> reports = {a, b};
  CHECK(average_rate(reports) == 0.5);
  CHECK(order_weighted_rate(reports) == 0.25);
}

TEST_CASE("property: raising stock never un-supplies a line") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    auto day = otpto::testing::random_day(rng, 5, 10);
    StockPlan::Entries e;
    std::uniform_int_distribution<int> q(0, 8);
    for (const auto& s : day.sku_ids) e[s] = q(rng);
    auto base = simulate_day(day, StockPlan(kDay, e));
    auto bumped = e;
    auto it = bumped.begin();
    std::advance(it, static_cast<long>(rng() % bumped.size()));
    it->second += 1 + static_cast<double>(rng() % 4);
    auto more = simulate_day(day, StockPlan(kDay, bumped));
    for (std::size_t o = 0; o < base.supplied.size(); ++o)
      for (std::size_t k = 0; k < base.supplied[o].size(); ++k)
        if (base.supplied[o][k]) CHECK(more.supplied[o][k]);
    CHECK(more.rate >= base.rate);
    CHECK(base.rate * base.order_count == doctest::Approx(base.fulfilled_count));
  }
}

TEST_CASE("property: z only changes at breakpoints") {
  // Any stock in [level_k, level_k+1) supplies the same lines as level_k itself.
  std::mt19937_64 rng(5);
  const int b = 2;
  for (int trial = 0; trial < 200; ++trial) {
    auto day = otpto::testing::random_day(rng, 4, 9);
    StockPlan::Entries e, down, up;
    for (int i = 0; i < day.sku_count(); ++i) {
      const auto& id = day.sku_ids[static_cast<std::size_t>(i)];
      // Feasible stock: 0 or at least B.
      double x = rng() % 4 == 0 ? 0.0 : std::uniform_real_distribution<double>(b, 12.0)(rng);
      e[id] = x;
      double lo = 0.0, next = 1e9;
      for (const auto& l : day.sku_lines[static_cast<std::size_t>(i)]) {
        double level = std::max(b, l.cumulative);
        if (level <= x) lo = level;
        else next = std::min(next, level);
      }
      down[id] = x == 0.0 ? 0.0 : std::max(lo, static_cast<double>(b));
      up[id] = x == 0.0 ? 0.0 : std::min(next - 0.25, x + 5.0);
    }
    auto r = simulate_day(day, StockPlan(kDay, e));
    auto rd = simulate_day(day, StockPlan(kDay, down));
    auto ru = simulate_day(day, StockPlan(kDay, up));
    CHECK(r.supplied == rd.supplied);
    CHECK(r.supplied == ru.supplied);
    CHECK(r.fulfilled == ru.fulfilled);
  }
}

TEST_CASE("raising stock to the next breakpoint can supply a new line") {
  // Counterexample to reading the breakpoint property as rounding up: x = 3 lies
  // between levels 2 and 5, and rounding up to 5 also supplies the second order.
  auto day = make_day({{"o1", {{"A", 2}}}, {"o2", {{"A", 3}}}});
  auto at3 = simulate_day(day, StockPlan(kDay, {{"A", 3}}));
  auto at5 = simulate_day(day, StockPlan(kDay, {{"A", 5}}));
  CHECK(at3.fulfilled == std::vector<bool>{true, false});
  CHECK(at5.fulfilled == std::vector<bool>{true, true});
}

TEST_CASE("stock plan feasibility") {
  WarehouseConfig cfg{2, 10, 3, 7};
  CHECK_NOTHROW(StockPlan::feasible(kDay, {{"A", 3}, {"B", 7}}, cfg));
  CHECK_THROWS_AS(StockPlan::feasible(kDay, {{"A", 3}, {"B", 3}, {"C", 3}}, cfg), ValidationError);
  CHECK_THROWS_AS(StockPlan::feasible(kDay, {{"A", 6}, {"B", 6}}, cfg), ValidationError);
  CHECK_THROWS_AS(StockPlan::feasible(kDay, {{"A", 2}}, cfg), ValidationError);
  StockPlan zeros(kDay, {{"A", 0}, {"B", 4}});
  CHECK(zeros.sku_count() == 1);
  CHECK_THROWS_AS(StockPlan(kDay, {{"A", -1}}), ValidationError);
  CHECK_THROWS_AS((WarehouseConfig{1, 4, 5, 7}.validate()), ValidationError);
}

TEST_CASE("prices parse as cents") {
  CHECK(parse_price_cents("4.50") == 450);
  CHECK(parse_price_cents("3") == 300);
  CHECK(parse_price_cents("0.5") == 50);
  CHECK_THROWS_AS(parse_price_cents("1.234"), ValidationError);
  CHECK_THROWS_AS(parse_price_cents("-1"), ValidationError);
  CHECK_THROWS_AS(parse_price_cents("abc"), ValidationError);
}

TEST_CASE("orders and plans survive a CSV round trip") {
  std::mt19937_64 rng(17);
  auto lines = otpto::testing::random_lines(rng, 5, 8);
  auto dir = std::filesystem::temp_directory_path() / "otpto_test_core";
  std::filesystem::create_directories(dir);
  write_orders_csv(dir / "orders.csv", lines);
  CHECK(read_orders_csv(dir / "orders.csv") == lines);

  std::vector<StockPlan> plans = {StockPlan(kDay, {{"A", 5}, {"B", 12.5}}),
                                  StockPlan(kDay + 1, {{"C", 3}})};
  write_plans_csv(dir / "plan.csv", plans);
  CHECK(read_plans_csv(dir / "plan.csv") == plans);
  std::filesystem::remove_all(dir);
}

TEST_CASE("orders CSV reports the offending line") {
  std::istringstream in("date,order_id,sku_id,quantity,unit_price\n2023-09-01,o1,A,1,1.00\n2023-13-01,o2,A,1,1.00\n");
  auto table = CsvTable::parse(in, {"date", "order_id", "sku_id", "quantity", "unit_price"}, "x.csv");
  CHECK(table.where(1) == "x.csv:3");
  std::istringstream bad("date,order,sku\n");
  CHECK_THROWS_AS(CsvTable::parse(bad, {"date", "sku_id", "quantity"}, "p.csv"), ValidationError);
}

TEST_CASE("dates") {
  auto d = Date::parse("2023-09-01");
  CHECK(d.str() == "2023-09-01");
  CHECK(d.weekday() == 4);  // Friday
  CHECK((d + 3).str() == "2023-09-04");
  CHECK((d + 3) - d == 3);
  CHECK_THROWS_AS(Date::parse("2023-02-30"), ValidationError);
  CHECK_THROWS_AS(Date::parse("20230901"), ValidationError);
}
