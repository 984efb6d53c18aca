#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>

#include "doctest.h"
#include "otpto/datagen.hpp"
#include "otpto/errors.hpp"

using namespace otpto;
using namespace otpto::datagen;

namespace {

GenParams small() {
  GenParams p;
  p.n_skus = 30;
  p.n_days = 10;
  p.orders_per_day_mean = 40;
  p.seed = 17;
  return p;
}

}  // namespace

TEST_CASE("same seed, same lines") {
  auto a = generate_synthetic(small());
  auto b = generate_synthetic(small());
  CHECK(a == b);
  auto p = small();
  p.seed = 18;
  CHECK(generate_synthetic(p) != a);
}

TEST_CASE("generated data indexes cleanly") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto p = small();
    p.seed = seed;
    p.basket_size_mean = 1 + static_cast<double>(seed % 5);
    auto lines = generate_synthetic(p);
    REQUIRE(!lines.empty());
    auto h = validate_and_index(lines);
    CHECK(h.days.size() == 10);
    for (const auto& l : lines) {
      CHECK(l.quantity >= 1);
      CHECK(l.unit_price_cents >= 1);
      CHECK(l.order_id.substr(0, 8) == l.day.str().substr(0, 4) + l.day.str().substr(5, 2) + l.day.str().substr(8, 2));
    }
  }
}

TEST_CASE("top SKU frequency follows the Zipf normalization") {
  GenParams p;
  p.n_skus = 100;
  p.zipf_s = 1.2;
  p.basket_size_mean = 1;
  p.orders_per_day_mean = 1000;
  p.n_days = 100;
  p.weekday_multipliers.fill(1.0);
  auto lines = generate_synthetic(p);
  auto cat = make_catalogue(p);
  double h = 0;
  for (int r = 1; r <= 100; ++r) h += std::pow(r, -1.2);
  std::map<std::string, long> count;
  for (const auto& l : lines) ++count[l.sku_id];
  double freq = static_cast<double>(count[cat.ids_by_rank[0]]) / static_cast<double>(lines.size());
  CHECK(lines.size() > 90000);
  CHECK(std::abs(freq - 1.0 / h) <= 0.1 / h);

  // Spearman correlation between popularity rank and observed count rank
  std::vector<std::pair<long, int>> by_count;
  for (int r = 0; r < 100; ++r) by_count.push_back({-count[cat.ids_by_rank[static_cast<std::size_t>(r)]], r});
  std::sort(by_count.begin(), by_count.end());
  double d2 = 0;
  for (int i = 0; i < 100; ++i) d2 += std::pow(by_count[static_cast<std::size_t>(i)].second - i, 2);
  double rho = 1 - 6 * d2 / (100.0 * (100.0 * 100.0 - 1));
  CHECK(rho >= 0.9);
}

TEST_CASE("unit basket mean gives single-line orders") {
  auto p = small();
  p.basket_size_mean = 1;
  auto lines = generate_synthetic(p);
  std::map<std::string, int> per_order;
  for (const auto& l : lines) ++per_order[l.day.str() + l.order_id];
  for (const auto& [id, n] : per_order) CHECK(n == 1);
}

TEST_CASE("baskets cannot exceed the catalogue") {
  auto p = small();
  p.n_skus = 3;
  p.basket_size_mean = 6;
  p.zipf_s = 3;
  auto h = validate_and_index(generate_synthetic(p));
  for (const auto& d : h.days)
    for (const auto& o : d.orders) CHECK(o.distinct_skus() <= 3);
}

TEST_CASE("weekday multipliers scale volume") {
  auto p = small();
  p.n_days = 70;
  p.orders_per_day_mean = 200;
  p.weekday_multipliers = {1, 1, 1, 1, 1, 2, 0};
  auto h = validate_and_index(generate_synthetic(p));
  double sat = 0, mon = 0;
  for (const auto& d : h.days) {
    CHECK(d.day.weekday() != 6);
    if (d.day.weekday() == 5) sat += d.order_count();
    if (d.day.weekday() == 0) mon += d.order_count();
  }
  CHECK(sat / mon == doctest::Approx(2.0).epsilon(0.1));
}

TEST_CASE("parameter validation and JSON sidecar") {
  auto p = small();
  p.n_days = 0;
  CHECK_THROWS_AS(generate_synthetic(p), ValidationError);
  p = small();
  p.n_skus = 1;
  CHECK_THROWS_AS(p.validate(), ValidationError);
  p = small();
  p.basket_size_mean = 0.5;
  CHECK_THROWS_AS(p.validate(), ValidationError);

  p = small();
  p.start = Date(2024, 2, 28);
  auto path = std::filesystem::temp_directory_path() / "otpto_params_test.json";
  write_params_json(path, p);
  CHECK(read_params_json(path) == p);
  std::filesystem::remove(path);
  CHECK(zipf_weights(3, 1.0)[0] == doctest::Approx(1.0 / (1 + 0.5 + 1.0 / 3)));
}
