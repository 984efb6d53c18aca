#pragma once

// Small builders shared by the unit tests.

#include <random>
#include <string>
#include <utility>
#include <vector>

#include "otpto/core.hpp"

namespace otpto::testing {

inline const Date kDay{2023, 9, 1};

struct OrderSpec {
  std::string id;
  std::vector<std::pair<std::string, int>> lines;  // sku, quantity
};

/// One day of orders in the given arrival order; every unit costs `price_cents`
/// unless overridden per SKU.
inline DayHistory make_day(const std::vector<OrderSpec>& orders,
                           const std::vector<std::pair<std::string, std::int64_t>>& prices = {},
                           std::int64_t price_cents = 100) {
  std::vector<OrderLine> lines;
  for (const auto& o : orders) {
    for (const auto& [sku, qty] : o.lines) {
      std::int64_t p = price_cents;
      for (const auto& [s, c] : prices)
        if (s == sku) p = c;
      lines.push_back({kDay, o.id, sku, qty, p});
    }
  }
  return validate_and_index(lines).days.at(0);
}

/// Random small day: `skus` SKUs named A, B, ..., up to `orders` orders with 1-3
/// distinct SKUs each and quantities 1-3.
inline std::vector<OrderLine> random_lines(std::mt19937_64& rng, int skus, int orders,
                                          Date day = kDay) {
  std::uniform_int_distribution<int> basket(1, std::min(3, skus));
  std::uniform_int_distribution<int> pick(0, skus - 1);
  std::uniform_int_distribution<int> qty(1, 3);
  std::uniform_int_distribution<int> price(0, 2000);
  std::vector<std::int64_t> sku_price(static_cast<std::size_t>(skus));
  for (auto& p : sku_price) p = price(rng);
  std::vector<OrderLine> lines;
  for (int o = 0; o < orders; ++o) {
    int size = basket(rng);
    std::vector<int> chosen;
    while (static_cast<int>(chosen.size()) < size) {
      int s = pick(rng);
      if (std::find(chosen.begin(), chosen.end(), s) == chosen.end()) chosen.push_back(s);
    }
    for (int s : chosen) {
      std::string sku(1, static_cast<char>('A' + s));
      lines.push_back({day, "o" + std::to_string(o), sku, qty(rng),
                       sku_price[static_cast<std::size_t>(s)]});
    }
  }
  return lines;
}

inline DayHistory random_day(std::mt19937_64& rng, int skus, int orders) {
  auto lines = random_lines(rng, skus, orders);
  return validate_and_index(lines).days.at(0);
}

}  // namespace otpto::testing
