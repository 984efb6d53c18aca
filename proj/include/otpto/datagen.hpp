#pragma once

// Seeded synthetic order streams: Zipf SKU popularity, shifted-Poisson baskets,
// weekday-scaled daily volume and fixed log-normal prices per SKU.

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "otpto/core.hpp"

namespace otpto::datagen {

struct GenParams {
  int n_skus = 200;
  int n_days = 97;
  double orders_per_day_mean = 120.0;
  double basket_size_mean = 2.5;  // 1 + Poisson(mean - 1)
  double zipf_s = 1.0;
  double price_log_mean = 2.0;  // log of the unit price in currency
  double price_log_sd = 0.7;
  std::array<double, 7> weekday_multipliers = {0.9, 0.9, 0.95, 1.0, 1.1, 1.25, 1.15};  // Monday first
  Date start = Date(2023, 6, 1);
  std::uint64_t seed = 1;

  /// Throws ValidationError on out-of-range fields.
  void validate() const;
  bool operator==(const GenParams&) const = default;
};

void to_json(nlohmann::json& j, const GenParams& p);
void from_json(const nlohmann::json& j, GenParams& p);

/// SKU ids listed by popularity rank (rank 0 is the most popular) and their prices.
struct Catalogue {
  std::vector<std::string> ids_by_rank;
  std::vector<std::int64_t> price_cents;  // aligned with ids_by_rank
};

/// Normalized Zipf weights 1/r^s, r = 1..n.
std::vector<double> zipf_weights(int n, double s);

Catalogue make_catalogue(const GenParams& p);

/// Order lines, day by day in arrival order. Days whose Poisson draw is zero have
/// no lines. Identical params give identical output.
std::vector<OrderLine> generate_synthetic(const GenParams& p);

void write_params_json(const std::filesystem::path& path, const GenParams& p);
GenParams read_params_json(const std::filesystem::path& path);

}  // namespace otpto::datagen
