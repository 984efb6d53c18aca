#include "otpto/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>

#include <nlohmann/json.hpp>

#include "otpto/errors.hpp"

namespace otpto::datagen {

void GenParams::validate() const {
  if (n_skus < 2) throw ValidationError("n_skus must be >= 2");
  if (n_days < 1) throw ValidationError("n_days must be >= 1");
  if (!(orders_per_day_mean > 0)) throw ValidationError("orders_per_day_mean must be > 0");
  if (!(basket_size_mean >= 1)) throw ValidationError("basket_size_mean must be >= 1");
  if (!(zipf_s > 0)) throw ValidationError("zipf_s must be > 0");
  if (!std::isfinite(price_log_mean) || !(price_log_sd >= 0)) throw ValidationError("bad price distribution");
  for (double m : weekday_multipliers)
    if (!(m >= 0) || !std::isfinite(m)) throw ValidationError("weekday multipliers must be finite and >= 0");
}

void to_json(nlohmann::json& j, const GenParams& p) {
  j = {{"n_skus", p.n_skus},
       {"n_days", p.n_days},
       {"orders_per_day_mean", p.orders_per_day_mean},
       {"basket_size_mean", p.basket_size_mean},
       {"zipf_s", p.zipf_s},
       {"price_log_mean", p.price_log_mean},
       {"price_log_sd", p.price_log_sd},
       {"weekday_multipliers", p.weekday_multipliers},
       {"start", p.start.str()},
       {"seed", p.seed}};
}

void from_json(const nlohmann::json& j, GenParams& p) {
  // Missing keys keep their defaults.
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) j.at(key).get_to(field);
  };
  get("n_skus", p.n_skus);
  get("n_days", p.n_days);
  get("orders_per_day_mean", p.orders_per_day_mean);
  get("basket_size_mean", p.basket_size_mean);
  get("zipf_s", p.zipf_s);
  get("price_log_mean", p.price_log_mean);
  get("price_log_sd", p.price_log_sd);
  get("weekday_multipliers", p.weekday_multipliers);
  get("seed", p.seed);
  if (j.contains("start")) p.start = Date::parse(j.at("start").get<std::string>());
}

std::vector<double> zipf_weights(int n, double s) {
  std::vector<double> w(static_cast<std::size_t>(n));
  for (int r = 0; r < n; ++r) w[static_cast<std::size_t>(r)] = std::pow(r + 1.0, -s);
  double total = std::accumulate(w.begin(), w.end(), 0.0);
  for (auto& v : w) v /= total;
  return w;
}

Catalogue make_catalogue(const GenParams& p) {
  p.validate();
  std::mt19937_64 rng(p.seed);
  std::vector<std::string> ids;
  const int width = std::max(4, static_cast<int>(std::to_string(p.n_skus).size()));
  for (int i = 0; i < p.n_skus; ++i) {
    std::string n = std::to_string(i + 1);
    ids.push_back("SKU" + std::string(static_cast<std::size_t>(width) - n.size(), '0') + n);
  }
  // popularity rank is unrelated to id order
  std::shuffle(ids.begin(), ids.end(), rng);
  Catalogue c;
  c.ids_by_rank = std::move(ids);
  std::lognormal_distribution<double> price(p.price_log_mean, p.price_log_sd);
  for (int i = 0; i < p.n_skus; ++i)
    c.price_cents.push_back(std::max<std::int64_t>(1, std::llround(price(rng) * 100.0)));
  return c;
}

std::vector<OrderLine> generate_synthetic(const GenParams& p) {
  auto cat = make_catalogue(p);
  // separate stream for orders so catalogue changes do not shift it
  std::mt19937_64 rng(p.seed ^ 0x9e3779b97f4a7c15ULL);
  const auto weights = zipf_weights(p.n_skus, p.zipf_s);
  std::discrete_distribution<int> pick(weights.begin(), weights.end());
  std::poisson_distribution<int> extra_qty(0.5);
  const bool single = p.basket_size_mean <= 1.0;
  std::poisson_distribution<int> extra_items(single ? 1.0 : p.basket_size_mean - 1.0);

  std::vector<OrderLine> lines;
  for (int d = 0; d < p.n_days; ++d) {
    const Date day = p.start + d;
    double mean = p.orders_per_day_mean * p.weekday_multipliers[static_cast<std::size_t>(day.weekday())];
    int orders = mean > 0 ? std::poisson_distribution<int>(mean)(rng) : 0;
    std::string ymd = day.str();
    ymd.erase(std::remove(ymd.begin(), ymd.end(), '-'), ymd.end());
    for (int o = 0; o < orders; ++o) {
      char id[32];
      std::snprintf(id, sizeof id, "%s-%04d", ymd.c_str(), o + 1);
      int size = single ? 1 : 1 + extra_items(rng);
      size = std::min(size, p.n_skus);
      std::vector<int> basket;
      int tries = 0;
      while (static_cast<int>(basket.size()) < size) {
        int r;
        if (++tries <= 64 * size) {
          r = pick(rng);
        } else {
          // heavy collisions: draw from the remaining SKUs directly
          std::vector<double> rest = weights;
          for (int b : basket) rest[static_cast<std::size_t>(b)] = 0.0;
          r = std::discrete_distribution<int>(rest.begin(), rest.end())(rng);
        }
        if (std::find(basket.begin(), basket.end(), r) == basket.end()) basket.push_back(r);
      }
      for (int r : basket) {
        auto ri = static_cast<std::size_t>(r);
        lines.push_back({day, id, cat.ids_by_rank[ri], 1 + extra_qty(rng), cat.price_cents[ri]});
      }
    }
  }
  return lines;
}

void write_params_json(const std::filesystem::path& path, const GenParams& p) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + path.string());
  nlohmann::json j = p;
  out << j.dump(2) << '\n';
}

GenParams read_params_json(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot read " + path.string());
  try {
    GenParams p = nlohmann::json::parse(in).get<GenParams>();
    p.validate();
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

}  // namespace otpto::datagen
