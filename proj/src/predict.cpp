#include "otpto/predict.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "otpto/csv.hpp"
#include "otpto/errors.hpp"
#include "otpto/parallel.hpp"

namespace otpto::predict {

std::vector<Date> PredictionBundle::days() const {
  std::vector<Date> out;
  for (const auto& r : rows)
    if (out.empty() || out.back() != r.day) out.push_back(r.day);
  return out;
}

std::vector<PredictionRow> PredictionBundle::for_day(Date day) const {
  std::vector<PredictionRow> out;
  for (const auto& r : rows)
    if (r.day == day) out.push_back(r);
  return out;
}

std::vector<Date> validation_days(const features::FeatureMatrix& matrix, double fraction) {
  std::set<Date> all;
  for (const auto& k : matrix.keys) all.insert(k.day);
  std::vector<Date> days(all.begin(), all.end());
  auto n = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(days.size()) + 1e-9));
  if (n == 0 && days.size() >= 2 && fraction > 0) n = 1;
  n = std::min(n, days.size() > 0 ? days.size() - 1 : 0);
  return {days.end() - static_cast<long>(n), days.end()};
}

namespace {

ml::Matrix take_rows(const ml::Matrix& m, const std::vector<std::size_t>& idx) {
  ml::Matrix out(idx.size(), m.cols);
  for (std::size_t i = 0; i < idx.size(); ++i) {
    auto src = m.row(idx[i]);
    std::copy(src.begin(), src.end(), out.data.begin() + static_cast<long>(i * m.cols));
  }
  return out;
}

}  // namespace

Models train_models(const features::FeatureMatrix& matrix, const labeling::LabelSet& labels,
                    const ml::GbdtParams& pm1, const ml::GbdtParams& pm2, const TrainOptions& opt) {
  if (matrix.keys.size() != matrix.values.rows) throw ValidationError("feature keys do not match rows");
  if (!(opt.valid_fraction >= 0 && opt.valid_fraction < 1)) throw ValidationError("valid_fraction must be in [0,1)");
  const auto valid = validation_days(matrix, opt.valid_fraction);
  const Date valid_from = valid.empty() ? Date(9999, 12, 31) : valid.front();

  const std::size_t n = matrix.keys.size();
  std::vector<double> y(n), x_star(n);
  for (std::size_t r = 0; r < n; ++r) {
    const auto* row = labels.find(matrix.keys[r].day, matrix.keys[r].sku_id);
    if (!row) continue;
    y[r] = opt.pm1_raw_label ? row->y_star : row->y_final;
    x_star[r] = row->x_star;
  }

  std::vector<std::size_t> tr1, va1, tr2, va2;
  for (std::size_t r = 0; r < n; ++r) {
    bool is_valid = matrix.keys[r].day >= valid_from;
    (is_valid ? va1 : tr1).push_back(r);
    if (x_star[r] > 0 || opt.pm2_keep_unstocked) (is_valid ? va2 : tr2).push_back(r);
  }
  bool has0 = false, has1 = false;
  for (auto r : tr1) (y[r] > 0.5 ? has1 : has0) = true;
  if (!(has0 && has1)) throw TrainingError("PM1 training labels have a single class");
  if (tr2.empty()) throw TrainingError("PM2 has no training rows (no stocked SKUs in the training days)");

  auto pick = [](const std::vector<double>& v, const std::vector<std::size_t>& idx) {
    std::vector<double> out;
    out.reserve(idx.size());
    for (auto i : idx) out.push_back(v[i]);
    return out;
  };

  Models m;
  m.columns = matrix.column_names();
  parallel_for(2, 2, [&](std::size_t which) {
    if (which == 0)
      m.pm1 = ml::train_gbdt(take_rows(matrix.values, tr1), pick(y, tr1), take_rows(matrix.values, va1),
                             pick(y, va1), pm1);
    else
      m.pm2 = ml::train_gbdt(take_rows(matrix.values, tr2), pick(x_star, tr2), take_rows(matrix.values, va2),
                             pick(x_star, va2), pm2);
  });

  auto& mt = m.metrics;
  mt.valid_days = valid;
  mt.pm1_rows = tr1.size();
  mt.pm1_valid_rows = va1.size();
  mt.pm2_rows = tr2.size();
  mt.pm2_valid_rows = va2.size();
  mt.pm1_trees = static_cast<int>(m.pm1.trees.size());
  mt.pm2_trees = static_cast<int>(m.pm2.trees.size());
  if (!va1.empty()) {
    auto vy = pick(y, va1);
    bool a = false, b = false;
    for (double v : vy) (v > 0.5 ? b : a) = true;
    if (a && b) mt.pm1_valid_auc = ml::eval_metric(ml::Metric::auc, vy, m.pm1.predict(take_rows(matrix.values, va1)));
  }
  if (!va2.empty())
    mt.pm2_valid_rmse =
        ml::eval_metric(ml::Metric::rmse, pick(x_star, va2), m.pm2.predict(take_rows(matrix.values, va2)));
  return m;
}

PredictionBundle predict_models(const Models& models, const features::FeatureMatrix& matrix) {
  if (matrix.column_names() != models.columns)
    throw SchemaError("feature columns differ from the schema the models were trained on");
  auto p1 = ml::predict_gbdt(models.pm1, matrix.values);
  auto p2 = ml::predict_gbdt(models.pm2, matrix.values);
  PredictionBundle b;
  b.rows.reserve(matrix.keys.size());
  // keep y_hat strictly inside (0,1) even when the logistic saturates
  constexpr double eps = 1e-12;
  for (std::size_t r = 0; r < matrix.keys.size(); ++r) {
    double yh = models.pm1.params.objective == ml::Objective::binary ? p1[r] : ml::sigmoid(p1[r]);
    b.rows.push_back({matrix.keys[r].day, matrix.keys[r].sku_id, std::clamp(yh, eps, 1.0 - eps),
                      std::max(0.0, p2[r]), r < matrix.q_hat.size() ? std::max(0.0, matrix.q_hat[r]) : 0.0});
  }
  std::sort(b.rows.begin(), b.rows.end(), [](const PredictionRow& a, const PredictionRow& c) {
    return a.day != c.day ? a.day < c.day : a.sku_id < c.sku_id;
  });
  return b;
}

void save_models(const std::filesystem::path& path, const Models& models) {
  nlohmann::json j;
  j["format"] = "otpto-models";
  j["version"] = 1;
  j["columns"] = models.columns;
  j["pm1"] = nlohmann::json::parse(models.pm1.to_json());
  j["pm2"] = nlohmann::json::parse(models.pm2.to_json());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << j.dump() << '\n';
}

Models load_models(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot read " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
    if (j.at("format") != "otpto-models" || j.at("version") != 1)
      throw ValidationError(path.string() + ": not an otpto model file");
    Models m;
    m.columns = j.at("columns").get<std::vector<std::string>>();
    m.pm1 = ml::GbdtModel::from_json(j.at("pm1").dump());
    m.pm2 = ml::GbdtModel::from_json(j.at("pm2").dump());
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

void write_predictions_csv(const std::filesystem::path& path, const PredictionBundle& bundle) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << "date,sku_id,y_hat,x_hat,q_hat\n";
  for (const auto& r : bundle.rows)
    out << r.day.str() << ',' << r.sku_id << ',' << format_double(r.y_hat) << ',' << format_double(r.x_hat)
        << ',' << format_double(r.q_hat) << '\n';
}

PredictionBundle read_predictions_csv(const std::filesystem::path& path) {
  auto table = CsvTable::read(path, {"date", "sku_id", "y_hat", "x_hat", "q_hat"});
  PredictionBundle b;
  for (std::size_t i = 0; i < table.rows().size(); ++i) {
    const auto& f = table.rows()[i];
    const auto where = table.where(i);
    PredictionRow r;
    try {
      r.day = Date::parse(f[0]);
    } catch (const ValidationError& e) {
      throw ValidationError(where + ": " + e.what());
    }
    r.sku_id = f[1];
    r.y_hat = parse_double_field(f[2], where);
    r.x_hat = parse_double_field(f[3], where);
    r.q_hat = parse_double_field(f[4], where);
    if (!(r.y_hat > 0 && r.y_hat < 1)) throw ValidationError(where + ": y_hat must be in (0,1)");
    if (r.x_hat < 0 || r.q_hat < 0) throw ValidationError(where + ": x_hat and q_hat must be >= 0");
    b.rows.push_back(std::move(r));
  }
  std::sort(b.rows.begin(), b.rows.end(), [](const PredictionRow& a, const PredictionRow& c) {
    return a.day != c.day ? a.day < c.day : a.sku_id < c.sku_id;
  });
  return b;
}

}  // namespace otpto::predict
