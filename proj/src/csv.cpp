#include "otpto/csv.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "otpto/errors.hpp"

namespace otpto {

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    std::size_t comma = line.find(',', start);
    std::string_view field =
        line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
    if (field.size() >= 2 && field.front() == '"' && field.back() == '"')
      field = field.substr(1, field.size() - 2);
    out.emplace_back(field);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

CsvTable CsvTable::read(const std::filesystem::path& path,
                        const std::vector<std::string>& expected_header) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path.string());
  return parse(in, expected_header, path.string());
}

CsvTable CsvTable::parse(std::istream& in, const std::vector<std::string>& expected_header,
                         const std::string& source_name) {
  CsvTable table;
  table.source_ = source_name;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    if (line.empty()) continue;
    auto fields = split_csv_line(line);
    if (!have_header) {
      if (fields != expected_header) {
        std::string want;
        for (const auto& h : expected_header) want += (want.empty() ? "" : ",") + h;
        throw ValidationError(source_name + ": unexpected header, expected '" + want + "'");
      }
      table.header_ = std::move(fields);
      have_header = true;
      continue;
    }
    if (fields.size() != expected_header.size())
      throw ValidationError(source_name + ":" + std::to_string(line_no) + ": expected " +
                            std::to_string(expected_header.size()) + " fields, got " +
                            std::to_string(fields.size()));
    table.rows_.push_back(std::move(fields));
    table.line_numbers_.push_back(line_no);
  }
  if (!have_header) throw ValidationError(source_name + ": missing header row");
  return table;
}

std::string CsvTable::where(std::size_t row) const {
  return source_ + ":" + std::to_string(line_numbers_.at(row));
}

int parse_int_field(std::string_view text, const std::string& where) {
  int v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty())
    throw ValidationError(where + ": invalid integer '" + std::string(text) + "'");
  return v;
}

double parse_double_field(std::string_view text, const std::string& where) {
  std::string s(text);
  char* end = nullptr;
  double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size() || !std::isfinite(v))
    throw ValidationError(where + ": invalid number '" + s + "'");
  return v;
}

std::string format_double(double v) {
  if (v == 0.0) return "0";
  char buf[40];
  for (int precision = 1; precision <= 17; ++precision) {
    std::snprintf(buf, sizeof buf, "%.*g", precision, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

std::string format_fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  std::string s = buf;
  if (s.rfind("-0.", 0) == 0 && s.find_first_not_of("-0.") == std::string::npos) s.erase(0, 1);
  return s;
}

std::vector<OrderLine> read_orders_csv(const std::filesystem::path& path) {
  auto table = CsvTable::read(path, {"date", "order_id", "sku_id", "quantity", "unit_price"});
  std::vector<OrderLine> lines;
  lines.reserve(table.rows().size());
  for (std::size_t r = 0; r < table.rows().size(); ++r) {
    const auto& f = table.rows()[r];
    const auto where = table.where(r);
    OrderLine line;
    try {
      line.day = Date::parse(f[0]);
      line.unit_price_cents = parse_price_cents(f[4]);
    } catch (const ValidationError& e) {
      throw ValidationError(where + ": " + e.what());
    }
    line.order_id = f[1];
    line.sku_id = f[2];
    line.quantity = parse_int_field(f[3], where);
    if (line.quantity < 1) throw ValidationError(where + ": quantity must be positive");
    lines.push_back(std::move(line));
  }
  return lines;
}

void write_orders_csv(const std::filesystem::path& path, std::span<const OrderLine> lines) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << "date,order_id,sku_id,quantity,unit_price\n";
  for (const auto& l : lines)
    out << l.day.str() << ',' << l.order_id << ',' << l.sku_id << ',' << l.quantity << ','
        << format_cents(l.unit_price_cents) << '\n';
}

std::vector<StockPlan> read_plans_csv(const std::filesystem::path& path) {
  auto table = CsvTable::read(path, {"date", "sku_id", "quantity"});
  std::map<Date, StockPlan::Entries> by_day;
  for (std::size_t r = 0; r < table.rows().size(); ++r) {
    const auto& f = table.rows()[r];
    const auto where = table.where(r);
    Date day;
    try {
      day = Date::parse(f[0]);
    } catch (const ValidationError& e) {
      throw ValidationError(where + ": " + e.what());
    }
    double qty = parse_double_field(f[2], where);
    if (qty < 0) throw ValidationError(where + ": quantity must be non-negative");
    if (!by_day[day].emplace(f[1], qty).second)
      throw ValidationError(where + ": duplicate SKU " + f[1] + " for " + f[0]);
  }
  std::vector<StockPlan> plans;
  for (auto& [day, entries] : by_day) plans.emplace_back(day, std::move(entries));
  return plans;
}

void write_plans_csv(const std::filesystem::path& path, std::span<const StockPlan> plans) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << "date,sku_id,quantity\n";
  for (const auto& plan : plans)
    for (const auto& [sku, qty] : plan.entries())
      out << plan.day().str() << ',' << sku << ',' << format_double(qty) << '\n';
}

}  // namespace otpto
