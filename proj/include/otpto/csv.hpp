#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "otpto/core.hpp"

namespace otpto {

/// Minimal reader for the comma-separated files this project writes: no embedded
/// commas, optional surrounding double quotes, optional UTF-8 BOM, LF or CRLF.
class CsvTable {
 public:
  /// Reads the file and checks its header equals `expected_header` exactly.
  static CsvTable read(const std::filesystem::path& path,
                       const std::vector<std::string>& expected_header);
  static CsvTable parse(std::istream& in, const std::vector<std::string>& expected_header,
                        const std::string& source_name);

  const std::vector<std::string>& header() const { return header_; }
  const std::vector<std::vector<std::string>>& rows() const { return rows_; }

  /// "file:line" for error messages; `row` is 0-based among data rows.
  std::string where(std::size_t row) const;

 private:
  std::string source_;
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
  std::vector<std::size_t> line_numbers_;
};

std::vector<std::string> split_csv_line(std::string_view line);

int parse_int_field(std::string_view text, const std::string& where);
double parse_double_field(std::string_view text, const std::string& where);

/// Shortest round-trip decimal form of a double ("%.17g" trimmed), stable across runs.
std::string format_double(double v);
/// Fixed-point form with `digits` fractional digits.
std::string format_fixed(double v, int digits);

/// orders CSV: date,order_id,sku_id,quantity,unit_price
std::vector<OrderLine> read_orders_csv(const std::filesystem::path& path);
void write_orders_csv(const std::filesystem::path& path, std::span<const OrderLine> lines);

/// plan CSV: date,sku_id,quantity
std::vector<StockPlan> read_plans_csv(const std::filesystem::path& path);
void write_plans_csv(const std::filesystem::path& path, std::span<const StockPlan> plans);

}  // namespace otpto
