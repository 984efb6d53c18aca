#pragma once

#include <chrono>
#include <compare>
#include <functional>
#include <string>
#include <string_view>

namespace otpto {

/// A calendar day (no time zone), stored as days since the Unix epoch.
class Date {
 public:
  Date() = default;
  explicit Date(std::chrono::sys_days d) : days_(d) {}
  Date(int year, unsigned month, unsigned day);

  /// Parses YYYY-MM-DD; throws ValidationError on anything else.
  static Date parse(std::string_view text);

  std::string str() const;

  /// 0 = Monday ... 6 = Sunday.
  int weekday() const;

  long serial() const { return static_cast<long>(days_.time_since_epoch().count()); }

  Date operator+(int n) const { return Date(days_ + std::chrono::days(n)); }
  Date operator-(int n) const { return Date(days_ - std::chrono::days(n)); }
  int operator-(const Date& other) const {
    return static_cast<int>((days_ - other.days_).count());
  }

  auto operator<=>(const Date&) const = default;

 private:
  std::chrono::sys_days days_{};
};

}  // namespace otpto

template <>
struct std::hash<otpto::Date> {
  std::size_t operator()(const otpto::Date& d) const noexcept {
    return std::hash<long>{}(d.serial());
  }
};
