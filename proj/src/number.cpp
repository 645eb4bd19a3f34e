#include "balab/number.hpp"

#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <stdexcept>

namespace balab {

namespace {

bool all_digits(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s)
    if (c < '0' || c > '9') return false;
  return true;
}

BigInt parse_integer(std::string_view s) {
  bool negative = false;
  if (!s.empty() && (s.front() == '-' || s.front() == '+')) {
    negative = s.front() == '-';
    s.remove_prefix(1);
  }
  if (!all_digits(s)) throw std::invalid_argument("not an integer: '" + std::string(s) + "'");
  BigInt v{std::string(s)};
  return negative ? BigInt(-v) : v;
}

}  // namespace

Rational parse_rational(std::string_view text) {
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.front()))) text.remove_prefix(1);
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) text.remove_suffix(1);
  if (text.empty()) throw std::invalid_argument("empty rational");

  if (auto slash = text.find('/'); slash != std::string_view::npos) {
    BigInt num = parse_integer(text.substr(0, slash));
    BigInt den = parse_integer(text.substr(slash + 1));
    if (den == 0) throw std::invalid_argument("zero denominator in '" + std::string(text) + "'");
    return Rational(num, den);
  }
  if (auto dot = text.find('.'); dot != std::string_view::npos) {
    std::string_view whole = text.substr(0, dot);
    std::string_view frac = text.substr(dot + 1);
    bool negative = !whole.empty() && whole.front() == '-';
    if (!whole.empty() && (whole.front() == '-' || whole.front() == '+')) whole.remove_prefix(1);
    if ((!whole.empty() && !all_digits(whole)) || (!frac.empty() && !all_digits(frac)) ||
        (whole.empty() && frac.empty()))
      throw std::invalid_argument("not a decimal: '" + std::string(text) + "'");
    BigInt digits(std::string(whole.empty() ? "0" : whole) + std::string(frac));
    BigInt scale = boost::multiprecision::pow(BigInt(10), static_cast<unsigned>(frac.size()));
    Rational r(digits, scale);
    return negative ? Rational(-r) : r;
  }
  return Rational(parse_integer(text));
}

std::string to_string(const Rational& r) {
  if (denominator(r) == 1) return numerator(r).str();
  return numerator(r).str() + "/" + denominator(r).str();
}

std::string to_string_shortest(double x) {
  std::array<char, 64> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  if (ec != std::errc()) throw std::runtime_error("to_chars failed");
  return std::string(buf.data(), end);
}

Rational Number::to_rational() const {
  if (is_exact()) return rational();
  double x = std::get<double>(value_);
  if (!std::isfinite(x)) throw std::domain_error("non-finite value has no rational form");
  return Rational(x);
}

double Number::to_double() const {
  if (is_exact()) return rational().convert_to<double>();
  return std::get<double>(value_);
}

std::string Number::str() const {
  if (is_exact()) return to_string(rational());
  return to_string_shortest(std::get<double>(value_));
}

bool operator==(const Number& a, const Number& b) {
  if (!a.is_exact() && !b.is_exact()) return std::get<double>(a.value_) == std::get<double>(b.value_);
  if (!a.is_exact() && !std::isfinite(std::get<double>(a.value_))) return false;
  if (!b.is_exact() && !std::isfinite(std::get<double>(b.value_))) return false;
  return a.to_rational() == b.to_rational();
}

std::partial_ordering operator<=>(const Number& a, const Number& b) {
  if (!a.is_exact() && !b.is_exact()) return std::get<double>(a.value_) <=> std::get<double>(b.value_);
  double da = a.to_double();
  double db = b.to_double();
  if (!std::isfinite(da) || !std::isfinite(db)) return da <=> db;
  Rational ra = a.to_rational();
  Rational rb = b.to_rational();
  if (ra < rb) return std::partial_ordering::less;
  if (rb < ra) return std::partial_ordering::greater;
  return std::partial_ordering::equivalent;
}

}  // namespace balab
