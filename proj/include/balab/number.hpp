#pragma once

#include <boost/multiprecision/gmp.hpp>

#include <compare>
#include <string>
#include <string_view>
#include <variant>

namespace balab {

/// Arbitrary-precision rational (GMP backed).
using Rational = boost::multiprecision::mpq_rational;
using BigInt = boost::multiprecision::mpz_int;

/// Parses "a", "a/b", or a finite decimal such as "0.25" into an exact rational.
/// Throws std::invalid_argument on malformed input or a zero denominator.
Rational parse_rational(std::string_view text);

/// "a/b", or "a" when the denominator is 1.
std::string to_string(const Rational& r);

/// Shortest decimal that round-trips to the same double.
std::string to_string_shortest(double x);

/// A scalar that is either an exact rational (atomic spacings) or a 64-bit
/// float (atomless spacings). Mixed comparisons are exact: the double is
/// converted to its exact dyadic value first.
class Number {
 public:
  Number() : value_(0.0) {}
  Number(double x) : value_(x) {}  // NOLINT(google-explicit-constructor)
  Number(Rational r) : value_(std::move(r)) {}  // NOLINT(google-explicit-constructor)
  Number(long long n) : value_(Rational(n)) {}  // NOLINT(google-explicit-constructor)

  [[nodiscard]] bool is_exact() const { return std::holds_alternative<Rational>(value_); }
  [[nodiscard]] const Rational& rational() const { return std::get<Rational>(value_); }
  [[nodiscard]] Rational to_rational() const;
  [[nodiscard]] double to_double() const;
  [[nodiscard]] std::string str() const;

  friend bool operator==(const Number& a, const Number& b);
  friend std::partial_ordering operator<=>(const Number& a, const Number& b);

 private:
  std::variant<double, Rational> value_;
};

}  // namespace balab
