#pragma once

// Reference implementations used to check the engine and the estimators.

#include "balab/engine.hpp"
#include "balab/model.hpp"

#include <array>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>

namespace balab {

class BudgetExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Same contract as resolve(), computed by repeated global scans: find the
/// earliest meeting time over every approaching pair of live particles (not
/// only neighbours), move everyone to that time, and remove every group of
/// coincident particles. O(n^3) overall.
WindowOutcome naive_resolve(const Configuration& config);

/// Compares fates and collision multisets (processing order is ignored).
/// Returns a description of the first difference, or nothing if they agree.
std::optional<std::string> compare_outcomes(const WindowOutcome& a, const WindowOutcome& b);

enum class Statistic { SigmaLeft, ZLeft, ZRight, NLeft, NRight, NDot };
Statistic parse_statistic(const std::string& name);
std::string statistic_name(Statistic s);

/// Exponents (i, r, s, t) of the monomial p^i lambda^r (1-p)^s (1-lambda)^t.
using Exponents = std::array<int, 4>;

/// Exact law of one window statistic under unit spacing.
struct ExactDistributionTable {
  int n = 0;
  Rational p;
  Rational lambda;
  Statistic statistic = Statistic::SigmaLeft;
  /// Outcome label ("sigma=3", "sigma=none", "zleft=-1", ...) to probability.
  std::map<std::string, Rational> probabilities;
  /// Expected value; for SigmaLeft this is E[sigma; sigma <= n].
  Rational expectation;
  /// Outcome label to integer coefficients over monomials; each coefficient
  /// counts the velocity assignments with those type counts.
  std::map<std::string, std::map<Exponents, BigInt>> polynomial;

  [[nodiscard]] Rational probability(const std::string& label) const;
  [[nodiscard]] std::string to_json() const;
};

/// Evaluates one outcome's polynomial at (p, lambda).
Rational evaluate_polynomial(const std::map<Exponents, BigInt>& poly, const Rational& p, const Rational& lambda);

constexpr int kMaxEnumeration = 14;

/// Enumerates all 3^n velocity assignments on positions 1..n, weights each by
/// p^#B (lambda(1-p))^#R ((1-lambda)(1-p))^#L, resolves it with naive_resolve,
/// and accumulates the statistic exactly. Throws BudgetExceeded for n > 14.
ExactDistributionTable enumerate_exact(int n, const Rational& p, const Rational& lambda, Statistic stat);

/// P(sigma_left <= n) = sum over k <= n of P(sigma_left = k), each term taken
/// from its own length-k enumeration.
Rational exact_truncated_q(int n, const Rational& p, const Rational& lambda);

}  // namespace balab
