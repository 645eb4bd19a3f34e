#pragma once

// Closed-form phase-boundary formulas. Every function is instantiated for
// double and for Rational; rational inputs give exact results.

#include "balab/number.hpp"

#include <json.hpp>

#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace balab {

/// (alpha_right, alpha_left, alpha_hat); alpha_right + alpha_left = 1 + alpha_hat.
template <class T>
struct Alpha {
  T right;
  T left;
  T hat;
};

/// alpha_right = alpha_left = 1/2, alpha_hat = 0.
template <class T>
Alpha<T> symmetric_alpha() {
  return {T(1) / 2, T(1) / 2, T(0)};
}

template <class T>
void validate_alpha(const Alpha<T>& a);

template <class T>
struct FValue {
  T value;      // max of the two fractions
  T first;      // (lambda (2 + h) - ar) / (lambda (2 + h) + 1 + al - ar)
  T second;     // ((1 - lambda)(2 + h) - al) / ((1 - lambda)(2 + h) + 1 + ar - al)
  T rewritten;  // 1/(4+h) + (2+h)/(4+h) max(A / D1, -A / D2)
};

/// Fluctuation criterion: theta = 0 whenever p <= F. F does not depend on p
/// except through alpha; p is accepted so the call matches its use. Throws
/// std::logic_error if the two algebraic forms disagree (exact for Rational,
/// 12 significant digits for double).
template <class T>
FValue<T> eval_F(const T& p, const T& lambda, const Alpha<T>& a);

template <class T>
struct BoundSet {
  T elementary_lower;  // max((2l-1)/(2l), (1-2l)/(2-2l), 0)
  T elementary_upper;  // 1/2
  T f_star1;           // max((1-2l)/(2-2l), 1/5, (2l-1)/(2l))
  T f_star2;           // 1/4 in place of 1/5
  T f_star_upper;      // max((1-l)/(2-l), l/(1+l))
  std::optional<T> f_of_p;
};

template <class T>
BoundSet<T> eval_bound_functions(const T& lambda);
template <class T>
BoundSet<T> eval_bound_functions(const T& p, const T& lambda, const Alpha<T>& a);

/// a q^2 + b q + c = 0. Roots are exact when the inputs are rational and the
/// discriminant is a rational square, doubles otherwise.
struct QuadraticSolution {
  Number a;
  Number b;
  Number c;
  std::vector<Number> roots;  // real roots, ascending
  std::optional<Number> selected;
  Number f0;  // value at 0
  Number f1;  // value at 1
  /// f(1) = 0: 1 is itself a root and the root in [0, 1] need not be unique.
  bool degenerate = false;
};

/// Case q_right = 1: p ar q^2 - (p al + lambda (1-p)) q + (1-lambda)(1-p) for q_left.
template <class T>
QuadraticSolution solve_trichotomy_case1(const T& p, const T& lambda, const Alpha<T>& a);
/// Case q_left = 1: p al q^2 - (p ar + (1-lambda)(1-p)) q + lambda (1-p) for q_right.
template <class T>
QuadraticSolution solve_trichotomy_case2(const T& p, const T& lambda, const Alpha<T>& a);

struct FluctuationSolution {
  bool feasible = false;
  QuadraticSolution right;  // quadratic in q_right
  QuadraticSolution left;   // quadratic in q_left
  std::optional<Number> q_right;
  std::optional<Number> q_left;
  /// Residuals of the two bilinear equations the quadratics come from,
  /// evaluated at the returned pair.
  double bilinear_residual_left = 0.0;
  double bilinear_residual_right = 0.0;
};

/// Both visit probabilities below 1 with no surviving movers. Feasible iff
/// each quadratic has a root in (0, 1), i.e. iff p > F.
template <class T>
FluctuationSolution solve_fluctuation_system(const T& p, const T& lambda, const Alpha<T>& a);

class NoSignChange : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct FixedPointResult {
  std::vector<double> roots;  // every sign change of F(p) - p found on the scan
  double tolerance = 1e-10;
  std::string caveat;
};

/// Solves p = F(p, lambda) by bisection with alpha held fixed in p.
FixedPointResult fixed_point_pc(double lambda, const Alpha<double>& a, double tol = 1e-10);
/// Same with alpha supplied as a function of p.
FixedPointResult fixed_point_pc(double lambda, const std::function<Alpha<double>(double)>& alpha_of_p,
                                double tol = 1e-10, int scan_points = 400);

nlohmann::json to_json(const QuadraticSolution& q);
nlohmann::json to_json(const FluctuationSolution& s);
nlohmann::json to_json(const FixedPointResult& r);
template <class T>
nlohmann::json to_json(const BoundSet<T>& b);
template <class T>
nlohmann::json to_json(const FValue<T>& f);

}  // namespace balab
