#include "balab/theory.hpp"

#include <algorithm>
#include <cmath>

namespace balab {

namespace {

template <class T>
constexpr bool is_exact_v = std::is_same_v<T, Rational>;

template <class T>
Number num(const T& v) {
  if constexpr (is_exact_v<T>) return Number(Rational(v));
  else return Number(v);
}

template <class T>
double dbl(const T& v) {
  if constexpr (is_exact_v<T>) return v.template convert_to<double>();
  else return v;
}

template <class T>
T tmax(const T& a, const T& b) {
  return a < b ? b : a;
}

template <class T>
void require_unit_open(const T& v, const char* what) {
  if (!(v > 0 && v < 1)) throw std::invalid_argument(std::string(what) + " must lie in (0, 1)");
}

bool rational_sqrt(const Rational& r, Rational& out) {
  if (r < 0) return false;
  const BigInt n = numerator(r);
  const BigInt d = denominator(r);
  const BigInt sn = boost::multiprecision::sqrt(n);
  const BigInt sd = boost::multiprecision::sqrt(d);
  if (sn * sn != n || sd * sd != d) return false;
  out = Rational(sn, sd);
  return true;
}

// Roots of a q^2 + b q + c; selects the smallest root in [0, 1] (or (0, 1)
// when open is set).
template <class T>
QuadraticSolution solve_quadratic(const T& a, const T& b, const T& c, bool open) {
  QuadraticSolution s;
  s.a = num(a);
  s.b = num(b);
  s.c = num(c);
  const T f1 = T(a + b + c);
  s.f0 = num(c);
  s.f1 = num(f1);
  if constexpr (is_exact_v<T>) s.degenerate = f1 == 0;
  else s.degenerate = std::abs(f1) <= 1e-12;

  if (a == 0) {
    if (b != 0) s.roots.push_back(num(T(-c / b)));
  } else {
    const T disc = T(b * b - 4 * a * c);
    if (disc >= 0) {
      bool exact = false;
      if constexpr (is_exact_v<T>) {
        Rational root;
        if (rational_sqrt(disc, root)) {
          exact = true;
          s.roots.push_back(num(T((-b - root) / (2 * a))));
          s.roots.push_back(num(T((-b + root) / (2 * a))));
        }
      }
      if (!exact) {
        const double ad = dbl(a);
        const double bd = dbl(b);
        const double cd = dbl(c);
        const double sq = std::sqrt(dbl(disc));
        const double q = -0.5 * (bd + (bd >= 0 ? sq : -sq));
        if (q != 0.0) {
          s.roots.emplace_back(q / ad);
          s.roots.emplace_back(cd / q);
        } else {
          s.roots.emplace_back(0.0);
          s.roots.emplace_back(0.0);
        }
      }
      std::sort(s.roots.begin(), s.roots.end());
      if (s.roots[0] == s.roots[1]) s.roots.pop_back();
    }
  }

  const double eps = is_exact_v<T> ? 0.0 : 1e-12;
  for (const auto& r : s.roots) {
    bool inside;
    if (r.is_exact()) {
      inside = open ? (r.rational() > 0 && r.rational() < 1) : (r.rational() >= 0 && r.rational() <= 1);
    } else {
      const double v = r.to_double();
      inside = open ? (v > 0 && v < 1) : (v >= -eps && v <= 1 + eps);
    }
    if (inside) {
      s.selected = r;
      break;
    }
  }
  return s;
}

}  // namespace

template <class T>
void validate_alpha(const Alpha<T>& a) {
  auto in01 = [](const T& v) { return v >= 0 && v <= 1; };
  if (!in01(a.right) || !in01(a.left) || !in01(a.hat)) throw std::invalid_argument("alpha values must lie in [0, 1]");
  const T gap = T(a.right + a.left - 1 - a.hat);
  bool ok;
  if constexpr (is_exact_v<T>) ok = gap == 0;
  else ok = std::abs(gap) <= 1e-9;
  if (!ok) throw std::invalid_argument("alpha must satisfy alpha_right + alpha_left = 1 + alpha_hat");
}

template <class T>
FValue<T> eval_F(const T& p, const T& lambda, const Alpha<T>& a) {
  require_unit_open(p, "p");
  require_unit_open(lambda, "lambda");
  validate_alpha(a);
  const T& h = a.hat;
  const T d1 = T(lambda * (2 + h) + 1 + a.left - a.right);
  const T d2 = T((1 - lambda) * (2 + h) + 1 + a.right - a.left);
  FValue<T> f;
  f.first = T((lambda * (2 + h) - a.right) / d1);
  f.second = T(((1 - lambda) * (2 + h) - a.left) / d2);
  f.value = tmax(f.first, f.second);
  const T A = T(lambda * (3 + h) - 1 - a.right);
  f.rewritten = T(T(1) / (4 + h) + (2 + h) / (4 + h) * tmax(T(A / d1), T(-A / d2)));
  bool agree;
  if constexpr (is_exact_v<T>) {
    agree = f.value == f.rewritten;
  } else {
    agree = std::abs(f.value - f.rewritten) <= 1e-12 * std::max(std::abs(f.value), std::abs(f.rewritten)) + 1e-15;
  }
  if (!agree) throw std::logic_error("eval_F: the two forms of F disagree");
  return f;
}

template <class T>
BoundSet<T> eval_bound_functions(const T& lambda) {
  require_unit_open(lambda, "lambda");
  const T right_heavy = T((2 * lambda - 1) / (2 * lambda));
  const T left_heavy = T((1 - 2 * lambda) / (2 - 2 * lambda));
  BoundSet<T> b;
  b.elementary_lower = tmax(tmax(right_heavy, left_heavy), T(0));
  b.elementary_upper = T(1) / 2;
  b.f_star1 = tmax(tmax(left_heavy, T(T(1) / 5)), right_heavy);
  b.f_star2 = tmax(tmax(left_heavy, T(T(1) / 4)), right_heavy);
  b.f_star_upper = tmax(T((1 - lambda) / (2 - lambda)), T(lambda / (1 + lambda)));
  return b;
}

template <class T>
BoundSet<T> eval_bound_functions(const T& p, const T& lambda, const Alpha<T>& a) {
  BoundSet<T> b = eval_bound_functions(lambda);
  b.f_of_p = eval_F(p, lambda, a).value;
  return b;
}

template <class T>
QuadraticSolution solve_trichotomy_case1(const T& p, const T& lambda, const Alpha<T>& a) {
  require_unit_open(p, "p");
  require_unit_open(lambda, "lambda");
  validate_alpha(a);
  return solve_quadratic<T>(T(p * a.right), T(-(p * a.left + lambda * (1 - p))), T((1 - lambda) * (1 - p)), false);
}

template <class T>
QuadraticSolution solve_trichotomy_case2(const T& p, const T& lambda, const Alpha<T>& a) {
  require_unit_open(p, "p");
  require_unit_open(lambda, "lambda");
  validate_alpha(a);
  return solve_quadratic<T>(T(p * a.left), T(-(p * a.right + (1 - lambda) * (1 - p))), T(lambda * (1 - p)), false);
}

template <class T>
FluctuationSolution solve_fluctuation_system(const T& p, const T& lambda, const Alpha<T>& a) {
  require_unit_open(p, "p");
  require_unit_open(lambda, "lambda");
  validate_alpha(a);
  FluctuationSolution s;
  s.right = solve_quadratic<T>(T(p * a.left), T(((1 - lambda) * a.right - lambda * a.left) * (1 - p) + p),
                               T(-lambda * (1 - p)), true);
  s.left = solve_quadratic<T>(T(p * a.right), T((lambda * a.left - (1 - lambda) * a.right) * (1 - p) + p),
                              T(-(1 - lambda) * (1 - p)), true);
  s.feasible = s.right.selected.has_value() && s.left.selected.has_value();
  if (s.feasible) {
    s.q_right = s.right.selected;
    s.q_left = s.left.selected;
    const double qr = s.q_right->to_double();
    const double ql = s.q_left->to_double();
    const double pd = dbl(p);
    const double ld = dbl(lambda);
    s.bilinear_residual_left = pd * dbl(a.left) * qr * ql + pd * ql - (1 - ld) * (1 - pd);
    s.bilinear_residual_right = pd * dbl(a.right) * qr * ql + pd * qr - ld * (1 - pd);
  }
  return s;
}

FixedPointResult fixed_point_pc(double lambda, const std::function<Alpha<double>(double)>& alpha_of_p, double tol,
                                int scan_points) {
  auto g = [&](double p) { return eval_F(p, lambda, alpha_of_p(p)).value - p; };
  FixedPointResult r;
  r.tolerance = tol;
  r.caveat = "alpha supplied as a function of p";
  double prev_p = 1.0 / scan_points;
  double prev_g = g(prev_p);
  for (int i = 2; i < scan_points; ++i) {
    const double p = static_cast<double>(i) / scan_points;
    const double gp = g(p);
    if (prev_g == 0.0) {
      r.roots.push_back(prev_p);
    } else if ((prev_g < 0) != (gp < 0) && gp != 0.0) {
      double lo = prev_p;
      double hi = p;
      const bool lo_neg = prev_g < 0;
      while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        if ((g(mid) < 0) == lo_neg) lo = mid;
        else hi = mid;
      }
      r.roots.push_back(0.5 * (lo + hi));
    }
    prev_p = p;
    prev_g = gp;
  }
  if (prev_g == 0.0) r.roots.push_back(prev_p);
  if (r.roots.empty()) throw NoSignChange("fixed_point_pc: F(p) - p has no sign change on (0, 1)");
  return r;
}

FixedPointResult fixed_point_pc(double lambda, const Alpha<double>& a, double tol) {
  FixedPointResult r = fixed_point_pc(lambda, [&](double) { return a; }, tol);
  r.caveat = "alpha held constant in p; the true alpha depends on p";
  return r;
}

nlohmann::json to_json(const QuadraticSolution& q) {
  nlohmann::json roots = nlohmann::json::array();
  for (const auto& r : q.roots) roots.push_back(r.str());
  nlohmann::json j{{"coefficients", {q.a.str(), q.b.str(), q.c.str()}},
                   {"roots", roots},
                   {"f0", q.f0.str()},
                   {"f1", q.f1.str()},
                   {"degenerate", q.degenerate}};
  j["selected"] = q.selected ? nlohmann::json(q.selected->str()) : nlohmann::json(nullptr);
  return j;
}

nlohmann::json to_json(const FluctuationSolution& s) {
  nlohmann::json j{{"feasible", s.feasible}, {"right", to_json(s.right)}, {"left", to_json(s.left)}};
  j["qRight"] = s.q_right ? nlohmann::json(s.q_right->str()) : nlohmann::json(nullptr);
  j["qLeft"] = s.q_left ? nlohmann::json(s.q_left->str()) : nlohmann::json(nullptr);
  j["bilinearResidualLeft"] = s.bilinear_residual_left;
  j["bilinearResidualRight"] = s.bilinear_residual_right;
  return j;
}

nlohmann::json to_json(const FixedPointResult& r) {
  return {{"roots", r.roots}, {"tolerance", r.tolerance}, {"caveat", r.caveat}};
}

template <class T>
nlohmann::json to_json(const BoundSet<T>& b) {
  auto put = [](nlohmann::json& j, const char* key, const T& v) {
    j[key] = dbl(v);
    if constexpr (is_exact_v<T>) j[std::string(key) + "Exact"] = to_string(Rational(v));
  };
  nlohmann::json j;
  put(j, "elementaryLower", b.elementary_lower);
  put(j, "elementaryUpper", b.elementary_upper);
  put(j, "fStar1", b.f_star1);
  put(j, "fStar2", b.f_star2);
  put(j, "fStarUpper", b.f_star_upper);
  if (b.f_of_p) put(j, "fOfP", *b.f_of_p);
  return j;
}

template <class T>
nlohmann::json to_json(const FValue<T>& f) {
  nlohmann::json j{{"value", dbl(f.value)}, {"first", dbl(f.first)}, {"second", dbl(f.second)},
                   {"rewritten", dbl(f.rewritten)}};
  if constexpr (is_exact_v<T>) j["exact"] = to_string(Rational(f.value));
  return j;
}

#define BALAB_THEORY_INSTANTIATE(T)                                                                 \
  template void validate_alpha<T>(const Alpha<T>&);                                                 \
  template FValue<T> eval_F<T>(const T&, const T&, const Alpha<T>&);                                \
  template BoundSet<T> eval_bound_functions<T>(const T&);                                           \
  template BoundSet<T> eval_bound_functions<T>(const T&, const T&, const Alpha<T>&);                \
  template QuadraticSolution solve_trichotomy_case1<T>(const T&, const T&, const Alpha<T>&);        \
  template QuadraticSolution solve_trichotomy_case2<T>(const T&, const T&, const Alpha<T>&);        \
  template FluctuationSolution solve_fluctuation_system<T>(const T&, const T&, const Alpha<T>&);    \
  template nlohmann::json to_json<T>(const BoundSet<T>&);                                           \
  template nlohmann::json to_json<T>(const FValue<T>&);

BALAB_THEORY_INSTANTIATE(double)
BALAB_THEORY_INSTANTIATE(Rational)

}  // namespace balab
