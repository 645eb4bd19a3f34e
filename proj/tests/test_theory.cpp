#include "balab/theory.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace balab;

namespace {

Alpha<double> random_alpha(std::mt19937_64& g) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double h = u(g);
  const double ar = h + (1 - h) * u(g);
  return {ar, 1 + h - ar, h};
}

double quad_at(const QuadraticSolution& s, double q) {
  return s.a.to_double() * q * q + s.b.to_double() * q + s.c.to_double();
}

}  // namespace

TEST_CASE("F at lambda = 1/2 is 1/4") {
  const auto sym = symmetric_alpha<Rational>();
  for (auto p : {Rational(1, 10), Rational(1, 3), Rational(9, 10)}) CHECK(eval_F(p, Rational(1, 2), sym).value == Rational(1, 4));
  for (double p : {0.05, 0.25, 0.7}) CHECK(eval_F(p, 0.5, symmetric_alpha<double>()).value == 0.25);
}

TEST_CASE("F floor and mirror on random inputs") {
  std::mt19937_64 g(99);
  std::uniform_real_distribution<double> u(0.001, 0.999);
  for (int i = 0; i < 100000; ++i) {
    const auto a = random_alpha(g);
    const double lam = u(g);
    const double p = u(g);
    const auto f = eval_F(p, lam, a);  // throws if the two forms disagree
    CHECK(f.value >= 1.0 / (4.0 + a.hat) - 1e-12);
    const auto m = eval_F(p, 1 - lam, Alpha<double>{a.left, a.right, a.hat});
    CHECK(m.value == doctest::Approx(f.value).epsilon(1e-12));
  }
}

TEST_CASE("F with full ties") {
  const Alpha<Rational> a{1, 1, 1};
  const auto f = eval_F(Rational(1, 3), Rational(1, 2), a);
  CHECK(f.value >= Rational(1, 5));
  CHECK(f.first == f.second);
}

TEST_CASE("alpha validation") {
  CHECK_THROWS_AS(validate_alpha(Alpha<Rational>{Rational(1, 2), Rational(1, 3), 0}), std::invalid_argument);
  CHECK_NOTHROW(validate_alpha(Alpha<Rational>{Rational(2, 3), Rational(1, 2), Rational(1, 6)}));
}

TEST_CASE("bound functions") {
  const auto b = eval_bound_functions(Rational(1, 2));
  CHECK(b.f_star1 == Rational(1, 5));
  CHECK(b.f_star2 == Rational(1, 4));
  CHECK(b.f_star_upper == Rational(1, 3));
  CHECK(b.elementary_lower == 0);
  CHECK(b.elementary_upper == Rational(1, 2));

  CHECK(eval_bound_functions(Rational(1, 4)).f_star1 == Rational(1, 3));
  CHECK(eval_bound_functions(0.999999).f_star_upper == doctest::Approx(0.5).epsilon(1e-5));

  for (int i = 1; i < 1000; ++i) {
    const double lam = i / 1000.0;
    const auto x = eval_bound_functions(lam);
    const auto y = eval_bound_functions(1 - lam);
    CHECK(x.elementary_lower <= x.f_star1);
    CHECK(x.f_star1 <= x.f_star2);
    CHECK(x.f_star_upper <= x.elementary_upper);
    CHECK(x.f_star1 == doctest::Approx(y.f_star1));
    CHECK(x.f_star2 == doctest::Approx(y.f_star2));
    CHECK(x.f_star_upper == doctest::Approx(y.f_star_upper));
    for (double v : {x.elementary_lower, x.f_star1, x.f_star2, x.f_star_upper}) {
      CHECK(v >= 0);
      CHECK(v <= 1);
    }
  }
  const auto withF = eval_bound_functions(0.3, 0.5, symmetric_alpha<double>());
  REQUIRE(withF.f_of_p);
  CHECK(*withF.f_of_p == 0.25);
}

TEST_CASE("fluctuation system, symmetric") {
  const auto sym = symmetric_alpha<Rational>();
  SUBCASE("p = 9/25") {
    const auto s = solve_fluctuation_system(Rational(9, 25), Rational(1, 2), sym);
    REQUIRE(s.feasible);
    // closed form 1/sqrt(p) - 1
    CHECK(s.q_right->rational() == Rational(2, 3));
    CHECK(s.q_left->rational() == Rational(2, 3));
    CHECK(std::abs(s.bilinear_residual_left) < 1e-12);
    CHECK(std::abs(s.bilinear_residual_right) < 1e-12);
    const auto d = solve_fluctuation_system(0.36, 0.5, symmetric_alpha<double>());
    REQUIRE(d.feasible);
    CHECK(std::abs(d.q_left->to_double() - (1 / std::sqrt(0.36) - 1)) < 1e-10);
  }
  SUBCASE("p = 1/4 is marginal") {
    const auto s = solve_fluctuation_system(Rational(1, 4), Rational(1, 2), sym);
    CHECK_FALSE(s.feasible);
    CHECK(s.right.degenerate);
    CHECK(s.left.degenerate);
  }
  SUBCASE("p = 1/10 is infeasible") {
    const auto s = solve_fluctuation_system(Rational(1, 10), Rational(1, 2), sym);
    CHECK_FALSE(s.feasible);
    CHECK(Rational(1, 10) <= eval_F(Rational(1, 10), Rational(1, 2), sym).value);
  }
}

TEST_CASE("feasibility onset equals F") {
  std::mt19937_64 g(5);
  std::uniform_real_distribution<double> u(0.05, 0.95);
  for (int i = 0; i < 200; ++i) {
    const auto a = random_alpha(g);
    const double lam = u(g);
    const double F = eval_F(0.5, lam, a).value;
    double lo = 1e-6;
    double hi = 1 - 1e-6;
    if (!solve_fluctuation_system(hi, lam, a).feasible) {
      CHECK(F >= hi - 1e-6);
      continue;
    }
    if (solve_fluctuation_system(lo, lam, a).feasible) {
      CHECK(F <= lo + 1e-6);
      continue;
    }
    while (hi - lo > 1e-9) {
      const double mid = 0.5 * (lo + hi);
      (solve_fluctuation_system(mid, lam, a).feasible ? hi : lo) = mid;
    }
    CHECK(std::abs(hi - F) < 1e-6);
  }
}

TEST_CASE("trichotomy quadratics") {
  SUBCASE("symmetric case1 is degenerate at 1") {
    const auto s = solve_trichotomy_case1(Rational(1, 3), Rational(1, 2), symmetric_alpha<Rational>());
    CHECK(s.degenerate);
    // roots 1 and (1-p)/p
    REQUIRE(s.roots.size() == 2);
    CHECK(s.roots[0].rational() == 1);
    CHECK(s.roots[1].rational() == 2);
  }
  SUBCASE("sign conditions") {
    std::mt19937_64 g(17);
    std::uniform_real_distribution<double> u(0.02, 0.98);
    for (int i = 0; i < 2000; ++i) {
      const auto a = random_alpha(g);
      const double p = u(g);
      const double lam = u(g);
      for (const auto& s : {solve_trichotomy_case1(p, lam, a), solve_trichotomy_case2(p, lam, a)}) {
        CHECK(s.f0.to_double() >= 0);
        if (s.f1.to_double() <= 0) {
          REQUIRE(s.selected);
          const double q = s.selected->to_double();
          CHECK(q >= 0);
          CHECK(q <= 1);
          CHECK(std::abs(quad_at(s, q)) < 1e-9);
        }
      }
    }
  }
}

TEST_CASE("fixed points") {
  const auto r = fixed_point_pc(0.5, symmetric_alpha<double>());
  REQUIRE(r.roots.size() == 1);
  CHECK(std::abs(r.roots[0] - 0.25) < 1e-10);
  CHECK_FALSE(r.caveat.empty());

  const auto ties = fixed_point_pc(0.5, Alpha<double>{1, 1, 1});
  REQUIRE_FALSE(ties.roots.empty());
  CHECK(ties.roots[0] >= 0.2 - 1e-10);

  // p-dependent alpha: the root moves with it.
  const auto moving = fixed_point_pc(0.5, [](double p) {
    const double h = p / 2;
    return Alpha<double>{0.5 + h / 2, 0.5 + h / 2, h};
  });
  REQUIRE_FALSE(moving.roots.empty());
  const double pc = moving.roots[0];
  CHECK(std::abs(eval_F(pc, 0.5, Alpha<double>{0.5 + pc / 4, 0.5 + pc / 4, pc / 2}).value - pc) < 1e-8);
}
