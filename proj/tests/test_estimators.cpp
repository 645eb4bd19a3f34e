#include "balab/estimators.hpp"
#include "balab/oracle.hpp"

#include <doctest.h>

#include <cmath>

using namespace balab;

namespace {

bool within(double est, double se, double target, double sigmas = 4.0) {
  return std::abs(est - target) <= sigmas * se + 1e-12;
}

// An AlphaTriple with the given counts, as estimate_alpha would report it.
AlphaTriple alpha_from_counts(std::size_t right_first, std::size_t left_first, std::size_t ties) {
  AlphaTriple a;
  a.right_first = right_first;
  a.left_first = left_first;
  a.ties = ties;
  a.conditioned = a.trials = right_first + left_first + ties;
  const double m = static_cast<double>(a.conditioned);
  const double r = (right_first + ties) / m;
  const double l = (left_first + ties) / m;
  const double h = ties / m;
  a.right = {r, std::sqrt(r * (1 - r) / m)};
  a.left = {l, std::sqrt(l * (1 - l) / m)};
  a.hat = {h, std::sqrt(h * (1 - h) / m)};
  return a;
}

}  // namespace

TEST_CASE("q with one particle") {
  const Params params(0.3, 0.4);
  const auto e = estimate_q(Side::Positive, SpacingSpec::exponential(), params, 1, 20000, {1, 0, "q1"});
  CHECK(e.direction == BoundDirection::LowerBound);
  CHECK(within(e.value, e.se, 0.6 * 0.7));
}

TEST_CASE("q against exact enumeration, unit spacing") {
  const Params params(0.25, 0.5);
  for (int n : {3, 6, 9}) {
    const auto e = estimate_q(Side::Positive, SpacingSpec::unit(), params, n, 40000, {2, 0, "qx"});
    const double exact = exact_truncated_q(n, Rational(1, 4), Rational(1, 2)).convert_to<double>();
    CHECK_MESSAGE(within(e.value, e.se, exact), "n=" << n);
  }
}

TEST_CASE("q near one in the fluctuation regime") {
  const auto e = estimate_q(Side::Positive, SpacingSpec::exponential(), Params(0.1, 0.5), 512, 4000, {3, 0, "qf"});
  CHECK(e.value >= 0.9);
}

TEST_CASE("q is monotone in the window under common randomness") {
  const Params params(0.3, 0.5);
  double prev = 0.0;
  for (std::size_t n : {8, 16, 32, 64, 128}) {
    const auto e = estimate_q(Side::Positive, SpacingSpec::exponential(), params, n, 5000, {4, 0, "mono"});
    CHECK(e.value >= prev);
    prev = e.value;
  }
}

TEST_CASE("alpha") {
  SUBCASE("symmetric atomless") {
    const auto a = estimate_alpha(SpacingSpec::exponential(), Params(0.3, 0.5), 256, 20000, {5, 0, "a"});
    REQUIRE_FALSE(a.degenerate);
    CHECK(within(a.right.value, a.right.se, 0.5));
    CHECK(within(a.left.value, a.left.se, 0.5));
    CHECK(a.hat.value == 0.0);
    CHECK(a.float_ties == 0);
  }
  SUBCASE("unit spacing ties") {
    const auto a = estimate_alpha(SpacingSpec::unit(), Params(0.3, 0.5), 256, 20000, {6, 0, "a"});
    REQUIRE_FALSE(a.degenerate);
    CHECK(a.hat.value > 0.0);
    CHECK(a.right_first + a.left_first + a.ties == a.conditioned);
    // right = (right_first + ties) / m, left = (left_first + ties) / m
    CHECK(a.right.value + a.left.value - 1.0 == doctest::Approx(a.hat.value).epsilon(1e-12));
  }
}

TEST_CASE("beta") {
  SUBCASE("fixation kills movers") {
    const auto b = estimate_beta(SpacingSpec::exponential(), Params(0.6, 0.5), {64, 128, 256}, 5000, {7, 0, "b"});
    CHECK(b.beta_right().value <= 0.05);
    CHECK(b.beta_left().value <= 0.05);
  }
  SUBCASE("right movers dominate") {
    const auto b = estimate_beta(SpacingSpec::exponential(), Params(0.05, 0.9), {64, 128, 256, 512}, 4000, {8, 0, "b"});
    CHECK(b.beta_right().value > 0.3);
    CHECK(b.stability_right < 0.05);
    CHECK(std::min(b.beta_right().value, b.beta_left().value) <= kBetaZeroTolerance);
  }
}

TEST_CASE("mean Z with one particle") {
  const double p = 0.3;
  const double lam = 0.4;
  const Params params(p, lam);
  const auto l = estimate_mean_z(Side::Positive, SpacingSpec::exponential(), params, 1, 40000, {9, 0, "z"});
  const auto r = estimate_mean_z(Side::Negative, SpacingSpec::exponential(), params, 1, 40000, {9, 0, "z"});
  // Z-left(1,1) = [B] - [L], Z-right(-1,-1) = [B] - [R].
  CHECK(within(l.value, l.se, p - (1 - lam) * (1 - p)));
  CHECK(within(r.value, r.se, p - lam * (1 - p)));
}

TEST_CASE("mean Z against exact enumeration") {
  const Params params(0.3, 0.45);
  for (int k : {2, 5, 8}) {
    const auto e = estimate_mean_z(Side::Positive, SpacingSpec::unit(), params, k, 40000, {10, 0, "zx"});
    const double exact =
        enumerate_exact(k, Rational(3, 10), Rational(9, 20), Statistic::ZLeft).expectation.convert_to<double>() / k;
    CHECK_MESSAGE(within(e.value, e.se, exact), "k=" << k);
  }
}

TEST_CASE("theta bracket") {
  SUBCASE("p = 0.4: positive lower bound") {
    const auto t = theta_bracket(SpacingSpec::exponential(), Params(0.4, 0.5), 256, geometric_grid(64), 20000, {11, 0, "t"});
    CHECK(t.lower.value > 0.0625 - 4 * t.lower.se);
    CHECK(t.consistent());
  }
  SUBCASE("p = 0.2: lower bound vanishes") {
    const auto t = theta_bracket(SpacingSpec::exponential(), Params(0.2, 0.5), 256, geometric_grid(64), 20000, {12, 0, "t"});
    CHECK(t.lower.value == 0.0);
    CHECK(t.upper.value < 0.1);
    CHECK(t.consistent());
  }
}

TEST_CASE("results do not depend on the worker count") {
  const Params params(0.3, 0.5);
  const auto a = theta_bracket(SpacingSpec::exponential(), params, 128, geometric_grid(32), 3000, {13, 0, "w"}, {1});
  const auto b = theta_bracket(SpacingSpec::exponential(), params, 128, geometric_grid(32), 3000, {13, 0, "w"}, {4});
  CHECK(to_json(a).dump() == to_json(b).dump());
  const auto c = estimate_alpha(SpacingSpec::unit(), params, 64, 3000, {13, 0, "w"}, {1});
  const auto d = estimate_alpha(SpacingSpec::unit(), params, 64, 3000, {13, 0, "w"}, {3});
  CHECK(to_json(c).dump() == to_json(d).dump());
}

TEST_CASE("superadditivity") {
  const auto mc = check_superadditivity(SpacingSpec::exponential(), Params(0.3, 0.5), 1, 20, 50, 10000, {14, 0, "s"});
  CHECK(mc.violations == 0);
  CHECK(mc.conditioned > 0);
  CHECK(check_superadditivity_exhaustive(1, 3, 6).violations == 0);
  CHECK(check_superadditivity_exhaustive(1, 5, 6).violations == 0);  // b + 1 = c
  CHECK(check_superadditivity_exhaustive(1, 5, 6).samples == 729);
}

TEST_CASE("dichotomy") {
  SUBCASE("lambda = 0.3, p = 0.1") {
    const SpacingSpec spec = SpacingSpec::exponential();
    const Params params(0.1, 0.3);
    const auto qr = estimate_q(Side::Negative, spec, params, 256, 5000, {15, 0, "qr"});
    const auto ql = estimate_q(Side::Positive, spec, params, 256, 5000, {15, 0, "ql"});
    const auto a = estimate_alpha(spec, params, 256, 5000, {15, 0, "a"});
    const auto b = estimate_beta(spec, params, {128, 256}, 5000, {15, 0, "b"});
    const auto d = check_dichotomy(qr, ql, a, b.beta_right(), b.beta_left(), params);
    CHECK(d.predicted == "right-vanishes");
    CHECK(d.consistent());
    CHECK(b.beta_right().value <= kBetaZeroTolerance);
  }
  SUBCASE("symmetric inputs") {
    const Estimate one{1.0, 0.0};
    const auto a = alpha_from_counts(500, 500, 0);
    const auto d = check_dichotomy(one, one, a, {0.0, 0.0}, {0.0, 0.0}, Params(0.2, 0.5));
    CHECK(d.predicted == "both");
  }
  SUBCASE("lambda > 1/2 with symmetric alpha") {
    const auto a = alpha_from_counts(5000, 5000, 0);
    const auto d = check_dichotomy({0.9, 0.001}, {0.8, 0.001}, a, {0.2, 0.001}, {0.0, 0.001}, Params(0.2, 0.7));
    CHECK(d.predicted == "left-vanishes");
  }
}

TEST_CASE("identities at a symmetric point") {
  const SpacingSpec spec = SpacingSpec::exponential();
  const Params params(0.35, 0.5);
  const auto qr = estimate_q(Side::Negative, spec, params, 256, 20000, {16, 0, "qr"});
  const auto ql = estimate_q(Side::Positive, spec, params, 256, 20000, {16, 0, "ql"});
  const auto a = estimate_alpha(spec, params, 256, 20000, {16, 0, "a"});
  const auto b = estimate_beta(spec, params, {128, 256}, 20000, {16, 0, "b"});
  const auto cc = estimate_collision_classes(spec, params, 256, 20000, {16, 0, "c"});
  const auto rep = check_identities(qr, ql, a, b.beta_right(), b.beta_left(), params, cc);
  CHECK(rep.residuals.size() == 7);
  for (const auto& r : rep.residuals) CHECK_MESSAGE(!r.flagged, r.name << " " << r.value << " se " << r.se);

  // Symmetric inputs make the difference equation vanish identically.
  const auto sa = alpha_from_counts(500, 500, 0);
  const auto sym = check_identities({0.7, 0.01}, {0.7, 0.01}, sa, {0.0, 0.01}, {0.0, 0.01}, params);
  for (const auto& r : sym.residuals)
    if (r.name == "recursion-difference") CHECK(r.value == doctest::Approx(0.0));
}

TEST_CASE("geometric visit counts") {
  const auto g = check_geometric_visits(SpacingSpec::exponential(), Params(0.45, 0.5), 256, 20000, {17, 0, "g"});
  CHECK(g.p_value > 1e-3);
  const double p0 = static_cast<double>(g.observed[0]) / g.trials;
  CHECK(std::abs(p0 - (1 - g.q_left)) < 1e-12);
  CHECK(std::abs(g.mean - g.geometric_mean) < 4 * std::hypot(g.mean_se, g.geometric_mean_se));
}
