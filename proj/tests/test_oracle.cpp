#include "balab/engine.hpp"
#include "balab/oracle.hpp"
#include "lattice_oracle.hpp"

#include <doctest.h>
#include <json.hpp>

#include <map>

using namespace balab;

namespace {

constexpr auto R = Velocity::Right;
constexpr auto B = Velocity::Blockade;
constexpr auto L = Velocity::Left;

Rational weight(const std::vector<Velocity>& v, const Rational& p, const Rational& lam) {
  Rational w = 1;
  for (auto x : v) {
    if (x == B) w *= p;
    else if (x == R) w *= lam * (1 - p);
    else w *= (1 - lam) * (1 - p);
  }
  return w;
}

// Distribution of the first-visitor index from the lattice reference.
std::map<int, Rational> sigma_distribution(int n, const Rational& p, const Rational& lam) {
  std::map<int, Rational> d;
  long long total = 1;
  for (int i = 0; i < n; ++i) total *= 3;
  std::vector<long long> x(n);
  for (int i = 0; i < n; ++i) x[i] = i + 1;
  for (long long code = 0; code < total; ++code) {
    const auto v = lattice::assignment(code, n);
    const auto s = lattice::sigma_left(lattice::run(x, v), v);
    d[s.value_or(0)] += weight(v, p, lam);
  }
  return d;
}

}  // namespace

TEST_CASE("naive resolver examples") {
  const auto c = make_configuration({{1, R}, {2, B}, {3, L}});
  const auto o = naive_resolve(c);
  REQUIRE(o.collisions.size() == 1);
  CHECK(o.collisions[0].kind == CollisionKind::Triple);
  CHECK_FALSE(compare_outcomes(o, resolve(c)));
}

TEST_CASE("naive resolver agrees on all 3^4 assignments") {
  for (long long code = 0; code < 81; ++code) {
    const auto v = lattice::assignment(code, 4);
    std::vector<std::pair<long long, Velocity>> xs;
    for (int i = 0; i < 4; ++i) xs.emplace_back(i + 1, v[i]);
    const auto c = make_configuration(xs);
    const auto why = compare_outcomes(resolve(c), naive_resolve(c));
    CHECK_MESSAGE(!why, why.value_or(""));
  }
}

TEST_CASE("naive resolver agrees on random exponential windows") {
  const Params params(0.3, 0.5);
  for (std::uint64_t t = 0; t < 10000; ++t) {
    const auto c = sample_half_configuration(SpacingSpec::exponential(), params, 50, Side::Positive, {12, t, "naive"});
    const auto why = compare_outcomes(resolve(c), naive_resolve(c));
    if (why) FAIL(*why);
  }
}

TEST_CASE("compare_outcomes notices differences") {
  const auto a = resolve(make_configuration({{1, R}, {2, L}, {3, L}}));
  const auto b = resolve(make_configuration({{1, R}, {2, B}, {3, L}}));
  CHECK(compare_outcomes(a, b));
  // Positions alone are not compared: same events, same fates.
  const auto c = resolve(make_configuration({{1, R}, {2, L}, {4, L}}));
  CHECK_FALSE(compare_outcomes(a, c));
}

TEST_CASE("first-visitor probabilities") {
  const Rational p(1, 4);
  const Rational lam(1, 2);
  const auto t3 = enumerate_exact(3, p, lam, Statistic::SigmaLeft);
  CHECK(t3.probability("sigma=1") == (1 - lam) * (1 - p));
  CHECK(t3.probability("sigma=2") == 0);
  const Rational closed = (1 - p) * (1 - p) * (1 - lam) * (1 - lam) * (lam * (1 - p) + p);
  CHECK(t3.probability("sigma=3") == closed);

  // Same numbers at an asymmetric point, against the lattice reference.
  const Rational p2(2, 7);
  const Rational lam2(3, 5);
  for (int n = 1; n <= 7; ++n) {
    const auto table = enumerate_exact(n, p2, lam2, Statistic::SigmaLeft);
    const auto ref = sigma_distribution(n, p2, lam2);
    for (const auto& [k, prob] : ref) {
      const std::string label = k == 0 ? "sigma=none" : "sigma=" + std::to_string(k);
      CHECK_MESSAGE(table.probability(label) == prob, label);
    }
  }
}

TEST_CASE("probabilities sum to one and polynomials evaluate back") {
  const Rational p(1, 3);
  const Rational lam(2, 5);
  for (Statistic s : {Statistic::SigmaLeft, Statistic::ZLeft, Statistic::ZRight, Statistic::NLeft, Statistic::NRight,
                      Statistic::NDot}) {
    const auto t = enumerate_exact(6, p, lam, s);
    Rational sum = 0;
    for (const auto& [label, prob] : t.probabilities) {
      sum += prob;
      CHECK(evaluate_polynomial(t.polynomial.at(label), p, lam) == prob);
    }
    CHECK(sum == 1);
  }
}

TEST_CASE("one-particle expectations") {
  const Rational p(3, 10);
  const Rational lam(2, 5);
  CHECK(enumerate_exact(1, p, lam, Statistic::ZLeft).expectation == p - (1 - lam) * (1 - p));
  CHECK(enumerate_exact(1, p, lam, Statistic::ZRight).expectation == p - lam * (1 - p));
  // At lambda = 1/2 the two coincide with p - lambda (1 - p).
  const Rational h(1, 2);
  CHECK(enumerate_exact(1, p, h, Statistic::ZLeft).expectation == p - h * (1 - p));
}

TEST_CASE("truncated visit probability") {
  const Rational p(1, 4);
  const Rational lam(1, 2);
  CHECK(exact_truncated_q(1, p, lam) == (1 - lam) * (1 - p));
  CHECK(exact_truncated_q(2, p, lam) == exact_truncated_q(1, p, lam));
  const auto ref = sigma_distribution(3, p, lam);
  CHECK(exact_truncated_q(3, p, lam) == ref.at(1) + ref.at(3));
  Rational prev = 0;
  for (int n = 1; n <= 9; ++n) {
    const Rational q = exact_truncated_q(n, p, lam);
    CHECK(q >= prev);
    prev = q;
  }
}

TEST_CASE("enumeration cap") {
  CHECK_THROWS_AS(enumerate_exact(kMaxEnumeration + 1, Rational(1, 4), Rational(1, 2), Statistic::NDot), BudgetExceeded);
  CHECK_THROWS_AS(exact_truncated_q(kMaxEnumeration + 1, Rational(1, 4), Rational(1, 2)), BudgetExceeded);
}

TEST_CASE("table json") {
  const auto t = enumerate_exact(2, Rational(1, 4), Rational(1, 2), Statistic::SigmaLeft);
  const auto j = nlohmann::json::parse(t.to_json());
  CHECK(j["p"] == "1/4");
  CHECK(j["probabilities"]["sigma=1"] == "3/8");
}
