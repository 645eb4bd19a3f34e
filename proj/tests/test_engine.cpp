#include "balab/engine.hpp"
#include "balab/oracle.hpp"
#include "lattice_oracle.hpp"

#include <doctest.h>

#include <set>

using namespace balab;

namespace {

constexpr auto R = Velocity::Right;
constexpr auto B = Velocity::Blockade;
constexpr auto L = Velocity::Left;

Rational q(long long a, long long b = 1) { return Rational(a, b); }

bool pattern_ok(const WindowOutcome& o) {
  int phase = 0;  // 0 Lefts, 1 Blockades, 2 Rights
  for (std::size_t i = 0; i < o.size(); ++i) {
    if (!o.fates[i].survives()) continue;
    const int k = speed(o.velocities[i]) + 1;  // L=0, B=1, R=2
    if (k < phase) return false;
    phase = k;
  }
  return true;
}

}  // namespace

TEST_CASE("worked examples") {
  SUBCASE("head-on pair") {
    const auto o = resolve(make_configuration({{1, R}, {2, L}}));
    REQUIRE(o.collisions.size() == 1);
    CHECK(o.collisions[0].kind == CollisionKind::Pair);
    CHECK(o.collisions[0].time == Number(q(1, 2)));
    CHECK(o.collisions[0].position == Number(q(3, 2)));
    CHECK(o.survivors.empty());
  }
  SUBCASE("triple") {
    const auto o = resolve(make_configuration({{1, R}, {2, B}, {3, L}}));
    REQUIRE(o.collisions.size() == 1);
    CHECK(o.collisions[0].kind == CollisionKind::Triple);
    CHECK(o.collisions[0].time == Number(q(1)));
    CHECK(o.collisions[0].position == Number(q(2)));
    CHECK(o.survivors.empty());
    CHECK(survivor_counts(o) == SurvivorCounts{0, 0, 0});
    CHECK(z_stats(o).z_left == 0);
  }
  SUBCASE("nearer collision preempts") {
    const auto o = resolve(make_configuration({{1, R}, {10, B}, {11, L}}));
    REQUIRE(o.collisions.size() == 1);
    CHECK(o.collisions[0].indices[0] == 2);
    CHECK(o.collisions[0].indices[1] == 3);
    CHECK(o.collisions[0].time == Number(q(1)));
    CHECK(o.collisions[0].position == Number(q(10)));
    CHECK(o.survivors == std::vector<long>{1});
  }
  SUBCASE("blockade absorbs the first left") {
    const auto o = resolve(make_configuration({{1, B}, {2, L}, {3, L}}));
    REQUIRE(o.collisions.size() == 1);
    CHECK(o.collisions[0].time == Number(q(1)));
    CHECK(o.collisions[0].position == Number(q(1)));
    CHECK(o.survivors == std::vector<long>{3});
    // independent check
    const auto ref = lattice::run({1, 2, 3}, {B, L, L});
    CHECK(ref.survivors == std::vector<int>{2});
  }
}

TEST_CASE("survivor counts") {
  std::vector<std::pair<long long, Velocity>> all_b;
  for (int i = 1; i <= 5; ++i) all_b.emplace_back(i, B);
  const auto o = resolve(make_configuration(all_b));
  CHECK(survivor_counts(o) == SurvivorCounts{5, 0, 0});
  CHECK(z_stats(o).z_left == 5);

  const auto l = resolve(make_configuration({{1, L}}));
  CHECK(survivor_counts(l) == SurvivorCounts{0, 1, 0});
  CHECK(z_stats(l).z_left == -1);
}

TEST_CASE("first left visitor") {
  SUBCASE("leading left") {
    const auto o = resolve(make_configuration({{1, L}, {2, R}, {3, B}}));
    REQUIRE(o.first_left_visitor);
    CHECK(o.first_left_visitor->index == 1);
    CHECK(o.first_left_visitor->time == Number(q(1)));
  }
  SUBCASE("R L L") {
    const auto o = resolve(make_configuration({{1, R}, {2, L}, {3, L}}));
    const auto ref = lattice::run({1, 2, 3}, {R, L, L});
    REQUIRE(lattice::sigma_left(ref, {R, L, L}));
    REQUIRE(o.first_left_visitor);
    CHECK(o.first_left_visitor->index == *lattice::sigma_left(ref, {R, L, L}));
    CHECK(o.first_left_visitor->time == Number(q(3)));
  }
  SUBCASE("B R L") {
    const auto o = resolve(make_configuration({{1, B}, {2, R}, {3, L}}));
    CHECK_FALSE(lattice::sigma_left(lattice::run({1, 2, 3}, {B, R, L}), {B, R, L}));
    CHECK_FALSE(o.first_left_visitor);
  }
}

TEST_CASE("mirror") {
  const auto c = make_configuration({{1, R}});
  const auto m = mirror(c);
  REQUIRE(m.size() == 1);
  CHECK(m.particles[0].index == -1);
  CHECK(m.particles[0].velocity == L);
  CHECK(m.particles[0].position == Number(q(-1)));

  const auto s = sample_half_configuration(SpacingSpec::exponential(), Params(0.3, 0.6), 40, Side::Positive, {1, 0, "m"});
  CHECK(format_configuration(mirror(mirror(s))) == format_configuration(s));
}

TEST_CASE("agrees with the lattice reference on every assignment, n <= 8") {
  for (int n = 1; n <= 8; ++n) {
    long long total = 1;
    for (int i = 0; i < n; ++i) total *= 3;
    std::vector<long long> x(n);
    for (int i = 0; i < n; ++i) x[i] = i + 1;
    for (long long code = 0; code < total; ++code) {
      const auto v = lattice::assignment(code, n);
      std::vector<std::pair<long long, Velocity>> xs;
      for (int i = 0; i < n; ++i) xs.emplace_back(x[i], v[i]);
      const auto o = resolve(make_configuration(xs));
      const auto ref = lattice::run(x, v);
      std::vector<int> surv;
      for (std::size_t i = 0; i < o.size(); ++i)
        if (o.fates[i].survives()) surv.push_back(static_cast<int>(i));
      REQUIRE(surv == ref.survivors);
      // event membership must match as sets of participants
      std::set<std::vector<long>> ea;
      std::set<std::vector<long>> eb;
      for (const auto& c : o.collisions) {
        std::vector<long> ids(c.indices.begin(), c.indices.begin() + c.arity());
        ea.insert(ids);
      }
      for (const auto& e : ref.events) {
        std::vector<long> ids;
        for (int i : e) ids.push_back(i + 1);
        eb.insert(ids);
      }
      REQUIRE(ea == eb);
    }
  }
}

TEST_CASE("invariants on random windows") {
  const Params params(0.3, 0.45);
  for (const char* spec_text : {"exp", "unit", "atomic:1@1/2,2@1/2", "uniform:0.5:1.5"}) {
    const SpacingSpec spec = SpacingSpec::parse(spec_text);
    for (std::uint64_t t = 0; t < 300; ++t) {
      const auto c = sample_half_configuration(spec, params, 60, Side::Positive, {21, t, "inv"});
      const auto o = resolve(c);
      CHECK(pattern_ok(o));
      CHECK(o.size() == o.survivors.size() + 2 * o.pair_count() + 3 * o.triple_count());
      for (const auto& rec : o.collisions) {
        if (rec.kind != CollisionKind::Pair) continue;
        const Velocity a = o.velocities[static_cast<std::size_t>(rec.indices[0] - 1)];
        const Velocity b = o.velocities[static_cast<std::size_t>(rec.indices[1] - 1)];
        CHECK(rec.indices[0] < rec.indices[1]);
        CHECK(((a == R && b == L) || (a == R && b == B) || (a == B && b == L)));
      }
      if (!spec.is_exact()) CHECK(o.anomalies == 0);
      if (!spec.is_exact()) CHECK(o.triple_count() == 0);
    }
  }
}

TEST_CASE("scaling by a rational") {
  const Params params(0.3, 0.5);
  const Rational k(7, 3);
  for (std::uint64_t t = 0; t < 100; ++t) {
    auto c = sample_half_configuration(SpacingSpec::unit(), params, 30, Side::Positive, {4, t, "scale"});
    const auto a = resolve(c);
    for (auto& p : c.particles) p.position = Number(Rational(p.position.rational() * k));
    const auto b = resolve(c);
    REQUIRE(a.collisions.size() == b.collisions.size());
    for (std::size_t i = 0; i < a.collisions.size(); ++i) {
      CHECK(b.collisions[i].time == Number(Rational(a.collisions[i].time.rational() * k)));
      CHECK(b.collisions[i].indices == a.collisions[i].indices);
    }
    CHECK(a.survivors == b.survivors);
  }
}

TEST_CASE("prefix stability of the first left visitor") {
  const Params params(0.3, 0.5);
  for (std::uint64_t t = 0; t < 500; ++t) {
    auto c = sample_half_configuration(SpacingSpec::exponential(), params, 80, Side::Positive, {8, t, "prefix"});
    const auto big = resolve(c);
    c.particles.resize(40);
    const auto small = resolve(c);
    if (big.first_left_visitor && big.first_left_visitor->index <= 40) {
      REQUIRE(small.first_left_visitor);
      CHECK(small.first_left_visitor->index == big.first_left_visitor->index);
    }
    if (small.first_left_visitor) {
      REQUIRE(big.first_left_visitor);
      CHECK(big.first_left_visitor->index == small.first_left_visitor->index);
    }
  }
}

TEST_CASE("large lattice denominators fall back to wider arithmetic") {
  // Denominators whose product overflows 64 bits.
  const auto c = parse_configuration(
      "1 1/1000000007 R; 2 1/999999937 B; 3 1/998244353 L; 4 1/99991 L; 5 1/9973 R; 6 1/97 L");
  const auto a = resolve(c);
  const auto b = naive_resolve(c);
  CHECK_FALSE(compare_outcomes(a, b));
}

TEST_CASE("input validation") {
  CHECK_THROWS_AS(resolve(Configuration{}), std::invalid_argument);
  Configuration dup = make_configuration({{1, R}, {2, L}});
  dup.particles[1].position = dup.particles[0].position;
  CHECK_THROWS_AS(resolve(dup), std::invalid_argument);
}
