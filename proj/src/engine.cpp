#include "balab/engine.hpp"

#include "balab/kernel.hpp"
#include "scaled.hpp"

#include <algorithm>
#include <ostream>
#include <stdexcept>

namespace balab {

namespace {

template <class T, class ToNumber>
WindowOutcome build_outcome(const Configuration& c, const Kernel<T>& k, ToNumber&& half) {
  WindowOutcome out;
  out.mode = c.mode;
  out.first = c.particles.front().index;
  out.last = c.particles.back().index;
  const std::size_t n = c.size();
  out.indices.reserve(n);
  out.velocities.reserve(n);
  out.positions.reserve(n);
  for (const auto& p : c.particles) {
    out.indices.push_back(p.index);
    out.velocities.push_back(p.velocity);
    out.positions.push_back(p.position);
  }
  out.collisions.reserve(k.collisions().size());
  for (const auto& kc : k.collisions()) {
    CollisionRecord r;
    r.time = half(kc.time2);
    r.position = half(kc.pos2);
    if (kc.is_triple()) {
      r.kind = CollisionKind::Triple;
      r.indices = {c.particles[kc.a].index, c.particles[kc.b].index, c.particles[kc.c].index};
    } else {
      r.kind = CollisionKind::Pair;
      r.indices = {c.particles[kc.a].index, c.particles[kc.b].index, 0};
    }
    out.collisions.push_back(std::move(r));
  }
  out.fates.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int f = k.fate()[i];
    if (f >= 0) out.fates[i].collision = static_cast<std::size_t>(f);
  }
  for (int i : k.survivors()) {
    out.survivors.push_back(c.particles[i].index);
    switch (c.particles[i].velocity) {
      case Velocity::Blockade: ++out.counts.dot; break;
      case Velocity::Left: ++out.counts.left; break;
      case Velocity::Right: ++out.counts.right; break;
    }
  }
  if (c.mode == Mode::Float) out.anomalies = static_cast<std::size_t>(k.triples());
  if (out.first == 1) out.first_left_visitor = first_left_visitor(out);
  if (out.last == -1) out.first_right_visitor = first_right_visitor(out);
  return out;
}

template <class I>
bool resolve_lattice(const Configuration& c, std::span<const Velocity> v, WindowOutcome& out) {
  BigInt denom;
  std::vector<I> xs;
  if (!detail::scale_positions<I>(c, denom, xs)) return false;
  Kernel<I> k;
  k.run(xs, v);
  const BigInt two_d = denom * 2;
  out = build_outcome(c, k, [&](I v2) { return Number(Rational(detail::from_lattice_int<I>(v2), two_d)); });
  return true;
}

}  // namespace

const Fate& WindowOutcome::fate(long index) const {
  auto it = std::lower_bound(indices.begin(), indices.end(), index);
  if (it == indices.end() || *it != index) throw std::out_of_range("no particle with index " + std::to_string(index));
  return fates[static_cast<std::size_t>(it - indices.begin())];
}

std::size_t WindowOutcome::pair_count() const {
  return static_cast<std::size_t>(
      std::count_if(collisions.begin(), collisions.end(), [](const auto& r) { return r.kind == CollisionKind::Pair; }));
}

std::size_t WindowOutcome::triple_count() const { return collisions.size() - pair_count(); }

std::string WindowOutcome::survivor_pattern() const {
  std::string s;
  for (long idx : survivors) {
    auto it = std::lower_bound(indices.begin(), indices.end(), idx);
    s += velocity_char(velocities[static_cast<std::size_t>(it - indices.begin())]);
  }
  return s;
}

WindowOutcome resolve(const Configuration& config) {
  if (config.empty()) throw std::invalid_argument("resolve: empty configuration");
  config.validate();
  std::vector<Velocity> v;
  v.reserve(config.size());
  for (const auto& p : config.particles) v.push_back(p.velocity);

  WindowOutcome out;
  if (config.mode == Mode::Float) {
    std::vector<double> xs;
    xs.reserve(config.size());
    for (const auto& p : config.particles) xs.push_back(p.position.to_double());
    Kernel<double> k;
    k.run(xs, v);
    return build_outcome(config, k, [](double v2) { return Number(v2 * 0.5); });
  }
  if (resolve_lattice<std::int64_t>(config, v, out)) return out;
  if (resolve_lattice<Int128>(config, v, out)) return out;
  std::vector<Rational> xs;
  xs.reserve(config.size());
  for (const auto& p : config.particles) xs.push_back(p.position.rational());
  Kernel<Rational> k;
  k.run(xs, v);
  return build_outcome(config, k, [](const Rational& v2) { return Number(Rational(v2 / 2)); });
}

SurvivorCounts survivor_counts(const WindowOutcome& outcome) { return outcome.counts; }

ZStats z_stats(const WindowOutcome& outcome) {
  return {outcome.counts.dot - outcome.counts.left, outcome.counts.dot - outcome.counts.right};
}

std::optional<Visit> first_left_visitor(const WindowOutcome& outcome) {
  if (outcome.first != 1) throw std::invalid_argument("first_left_visitor needs a window starting at index 1");
  if (outcome.survivors.empty()) return std::nullopt;
  // Survivors read L* B* R*, so a surviving Left exists iff the first one is.
  const long idx = outcome.survivors.front();
  auto pos = static_cast<std::size_t>(std::lower_bound(outcome.indices.begin(), outcome.indices.end(), idx) -
                                      outcome.indices.begin());
  if (outcome.velocities[pos] != Velocity::Left) return std::nullopt;
  return Visit{idx, outcome.positions[pos]};
}

std::optional<Visit> first_right_visitor(const WindowOutcome& outcome) {
  if (outcome.last != -1) throw std::invalid_argument("first_right_visitor needs a window ending at index -1");
  if (outcome.survivors.empty()) return std::nullopt;
  const long idx = outcome.survivors.back();
  auto pos = static_cast<std::size_t>(std::lower_bound(outcome.indices.begin(), outcome.indices.end(), idx) -
                                      outcome.indices.begin());
  if (outcome.velocities[pos] != Velocity::Right) return std::nullopt;
  const Number& x = outcome.positions[pos];
  return Visit{idx, x.is_exact() ? Number(Rational(-x.rational())) : Number(-x.to_double())};
}

Configuration mirror(const Configuration& config) {
  Configuration m;
  m.mode = config.mode;
  if (config.provenance) {
    m.provenance = config.provenance;
    m.provenance->params = config.provenance->params.mirrored();
  }
  m.particles.reserve(config.size());
  for (auto it = config.particles.rbegin(); it != config.particles.rend(); ++it) {
    Number x = it->position.is_exact() ? Number(Rational(-it->position.rational())) : Number(-it->position.to_double());
    m.particles.push_back({-it->index, std::move(x), reflect(it->velocity)});
  }
  return m;
}

namespace {

Number negate(const Number& x) {
  return x.is_exact() ? Number(Rational(-x.rational())) : Number(-x.to_double());
}

}  // namespace

WindowOutcome mirror(const WindowOutcome& o) {
  WindowOutcome m;
  m.first = -o.last;
  m.last = -o.first;
  m.mode = o.mode;
  const std::size_t n = o.size();
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t i = n - 1 - k;
    m.indices.push_back(-o.indices[i]);
    m.velocities.push_back(reflect(o.velocities[i]));
    m.positions.push_back(negate(o.positions[i]));
    m.fates.push_back(o.fates[i]);
  }
  for (const auto& r : o.collisions) {
    CollisionRecord c = r;
    c.position = negate(r.position);
    for (int i = 0; i < r.arity(); ++i)
      c.indices[static_cast<std::size_t>(i)] = -r.indices[static_cast<std::size_t>(r.arity() - 1 - i)];
    m.collisions.push_back(std::move(c));
  }
  for (auto it = o.survivors.rbegin(); it != o.survivors.rend(); ++it) m.survivors.push_back(-*it);
  m.counts = {o.counts.dot, o.counts.right, o.counts.left};
  if (o.first_left_visitor) m.first_right_visitor = Visit{-o.first_left_visitor->index, o.first_left_visitor->time};
  if (o.first_right_visitor) m.first_left_visitor = Visit{-o.first_right_visitor->index, o.first_right_visitor->time};
  m.anomalies = o.anomalies;
  return m;
}

Configuration to_exact(const Configuration& config) {
  if (config.mode == Mode::Exact) return config;
  Configuration e = config;
  e.mode = Mode::Exact;
  for (auto& p : e.particles) p.position = Number(p.position.to_rational());
  return e;
}

void write_collision_log(std::ostream& os, const WindowOutcome& outcome) {
  for (const auto& r : outcome.collisions) {
    os << r.time.str() << ' ' << r.position.str() << ' ' << (r.kind == CollisionKind::Pair ? "pair" : "triple");
    for (int i = 0; i < r.arity(); ++i) os << ' ' << r.indices[static_cast<std::size_t>(i)];
    os << '\n';
  }
}

}  // namespace balab
