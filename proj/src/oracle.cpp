#include "balab/oracle.hpp"

#include "balab/kernel.hpp"
#include "scaled.hpp"

#include <json.hpp>

#include <algorithm>
#include <limits>
#include <optional>

namespace balab {

namespace {

template <class T>
struct NaiveResult {
  std::vector<int> fate;
  std::vector<KernelCollision<T>> collisions;
};

template <class T>
NaiveResult<T> naive_core(std::span<const T> x, std::span<const Velocity> v) {
  const int n = static_cast<int>(x.size());
  NaiveResult<T> r;
  r.fate.assign(n, -1);
  std::vector<int> alive(n);
  for (int i = 0; i < n; ++i) alive[i] = i;

  while (true) {
    std::optional<T> best;
    std::vector<std::pair<int, int>> hits;  // pairs meeting at the earliest time
    for (std::size_t ii = 0; ii < alive.size(); ++ii) {
      for (std::size_t jj = ii + 1; jj < alive.size(); ++jj) {
        const int i = alive[ii];
        const int j = alive[jj];
        const int closing = speed(v[i]) - speed(v[j]);
        if (closing <= 0) continue;
        // 2t = 2 (x_j - x_i) / closing, exact for closing in {1, 2}.
        T t2 = closing == 2 ? T(x[j] - x[i]) : T((x[j] - x[i]) * 2);
        if (!best || t2 < *best) {
          best = t2;
          hits.clear();
        }
        if (t2 == *best) hits.emplace_back(i, j);
      }
    }
    if (!best) break;
    const T t2 = *best;

    // Pairs sharing a particle merge into one event. Grouping by meeting
    // time rather than by recomputed position keeps float rounding from
    // splitting an event.
    std::vector<std::vector<int>> groups;
    for (auto [i, j] : hits) {
      std::vector<int>* g = nullptr;
      for (auto& grp : groups)
        if (std::find(grp.begin(), grp.end(), i) != grp.end() || std::find(grp.begin(), grp.end(), j) != grp.end())
          g = &grp;
      if (!g) g = &groups.emplace_back();
      for (int k : {i, j})
        if (std::find(g->begin(), g->end(), k) == g->end()) g->push_back(k);
    }
    for (auto& g : groups) {
      if (g.size() > 3) throw std::logic_error("naive_resolve: more than three particles coincide");
      std::sort(g.begin(), g.end());
      // Meeting point: the blockade if there is one, else the midpoint.
      T pos2 = T(x[g[0]] + x[g[1]]);
      for (int k : g)
        if (v[k] == Velocity::Blockade) pos2 = T(x[k] * 2);
      const int id = static_cast<int>(r.collisions.size());
      r.collisions.push_back(KernelCollision<T>{t2, pos2, g[0], g[1], g.size() == 3 ? g[2] : -1});
      for (int k : g) r.fate[k] = id;
    }
    std::erase_if(alive, [&](int i) { return r.fate[i] >= 0; });
  }
  return r;
}

template <class T, class Half>
WindowOutcome naive_outcome(const Configuration& c, std::span<const T> xs, Half&& half) {
  std::vector<Velocity> v;
  for (const auto& p : c.particles) v.push_back(p.velocity);
  NaiveResult<T> r = naive_core<T>(xs, v);

  WindowOutcome out;
  out.mode = c.mode;
  out.first = c.particles.front().index;
  out.last = c.particles.back().index;
  for (const auto& p : c.particles) {
    out.indices.push_back(p.index);
    out.velocities.push_back(p.velocity);
    out.positions.push_back(p.position);
  }
  for (const auto& kc : r.collisions) {
    CollisionRecord rec;
    rec.time = half(kc.time2);
    rec.position = half(kc.pos2);
    rec.kind = kc.c >= 0 ? CollisionKind::Triple : CollisionKind::Pair;
    rec.indices = {c.particles[kc.a].index, c.particles[kc.b].index, kc.c >= 0 ? c.particles[kc.c].index : 0};
    if (rec.kind == CollisionKind::Triple && c.mode == Mode::Float) ++out.anomalies;
    out.collisions.push_back(std::move(rec));
  }
  out.fates.resize(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (r.fate[i] >= 0) {
      out.fates[i].collision = static_cast<std::size_t>(r.fate[i]);
    } else {
      out.survivors.push_back(c.particles[i].index);
      switch (c.particles[i].velocity) {
        case Velocity::Blockade: ++out.counts.dot; break;
        case Velocity::Left: ++out.counts.left; break;
        case Velocity::Right: ++out.counts.right; break;
      }
    }
  }
  if (out.first == 1) out.first_left_visitor = first_left_visitor(out);
  if (out.last == -1) out.first_right_visitor = first_right_visitor(out);
  return out;
}

template <class I>
std::optional<WindowOutcome> naive_lattice(const Configuration& c) {
  BigInt denom;
  std::vector<I> xs;
  if (!detail::scale_positions<I>(c, denom, xs)) return std::nullopt;
  const BigInt two_d = denom * 2;
  return naive_outcome<I>(c, xs, [&](I v2) { return Number(Rational(detail::from_lattice_int<I>(v2), two_d)); });
}

Rational ipow(const Rational& b, int e) {
  Rational r = 1;
  for (int i = 0; i < e; ++i) r *= b;
  return r;
}

std::string outcome_label(Statistic s, const WindowOutcome& o) {
  switch (s) {
    case Statistic::SigmaLeft: {
      auto vis = first_left_visitor(o);
      return vis ? "sigma=" + std::to_string(vis->index) : std::string("sigma=none");
    }
    case Statistic::ZLeft: return "zleft=" + std::to_string(o.counts.dot - o.counts.left);
    case Statistic::ZRight: return "zright=" + std::to_string(o.counts.dot - o.counts.right);
    case Statistic::NLeft: return "nleft=" + std::to_string(o.counts.left);
    case Statistic::NRight: return "nright=" + std::to_string(o.counts.right);
    case Statistic::NDot: return "ndot=" + std::to_string(o.counts.dot);
  }
  return {};
}

// Numeric value behind a label, used for the expectation.
std::optional<long> label_value(const std::string& label) {
  auto eq = label.find('=');
  std::string v = label.substr(eq + 1);
  if (v == "none") return std::nullopt;
  return std::stol(v);
}

}  // namespace

WindowOutcome naive_resolve(const Configuration& config) {
  if (config.empty()) throw std::invalid_argument("naive_resolve: empty configuration");
  config.validate();
  if (config.mode == Mode::Float) {
    std::vector<double> xs;
    for (const auto& p : config.particles) xs.push_back(p.position.to_double());
    return naive_outcome<double>(config, xs, [](double v2) { return Number(v2 * 0.5); });
  }
  if (auto o = naive_lattice<std::int64_t>(config)) return std::move(*o);
  if (auto o = naive_lattice<Int128>(config)) return std::move(*o);
  std::vector<Rational> xs;
  for (const auto& p : config.particles) xs.push_back(p.position.rational());
  return naive_outcome<Rational>(config, xs, [](const Rational& v2) { return Number(Rational(v2 / 2)); });
}

namespace {

std::string collision_key(const CollisionRecord& r) {
  std::string k = r.time.str() + "@" + r.position.str() + (r.kind == CollisionKind::Pair ? " pair" : " triple");
  for (int i = 0; i < r.arity(); ++i) k += " " + std::to_string(r.indices[static_cast<std::size_t>(i)]);
  return k;
}

std::vector<std::string> fate_keys(const WindowOutcome& o) {
  std::vector<std::string> keys;
  keys.reserve(o.size());
  for (const auto& f : o.fates) keys.push_back(f.collision ? collision_key(o.collisions[*f.collision]) : "survives");
  return keys;
}

}  // namespace

std::optional<std::string> compare_outcomes(const WindowOutcome& a, const WindowOutcome& b) {
  if (a.indices != b.indices) return "different particle sets";
  if (a.velocities != b.velocities) return "different velocities";
  if (!(a.counts == b.counts) || a.survivors != b.survivors) return "different survivors";
  std::vector<std::string> ca;
  std::vector<std::string> cb;
  for (const auto& r : a.collisions) ca.push_back(collision_key(r));
  for (const auto& r : b.collisions) cb.push_back(collision_key(r));
  std::sort(ca.begin(), ca.end());
  std::sort(cb.begin(), cb.end());
  if (ca != cb) {
    std::string why = "collision multisets differ:";
    for (const auto& k : ca) why += " [" + k + "]";
    why += " vs";
    for (const auto& k : cb) why += " [" + k + "]";
    return why;
  }
  const auto fa = fate_keys(a);
  const auto fb = fate_keys(b);
  for (std::size_t i = 0; i < fa.size(); ++i)
    if (fa[i] != fb[i])
      return "fate of particle " + std::to_string(a.indices[i]) + " differs: " + fa[i] + " vs " + fb[i];
  return std::nullopt;
}

Statistic parse_statistic(const std::string& name) {
  if (name == "sigma" || name == "sigma-left") return Statistic::SigmaLeft;
  if (name == "zleft" || name == "z-left") return Statistic::ZLeft;
  if (name == "zright" || name == "z-right") return Statistic::ZRight;
  if (name == "nleft" || name == "n-left") return Statistic::NLeft;
  if (name == "nright" || name == "n-right") return Statistic::NRight;
  if (name == "ndot" || name == "n-dot") return Statistic::NDot;
  throw std::invalid_argument("unknown statistic '" + name + "'");
}

std::string statistic_name(Statistic s) {
  switch (s) {
    case Statistic::SigmaLeft: return "sigma";
    case Statistic::ZLeft: return "zleft";
    case Statistic::ZRight: return "zright";
    case Statistic::NLeft: return "nleft";
    case Statistic::NRight: return "nright";
    case Statistic::NDot: return "ndot";
  }
  return {};
}

Rational ExactDistributionTable::probability(const std::string& label) const {
  auto it = probabilities.find(label);
  return it == probabilities.end() ? Rational(0) : it->second;
}

Rational evaluate_polynomial(const std::map<Exponents, BigInt>& poly, const Rational& p, const Rational& lambda) {
  Rational total = 0;
  for (const auto& [e, coeff] : poly)
    total += Rational(coeff) * ipow(p, e[0]) * ipow(lambda, e[1]) * ipow(1 - p, e[2]) * ipow(1 - lambda, e[3]);
  return total;
}

std::string ExactDistributionTable::to_json() const {
  nlohmann::json j;
  j["n"] = n;
  j["p"] = to_string(p);
  j["lambda"] = to_string(lambda);
  j["statistic"] = statistic_name(statistic);
  j["spacing"] = "unit";
  nlohmann::json probs = nlohmann::json::object();
  for (const auto& [k, v] : probabilities) probs[k] = to_string(v);
  j["probabilities"] = probs;
  j["expectation"] = to_string(expectation);
  nlohmann::json poly = nlohmann::json::object();
  for (const auto& [label, terms] : polynomial) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& [e, c] : terms) arr.push_back({{"exponents", e}, {"coefficient", c.str()}});
    poly[label] = arr;
  }
  j["polynomial"] = poly;
  j["monomial"] = "p^i * lambda^r * (1-p)^s * (1-lambda)^t";
  return j.dump(2);
}

ExactDistributionTable enumerate_exact(int n, const Rational& p, const Rational& lambda, Statistic stat) {
  if (n < 1) throw std::invalid_argument("enumerate_exact needs n >= 1");
  if (n > kMaxEnumeration)
    throw BudgetExceeded("enumerate_exact: n = " + std::to_string(n) + " exceeds the 3^n budget (n <= " +
                         std::to_string(kMaxEnumeration) + ")");
  if (!(p > 0 && p < 1 && lambda > 0 && lambda < 1)) throw std::invalid_argument("p and lambda must lie in (0, 1)");

  // Count assignments per (label, #B, #R, #L); probabilities follow from the
  // monomials, so the enumeration itself is parameter free.
  std::map<std::string, std::map<std::array<int, 3>, long long>> counts;
  Configuration c;
  c.mode = Mode::Exact;
  c.particles.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) c.particles[i] = {i + 1, Number(Rational(i + 1)), Velocity::Left};

  long long total = 1;
  for (int i = 0; i < n; ++i) total *= 3;
  constexpr Velocity kinds[3] = {Velocity::Blockade, Velocity::Right, Velocity::Left};
  std::vector<int> digit(static_cast<std::size_t>(n), 0);
  for (long long code = 0; code < total; ++code) {
    std::array<int, 3> tally{0, 0, 0};
    for (int i = 0; i < n; ++i) {
      c.particles[i].velocity = kinds[digit[i]];
      ++tally[digit[i]];
    }
    WindowOutcome o = naive_resolve(c);
    ++counts[outcome_label(stat, o)][tally];
    for (int i = 0; i < n; ++i) {
      if (++digit[i] < 3) break;
      digit[i] = 0;
    }
  }

  ExactDistributionTable t;
  t.n = n;
  t.p = p;
  t.lambda = lambda;
  t.statistic = stat;
  t.expectation = 0;
  const Rational wb = p;
  const Rational wr = lambda * (1 - p);
  const Rational wl = (1 - lambda) * (1 - p);
  for (const auto& [label, by_type] : counts) {
    Rational prob = 0;
    auto& poly = t.polynomial[label];
    for (const auto& [ty, cnt] : by_type) {
      prob += Rational(cnt) * ipow(wb, ty[0]) * ipow(wr, ty[1]) * ipow(wl, ty[2]);
      poly[Exponents{ty[0], ty[1], ty[1] + ty[2], ty[2]}] += cnt;
    }
    t.probabilities[label] = prob;
    if (auto v = label_value(label)) t.expectation += prob * *v;
  }
  if (stat == Statistic::SigmaLeft) {
    for (int k = 1; k <= n; ++k) {
      t.probabilities.try_emplace("sigma=" + std::to_string(k), 0);
      t.polynomial.try_emplace("sigma=" + std::to_string(k));
    }
    t.probabilities.try_emplace("sigma=none", 0);
    t.polynomial.try_emplace("sigma=none");
  }
  return t;
}

Rational exact_truncated_q(int n, const Rational& p, const Rational& lambda) {
  if (n > kMaxEnumeration)
    throw BudgetExceeded("exact_truncated_q: n = " + std::to_string(n) + " exceeds the enumeration budget");
  Rational q = 0;
  for (int k = 1; k <= n; ++k)
    q += enumerate_exact(k, p, lambda, Statistic::SigmaLeft).probability("sigma=" + std::to_string(k));
  return q;
}

}  // namespace balab
