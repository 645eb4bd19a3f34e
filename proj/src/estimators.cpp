#include "balab/estimators.hpp"

#include "balab/kernel.hpp"

#include <boost/math/distributions/chi_squared.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <exception>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <thread>

namespace balab {

namespace {

using Acc = std::vector<std::int64_t>;

// Runs trials [0, trials) split into contiguous chunks, one per worker, and
// sums the integer accumulators. Integer sums make the result independent of
// the split.
template <class MakeWorker>
Acc run_trials(std::size_t trials, std::size_t slots, Parallel par, MakeWorker&& make) {
  unsigned w = par.workers ? par.workers : std::max(1u, std::thread::hardware_concurrency());
  w = static_cast<unsigned>(std::min<std::size_t>(w, std::max<std::size_t>(trials, 1)));
  std::vector<Acc> parts(w, Acc(slots, 0));
  std::vector<std::exception_ptr> errors(w);
  auto body = [&](unsigned id) {
    try {
      auto worker = make();
      const std::size_t lo = trials * id / w;
      const std::size_t hi = trials * (id + 1) / w;
      for (std::size_t t = lo; t < hi; ++t) worker(static_cast<std::uint64_t>(t), parts[id]);
    } catch (...) {
      errors[id] = std::current_exception();
    }
  };
  if (w == 1) {
    body(0);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(w);
    for (unsigned id = 0; id < w; ++id) pool.emplace_back(body, id);
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  Acc total(slots, 0);
  for (const auto& part : parts)
    for (std::size_t i = 0; i < slots; ++i) total[i] += part[i];
  return total;
}

// Calls f with the gap sampler matching the spacing law.
template <class F>
Acc with_scalar(const SpacingSpec& spec, F&& f) {
  if (spec.is_exact()) return f(SpacingSampler<std::int64_t>(spec));
  return f(SpacingSampler<double>(spec));
}

// One half-line in kernel form. The negative side is stored mirrored
// (velocities reflected), so every side-dependent quantity reduces to its
// left-side version: a right visitor of 0 from below becomes a left visitor
// from above, Z-right becomes Z-left, and so on.
template <class T>
struct Half {
  HalfSample<T> s;
  Kernel<T> k;

  void draw(const SpacingSampler<T>& gaps, const Params& params, std::size_t n, const RandomnessContract& rng,
            Side side, std::uint64_t t) {
    const RandomnessContract c = rng.with_trial(rng.trial + t).child(side == Side::Positive ? "pos" : "neg");
    sample_half(gaps, params, n, c, s);
    if (side == Side::Negative)
      for (auto& v : s.velocity) v = reflect(v);
  }
  void run(std::size_t lo, std::size_t hi) {
    k.run(std::span<const T>(s.distance).subspan(lo, hi - lo), std::span<const Velocity>(s.velocity).subspan(lo, hi - lo));
  }
  void run(std::size_t m) { run(0, m); }
  // Local index of the first visitor of the origin in the last run, or -1.
  [[nodiscard]] int visitor() const {
    const auto& sv = k.survivors();
    if (sv.empty() || s.velocity[static_cast<std::size_t>(sv.front())] != Velocity::Left) return -1;
    return sv.front();
  }
  [[nodiscard]] Tally counts(std::size_t lo = 0) const {
    Tally t;
    for (int i : k.survivors()) {
      switch (s.velocity[lo + static_cast<std::size_t>(i)]) {
        case Velocity::Blockade: ++t.dot; break;
        case Velocity::Left: ++t.left; break;
        case Velocity::Right: ++t.right; break;
      }
    }
    return t;
  }
};

Estimate proportion(std::int64_t hits, std::size_t trials, BoundDirection dir, Truncation tr = {}) {
  Estimate e;
  e.trials = trials;
  e.direction = dir;
  e.truncation = std::move(tr);
  if (trials == 0) return e;
  e.value = static_cast<double>(hits) / static_cast<double>(trials);
  e.se = std::sqrt(e.value * (1.0 - e.value) / static_cast<double>(trials));
  return e;
}

Estimate sample_mean(std::int64_t sum, std::int64_t sumsq, std::size_t trials, double scale, Truncation tr = {}) {
  Estimate e;
  e.trials = trials;
  e.direction = BoundDirection::PointEstimate;
  e.truncation = std::move(tr);
  if (trials == 0) return e;
  const double t = static_cast<double>(trials);
  const double mean = static_cast<double>(sum) / t;
  double var = 0.0;
  if (trials > 1) var = std::max(0.0, (static_cast<double>(sumsq) - static_cast<double>(sum) * mean) / (t - 1.0));
  e.value = mean * scale;
  e.se = std::sqrt(var / t) * scale;
  return e;
}

void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(what);
}

// First-order propagation for f over inputs with covariance cov.
double delta_se(const std::function<double(const std::vector<double>&)>& f, const std::vector<double>& x,
                const std::vector<std::vector<double>>& cov) {
  const std::size_t m = x.size();
  std::vector<double> g(m);
  for (std::size_t i = 0; i < m; ++i) {
    const double h = 1e-6 * std::max(1.0, std::abs(x[i]));
    auto hi = x;
    auto lo = x;
    hi[i] += h;
    lo[i] -= h;
    g[i] = (f(hi) - f(lo)) / (2 * h);
  }
  double var = 0.0;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) var += g[i] * cov[i][j] * g[j];
  return std::sqrt(std::max(0.0, var));
}

// Inputs (qR, qL, f_rf, f_tie, betaR, betaL) and their covariance; alpha is
// multinomial over (right first, left first, tie).
struct Inputs {
  std::vector<double> x;
  std::vector<std::vector<double>> cov;
};

Inputs pack(const Estimate& qr, const Estimate& ql, const AlphaTriple& a, const Estimate& br, const Estimate& bl) {
  Inputs in;
  const double k = static_cast<double>(std::max<std::size_t>(a.conditioned, 1));
  const double frf = static_cast<double>(a.right_first) / k;
  const double ftie = static_cast<double>(a.ties) / k;
  in.x = {qr.value, ql.value, frf, ftie, br.value, bl.value};
  in.cov.assign(6, std::vector<double>(6, 0.0));
  in.cov[0][0] = qr.se * qr.se;
  in.cov[1][1] = ql.se * ql.se;
  in.cov[2][2] = frf * (1 - frf) / k;
  in.cov[3][3] = ftie * (1 - ftie) / k;
  in.cov[2][3] = in.cov[3][2] = -frf * ftie / k;
  in.cov[4][4] = br.se * br.se;
  in.cov[5][5] = bl.se * bl.se;
  return in;
}

double alpha_right_of(const std::vector<double>& x) { return x[2] + x[3]; }
double alpha_left_of(const std::vector<double>& x) { return 1.0 - x[2]; }

}  // namespace

std::string to_string(BoundDirection d) {
  switch (d) {
    case BoundDirection::LowerBound: return "LowerBound";
    case BoundDirection::UpperBound: return "UpperBound";
    case BoundDirection::PointEstimate: return "PointEstimate";
  }
  return {};
}

Estimate estimate_q(Side side, const SpacingSpec& spec, const Params& params, std::size_t n, std::size_t trials,
                    const RandomnessContract& rng, Parallel par) {
  require(n >= 1 && trials >= 1, "estimate_q needs n >= 1 and trials >= 1");
  Acc acc = with_scalar(spec, [&]<class T>(const SpacingSampler<T>& gaps) {
    return run_trials(trials, 1, par, [&] {
      return [&, h = Half<T>{}](std::uint64_t t, Acc& a) mutable {
        h.draw(gaps, params, n, rng, side, t);
        h.run(n);
        a[0] += h.visitor() >= 0;
      };
    });
  });
  return proportion(acc[0], trials, BoundDirection::LowerBound, {n, {}});
}

AlphaTriple estimate_alpha(const SpacingSpec& spec, const Params& params, std::size_t n, std::size_t trials,
                           const RandomnessContract& rng, Parallel par) {
  require(n >= 2 && trials >= 1, "estimate_alpha needs n >= 2 and trials >= 1");
  const std::size_t n2 = n / 2;
  const bool atomless = !spec.is_exact();
  // [kept, right first, left first, tie] at n, the same at n/2, float ties
  Acc acc = with_scalar(spec, [&]<class T>(const SpacingSampler<T>& gaps) {
    return run_trials(trials, 9, par, [&] {
      return [&, pos = Half<T>{}, neg = Half<T>{}](std::uint64_t t, Acc& a) mutable {
        pos.draw(gaps, params, n, rng, Side::Positive, t);
        neg.draw(gaps, params, n, rng, Side::Negative, t);
        pos.run(n);
        const int il = pos.visitor();
        if (il < 0) return;
        neg.run(n);
        const int ir = neg.visitor();
        if (ir < 0) return;
        const T tl = pos.s.distance[static_cast<std::size_t>(il)];
        const T tr = neg.s.distance[static_cast<std::size_t>(ir)];
        auto record = [&](std::size_t base, std::size_t m) {
          const T guard = std::min(pos.s.distance[m - 1], neg.s.distance[m - 1]);
          if (static_cast<std::size_t>(il) >= m || static_cast<std::size_t>(ir) >= m) return;
          if (tl > guard || tr > guard) return;
          ++a[base];
          if (tr < tl) ++a[base + 1];
          else if (tl < tr) ++a[base + 2];
          else ++a[base + 3];
        };
        record(0, n);
        record(4, n2);
        if (atomless && tl == tr) ++a[8];
      };
    });
  });

  AlphaTriple r;
  r.trials = trials;
  r.conditioned = static_cast<std::size_t>(acc[0]);
  r.right_first = static_cast<std::size_t>(acc[1]);
  r.left_first = static_cast<std::size_t>(acc[2]);
  r.ties = static_cast<std::size_t>(acc[3]);
  r.float_ties = static_cast<std::size_t>(acc[8]);
  r.degenerate = r.conditioned < kMinConditioned;
  const Truncation tr{n, {}};
  r.right = proportion(acc[1] + acc[3], r.conditioned, BoundDirection::PointEstimate, tr);
  r.left = proportion(acc[2] + acc[3], r.conditioned, BoundDirection::PointEstimate, tr);
  r.hat = proportion(acc[3], r.conditioned, BoundDirection::PointEstimate, tr);
  if (acc[4] > 0 && r.conditioned > 0)
    r.truncation_shift = r.right.value - static_cast<double>(acc[5] + acc[7]) / static_cast<double>(acc[4]);
  return r;
}

BetaPair estimate_beta(const SpacingSpec& spec, const Params& params, const std::vector<std::size_t>& windows,
                       std::size_t trials, const RandomnessContract& rng, Parallel par) {
  require(!windows.empty() && windows.front() >= 1 && trials >= 1, "estimate_beta needs windows >= 1 and trials");
  for (std::size_t i = 1; i < windows.size(); ++i)
    require(windows[i] > windows[i - 1], "estimate_beta: window schedule must be strictly increasing");
  const std::size_t w = windows.size();
  const std::size_t n = windows.back();
  Acc acc = with_scalar(spec, [&]<class T>(const SpacingSampler<T>& gaps) {
    return run_trials(trials, 2 * w, par, [&] {
      return [&, h = Half<T>{}](std::uint64_t t, Acc& a) mutable {
        for (int s = 0; s < 2; ++s) {
          h.draw(gaps, params, n, rng, s == 0 ? Side::Positive : Side::Negative, t);
          if (h.s.velocity[0] != Velocity::Right) continue;
          for (std::size_t i = 0; i < w; ++i) {
            h.run(windows[i]);
            a[static_cast<std::size_t>(s) * w + i] += h.k.fate()[0] < 0;
          }
        }
      };
    });
  });
  BetaPair b;
  b.windows = windows;
  for (std::size_t i = 0; i < w; ++i) {
    b.right.push_back(proportion(acc[i], trials, BoundDirection::PointEstimate, {windows[i], {}}));
    b.left.push_back(proportion(acc[w + i], trials, BoundDirection::PointEstimate, {windows[i], {}}));
  }
  auto stability = [&](const std::vector<Estimate>& v) {
    double m = 0.0;
    for (std::size_t i = v.size() >= 3 ? v.size() - 2 : 1; i < v.size(); ++i)
      m = std::max(m, std::abs(v[i].value - v[i - 1].value));
    return m;
  };
  b.stability_right = stability(b.right);
  b.stability_left = stability(b.left);
  return b;
}

Estimate estimate_mean_z(Side side, const SpacingSpec& spec, const Params& params, std::size_t k, std::size_t trials,
                         const RandomnessContract& rng, Parallel par) {
  require(k >= 1 && trials >= 1, "estimate_mean_z needs k >= 1 and trials >= 1");
  Acc acc = with_scalar(spec, [&]<class T>(const SpacingSampler<T>& gaps) {
    return run_trials(trials, 2, par, [&] {
      return [&, h = Half<T>{}](std::uint64_t t, Acc& a) mutable {
        h.draw(gaps, params, k, rng, side, t);
        h.run(k);
        const Tally c = h.counts();
        const std::int64_t z = c.dot - c.left;
        a[0] += z;
        a[1] += z * z;
      };
    });
  });
  return sample_mean(acc[0], acc[1], trials, 1.0 / static_cast<double>(k), {k, {k}});
}

std::vector<std::size_t> geometric_grid(std::size_t kmax) {
  std::vector<std::size_t> g;
  for (std::size_t k = 1; k <= kmax; k *= 2) g.push_back(k);
  return g;
}

ThetaBracket theta_bracket(const SpacingSpec& spec, const Params& params, std::size_t n,
                           const std::vector<std::size_t>& k_grid, std::size_t trials, const RandomnessContract& rng,
                           Parallel par) {
  require(!k_grid.empty() && trials >= 2 && n >= 1, "theta_bracket needs a k grid, n >= 1 and trials >= 2");
  std::vector<std::size_t> grid = k_grid;
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  require(grid.front() >= 1 && grid.back() <= n, "theta_bracket: k grid must lie in [1, n]");
  const std::size_t g = grid.size();
  // [qL, qR] then, per side s and trial parity e, per grid point: sum, sumsq
  auto slot = [g](std::size_t s, std::size_t e, std::size_t i, std::size_t m) { return 2 + ((s * 2 + e) * g + i) * 2 + m; };

  Acc acc = with_scalar(spec, [&]<class T>(const SpacingSampler<T>& gaps) {
    return run_trials(trials, 2 + 8 * g, par, [&] {
      return [&, h = Half<T>{}](std::uint64_t t, Acc& a) mutable {
        const std::size_t e = t % 2;
        for (std::size_t s = 0; s < 2; ++s) {
          h.draw(gaps, params, n, rng, s == 0 ? Side::Positive : Side::Negative, t);
          h.run(n);
          a[s] += h.visitor() >= 0;
          // Largest k first so a k = n grid point reuses the run above.
          for (std::size_t i = g; i-- > 0;) {
            if (grid[i] != n) h.run(grid[i]);
            const Tally c = h.counts();
            const std::int64_t z = c.dot - c.left;
            a[slot(s, e, i, 0)] += z;
            a[slot(s, e, i, 1)] += z * z;
          }
        }
      };
    });
  });

  const std::size_t t_even = (trials + 1) / 2;
  const std::size_t t_odd = trials / 2;
  const Truncation tr{n, grid};
  ThetaBracket b;
  b.q_left = proportion(acc[0], trials, BoundDirection::LowerBound, {n, {}});
  b.q_right = proportion(acc[1], trials, BoundDirection::LowerBound, {n, {}});

  auto mean_at = [&](std::size_t s, std::size_t e, std::size_t i) {
    return sample_mean(acc[slot(s, e, i, 0)], acc[slot(s, e, i, 1)], e == 0 ? t_even : t_odd,
                       1.0 / static_cast<double>(grid[i]));
  };
  auto argmax = [&](std::size_t s, std::size_t e) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < g; ++i)
      if (mean_at(s, e, i).value > mean_at(s, e, best).value) best = i;
    return best;
  };
  auto sup = [&](std::size_t s, std::size_t& k_full) {
    const Estimate a1 = mean_at(s, 1, argmax(s, 0));
    const Estimate a2 = mean_at(s, 0, argmax(s, 1));
    std::size_t best = 0;
    double best_v = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < g; ++i) {
      const double v = static_cast<double>(acc[slot(s, 0, i, 0)] + acc[slot(s, 1, i, 0)]) /
                       (static_cast<double>(trials) * static_cast<double>(grid[i]));
      if (v > best_v) best_v = v, best = i;
    }
    k_full = grid[best];
    Estimate out;
    out.value = 0.5 * (a1.value + a2.value);
    out.se = 0.5 * std::sqrt(a1.se * a1.se + a2.se * a2.se);
    out.trials = trials;
    out.truncation = tr;
    out.direction = BoundDirection::LowerBound;
    return out;
  };
  const Estimate a = sup(0, b.k_left);
  const Estimate c = sup(1, b.k_right);

  auto clamp0 = [](Estimate e) {
    if (e.value <= 0.0) e.value = 0.0;
    return e;
  };
  b.theta0_left = clamp0(a);
  b.theta0_right = clamp0(c);
  const double p = params.p();
  const double A = b.theta0_left.value;
  const double B = b.theta0_right.value;
  b.lower.value = A * B / (p * p);
  b.lower.se = std::sqrt(std::pow(B * a.se, 2) * (A > 0) + std::pow(A * c.se, 2) * (B > 0)) / (p * p);
  b.lower.trials = trials;
  b.lower.truncation = tr;
  b.lower.direction = BoundDirection::LowerBound;

  const double ql = b.q_left.value;
  const double qr = b.q_right.value;
  b.upper.value = (1 - qr) * (1 - ql);
  b.upper.se = std::sqrt(std::pow((1 - qr) * b.q_left.se, 2) + std::pow((1 - ql) * b.q_right.se, 2));
  b.upper.trials = trials;
  b.upper.truncation = {n, {}};
  b.upper.direction = BoundDirection::UpperBound;

  b.theta_left = {p * (1 - ql), p * b.q_left.se, trials, {n, {}}, BoundDirection::UpperBound};
  b.theta_right = {p * (1 - qr), p * b.q_right.se, trials, {n, {}}, BoundDirection::UpperBound};
  return b;
}

CollisionClasses estimate_collision_classes(const SpacingSpec& spec, const Params& params, std::size_t n,
                                            std::size_t trials, const RandomnessContract& rng, Parallel par) {
  require(n >= 1 && trials >= 1, "estimate_collision_classes needs n >= 1 and trials >= 1");
  // [R1 -> B, R1 <-> L, L-1 -> B, L-1 <-> R, R1 -> B with a left visitor]
  Acc acc = with_scalar(spec, [&]<class T>(const SpacingSampler<T>& gaps) {
    return run_trials(trials, 5, par, [&] {
      return [&, h = Half<T>{}](std::uint64_t t, Acc& a) mutable {
        for (std::size_t s = 0; s < 2; ++s) {
          h.draw(gaps, params, n, rng, s == 0 ? Side::Positive : Side::Negative, t);
          if (h.s.velocity[0] != Velocity::Right) continue;
          h.run(n);
          const int f = h.k.fate()[0];
          if (f < 0) continue;
          const auto& c = h.k.collisions()[static_cast<std::size_t>(f)];
          const int partner = c.a == 0 ? c.b : c.a;
          const bool blockade = c.is_triple() || h.s.velocity[static_cast<std::size_t>(partner)] == Velocity::Blockade;
          ++a[s * 2 + (blockade ? 0 : 1)];
          if (s == 0 && blockade && h.visitor() >= 0) ++a[4];
        }
      };
    });
  });
  const Truncation tr{n, {}};
  const auto pe = BoundDirection::PointEstimate;
  return {proportion(acc[0], trials, pe, tr), proportion(acc[1], trials, pe, tr), proportion(acc[2], trials, pe, tr),
          proportion(acc[3], trials, pe, tr), proportion(acc[4], trials, pe, tr)};
}

bool IdentityReport::ok() const {
  return std::none_of(residuals.begin(), residuals.end(), [](const Residual& r) { return r.flagged; });
}

IdentityReport check_identities(const Estimate& q_right, const Estimate& q_left, const AlphaTriple& alpha,
                                const Estimate& beta_right, const Estimate& beta_left, const Params& params,
                                const std::optional<CollisionClasses>& classes, double threshold) {
  const double p = params.p();
  const double lam = params.lambda();
  const Inputs in = pack(q_right, q_left, alpha, beta_right, beta_left);
  IdentityReport rep;
  rep.threshold = threshold;

  using Fn = std::function<double(const std::vector<double>&)>;
  auto add = [&](std::string name, const Fn& lhs, const Fn& rhs, double extra_lhs = 0.0, double extra_var = 0.0) {
    Residual r;
    r.name = std::move(name);
    r.lhs = lhs(in.x) + extra_lhs;
    r.rhs = rhs(in.x);
    r.value = r.lhs - r.rhs;
    const double s = delta_se([&](const std::vector<double>& x) { return lhs(x) - rhs(x); }, in.x, in.cov);
    r.se = std::sqrt(s * s + extra_var);
    r.flagged = r.se > 0 ? std::abs(r.value) > threshold * r.se : r.value != 0.0;
    rep.residuals.push_back(std::move(r));
  };

  // x = (qR, qL, f_rf, f_tie, betaR, betaL)
  add(
      "recursion-left",
      [&](const std::vector<double>& x) {
        return (x[1] - 1) * (p * alpha_left_of(x) * x[0] * x[1] + p * x[1] - (1 - lam) * (1 - p));
      },
      [&](const std::vector<double>& x) { return x[1] * x[4]; });
  add(
      "recursion-right",
      [&](const std::vector<double>& x) {
        return (x[0] - 1) * (p * alpha_right_of(x) * x[0] * x[1] + p * x[0] - lam * (1 - p));
      },
      [&](const std::vector<double>& x) { return x[0] * x[5]; });
  add(
      "recursion-difference",
      [&](const std::vector<double>& x) {
        return p * x[0] * x[1] * (alpha_left_of(x) - alpha_right_of(x)) + p * (x[1] - x[0]) - (1 - 2 * lam) * (1 - p);
      },
      [&](const std::vector<double>& x) { return x[4] - x[5]; });

  if (classes) {
    const auto& c = *classes;
    const Fn zero = [](const std::vector<double>&) { return 0.0; };
    add(
        "right-meets-blockade", zero,
        [&](const std::vector<double>& x) {
          return p * alpha_right_of(x) * x[0] * x[1] + p * x[0] * (1 - x[1]);
        },
        c.right_to_blockade.value, c.right_to_blockade.se * c.right_to_blockade.se);
    add(
        "left-meets-blockade", zero,
        [&](const std::vector<double>& x) { return p * alpha_left_of(x) * x[0] * x[1] + p * (1 - x[0]) * x[1]; },
        c.left_to_blockade.value, c.left_to_blockade.se * c.left_to_blockade.se);
    add("mover-meetings", zero, [&](const std::vector<double>&) { return c.left_meets_right.value; },
        c.right_meets_left.value,
        c.right_meets_left.se * c.right_meets_left.se + c.left_meets_right.se * c.left_meets_right.se);
    add(
        "blockade-hit-and-left-visit", zero,
        [&](const std::vector<double>& x) { return p * x[0] * x[1] * alpha_right_of(x); },
        c.right_to_blockade_and_left_visit.value,
        c.right_to_blockade_and_left_visit.se * c.right_to_blockade_and_left_visit.se);
  }
  return rep;
}

SuperadditivityReport check_superadditivity(const SpacingSpec& spec, const Params& params, std::size_t a,
                                            std::size_t b, std::size_t c, std::size_t trials,
                                            const RandomnessContract& rng, Parallel par) {
  require(a >= 1 && a < b + 1 && b < c, "check_superadditivity needs 1 <= a <= b < c");
  Acc acc = with_scalar(spec, [&]<class T>(const SpacingSampler<T>& gaps) {
    return run_trials(trials, 2, par, [&] {
      return [&, h = Half<T>{}](std::uint64_t t, Acc& out) mutable {
        h.draw(gaps, params, c, rng, Side::Positive, t);
        h.run(a - 1, b);
        const Tally ab = h.counts(a - 1);
        if (ab.right != 0) return;
        ++out[0];
        h.run(b, c);
        const Tally bc = h.counts(b);
        h.run(a - 1, c);
        const Tally ac = h.counts(a - 1);
        if (ac.dot - ac.left < (ab.dot - ab.left) + (bc.dot - bc.left)) ++out[1];
      };
    });
  });
  return {trials, static_cast<std::size_t>(acc[0]), static_cast<std::size_t>(acc[1])};
}

SuperadditivityReport check_superadditivity_exhaustive(std::size_t a, std::size_t b, std::size_t c) {
  require(a >= 1 && a <= b && b < c && c <= 16, "check_superadditivity_exhaustive needs 1 <= a <= b < c <= 16");
  std::vector<std::int64_t> x(c);
  for (std::size_t i = 0; i < c; ++i) x[i] = static_cast<std::int64_t>(i + 1);
  std::vector<Velocity> v(c, Velocity::Left);
  constexpr Velocity kinds[3] = {Velocity::Left, Velocity::Blockade, Velocity::Right};
  std::vector<int> digit(c, 0);
  Kernel<std::int64_t> k;
  SuperadditivityReport rep;
  auto z_left = [&](std::size_t lo, std::size_t hi, long* rights) {
    k.run(std::span<const std::int64_t>(x).subspan(lo, hi - lo), std::span<const Velocity>(v).subspan(lo, hi - lo));
    long z = 0;
    for (int i : k.survivors()) {
      const Velocity vi = v[lo + static_cast<std::size_t>(i)];
      z += vi == Velocity::Blockade ? 1 : vi == Velocity::Left ? -1 : 0;
      if (rights && vi == Velocity::Right) ++*rights;
    }
    return z;
  };
  while (true) {
    for (std::size_t i = 0; i < c; ++i) v[i] = kinds[digit[i]];
    ++rep.samples;
    long rights = 0;
    const long zab = z_left(a - 1, b, &rights);
    if (rights == 0) {
      ++rep.conditioned;
      if (z_left(a - 1, c, nullptr) < zab + z_left(b, c, nullptr)) ++rep.violations;
    }
    std::size_t i = 0;
    while (i < c && ++digit[i] == 3) digit[i++] = 0;
    if (i == c) break;
  }
  return rep;
}

DichotomyReport check_dichotomy(const Estimate& q_right, const Estimate& q_left, const AlphaTriple& alpha,
                                const Estimate& beta_right, const Estimate& beta_left, const Params& params,
                                double beta_tolerance) {
  const double p = params.p();
  const double lam = params.lambda();
  const Inputs in = pack(q_right, q_left, alpha, beta_right, beta_left);
  auto stat = [&](const std::vector<double>& x) {
    return p * x[1] * x[0] * (alpha_left_of(x) - alpha_right_of(x)) - (1 - 2 * lam) * (1 - p);
  };
  DichotomyReport r;
  r.statistic = stat(in.x);
  r.se = delta_se(stat, in.x, in.cov);
  const double diff = q_right.value - q_left.value;
  const double diff_se = std::hypot(q_right.se, q_left.se);
  const bool right_beta = beta_right.value <= beta_tolerance;
  const bool right_order = diff <= 3 * diff_se;
  const bool left_beta = beta_left.value <= beta_tolerance;
  const bool left_order = diff >= -3 * diff_se;
  if (r.statistic < -3 * r.se) {
    r.predicted = "right-vanishes";
    r.beta_ok = right_beta;
    r.order_ok = right_order;
  } else if (r.statistic > 3 * r.se) {
    r.predicted = "left-vanishes";
    r.beta_ok = left_beta;
    r.order_ok = left_order;
  } else {
    // Sign unresolved: one of the two implications must hold.
    r.predicted = "both";
    const bool right_ok = right_beta && right_order;
    r.beta_ok = right_ok ? right_beta : left_beta;
    r.order_ok = right_ok ? right_order : left_order;
  }
  return r;
}

GeometricReport check_geometric_visits(const SpacingSpec& spec, const Params& params, std::size_t n,
                                       std::size_t trials, const RandomnessContract& rng, Parallel par) {
  require(n >= 1 && trials >= 2, "check_geometric_visits needs n >= 1 and trials >= 2");
  constexpr std::size_t kBins = 128;
  // histogram of N-left(1,n) with an overflow bin, then sum and sum of squares
  Acc acc = with_scalar(spec, [&]<class T>(const SpacingSampler<T>& gaps) {
    return run_trials(trials, kBins + 2, par, [&] {
      return [&, h = Half<T>{}](std::uint64_t t, Acc& a) mutable {
        h.draw(gaps, params, n, rng, Side::Positive, t);
        h.run(n);
        const std::int64_t m = h.counts().left;
        ++a[std::min<std::size_t>(static_cast<std::size_t>(m), kBins - 1)];
        a[kBins] += m;
        a[kBins + 1] += m * m;
      };
    });
  });

  GeometricReport r;
  r.trials = trials;
  const double t = static_cast<double>(trials);
  const Estimate q = proportion(static_cast<std::int64_t>(trials) - acc[0], trials, BoundDirection::LowerBound);
  r.q_left = q.value;
  const Estimate mean = sample_mean(acc[kBins], acc[kBins + 1], trials, 1.0);
  r.mean = mean.value;
  r.mean_se = mean.se;
  if (q.value < 1.0) {
    r.geometric_mean = q.value / (1 - q.value);
    r.geometric_mean_se = q.se / ((1 - q.value) * (1 - q.value));
  } else {
    r.geometric_mean = std::numeric_limits<double>::infinity();
  }

  // Bins 0..K-1 while the expected count stays >= 5, then one tail bin.
  double tail = 1.0;
  std::size_t cum = 0;
  for (std::size_t k = 0; k + 1 < kBins; ++k) {
    const double pk = (1 - q.value) * std::pow(q.value, static_cast<double>(k));
    if (pk * t < 5.0 || (tail - pk) * t < 5.0) break;
    r.observed.push_back(static_cast<std::size_t>(acc[k]));
    r.expected.push_back(pk * t);
    cum += static_cast<std::size_t>(acc[k]);
    tail -= pk;
  }
  r.observed.push_back(trials - cum);
  r.expected.push_back(std::max(0.0, tail) * t);
  for (std::size_t i = 0; i < r.observed.size(); ++i) {
    if (r.expected[i] <= 0) continue;
    const double d = static_cast<double>(r.observed[i]) - r.expected[i];
    r.chi_square += d * d / r.expected[i];
  }
  r.dof = static_cast<int>(r.observed.size()) - 2;
  if (r.dof >= 1) {
    boost::math::chi_squared dist(r.dof);
    r.p_value = boost::math::cdf(boost::math::complement(dist, r.chi_square));
  }
  return r;
}

nlohmann::json to_json(const Estimate& e) {
  return {{"value", e.value},
          {"stderr", e.se},
          {"trials", e.trials},
          {"truncation", {{"n", e.truncation.n}, {"kGrid", e.truncation.k_grid}}},
          {"boundDirection", to_string(e.direction)}};
}

nlohmann::json to_json(const AlphaTriple& a) {
  return {{"alphaRight", to_json(a.right)},
          {"alphaLeft", to_json(a.left)},
          {"alphaHat", to_json(a.hat)},
          {"trials", a.trials},
          {"conditioned", a.conditioned},
          {"rightFirst", a.right_first},
          {"leftFirst", a.left_first},
          {"ties", a.ties},
          {"floatTies", a.float_ties},
          {"degenerate", a.degenerate},
          {"truncationShift", a.truncation_shift}};
}

nlohmann::json to_json(const BetaPair& b) {
  nlohmann::json r = nlohmann::json::array();
  nlohmann::json l = nlohmann::json::array();
  for (const auto& e : b.right) r.push_back(to_json(e));
  for (const auto& e : b.left) l.push_back(to_json(e));
  return {{"windows", b.windows},
          {"betaRight", r},
          {"betaLeft", l},
          {"stabilityRight", b.stability_right},
          {"stabilityLeft", b.stability_left}};
}

nlohmann::json to_json(const ThetaBracket& t) {
  return {{"upper", to_json(t.upper)},
          {"lower", to_json(t.lower)},
          {"qLeft", to_json(t.q_left)},
          {"qRight", to_json(t.q_right)},
          {"thetaLeft", to_json(t.theta_left)},
          {"thetaRight", to_json(t.theta_right)},
          {"theta0Left", to_json(t.theta0_left)},
          {"theta0Right", to_json(t.theta0_right)},
          {"kLeft", t.k_left},
          {"kRight", t.k_right},
          {"consistent", t.consistent()}};
}

nlohmann::json to_json(const CollisionClasses& c) {
  return {{"rightToBlockade", to_json(c.right_to_blockade)},
          {"rightMeetsLeft", to_json(c.right_meets_left)},
          {"leftToBlockade", to_json(c.left_to_blockade)},
          {"leftMeetsRight", to_json(c.left_meets_right)},
          {"rightToBlockadeAndLeftVisit", to_json(c.right_to_blockade_and_left_visit)}};
}

nlohmann::json to_json(const IdentityReport& r) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& x : r.residuals)
    rows.push_back({{"name", x.name},
                    {"lhs", x.lhs},
                    {"rhs", x.rhs},
                    {"residual", x.value},
                    {"stderr", x.se},
                    {"flagged", x.flagged}});
  return {{"threshold", r.threshold}, {"residuals", rows}, {"ok", r.ok()}};
}

nlohmann::json to_json(const SuperadditivityReport& r) {
  return {{"samples", r.samples}, {"conditioned", r.conditioned}, {"violations", r.violations}};
}

nlohmann::json to_json(const DichotomyReport& r) {
  return {{"statistic", r.statistic}, {"stderr", r.se},          {"predicted", r.predicted},
          {"betaOk", r.beta_ok},      {"orderOk", r.order_ok},   {"consistent", r.consistent()}};
}

nlohmann::json to_json(const GeometricReport& r) {
  return {{"trials", r.trials},
          {"qLeft", r.q_left},
          {"observed", r.observed},
          {"expected", r.expected},
          {"chiSquare", r.chi_square},
          {"dof", r.dof},
          {"pValue", r.p_value},
          {"mean", r.mean},
          {"meanStderr", r.mean_se},
          {"geometricMean", r.geometric_mean},
          {"geometricMeanStderr", r.geometric_mean_se}};
}

}  // namespace balab
