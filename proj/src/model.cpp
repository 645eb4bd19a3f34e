#include "balab/model.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <numeric>
#include <ostream>
#include <sstream>

namespace balab {

char velocity_char(Velocity v) {
  switch (v) {
    case Velocity::Left: return 'L';
    case Velocity::Blockade: return 'B';
    case Velocity::Right: return 'R';
  }
  return '?';
}

Velocity parse_velocity(std::string_view t) {
  if (t == "L" || t == "l" || t == "Left" || t == "left" || t == "-1") return Velocity::Left;
  if (t == "B" || t == "b" || t == "Blockade" || t == "blockade" || t == "0") return Velocity::Blockade;
  if (t == "R" || t == "r" || t == "Right" || t == "right" || t == "1" || t == "+1") return Velocity::Right;
  throw std::invalid_argument("unknown velocity '" + std::string(t) + "'");
}

Params::Params(double p, double lambda) : p_(p), lambda_(lambda) {
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("p must lie in (0, 1)");
  if (!(lambda > 0.0 && lambda < 1.0)) throw std::invalid_argument("lambda must lie in (0, 1)");
}

double Params::weight(Velocity v) const {
  switch (v) {
    case Velocity::Blockade: return p_;
    case Velocity::Right: return lambda_ * (1.0 - p_);
    case Velocity::Left: return (1.0 - lambda_) * (1.0 - p_);
  }
  return 0.0;
}

std::uint64_t default_seed() {
  if (const char* env = std::getenv("BALAB_SEED"); env != nullptr && *env != '\0') {
    std::uint64_t v = 0;
    std::string_view s(env);
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec == std::errc() && ptr == s.data() + s.size()) return v;
    return hash_label(s);
  }
  return 20240611ULL;
}

// ---------------------------------------------------------------------------
// SpacingSpec

SpacingSpec::SpacingSpec(Variant v) : v_(std::move(v)) {
  if (auto* u = std::get_if<UniformSpacing>(&v_)) {
    if (!(u->lo > 0.0 && u->lo <= u->hi && std::isfinite(u->hi)))
      throw std::invalid_argument("uniform spacing needs 0 < lo <= hi");
  }
  if (auto* a = std::get_if<RationalAtomic>(&v_)) {
    if (a->atoms.empty()) throw std::invalid_argument("atomic spacing needs at least one atom");
    Rational total = 0;
    for (const auto& atom : a->atoms) {
      if (atom.spacing <= 0) throw std::invalid_argument("atomic spacing values must be positive");
      if (atom.weight < 0) throw std::invalid_argument("atomic spacing weights must be nonnegative");
      total += atom.weight;
    }
    if (total != 1) throw std::invalid_argument("atomic spacing weights must sum to 1, got " + to_string(total));
  }
}

SpacingSpec SpacingSpec::parse(std::string_view text) {
  if (text == "exp" || text == "exponential") return exponential();
  if (text == "unit" || text == "deterministic") return unit();
  auto split = [](std::string_view s, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= s.size(); ++i) {
      if (i == s.size() || s[i] == sep) {
        out.push_back(s.substr(start, i - start));
        start = i + 1;
      }
    }
    return out;
  };
  if (text.starts_with("uniform:")) {
    auto parts = split(text.substr(8), ':');
    if (parts.size() != 2) throw std::invalid_argument("expected uniform:LO:HI");
    return uniform(parse_rational(parts[0]).convert_to<double>(), parse_rational(parts[1]).convert_to<double>());
  }
  if (text.starts_with("atomic:")) {
    std::vector<RationalAtom> atoms;
    for (auto item : split(text.substr(7), ',')) {
      auto at = item.find('@');
      if (at == std::string_view::npos) throw std::invalid_argument("expected SPACING@WEIGHT in atomic spec");
      atoms.push_back({parse_rational(item.substr(0, at)), parse_rational(item.substr(at + 1))});
    }
    return atomic(std::move(atoms));
  }
  throw std::invalid_argument("unknown spacing spec '" + std::string(text) + "'");
}

std::string SpacingSpec::str() const {
  return std::visit(
      [](const auto& s) -> std::string {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, ExponentialUnitRate>) {
          return "exp";
        } else if constexpr (std::is_same_v<S, DeterministicUnit>) {
          return "unit";
        } else if constexpr (std::is_same_v<S, UniformSpacing>) {
          return "uniform:" + to_string_shortest(s.lo) + ":" + to_string_shortest(s.hi);
        } else {
          std::string out = "atomic:";
          for (std::size_t i = 0; i < s.atoms.size(); ++i) {
            if (i) out += ",";
            out += to_string(s.atoms[i].spacing) + "@" + to_string(s.atoms[i].weight);
          }
          return out;
        }
      },
      v_);
}

double SpacingSpec::mean() const {
  return std::visit(
      [](const auto& s) -> double {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, ExponentialUnitRate> || std::is_same_v<S, DeterministicUnit>) {
          return 1.0;
        } else if constexpr (std::is_same_v<S, UniformSpacing>) {
          return 0.5 * (s.lo + s.hi);
        } else {
          Rational m = 0;
          for (const auto& a : s.atoms) m += a.spacing * a.weight;
          return m.convert_to<double>();
        }
      },
      v_);
}

std::int64_t SpacingSpec::lattice_denominator() const {
  if (std::holds_alternative<DeterministicUnit>(v_)) return 1;
  const auto* a = std::get_if<RationalAtomic>(&v_);
  if (a == nullptr) throw std::logic_error("lattice_denominator on an atomless spacing law");
  BigInt d = 1;
  for (const auto& atom : a->atoms) d = boost::multiprecision::lcm(d, BigInt(denominator(atom.spacing)));
  if (d > BigInt(1) << 40) throw std::invalid_argument("atomic spacing denominators too large for lattice mode");
  return d.convert_to<std::int64_t>();
}

// ---------------------------------------------------------------------------
// Sampling

template <>
SpacingSampler<double>::SpacingSampler(const SpacingSpec& spec) : spec_(spec) {
  if (spec.is_exact()) throw std::invalid_argument("floating sampler requested for an atomic spacing law");
}

template <>
double SpacingSampler<double>::operator()(Stream& s) const {
  if (std::holds_alternative<ExponentialUnitRate>(spec_.variant())) return s.exponential();
  const auto& u = std::get<UniformSpacing>(spec_.variant());
  double g;
  do {
    g = u.lo + (u.hi - u.lo) * s.uniform();
  } while (g <= 0.0);
  return g;
}

template <>
SpacingSampler<std::int64_t>::SpacingSampler(const SpacingSpec& spec) : spec_(spec) {
  if (!spec.is_exact()) throw std::invalid_argument("lattice sampler requested for an atomless spacing law");
  if (const auto* a = std::get_if<RationalAtomic>(&spec.variant())) {
    const std::int64_t d = spec.lattice_denominator();
    double acc = 0.0;
    for (const auto& atom : a->atoms) {
      Rational steps = atom.spacing * d;
      steps_.push_back(numerator(steps).convert_to<std::int64_t>());
      acc += atom.weight.convert_to<double>();
      cumulative_.push_back(acc);
    }
    cumulative_.back() = 1.0;
  }
}

template <>
std::int64_t SpacingSampler<std::int64_t>::operator()(Stream& s) const {
  if (steps_.empty()) return 1;
  if (steps_.size() == 1) return steps_.front();
  const double u = s.uniform();
  auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
  if (it == cumulative_.end()) --it;
  return steps_[static_cast<std::size_t>(it - cumulative_.begin())];
}

std::vector<Velocity> sample_velocities(const Params& params, std::size_t n, const RandomnessContract& rng) {
  Stream s = rng.stream();
  std::vector<Velocity> out(n);
  for (auto& v : out) v = params.velocity_from_uniform(s.uniform());
  return out;
}

template <class T>
void sample_half(const SpacingSampler<T>& gaps, const Params& params, std::size_t n, const RandomnessContract& rng,
                 HalfSample<T>& out) {
  Stream gs = rng.child("gap").stream();
  Stream vs = rng.child("vel").stream();
  out.distance.resize(n);
  out.velocity.resize(n);
  T x{};
  for (std::size_t i = 0; i < n; ++i) {
    x += gaps(gs);
    out.distance[i] = x;
    out.velocity[i] = params.velocity_from_uniform(vs.uniform());
  }
}

template void sample_half<double>(const SpacingSampler<double>&, const Params&, std::size_t,
                                  const RandomnessContract&, HalfSample<double>&);
template void sample_half<std::int64_t>(const SpacingSampler<std::int64_t>&, const Params&, std::size_t,
                                        const RandomnessContract&, HalfSample<std::int64_t>&);

Configuration sample_half_configuration(const SpacingSpec& spec, const Params& params, std::size_t n, Side side,
                                        const RandomnessContract& rng) {
  if (n == 0) throw std::invalid_argument("sample_half_configuration needs n >= 1");
  Configuration c;
  c.mode = spec.is_exact() ? Mode::Exact : Mode::Float;
  c.provenance = Provenance{params, spec, rng.seed, rng.trial};
  c.particles.resize(n);
  auto place = [&](std::size_t k, Number dist, Velocity v) {
    // k is 0-based distance rank from the origin.
    if (side == Side::Positive) {
      c.particles[k] = Particle{static_cast<long>(k + 1), std::move(dist), v};
    } else {
      Number neg = dist.is_exact() ? Number(Rational(-dist.rational())) : Number(-dist.to_double());
      c.particles[n - 1 - k] = Particle{-static_cast<long>(k + 1), std::move(neg), v};
    }
  };
  if (spec.is_exact()) {
    SpacingSampler<std::int64_t> gaps(spec);
    HalfSample<std::int64_t> h;
    sample_half(gaps, params, n, rng, h);
    const std::int64_t d = spec.lattice_denominator();
    for (std::size_t k = 0; k < n; ++k) place(k, Number(Rational(h.distance[k], d)), h.velocity[k]);
  } else {
    SpacingSampler<double> gaps(spec);
    HalfSample<double> h;
    sample_half(gaps, params, n, rng, h);
    for (std::size_t k = 0; k < n; ++k) place(k, Number(h.distance[k]), h.velocity[k]);
  }
  return c;
}

// ---------------------------------------------------------------------------
// Configuration

void Configuration::validate() const {
  for (std::size_t i = 0; i < particles.size(); ++i) {
    const auto& p = particles[i];
    if (p.index == 0) throw std::invalid_argument("particle index 0 is not allowed");
    if (p.position.is_exact() != (mode == Mode::Exact))
      throw std::invalid_argument("particle " + std::to_string(p.index) + " position does not match numeric mode");
    if (!p.position.is_exact() && !std::isfinite(p.position.to_double()))
      throw std::invalid_argument("particle " + std::to_string(p.index) + " has a non-finite position");
    if (i > 0) {
      const auto& q = particles[i - 1];
      if (!(q.position < p.position)) {
        if (q.position == p.position)
          throw std::invalid_argument("duplicate position " + p.position.str() + " (particles " +
                                      std::to_string(q.index) + ", " + std::to_string(p.index) + ")");
        throw std::invalid_argument("positions are not sorted at particle " + std::to_string(p.index));
      }
      if (q.index >= p.index) throw std::invalid_argument("indices do not follow position order");
    }
  }
}

Configuration make_configuration(const std::vector<std::pair<long long, Velocity>>& xs) {
  Configuration c;
  c.mode = Mode::Exact;
  long idx = 1;
  for (const auto& [x, v] : xs) c.particles.push_back({idx++, Number(Rational(x)), v});
  return c;
}

Configuration make_float_configuration(const std::vector<std::pair<double, Velocity>>& xs) {
  Configuration c;
  c.mode = Mode::Float;
  long idx = 1;
  for (const auto& [x, v] : xs) c.particles.push_back({idx++, Number(x), v});
  return c;
}

void write_configuration(std::ostream& os, const Configuration& c) {
  for (const auto& p : c.particles) os << p.index << ' ' << p.position.str() << ' ' << velocity_char(p.velocity) << '\n';
}

std::string format_configuration(const Configuration& c) {
  std::ostringstream os;
  write_configuration(os, c);
  return os.str();
}

Configuration parse_configuration(std::string_view text, std::optional<Mode> force_mode) {
  struct Row {
    std::size_t line;
    long index;
    std::string pos;
    Velocity v;
  };
  std::vector<Row> rows;
  bool looks_float = false;
  std::size_t line_no = 1;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= text.size(); ++i) {
    if (i < text.size() && text[i] != '\n' && text[i] != ';') continue;
    std::string rec(text.substr(start, i - start));
    const std::size_t this_line = line_no;
    if (i < text.size() && text[i] == '\n') ++line_no;
    start = i + 1;
    if (auto hash = rec.find('#'); hash != std::string::npos) rec.erase(hash);
    std::istringstream is(rec);
    std::string a, b, cv, extra;
    if (!(is >> a)) continue;
    if (!(is >> b >> cv)) throw ParseError(this_line, "expected 'index position velocity'");
    if (is >> extra) throw ParseError(this_line, "unexpected trailing token '" + extra + "'");
    long index = 0;
    auto [ptr, ec] = std::from_chars(a.data(), a.data() + a.size(), index);
    if (ec != std::errc() || ptr != a.data() + a.size()) throw ParseError(this_line, "bad index '" + a + "'");
    Velocity v;
    try {
      v = parse_velocity(cv);
    } catch (const std::invalid_argument& e) {
      throw ParseError(this_line, e.what());
    }
    if (b.find_first_of(".eEni") != std::string::npos) looks_float = true;
    rows.push_back({this_line, index, b, v});
  }
  if (rows.empty()) throw ParseError(line_no, "no particles");

  Configuration c;
  c.mode = force_mode.value_or(looks_float ? Mode::Float : Mode::Exact);
  for (const auto& r : rows) {
    Number pos;
    try {
      if (c.mode == Mode::Exact) {
        pos = Number(parse_rational(r.pos));
      } else {
        double d = 0;
        auto [ptr, ec] = std::from_chars(r.pos.data(), r.pos.data() + r.pos.size(), d);
        if (ec != std::errc() || ptr != r.pos.data() + r.pos.size()) {
          if (r.pos.find('/') == std::string::npos) throw std::invalid_argument("bad position '" + r.pos + "'");
          d = parse_rational(r.pos).convert_to<double>();
        }
        pos = Number(d);
      }
    } catch (const std::invalid_argument& e) {
      throw ParseError(r.line, e.what());
    }
    c.particles.push_back({r.index, std::move(pos), r.v});
  }
  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw ParseError(rows.back().line, e.what());
  }
  return c;
}

}  // namespace balab
