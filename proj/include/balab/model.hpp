#pragma once

#include "balab/number.hpp"
#include "balab/random.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace balab {

/// Particle velocity; the underlying value is the signed unit speed.
enum class Velocity : std::int8_t { Left = -1, Blockade = 0, Right = 1 };

constexpr int speed(Velocity v) { return static_cast<int>(v); }
constexpr Velocity reflect(Velocity v) { return static_cast<Velocity>(-static_cast<int>(v)); }
char velocity_char(Velocity v);
/// Accepts L/B/R, Left/Blockade/Right, or -1/0/1.
Velocity parse_velocity(std::string_view token);

/// Velocity law parameters: P(Blockade) = p, P(Right) = lambda (1 - p),
/// P(Left) = (1 - lambda)(1 - p). Both must lie strictly inside (0, 1).
class Params {
 public:
  Params(double p, double lambda);

  [[nodiscard]] double p() const { return p_; }
  [[nodiscard]] double lambda() const { return lambda_; }
  [[nodiscard]] double weight(Velocity v) const;
  /// Parameters of the reflected process (Left and Right exchanged).
  [[nodiscard]] Params mirrored() const { return {p_, 1.0 - lambda_}; }

  /// Inverse-CDF draw from one uniform; the same uniform maps monotonically
  /// across parameter values, which couples runs at nearby (p, lambda).
  [[nodiscard]] Velocity velocity_from_uniform(double u) const {
    if (u < p_) return Velocity::Blockade;
    if (u < p_ + lambda_ * (1.0 - p_)) return Velocity::Right;
    return Velocity::Left;
  }

 private:
  double p_;
  double lambda_;
};

struct ExponentialUnitRate {};
struct UniformSpacing {
  double lo = 0.5;
  double hi = 1.5;
};
struct DeterministicUnit {};
struct RationalAtom {
  Rational spacing;
  Rational weight;
};
struct RationalAtomic {
  std::vector<RationalAtom> atoms;
};

/// Law of the i.i.d. gaps between consecutive particles.
class SpacingSpec {
 public:
  using Variant = std::variant<ExponentialUnitRate, UniformSpacing, DeterministicUnit, RationalAtomic>;

  SpacingSpec() : v_(ExponentialUnitRate{}) {}
  SpacingSpec(Variant v);  // NOLINT(google-explicit-constructor)

  static SpacingSpec exponential() { return SpacingSpec(ExponentialUnitRate{}); }
  static SpacingSpec unit() { return SpacingSpec(DeterministicUnit{}); }
  static SpacingSpec uniform(double lo, double hi) { return SpacingSpec(UniformSpacing{lo, hi}); }
  static SpacingSpec atomic(std::vector<RationalAtom> atoms) { return SpacingSpec(RationalAtomic{std::move(atoms)}); }
  /// "exp", "unit", "uniform:LO:HI", or "atomic:S@W,S@W,..." with rational S and W.
  static SpacingSpec parse(std::string_view text);

  [[nodiscard]] const Variant& variant() const { return v_; }
  /// Atomic laws are simulated exactly; atomless ones in floating point.
  [[nodiscard]] bool is_exact() const {
    return std::holds_alternative<DeterministicUnit>(v_) || std::holds_alternative<RationalAtomic>(v_);
  }
  [[nodiscard]] std::string str() const;
  [[nodiscard]] double mean() const;

  /// Exact laws only: common denominator of every spacing, so that every
  /// position is an integer multiple of 1 / lattice_denominator().
  [[nodiscard]] std::int64_t lattice_denominator() const;

 private:
  Variant v_;
};

enum class Side { Positive, Negative };
enum class Mode { Exact, Float };

struct Particle {
  long index = 0;
  Number position;
  Velocity velocity = Velocity::Blockade;
};

struct Provenance {
  Params params{0.5, 0.5};
  SpacingSpec spacing;
  std::uint64_t seed = 0;
  std::uint64_t trial = 0;
};

/// Finite initial configuration ordered by position.
struct Configuration {
  std::vector<Particle> particles;
  Mode mode = Mode::Exact;
  std::optional<Provenance> provenance;

  [[nodiscard]] std::size_t size() const { return particles.size(); }
  [[nodiscard]] bool empty() const { return particles.empty(); }
  /// Throws std::invalid_argument unless positions are strictly increasing,
  /// indices are strictly increasing and nonzero, and every position matches
  /// the numeric mode.
  void validate() const;
};

/// Builds an Exact-mode configuration from integer positions, indexed 1..n.
Configuration make_configuration(const std::vector<std::pair<long long, Velocity>>& xs);
/// Float-mode counterpart of make_configuration.
Configuration make_float_configuration(const std::vector<std::pair<double, Velocity>>& xs);

std::vector<Velocity> sample_velocities(const Params& params, std::size_t n, const RandomnessContract& rng);

/// n particles on one half-line. The particle nearest the origin sits one
/// spacing draw away from it; later gaps are i.i.d. draws. Positive side
/// uses indices 1..n, negative side -n..-1.
Configuration sample_half_configuration(const SpacingSpec& spec, const Params& params, std::size_t n, Side side,
                                        const RandomnessContract& rng);

/// Gap sampler over the scalar type used by the fast kernels: double for
/// atomless laws, integer lattice units for atomic ones.
template <class T>
class SpacingSampler {
 public:
  explicit SpacingSampler(const SpacingSpec& spec);
  T operator()(Stream& s) const;

 private:
  SpacingSpec spec_;
  std::vector<double> cumulative_;
  std::vector<std::int64_t> steps_;
};

/// A half-line sample in kernel form: distances from the origin (ascending)
/// and velocities, both indexed by |particle index| - 1.
template <class T>
struct HalfSample {
  std::vector<T> distance;
  std::vector<Velocity> velocity;
};

/// Draws exactly the sample that sample_half_configuration produces for the
/// same arguments; the Side only matters to the caller's interpretation.
template <class T>
void sample_half(const SpacingSampler<T>& gaps, const Params& params, std::size_t n, const RandomnessContract& rng,
                 HalfSample<T>& out);

class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  [[nodiscard]] std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// One particle per line, "index position velocity". Exact positions print as
/// "a/b" (or "a" for integers), Float positions as shortest round-trip decimals.
void write_configuration(std::ostream& os, const Configuration& c);
std::string format_configuration(const Configuration& c);
/// Parses the line format above; ';' also separates records and '#' starts a
/// comment. Mode is Float if any position is written with a decimal point or
/// exponent, Exact otherwise, unless forced.
Configuration parse_configuration(std::string_view text, std::optional<Mode> force_mode = std::nullopt);

}  // namespace balab
