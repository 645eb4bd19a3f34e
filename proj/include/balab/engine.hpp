#pragma once

#include "balab/model.hpp"

#include <array>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace balab {

enum class CollisionKind { Pair, Triple };

/// One annihilation event. Pair participants are listed left to right; a
/// Triple is (Right, Blockade, Left) meeting at the blockade.
struct CollisionRecord {
  Number time;
  Number position;
  CollisionKind kind = CollisionKind::Pair;
  std::array<long, 3> indices{0, 0, 0};

  [[nodiscard]] int arity() const { return kind == CollisionKind::Pair ? 2 : 3; }
};

struct Fate {
  /// Index into WindowOutcome::collisions, or empty when the particle
  /// survives the window.
  std::optional<std::size_t> collision;
  [[nodiscard]] bool survives() const { return !collision.has_value(); }
};

struct SurvivorCounts {
  long dot = 0;    // blockades
  long left = 0;   // left movers
  long right = 0;  // right movers
  friend bool operator==(const SurvivorCounts&, const SurvivorCounts&) = default;
};

/// zLeft = dot - left, zRight = dot - right.
struct ZStats {
  long z_left = 0;
  long z_right = 0;
};

/// First mover to reach the origin and when it gets there.
struct Visit {
  long index = 0;
  Number time;
};

/// Complete resolution of a finite window [first, last].
struct WindowOutcome {
  long first = 0;
  long last = 0;
  Mode mode = Mode::Exact;
  std::vector<long> indices;          // particle indices in position order
  std::vector<Velocity> velocities;   // aligned with indices
  std::vector<Number> positions;      // aligned with indices
  std::vector<Fate> fates;            // aligned with indices
  std::vector<CollisionRecord> collisions;  // in processing order
  std::vector<long> survivors;        // indices, position order
  SurvivorCounts counts;
  std::optional<Visit> first_left_visitor;   // windows starting at index 1
  std::optional<Visit> first_right_visitor;  // windows ending at index -1
  /// Float-mode triple collisions (measure zero under atomless spacings).
  std::size_t anomalies = 0;

  [[nodiscard]] std::size_t size() const { return indices.size(); }
  [[nodiscard]] const Fate& fate(long index) const;
  [[nodiscard]] std::size_t pair_count() const;
  [[nodiscard]] std::size_t triple_count() const;
  /// Survivor velocities read left to right, e.g. "LLBR".
  [[nodiscard]] std::string survivor_pattern() const;
};

/// Exact resolution of ballistic annihilation on the configuration. Exact-mode
/// inputs are resolved in exact arithmetic (scaled integers when the common
/// denominator allows it, GMP rationals otherwise). Throws
/// std::invalid_argument on empty, unsorted, or duplicate-position input.
WindowOutcome resolve(const Configuration& config);

SurvivorCounts survivor_counts(const WindowOutcome& outcome);
ZStats z_stats(const WindowOutcome& outcome);

/// Smallest-index surviving Left of a window that starts at index 1; its
/// arrival time at the origin equals its initial distance.
std::optional<Visit> first_left_visitor(const WindowOutcome& outcome);
/// Largest-index surviving Right of a window that ends at index -1.
std::optional<Visit> first_right_visitor(const WindowOutcome& outcome);

/// Reflection x -> -x with Left and Right exchanged; index i becomes -i.
Configuration mirror(const Configuration& config);
/// The outcome of resolve(mirror(c)) computed from the outcome of c.
WindowOutcome mirror(const WindowOutcome& outcome);

/// Float configurations converted to exact rationals (every double is a
/// dyadic rational). Exact configurations are returned unchanged.
Configuration to_exact(const Configuration& config);

/// "time position kind indices" per collision, one per line.
void write_collision_log(std::ostream& os, const WindowOutcome& outcome);

}  // namespace balab
