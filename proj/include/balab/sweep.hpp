#pragma once

// Phase-diagram sweeps and boundary bisection over (p, lambda).

#include "balab/estimators.hpp"
#include "balab/model.hpp"
#include "balab/theory.hpp"

#include <json.hpp>

#include <atomic>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace balab {

struct SweepConfig {
  std::vector<double> p_grid;
  std::vector<double> lambda_grid;
  SpacingSpec spec;
  std::size_t trials = 10000;
  std::size_t n = 256;
  std::vector<std::size_t> k_grid;  // empty: 1, 2, 4, ..., n
  std::vector<std::size_t> beta_windows;  // empty: n/4, n/2, n
  std::uint64_t seed = 0;
  unsigned workers = 0;
  std::string output;  // directory for cells.jsonl, phase.csv, phase.svg
  double fluctuation_threshold = 0.05;
  bool svg = true;

  static SweepConfig from_json(const nlohmann::json& j);
  [[nodiscard]] nlohmann::json to_json() const;
  /// Throws std::invalid_argument on grid values outside (0, 1) or trials < 100.
  void validate() const;
  [[nodiscard]] std::vector<std::size_t> effective_k_grid() const;
  [[nodiscard]] std::vector<std::size_t> effective_beta_windows() const;
  /// Hash of every field that affects results (not workers or output).
  [[nodiscard]] std::string result_key() const;
};

enum class Classification { FluctuationConsistent, FixationDetected, Undecided };
std::string to_string(Classification c);

/// Fixation-detected: lower - 3 se > 0. Fluctuation-consistent: lower = 0
/// and upper < threshold. Otherwise undecided.
Classification classify(const ThetaBracket& t, double fluctuation_threshold);

struct PhasePoint {
  double p = 0.0;
  double lambda = 0.0;
  ThetaBracket theta;
  AlphaTriple alpha;
  BetaPair beta;
  BoundSet<double> bounds;
  std::optional<double> f_of_p;  // absent when the alpha estimate is degenerate
  Classification classification = Classification::Undecided;

  [[nodiscard]] nlohmann::json to_json() const;
  /// The fixed CSV columns as a JSON object.
  [[nodiscard]] nlohmann::json csv_row() const;
};

PhasePoint compute_phase_point(const SweepConfig& cfg, double p, double lambda);

/// Constraint violations of one CSV row: Fixation-detected at or below the
/// proven fluctuation bound, or Fluctuation-consistent above f*.
std::vector<std::string> phase_violations(const nlohmann::json& row, bool atomless);

extern const std::vector<std::string> kCsvColumns;

struct SweepResult {
  std::vector<nlohmann::json> rows;  // grid order: lambda outer, p inner
  std::size_t computed = 0;
  std::size_t reused = 0;
  bool interrupted = false;
  std::vector<std::string> violations;
  std::vector<std::string> bracket_inconsistencies;
};

/// Runs every cell not already present in cfg.output/cells.jsonl, appending
/// one line per finished cell, then writes phase.csv (and phase.svg). A set
/// stop flag ends the run after the current cell.
SweepResult run_sweep(const SweepConfig& cfg, std::ostream* log = nullptr, const std::atomic<bool>* stop = nullptr);

void write_csv(std::ostream& os, const std::vector<nlohmann::json>& rows);
void write_svg(std::ostream& os, const std::vector<nlohmann::json>& rows);

struct BoundaryConfig {
  double lambda = 0.5;
  SpacingSpec spec;
  double p_lo = 0.16;
  double p_hi = 0.32;
  double tolerance = 0.04;
  std::size_t max_probes = 12;
  std::size_t trials = 200000;
  std::size_t n = 512;
  std::size_t k_max = 256;
  std::uint64_t seed = 0;
  unsigned workers = 0;
};

struct BoundaryProbe {
  double p = 0.0;
  ThetaBracket theta;
  bool detected = false;
};

struct BoundaryResult {
  double p_lo = 0.0;
  double p_hi = 0.0;
  std::vector<BoundaryProbe> probes;
  /// "ok", "no sign change", or "budget exhausted".
  std::string status;
  [[nodiscard]] double width() const { return p_hi - p_lo; }
  [[nodiscard]] nlohmann::json to_json() const;
};

/// Bisection on the significance-gated sign of the theta lower bound:
/// returns [p_lo, p_hi] with fixation detected at p_hi and not at p_lo.
BoundaryResult find_boundary(const BoundaryConfig& cfg, std::ostream* log = nullptr);

}  // namespace balab
