#pragma once

// Monte-Carlo estimators for visit, tie, survival and Z statistics on
// truncated half-line windows, plus consistency checks between them.
//
// Trial t of an estimator called with contract rng draws its positive
// half-line from label rng.label + "/pos" and its negative one from "/neg",
// both at trial index rng.trial + t. Two estimators called with the same
// contract therefore see the same configurations (common random numbers);
// different labels give independent runs.

#include "balab/model.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace balab {

enum class BoundDirection { LowerBound, UpperBound, PointEstimate };
std::string to_string(BoundDirection d);

struct Truncation {
  std::size_t n = 0;
  std::vector<std::size_t> k_grid;
};

struct Estimate {
  double value = 0.0;
  double se = 0.0;  // standard error
  std::size_t trials = 0;
  Truncation truncation;
  BoundDirection direction = BoundDirection::PointEstimate;
};

/// Worker threads for the trial loop; 0 means one per hardware thread.
/// Results never depend on this value.
struct Parallel {
  unsigned workers = 0;
};

/// Side::Positive gives q-left (the origin is visited by a left mover of the
/// half-process on [0, inf)); Side::Negative gives q-right.
Estimate estimate_q(Side side, const SpacingSpec& spec, const Params& params, std::size_t n, std::size_t trials,
                    const RandomnessContract& rng, Parallel par = {});

/// Conditional frequencies of which first visitor reaches the origin first.
struct AlphaTriple {
  Estimate right;  // P(tau_right <= tau_left | both finite)
  Estimate left;   // P(tau_right >= tau_left | both finite)
  Estimate hat;    // P(tau_right == tau_left | both finite)
  std::size_t trials = 0;
  std::size_t conditioned = 0;  // trials kept after the censoring guard
  std::size_t right_first = 0;
  std::size_t left_first = 0;
  std::size_t ties = 0;
  /// Ties seen in Float mode, where they have probability zero.
  std::size_t float_ties = 0;
  bool degenerate = false;
  /// alpha_right(n) - alpha_right(n/2) on the same samples.
  double truncation_shift = 0.0;
};

inline constexpr std::size_t kMinConditioned = 100;

/// Keeps trials where both half-lines have a first visitor inside their
/// n-window and both visit times are <= min(x_n, |x_-n|).
AlphaTriple estimate_alpha(const SpacingSpec& spec, const Params& params, std::size_t n, std::size_t trials,
                           const RandomnessContract& rng, Parallel par = {});

struct BetaPair {
  std::vector<std::size_t> windows;
  std::vector<Estimate> right;  // P(particle 1 is Right and survives [1, w])
  std::vector<Estimate> left;   // P(particle -1 is Left and survives [-w, -1])
  double stability_right = 0.0;  // max |change| over the last two doublings
  double stability_left = 0.0;
  [[nodiscard]] const Estimate& beta_right() const { return right.back(); }
  [[nodiscard]] const Estimate& beta_left() const { return left.back(); }
};

BetaPair estimate_beta(const SpacingSpec& spec, const Params& params, const std::vector<std::size_t>& windows,
                       std::size_t trials, const RandomnessContract& rng, Parallel par = {});

/// Mean of Z-left(1, k) / k (Side::Positive) or Z-right(-k, -1) / k.
Estimate estimate_mean_z(Side side, const SpacingSpec& spec, const Params& params, std::size_t k, std::size_t trials,
                         const RandomnessContract& rng, Parallel par = {});

struct ThetaBracket {
  Estimate upper;  // (1 - q_right)(1 - q_left)
  Estimate lower;  // max(0, a) max(0, b) / p^2
  Estimate q_left;
  Estimate q_right;
  Estimate theta_left;    // p (1 - q_left)
  Estimate theta_right;   // p (1 - q_right)
  Estimate theta0_left;   // max(0, a)
  Estimate theta0_right;  // max(0, b)
  std::size_t k_left = 0;   // grid points picked by the split-sample selection
  std::size_t k_right = 0;
  [[nodiscard]] bool consistent(double sigmas = 3.0) const {
    return lower.value - sigmas * lower.se <= upper.value + sigmas * upper.se;
  }
};

/// Geometric grid {1, 2, 4, ...} up to kmax.
std::vector<std::size_t> geometric_grid(std::size_t kmax);

/// Upper bound from truncated visit probabilities; lower bound from
/// sup_k E[Z(1,k)]/k on each side. The sup is cross-fitted: the argmax over
/// the grid is chosen on even trials and evaluated on odd ones, and vice
/// versa, and the two evaluations are averaged.
ThetaBracket theta_bracket(const SpacingSpec& spec, const Params& params, std::size_t n,
                           const std::vector<std::size_t>& k_grid, std::size_t trials, const RandomnessContract& rng,
                           Parallel par = {});

/// Window estimates of collision-class probabilities around the origin.
struct CollisionClasses {
  Estimate right_to_blockade;     // particle 1 is Right and meets a Blockade
  Estimate right_meets_left;      // particle 1 is Right and meets a Left
  Estimate left_to_blockade;      // particle -1 is Left and meets a Blockade
  Estimate left_meets_right;      // particle -1 is Left and meets a Right
  Estimate right_to_blockade_and_left_visit;  // first event plus a left visitor of 0
};

/// Triple collisions count as meeting the blockade.
CollisionClasses estimate_collision_classes(const SpacingSpec& spec, const Params& params, std::size_t n,
                                            std::size_t trials, const RandomnessContract& rng, Parallel par = {});

struct Residual {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  double value = 0.0;  // lhs - rhs
  double se = 0.0;
  bool flagged = false;  // |value| > threshold * se
};

struct IdentityReport {
  std::vector<Residual> residuals;
  double threshold = 4.0;
  [[nodiscard]] bool ok() const;
};

/// Residuals of the three recursion identities, the three collision-class
/// identities, and the joint visit identity. Inputs are assumed independent
/// (estimate them from distinct stream labels); alpha enters through its
/// multinomial covariance.
IdentityReport check_identities(const Estimate& q_right, const Estimate& q_left, const AlphaTriple& alpha,
                                const Estimate& beta_right, const Estimate& beta_left, const Params& params,
                                const std::optional<CollisionClasses>& classes = std::nullopt, double threshold = 4.0);

struct SuperadditivityReport {
  std::size_t samples = 0;
  std::size_t conditioned = 0;  // samples with no surviving Right in [a, b]
  std::size_t violations = 0;
};

/// Z-left(a,c) >= Z-left(a,b) + Z-left(b+1,c) whenever N-right(a,b) = 0, on
/// positive half-lines of c particles.
SuperadditivityReport check_superadditivity(const SpacingSpec& spec, const Params& params, std::size_t a,
                                            std::size_t b, std::size_t c, std::size_t trials,
                                            const RandomnessContract& rng, Parallel par = {});
/// Same inequality over all 3^c velocity assignments at unit spacing.
SuperadditivityReport check_superadditivity_exhaustive(std::size_t a, std::size_t b, std::size_t c);

struct DichotomyReport {
  double statistic = 0.0;  // p q_l q_r (alpha_l - alpha_r) - (1 - 2 lambda)(1 - p)
  double se = 0.0;
  /// "right-vanishes" (beta_right = 0, q_right <= q_left), "left-vanishes",
  /// or "both" when the statistic is within 3 se of zero.
  std::string predicted;
  bool beta_ok = false;
  bool order_ok = false;
  [[nodiscard]] bool consistent() const { return beta_ok && order_ok; }
};

inline constexpr double kBetaZeroTolerance = 0.02;

DichotomyReport check_dichotomy(const Estimate& q_right, const Estimate& q_left, const AlphaTriple& alpha,
                                const Estimate& beta_right, const Estimate& beta_left, const Params& params,
                                double beta_tolerance = kBetaZeroTolerance);

struct GeometricReport {
  std::size_t trials = 0;
  double q_left = 0.0;
  std::vector<std::size_t> observed;  // counts of N-left(1,n) = 0, 1, ..., last bin is a tail
  std::vector<double> expected;
  double chi_square = 0.0;
  int dof = 0;
  double p_value = 1.0;
  double mean = 0.0;
  double mean_se = 0.0;
  double geometric_mean = 0.0;  // q / (1 - q)
  double geometric_mean_se = 0.0;
};

GeometricReport check_geometric_visits(const SpacingSpec& spec, const Params& params, std::size_t n,
                                       std::size_t trials, const RandomnessContract& rng, Parallel par = {});

nlohmann::json to_json(const Estimate& e);
nlohmann::json to_json(const AlphaTriple& a);
nlohmann::json to_json(const BetaPair& b);
nlohmann::json to_json(const ThetaBracket& t);
nlohmann::json to_json(const CollisionClasses& c);
nlohmann::json to_json(const IdentityReport& r);
nlohmann::json to_json(const SuperadditivityReport& r);
nlohmann::json to_json(const DichotomyReport& r);
nlohmann::json to_json(const GeometricReport& r);

}  // namespace balab
