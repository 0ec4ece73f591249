#pragma once

#include "kbm/core.hpp"

#include <vector>

// Level-2 lifts of piecewise-linear paths, Levy areas, and the dyadic
// moment-scaling diagnostics used as a tightness check.

namespace kbm {

// Lift of a sampled path: one exact increment per linear segment plus their
// Chen product over the whole interval.
struct LiftedPath {
  PathSample base;
  std::vector<RoughIncrement> cells;
  RoughIncrement cumulative;
};

// Exact lift: each segment [s,t] with increment w contributes (w, w (x) w / 2);
// cells are composed with the Chen law, no quadrature error anywhere.
LiftedPath lift_piecewise_linear(const PathSample& path);

// Antisymmetric part A = (second - second^T) / 2, with A = -A^T enforced
// exactly entry by entry.
Mat levy_area(const RoughIncrement& r);

// Streaming lift accumulator for long simulations: O(d^2) per segment,
// no path storage.
class LiftAccumulator {
 public:
  explicit LiftAccumulator(int dim) : total_(RoughIncrement::zero(dim)) {}
  void add_segment(const Vec& w) { chen_append_segment(total_, w); }
  const RoughIncrement& total() const { return total_; }
  void reset() { total_ = RoughIncrement::zero(total_.dim()); }

 private:
  RoughIncrement total_;
};

// Per-trajectory increments over the cells of the finest dyadic partition of
// the rescaled interval [0, 1]; scale 2^-k cells are Chen products of these.
struct DyadicLift {
  int finest_level = 0;                // cells = 2^finest_level
  std::vector<RoughIncrement> cells;
};

// Moment ratios E|dX|^a / dt^(a/2) and E|XX|^a / dt^a per (exponent, sigma,
// dyadic scale). `pooled` averages over all cells of a scale (they share one
// law under stationarity); `cell_max` is the max over per-cell means.
struct MomentScalingReport {
  std::vector<double> exponents;
  std::vector<double> sigmas;
  std::vector<int> levels;  // scale 2^-k for k in levels

  // Indexed [exponent][sigma][level].
  std::vector<std::vector<std::vector<double>>> path_pooled, path_cell_max;
  std::vector<std::vector<std::vector<double>>> area_pooled, area_cell_max;

  // sup over sigma of the pooled ratio, per [exponent][level]; the moment
  // bounds are uniform in sigma, so this is the bounded quantity.
  std::vector<std::vector<double>> path_sup, area_sup;

  // Fine-scale blow-up: max over scales of the sup ratio relative to its
  // value at the coarsest scale (the diffusive plateau). The bounds are
  // one-sided, so ratios may fall below the plateau at fine scales but must
  // not rise above it; a signal rougher than Brownian blows this up.
  std::vector<double> path_blowup, area_blowup;

  // max/min spread of the sup ratios across scales, per exponent (reported;
  // saturates only deep in the diffusive regime).
  std::vector<double> path_spread, area_spread;

  bool underpowered = false;  // fewer than 10^3 trajectories per sigma
};

// `ensembles[i]` holds the dyadic lifts of all trajectories at sigmas[i].
MomentScalingReport moment_scaling_report(const std::vector<double>& sigmas,
                                          const std::vector<std::vector<DyadicLift>>& ensembles,
                                          const std::vector<double>& exponents,
                                          int coarsest_level = 1);

}  // namespace kbm
