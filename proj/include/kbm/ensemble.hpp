#pragma once

#include "kbm/models.hpp"
#include "kbm/roughpath.hpp"

#include <functional>
#include <optional>
#include <vector>

// Trajectory ensembles. The OpenMP kernels and the serial reference share the
// per-trajectory code; with a fixed (seed, role) every trajectory owns its
// random stream and results land in indexed slots, so output is bit-identical
// for any worker count.

namespace kbm {

// Runs body(i) for i in [0, n). workers == 1 is the serial reference path;
// workers == 0 uses all hardware threads. Exceptions are captured and
// rethrown after the loop.
void parallel_for_indexed(std::size_t n, int workers, const std::function<void(std::size_t)>& body);

struct EnsembleOptions {
  int n_traj = 1000;
  double sigma = 1.0;    // diffusive rescaling; physical horizon = sigma^4 * horizon
  double horizon = 1.0;  // horizon of the rescaled path X
  double step = 0.0;     // unit-speed step size; 0 = model default
  std::uint64_t seed = 1;
  std::uint64_t role = 1;  // stream namespace, distinct per use site
  int workers = 0;
  double burn_in = 0.0;  // physical time discarded before statistics start
  std::optional<VelocityState> fixed_start;

  std::vector<double> checkpoints;  // rescaled times at which X is recorded
  bool want_lift = false;           // cumulative rough increment over [0, horizon]
  int dyadic_level = 0;             // > 0: cell increments at scale 2^-level
};

struct TrajectoryResult {
  Vec x_end;                         // X at the rescaled horizon
  std::vector<Vec> at_checkpoints;   // X at opt.checkpoints
  RoughIncrement lift;               // if want_lift
  DyadicLift dyadic;                 // if dyadic_level > 0
};

// Simulates one velocity trajectory at unit speed over sigma^4 * horizon,
// integrating the position by the trapezoid rule and feeding each linear
// segment of the rescaled path into the requested accumulators. Checkpoint
// and dyadic-cell boundaries are hit exactly by splitting steps.
TrajectoryResult simulate_trajectory(const VelocityModel& model, const EnsembleOptions& opt,
                                     std::uint64_t index);

std::vector<TrajectoryResult> run_velocity_ensemble(const VelocityModel& model,
                                                    const EnsembleOptions& opt);

// Unit-speed velocity/position path on a uniform grid (for the CLI and the
// development pipeline). Points carry x, velocities carry v at the nodes.
struct SimulatedPath {
  PathSample position;
  std::vector<Vec> velocities;
};

// `stride` records every stride-th node; the position is still accumulated
// at every integrator step.
SimulatedPath simulate_path(const VelocityModel& model, double horizon, double step,
                            std::uint64_t seed, std::uint64_t role, std::uint64_t index,
                            double burn_in = 0.0,
                            const std::optional<VelocityState>& fixed_start = std::nullopt,
                            std::size_t stride = 1);

}  // namespace kbm
