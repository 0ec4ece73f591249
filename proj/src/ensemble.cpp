#include "kbm/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <mutex>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace kbm {

void parallel_for_indexed(std::size_t n, int workers, const std::function<void(std::size_t)>& body) {
#ifdef _OPENMP
  if (workers != 1) {
    const int threads = workers > 0 ? workers : omp_get_max_threads();
    std::exception_ptr error;
    std::mutex error_mutex;
#pragma omp parallel for schedule(dynamic) num_threads(threads)
    for (long long i = 0; i < static_cast<long long>(n); ++i) {
      try {
        body(static_cast<std::size_t>(i));
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
    if (error) std::rethrow_exception(error);
    return;
  }
#else
  (void)workers;
#endif
  for (std::size_t i = 0; i < n; ++i) body(i);
}

namespace {

// Event grid in physical time: checkpoints, dyadic cell boundaries, horizon.
struct Event {
  double t_phys;
  int checkpoint = -1;  // index into opt.checkpoints
  bool cell_boundary = false;
};

std::vector<Event> build_events(const EnsembleOptions& opt, double s4) {
  std::vector<Event> events;
  const double T = s4 * opt.horizon;
  for (std::size_t c = 0; c < opt.checkpoints.size(); ++c) {
    const double tc = opt.checkpoints[c] * s4;
    if (tc < -1e-12 || tc > T * (1.0 + 1e-12))
      throw ConfigError("ensemble: checkpoint outside [0, horizon]");
    events.push_back({std::min(tc, T), static_cast<int>(c), false});
  }
  if (opt.dyadic_level > 0) {
    const std::size_t cells = std::size_t{1} << opt.dyadic_level;
    for (std::size_t j = 1; j <= cells; ++j)
      events.push_back({T * static_cast<double>(j) / cells, -1, true});
  }
  events.push_back({T, -1, false});
  std::sort(events.begin(), events.end(),
            [](const Event& a, const Event& b) { return a.t_phys < b.t_phys; });
  // merge events at (numerically) the same time
  std::vector<Event> merged;
  for (const auto& e : events) {
    if (!merged.empty() && std::abs(e.t_phys - merged.back().t_phys) <= 1e-9 * std::max(1.0, T)) {
      if (e.checkpoint >= 0) merged.push_back({merged.back().t_phys, e.checkpoint, false});
      else merged.back().cell_boundary |= e.cell_boundary;
    } else {
      merged.push_back(e);
    }
  }
  return merged;
}

TrajectoryResult run_one(const VelocityModel& model, const EnsembleOptions& opt,
                         std::uint64_t index, double h0) {
  RandomSource rng = RandomSource::derive(opt.seed, opt.role, index);
  VelocityState state = opt.fixed_start ? *opt.fixed_start : model.sample_stationary(rng);

  if (opt.burn_in > 0.0) {
    const std::size_t n = static_cast<std::size_t>(std::ceil(opt.burn_in / h0 - 1e-9));
    const double h = opt.burn_in / static_cast<double>(std::max<std::size_t>(n, 1));
    for (std::size_t k = 0; k < std::max<std::size_t>(n, 1); ++k) model.step(state, h, rng);
  }

  const int d = model.dim();
  const double s4 = std::pow(opt.sigma, 4);
  const double inv_s2 = 1.0 / (opt.sigma * opt.sigma);
  const auto events = build_events(opt, s4);

  TrajectoryResult res;
  res.at_checkpoints.assign(opt.checkpoints.size(), Vec::Zero(d));
  LiftAccumulator lift(d);
  if (opt.dyadic_level > 0) {
    res.dyadic.finest_level = opt.dyadic_level;
    res.dyadic.cells.reserve(std::size_t{1} << opt.dyadic_level);
  }
  LiftAccumulator cell(d);

  Vec x = Vec::Zero(d);  // physical position
  Vec v0 = model.read(state);
  Vec v1(d), w(d);
  double t = 0.0;
  for (const auto& ev : events) {
    if (ev.t_phys > t + 1e-15) {
      const std::size_t n = static_cast<std::size_t>(std::ceil((ev.t_phys - t) / h0 - 1e-9));
      const double h = (ev.t_phys - t) / static_cast<double>(std::max<std::size_t>(n, 1));
      for (std::size_t k = 0; k < std::max<std::size_t>(n, 1); ++k) {
        model.step(state, h, rng);
        v1 = model.read(state);
        w = (0.5 * h * inv_s2) * (v0 + v1);  // rescaled linear segment
        x.noalias() += (0.5 * h) * (v0 + v1);
        if (opt.want_lift) lift.add_segment(w);
        if (opt.dyadic_level > 0) cell.add_segment(w);
        v0.swap(v1);
      }
      t = ev.t_phys;
    }
    if (ev.checkpoint >= 0) res.at_checkpoints[ev.checkpoint] = inv_s2 * x;
    if (ev.cell_boundary) {
      res.dyadic.cells.push_back(cell.total());
      cell.reset();
    }
  }
  res.x_end = inv_s2 * x;
  if (opt.want_lift) res.lift = lift.total();
  return res;
}

}  // namespace

TrajectoryResult simulate_trajectory(const VelocityModel& model, const EnsembleOptions& opt,
                                     std::uint64_t index) {
  double h = opt.step > 0.0 ? opt.step : model.default_step();
  // Halve the step and replay the trajectory's stream if the integrator
  // signals a blow-up; deterministic since the stream restarts identically.
  for (int attempt = 0;; ++attempt) {
    try {
      return run_one(model, opt, index, h);
    } catch (const NumericalError&) {
      if (attempt >= 3) throw;
      h *= 0.5;
    }
  }
}

std::vector<TrajectoryResult> run_velocity_ensemble(const VelocityModel& model,
                                                    const EnsembleOptions& opt) {
  if (opt.n_traj <= 0) throw ConfigError("ensemble: trajectory count must be positive");
  if (!(opt.sigma > 0.0) || !(opt.horizon > 0.0)) throw ConfigError("ensemble: bad sigma/horizon");
  std::vector<TrajectoryResult> results(opt.n_traj);
  parallel_for_indexed(static_cast<std::size_t>(opt.n_traj), opt.workers,
                       [&](std::size_t i) { results[i] = simulate_trajectory(model, opt, i); });
  return results;
}

SimulatedPath simulate_path(const VelocityModel& model, double horizon, double step,
                            std::uint64_t seed, std::uint64_t role, std::uint64_t index,
                            double burn_in, const std::optional<VelocityState>& fixed_start,
                            std::size_t stride) {
  if (!(horizon > 0.0) || !(step > 0.0)) throw ConfigError("simulate_path: bad horizon/step");
  if (stride < 1) throw ConfigError("simulate_path: stride must be at least 1");
  RandomSource rng = RandomSource::derive(seed, role, index);
  VelocityState state = fixed_start ? *fixed_start : model.sample_stationary(rng);
  if (burn_in > 0.0) {
    const std::size_t n = static_cast<std::size_t>(std::ceil(burn_in / step - 1e-9));
    for (std::size_t k = 0; k < std::max<std::size_t>(n, 1); ++k)
      model.step(state, burn_in / std::max<std::size_t>(n, 1), rng);
  }
  std::size_t n = static_cast<std::size_t>(std::ceil(horizon / step - 1e-9));
  n = ((n + stride - 1) / stride) * stride;  // whole strides so the end node lands on the grid
  const double h = horizon / static_cast<double>(std::max<std::size_t>(n, 1));
  SimulatedPath out;
  out.position.times.reserve(n / stride + 1);
  out.position.points.reserve(n / stride + 1);
  out.velocities.reserve(n / stride + 1);
  Vec x = Vec::Zero(model.dim());
  Vec v0 = model.read(state);
  out.position.times.push_back(0.0);
  out.position.points.push_back(x);
  out.velocities.push_back(v0);
  for (std::size_t k = 1; k <= n; ++k) {
    model.step(state, h, rng);
    Vec v1 = model.read(state);
    x.noalias() += (0.5 * h) * (v0 + v1);
    if (k % stride == 0) {
      out.position.times.push_back(h * static_cast<double>(k));
      out.position.points.push_back(x);
      out.velocities.push_back(v1);
    }
    v0.swap(v1);
  }
  return out;
}

}  // namespace kbm
