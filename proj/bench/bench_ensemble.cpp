// Compares the serial reference implementation (--workers 1) against the
// OpenMP kernels on the two hot paths: velocity ensembles with streaming
// lifts, and Brownian development on the sphere. Also checks that both
// produce bit-identical results, which the estimator contracts rely on.

#include "kbm/ensemble.hpp"
#include "kbm/geometry.hpp"
#include "kbm/stats.hpp"

#include <chrono>
#include <cstdio>

#ifdef _OPENMP
#include <omp.h>
#endif

using namespace kbm;
namespace chrono = std::chrono;

namespace {

double seconds(chrono::steady_clock::time_point t0) {
  return chrono::duration<double>(chrono::steady_clock::now() - t0).count();
}

Vec vec3(double a, double b, double c) {
  Vec v(3);
  v << a, b, c;
  return v;
}

}  // namespace

int main() {
#ifdef _OPENMP
  const int hw = omp_get_max_threads();
#else
  const int hw = 1;
#endif
  std::printf("workers available: %d\n\n", hw);

  {
    SphereDiffusion sphere(CovarianceSpec::from_variances(vec3(1, 4, 9)));
    EnsembleOptions opt;
    opt.n_traj = 256;
    opt.sigma = std::pow(16.0, 0.25);
    opt.step = 1e-3;
    opt.seed = 1;
    opt.want_lift = true;
    const double steps = 256.0 * 16.0 / 1e-3;

    opt.workers = 1;
    auto t0 = chrono::steady_clock::now();
    const auto serial = run_velocity_ensemble(sphere, opt);
    const double ts = seconds(t0);

    opt.workers = 0;
    t0 = chrono::steady_clock::now();
    const auto parallel = run_velocity_ensemble(sphere, opt);
    const double tp = seconds(t0);

    bool identical = true;
    for (std::size_t i = 0; i < serial.size(); ++i)
      identical = identical && (serial[i].x_end - parallel[i].x_end).norm() == 0.0 &&
                  (serial[i].lift.second - parallel[i].lift.second).norm() == 0.0;

    std::printf("sphere ensemble + streaming lift (%.0f steps)\n", steps);
    std::printf("  serial reference: %.3f s  (%.1f Msteps/s)\n", ts, steps / ts / 1e6);
    std::printf("  openmp kernels:   %.3f s  (%.1f Msteps/s)  speedup %.2fx\n", tp,
                steps / tp / 1e6, ts / tp);
    std::printf("  bit-identical:    %s\n\n", identical ? "yes" : "NO");
  }

  {
    Sphere2Model sphere;
    const Frame z0 = default_frame(sphere, 0.0, Vec::Zero(2));
    const Vec gamma = Vec::Constant(2, 2.0);
    const int n = 512;
    std::vector<double> out_serial(n), out_parallel(n);

    auto run = [&](int workers, std::vector<double>& out) {
      const auto t0 = chrono::steady_clock::now();
      parallel_for_indexed(n, workers, [&](std::size_t i) {
        RandomSource rng = RandomSource::derive(2, 0xBE, i);
        const FramePath fp = develop_brownian(sphere, z0, gamma, 1.0, 1e-3, rng);
        out[i] = sphere_distance(sphere, Vec::Zero(2), fp.frames.back().q);
      });
      return seconds(t0);
    };
    const double ts = run(1, out_serial);
    const double tp = run(0, out_parallel);
    bool identical = true;
    for (int i = 0; i < n; ++i) identical = identical && out_serial[i] == out_parallel[i];

    std::printf("brownian development on the sphere (%d paths x 1000 steps)\n", n);
    std::printf("  serial reference: %.3f s\n", ts);
    std::printf("  openmp kernels:   %.3f s  speedup %.2fx\n", tp, ts / tp);
    std::printf("  bit-identical:    %s\n", identical ? "yes" : "NO");
  }
  return 0;
}
