#include "kbm/core.hpp"
#include "kbm/roughpath.hpp"

#include <doctest.h>

#include <cmath>

using namespace kbm;

namespace {

Vec vec2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

PathSample random_path(int dim, int segments, RandomSource& rng) {
  PathSample p;
  p.times.push_back(0.0);
  p.points.push_back(Vec::Zero(dim));
  for (int s = 1; s <= segments; ++s) {
    p.times.push_back(p.times.back() + 0.5 + rng.uniform());
    Vec w(dim);
    rng.fill_normal(w);
    p.points.push_back(p.points.back() + w);
  }
  return p;
}

// Midpoint Riemann sum of int (x_u - x_s) (x) dx_u, aligned with segment
// boundaries: exact on linear pieces up to roundoff.
Mat riemann_second(const PathSample& p, int sub) {
  Mat acc = Mat::Zero(p.dim(), p.dim());
  for (std::size_t s = 0; s + 1 < p.size(); ++s)
    for (int k = 0; k < sub; ++k) {
      const double a = p.times[s] + (p.times[s + 1] - p.times[s]) * k / sub;
      const double b = p.times[s] + (p.times[s + 1] - p.times[s]) * (k + 1) / sub;
      acc.noalias() +=
          (0.5 * (p.at(a) + p.at(b)) - p.points.front()) * (p.at(b) - p.at(a)).transpose();
    }
  return acc;
}

// Signed area of the polygon closed by the chord, by the shoelace formula.
double shoelace(const PathSample& p) {
  double acc = 0.0;
  for (std::size_t k = 0; k + 1 < p.size(); ++k)
    acc += p.points[k][0] * p.points[k + 1][1] - p.points[k + 1][0] * p.points[k][1];
  acc += p.points.back()[0] * p.points.front()[1] - p.points.front()[0] * p.points.back()[1];
  return 0.5 * acc;
}

}  // namespace

TEST_SUITE_BEGIN("roughpath");

TEST_CASE("lift of a single segment") {
  Vec u(3);
  u << 0.4, -1.2, 2.0;
  PathSample p;
  p.times = {0.0, 1.0};
  p.points = {Vec::Zero(3), u};
  const LiftedPath lift = lift_piecewise_linear(p);
  CHECK(lift.cells.size() == 1);
  CHECK((lift.cumulative.delta - u).norm() == 0.0);
  CHECK((lift.cumulative.second - 0.5 * u * u.transpose()).norm() == 0.0);
  CHECK(levy_area(lift.cumulative).norm() == 0.0);  // straight segments have no area
}

TEST_CASE("planar L-shape encloses half a unit triangle") {
  PathSample p;
  p.times = {0.0, 1.0, 2.0};
  p.points = {vec2(0, 0), vec2(1, 0), vec2(1, 1)};
  const LiftedPath lift = lift_piecewise_linear(p);
  const Mat a = levy_area(lift.cumulative);
  CHECK(a(0, 1) == doctest::Approx(0.5));
  CHECK(a(0, 1) == doctest::Approx(shoelace(p)));
}

TEST_CASE("closed square loop has unit area with orientation sign") {
  PathSample ccw;
  ccw.times = {0, 1, 2, 3, 4};
  ccw.points = {vec2(0, 0), vec2(1, 0), vec2(1, 1), vec2(0, 1), vec2(0, 0)};
  const LiftedPath lift = lift_piecewise_linear(ccw);
  CHECK(lift.cumulative.delta.norm() == 0.0);
  CHECK(levy_area(lift.cumulative)(0, 1) == doctest::Approx(1.0));
  CHECK(shoelace(ccw) == doctest::Approx(1.0));

  PathSample cw = ccw;
  std::reverse(cw.points.begin(), cw.points.end());
  CHECK(levy_area(lift_piecewise_linear(cw).cumulative)(0, 1) == doctest::Approx(-1.0));
}

TEST_CASE("lift matches the Riemann oracle on random 5-segment paths") {
  RandomSource rng(77, 0);
  for (int rep = 0; rep < 20; ++rep) {
    const PathSample p = random_path(3, 5, rng);
    const LiftedPath lift = lift_piecewise_linear(p);
    const Mat oracle = riemann_second(p, 1499);
    CHECK((lift.cumulative.second - oracle).norm() <= 1e-12 * std::max(1.0, oracle.norm()));
    // geometric invariant Sym(second) = delta (x) delta / 2
    const Mat sym = 0.5 * (lift.cumulative.second + lift.cumulative.second.transpose());
    const Mat target = 0.5 * lift.cumulative.delta * lift.cumulative.delta.transpose();
    CHECK((sym - target).norm() <= 1e-13 * std::max(1.0, target.norm()));
  }
}

TEST_CASE("chen consistency over arbitrary partitions") {
  RandomSource rng(78, 0);
  for (int rep = 0; rep < 20; ++rep) {
    const PathSample p = random_path(4, 8, rng);
    const LiftedPath lift = lift_piecewise_linear(p);
    // fold the per-cell increments in a random bracketing
    RoughIncrement acc = RoughIncrement::zero(4);
    std::size_t k = 0;
    while (k < lift.cells.size()) {
      std::size_t take = 1 + static_cast<std::size_t>(rng.uniform() * 3);
      RoughIncrement group = RoughIncrement::zero(4);
      for (std::size_t j = 0; j < take && k < lift.cells.size(); ++j, ++k)
        group = chen_compose(group, lift.cells[k]);
      acc = chen_compose(acc, group);
    }
    CHECK((acc.delta - lift.cumulative.delta).norm() <= 1e-13);
    CHECK((acc.second - lift.cumulative.second).norm() <=
          1e-12 * std::max(1.0, lift.cumulative.second.norm()));
  }
}

TEST_CASE("flip equivariance negates a row and column") {
  RandomSource rng(79, 0);
  const PathSample p = random_path(3, 6, rng);
  for (int flip = 0; flip < 3; ++flip) {
    PathSample pf = p;
    for (auto& x : pf.points) x[flip] = -x[flip];
    const Mat s = lift_piecewise_linear(p).cumulative.second;
    const Mat sf = lift_piecewise_linear(pf).cumulative.second;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        const double sign = ((i == flip) != (j == flip)) ? -1.0 : 1.0;
        CHECK(sf(i, j) == sign * s(i, j));
      }
  }
}

TEST_CASE("levy area of a chen product") {
  RandomSource rng(80, 0);
  Vec w1(3), w2(3);
  rng.fill_normal(w1);
  rng.fill_normal(w2);
  RoughIncrement a = RoughIncrement::segment(w1);
  chen_append_segment(a, w2);
  Vec w3(3), w4(3);
  rng.fill_normal(w3);
  rng.fill_normal(w4);
  RoughIncrement b = RoughIncrement::segment(w3);
  chen_append_segment(b, w4);
  const Mat total = levy_area(chen_compose(a, b));
  const Mat expected = levy_area(a) + levy_area(b) +
                       0.5 * (a.delta * b.delta.transpose() - b.delta * a.delta.transpose());
  CHECK((total - expected).norm() <= 1e-14 * std::max(1.0, expected.norm()));
  CHECK((total + total.transpose()).norm() == 0.0);  // exact antisymmetry
}

TEST_CASE("moment scaling on a Brownian control ensemble is flat") {
  // piecewise-linear Brownian paths on a grid 2^-12, lifted exactly
  const int n_traj = 1500, level = 6, fine_per_cell = 64;
  const Vec gamma = vec2(1.0, 0.5);
  std::vector<DyadicLift> ens(n_traj);
  for (int i = 0; i < n_traj; ++i) {
    RandomSource rng(81, i);
    ens[i].finest_level = level;
    const double dt = std::ldexp(1.0, -level) / fine_per_cell;
    for (int cell = 0; cell < (1 << level); ++cell) {
      LiftAccumulator acc(2);
      Vec w(2);
      for (int k = 0; k < fine_per_cell; ++k) {
        rng.fill_normal(w);
        w.array() *= (gamma * dt).array().sqrt();
        acc.add_segment(w);
      }
      ens[i].cells.push_back(acc.total());
    }
  }
  const auto rep =
      moment_scaling_report({1.0}, {ens}, {2.0, 4.0}, 1);
  CHECK(rep.path_spread[0] <= 1.2);
  CHECK(rep.area_spread[0] <= 1.2);
  // fourth-power ratios are eighth-moment statistics; the coarsest scale has
  // only 2 cells per path, so allow for its Monte Carlo spread
  CHECK(rep.path_spread[1] <= 1.4);
  CHECK(rep.area_spread[1] <= 1.4);
  for (std::size_t ia = 0; ia < 2; ++ia) CHECK(rep.path_blowup[ia] <= 1.4);
  // lag-0 sanity: E|dX|^2 / dt = gamma_1 + gamma_2
  CHECK(rep.path_pooled[0][0][0] == doctest::Approx(gamma.sum()).epsilon(0.05));
}

TEST_CASE("moment scaling reads a deterministic path as sub-diffusive") {
  Vec u(2);
  u << 0.8, -0.6;
  std::vector<DyadicLift> ens(4);
  for (auto& lift : ens) {
    lift.finest_level = 6;
    for (int cell = 0; cell < 64; ++cell)
      lift.cells.push_back(RoughIncrement::segment(std::ldexp(1.0, -6) * u));
  }
  const auto rep = moment_scaling_report({1.0}, {ens}, {2.0}, 1);
  // E|dX|^2 / dt = |u|^2 dt decreases toward fine scales
  CHECK(rep.path_pooled[0][0][0] < rep.path_pooled[0][0].back());
  CHECK(rep.path_pooled[0][0].back() == doctest::Approx(0.5 * u.squaredNorm()));
  CHECK(rep.path_blowup[0] <= 1.0 + 1e-12);
  CHECK(rep.underpowered);  // 4 trajectories is far below the contract
}

TEST_SUITE_END();
