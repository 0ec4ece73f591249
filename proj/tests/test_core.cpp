#include "kbm/core.hpp"

#include <doctest.h>

#include <cmath>

using namespace kbm;

namespace {

Vec vec2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

// Midpoint Riemann sum of int (x_u - x_s) (x) dx_u on a piecewise-linear
// path; exact per aligned subinterval, so a true independent oracle.
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

}  // namespace

TEST_SUITE_BEGIN("core");

TEST_CASE("chen identity element") {
  RandomSource rng(7, 0);
  Vec w(3);
  rng.fill_normal(w);
  const RoughIncrement b = RoughIncrement::segment(w);
  const RoughIncrement out = chen_compose(RoughIncrement::zero(3), b);
  CHECK((out.delta - b.delta).norm() == 0.0);
  CHECK((out.second - b.second).norm() == 0.0);
}

TEST_CASE("chen of two axis segments") {
  // segment along e1 by 1, then along e2 by 1
  const RoughIncrement a = RoughIncrement::segment(vec2(1, 0));
  const RoughIncrement b = RoughIncrement::segment(vec2(0, 1));
  const RoughIncrement c = chen_compose(a, b);
  CHECK(c.delta[0] == doctest::Approx(1.0));
  CHECK(c.delta[1] == doctest::Approx(1.0));
  CHECK(c.second(0, 0) == doctest::Approx(0.5));
  CHECK(c.second(0, 1) == doctest::Approx(1.0));
  CHECK(c.second(1, 0) == doctest::Approx(0.0));
  CHECK(c.second(1, 1) == doctest::Approx(0.5));

  // cross-check against the Riemann oracle on the explicit L-shaped path
  PathSample p;
  p.times = {0.0, 1.0, 2.0};
  p.points = {vec2(0, 0), vec2(1, 0), vec2(1, 1)};
  const Mat oracle = riemann_second(p, 2000);
  CHECK((c.second - oracle).norm() <= 1e-12 * oracle.norm());
}

TEST_CASE("chen doubles a linear segment") {
  Vec u(3);
  u << 0.3, -0.2, 0.9;
  const double t = 1.7;
  const RoughIncrement a = RoughIncrement::segment(t * u);
  const RoughIncrement d = chen_compose(a, a);
  CHECK((d.delta - 2.0 * t * u).norm() <= 1e-15);
  const Mat expected = 2.0 * t * t * (u * u.transpose());
  CHECK((d.second - expected).norm() <= 1e-14 * expected.norm());
}

TEST_CASE("chen associativity and inverse on random increments") {
  RandomSource rng(42, 1);
  for (int rep = 0; rep < 50; ++rep) {
    const int d = 2 + static_cast<int>(rng.uniform() * 5);
    auto random_inc = [&] {
      Vec w(d);
      rng.fill_normal(w);
      RoughIncrement r = RoughIncrement::segment(w);
      Vec w2(d);
      rng.fill_normal(w2);
      chen_append_segment(r, w2);
      return r;
    };
    const RoughIncrement a = random_inc(), b = random_inc(), c = random_inc();
    const RoughIncrement left = chen_compose(chen_compose(a, b), c);
    const RoughIncrement right = chen_compose(a, chen_compose(b, c));
    CHECK((left.second - right.second).norm() <= 1e-12 * std::max(1.0, right.second.norm()));
    CHECK((left.delta - right.delta).norm() <= 1e-12 * std::max(1.0, right.delta.norm()));

    const RoughIncrement unit = chen_compose(a, a.inverse());
    CHECK(unit.delta.norm() <= 1e-12);
    CHECK(unit.second.norm() <= 1e-12 * std::max(1.0, a.second.norm()));
  }
}

TEST_CASE("chen rejects dimension mismatch") {
  CHECK_THROWS_AS(chen_compose(RoughIncrement::zero(2), RoughIncrement::zero(3)), ConfigError);
}

TEST_CASE("rescale at sigma=1 is the identity up to resampling") {
  PathSample p;
  RandomSource rng(3, 9);
  p.times = {0.0, 0.25, 0.5, 0.75, 1.0};
  Vec x = Vec::Zero(2);
  for (std::size_t k = 0; k < p.times.size(); ++k) {
    p.points.push_back(x);
    Vec w(2);
    rng.fill_normal(w);
    x += 0.25 * w;
  }
  const PathSample q = rescale_to_sigma(p, 1.0, 1.0, 5);
  for (std::size_t k = 0; k < q.size(); ++k)
    CHECK((q.points[k] - (p.at(q.times[k]) - p.points[0])).norm() <= 1e-15);
}

TEST_CASE("rescale of a linear path") {
  // x_t = t u at sigma = 2 becomes X_t = 4 t u
  Vec u(3);
  u << 1.0, -2.0, 0.5;
  u /= u.norm();
  PathSample p;
  for (int k = 0; k <= 64; ++k) {
    p.times.push_back(k * 0.5);
    p.points.push_back(k * 0.5 * u);
  }
  const PathSample q = rescale_to_sigma(p, 2.0, 2.0, 9);
  for (std::size_t k = 0; k < q.size(); ++k)
    CHECK((q.points[k] - 4.0 * q.times[k] * u).norm() <= 1e-12);

  SUBCASE("constant path rescales to zero") {
    PathSample c;
    c.times = {0.0, 16.0};
    c.points = {u, u};
    const PathSample z = rescale_to_sigma(c, 2.0, 1.0, 4);
    for (const auto& pt : z.points) CHECK(pt.norm() <= 1e-15);
  }

  SUBCASE("insufficient horizon is an error") {
    CHECK_THROWS_AS(rescale_to_sigma(p, 2.0, 3.0, 9), ConfigError);
  }
}

TEST_CASE("random source determinism and stream separation") {
  RandomSource a(1234, 7), b(1234, 7), c(1234, 8);
  bool all_equal = true, any_equal_across = false;
  for (int k = 0; k < 1000; ++k) {
    const double xa = a.normal(), xb = b.normal(), xc = c.normal();
    all_equal = all_equal && xa == xb;
    any_equal_across = any_equal_across || xa == xc;
  }
  CHECK(all_equal);
  CHECK_FALSE(any_equal_across);
}

TEST_CASE("path validation") {
  PathSample p;
  p.times = {0.0, 0.0};
  p.points = {Vec::Zero(2), Vec::Zero(2)};
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p.times = {0.0, 1.0};
  p.points.pop_back();
  CHECK_THROWS_AS(p.validate(), ConfigError);
}

TEST_SUITE_END();
