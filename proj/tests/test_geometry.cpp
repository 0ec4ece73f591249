#include "kbm/geometry.hpp"

#include <doctest.h>

#include <cmath>

using namespace kbm;

namespace {

Vec vec2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

PathSample line_driver(const Vec& w, double t_end, std::size_t nodes) {
  PathSample p;
  for (std::size_t k = 0; k < nodes; ++k) {
    const double t = t_end * static_cast<double>(k) / static_cast<double>(nodes - 1);
    p.times.push_back(t);
    p.points.push_back((t * w).eval());
  }
  return p;
}

PathSample wiggle(int dim, double scale, double t_end, std::size_t nodes) {
  PathSample p;
  for (std::size_t k = 0; k < nodes; ++k) {
    const double t = t_end * static_cast<double>(k) / static_cast<double>(nodes - 1);
    Vec x(dim);
    for (int i = 0; i < dim; ++i)
      x[i] = scale * ((i % 2 == 0) ? std::sin((i + 1) * t) : 1.0 - std::cos((i + 1) * t));
    p.times.push_back(t);
    p.points.push_back(x);
  }
  return p;
}

// Metric-only wrapper: forces the finite-difference Christoffel fallback.
class MetricOnlyHyperbolic : public ManifoldModel {
 public:
  int dim() const override { return 2; }
  std::string name() const override { return "fd-hyperbolic"; }
  bool in_domain(const Vec& q) const override { return q[1] > 1e-12; }
  Mat metric(double, const Vec& q) const override {
    return Mat::Identity(2, 2) / (q[1] * q[1]);
  }
};

}  // namespace

TEST_SUITE_BEGIN("geometry");

TEST_CASE("horizontal lift on euclidean space") {
  EuclideanModel euc(3);
  Frame z = default_frame(euc, 0.0, Vec::Zero(3));
  Vec w(3);
  w << 0.2, -0.7, 1.1;
  const FrameTangent ft = horizontal_lift(euc, 0.0, z, w);
  CHECK((ft.dq - w).norm() == 0.0);
  CHECK(ft.de.norm() == 0.0);
}

TEST_CASE("horizontal lift at the sphere chart origin") {
  // Gamma vanishes at the center of the stereographic chart
  Sphere2Model sphere;
  Frame z = default_frame(sphere, 0.0, Vec::Zero(2));
  Vec e1 = vec2(1, 0);
  const FrameTangent ft = horizontal_lift(sphere, 0.0, z, e1);
  CHECK(ft.de.norm() == 0.0);
  CHECK(ft.dq[0] == doctest::Approx(0.5));  // metric 4 at the origin, frames scaled by 1/2
  CHECK(ft.dq[1] == 0.0);
}

TEST_CASE("closed-form Christoffels match the finite-difference fallback") {
  Hyperbolic2Model closed;
  MetricOnlyHyperbolic fd;
  const Vec q = vec2(0.0, 1.0);
  std::vector<Mat> gc, gf;
  closed.christoffel(0.0, q, gc);
  fd.christoffel(0.0, q, gf);
  for (int k = 0; k < 2; ++k) {
    CHECK((gc[k] - gc[k].transpose()).norm() == 0.0);          // exact symmetry
    CHECK((gf[k] - gf[k].transpose()).norm() <= 1e-6);
    CHECK((gc[k] - gf[k]).cwiseAbs().maxCoeff() <= 1e-8);
  }

  // and the lifts agree
  Frame z = default_frame(closed, 0.0, q);
  const FrameTangent a = horizontal_lift(closed, 0.0, z, vec2(1, 0));
  const FrameTangent b = horizontal_lift(fd, 0.0, z, vec2(1, 0));
  CHECK((a.dq - b.dq).norm() <= 1e-10);
  CHECK((a.de - b.de).cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("develop on euclidean space is an affine map of the driver") {
  EuclideanModel euc(3);
  Vec q0(3);
  q0 << 1.0, -2.0, 0.5;
  Frame z0 = default_frame(euc, 0.0, q0);
  RandomSource rng(5, 0);
  PathSample x = wiggle(3, 0.8, 2.0, 101);
  DevelopOptions opt;
  opt.step = 1e-2;
  const FramePath fp = develop(euc, z0, x, opt);
  for (std::size_t k = 0; k < fp.times.size(); ++k) {
    const Vec expected = q0 + z0.e * (x.points[k] - x.points[0]);
    CHECK((fp.frames[k].q - expected).norm() <= 1e-12);
    CHECK((fp.frames[k].e - z0.e).norm() <= 1e-12);
  }
}

TEST_CASE("straight drivers develop to geodesics") {
  SUBCASE("great circle closes after 2 pi") {
    Sphere2Model sphere;
    Frame z0 = default_frame(sphere, 0.0, vec2(1.0, 0.0));
    Vec w = vec2(std::sin(0.3), std::cos(0.3));
    DevelopOptions opt;
    opt.step = 4e-3;
    const FramePath fp = develop(sphere, z0, line_driver(w, 2.0 * M_PI, 2), opt);
    CHECK((sphere.embed(fp.frames.back().q) - sphere.embed(vec2(1.0, 0.0))).norm() <= 1e-8);
    // embedded great-circle oracle at interior times
    DevelopOptions fine;
    fine.step = 1e-3;
    const FramePath fp2 = develop(sphere, z0, line_driver(w, 2.0, 21), fine);
    const Eigen::Vector3d n0 = sphere.embed(vec2(1.0, 0.0));
    Eigen::Vector3d t0 = sphere.embed_tangent(vec2(1.0, 0.0), (z0.e * w).eval());
    t0.normalize();
    for (std::size_t k = 0; k < fp2.times.size(); ++k) {
      const double t = fp2.times[k];
      const Eigen::Vector3d oracle = std::cos(t) * n0 + std::sin(t) * t0;
      CHECK((sphere.embed(fp2.frames[k].q) - oracle).norm() <= 1e-5);
    }
  }
  SUBCASE("half-plane geodesic matches (tanh t, sech t)") {
    Hyperbolic2Model hyp;
    Frame z0 = default_frame(hyp, 0.0, vec2(0.0, 1.0));
    DevelopOptions opt;
    opt.step = 1e-3;
    const FramePath fp = develop(hyp, z0, line_driver(vec2(1, 0), 3.0, 31), opt);
    for (std::size_t k = 0; k < fp.times.size(); ++k) {
      const double t = fp.times[k];
      CHECK(std::hypot(fp.frames[k].q[0] - std::tanh(t), fp.frames[k].q[1] - 1.0 / std::cosh(t)) <=
            1e-6);
    }
  }
}

TEST_CASE("chart exit is loud") {
  Hyperbolic2Model hyp;
  Frame z0 = default_frame(hyp, 0.0, vec2(0.0, 1.0));
  // straight down: y(t) = e^{-t} hits the numeric boundary around t = 28
  DevelopOptions opt;
  opt.step = 1e-2;
  CHECK_THROWS_AS(develop(hyp, z0, line_driver(vec2(0, -1), 40.0, 2), opt), ChartExitError);
}

TEST_CASE("time-dependent development") {
  SUBCASE("static metric: vertical correction is a no-op") {
    ConformalFlatModel constant(3, 2.0, 0.0);
    Frame z0 = default_frame(constant, 0.0, Vec::Zero(3));
    const PathSample x = wiggle(3, 0.5, 1.0, 101);
    DevelopOptions opt;
    opt.step = 1e-3;
    const FramePath a = develop(constant, z0, x, opt);
    const FramePath b = develop_time_dependent(constant, z0, x, opt);
    for (std::size_t k = 0; k < a.times.size(); ++k) {
      CHECK((a.frames[k].q - b.frames[k].q).norm() == 0.0);
      CHECK((a.frames[k].e - b.frames[k].e).norm() == 0.0);
    }
  }
  SUBCASE("conformal frame follows e0 c(0)/c(t)") {
    for (ConformalForm form : {ConformalForm::kExponential, ConformalForm::kLinear}) {
      ConformalFlatModel conf(2, 1.0, 0.4, form);
      Frame z0 = default_frame(conf, 0.0, Vec::Zero(2));
      const PathSample x = wiggle(2, 0.5, 1.0, 101);
      DevelopOptions opt;
      opt.step = 1e-3;
      opt.renormalize = false;
      const FramePath fp = develop_time_dependent(conf, z0, x, opt);
      for (std::size_t k = 0; k < fp.times.size(); ++k) {
        const Mat expected = z0.e * (conf.factor(0.0) / conf.factor(fp.times[k]));
        CHECK((fp.frames[k].e - expected).cwiseAbs().maxCoeff() <= 1e-8);
      }
      CHECK(fp.max_defect <= 1e-8);  // g_t-orthonormality maintained by the correction
    }
  }
  SUBCASE("base point integrates e0 w / c(t)") {
    ConformalFlatModel conf(2, 1.0, 0.3, ConformalForm::kExponential);
    Frame z0 = default_frame(conf, 0.0, Vec::Zero(2));
    const Vec w = vec2(0.7, -0.2);
    DevelopOptions opt;
    opt.step = 1e-3;
    const FramePath fp = develop_time_dependent(conf, z0, line_driver(w, 1.0, 11), opt);
    for (std::size_t k = 0; k < fp.times.size(); ++k) {
      const double t = fp.times[k];
      const Vec expected = ((1.0 - std::exp(-0.3 * t)) / 0.3 * (z0.e * w)).eval();
      CHECK((fp.frames[k].q - expected).norm() <= 1e-10);
    }
  }
}

TEST_CASE("frame integrity under a generic driver") {
  Sphere2Model sphere;
  Frame z0 = default_frame(sphere, 0.0, vec2(1.0, 0.0));
  DevelopOptions opt;
  opt.step = 1e-3;
  opt.renormalize = false;
  const FramePath fp = develop(sphere, z0, wiggle(2, 0.3, 1.0, 1001), opt);
  CHECK(fp.max_defect <= 1e-8);
}

TEST_CASE("chart independence across orientations") {
  const Vec q0 = vec2(0.8, -0.4);
  Sphere2Model plain;
  Eigen::Matrix3d rot =
      (Eigen::AngleAxisd(0.7, Eigen::Vector3d::UnitX()) *
       Eigen::AngleAxisd(-0.4, Eigen::Vector3d::UnitZ()))
          .toRotationMatrix();
  Sphere2Model rotated(rot);

  Frame z0 = default_frame(plain, 0.0, q0);
  // same initial data expressed in the rotated chart
  Frame z1;
  z1.q = rotated.chart_point(plain.embed(q0));
  z1.e.resize(2, 2);
  for (int j = 0; j < 2; ++j)
    z1.e.col(j) = rotated.chart_tangent(z1.q, plain.embed_tangent(q0, z0.e.col(j)));

  const PathSample x = wiggle(2, 0.4, 1.0, 201);
  DevelopOptions opt;
  opt.step = 1e-3;
  const FramePath a = develop(plain, z0, x, opt);
  const FramePath b = develop(rotated, z1, x, opt);
  for (std::size_t k = 0; k < a.times.size(); ++k)
    CHECK((plain.embed(a.frames[k].q) - rotated.embed(b.frames[k].q)).norm() <= 1e-8);
}

TEST_CASE("isometry equivariance: rotating the frame rotates the driver") {
  Sphere2Model sphere;
  const Vec q0 = vec2(0.3, 0.5);
  Frame z0 = default_frame(sphere, 0.0, q0);
  const double ang = 0.9;
  Mat rot(2, 2);
  rot << std::cos(ang), -std::sin(ang), std::sin(ang), std::cos(ang);
  Frame z1 = z0;
  z1.e = z0.e * rot;

  PathSample x = wiggle(2, 0.4, 1.0, 201);
  PathSample xr = x;
  for (auto& p : xr.points) p = (rot * p).eval();
  DevelopOptions opt;
  opt.step = 1e-3;
  const FramePath a = develop(sphere, z1, x, opt);
  const FramePath b = develop(sphere, z0, xr, opt);
  for (std::size_t k = 0; k < a.times.size(); ++k)
    CHECK((a.frames[k].q - b.frames[k].q).norm() <= 1e-10);
}

TEST_CASE("brownian development") {
  SUBCASE("euclidean brownian development is the driving noise") {
    EuclideanModel euc(2);
    Frame z0 = default_frame(euc, 0.0, Vec::Zero(2));
    RandomSource rng(42, 9);
    const Vec gamma = vec2(1.0, 4.0);
    const FramePath fp = develop_brownian(euc, z0, gamma, 1.0, 1e-3, rng);
    RandomSource replay(42, 9);
    Vec b = Vec::Zero(2), noise(2);
    for (int k = 0; k < 1000; ++k) {
      replay.fill_normal(noise);
      b.array() += noise.array() * (1e-3 * gamma.array()).sqrt();
    }
    CHECK((fp.frames.back().q - b).norm() <= 1e-12);
  }
  SUBCASE("sphere heat kernel: E cos(dist) = exp(-t) at unit covariance") {
    Sphere2Model sphere;
    Frame z0 = default_frame(sphere, 0.0, Vec::Zero(2));
    const double t = 0.5;
    const int n = 3000;
    double acc = 0.0, acc2 = 0.0;
    for (int i = 0; i < n; ++i) {
      RandomSource rng(777, i);
      const FramePath fp = develop_brownian(sphere, z0, Vec::Constant(2, 1.0), t, 1e-3, rng);
      const double c = std::cos(sphere_distance(sphere, Vec::Zero(2), fp.frames.back().q));
      acc += c;
      acc2 += c * c;
    }
    const double mean = acc / n;
    const double se = std::sqrt((acc2 / n - mean * mean) / n);
    CHECK(std::abs(mean - std::exp(-t)) <= 4.0 * se + 0.005);
  }
  SUBCASE("small-time chart covariance is t gamma / metric scale") {
    Sphere2Model sphere;
    Frame z0 = default_frame(sphere, 0.0, Vec::Zero(2));
    const Vec gamma = vec2(2.0, 0.5);
    const double t = 0.01;
    const int n = 4000;
    Vec m2 = Vec::Zero(2);
    for (int i = 0; i < n; ++i) {
      RandomSource rng(778, i);
      const FramePath fp = develop_brownian(sphere, z0, gamma, t, 1e-3, rng);
      m2.array() += fp.frames.back().q.array().square();
    }
    m2 /= n;
    // frames at the chart center scale by 1/2, so Var(q_i) ~ t gamma_i / 4
    for (int i = 0; i < 2; ++i)
      CHECK(m2[i] == doctest::Approx(t * gamma[i] / 4.0).epsilon(0.1));
  }
}

TEST_CASE("manifold factory") {
  CHECK(make_manifold("euclidean", 5, 1, 0, "exp")->dim() == 5);
  CHECK(make_manifold("sphere2", 2, 1, 0, "exp")->has_embedding());
  CHECK_THROWS_AS(make_manifold("torus", 2, 1, 0, "exp"), ConfigError);
  CHECK_THROWS_AS(make_manifold("conformal", 2, 1, 0, "wiggly"), ConfigError);
  CHECK_THROWS_AS(ConformalFlatModel(2, -1.0, 0.1), ConfigError);
  // linear form turning negative is a loud failure at evaluation time
  ConformalFlatModel shrinking(2, 1.0, -2.0, ConformalForm::kLinear);
  CHECK_THROWS_AS(shrinking.factor(1.0), ChartExitError);
}

TEST_SUITE_END();
