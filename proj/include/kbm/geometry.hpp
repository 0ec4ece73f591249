#pragma once

#include "kbm/core.hpp"

#include <memory>
#include <string>
#include <vector>

// Manifold chart models, Christoffel symbols, horizontal lifts, and Cartan
// development of piecewise-C1 paths onto the frame bundle, including the
// time-dependent metric variant and the development of anisotropic Brownian
// motion used as the reference law for the homogenisation checks.

namespace kbm {

class ChartExitError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

// A point z = (q, e) of the frame bundle in chart coordinates; column j of
// `e` is the frame vector e_j. Frames are g-orthonormal up to the tracked
// defect.
struct Frame {
  Vec q;
  Mat e;
};

// Single-chart manifold model. Charts are global minus a polar set; leaving
// the domain raises ChartExitError rather than switching charts.
class ManifoldModel {
 public:
  virtual ~ManifoldModel() = default;

  virtual int dim() const = 0;
  virtual std::string name() const = 0;
  virtual bool time_dependent() const { return false; }
  virtual bool in_domain(const Vec& q) const { return true; }

  virtual Mat metric(double t, const Vec& q) const = 0;
  virtual Mat metric_time_derivative(double t, const Vec& q) const;

  // gamma[k](i, j) = Gamma^k_ij; symmetric in (i, j). The default evaluates
  // central finite differences of the metric with step 1e-5.
  virtual void christoffel(double t, const Vec& q, std::vector<Mat>& gamma) const;

  // Largest geodesic displacement the chart resolves around q; integrators
  // shrink their substeps below this near a chart's distorted region (the
  // stereographic chart far from its center). Infinite for uniform charts.
  virtual double chart_resolution(const Vec& q) const;

  // Optional global embedding for chart-independent comparisons.
  virtual bool has_embedding() const { return false; }
  virtual Eigen::Vector3d embed(const Vec& q) const;
};

// H_z(w): dq = e w, de_l^k = -Gamma^k_ij (e w)^i e^j_l.
struct FrameTangent {
  Vec dq;
  Mat de;
};
FrameTangent horizontal_lift(const ManifoldModel& m, double t, const Frame& z, const Vec& w);

// Metric Gram-Schmidt at (t, q).
void orthonormalize_frame(const ManifoldModel& m, double t, Frame& z);
// max_ij |g(e_i, e_j) - delta_ij|.
double frame_defect(const ManifoldModel& m, double t, const Frame& z);
// Identity frame orthonormalized against the metric at (t0, q0).
Frame default_frame(const ManifoldModel& m, double t0, const Vec& q0);

struct DevelopOptions {
  double step = 1e-3;              // max ODE substep
  double reortho_tolerance = 1e-10;  // re-orthonormalize when the defect exceeds this
  bool renormalize = true;
  double start_time = 0.0;  // metric clock offset (time-dependent models)
};

struct FramePath {
  std::vector<double> times;
  std::vector<Frame> frames;
  double max_defect = 0.0;  // largest defect seen before any re-orthonormalization
};

// RK4 integration of dz = H_z(dx) along the piecewise-linear driver; frames
// are re-orthonormalized when the defect crosses the tolerance. Frames are
// reported on the driver's grid.
FramePath develop(const ManifoldModel& m, const Frame& z0, const PathSample& x,
                  const DevelopOptions& opt = {});

// Same with the vertical correction -1/2 dg/dt(e_i, e_j) V^ij dt keeping the
// frame g_t-orthonormal under a time-dependent metric. Static metrics give
// output identical to develop().
FramePath develop_time_dependent(const ManifoldModel& m, const Frame& z0, const PathSample& x,
                                 const DevelopOptions& opt = {});

// Stratonovich-Heun development of a Brownian driver with covariance
// diag(gamma); the reference law for the homogenisation comparisons.
FramePath develop_brownian(const ManifoldModel& m, const Frame& z0, const Vec& gamma_diag,
                           double horizon, double step, RandomSource& rng);

// ---------------------------------------------------------------------------
// Built-in models

class EuclideanModel : public ManifoldModel {
 public:
  explicit EuclideanModel(int dim) : dim_(dim) {}
  int dim() const override { return dim_; }
  std::string name() const override { return "euclidean"; }
  Mat metric(double, const Vec&) const override { return Mat::Identity(dim_, dim_); }
  void christoffel(double, const Vec&, std::vector<Mat>& gamma) const override;

 private:
  int dim_;
};

// Round unit sphere in the stereographic chart: the chart center maps to the
// north pole of the embedding, metric 4/(1+|q|^2)^2 * Euclidean. The polar
// set is the single point at infinity (the south pole), so every finite
// coordinate is regular and Brownian developments never leave the chart.
// `orientation` rotates the embedding, for chart-independence checks.
class Sphere2Model : public ManifoldModel {
 public:
  explicit Sphere2Model(const Eigen::Matrix3d& orientation = Eigen::Matrix3d::Identity())
      : orientation_(orientation) {}

  int dim() const override { return 2; }
  std::string name() const override { return "sphere2"; }
  bool in_domain(const Vec& q) const override;
  Mat metric(double, const Vec& q) const override;
  void christoffel(double, const Vec& q, std::vector<Mat>& gamma) const override;
  double chart_resolution(const Vec& q) const override;
  bool has_embedding() const override { return true; }
  Eigen::Vector3d embed(const Vec& q) const override;

  // Chart coordinates of an embedded point / tangent vector, and the
  // pushforward of a chart vector into the embedding.
  Vec chart_point(const Eigen::Vector3d& p) const;
  Vec chart_tangent(const Vec& q, const Eigen::Vector3d& v) const;
  Eigen::Vector3d embed_tangent(const Vec& q, const Vec& u) const;

 private:
  Eigen::Matrix<double, 3, 2> embed_jacobian(const Vec& q) const;
  Eigen::Matrix3d orientation_;
};

double sphere_distance(const Sphere2Model& m, const Vec& q1, const Vec& q2);

// Poincare half-plane y > 0, metric (dx^2 + dy^2) / y^2.
class Hyperbolic2Model : public ManifoldModel {
 public:
  int dim() const override { return 2; }
  std::string name() const override { return "hyperbolic2"; }
  bool in_domain(const Vec& q) const override { return q[1] > 1e-12; }
  Mat metric(double, const Vec& q) const override;
  void christoffel(double, const Vec& q, std::vector<Mat>& gamma) const override;
};

enum class ConformalForm { kExponential, kLinear };

// Time-dependent conformally flat metric g_t = c(t)^2 * Euclidean with
// c(t) = c0 e^{rate t} or c0 + rate t. Spatially constant, so Gamma = 0 and
// the frame ODE has the closed-form solution e_t = e_0 c(0)/c(t).
class ConformalFlatModel : public ManifoldModel {
 public:
  ConformalFlatModel(int dim, double c0, double rate,
                     ConformalForm form = ConformalForm::kExponential);

  int dim() const override { return dim_; }
  std::string name() const override { return "conformal"; }
  bool time_dependent() const override { return true; }
  Mat metric(double t, const Vec&) const override;
  Mat metric_time_derivative(double t, const Vec&) const override;
  void christoffel(double, const Vec&, std::vector<Mat>& gamma) const override;

  double factor(double t) const;
  double factor_derivative(double t) const;

 private:
  int dim_;
  double c0_, rate_;
  ConformalForm form_;
};

std::unique_ptr<ManifoldModel> make_manifold(const std::string& id, int dim, double conformal_c0,
                                             double conformal_rate, const std::string& form);

}  // namespace kbm
