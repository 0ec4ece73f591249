#include "kbm/geometry.hpp"

#include <cmath>
#include <limits>

namespace kbm {

Mat ManifoldModel::metric_time_derivative(double, const Vec&) const {
  return Mat::Zero(dim(), dim());
}

Eigen::Vector3d ManifoldModel::embed(const Vec&) const {
  throw ConfigError(name() + ": no embedding available");
}

double ManifoldModel::chart_resolution(const Vec&) const {
  return std::numeric_limits<double>::infinity();
}

void ManifoldModel::christoffel(double t, const Vec& q, std::vector<Mat>& gamma) const {
  // Central finite differences of the metric, step 1e-5.
  const int d = dim();
  const double h = 1e-5;
  gamma.assign(d, Mat::Zero(d, d));
  std::vector<Mat> dg(d);  // dg[l](i,j) = d g_ij / d q^l
  Vec qp = q, qm = q;
  for (int l = 0; l < d; ++l) {
    qp[l] = q[l] + h;
    qm[l] = q[l] - h;
    dg[l] = (metric(t, qp) - metric(t, qm)) / (2.0 * h);
    qp[l] = q[l];
    qm[l] = q[l];
  }
  const Mat ginv = metric(t, q).inverse();
  for (int k = 0; k < d; ++k)
    for (int i = 0; i < d; ++i)
      for (int j = i; j < d; ++j) {
        double acc = 0.0;
        for (int l = 0; l < d; ++l)
          acc += ginv(k, l) * (dg[i](j, l) + dg[j](i, l) - dg[l](i, j));
        gamma[k](i, j) = gamma[k](j, i) = 0.5 * acc;
      }
}

// ---------------------------------------------------------------------------
// Built-in models

void EuclideanModel::christoffel(double, const Vec&, std::vector<Mat>& gamma) const {
  gamma.assign(dim_, Mat::Zero(dim_, dim_));
}

bool Sphere2Model::in_domain(const Vec& q) const {
  return q.allFinite() && q.squaredNorm() < 1e24;
}

double Sphere2Model::chart_resolution(const Vec& q) const {
  // Distance to the polar point is ~ 2/|q| far from the center. The floor
  // stops refinement below a geodesic depth of ~1e-6: position error there
  // is of the size of the region itself, and planar Brownian motion visits
  // every depth with only log-suppressed probability, so some floor is
  // required for bounded cost.
  return 0.3 * std::max(std::min(1.0, 2.0 / q.norm()), 1e-6);
}

Mat Sphere2Model::metric(double, const Vec& q) const {
  const double s = 1.0 + q.squaredNorm();
  return (4.0 / (s * s)) * Mat::Identity(2, 2);
}

void Sphere2Model::christoffel(double, const Vec& q, std::vector<Mat>& gamma) const {
  // Conformal metric e^{2 phi} delta with phi = log 2 - log(1 + |q|^2):
  // Gamma^k_ij = d_i phi delta^k_j + d_j phi delta^k_i - d_k phi delta_ij.
  gamma.assign(2, Mat::Zero(2, 2));
  const double s = 1.0 + q.squaredNorm();
  const double d0 = -2.0 * q[0] / s, d1 = -2.0 * q[1] / s;
  gamma[0](0, 0) = d0;
  gamma[0](0, 1) = gamma[0](1, 0) = d1;
  gamma[0](1, 1) = -d0;
  gamma[1](0, 0) = -d1;
  gamma[1](0, 1) = gamma[1](1, 0) = d0;
  gamma[1](1, 1) = d1;
}

Eigen::Vector3d Sphere2Model::embed(const Vec& q) const {
  const double s = 1.0 + q.squaredNorm();
  return orientation_ * Eigen::Vector3d(2.0 * q[0] / s, 2.0 * q[1] / s, 2.0 / s - 1.0);
}

Vec Sphere2Model::chart_point(const Eigen::Vector3d& p) const {
  const Eigen::Vector3d n = (orientation_.transpose() * p).normalized();
  if (n.z() < -1.0 + 1e-12)
    throw ChartExitError("sphere2: point is the chart's polar point");
  Vec q(2);
  q[0] = n.x() / (1.0 + n.z());
  q[1] = n.y() / (1.0 + n.z());
  return q;
}

Eigen::Matrix<double, 3, 2> Sphere2Model::embed_jacobian(const Vec& q) const {
  const double s = 1.0 + q.squaredNorm();
  const double s2 = s * s;
  Eigen::Matrix<double, 3, 2> jac;
  jac.col(0) = orientation_ * Eigen::Vector3d(2.0 / s - 4.0 * q[0] * q[0] / s2,
                                              -4.0 * q[0] * q[1] / s2, -4.0 * q[0] / s2);
  jac.col(1) = orientation_ * Eigen::Vector3d(-4.0 * q[0] * q[1] / s2,
                                              2.0 / s - 4.0 * q[1] * q[1] / s2,
                                              -4.0 * q[1] / s2);
  return jac;
}

Vec Sphere2Model::chart_tangent(const Vec& q, const Eigen::Vector3d& v) const {
  // Solve J u = v in the least-squares sense (exact for tangent v),
  // using J^T J = metric.
  const Eigen::Matrix<double, 3, 2> jac = embed_jacobian(q);
  Eigen::Vector2d u = (jac.transpose() * jac).inverse() * (jac.transpose() * v);
  Vec out(2);
  out[0] = u[0];
  out[1] = u[1];
  return out;
}

Eigen::Vector3d Sphere2Model::embed_tangent(const Vec& q, const Vec& u) const {
  return embed_jacobian(q) * Eigen::Vector2d(u[0], u[1]);
}

double sphere_distance(const Sphere2Model& m, const Vec& q1, const Vec& q2) {
  return std::acos(std::clamp(m.embed(q1).dot(m.embed(q2)), -1.0, 1.0));
}

Mat Hyperbolic2Model::metric(double, const Vec& q) const {
  return Mat::Identity(2, 2) / (q[1] * q[1]);
}

void Hyperbolic2Model::christoffel(double, const Vec& q, std::vector<Mat>& gamma) const {
  gamma.assign(2, Mat::Zero(2, 2));
  const double iy = 1.0 / q[1];
  gamma[0](0, 1) = gamma[0](1, 0) = -iy;  // Gamma^x_xy
  gamma[1](0, 0) = iy;                    // Gamma^y_xx
  gamma[1](1, 1) = -iy;                   // Gamma^y_yy
}

ConformalFlatModel::ConformalFlatModel(int dim, double c0, double rate, ConformalForm form)
    : dim_(dim), c0_(c0), rate_(rate), form_(form) {
  if (!(c0 > 0.0)) throw ConfigError("ConformalFlatModel: c0 must be positive");
}

double ConformalFlatModel::factor(double t) const {
  const double c = form_ == ConformalForm::kExponential ? c0_ * std::exp(rate_ * t) : c0_ + rate_ * t;
  if (!(c > 0.0)) throw ChartExitError("ConformalFlatModel: conformal factor not positive at t=" +
                                       std::to_string(t));
  return c;
}

double ConformalFlatModel::factor_derivative(double t) const {
  return form_ == ConformalForm::kExponential ? rate_ * factor(t) : rate_;
}

Mat ConformalFlatModel::metric(double t, const Vec&) const {
  const double c = factor(t);
  return (c * c) * Mat::Identity(dim_, dim_);
}

Mat ConformalFlatModel::metric_time_derivative(double t, const Vec&) const {
  return (2.0 * factor(t) * factor_derivative(t)) * Mat::Identity(dim_, dim_);
}

void ConformalFlatModel::christoffel(double, const Vec&, std::vector<Mat>& gamma) const {
  gamma.assign(dim_, Mat::Zero(dim_, dim_));  // spatially constant metric
}

// ---------------------------------------------------------------------------
// Frame operations

FrameTangent horizontal_lift(const ManifoldModel& m, double t, const Frame& z, const Vec& w) {
  if (!m.in_domain(z.q))
    throw ChartExitError(m.name() + ": point left the chart domain");
  const int d = m.dim();
  std::vector<Mat> gamma;
  m.christoffel(t, z.q, gamma);
  FrameTangent out;
  out.dq = z.e * w;
  Mat b(d, d);  // b(k, j) = Gamma^k_ij dq^i
  for (int k = 0; k < d; ++k)
    for (int j = 0; j < d; ++j) b(k, j) = gamma[k].col(j).dot(out.dq);
  out.de = -(b * z.e);
  return out;
}

double frame_defect(const ManifoldModel& m, double t, const Frame& z) {
  const Mat gram = z.e.transpose() * m.metric(t, z.q) * z.e;
  return (gram - Mat::Identity(m.dim(), m.dim())).cwiseAbs().maxCoeff();
}

void orthonormalize_frame(const ManifoldModel& m, double t, Frame& z) {
  const Mat g = m.metric(t, z.q);
  const int d = m.dim();
  for (int j = 0; j < d; ++j) {
    for (int k = 0; k < j; ++k) {
      const double proj = z.e.col(j).transpose() * g * z.e.col(k);
      z.e.col(j) -= proj * z.e.col(k);
    }
    const double norm = std::sqrt(z.e.col(j).transpose() * g * z.e.col(j));
    if (!(norm > 0.0)) throw NumericalError("orthonormalize_frame: degenerate frame");
    z.e.col(j) /= norm;
  }
}

Frame default_frame(const ManifoldModel& m, double t0, const Vec& q0) {
  Frame z{q0, Mat::Identity(m.dim(), m.dim())};
  orthonormalize_frame(m, t0, z);
  return z;
}

// ---------------------------------------------------------------------------
// Development

namespace {

struct DerivWorkspace {
  std::vector<Mat> gamma;
  Mat b;
};

// dz = H_z(u) dt [- 1/2 dg/dt(e_i,e_j) V^ij dt], with u the chart velocity.
void frame_derivative(const ManifoldModel& m, bool vertical, double t, const Frame& z,
                      const Vec& u, Frame& out, DerivWorkspace& ws) {
  if (!m.in_domain(z.q))
    throw ChartExitError(m.name() + ": trajectory left the chart domain at t=" + std::to_string(t));
  const int d = m.dim();
  m.christoffel(t, z.q, ws.gamma);
  out.q = z.e * u;
  ws.b.resize(d, d);
  for (int k = 0; k < d; ++k)
    for (int j = 0; j < d; ++j) ws.b(k, j) = ws.gamma[k].col(j).dot(out.q);
  out.e = -(ws.b * z.e);
  if (vertical) {
    const Mat gdot = m.metric_time_derivative(t, z.q);
    const Mat mij = z.e.transpose() * gdot * z.e;  // dg/dt(e_i, e_j)
    out.e.noalias() -= 0.5 * z.e * mij;            // column i -= 1/2 sum_j M_ij e_j
  }
}

// Caps a proposed displacement at half the coordinate scale: inactive for
// resolved substeps, it stops overshoot from compounding on the rare
// unresolved ones (stage values past the trust radius grow superlinearly
// in a distorted chart region).
void apply_trust_region(const Frame& z, Vec& dq, Mat& de) {
  const double radius = 0.5 * (1.0 + z.q.norm());
  const double len = dq.norm();
  if (len > radius) {
    const double s = radius / len;
    dq *= s;
    de *= s;
  }
}

void rk4_step(const ManifoldModel& m, bool vertical, double t, double dt, Frame& z, const Vec& u,
              DerivWorkspace& ws) {
  Frame k1, k2, k3, k4, tmp;
  frame_derivative(m, vertical, t, z, u, k1, ws);
  tmp.q = z.q + 0.5 * dt * k1.q;
  tmp.e = z.e + 0.5 * dt * k1.e;
  frame_derivative(m, vertical, t + 0.5 * dt, tmp, u, k2, ws);
  tmp.q = z.q + 0.5 * dt * k2.q;
  tmp.e = z.e + 0.5 * dt * k2.e;
  frame_derivative(m, vertical, t + 0.5 * dt, tmp, u, k3, ws);
  tmp.q = z.q + dt * k3.q;
  tmp.e = z.e + dt * k3.e;
  frame_derivative(m, vertical, t + dt, tmp, u, k4, ws);
  Vec dq = (dt / 6.0) * (k1.q + 2.0 * k2.q + 2.0 * k3.q + k4.q);
  Mat de = (dt / 6.0) * (k1.e + 2.0 * k2.e + 2.0 * k3.e + k4.e);
  apply_trust_region(z, dq, de);
  z.q += dq;
  z.e += de;
}

FramePath develop_impl(const ManifoldModel& m, bool vertical, const Frame& z0, const PathSample& x,
                       const DevelopOptions& opt) {
  x.validate();
  if (x.dim() != m.dim()) throw ConfigError("develop: driver dimension mismatch");
  if (!(opt.step > 0.0)) throw ConfigError("develop: step must be positive");
  FramePath out;
  out.times = x.times;
  out.frames.reserve(x.size());
  Frame z = z0;
  out.frames.push_back(z);
  DerivWorkspace ws;
  Vec u(m.dim());
  for (std::size_t seg = 0; seg + 1 < x.size(); ++seg) {
    const double dt_seg = x.times[seg + 1] - x.times[seg];
    u = (x.points[seg + 1] - x.points[seg]) / dt_seg;
    const double speed = u.norm();  // geodesic speed of the development
    double done = 0.0;
    while (done < dt_seg * (1.0 - 1e-12)) {
      // shrink the substep where the chart distorts; the cost per depth
      // scale is bounded since the driver crosses a scale-rho region in
      // time ~ rho / speed
      double dt = std::min(opt.step, dt_seg - done);
      if (speed > 0.0) dt = std::min(dt, m.chart_resolution(z.q) / speed);
      if (!(dt > 0.0)) throw NumericalError(m.name() + ": development substep underflow");
      const double t = opt.start_time + x.times[seg] + done;
      rk4_step(m, vertical, t, dt, z, u, ws);
      done += dt;
      const double defect = frame_defect(m, t + dt, z);
      out.max_defect = std::max(out.max_defect, defect);
      if (opt.renormalize && defect > opt.reortho_tolerance)
        orthonormalize_frame(m, t + dt, z);
    }
    out.frames.push_back(z);
  }
  return out;
}

}  // namespace

FramePath develop(const ManifoldModel& m, const Frame& z0, const PathSample& x,
                  const DevelopOptions& opt) {
  return develop_impl(m, false, z0, x, opt);
}

FramePath develop_time_dependent(const ManifoldModel& m, const Frame& z0, const PathSample& x,
                                 const DevelopOptions& opt) {
  return develop_impl(m, true, z0, x, opt);
}

FramePath develop_brownian(const ManifoldModel& m, const Frame& z0, const Vec& gamma_diag,
                           double horizon, double step, RandomSource& rng) {
  if (m.time_dependent())
    throw ConfigError("develop_brownian: static metrics only");
  const int d = m.dim();
  if (gamma_diag.size() != d) throw ConfigError("develop_brownian: covariance dimension mismatch");
  const std::size_t n = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::ceil(horizon / step - 1e-9)));
  const double h = horizon / static_cast<double>(n);

  const double gamma_sum = gamma_diag.sum();
  FramePath out;
  out.times.resize(n + 1);
  out.frames.reserve(n + 1);
  Frame z = z0;
  out.times[0] = 0.0;
  out.frames.push_back(z);
  DerivWorkspace ws;
  Vec db(d);
  Frame k1, k2, pred;
  for (std::size_t k = 0; k < n; ++k) {
    double done = 0.0;
    while (done < h * (1.0 - 1e-12)) {
      // diffusive substep cap: 4 sigma of displacement must stay below the
      // chart resolution (a state-only trigger, so the law of the increments
      // is untouched; the walker leaves a scale-rho region in time ~ rho^2,
      // which bounds the substep count per depth scale)
      double dt = std::min(h, h - done);
      const double res = m.chart_resolution(z.q);
      if (std::isfinite(res)) dt = std::min(dt, res * res / (16.0 * gamma_sum));
      if (!(dt > 0.0)) throw NumericalError(m.name() + ": development substep underflow");
      rng.fill_normal(db);
      db.array() *= (dt * gamma_diag.array()).sqrt();
      // Heun (Stratonovich-consistent): average the field at z and the
      // Euler predictor.
      frame_derivative(m, false, 0.0, z, db, k1, ws);
      apply_trust_region(z, k1.q, k1.e);
      pred.q = z.q + k1.q;
      pred.e = z.e + k1.e;
      frame_derivative(m, false, 0.0, pred, db, k2, ws);
      Vec dq = 0.5 * (k1.q + k2.q);
      Mat de = 0.5 * (k1.e + k2.e);
      apply_trust_region(z, dq, de);
      z.q += dq;
      z.e += de;
      done += dt;
      const double defect = frame_defect(m, 0.0, z);
      out.max_defect = std::max(out.max_defect, defect);
      if (defect > 1e-10) orthonormalize_frame(m, 0.0, z);
    }
    out.times[k + 1] = h * static_cast<double>(k + 1);
    out.frames.push_back(z);
  }
  return out;
}

std::unique_ptr<ManifoldModel> make_manifold(const std::string& id, int dim, double conformal_c0,
                                             double conformal_rate, const std::string& form) {
  if (id == "euclidean") return std::make_unique<EuclideanModel>(dim);
  if (id == "sphere2") return std::make_unique<Sphere2Model>();
  if (id == "hyperbolic2") return std::make_unique<Hyperbolic2Model>();
  if (id == "conformal") {
    ConformalForm f;
    if (form == "exp") f = ConformalForm::kExponential;
    else if (form == "linear") f = ConformalForm::kLinear;
    else throw ConfigError("unknown conformal form '" + form + "'");
    return std::make_unique<ConformalFlatModel>(dim, conformal_c0, conformal_rate, f);
  }
  throw ConfigError("unknown manifold '" + id + "'");
}

}  // namespace kbm
