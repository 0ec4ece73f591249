#include "kbm/models.hpp"

#include <cmath>
#include <map>
#include <mutex>

namespace kbm {

// ---------------------------------------------------------------------------
// Sphere diffusion steps

void step_sphere_velocity(Vec& v, const CovarianceSpec& spec, double h, const Vec& zeta) {
  const Vec& a = spec.alphas();
  const double vsv = (a.array() * v.array()).square().sum();  // <v, Sigma v>
  const double mixed = (a.array() * v.array() * zeta.array()).sum();
  const double sh = std::sqrt(h);
  for (int i = 0; i < v.size(); ++i) {
    const double drift = -0.5 * v[i] * (a[i] * a[i] + spec.trace() - 2.0 * vsv);
    v[i] += drift * h + sh * (a[i] * zeta[i] - v[i] * mixed);
  }
  const double n = v.norm();
  if (!std::isfinite(n) || n == 0.0)
    throw NumericalError("step_sphere_velocity: non-finite state, step size too large");
  v /= n;
}

void step_sphere_velocity(Vec& v, const CovarianceSpec& spec, double h, RandomSource& rng) {
  Vec zeta(v.size());
  rng.fill_normal(zeta);
  step_sphere_velocity(v, spec, h, zeta);
}

void step_euclidean_lift(Vec& u, const CovarianceSpec& spec, double h, const Vec& zeta) {
  const Vec& a = spec.alphas();
  const double un2 = u.squaredNorm();
  const double un = std::sqrt(un2);
  const double sh = std::sqrt(h);
  for (int i = 0; i < u.size(); ++i)
    u[i] += 0.5 * (a[i] * a[i] - un2) * u[i] * h + sh * a[i] * un * zeta[i];
  const double n = u.norm();
  if (!std::isfinite(n))
    throw NumericalError("step_euclidean_lift: non-finite state, step size too large");
  if (n < 1e-12) throw NumericalError("step_euclidean_lift: state reached zero, restart required");
}

void step_euclidean_lift(Vec& u, const CovarianceSpec& spec, double h, RandomSource& rng) {
  Vec zeta(u.size());
  rng.fill_normal(zeta);
  step_euclidean_lift(u, spec, h, zeta);
}

// ---------------------------------------------------------------------------
// Stationary law on the sphere

Vec sample_uniform_sphere(int dim, RandomSource& rng) {
  Vec g(dim);
  double n = 0.0;
  do {
    rng.fill_normal(g);
    n = g.norm();
  } while (n < 1e-12);
  return g / n;
}

double stationary_density_unnormalized(const Vec& theta, const CovarianceSpec& spec) {
  return std::pow(spec.inv_scaled_norm(theta), 1.0 - spec.dim());
}

double angular_gaussian_density_unnormalized(const Vec& theta, const CovarianceSpec& spec) {
  return std::pow(spec.inv_scaled_norm(theta), -static_cast<double>(spec.dim()));
}

double sphere_mean(int dim, const std::function<double(const Vec&)>& f) {
  if (dim == 2) {
    // Periodic trapezoid over the angle.
    const int n = 4096;
    double acc = 0.0;
    Vec theta(2);
    for (int k = 0; k < n; ++k) {
      const double phi = 2.0 * M_PI * k / n;
      theta[0] = std::cos(phi);
      theta[1] = std::sin(phi);
      acc += f(theta);
    }
    return acc / n;
  }
  if (dim == 3) {
    // Product rule: composite Simpson in z = cos(colatitude), periodic
    // trapezoid in longitude. Uniform measure is dz dphi / (4 pi).
    const int nz = 1024, nphi = 512;
    Vec theta(3);
    double acc = 0.0;
    for (int iz = 0; iz <= nz; ++iz) {
      const double z = -1.0 + 2.0 * iz / nz;
      const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
      const double wz = (iz == 0 || iz == nz) ? 1.0 : (iz % 2 == 1 ? 4.0 : 2.0);
      double ring = 0.0;
      for (int ip = 0; ip < nphi; ++ip) {
        const double phi = 2.0 * M_PI * ip / nphi;
        theta[0] = r * std::cos(phi);
        theta[1] = r * std::sin(phi);
        theta[2] = z;
        ring += f(theta);
      }
      acc += wz * ring / nphi;
    }
    return acc * (2.0 / (3.0 * nz)) / 2.0;  // Simpson weights, then /2 for dz/2
  }
  // Deterministic Monte Carlo fallback for d >= 4 (fixed stream).
  RandomSource rng(0x5EEDC0FFEEULL, 0);
  const int n = 2'000'000;
  double acc = 0.0;
  for (int k = 0; k < n; ++k) acc += f(sample_uniform_sphere(dim, rng));
  return acc / n;
}

namespace {

double cached_sphere_normalizer(const CovarianceSpec& spec, double exponent) {
  struct Key {
    std::vector<double> a;
    double expo;
    bool operator<(const Key& o) const {
      if (expo != o.expo) return expo < o.expo;
      return a < o.a;
    }
  };
  static std::map<Key, double> cache;
  static std::mutex mutex;
  Key key{{spec.alphas().data(), spec.alphas().data() + spec.dim()}, exponent};
  {
    std::lock_guard<std::mutex> lock(mutex);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
  }
  const double value = sphere_mean(
      spec.dim(), [&](const Vec& theta) { return std::pow(spec.inv_scaled_norm(theta), exponent); });
  std::lock_guard<std::mutex> lock(mutex);
  cache.emplace(std::move(key), value);
  return value;
}

}  // namespace

double stationary_density(const Vec& theta, const CovarianceSpec& spec) {
  return stationary_density_unnormalized(theta, spec) /
         cached_sphere_normalizer(spec, 1.0 - spec.dim());
}

double angular_gaussian_density(const Vec& theta, const CovarianceSpec& spec) {
  return angular_gaussian_density_unnormalized(theta, spec) /
         cached_sphere_normalizer(spec, -static_cast<double>(spec.dim()));
}

Vec sample_stationary_velocity(const CovarianceSpec& spec, RandomSource& rng) {
  // ||A^-1 theta|| >= 1/alpha_max, so (alpha_max ||A^-1 theta||)^{1-d} <= 1
  // is a valid acceptance probability.
  const double amax = spec.alpha_max();
  const double expo = 1.0 - spec.dim();
  for (int iter = 0; iter < 1'000'000; ++iter) {
    Vec theta = sample_uniform_sphere(spec.dim(), rng);
    const double accept = std::pow(amax * spec.inv_scaled_norm(theta), expo);
    if (rng.uniform() < accept) return theta;
  }
  throw NumericalError("sample_stationary_velocity: rejection cap of 1e6 iterations hit");
}

// ---------------------------------------------------------------------------
// SphereDiffusion

VelocityState SphereDiffusion::sample_stationary(RandomSource& rng) const {
  return {sample_stationary_velocity(spec_, rng), 0.0, 0};
}

void SphereDiffusion::step(VelocityState& state, double h, RandomSource& rng) const {
  step_sphere_velocity(state.x, spec_, h, rng);
}

double SphereDiffusion::default_step() const {
  return 1e-3 / std::max(1.0, spec_.alpha_max() * spec_.alpha_max());
}

// ---------------------------------------------------------------------------
// RandomFlight

RandomFlight::RandomFlight(int dim, double rate) : dim_(dim), rate_(rate) {
  if (dim < 2 || dim > kMaxDim) throw ConfigError("RandomFlight: bad dimension");
  if (!(rate > 0.0)) throw ConfigError("RandomFlight: rate must be positive");
}

VelocityState RandomFlight::sample_stationary(RandomSource& rng) const {
  return {sample_uniform_sphere(dim_, rng), 0.0, 0};
}

void RandomFlight::step(VelocityState& state, double h, RandomSource& rng) const {
  // Only the last jump in (t, t+h] matters: targets are iid uniform.
  if (rng.uniform() < -std::expm1(-rate_ * h)) state.x = sample_uniform_sphere(dim_, rng);
}

std::optional<Vec> RandomFlight::autocovariance(double lag) const {
  return Vec::Constant(dim_, std::exp(-rate_ * lag) / dim_);
}

// ---------------------------------------------------------------------------
// SpinningMotion2d

VelocityState SpinningMotion2d::sample_stationary(RandomSource& rng) const {
  VelocityState s;
  s.x = Vec::Zero(2);
  s.aux = 2.0 * M_PI * rng.uniform();
  return s;
}

void SpinningMotion2d::step(VelocityState& state, double h, RandomSource& rng) const {
  state.aux += h + std::sqrt(h) * rng.normal();
}

Vec SpinningMotion2d::read(const VelocityState& state) const {
  Vec v(2);
  v[0] = std::cos(state.aux);
  v[1] = std::sin(state.aux);
  return v;
}

std::optional<Vec> SpinningMotion2d::autocovariance(double lag) const {
  return Vec::Constant(2, 0.5 * std::cos(lag) * std::exp(-0.5 * lag));
}

// ---------------------------------------------------------------------------
// InterpolatedWalk

void InterpolatedWalk::draw(Vec& y, RandomSource& rng) const {
  for (int i = 0; i < dim_; ++i) {
    if (law_ == WalkLaw::kRademacher)
      y[i] = rng.uniform() < 0.5 ? -1.0 : 1.0;
    else
      y[i] = 2.0 * rng.uniform() - 1.0;
  }
}

VelocityState InterpolatedWalk::sample_stationary(RandomSource& rng) const {
  VelocityState s;
  s.x.resize(dim_);
  draw(s.x, rng);
  s.aux = 1.0 - rng.uniform();  // time to next renewal, uniform phase
  return s;
}

void InterpolatedWalk::step(VelocityState& state, double h, RandomSource& rng) const {
  while (h >= state.aux) {
    h -= state.aux;
    state.aux = 1.0;
    draw(state.x, rng);
  }
  state.aux -= h;
}

std::optional<Vec> InterpolatedWalk::autocovariance(double lag) const {
  return Vec::Constant(dim_, second_moment() * std::max(0.0, 1.0 - lag));
}

// ---------------------------------------------------------------------------
// MarkovWalk

MarkovWalk::MarkovWalk(int dim, double flip_probability) : dim_(dim), q_(flip_probability) {
  if (dim < 2 || dim > kMaxDim) throw ConfigError("MarkovWalk: bad dimension");
  if (!(q_ > 0.0) || !(q_ < 1.0)) throw ConfigError("MarkovWalk: flip probability must be in (0,1)");
}

VelocityState MarkovWalk::sample_stationary(RandomSource& rng) const {
  VelocityState s;
  s.x.resize(dim_);
  for (int i = 0; i < dim_; ++i) s.x[i] = rng.uniform() < 0.5 ? -1.0 : 1.0;
  s.aux = 1.0 - rng.uniform();
  return s;
}

void MarkovWalk::step(VelocityState& state, double h, RandomSource& rng) const {
  while (h >= state.aux) {
    h -= state.aux;
    state.aux = 1.0;
    for (int i = 0; i < dim_; ++i)
      if (rng.uniform() < q_) state.x[i] = -state.x[i];
  }
  state.aux -= h;
}

std::optional<Vec> MarkovWalk::autocovariance(double lag) const {
  // Chain correlation r^k linearly interpolated by the renewal phase.
  const double r = 1.0 - 2.0 * q_;
  const double k = std::floor(lag);
  const double u = lag - k;
  const double rk = std::pow(r, k);
  return Vec::Constant(dim_, (1.0 - u) * rk + u * rk * r);
}

// ---------------------------------------------------------------------------
// OrnsteinUhlenbeck

VelocityState OrnsteinUhlenbeck::sample_stationary(RandomSource& rng) const {
  VelocityState s;
  s.x.resize(dim());
  for (int i = 0; i < dim(); ++i) s.x[i] = std::sqrt(0.5) * spec_.alpha(i) * rng.normal();
  return s;
}

void OrnsteinUhlenbeck::step(VelocityState& state, double h, RandomSource& rng) const {
  // Exact one-step law: v <- e^-h v + N(0, Sigma (1 - e^-2h) / 2).
  const double decay = std::exp(-h);
  const double spread = std::sqrt(0.5 * -std::expm1(-2.0 * h));
  for (int i = 0; i < dim(); ++i)
    state.x[i] = decay * state.x[i] + spread * spec_.alpha(i) * rng.normal();
}

std::optional<Vec> OrnsteinUhlenbeck::autocovariance(double lag) const {
  return (0.5 * std::exp(-lag)) * spec_.variances();
}

// ---------------------------------------------------------------------------

std::unique_ptr<VelocityModel> make_model(const std::string& id, int dim, const Vec& variances,
                                          WalkLaw law, double param) {
  auto spec = [&] {
    if (variances.size() == 0) return CovarianceSpec::isotropic(dim);
    return CovarianceSpec::from_variances(variances);
  };
  if (id == "sphere") return std::make_unique<SphereDiffusion>(spec());
  if (id == "ou") return std::make_unique<OrnsteinUhlenbeck>(spec());
  if (id == "random-flight") return std::make_unique<RandomFlight>(dim, param > 0 ? param : 1.0);
  if (id == "spin2d") return std::make_unique<SpinningMotion2d>();
  if (id == "walk") return std::make_unique<InterpolatedWalk>(dim, law);
  if (id == "markov-walk") return std::make_unique<MarkovWalk>(dim, param > 0 ? param : 0.3);
  throw ConfigError("unknown velocity model '" + id + "'");
}

}  // namespace kbm
