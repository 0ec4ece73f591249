#pragma once

#include "kbm/core.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <string>

// The anisotropic sphere-valued velocity diffusion plus the alternative
// velocity processes (random flight, spinning motion, interpolated walks,
// Ornstein-Uhlenbeck), all behind one stationary-velocity contract.

namespace kbm {

// Per-trajectory mutable state. `x` is the model's primary vector state,
// `aux` a scalar (angle or renewal phase), `idx` a discrete component.
struct VelocityState {
  Vec x;
  double aux = 0.0;
  int idx = 0;
};

// Contract for a stationary, mixing velocity process read into R^d.
// Except where noted, the stationary law is invariant under every
// coordinate flip, so the read has zero mean.
class VelocityModel {
 public:
  virtual ~VelocityModel() = default;

  virtual int dim() const = 0;
  virtual std::string name() const = 0;
  virtual VelocityState sample_stationary(RandomSource& rng) const = 0;
  virtual void step(VelocityState& state, double h, RandomSource& rng) const = 0;
  virtual Vec read(const VelocityState& state) const = 0;

  virtual bool flip_symmetric() const { return true; }
  // Closed-form stationary autocovariance per coordinate, when known.
  virtual std::optional<Vec> autocovariance(double lag) const { return std::nullopt; }
  virtual double default_step() const { return 1e-3; }
};

// ---------------------------------------------------------------------------
// Sphere diffusion (primary model)

// One Euler-Maruyama step of the Ito coordinate SDE of the unit-speed sphere
// velocity, followed by renormalization onto S^{d-1}:
//   dv^i = -1/2 v^i [a_i^2 + tr(Sigma) - 2 <v, Sigma v>] dt
//          + a_i dW^i - v^i sum_j a_j v^j dW^j.
// Throws NumericalError on non-finite output (step size too large).
void step_sphere_velocity(Vec& v, const CovarianceSpec& spec, double h, RandomSource& rng);
// Same step driven by explicit standard-normal increments (for coupling and
// flip-equivariance tests).
void step_sphere_velocity(Vec& v, const CovarianceSpec& spec, double h, const Vec& zeta);

// One Euler-Maruyama step of the Euclidean lift
//   du^i = 1/2 (-u^i |u|^2 + a_i^2 u^i) dt + a_i |u| dW^i.
// Throws NumericalError if u collapses to 0 within tolerance.
void step_euclidean_lift(Vec& u, const CovarianceSpec& spec, double h, RandomSource& rng);
void step_euclidean_lift(Vec& u, const CovarianceSpec& spec, double h, const Vec& zeta);

// Stationary density of the sphere velocity w.r.t. the uniform probability
// measure on S^{d-1}: ||A^-1 theta||^{1-d} / normalizer. The normalizer is
// computed once by cubature and cached per spec.
double stationary_density(const Vec& theta, const CovarianceSpec& spec);
double stationary_density_unnormalized(const Vec& theta, const CovarianceSpec& spec);

// Projected-Gaussian (angular Gaussian) density w.r.t. uniform, exponent -d;
// distinct from the stationary law above.
double angular_gaussian_density(const Vec& theta, const CovarianceSpec& spec);
double angular_gaussian_density_unnormalized(const Vec& theta, const CovarianceSpec& spec);

// Exact stationary sample by rejection: uniform proposals accepted with
// probability (alpha_max ||A^-1 theta||)^{1-d} <= 1.
Vec sample_stationary_velocity(const CovarianceSpec& spec, RandomSource& rng);

// Uniform point on S^{d-1}.
Vec sample_uniform_sphere(int dim, RandomSource& rng);

// Mean of f over the uniform probability measure on S^{d-1}. Deterministic
// product quadrature for d in {2, 3}; fixed-stream Monte Carlo above that.
double sphere_mean(int dim, const std::function<double(const Vec&)>& f);

class SphereDiffusion : public VelocityModel {
 public:
  explicit SphereDiffusion(CovarianceSpec spec) : spec_(std::move(spec)) {}

  int dim() const override { return spec_.dim(); }
  std::string name() const override { return "sphere"; }
  VelocityState sample_stationary(RandomSource& rng) const override;
  void step(VelocityState& state, double h, RandomSource& rng) const override;
  Vec read(const VelocityState& state) const override { return state.x; }
  double default_step() const override;

  const CovarianceSpec& spec() const { return spec_; }

 private:
  CovarianceSpec spec_;
};

// ---------------------------------------------------------------------------
// Model zoo

// Pure jump process on S^{d-1}: uniform redraws at Poisson times.
// Per-coordinate autocovariance e^{-rate t} / d.
class RandomFlight : public VelocityModel {
 public:
  explicit RandomFlight(int dim, double rate = 1.0);

  int dim() const override { return dim_; }
  std::string name() const override { return "random-flight"; }
  VelocityState sample_stationary(RandomSource& rng) const override;
  void step(VelocityState& state, double h, RandomSource& rng) const override;
  Vec read(const VelocityState& state) const override { return state.x; }
  std::optional<Vec> autocovariance(double lag) const override;

 private:
  int dim_;
  double rate_;
};

// v = (cos theta, sin theta), d theta = dt + dW. Violates flip symmetry by
// design: the negative control for the Levy-area drift test.
// Autocovariance cos(t) e^{-t/2} / 2 per coordinate.
class SpinningMotion2d : public VelocityModel {
 public:
  int dim() const override { return 2; }
  std::string name() const override { return "spin2d"; }
  VelocityState sample_stationary(RandomSource& rng) const override;
  void step(VelocityState& state, double h, RandomSource& rng) const override;
  Vec read(const VelocityState& state) const override;
  bool flip_symmetric() const override { return false; }
  std::optional<Vec> autocovariance(double lag) const override;
};

enum class WalkLaw { kRademacher, kUniform };

// Piecewise-constant velocity redrawn each unit time from a symmetric bounded
// law, with uniform renewal phase at stationarity. gamma_i = E[Y_i^2].
class InterpolatedWalk : public VelocityModel {
 public:
  InterpolatedWalk(int dim, WalkLaw law) : dim_(dim), law_(law) {}

  int dim() const override { return dim_; }
  std::string name() const override { return "walk"; }
  VelocityState sample_stationary(RandomSource& rng) const override;
  void step(VelocityState& state, double h, RandomSource& rng) const override;
  Vec read(const VelocityState& state) const override { return state.x; }
  std::optional<Vec> autocovariance(double lag) const override;

  double second_moment() const { return law_ == WalkLaw::kRademacher ? 1.0 : 1.0 / 3.0; }

 private:
  void draw(Vec& y, RandomSource& rng) const;
  int dim_;
  WalkLaw law_;
};

// As InterpolatedWalk with values on {-1,+1}^d driven by a symmetric chain:
// each coordinate flips sign with probability q at every renewal.
// gamma_i = (1 - q) / q.
class MarkovWalk : public VelocityModel {
 public:
  MarkovWalk(int dim, double flip_probability);

  int dim() const override { return dim_; }
  std::string name() const override { return "markov-walk"; }
  VelocityState sample_stationary(RandomSource& rng) const override;
  void step(VelocityState& state, double h, RandomSource& rng) const override;
  Vec read(const VelocityState& state) const override { return state.x; }
  std::optional<Vec> autocovariance(double lag) const override;

 private:
  int dim_;
  double q_;
};

// dv = -v dt + dB_Sigma, stationary law N(0, Sigma/2); exact discretization.
// Unbounded support. gamma_i = Sigma_ii.
class OrnsteinUhlenbeck : public VelocityModel {
 public:
  explicit OrnsteinUhlenbeck(CovarianceSpec spec) : spec_(std::move(spec)) {}

  int dim() const override { return spec_.dim(); }
  std::string name() const override { return "ou"; }
  VelocityState sample_stationary(RandomSource& rng) const override;
  void step(VelocityState& state, double h, RandomSource& rng) const override;
  Vec read(const VelocityState& state) const override { return state.x; }
  std::optional<Vec> autocovariance(double lag) const override;
  double default_step() const override { return 1e-2; }

  const CovarianceSpec& spec() const { return spec_; }

 private:
  CovarianceSpec spec_;
};

// Factory used by the CLI and tests. `variances` is the covariance diagonal
// for sphere/ou; `param` is the walk flip probability or flight rate.
std::unique_ptr<VelocityModel> make_model(const std::string& id, int dim, const Vec& variances,
                                          WalkLaw law = WalkLaw::kRademacher, double param = 0.0);

}  // namespace kbm
