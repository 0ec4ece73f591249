#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

// Shared numeric types: anisotropy specification, level-2 rough increments
// with the Chen composition law, splittable deterministic randomness, and
// the diffusive time rescaling X_t = sigma^-2 * (x_{sigma^4 t} - x_0).

namespace kbm {

inline constexpr int kMaxDim = 16;

// Fixed-capacity dynamic vectors/matrices: no heap traffic in hot loops.
using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxDim, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, kMaxDim, kMaxDim>;

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Diagonal anisotropy Sigma = diag(alpha_i^2), A = diag(alpha_i).
class CovarianceSpec {
 public:
  explicit CovarianceSpec(Vec alphas);

  // Builds from the covariance diagonal (variance_i = alpha_i^2).
  static CovarianceSpec from_variances(const Vec& variances);
  static CovarianceSpec isotropic(int dim, double alpha = 1.0);

  int dim() const { return static_cast<int>(alphas_.size()); }
  const Vec& alphas() const { return alphas_; }
  double alpha(int i) const { return alphas_[i]; }
  double variance(int i) const { return alphas_[i] * alphas_[i]; }
  Vec variances() const { return alphas_.array().square(); }
  double trace() const { return trace_; }
  double alpha_max() const { return alpha_max_; }

  // ||A^{-1} theta|| for theta in R^d.
  double inv_scaled_norm(const Vec& theta) const;

 private:
  Vec alphas_;
  double trace_ = 0.0;
  double alpha_max_ = 0.0;
};

// Element (delta, second) of the step-2 truncated tensor algebra over R^d.
// For lifts of piecewise-C1 paths, Sym(second) = delta (x) delta / 2.
struct RoughIncrement {
  Vec delta;
  Mat second;

  int dim() const { return static_cast<int>(delta.size()); }

  static RoughIncrement zero(int dim);
  // Exact lift of a single linear segment with increment w: (w, w (x) w / 2).
  static RoughIncrement segment(const Vec& w);

  // Group inverse: a o inverse(a) = zero.
  RoughIncrement inverse() const;
};

// Chen composition (a.delta + b.delta, a.second + b.second + a.delta (x) b.delta).
RoughIncrement chen_compose(const RoughIncrement& a, const RoughIncrement& b);

// In-place right-composition with a linear-segment lift; O(d^2), no temporaries.
void chen_append_segment(RoughIncrement& acc, const Vec& w);

// Deterministic splittable randomness: one source per trajectory, streams
// derived from (seed, stream id) so ensembles reproduce independently of
// execution order.
class RandomSource {
 public:
  RandomSource(std::uint64_t seed, std::uint64_t stream);

  // Stream id composed from a role tag and a trajectory counter.
  static RandomSource derive(std::uint64_t seed, std::uint64_t role, std::uint64_t index);

  double normal() { return normal_(engine_); }
  double uniform() { return uniform_(engine_); }
  void fill_normal(Vec& out);

  std::uint64_t seed_value() const { return seed_; }
  std::uint64_t stream_value() const { return stream_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_;
  std::uniform_real_distribution<double> uniform_;
};

// A path sampled on a strictly increasing grid, piecewise-linear in between.
struct PathSample {
  std::vector<double> times;
  std::vector<Vec> points;

  int dim() const { return points.empty() ? 0 : static_cast<int>(points.front().size()); }
  std::size_t size() const { return times.size(); }
  double horizon() const { return times.empty() ? 0.0 : times.back() - times.front(); }

  // Piecewise-linear evaluation; exact on the contract.
  Vec at(double t) const;

  void validate() const;
};

// X_t = sigma^-2 (x_{sigma^4 t} - x_0) for a unit-speed path x, on a uniform
// grid of `points` nodes over [0, horizon]. Throws ConfigError when the input
// does not cover sigma^4 * horizon.
PathSample rescale_to_sigma(const PathSample& unit_speed, double sigma, double horizon,
                            std::size_t points);

// Convenience overload: horizon = full input span / sigma^4, same node count.
PathSample rescale_to_sigma(const PathSample& unit_speed, double sigma);

}  // namespace kbm
