#include "kbm/core.hpp"

#include <algorithm>
#include <cmath>

namespace kbm {

CovarianceSpec::CovarianceSpec(Vec alphas) : alphas_(std::move(alphas)) {
  if (alphas_.size() < 2 || alphas_.size() > kMaxDim)
    throw ConfigError("CovarianceSpec: dimension must be in [2, " + std::to_string(kMaxDim) + "]");
  for (int i = 0; i < alphas_.size(); ++i) {
    if (!(alphas_[i] > 0.0) || !std::isfinite(alphas_[i]))
      throw ConfigError("CovarianceSpec: alphas must be positive and finite");
  }
  trace_ = alphas_.array().square().sum();
  alpha_max_ = alphas_.maxCoeff();
}

CovarianceSpec CovarianceSpec::from_variances(const Vec& variances) {
  Vec a = variances;
  for (int i = 0; i < a.size(); ++i) {
    if (!(a[i] > 0.0)) throw ConfigError("CovarianceSpec: variances must be positive");
    a[i] = std::sqrt(a[i]);
  }
  return CovarianceSpec(a);
}

CovarianceSpec CovarianceSpec::isotropic(int dim, double alpha) {
  return CovarianceSpec(Vec::Constant(dim, alpha));
}

double CovarianceSpec::inv_scaled_norm(const Vec& theta) const {
  return (theta.array() / alphas_.array()).matrix().norm();
}

RoughIncrement RoughIncrement::zero(int dim) {
  return {Vec::Zero(dim), Mat::Zero(dim, dim)};
}

RoughIncrement RoughIncrement::segment(const Vec& w) {
  return {w, 0.5 * (w * w.transpose())};
}

RoughIncrement RoughIncrement::inverse() const {
  return {-delta, -second + delta * delta.transpose()};
}

RoughIncrement chen_compose(const RoughIncrement& a, const RoughIncrement& b) {
  if (a.dim() != b.dim()) throw ConfigError("chen_compose: dimension mismatch");
  return {a.delta + b.delta, a.second + b.second + a.delta * b.delta.transpose()};
}

void chen_append_segment(RoughIncrement& acc, const Vec& w) {
  acc.second.noalias() += acc.delta * w.transpose();
  acc.second.noalias() += 0.5 * (w * w.transpose());
  acc.delta += w;
}

namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::mt19937_64 make_engine(std::uint64_t seed, std::uint64_t stream) {
  // Expand (seed, stream) into decorrelated words before seeding.
  std::uint64_t s = seed ^ (stream * 0xD2B74407B1CE6E93ULL + 0x8BB84B93962EACC9ULL);
  std::seed_seq seq{static_cast<std::uint32_t>(splitmix64(s)), static_cast<std::uint32_t>(splitmix64(s) >> 32),
                    static_cast<std::uint32_t>(splitmix64(s)), static_cast<std::uint32_t>(splitmix64(s) >> 32),
                    static_cast<std::uint32_t>(splitmix64(s)), static_cast<std::uint32_t>(splitmix64(s) >> 32),
                    static_cast<std::uint32_t>(splitmix64(s)), static_cast<std::uint32_t>(splitmix64(s) >> 32)};
  return std::mt19937_64(seq);
}

}  // namespace

RandomSource::RandomSource(std::uint64_t seed, std::uint64_t stream)
    : seed_(seed), stream_(stream), engine_(make_engine(seed, stream)) {}

RandomSource RandomSource::derive(std::uint64_t seed, std::uint64_t role, std::uint64_t index) {
  return RandomSource(seed, (role << 40) ^ index);
}

void RandomSource::fill_normal(Vec& out) {
  for (int i = 0; i < out.size(); ++i) out[i] = normal_(engine_);
}

void PathSample::validate() const {
  if (times.size() != points.size()) throw ConfigError("PathSample: times/points length mismatch");
  if (times.size() < 2) throw ConfigError("PathSample: need at least two nodes");
  const int d = dim();
  for (std::size_t k = 0; k < times.size(); ++k) {
    if (!std::isfinite(times[k])) throw ConfigError("PathSample: non-finite time");
    if (k > 0 && !(times[k] > times[k - 1])) throw ConfigError("PathSample: times not strictly increasing");
    if (points[k].size() != d || !points[k].allFinite())
      throw ConfigError("PathSample: invalid point");
  }
}

Vec PathSample::at(double t) const {
  if (t <= times.front()) return points.front();
  if (t >= times.back()) return points.back();
  auto it = std::upper_bound(times.begin(), times.end(), t);
  std::size_t hi = static_cast<std::size_t>(it - times.begin());
  std::size_t lo = hi - 1;
  double u = (t - times[lo]) / (times[hi] - times[lo]);
  return (1.0 - u) * points[lo] + u * points[hi];
}

PathSample rescale_to_sigma(const PathSample& unit_speed, double sigma, double horizon,
                            std::size_t points) {
  unit_speed.validate();
  if (!(sigma > 0.0)) throw ConfigError("rescale_to_sigma: sigma must be positive");
  if (!(horizon > 0.0) || points < 2) throw ConfigError("rescale_to_sigma: invalid target grid");
  const double s4 = sigma * sigma * sigma * sigma;
  const double span = unit_speed.horizon();
  if (s4 * horizon > span * (1.0 + 1e-12))
    throw ConfigError("rescale_to_sigma: input horizon " + std::to_string(span) +
                      " shorter than sigma^4 * horizon = " + std::to_string(s4 * horizon));
  const double t0 = unit_speed.times.front();
  const Vec x0 = unit_speed.points.front();
  const double inv_s2 = 1.0 / (sigma * sigma);
  PathSample out;
  out.times.resize(points);
  out.points.resize(points);
  for (std::size_t k = 0; k < points; ++k) {
    double t = horizon * static_cast<double>(k) / static_cast<double>(points - 1);
    out.times[k] = t;
    out.points[k] = inv_s2 * (unit_speed.at(t0 + std::min(s4 * t, span)) - x0);
  }
  return out;
}

PathSample rescale_to_sigma(const PathSample& unit_speed, double sigma) {
  const double s4 = sigma * sigma * sigma * sigma;
  return rescale_to_sigma(unit_speed, sigma, unit_speed.horizon() / s4, unit_speed.size());
}

}  // namespace kbm
