#include "kbm/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace kbm {

// ---------------------------------------------------------------------------
// Autocovariance

AutocovEstimate autocovariance(const VelocityModel& model, const AutocovOptions& opt) {
  if (opt.n_lags < 2 || !(opt.lag_dt > 0.0)) throw ConfigError("autocovariance: bad lag grid");
  const double max_lag = (opt.n_lags - 1) * opt.lag_dt;
  if (opt.horizon < 2.0 * opt.batches * max_lag)
    throw ConfigError("autocovariance: horizon too short relative to requested lags");

  const int d = model.dim();
  const std::size_t n_samples = static_cast<std::size_t>(std::floor(opt.horizon / opt.lag_dt)) + 1;

  // March the trajectory, sampling the velocity every lag_dt into a flat
  // column-per-sample buffer.
  Eigen::MatrixXd samples(d, n_samples);
  {
    RandomSource rng = RandomSource::derive(opt.seed, opt.role, 0);
    VelocityState state = opt.fixed_start ? *opt.fixed_start : model.sample_stationary(rng);
    const double h0 = opt.step > 0.0 ? opt.step : model.default_step();
    if (opt.burn_in > 0.0) {
      const std::size_t nb = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(opt.burn_in / h0)));
      for (std::size_t k = 0; k < nb; ++k) model.step(state, opt.burn_in / nb, rng);
    }
    const std::size_t sub = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(opt.lag_dt / h0 - 1e-9)));
    const double h = opt.lag_dt / static_cast<double>(sub);
    samples.col(0) = model.read(state);
    for (std::size_t k = 1; k < n_samples; ++k) {
      for (std::size_t s = 0; s < sub; ++s) model.step(state, h, rng);
      samples.col(k) = model.read(state);
    }
  }

  AutocovEstimate ac;
  ac.dim = d;
  ac.sample_dt = opt.lag_dt;
  ac.horizon = opt.horizon;
  ac.lags.resize(opt.n_lags);
  ac.values.assign(opt.n_lags, Vec::Zero(d));
  ac.std_errors.assign(opt.n_lags, Vec::Zero(d));
  ac.batch_values.assign(opt.batches, std::vector<Vec>(opt.n_lags, Vec::Zero(d)));

  const std::size_t pairs_total = n_samples - static_cast<std::size_t>(opt.n_lags);
  parallel_for_indexed(static_cast<std::size_t>(opt.n_lags), opt.workers, [&](std::size_t k) {
    ac.lags[k] = static_cast<double>(k) * opt.lag_dt;
    // One shared base range for every lag so batches line up.
    Vec total = Vec::Zero(d);
    for (int b = 0; b < opt.batches; ++b) {
      const std::size_t j0 = pairs_total * b / opt.batches;
      const std::size_t j1 = pairs_total * (b + 1) / opt.batches;
      Vec acc = Vec::Zero(d);
      for (std::size_t j = j0; j < j1; ++j)
        acc.array() += samples.col(j).array() * samples.col(j + k).array();
      acc /= static_cast<double>(j1 - j0);
      ac.batch_values[b][k] = acc;
      total += acc * static_cast<double>(j1 - j0);
    }
    ac.values[k] = total / static_cast<double>(pairs_total);
    Vec var = Vec::Zero(d);
    for (int b = 0; b < opt.batches; ++b)
      var.array() += (ac.batch_values[b][k] - ac.values[k]).array().square();
    var /= static_cast<double>(opt.batches - 1);
    ac.std_errors[k] = (var / static_cast<double>(opt.batches)).array().sqrt();
  });
  return ac;
}

// ---------------------------------------------------------------------------
// Mixing fit

MixingFit fit_exponential_decay(const std::vector<double>& lags, const std::vector<double>& values,
                                const std::vector<double>& std_errors) {
  // Signal-dominated window: contiguous from the start, |value| > 2 SE.
  std::size_t last = 0;
  while (last < values.size() && std::abs(values[last]) > 2.0 * std_errors[last] &&
         values[last] != 0.0)
    ++last;
  if (last < 5) throw ConfigError("fit_exponential_decay: fewer than 5 usable lags");

  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  const double n = static_cast<double>(last);
  for (std::size_t k = 0; k < last; ++k) {
    const double x = lags[k], y = std::log(std::abs(values[k]));
    sx += x; sy += y; sxx += x * x; sxy += x * y; syy += y * y;
  }
  const double denom = n * sxx - sx * sx;
  MixingFit fit;
  fit.window_size = static_cast<int>(last);
  if (denom <= 0.0) return fit;
  const double slope = (n * sxy - sx * sy) / denom;
  const double intercept = (sy - slope * sx) / n;
  fit.tau = slope < 0.0 ? -1.0 / slope : 0.0;
  fit.prefactor = std::exp(intercept);
  const double ss_tot = syy - sy * sy / n;
  double ss_res = 0;
  for (std::size_t k = 0; k < last; ++k) {
    const double r = std::log(std::abs(values[k])) - (intercept + slope * lags[k]);
    ss_res += r * r;
  }
  fit.r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
  fit.ok = fit.tau > 0.0 && std::isfinite(fit.tau);
  return fit;
}

MixingFit estimate_mixing_time(const AutocovEstimate& ac, int coordinate) {
  std::vector<double> v(ac.lags.size()), se(ac.lags.size());
  for (std::size_t k = 0; k < ac.lags.size(); ++k) {
    if (coordinate >= 0) {
      v[k] = ac.values[k][coordinate];
      se[k] = ac.std_errors[k][coordinate];
    } else {
      v[k] = ac.values[k].sum();
      se[k] = std::sqrt(ac.std_errors[k].squaredNorm());
    }
  }
  return fit_exponential_decay(ac.lags, v, se);
}

MixingFit estimate_mixing_time(const AutocovEstimate& ac) { return estimate_mixing_time(ac, -1); }

// ---------------------------------------------------------------------------
// Gamma from the autocovariance integral

GammaEstimate estimate_gamma_autocov(const AutocovEstimate& ac) {
  const int d = ac.dim;
  const int B = static_cast<int>(ac.batch_values.size());
  GammaEstimate g;
  g.method = "autocov-integral";
  g.gamma = Vec::Zero(d);
  g.ci_half = Vec::Zero(d);
  g.tail = Vec::Zero(d);
  g.truncation.assign(d, 0);

  for (int i = 0; i < d; ++i) {
    // Truncate where the signal stays below noise: a single below-2SE lag can
    // be a zero crossing of an oscillating autocovariance, so ask for a run
    // of them before stopping.
    const std::size_t confirm = 6;
    std::size_t L = ac.lags.size();
    for (std::size_t k = 1, run = 0; k < ac.lags.size(); ++k) {
      if (std::abs(ac.values[k][i]) < 2.0 * ac.std_errors[k][i]) {
        if (++run >= confirm || k + 1 == ac.lags.size()) {
          L = k + 1 - run;
          break;
        }
      } else {
        run = 0;
      }
    }
    if (L >= ac.lags.size())
      throw NumericalError(
          "estimate_gamma_autocov: autocovariance does not decay below noise within the lag "
          "window; model not mixing or horizon too short");
    g.truncation[i] = static_cast<int>(L);
    bool sign_constant = true;
    for (std::size_t k = 1; k <= L; ++k)
      sign_constant = sign_constant && (ac.values[k][i] * ac.values[0][i] > 0.0 || k == L);

    auto trapezoid = [&](const std::vector<Vec>& vals) {
      double acc = 0.5 * (vals[0][i] + vals[L][i]);
      for (std::size_t k = 1; k < L; ++k) acc += vals[k][i];
      return 2.0 * acc * ac.sample_dt;
    };
    g.gamma[i] = trapezoid(ac.values);

    // Fitted-exponential tail beyond the truncation lag. Only meaningful for
    // sign-constant decay; an oscillating truncated remainder alternates and
    // largely cancels, so it is left out rather than mis-signed.
    if (sign_constant) {
      std::vector<double> v(ac.lags.size()), se(ac.lags.size());
      for (std::size_t k = 0; k < ac.lags.size(); ++k) {
        v[k] = ac.values[k][i];
        se[k] = ac.std_errors[k][i];
      }
      try {
        MixingFit fit = fit_exponential_decay(ac.lags, v, se);
        // The tail is only trusted when the fitted exponential is consistent
        // with the observed below-noise values past the truncation lag;
        // compactly supported autocovariances decay faster than their fit.
        bool consistent = fit.ok && fit.r2 > 0.5;
        for (std::size_t k = L; consistent && k < std::min(L + confirm, ac.lags.size()); ++k)
          consistent = fit.prefactor * std::exp(-ac.lags[k] / fit.tau) <=
                       std::abs(v[k]) + 3.0 * se[k];
        if (consistent) {
          const double sign = ac.values[0][i] >= 0.0 ? 1.0 : -1.0;
          g.tail[i] = sign * 2.0 * fit.prefactor * fit.tau * std::exp(-ac.lags[L] / fit.tau);
        }
      } catch (const ConfigError&) {
        // window too short for a tail estimate; the integral alone stands
      }
    }
    g.gamma[i] += g.tail[i];

    double mean_b = 0.0, var_b = 0.0;
    std::vector<double> gb(B);
    for (int b = 0; b < B; ++b) {
      gb[b] = trapezoid(ac.batch_values[b]);
      mean_b += gb[b];
    }
    mean_b /= B;
    for (int b = 0; b < B; ++b) var_b += (gb[b] - mean_b) * (gb[b] - mean_b);
    var_b /= (B - 1);
    g.ci_half[i] = 1.96 * std::sqrt(var_b / B);
  }
  return g;
}

// ---------------------------------------------------------------------------
// Gamma from ensemble variance

EnsembleGammaReport gamma_from_samples(const std::vector<Vec>& x1) {
  if (x1.empty()) throw ConfigError("gamma_from_samples: empty ensemble");
  const int d = static_cast<int>(x1.front().size());
  const double n = static_cast<double>(x1.size());
  EnsembleGammaReport rep;
  rep.n = static_cast<int>(x1.size());

  Vec mean = Vec::Zero(d);
  for (const auto& x : x1) mean += x;
  mean /= n;
  Mat cov = Mat::Zero(d, d);
  for (const auto& x : x1) cov.noalias() += (x - mean) * (x - mean).transpose();
  cov /= (n - 1.0);

  // SE of each covariance entry from the sample variance of the products.
  Mat cov_se = Mat::Zero(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      double acc = 0.0;
      for (const auto& x : x1) {
        const double p = (x[i] - mean[i]) * (x[j] - mean[j]) - cov(i, j);
        acc += p * p;
      }
      cov_se(i, j) = std::sqrt(acc / (n - 1.0) / n);
    }

  rep.mean = mean;
  rep.mean_se = (cov.diagonal() / n).array().sqrt();
  rep.covariance = cov;
  rep.covariance_se = cov_se;
  rep.gamma.method = "ensemble-variance";
  rep.gamma.n = rep.n;
  rep.gamma.gamma = cov.diagonal();
  rep.gamma.ci_half = 1.96 * cov_se.diagonal();
  rep.gamma.tail = Vec::Zero(d);
  rep.gamma.truncation.assign(d, 0);
  return rep;
}

EnsembleGammaReport estimate_gamma_ensemble(const VelocityModel& model,
                                            const EnsembleOptions& opt) {
  EnsembleOptions o = opt;
  o.horizon = 1.0;
  auto results = run_velocity_ensemble(model, o);
  std::vector<Vec> x1(results.size());
  for (std::size_t i = 0; i < results.size(); ++i) x1[i] = results[i].x_end;
  return gamma_from_samples(x1);
}

bool gammas_agree_joint_ci(const GammaEstimate& a, const GammaEstimate& b) {
  const int d = static_cast<int>(a.gamma.size());
  if (b.gamma.size() != d) throw ConfigError("gammas_agree_joint_ci: dimension mismatch");
  // Bonferroni: joint 95% across d per-coordinate comparisons.
  static const double z_table[] = {1.96, 2.24, 2.39, 2.50, 2.58, 2.64, 2.69, 2.73};
  const double z = z_table[std::min(d - 1, 7)];
  for (int i = 0; i < d; ++i) {
    const double se_a = a.ci_half[i] / 1.96, se_b = b.ci_half[i] / 1.96;
    if (std::abs(a.gamma[i] - b.gamma[i]) > z * std::hypot(se_a, se_b)) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Sphere partition and total variation

namespace {

// Gauss-Legendre nodes/weights on [-1, 1] by Newton iteration.
void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights) {
  nodes.resize(n);
  weights.resize(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    nodes[i] = -x;
    nodes[n - 1 - i] = x;
    weights[i] = weights[n - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
}

}  // namespace

SpherePartition::SpherePartition(int dim, int bins) : dim_(dim), bins_(bins) {
  if (dim != 2 && dim != 3)
    throw ConfigError("SpherePartition: equal-area scheme implemented for d in {2, 3}");
  if (bins < 2) throw ConfigError("SpherePartition: need at least 2 bins");
  if (dim == 2) {
    rings_ = 1;
    sectors_ = bins;
    return;
  }
  // Rings of equal z-height, each split into bins/rings sectors; pick the
  // divisor of `bins` nearest to the near-square ring count sqrt(3 bins)/2
  // (12 rings x 16 sectors at 192 bins).
  const double ideal = std::sqrt(3.0 * bins) / 2.0;
  int best = 1;
  for (int r = 1; r <= bins; ++r)
    if (bins % r == 0 && std::abs(r - ideal) < std::abs(best - ideal)) best = r;
  rings_ = best;
  sectors_ = bins / best;
}

int SpherePartition::bin_of(const Vec& theta) const {
  const double phi = std::atan2(theta[1], theta[0]);
  const double u = (phi < 0.0 ? phi + 2.0 * M_PI : phi) / (2.0 * M_PI);
  const int sector = std::min(sectors_ - 1, static_cast<int>(u * sectors_));
  if (dim_ == 2) return sector;
  const double z = std::clamp(theta[2], -1.0, 1.0);
  const int ring = std::min(rings_ - 1, static_cast<int>((1.0 - z) / 2.0 * rings_));
  return ring * sectors_ + sector;
}

std::vector<double> SpherePartition::masses(const std::function<double(const Vec&)>& density) const {
  std::vector<double> nodes, weights;
  gauss_legendre(16, nodes, weights);
  std::vector<double> out(bins_, 0.0);
  if (dim_ == 2) {
    Vec theta(2);
    for (int s = 0; s < sectors_; ++s) {
      const double a = 2.0 * M_PI * s / sectors_, b = 2.0 * M_PI * (s + 1) / sectors_;
      double acc = 0.0;
      for (std::size_t k = 0; k < nodes.size(); ++k) {
        const double phi = 0.5 * (a + b) + 0.5 * (b - a) * nodes[k];
        theta[0] = std::cos(phi);
        theta[1] = std::sin(phi);
        acc += weights[k] * density(theta);
      }
      out[s] = acc * 0.5 * (b - a) / (2.0 * M_PI);
    }
    return out;
  }
  Vec theta(3);
  for (int r = 0; r < rings_; ++r) {
    const double z1 = 1.0 - 2.0 * r / rings_, z0 = 1.0 - 2.0 * (r + 1) / rings_;
    for (int s = 0; s < sectors_; ++s) {
      const double a = 2.0 * M_PI * s / sectors_, b = 2.0 * M_PI * (s + 1) / sectors_;
      double acc = 0.0;
      for (std::size_t kz = 0; kz < nodes.size(); ++kz) {
        const double z = 0.5 * (z0 + z1) + 0.5 * (z1 - z0) * nodes[kz];
        const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
        for (std::size_t kp = 0; kp < nodes.size(); ++kp) {
          const double phi = 0.5 * (a + b) + 0.5 * (b - a) * nodes[kp];
          theta[0] = rho * std::cos(phi);
          theta[1] = rho * std::sin(phi);
          theta[2] = z;
          acc += weights[kz] * weights[kp] * density(theta);
        }
      }
      // dz dphi / (4 pi), Jacobians of the affine maps included
      out[r * sectors_ + s] = acc * 0.25 * (z1 - z0) * (b - a) / (4.0 * M_PI);
    }
  }
  return out;
}

double tv_between_histograms(const std::vector<double>& p, const std::vector<double>& q) {
  if (p.size() != q.size()) throw ConfigError("tv_between_histograms: size mismatch");
  double acc = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) acc += std::abs(p[k] - q[k]);
  return 0.5 * acc;
}

double tv_distance_to_density(const std::vector<Vec>& samples,
                              const std::function<double(const Vec&)>& density,
                              const SpherePartition& partition) {
  if (samples.empty()) throw ConfigError("tv_distance_to_density: empty sample set");
  std::vector<double> empirical(partition.bins(), 0.0);
  for (const auto& s : samples) empirical[partition.bin_of(s)] += 1.0;
  for (auto& e : empirical) e /= static_cast<double>(samples.size());
  return tv_between_histograms(empirical, partition.masses(density));
}

// ---------------------------------------------------------------------------
// Independence of disjoint increments

namespace {

std::vector<double> clipped_features(const Vec& x, const Vec& clip) {
  const int d = static_cast<int>(x.size());
  std::vector<double> f;
  f.reserve(d + d * (d - 1) / 2);
  for (int i = 0; i < d; ++i) f.push_back(std::clamp(x[i], -clip[i], clip[i]));
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j) f.push_back(f[i] * f[j]);
  return f;
}

Vec coordinate_sd(const std::vector<Vec>& xs) {
  const int d = static_cast<int>(xs.front().size());
  Vec mean = Vec::Zero(d), var = Vec::Zero(d);
  for (const auto& x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  for (const auto& x : xs) var.array() += (x - mean).array().square();
  var /= static_cast<double>(xs.size() - 1);
  return var.array().sqrt();
}

}  // namespace

IndependenceReport increment_independence_check(const std::vector<Vec>& inc1,
                                                const std::vector<Vec>& inc2, double clip) {
  if (inc1.size() != inc2.size() || inc1.empty())
    throw ConfigError("increment_independence_check: need matched nonempty ensembles");
  const std::size_t n = inc1.size();
  // Clip at `clip` standard deviations per coordinate: fixed bounded
  // functionals on the scale of each increment.
  const Vec clip1 = clip * coordinate_sd(inc1);
  const Vec clip2 = clip * coordinate_sd(inc2);
  const std::size_t m = clipped_features(inc1.front(), clip1).size();

  std::vector<std::vector<double>> u(n), w(n);
  for (std::size_t k = 0; k < n; ++k) {
    u[k] = clipped_features(inc1[k], clip1);
    w[k] = clipped_features(inc2[k], clip2);
  }
  std::vector<double> mu(m, 0.0), mw(m, 0.0);
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = 0; i < m; ++i) {
      mu[i] += u[k][i];
      mw[i] += w[k][i];
    }
  for (std::size_t i = 0; i < m; ++i) {
    mu[i] /= n;
    mw[i] /= n;
  }

  IndependenceReport rep;
  rep.n = static_cast<int>(n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      double cov = 0.0;
      for (std::size_t k = 0; k < n; ++k) cov += (u[k][i] - mu[i]) * (w[k][j] - mw[j]);
      cov /= n;
      double var = 0.0;
      for (std::size_t k = 0; k < n; ++k) {
        const double p = (u[k][i] - mu[i]) * (w[k][j] - mw[j]) - cov;
        var += p * p;
      }
      const double se = std::sqrt(var / (n - 1.0) / n);
      if (se > 0.0) rep.max_abs_z = std::max(rep.max_abs_z, std::abs(cov) / se);
    }
  rep.pass = rep.max_abs_z <= rep.threshold;
  return rep;
}

double ks_distance(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw ConfigError("ks_distance: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    if (a[i] <= b[j])
      ++i;
    else
      ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / a.size() - static_cast<double>(j) / b.size()));
  }
  return d;
}

// ---------------------------------------------------------------------------
// Gaussianity

GaussianityReport gaussianity_check(const std::vector<Vec>& x1) {
  if (x1.size() < 16) throw ConfigError("gaussianity_check: ensemble too small");
  const int d = static_cast<int>(x1.front().size());
  const double n = static_cast<double>(x1.size());
  GaussianityReport rep;
  rep.n = static_cast<int>(x1.size());

  Vec mean = Vec::Zero(d);
  for (const auto& x : x1) mean += x;
  mean /= n;
  Vec m2 = Vec::Zero(d), m3 = Vec::Zero(d), m4 = Vec::Zero(d);
  for (const auto& x : x1) {
    const Vec c = x - mean;
    m2.array() += c.array().square();
    m3.array() += c.array().cube();
    m4.array() += c.array().square().square();
  }
  m2 /= n;
  m3 /= n;
  m4 /= n;
  rep.kurtosis = m4.array() / m2.array().square();
  rep.skewness = m3.array() / m2.array().pow(1.5);
  rep.kurtosis_se = Vec::Constant(d, std::sqrt(24.0 / n));
  rep.skewness_se = Vec::Constant(d, std::sqrt(6.0 / n));

  // Fourth-moment isotropy after per-coordinate whitening:
  // E[Y_i^2 Y_j^2] - 1 - 2 corr_ij^2 ~ 0 for a Gaussian limit.
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j) {
      double cross = 0.0, corr = 0.0;
      for (const auto& x : x1) {
        const double yi = (x[i] - mean[i]) / std::sqrt(m2[i]);
        const double yj = (x[j] - mean[j]) / std::sqrt(m2[j]);
        cross += yi * yi * yj * yj;
        corr += yi * yj;
      }
      cross /= n;
      corr /= n;
      const double target = 1.0 + 2.0 * corr * corr;
      double var = 0.0;
      for (const auto& x : x1) {
        const double yi = (x[i] - mean[i]) / std::sqrt(m2[i]);
        const double yj = (x[j] - mean[j]) / std::sqrt(m2[j]);
        var += (yi * yi * yj * yj - cross) * (yi * yi * yj * yj - cross);
      }
      const double se = std::sqrt(var / (n - 1.0) / n);
      if (se > 0.0)
        rep.max_cross_kurtosis_z = std::max(rep.max_cross_kurtosis_z, std::abs(cross - target) / se);
    }
  return rep;
}

// ---------------------------------------------------------------------------
// Levy-area drift

LevyDriftEstimate levy_drift_from_lifts(const std::vector<RoughIncrement>& lifts, double t) {
  if (lifts.empty()) throw ConfigError("levy_drift_from_lifts: empty ensemble");
  const int d = lifts.front().dim();
  const double n = static_cast<double>(lifts.size());
  LevyDriftEstimate est;
  est.mean = Mat::Zero(d, d);
  est.se = Mat::Zero(d, d);
  for (const auto& r : lifts) est.mean += levy_area(r);
  est.mean /= (n * t);
  for (const auto& r : lifts) {
    const Mat dev = levy_area(r) / t - est.mean;
    est.se.array() += dev.array().square();
  }
  est.se = (est.se / (n - 1.0) / n).array().sqrt();
  return est;
}

LevyDriftEstimate levy_drift_estimate(const VelocityModel& model, const EnsembleOptions& opt) {
  EnsembleOptions o = opt;
  o.want_lift = true;
  auto results = run_velocity_ensemble(model, o);
  std::vector<RoughIncrement> lifts(results.size());
  for (std::size_t i = 0; i < results.size(); ++i) lifts[i] = results[i].lift;
  return levy_drift_from_lifts(lifts, o.horizon);
}

// ---------------------------------------------------------------------------
// Iterated-integral moment bound

MomentBoundReport moment_bound_check(const VelocityModel& model, int n,
                                     const std::vector<double>& horizons, int n_traj,
                                     std::uint64_t seed, int workers) {
  if (n != 1 && n != 2) throw ConfigError("moment_bound_check: n must be 1 or 2");
  if (horizons.size() < 3) throw ConfigError("moment_bound_check: need a horizon ladder");
  EnsembleOptions opt;
  opt.n_traj = n_traj;
  opt.sigma = 1.0;
  opt.horizon = horizons.back();
  opt.checkpoints = horizons;
  opt.seed = seed;
  opt.role = 0xB0;
  opt.workers = workers;
  auto results = run_velocity_ensemble(model, opt);

  MomentBoundReport rep;
  rep.horizons = horizons;
  rep.exponent_n = n;
  rep.ratios.assign(horizons.size(), 0.0);
  for (std::size_t h = 0; h < horizons.size(); ++h) {
    double acc = 0.0;
    for (const auto& r : results) {
      const double norm2 = r.at_checkpoints[h].squaredNorm();
      acc += n == 1 ? norm2 : norm2 * norm2;
    }
    rep.ratios[h] = acc / n_traj / std::pow(horizons[h], n);
  }
  // Log-log slope over the top half of the ladder; near 0 when the bound's
  // shape holds, near n for ballistic behaviour.
  const std::size_t h0 = horizons.size() / 2;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double m = static_cast<double>(horizons.size() - h0);
  for (std::size_t h = h0; h < horizons.size(); ++h) {
    const double x = std::log(horizons[h]), y = std::log(std::max(rep.ratios[h], 1e-300));
    sx += x; sy += y; sxx += x * x; sxy += x * y;
  }
  rep.tail_log_slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  rep.bounded = rep.tail_log_slope < 0.2;
  return rep;
}

}  // namespace kbm
