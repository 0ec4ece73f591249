#pragma once

#include "kbm/ensemble.hpp"

#include <functional>
#include <string>
#include <vector>

// Estimators: autocovariance with batch-means errors, the limit covariance
// gamma_i = 2 int_0^inf E[v_0^i v_t^i] dt by two independent routes, mixing
// time, total-variation distance on an equal-area sphere partition, and the
// Gaussianity / independence / Levy-drift / moment-bound diagnostics.

namespace kbm {

// ---------------------------------------------------------------------------
// Autocovariance (time average over one long stationary trajectory)

struct AutocovEstimate {
  std::vector<double> lags;
  std::vector<Vec> values;                     // per lag, per coordinate
  std::vector<Vec> std_errors;                 // batch-means SE
  std::vector<std::vector<Vec>> batch_values;  // [batch][lag]
  double sample_dt = 0.0;
  double horizon = 0.0;
  int dim = 0;
};

struct AutocovOptions {
  double horizon = 1e4;
  double lag_dt = 0.05;  // lag grid spacing = velocity sampling spacing
  int n_lags = 400;      // lags 0 .. (n_lags-1) * lag_dt
  double step = 0.0;     // integrator step; 0 = model default
  int batches = 16;
  std::uint64_t seed = 1;
  std::uint64_t role = 0xAC;
  double burn_in = 0.0;
  std::optional<VelocityState> fixed_start;
  int workers = 0;  // lag-sum loop only; the trajectory itself is serial
};

AutocovEstimate autocovariance(const VelocityModel& model, const AutocovOptions& opt);

// ---------------------------------------------------------------------------
// Gamma

struct GammaEstimate {
  Vec gamma;
  Vec ci_half;  // 95% half-widths
  Vec tail;     // fitted-exponential tail added beyond the truncation lag
  std::vector<int> truncation;
  std::string method;  // "autocov-integral" | "ensemble-variance"
  int n = 0;           // trajectories (ensemble route)
};

// Trapezoid of 2 * autocov up to the first lag below twice its standard
// error, plus the fitted exponential tail. Throws NumericalError when the
// autocovariance never decays below noise (model not mixing).
GammaEstimate estimate_gamma_autocov(const AutocovEstimate& ac);

struct EnsembleGammaReport {
  GammaEstimate gamma;  // diagonal of the covariance of X^sigma_1
  Mat covariance;       // full empirical covariance (off-diagonals ~ 0)
  Mat covariance_se;
  Vec mean, mean_se;
  int n = 0;
};

EnsembleGammaReport gamma_from_samples(const std::vector<Vec>& x1);
// Convenience wrapper: per-coordinate variance of X^sigma_1 over independent
// stationary-start trajectories.
EnsembleGammaReport estimate_gamma_ensemble(const VelocityModel& model, const EnsembleOptions& opt);

// Per-coordinate agreement |g1 - g2| <= z * sqrt(se1^2 + se2^2), with z the
// Bonferroni-adjusted joint 95% quantile across coordinates.
bool gammas_agree_joint_ci(const GammaEstimate& a, const GammaEstimate& b);

// ---------------------------------------------------------------------------
// Mixing time

struct MixingFit {
  double tau = 0.0;
  double prefactor = 0.0;
  double r2 = 0.0;  // on the log scale, over the fitted window
  int window_size = 0;
  bool ok = false;
};

// Least squares on log|value| over the signal-dominated window (|value| >
// 2 SE). Throws ConfigError with fewer than 5 usable lags.
MixingFit fit_exponential_decay(const std::vector<double>& lags, const std::vector<double>& values,
                                const std::vector<double>& std_errors);
// Fit on the summed-over-coordinates autocovariance.
MixingFit estimate_mixing_time(const AutocovEstimate& ac);
MixingFit estimate_mixing_time(const AutocovEstimate& ac, int coordinate);

// ---------------------------------------------------------------------------
// Total variation on an equal-area partition

// Deterministic equal-area partition: equal arcs for d = 2; for d = 3 a
// latitude/longitude grid of R equal-height z-bands times S sectors
// (R = 12, S = 16 at the default 192 bins).
class SpherePartition {
 public:
  SpherePartition(int dim, int bins);

  int dim() const { return dim_; }
  int bins() const { return bins_; }
  int rings() const { return rings_; }
  int bin_of(const Vec& theta) const;

  // Per-bin mass of a density given w.r.t. the uniform probability measure;
  // Gauss-Legendre cubature per bin.
  std::vector<double> masses(const std::function<double(const Vec&)>& density) const;

 private:
  int dim_, bins_, rings_, sectors_;
};

double tv_between_histograms(const std::vector<double>& p, const std::vector<double>& q);
double tv_distance_to_density(const std::vector<Vec>& samples,
                              const std::function<double(const Vec&)>& density,
                              const SpherePartition& partition);

// ---------------------------------------------------------------------------
// Limit diagnostics

struct IndependenceReport {
  double max_abs_z = 0.0;  // max |cross-covariance| / SE over feature pairs
  double threshold = 3.0;
  bool pass = false;
  int n = 0;
};

// Bounded functionals (coordinates clipped at `clip` standard deviations,
// pairwise products) of two increments; all cross-covariances within 3 SE
// of zero under independence.
IndependenceReport increment_independence_check(const std::vector<Vec>& inc1,
                                                const std::vector<Vec>& inc2, double clip = 2.0);

// Two-sample Kolmogorov-Smirnov distance.
double ks_distance(std::vector<double> a, std::vector<double> b);

struct GaussianityReport {
  Vec kurtosis, kurtosis_se;  // SE under the Gaussian null, sqrt(24/n)
  Vec skewness, skewness_se;  // sqrt(6/n)
  double max_cross_kurtosis_z = 0.0;  // isotropy of fourth moments after whitening
  int n = 0;
};

GaussianityReport gaussianity_check(const std::vector<Vec>& x1);

struct LevyDriftEstimate {
  Mat mean;  // ensemble mean of the Levy area over [0, t], divided by t
  Mat se;
};

LevyDriftEstimate levy_drift_from_lifts(const std::vector<RoughIncrement>& lifts, double t);
LevyDriftEstimate levy_drift_estimate(const VelocityModel& model, const EnsembleOptions& opt);

struct MomentBoundReport {
  std::vector<double> horizons;
  std::vector<double> ratios;  // E |int_0^T v|^{2n} / T^n
  int exponent_n = 1;
  double tail_log_slope = 0.0;  // d log ratio / d log T over the top half
  bool bounded = false;
};

// Checks the shape E |int_0^T v dt|^{2n} <= C_n T^n across a dyadic ladder of
// horizons; the constant is unknown, only growth is flagged.
MomentBoundReport moment_bound_check(const VelocityModel& model, int n,
                                     const std::vector<double>& horizons, int n_traj,
                                     std::uint64_t seed, int workers = 0);

}  // namespace kbm
