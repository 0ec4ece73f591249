// kbm: simulate anisotropic kinetic Brownian motion and its velocity zoo,
// lift paths to level-2 rough paths, develop them onto manifolds, estimate
// the diffusive limit, and run the verification suite.

#include "kbm/config.hpp"
#include "kbm/ensemble.hpp"
#include "kbm/geometry.hpp"
#include "kbm/io.hpp"
#include "kbm/roughpath.hpp"
#include "kbm/stats.hpp"
#include "kbm/verify.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>
#include <iostream>
#include <memory>

namespace {

using kbm::RunConfig;
using nlohmann::json;

constexpr int kExitConfig = 2;
constexpr int kExitBudget = 3;
constexpr int kExitNumerical = 4;

struct SinkGuard {
  std::ofstream file;
  std::ostream* stream = nullptr;

  explicit SinkGuard(const std::string& path) {
    if (path.empty()) {
      stream = &std::cout;
      return;
    }
    file.open(path, std::ios::binary);
    if (!file) throw kbm::ConfigError("cannot open output path '" + path + "'");
    stream = &file;
  }
};

double resolved_step(const RunConfig& cfg, const kbm::VelocityModel& model) {
  return cfg.step > 0.0 ? cfg.step : model.default_step();
}

int run_simulate(const RunConfig& cfg) {
  auto model = cfg.make_velocity_model();
  const double h = resolved_step(cfg, *model);
  cfg.enforce_budget(h);
  SinkGuard sink(cfg.output);
  kbm::RecordWriter writer(*sink.stream, kbm::parse_format(cfg.format), cfg.to_json());
  for (int traj = 0; traj < cfg.trajectories; ++traj) {
    const kbm::SimulatedPath path = kbm::simulate_path(*model, cfg.horizon, h, cfg.seed, 0x51,
                                                       traj, cfg.burn_in, std::nullopt,
                                                       cfg.output_stride);
    for (std::size_t k = 0; k < path.position.size(); ++k)
      writer.path_point(traj, path.position.times[k], path.position.points[k],
                        &path.velocities[k]);
  }
  return 0;
}

int run_lift(const RunConfig& cfg) {
  auto model = cfg.make_velocity_model();
  const double h = resolved_step(cfg, *model);
  cfg.enforce_budget(h);
  SinkGuard sink(cfg.output);
  kbm::RecordWriter writer(*sink.stream, kbm::parse_format(cfg.format), cfg.to_json());
  for (int traj = 0; traj < cfg.trajectories; ++traj) {
    for (double sigma : cfg.sigma) {
      kbm::EnsembleOptions opt;
      opt.n_traj = 1;
      opt.sigma = sigma;
      opt.horizon = cfg.horizon;
      opt.step = h;
      opt.seed = cfg.seed;
      opt.role = 0x52;
      opt.workers = 1;
      opt.burn_in = cfg.burn_in;
      opt.want_lift = true;
      const kbm::TrajectoryResult res = kbm::simulate_trajectory(*model, opt, traj);
      writer.lift_record(traj, sigma, res.lift, kbm::levy_area(res.lift));
    }
  }
  return 0;
}

int run_develop(const RunConfig& cfg) {
  auto model = cfg.make_velocity_model();
  auto manifold = cfg.make_manifold_model();
  if (manifold->dim() != model->dim())
    throw kbm::ConfigError("manifold dimension " + std::to_string(manifold->dim()) +
                           " does not match velocity dimension " + std::to_string(model->dim()));
  const double h = resolved_step(cfg, *model);
  cfg.enforce_budget(h);
  const double sigma = cfg.sigma.front();
  const double s4 = std::pow(sigma, 4);

  SinkGuard sink(cfg.output);
  kbm::RecordWriter writer(*sink.stream, kbm::parse_format(cfg.format), cfg.to_json());

  kbm::Vec q0;
  if (manifold->name() == "hyperbolic2") {
    q0.resize(2);
    q0 << 0.0, 1.0;
  } else {
    q0 = kbm::Vec::Zero(manifold->dim());
  }
  const kbm::Frame z0 = kbm::default_frame(*manifold, 0.0, q0);

  std::vector<kbm::FramePath> paths(cfg.trajectories);
  kbm::parallel_for_indexed(cfg.trajectories, cfg.workers, [&](std::size_t traj) {
    const kbm::SimulatedPath path = kbm::simulate_path(*model, s4 * cfg.horizon, h, cfg.seed, 0x53,
                                                       traj, cfg.burn_in, std::nullopt,
                                                       cfg.output_stride);
    const kbm::PathSample x =
        sigma == 1.0 ? path.position
                     : kbm::rescale_to_sigma(path.position, sigma, cfg.horizon,
                                             path.position.size());
    kbm::DevelopOptions opt;
    opt.step = cfg.develop_step;
    paths[traj] = manifold->time_dependent() ? kbm::develop_time_dependent(*manifold, z0, x, opt)
                                             : kbm::develop(*manifold, z0, x, opt);
  });
  for (int traj = 0; traj < cfg.trajectories; ++traj)
    for (std::size_t k = 0; k < paths[traj].times.size(); ++k)
      writer.frame_point(traj, paths[traj].times[k], paths[traj].frames[k]);
  return 0;
}

json gamma_to_json(const kbm::GammaEstimate& g) {
  json j{{"method", g.method},
         {"gamma", kbm::vec_to_json(g.gamma)},
         {"ci-half", kbm::vec_to_json(g.ci_half)},
         {"tail", kbm::vec_to_json(g.tail)}};
  if (g.n > 0) j["trajectories"] = g.n;
  return j;
}

int run_estimate(const RunConfig& cfg) {
  auto model = cfg.make_velocity_model();
  const double h = resolved_step(cfg, *model);
  cfg.enforce_budget(h);
  SinkGuard sink(cfg.output);
  kbm::RecordWriter writer(*sink.stream, kbm::parse_format(cfg.format), cfg.to_json());

  kbm::AutocovOptions ao;
  ao.horizon = cfg.estimate_horizon;
  ao.lag_dt = cfg.lag_step;
  ao.n_lags = cfg.lag_count;
  ao.step = h;
  ao.batches = cfg.batches;
  ao.seed = cfg.seed;
  ao.role = 0x54;
  ao.workers = cfg.workers;
  ao.burn_in = cfg.burn_in;
  const kbm::AutocovEstimate ac = kbm::autocovariance(*model, ao);

  json ac_json{{"lags", ac.lags}, {"sample-dt", ac.sample_dt}, {"horizon", ac.horizon}};
  json values = json::array(), ses = json::array();
  for (std::size_t k = 0; k < ac.lags.size(); ++k) {
    values.push_back(kbm::vec_to_json(ac.values[k]));
    ses.push_back(kbm::vec_to_json(ac.std_errors[k]));
  }
  ac_json["values"] = values;
  ac_json["std-errors"] = ses;
  writer.report("autocovariance", ac_json);

  const kbm::GammaEstimate ga = kbm::estimate_gamma_autocov(ac);
  writer.report("gamma-autocov", gamma_to_json(ga));

  const kbm::MixingFit fit = kbm::estimate_mixing_time(ac);
  writer.report("mixing-time", json{{"tau", fit.tau},
                                    {"prefactor", fit.prefactor},
                                    {"r2", fit.r2},
                                    {"window-size", fit.window_size}});

  kbm::EnsembleOptions eo;
  eo.n_traj = cfg.trajectories;
  eo.sigma = cfg.sigma.front();
  eo.step = h;
  eo.seed = cfg.seed;
  eo.role = 0x55;
  eo.workers = cfg.workers;
  eo.burn_in = cfg.burn_in;
  const kbm::EnsembleGammaReport ge = kbm::estimate_gamma_ensemble(*model, eo);
  json ge_json = gamma_to_json(ge.gamma);
  ge_json["covariance"] = kbm::mat_to_json(ge.covariance);
  ge_json["covariance-se"] = kbm::mat_to_json(ge.covariance_se);
  ge_json["mean"] = kbm::vec_to_json(ge.mean);
  ge_json["mean-se"] = kbm::vec_to_json(ge.mean_se);
  writer.report("gamma-ensemble", ge_json);

  kbm::EnsembleOptions lo = eo;
  lo.role = 0x56;
  const kbm::LevyDriftEstimate drift = kbm::levy_drift_estimate(*model, lo);
  writer.report("levy-drift", json{{"mean", kbm::mat_to_json(drift.mean)},
                                   {"se", kbm::mat_to_json(drift.se)}});
  return 0;
}

int run_verify(const RunConfig& cfg) {
  kbm::VerifyOptions opt;
  opt.seed = cfg.seed;
  opt.workers = cfg.workers;
  opt.progress = &std::cout;
  const auto results = kbm::run_acceptance(opt);

  int failed = 0;
  for (const auto& r : results)
    if (!r.pass) ++failed;
  std::cout << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " criteria FAILED")
            << " (" << results.size() << " run)" << std::endl;

  if (!cfg.output.empty()) {
    SinkGuard sink(cfg.output);
    kbm::RecordWriter writer(*sink.stream, kbm::parse_format(cfg.format), cfg.to_json());
    for (const auto& r : results)
      writer.report("criterion", json{{"id", r.id},
                                      {"name", r.name},
                                      {"pass", r.pass},
                                      {"detail", r.detail},
                                      {"seconds", r.seconds}});
  }
  return failed == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"anisotropic kinetic Brownian motion: simulation and verification"};
  app.set_config("--config", "", "read options from a key=value config file");

  RunConfig cfg;
  app.add_option("--model", cfg.model, "velocity model: sphere|ou|random-flight|spin2d|walk|markov-walk")
      ->capture_default_str();
  app.add_option("--dim", cfg.dim, "state dimension for models without a covariance diagonal")
      ->capture_default_str();
  app.add_option("--sigma-diag", cfg.sigma_diag, "covariance diagonal Sigma_ii (sphere, ou)")
      ->delimiter(',')
      ->capture_default_str();
  app.add_option("--walk-law", cfg.walk_law, "walk increment law: rademacher|uniform")
      ->capture_default_str();
  app.add_option("--chain-flip-prob", cfg.chain_flip_prob, "markov-walk per-coordinate flip probability")
      ->capture_default_str();
  app.add_option("--jump-rate", cfg.jump_rate, "random-flight jump rate")->capture_default_str();
  app.add_option("--sigma", cfg.sigma, "rescaling parameters sigma (comma separated)")
      ->delimiter(',')
      ->capture_default_str();
  app.add_option("--horizon", cfg.horizon, "rescaled horizon")->capture_default_str();
  app.add_option("--step", cfg.step, "integrator step at unit speed (0 = model default)")
      ->capture_default_str();
  app.add_option("--trajectories", cfg.trajectories, "trajectory count")->capture_default_str();
  app.add_option("--seed", cfg.seed, "base seed (also via KBM_SEED)")
      ->envname("KBM_SEED")
      ->capture_default_str();
  app.add_option("--workers", cfg.workers, "worker threads (0 = hardware, 1 = serial reference)")
      ->capture_default_str();
  app.add_option("--burn-in", cfg.burn_in, "physical burn-in time before statistics")
      ->capture_default_str();
  app.add_option("--manifold", cfg.manifold, "euclidean|sphere2|hyperbolic2|conformal")
      ->capture_default_str();
  app.add_option("--manifold-dim", cfg.manifold_dim, "manifold dimension (0 = velocity dim)")
      ->capture_default_str();
  app.add_option("--conformal-c0", cfg.conformal_c0, "conformal factor c(0)")->capture_default_str();
  app.add_option("--conformal-rate", cfg.conformal_rate, "conformal factor rate")
      ->capture_default_str();
  app.add_option("--conformal-form", cfg.conformal_form, "conformal factor form: exp|linear")
      ->capture_default_str();
  app.add_option("--develop-step", cfg.develop_step, "development ODE substep")
      ->capture_default_str();
  app.add_option("--lag-step", cfg.lag_step, "autocovariance lag spacing")->capture_default_str();
  app.add_option("--lag-count", cfg.lag_count, "autocovariance lag count")->capture_default_str();
  app.add_option("--batches", cfg.batches, "batch count for batch-means errors")
      ->capture_default_str();
  app.add_option("--estimate-horizon", cfg.estimate_horizon, "time-average horizon for estimate")
      ->capture_default_str();
  app.add_option("--output", cfg.output, "output file (default stdout)")->capture_default_str();
  app.add_option("--format", cfg.format, "output format: ndjson|csv")->capture_default_str();
  app.add_option("--output-stride", cfg.output_stride, "record every n-th node")
      ->capture_default_str();
  app.add_option("--budget-cap", cfg.budget_cap, "max unit-speed integrator steps per run")
      ->capture_default_str();

  app.require_subcommand(1);
  auto* sim = app.add_subcommand("simulate", "velocity and position paths");
  auto* lift = app.add_subcommand("lift", "rough increments and Levy areas of rescaled paths");
  auto* dev = app.add_subcommand("develop", "frame paths on a manifold");
  auto* est = app.add_subcommand("estimate", "autocovariance, gamma, mixing time, Levy drift");
  auto* ver = app.add_subcommand("verify", "run the acceptance suite");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help and friends
    app.exit(e);
    return kExitConfig;
  }

  if (sim->parsed()) cfg.subcommand = "simulate";
  if (lift->parsed()) cfg.subcommand = "lift";
  if (dev->parsed()) cfg.subcommand = "develop";
  if (est->parsed()) cfg.subcommand = "estimate";
  if (ver->parsed()) cfg.subcommand = "verify";

  try {
    cfg.validate();
    if (cfg.subcommand == "simulate") return run_simulate(cfg);
    if (cfg.subcommand == "lift") return run_lift(cfg);
    if (cfg.subcommand == "develop") return run_develop(cfg);
    if (cfg.subcommand == "estimate") return run_estimate(cfg);
    return run_verify(cfg);
  } catch (const kbm::ConfigError& e) {
    std::cerr << "config error: " << e.what() << std::endl;
    return kExitConfig;
  } catch (const kbm::BudgetError& e) {
    std::cerr << "budget error: " << e.what() << std::endl;
    return kExitBudget;
  } catch (const kbm::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << std::endl;
    // diagnostics record so failed runs still leave a parseable trace
    if (!cfg.output.empty()) {
      std::ofstream out(cfg.output, std::ios::binary);
      kbm::RecordWriter writer(out, kbm::OutputFormat::kNdjson, cfg.to_json());
      writer.report("error", nlohmann::json{{"what", e.what()}});
    }
    return kExitNumerical;
  }
}
