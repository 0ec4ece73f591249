#include "kbm/config.hpp"

#include <nlohmann/json.hpp>

#include <cmath>

namespace kbm {

using nlohmann::json;

void RunConfig::validate() const {
  const bool known = subcommand == "simulate" || subcommand == "lift" || subcommand == "develop" ||
                     subcommand == "estimate" || subcommand == "verify";
  if (!known) throw ConfigError("unknown subcommand '" + subcommand + "'");
  if (dim < 2 || dim > kMaxDim) throw ConfigError("dim must be in [2, 16]");
  if (sigma.empty()) throw ConfigError("sigma list must not be empty");
  for (double s : sigma)
    if (!(s > 0.0) || !std::isfinite(s)) throw ConfigError("sigma values must be positive");
  for (double v : sigma_diag)
    if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError("sigma-diag entries must be positive");
  if (!(horizon > 0.0)) throw ConfigError("horizon must be positive");
  if (step < 0.0) throw ConfigError("step must be nonnegative");
  if (trajectories <= 0) throw ConfigError("trajectories must be positive");
  if (workers < 0) throw ConfigError("workers must be nonnegative");
  if (burn_in < 0.0) throw ConfigError("burn-in must be nonnegative");
  if (!(develop_step > 0.0)) throw ConfigError("develop-step must be positive");
  if (!(lag_step > 0.0) || lag_count < 2) throw ConfigError("bad lag grid");
  if (batches < 2) throw ConfigError("batches must be at least 2");
  if (!(estimate_horizon > 0.0)) throw ConfigError("estimate-horizon must be positive");
  if (output_stride < 1) throw ConfigError("output-stride must be at least 1");
  if (!(budget_cap > 0.0)) throw ConfigError("budget-cap must be positive");
  if (format != "ndjson" && format != "csv") throw ConfigError("format must be ndjson or csv");
  if (format == "csv" && subcommand != "simulate")
    throw ConfigError("csv output supports flat path dumps only (subcommand simulate)");
  make_velocity_model();  // validates model id and parameters
  if (subcommand == "develop") make_manifold_model();
}

double RunConfig::budget(double resolved_step) const {
  double s4_sum = 0.0;
  for (double s : sigma) s4_sum += std::pow(s, 4);
  double steps = static_cast<double>(trajectories) * (s4_sum * horizon + burn_in) / resolved_step;
  if (subcommand == "estimate") steps += estimate_horizon / resolved_step;
  return steps;
}

void RunConfig::enforce_budget(double resolved_step) const {
  const double b = budget(resolved_step);
  if (b > budget_cap)
    throw BudgetError("run budget " + std::to_string(b) + " steps exceeds cap " +
                      std::to_string(budget_cap) +
                      " (sigma^4 * horizon * trajectories / step); raise --budget-cap or shrink "
                      "the run");
}

std::unique_ptr<VelocityModel> RunConfig::make_velocity_model() const {
  Vec variances(static_cast<int>(sigma_diag.size()));
  for (std::size_t i = 0; i < sigma_diag.size(); ++i) variances[static_cast<int>(i)] = sigma_diag[i];
  WalkLaw law;
  if (walk_law == "rademacher")
    law = WalkLaw::kRademacher;
  else if (walk_law == "uniform")
    law = WalkLaw::kUniform;
  else
    throw ConfigError("unknown walk law '" + walk_law + "'");
  const double param = model == "markov-walk" ? chain_flip_prob : jump_rate;
  if (model == "sphere" || model == "ou") {
    if (sigma_diag.empty()) throw ConfigError(model + " needs a covariance diagonal");
    return make_model(model, static_cast<int>(sigma_diag.size()), variances, law, param);
  }
  return make_model(model, dim, Vec(), law, param);
}

std::unique_ptr<ManifoldModel> RunConfig::make_manifold_model() const {
  const int d = manifold_dim > 0 ? manifold_dim : make_velocity_model()->dim();
  return make_manifold(manifold, d, conformal_c0, conformal_rate, conformal_form);
}

json RunConfig::to_json() const {
  return json{{"subcommand", subcommand},
              {"model", model},
              {"dim", dim},
              {"sigma-diag", sigma_diag},
              {"walk-law", walk_law},
              {"chain-flip-prob", chain_flip_prob},
              {"jump-rate", jump_rate},
              {"sigma", sigma},
              {"horizon", horizon},
              {"step", step},
              {"trajectories", trajectories},
              {"seed", seed},
              {"workers", workers},
              {"burn-in", burn_in},
              {"manifold", manifold},
              {"manifold-dim", manifold_dim},
              {"conformal-c0", conformal_c0},
              {"conformal-rate", conformal_rate},
              {"conformal-form", conformal_form},
              {"develop-step", develop_step},
              {"lag-step", lag_step},
              {"lag-count", lag_count},
              {"batches", batches},
              {"estimate-horizon", estimate_horizon},
              {"output", output},
              {"format", format},
              {"output-stride", output_stride},
              {"budget-cap", budget_cap}};
}

RunConfig RunConfig::from_json(const json& j) {
  RunConfig c;
  c.subcommand = j.value("subcommand", c.subcommand);
  c.model = j.value("model", c.model);
  c.dim = j.value("dim", c.dim);
  c.sigma_diag = j.value("sigma-diag", c.sigma_diag);
  c.walk_law = j.value("walk-law", c.walk_law);
  c.chain_flip_prob = j.value("chain-flip-prob", c.chain_flip_prob);
  c.jump_rate = j.value("jump-rate", c.jump_rate);
  c.sigma = j.value("sigma", c.sigma);
  c.horizon = j.value("horizon", c.horizon);
  c.step = j.value("step", c.step);
  c.trajectories = j.value("trajectories", c.trajectories);
  c.seed = j.value("seed", c.seed);
  c.workers = j.value("workers", c.workers);
  c.burn_in = j.value("burn-in", c.burn_in);
  c.manifold = j.value("manifold", c.manifold);
  c.manifold_dim = j.value("manifold-dim", c.manifold_dim);
  c.conformal_c0 = j.value("conformal-c0", c.conformal_c0);
  c.conformal_rate = j.value("conformal-rate", c.conformal_rate);
  c.conformal_form = j.value("conformal-form", c.conformal_form);
  c.develop_step = j.value("develop-step", c.develop_step);
  c.lag_step = j.value("lag-step", c.lag_step);
  c.lag_count = j.value("lag-count", c.lag_count);
  c.batches = j.value("batches", c.batches);
  c.estimate_horizon = j.value("estimate-horizon", c.estimate_horizon);
  c.output = j.value("output", c.output);
  c.format = j.value("format", c.format);
  c.output_stride = j.value("output-stride", c.output_stride);
  c.budget_cap = j.value("budget-cap", c.budget_cap);
  return c;
}

}  // namespace kbm
