#pragma once

#include "kbm/core.hpp"
#include "kbm/geometry.hpp"
#include "kbm/models.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

// Resolved run configuration. Every field has a default and every default is
// echoed into the output header; re-running the header's config reproduces
// the file byte for byte.

namespace kbm {

class BudgetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  std::string subcommand = "simulate";

  // velocity model
  std::string model = "sphere";
  int dim = 3;
  std::vector<double> sigma_diag = {1.0, 4.0, 9.0};  // covariance diagonal
  std::string walk_law = "rademacher";
  double chain_flip_prob = 0.3;
  double jump_rate = 1.0;

  // run geometry
  std::vector<double> sigma = {1.0};  // rescaling parameters
  double horizon = 1.0;               // rescaled horizon
  double step = 0.0;                  // 0 = model default
  int trajectories = 4;
  std::uint64_t seed = 12345;
  int workers = 0;
  double burn_in = 0.0;

  // manifold (develop)
  std::string manifold = "euclidean";
  int manifold_dim = 0;  // 0 = velocity dimension
  double conformal_c0 = 1.0;
  double conformal_rate = 0.5;
  std::string conformal_form = "exp";
  double develop_step = 1e-3;

  // estimators
  double lag_step = 0.05;
  int lag_count = 400;
  int batches = 16;
  double estimate_horizon = 1e4;  // time-average horizon

  // output
  std::string output;  // empty = stdout
  std::string format = "ndjson";
  std::size_t output_stride = 1;
  double budget_cap = 2e10;  // unit-speed integrator steps across all runs

  void validate() const;

  // Total unit-speed steps implied by the run; throws BudgetError above cap.
  double budget(double resolved_step) const;
  void enforce_budget(double resolved_step) const;

  std::unique_ptr<VelocityModel> make_velocity_model() const;
  std::unique_ptr<ManifoldModel> make_manifold_model() const;

  nlohmann::json to_json() const;
  static RunConfig from_json(const nlohmann::json& j);
};

}  // namespace kbm
