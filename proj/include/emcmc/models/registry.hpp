#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "emcmc/state_space.hpp"

// Model construction by name, per-model numeric overrides, the bundled
// observation schedules, and forward simulation of synthetic datasets.

namespace emcmc {

// Registered names:
//   ricker, theta-logistic, mate-limited, flexible-allee,
//   lorenz63, lotka-volterra, autoreg, linear-gaussian
const std::vector<std::string>& model_names();

// Overrides are model-specific numeric settings (e.g. lorenz63 accepts
// dt, inner_steps, obs_var). Unknown model names and unknown override
// keys are config errors.
std::unique_ptr<SsmModel> build_model(const std::string& name,
                                      const std::map<std::string, double>& overrides = {});

struct SimulationProtocol {
  int n_obs_steps;
  bool observe_initial;
};

SimulationProtocol default_protocol(const std::string& name);

struct SimulatedData {
  Dataset data;
  Eigen::MatrixXd states;  // state_dim x (steps + 1), column t holds x_t
};

// Forward-simulates states x_0..x_steps and observations y = P x + noise at
// steps 1..steps (plus step 0 when observe_initial). The noise comes from
// sim_obs_noise, so models with a floored filtering variance still generate
// exact data.
SimulatedData simulate_dataset(const SsmModel& model, const Eigen::VectorXd& theta_true,
                               int steps, bool observe_initial, RngStream& stream);

}  // namespace emcmc
