#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "emcmc/mcmc.hpp"
#include "emcmc/state_space.hpp"

namespace emcmc {

// Estimator names as they appear in config files and on the command line:
// bpf, enkf, enkf-unbiased, enkf-correlated, enkf-rqmc, kalman.
const std::vector<std::string>& estimator_names();
EstimatorKind estimator_from_name(const std::string& name);
const std::string& estimator_name(EstimatorKind kind);

// Everything needed to reproduce an experiment. Optional fields are filled
// by resolve_config from the model's defaults; a resolved config serializes
// with every decision made explicit, which is what run metadata records.
struct RunConfig {
  // Model.
  std::string model;
  std::map<std::string, double> overrides;  // model-specific numeric settings

  // Dataset: read from `data` when set, otherwise simulate. The simulation
  // fields resolve from the model's bundled observation schedule.
  std::string data;  // CSV path; empty means simulate
  std::optional<int> steps;
  std::optional<bool> observe_initial;
  std::vector<double> theta_true;  // empty resolves to the model default

  // Likelihood estimator.
  EstimatorKind estimator = EstimatorKind::Enkf;
  int n_particles = 100;
  double sigma_u = 0.1;          // correlated estimator only
  bool early_rejection = false;  // enkf / enkf-rqmc / enkf-correlated only

  // Random-walk proposal: covariance read from `proposal` (a CSV matrix)
  // when set, otherwise estimated from a short pilot run that uses an
  // isotropic pilot_step^2 covariance.
  std::string proposal;  // CSV path; empty means run a pilot
  int pilot_iterations = 2000;
  double pilot_step = 0.1;
  std::optional<double> scale;  // resolves to 2.562^2 / param_dim

  // Chain.
  int iterations = 10000;
  double burn_in = 0.1;      // fraction of iterations dropped by diagnostics
  std::vector<double> init;  // empty resolves to theta_true / model default
  int chains = 1;            // independent chains run in parallel

  // Seeds. Dataset simulation draws from RngStream(seed_master, seed_data);
  // chain c draws from RngStream(seed_master, seed_chain).child(c); the
  // pilot run and the noise probe use child(1000000) and child(1000001) of
  // the chain stream so no recorded chain shares randomness with them.
  std::uint64_t seed_master = 1;
  std::uint64_t seed_data = 11;
  std::uint64_t seed_chain = 12;

  std::string out;  // output directory; empty resolves under the output root
};

// Parses a config object. Accepts either a bare config or a finished run's
// metadata (the object under its "config" key), so metadata.json can be fed
// straight back in to reproduce the run. Unknown keys are config errors.
// Parsing does not validate: command-line flags may still complete the
// config, so the checks below run when a command resolves it.
RunConfig config_from_json(const nlohmann::json& j);
RunConfig load_config(const std::filesystem::path& path);

// Serializes with unset optionals and empty fields omitted, so a resolved
// config round-trips exactly: config_from_json(config_to_json(c)) == c.
nlohmann::json config_to_json(const RunConfig& config);

// Range and flag-compatibility checks that need no model. Throws config
// errors.
void validate_config(const RunConfig& config);

// Checks against the built model: kalman requires a linear-Gaussian model,
// correlated/RQMC estimators require a declared per-step normal draw count
// (and the correlated estimator a deterministic ensemble init), and any
// supplied theta-sized vectors must match param_dim.
void validate_config(const RunConfig& config, const SsmModel& model);

// Fills every optional from the model's defaults: simulation length and
// schedule from the bundled protocol, theta_true and init from the model
// default, scale from the dimension rule. Validates first.
RunConfig resolve_config(RunConfig config, const SsmModel& model);

}  // namespace emcmc
