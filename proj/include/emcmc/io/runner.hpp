#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "emcmc/io/config.hpp"

namespace emcmc {

inline constexpr const char* kLibraryVersion = "0.1.0";

// Output directory for a command: the config's `out` verbatim when set,
// otherwise a deterministic "<command>-<model>[-<estimator>]" directory under
// $EMCMC_OUTPUT_ROOT (or ./runs when the variable is unset). No timestamps:
// rerunning the same config overwrites the same files, which is what the
// byte-for-byte reproducibility guarantee is about.
std::filesystem::path resolve_out_dir(const RunConfig& config, const std::string& command);

struct CommandResult {
  std::filesystem::path out_dir;
  std::vector<std::filesystem::path> files;  // everything the command wrote
  nlohmann::json info;  // command-specific facts worth echoing (tune: the
                        // recommended size), also recorded in metadata.json
};

// Draws a synthetic dataset from the configured model and writes
// dataset.csv, the latent states as states.csv, and metadata.json.
CommandResult simulate_command(const RunConfig& config);

// Particle-count sweep: replicated log-likelihood estimates at a
// representative parameter for each candidate size.
struct TuneRequest {
  RunConfig config;
  std::vector<int> candidates;
  int replicates = 30;
  std::vector<double> theta;  // representative parameter; see theta_source
  std::string pilot_trace;    // trace CSV whose post-burn-in marginal medians
                              // stand in for theta when none is supplied
};

// Writes tune.csv (n_particles, tau, neg_inf_fraction) and metadata.json
// recording the recommended size. With no explicit theta and no pilot trace
// the resolved config init is used.
CommandResult tune_command(const TuneRequest& request);

// The full experiment: obtain the dataset (simulate, or read config.data),
// fix the proposal covariance (read config.proposal, or freeze it from a
// pilot run before any recorded chain starts), then run config.chains
// independent chains in parallel, streaming each to its own trace file.
// Writes trace.csv (trace-<c>.csv when chains > 1), metadata.json,
// summary.txt, and dataset.csv when the data was simulated. A numerical
// failure mid-chain leaves that chain's partial trace on disk with a failure
// marker and rethrows.
CommandResult run_experiment(const RunConfig& config);

// Posterior overlap report for several finished runs: per-parameter Gaussian
// kernel densities (Silverman's bandwidth) on a grid shared across traces,
// written one CSV per parameter, plus a mean/sd table. The traces must agree
// on their parameter names. burn_in is the fraction of each trace dropped
// before comparison.
CommandResult compare_command(const std::vector<std::filesystem::path>& traces,
                              double burn_in, const std::filesystem::path& out_dir);

}  // namespace emcmc
