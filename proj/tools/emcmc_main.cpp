// Command-line front end: simulate synthetic datasets, tune particle counts,
// run sampling experiments, and compare finished traces. Every command takes
// an optional --config JSON file (a bare config object, or a previous run's
// metadata.json) with individual flags overriding the file's keys. Exit
// codes: 0 success, 2 invalid configuration or arguments, 3 numerical
// failure. Errors are reported as one JSON object on stderr.

#include <charconv>
#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "emcmc/error.hpp"
#include "emcmc/io/config.hpp"
#include "emcmc/io/runner.hpp"

namespace {

void emit_error(const std::string& kind, const std::string& message) {
  const nlohmann::json j = {{"error", {{"kind", kind}, {"message", message}}}};
  std::cerr << j.dump() << "\n";
}

const char* kind_name(emcmc::ErrorKind kind) {
  switch (kind) {
    case emcmc::ErrorKind::Config: return "config";
    case emcmc::ErrorKind::Dimension: return "dimension";
    case emcmc::ErrorKind::Numerical: return "numerical";
  }
  return "internal";
}

double parse_number(const std::string& text, const std::string& what) {
  double value = 0.0;
  const char* begin = text.data();
  const char* end = begin + text.size();
  const auto result = std::from_chars(begin, end, value);
  if (result.ec != std::errc() || result.ptr != end)
    emcmc::throw_config(what + ": '" + text + "' is not a number");
  return value;
}

std::vector<double> parse_number_list(const std::string& text, const std::string& what) {
  std::vector<double> values;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t comma = text.find(',', start);
    const std::string item =
        text.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    values.push_back(parse_number(item, what));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return values;
}

std::vector<int> parse_int_list(const std::string& text, const std::string& what) {
  std::vector<int> values;
  for (double v : parse_number_list(text, what)) {
    if (v != static_cast<double>(static_cast<int>(v)))
      emcmc::throw_config(what + ": expected integers");
    values.push_back(static_cast<int>(v));
  }
  return values;
}

// All flag values a subcommand may collect; which ones were actually given
// is read back through CLI11's per-option counts.
struct Flags {
  std::string config_path;
  std::string model;
  std::vector<std::string> overrides;  // key=value pairs
  std::string data;
  int steps = 0;
  bool observe_initial = false;
  std::string theta_true;
  std::string estimator;
  int n_particles = 0;
  double sigma_u = 0.0;
  bool early_rejection = false;
  std::string proposal;
  int pilot_iterations = 0;
  double pilot_step = 0.0;
  double scale = 0.0;
  int iterations = 0;
  double burn_in = 0.0;
  std::string init;
  int chains = 0;
  std::uint64_t seed_master = 0;
  std::uint64_t seed_data = 0;
  std::uint64_t seed_chain = 0;
  std::string out;
};

void add_common_flags(CLI::App* cmd, Flags& f) {
  cmd->add_option("--config", f.config_path,
                  "JSON config file (or a previous run's metadata.json)");
  cmd->add_option("--model", f.model, "model name from the registry");
  cmd->add_option("--override", f.overrides,
                  "model setting as key=value (repeatable)");
  cmd->add_option("--seed-master", f.seed_master, "master seed");
  cmd->add_option("--seed-data", f.seed_data, "dataset simulation seed");
  cmd->add_option("--out", f.out, "output directory");
}

void add_dataset_flags(CLI::App* cmd, Flags& f) {
  cmd->add_option("--steps", f.steps, "observation steps to simulate");
  cmd->add_flag("--observe-initial,!--no-observe-initial", f.observe_initial,
                "also observe the initial state");
  cmd->add_option("--theta-true", f.theta_true,
                  "simulation parameters, comma separated");
}

void add_run_flags(CLI::App* cmd, Flags& f) {
  cmd->add_option("--data", f.data, "read this dataset CSV instead of simulating");
  cmd->add_option("--estimator", f.estimator,
                  "bpf|enkf|enkf-unbiased|enkf-correlated|enkf-rqmc|kalman");
  cmd->add_option("--n-particles,--particles", f.n_particles,
                  "ensemble / particle count");
  cmd->add_option("--sigma-u", f.sigma_u,
                  "Crank-Nicolson mixing rate (correlated estimator)");
  cmd->add_flag("--early-rejection,!--no-early-rejection", f.early_rejection,
                "abandon filter passes once the acceptance test is decided");
  cmd->add_option("--proposal", f.proposal, "proposal covariance CSV");
  cmd->add_option("--pilot-iters", f.pilot_iterations,
                  "pilot run length when no proposal file is given");
  cmd->add_option("--pilot-step", f.pilot_step, "pilot proposal step size");
  cmd->add_option("--scale", f.scale, "proposal covariance multiplier");
  cmd->add_option("--iters,--iterations", f.iterations, "chain iterations");
  cmd->add_option("--burn-in", f.burn_in, "burn-in fraction in [0,1)");
  cmd->add_option("--init", f.init, "initial parameters, comma separated");
  cmd->add_option("--chains", f.chains, "independent chains run in parallel");
  cmd->add_option("--seed-chain", f.seed_chain, "chain seed");
}

// Whether the user passed this flag on this subcommand (false when the
// subcommand does not even register it).
bool given(const CLI::App& cmd, const std::string& name) {
  const CLI::Option* option = cmd.get_option_no_throw(name);
  return option != nullptr && option->count() > 0;
}

// Start from the config file when given, then overlay exactly the flags the
// user passed on this subcommand.
emcmc::RunConfig assemble_config(const CLI::App& cmd, const Flags& f) {
  emcmc::RunConfig cfg;
  if (given(cmd, "--config")) cfg = emcmc::load_config(f.config_path);
  if (given(cmd, "--model")) cfg.model = f.model;
  if (given(cmd, "--override")) {
    for (const std::string& pair : f.overrides) {
      const std::size_t eq = pair.find('=');
      if (eq == std::string::npos || eq == 0)
        emcmc::throw_config("--override expects key=value, got '" + pair + "'");
      cfg.overrides[pair.substr(0, eq)] =
          parse_number(pair.substr(eq + 1), "--override " + pair.substr(0, eq));
    }
  }
  if (given(cmd, "--data")) cfg.data = f.data;
  if (given(cmd, "--steps")) cfg.steps = f.steps;
  if (given(cmd, "--observe-initial") || given(cmd, "--no-observe-initial"))
    cfg.observe_initial = f.observe_initial;
  if (given(cmd, "--theta-true"))
    cfg.theta_true = parse_number_list(f.theta_true, "--theta-true");
  if (given(cmd, "--estimator")) cfg.estimator = emcmc::estimator_from_name(f.estimator);
  if (given(cmd, "--n-particles")) cfg.n_particles = f.n_particles;
  if (given(cmd, "--sigma-u")) cfg.sigma_u = f.sigma_u;
  if (given(cmd, "--early-rejection") || given(cmd, "--no-early-rejection"))
    cfg.early_rejection = f.early_rejection;
  if (given(cmd, "--proposal")) cfg.proposal = f.proposal;
  if (given(cmd, "--pilot-iters")) cfg.pilot_iterations = f.pilot_iterations;
  if (given(cmd, "--pilot-step")) cfg.pilot_step = f.pilot_step;
  if (given(cmd, "--scale")) cfg.scale = f.scale;
  if (given(cmd, "--iters")) cfg.iterations = f.iterations;
  if (given(cmd, "--burn-in")) cfg.burn_in = f.burn_in;
  if (given(cmd, "--init")) cfg.init = parse_number_list(f.init, "--init");
  if (given(cmd, "--chains")) cfg.chains = f.chains;
  if (given(cmd, "--seed-master")) cfg.seed_master = f.seed_master;
  if (given(cmd, "--seed-data")) cfg.seed_data = f.seed_data;
  if (given(cmd, "--seed-chain")) cfg.seed_chain = f.seed_chain;
  if (given(cmd, "--out")) cfg.out = f.out;
  return cfg;
}

void report_written(const emcmc::CommandResult& result) {
  std::cout << "wrote " << result.out_dir.string() << "\n";
  for (const auto& file : result.files)
    std::cout << "  " << file.filename().string() << "\n";
}

int run_cli(int argc, char** argv) {
  CLI::App app{"State space model inference with estimated-likelihood MCMC"};
  app.require_subcommand(1);
  Flags f;

  CLI::App* simulate = app.add_subcommand("simulate", "draw a synthetic dataset");
  add_common_flags(simulate, f);
  add_dataset_flags(simulate, f);

  CLI::App* tune = app.add_subcommand("tune", "sweep particle counts for an estimator");
  add_common_flags(tune, f);
  add_dataset_flags(tune, f);
  add_run_flags(tune, f);
  std::string candidates_text;
  int replicates = 30;
  std::string theta_text;
  std::string pilot_trace;
  tune->add_option("--candidates", candidates_text, "candidate sizes, comma separated")
      ->required();
  tune->add_option("--replicates", replicates, "estimates per candidate (>= 10)");
  tune->add_option("--theta", theta_text,
                   "representative parameters, comma separated");
  tune->add_option("--pilot-trace", pilot_trace,
                   "trace CSV whose post-burn-in medians pick the representative theta");

  CLI::App* run = app.add_subcommand("run", "run a sampling experiment");
  add_common_flags(run, f);
  add_dataset_flags(run, f);
  add_run_flags(run, f);

  CLI::App* compare = app.add_subcommand("compare", "overlay posteriors from finished traces");
  std::vector<std::string> trace_args;
  double compare_burn_in = 0.1;
  std::string compare_out;
  compare->add_option("traces", trace_args, "trace CSV files")->required();
  compare->add_option("--burn-in", compare_burn_in, "burn-in fraction in [0,1)");
  compare->add_option("--out", compare_out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    emit_error("config", e.what());
    return 2;
  }

  if (simulate->parsed()) {
    const auto result = emcmc::simulate_command(assemble_config(*simulate, f));
    report_written(result);
    return 0;
  }
  if (tune->parsed()) {
    emcmc::TuneRequest request;
    request.config = assemble_config(*tune, f);
    request.candidates = parse_int_list(candidates_text, "--candidates");
    request.replicates = replicates;
    if (given(*tune, "--theta")) request.theta = parse_number_list(theta_text, "--theta");
    request.pilot_trace = pilot_trace;
    const auto result = emcmc::tune_command(request);
    report_written(result);
    std::cout << "recommended n_particles: " << result.info.at("recommended_n").get<int>();
    if (!result.info.at("threshold_met").get<bool>())
      std::cout << " (no candidate met the noise target; largest returned)";
    std::cout << "\n";
    return 0;
  }
  if (run->parsed()) {
    const auto result = emcmc::run_experiment(assemble_config(*run, f));
    report_written(result);
    return 0;
  }
  if (compare->parsed()) {
    std::vector<std::filesystem::path> traces(trace_args.begin(), trace_args.end());
    std::filesystem::path out_dir;
    if (!compare_out.empty()) {
      out_dir = compare_out;
    } else {
      emcmc::RunConfig stub;
      stub.model = "traces";
      out_dir = emcmc::resolve_out_dir(stub, "compare");
    }
    const auto result = emcmc::compare_command(traces, compare_burn_in, out_dir);
    report_written(result);
    return 0;
  }
  emcmc::throw_config("no command given");
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run_cli(argc, argv);
  } catch (const emcmc::Error& e) {
    emit_error(kind_name(e.kind()), e.what());
    return e.kind() == emcmc::ErrorKind::Numerical ? 3 : 2;
  } catch (const std::exception& e) {
    emit_error("internal", e.what());
    return 3;
  }
}
