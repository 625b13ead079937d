#include "emcmc/io/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <exception>
#include <fstream>
#include <thread>
#include <vector>

#include "emcmc/diagnostics.hpp"
#include "emcmc/error.hpp"
#include "emcmc/io/csv.hpp"
#include "emcmc/models/registry.hpp"

namespace emcmc {

namespace {

// Reserved children of the chain stream. Recorded chains use child(c) for
// chain c, so the auxiliary draws below can never collide with them.
constexpr std::uint64_t kPilotChild = 1000000;
constexpr std::uint64_t kProbeChild = 1000001;
constexpr std::uint64_t kTuneChild = 1000002;

constexpr int kProbeReplicates = 30;

std::string iso_utc_now() {
  const std::time_t t =
      std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

Eigen::VectorXd to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::vector<double> to_std(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

void write_json_file(const std::filesystem::path& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw_config("cannot open " + path.string() + " for writing");
  out << j.dump(2) << '\n';
  if (!out) throw_config("failed while writing " + path.string());
}

// Rows left after dropping the burn-in prefix.
Eigen::MatrixXd post_burn(const Eigen::MatrixXd& samples, double burn_in) {
  const Eigen::Index drop =
      static_cast<Eigen::Index>(std::floor(burn_in * static_cast<double>(samples.rows())));
  return samples.bottomRows(samples.rows() - drop);
}

double column_median(const Eigen::Ref<const Eigen::VectorXd>& column) {
  std::vector<double> v(column.data(), column.data() + column.size());
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  double upper = v[mid];
  if (v.size() % 2 == 1) return upper;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid) - 1,
                   v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (v[mid - 1] + upper);
}

Eigen::VectorXd column_medians(const Eigen::MatrixXd& samples) {
  Eigen::VectorXd medians(samples.cols());
  for (Eigen::Index j = 0; j < samples.cols(); ++j)
    medians(j) = column_median(samples.col(j));
  return medians;
}

// Dataset per the resolved config: read when `data` is set, simulate
// otherwise (the latent states go to *states when requested).
Dataset obtain_dataset(const RunConfig& cfg, const SsmModel& model,
                       Eigen::MatrixXd* states) {
  if (!cfg.data.empty()) {
    Dataset data = read_dataset_csv(cfg.data);
    data.validate(model.obs_dim());
    return data;
  }
  RngStream rng(cfg.seed_master, cfg.seed_data);
  SimulatedData sim = simulate_dataset(model, to_vector(cfg.theta_true), *cfg.steps,
                                       *cfg.observe_initial, rng);
  if (states) *states = sim.states;
  return sim.data;
}

// The sampler entry matching the config: the correlated chain has its own
// driver, early rejection wraps the plain ensemble estimators, everything
// else is the plain pseudo-marginal chain.
ChainTrace dispatch_chain(const SsmModel& model, const Dataset& data, const RunConfig& cfg,
                          const ProposalSpec& proposal, int iters,
                          const Eigen::VectorXd& init, RngStream& rng,
                          const IterationCallback& on_iteration) {
  if (cfg.estimator == EstimatorKind::EnkfCorrelated)
    return correlated_emcmc_run(model, data, cfg.n_particles, cfg.sigma_u, proposal, iters,
                                init, rng, on_iteration, cfg.early_rejection);
  if (cfg.early_rejection)
    return early_rejection_emcmc_run(model, data, cfg.estimator, cfg.n_particles, proposal,
                                     iters, init, rng, on_iteration);
  return pmmh_run(model, data, cfg.estimator, cfg.n_particles, proposal, iters, init, rng,
                  on_iteration);
}

// The correlated estimator cannot be evaluated standalone (its normal block
// belongs to a chain), but its marginal distribution at fixed theta is
// exactly the plain ensemble estimator's, so noise probes and tuning sweeps
// measure that.
EstimatorKind standalone_kind(EstimatorKind kind) {
  return kind == EstimatorKind::EnkfCorrelated ? EstimatorKind::Enkf : kind;
}

nlohmann::json seeds_json(const RunConfig& cfg) {
  return {{"master", cfg.seed_master}, {"data", cfg.seed_data}, {"chain", cfg.seed_chain}};
}

double quantile_sorted(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
  const double frac = pos - static_cast<double>(lo);
  if (lo + 1 >= sorted.size()) return sorted.back();
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

}  // namespace

std::filesystem::path resolve_out_dir(const RunConfig& cfg, const std::string& command) {
  if (!cfg.out.empty()) return cfg.out;
  const char* env = std::getenv("EMCMC_OUTPUT_ROOT");
  const std::filesystem::path root = (env && *env) ? env : "runs";
  std::string name = command + "-" + cfg.model;
  if (command == "run" || command == "tune") name += "-" + estimator_name(cfg.estimator);
  return root / name;
}

CommandResult simulate_command(const RunConfig& user_cfg) {
  const std::string started = iso_utc_now();
  const auto model = build_model(user_cfg.model, user_cfg.overrides);
  RunConfig cfg = resolve_config(user_cfg, *model);
  if (!cfg.data.empty())
    throw_config("simulate: the config names an input dataset; nothing to simulate");

  CommandResult result;
  result.out_dir = resolve_out_dir(cfg, "simulate");
  std::filesystem::create_directories(result.out_dir);
  cfg.out = result.out_dir.string();

  Eigen::MatrixXd states;
  const Dataset data = obtain_dataset(cfg, *model, &states);

  const auto dataset_path = result.out_dir / "dataset.csv";
  write_dataset_csv(dataset_path, data);
  result.files.push_back(dataset_path);

  std::vector<std::string> state_header = {"time"};
  for (int i = 0; i < model->state_dim(); ++i)
    state_header.push_back("x_" + std::to_string(i));
  Eigen::MatrixXd state_rows(states.cols(), states.rows() + 1);
  for (Eigen::Index t = 0; t < states.cols(); ++t) {
    state_rows(t, 0) = static_cast<double>(t);
    state_rows.row(t).tail(states.rows()) = states.col(t).transpose();
  }
  const auto states_path = result.out_dir / "states.csv";
  write_csv(states_path, state_header, state_rows);
  result.files.push_back(states_path);

  nlohmann::json meta = {{"command", "simulate"},
                         {"version", kLibraryVersion},
                         {"started", started},
                         {"finished", iso_utc_now()},
                         {"config", config_to_json(cfg)},
                         {"seeds", seeds_json(cfg)},
                         {"dataset", {{"source", "simulated"},
                                      {"n_obs", data.n_obs()},
                                      {"steps", data.steps()},
                                      {"observe_initial", data.has_y0()}}}};
  const auto meta_path = result.out_dir / "metadata.json";
  write_json_file(meta_path, meta);
  result.files.push_back(meta_path);
  return result;
}

CommandResult tune_command(const TuneRequest& request) {
  const std::string started = iso_utc_now();
  if (request.candidates.empty())
    throw_config("tune: no candidate sizes given (pass at least one)");
  if (request.replicates < 10) throw_config("tune: at least 10 replicates are required");
  const auto model = build_model(request.config.model, request.config.overrides);
  RunConfig cfg = resolve_config(request.config, *model);

  CommandResult result;
  result.out_dir = resolve_out_dir(cfg, "tune");
  std::filesystem::create_directories(result.out_dir);
  cfg.out = result.out_dir.string();

  const Dataset data = obtain_dataset(cfg, *model, nullptr);

  Eigen::VectorXd theta;
  std::string theta_source;
  if (!request.theta.empty()) {
    if (static_cast<int>(request.theta.size()) != model->param_dim())
      throw_dimension("tune: theta has " + std::to_string(request.theta.size()) +
                      " entries but the model has " + std::to_string(model->param_dim()) +
                      " parameters");
    theta = to_vector(request.theta);
    theta_source = "supplied";
  } else if (!request.pilot_trace.empty()) {
    std::vector<std::string> names;
    const ChainTrace pilot = read_trace_csv(request.pilot_trace, &names);
    if (names != model->param_names())
      throw_config("tune: the pilot trace's parameters do not match model '" + cfg.model +
                   "'");
    const Eigen::MatrixXd kept = post_burn(pilot.samples, cfg.burn_in);
    if (kept.rows() < 1)
      throw_config("tune: the pilot trace has no post-burn-in samples");
    theta = column_medians(kept);
    theta_source = "pilot trace medians";
  } else {
    theta = to_vector(cfg.init);
    theta_source = "config init";
  }

  RngStream stream = RngStream(cfg.seed_master, cfg.seed_chain).child(kTuneChild);
  const EstimatorKind kind = standalone_kind(cfg.estimator);
  const TuneResult tuned = tune_particles(*model, data, theta, kind, request.candidates,
                                          request.replicates, stream);

  Eigen::MatrixXd table(static_cast<Eigen::Index>(tuned.table.size()), 3);
  for (std::size_t i = 0; i < tuned.table.size(); ++i) {
    table(static_cast<Eigen::Index>(i), 0) = tuned.table[i].n;
    table(static_cast<Eigen::Index>(i), 1) = tuned.table[i].sd;
    table(static_cast<Eigen::Index>(i), 2) = tuned.table[i].neg_inf_fraction;
  }
  const auto table_path = result.out_dir / "tune.csv";
  write_csv(table_path, {"n_particles", "tau", "neg_inf_fraction"}, table);
  result.files.push_back(table_path);

  nlohmann::json meta = {{"command", "tune"},
                         {"version", kLibraryVersion},
                         {"started", started},
                         {"finished", iso_utc_now()},
                         {"config", config_to_json(cfg)},
                         {"seeds", seeds_json(cfg)},
                         {"candidates", request.candidates},
                         {"replicates", request.replicates},
                         {"theta", to_std(theta)},
                         {"theta_source", theta_source},
                         {"tuned_estimator", estimator_name(kind)},
                         {"recommended_n", tuned.chosen_n},
                         {"threshold_met", tuned.threshold_met}};
  const auto meta_path = result.out_dir / "metadata.json";
  write_json_file(meta_path, meta);
  result.files.push_back(meta_path);
  result.info = {{"recommended_n", tuned.chosen_n}, {"threshold_met", tuned.threshold_met}};
  return result;
}

CommandResult run_experiment(const RunConfig& user_cfg) {
  const std::string started = iso_utc_now();
  const auto model = build_model(user_cfg.model, user_cfg.overrides);
  RunConfig cfg = resolve_config(user_cfg, *model);

  CommandResult result;
  result.out_dir = resolve_out_dir(cfg, "run");
  std::filesystem::create_directories(result.out_dir);
  cfg.out = result.out_dir.string();

  const int d = model->param_dim();
  const Eigen::VectorXd init = to_vector(cfg.init);
  const bool simulated = cfg.data.empty();

  const Dataset data = obtain_dataset(cfg, *model, nullptr);
  if (simulated) {
    const auto dataset_path = result.out_dir / "dataset.csv";
    write_dataset_csv(dataset_path, data);
    result.files.push_back(dataset_path);
  }

  // Proposal covariance: from the named file, or frozen from a pilot run
  // before any recorded chain starts so the recorded kernel never adapts.
  RngStream chain_root(cfg.seed_master, cfg.seed_chain);
  ProposalSpec proposal;
  proposal.scale = *cfg.scale;
  nlohmann::json proposal_meta = {{"scale", *cfg.scale}};
  if (!cfg.proposal.empty()) {
    const CsvTable file = read_csv(cfg.proposal);
    if (file.values.rows() != d || file.values.cols() != d)
      throw_dimension("run: the proposal covariance in " + cfg.proposal + " is " +
                      std::to_string(file.values.rows()) + "x" +
                      std::to_string(file.values.cols()) + " but the model has " +
                      std::to_string(d) + " parameters");
    proposal.covariance = file.values;
    proposal_meta["source"] = cfg.proposal;
  } else {
    // Pilot phase one: adapt the isotropic step toward a workable acceptance
    // rate in short bursts, because a fixed step that is too large for the
    // tightest posterior direction accepts almost nothing and leaves a
    // rank-deficient sample covariance. Phase two: sample at the frozen
    // adapted step and estimate the covariance. Both phases are
    // deterministic functions of the seeds and finish before any recorded
    // chain starts, so recorded kernels never adapt.
    RngStream pilot_rng = chain_root.child(kPilotChild);
    constexpr int kBursts = 8;
    const int burst_iters = std::max(1, cfg.pilot_iterations / (2 * kBursts));
    double step = cfg.pilot_step;
    Eigen::VectorXd position = init;
    for (int b = 0; b < kBursts; ++b) {
      ProposalSpec burst_spec;
      burst_spec.covariance = Eigen::MatrixXd::Identity(d, d) * (step * step);
      RngStream burst_rng = pilot_rng.child(static_cast<std::uint64_t>(b));
      const ChainTrace burst = dispatch_chain(*model, data, cfg, burst_spec, burst_iters,
                                              position, burst_rng, {});
      const double acc = acceptance_rate(burst);
      if (acc < 0.1) {
        step /= 3.0;
      } else if (acc > 0.5) {
        step *= 3.0;
      } else {
        step *= std::exp(acc - 0.234);
      }
      position = burst.final_state.theta;
    }
    ProposalSpec sample_spec;
    sample_spec.covariance = Eigen::MatrixXd::Identity(d, d) * (step * step);
    const int sample_iters = std::max(2, cfg.pilot_iterations - kBursts * burst_iters);
    RngStream sample_rng = pilot_rng.child(100);
    const ChainTrace pilot = dispatch_chain(*model, data, cfg, sample_spec, sample_iters,
                                            position, sample_rng, {});
    ChainTrace kept;
    kept.samples = post_burn(pilot.samples, cfg.burn_in);
    proposal = pilot_proposal(kept, *cfg.scale);
    // Ridge relative to the average variance: keeps the kernel strictly full
    // rank even when the pilot barely explored some direction.
    const double ridge = 1e-6 * proposal.covariance.trace() / d;
    proposal.covariance += ridge * Eigen::MatrixXd::Identity(d, d);
    proposal_meta["source"] = "pilot";
    proposal_meta["pilot"] = {{"iterations", cfg.pilot_iterations},
                              {"step", cfg.pilot_step},
                              {"adapted_step", step},
                              {"acceptance", acceptance_rate(pilot)}};
    const auto proposal_path = result.out_dir / "proposal.csv";
    write_csv(proposal_path, model->param_names(), proposal.covariance);
    result.files.push_back(proposal_path);
  }

  // Chains, each on its own child stream with its own trace file. A failed
  // chain marks its partial trace and the first failure is rethrown once
  // every chain has stopped.
  const int n_chains = cfg.chains;
  std::vector<ChainTrace> traces(static_cast<std::size_t>(n_chains));
  std::vector<std::exception_ptr> failures(static_cast<std::size_t>(n_chains));
  std::vector<std::filesystem::path> trace_paths;
  for (int c = 0; c < n_chains; ++c)
    trace_paths.push_back(result.out_dir /
                          (n_chains == 1 ? std::string("trace.csv")
                                         : "trace-" + std::to_string(c) + ".csv"));

  const auto run_one = [&](int c) {
    try {
      TraceWriter writer(trace_paths[static_cast<std::size_t>(c)], model->param_names());
      try {
        RngStream rng = chain_root.child(static_cast<std::uint64_t>(c));
        traces[static_cast<std::size_t>(c)] = dispatch_chain(
            *model, data, cfg, proposal, cfg.iterations, init, rng,
            [&writer](int iteration, const ChainState& state, bool accepted, int early_stop) {
              writer.append(iteration, state, accepted, early_stop);
            });
        writer.close();
      } catch (const std::exception& e) {
        writer.fail(e.what());
        throw;
      }
    } catch (...) {
      failures[static_cast<std::size_t>(c)] = std::current_exception();
    }
  };

  if (n_chains == 1) {
    run_one(0);
  } else {
    std::vector<std::thread> workers;
    workers.reserve(static_cast<std::size_t>(n_chains));
    for (int c = 0; c < n_chains; ++c) workers.emplace_back(run_one, c);
    for (auto& worker : workers) worker.join();
  }
  for (const auto& failure : failures)
    if (failure) std::rethrow_exception(failure);
  for (const auto& path : trace_paths) result.files.push_back(path);

  // Diagnostics are reported per chain; the noise probe runs once at the
  // pooled post-burn-in marginal medians. A diagnostic that cannot be
  // computed is recorded as an error message, not a failed run.
  Eigen::MatrixXd pooled(0, d);
  for (const auto& trace : traces) {
    const Eigen::MatrixXd kept = post_burn(trace.samples, cfg.burn_in);
    pooled.conservativeResize(pooled.rows() + kept.rows(), d);
    pooled.bottomRows(kept.rows()) = kept;
  }
  const Eigen::VectorXd theta_rep =
      pooled.rows() > 0 ? Eigen::VectorXd(column_medians(pooled)) : init;

  nlohmann::json probe_meta;
  double tau = std::numeric_limits<double>::quiet_NaN();
  try {
    RngStream probe_rng = chain_root.child(kProbeChild);
    const NoiseProbe probe =
        loglik_noise_probe(*model, data, theta_rep, standalone_kind(cfg.estimator),
                           cfg.n_particles, kProbeReplicates, probe_rng);
    tau = probe.tau;
    probe_meta = {{"tau", probe.tau},
                  {"neg_inf_count", probe.neg_inf_count},
                  {"replicates", probe.replicates},
                  {"estimator", estimator_name(standalone_kind(cfg.estimator))},
                  {"theta", to_std(theta_rep)}};
  } catch (const std::exception& e) {
    probe_meta = {{"error", e.what()}};
  }

  nlohmann::json chains_meta = nlohmann::json::array();
  std::ofstream summary(result.out_dir / "summary.txt");
  if (!summary)
    throw_config("run: cannot open " + (result.out_dir / "summary.txt").string());
  char line[256];
  std::snprintf(line, sizeof(line), "%-6s %-16s %7s %10s %8s %12s %10s %12s\n", "chain",
                "estimator", "N", "tau", "acc", "mESS", "wall_s", "mESS_per_s");
  summary << line;
  for (int c = 0; c < n_chains; ++c) {
    const ChainTrace& trace = traces[static_cast<std::size_t>(c)];
    nlohmann::json chain_meta = {
        {"chain", c},
        {"trace", trace_paths[static_cast<std::size_t>(c)].filename().string()},
        {"acceptance", acceptance_rate(trace)},
        {"wall_seconds", trace.wall_seconds},
        {"evolve_member_steps", trace.evolve_member_steps},
        {"init_attempts", trace.init_attempts}};
    std::string mess_text = "--";
    std::string rate_text = "--";
    try {
      const EssReport ess = multivariate_ess(post_burn(trace.samples, cfg.burn_in));
      const EfficiencySummary row =
          efficiency_summary(cfg.estimator, cfg.n_particles, tau, trace, ess);
      chain_meta["mess"] = ess.mess;
      chain_meta["mess_per_second"] = row.mess_per_second;
      chain_meta["tau"] = tau;
      std::snprintf(line, sizeof(line), "%.6g", ess.mess);
      mess_text = line;
      std::snprintf(line, sizeof(line), "%.6g", row.mess_per_second);
      rate_text = line;
    } catch (const std::exception& e) {
      chain_meta["diagnostics_error"] = e.what();
    }
    chains_meta.push_back(chain_meta);
    char tau_text[32];
    std::snprintf(tau_text, sizeof(tau_text), "%.4g", tau);
    std::snprintf(line, sizeof(line), "%-6d %-16s %7d %10s %8.4f %12s %10.3f %12s\n", c,
                  estimator_name(cfg.estimator).c_str(),
                  cfg.estimator == EstimatorKind::Kalman ? 0 : cfg.n_particles, tau_text,
                  acceptance_rate(trace), mess_text.c_str(), trace.wall_seconds,
                  rate_text.c_str());
    summary << line;
  }
  summary.close();
  result.files.push_back(result.out_dir / "summary.txt");

  nlohmann::json meta = {{"command", "run"},
                         {"version", kLibraryVersion},
                         {"started", started},
                         {"finished", iso_utc_now()},
                         {"config", config_to_json(cfg)},
                         {"seeds", seeds_json(cfg)},
                         {"dataset", {{"source", simulated ? std::string("simulated") : cfg.data},
                                      {"n_obs", data.n_obs()},
                                      {"steps", data.steps()},
                                      {"observe_initial", data.has_y0()}}},
                         {"proposal", proposal_meta},
                         {"noise_probe", probe_meta},
                         {"chains", chains_meta}};
  const auto meta_path = result.out_dir / "metadata.json";
  write_json_file(meta_path, meta);
  result.files.push_back(meta_path);
  return result;
}

CommandResult compare_command(const std::vector<std::filesystem::path>& traces,
                              double burn_in, const std::filesystem::path& out_dir) {
  if (traces.empty()) throw_config("compare: no traces given");
  if (!(burn_in >= 0.0 && burn_in < 1.0))
    throw_config("compare: burn-in fraction must lie in [0, 1)");

  std::vector<std::vector<std::string>> names(traces.size());
  std::vector<Eigen::MatrixXd> samples(traces.size());
  for (std::size_t i = 0; i < traces.size(); ++i) {
    const ChainTrace trace = read_trace_csv(traces[i], &names[i]);
    samples[i] = post_burn(trace.samples, burn_in);
    if (samples[i].rows() < 2)
      throw_config("compare: " + traces[i].string() +
                   " has fewer than two post-burn-in samples, so no kernel bandwidth "
                   "can be formed");
    if (i > 0 && names[i] != names[0])
      throw_config("compare: " + traces[i].string() + " and " + traces[0].string() +
                   " disagree on their parameter names");
  }

  CommandResult result;
  result.out_dir = out_dir;
  std::filesystem::create_directories(out_dir);

  constexpr int kGridPoints = 201;
  const int p = static_cast<int>(names[0].size());
  const std::size_t k = traces.size();

  std::ofstream report(out_dir / "compare.txt");
  if (!report) throw_config("compare: cannot open " + (out_dir / "compare.txt").string());
  for (std::size_t i = 0; i < k; ++i)
    report << "trace_" << i << ": " << traces[i].string() << "\n";
  report << "\n";
  char line[256];
  std::snprintf(line, sizeof(line), "%-16s %-10s %16s %16s\n", "parameter", "trace", "mean",
                "sd");
  report << line;

  for (int j = 0; j < p; ++j) {
    // Silverman's rule per trace; the evaluation grid spans every trace's
    // post-burn-in range padded by three of the widest bandwidths.
    std::vector<double> bandwidth(k);
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    double widest = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      const Eigen::VectorXd col = samples[i].col(j);
      const double m = static_cast<double>(col.size());
      const double mean = col.mean();
      const double sd = std::sqrt((col.array() - mean).square().sum() / (m - 1.0));
      std::vector<double> sorted(col.data(), col.data() + col.size());
      std::sort(sorted.begin(), sorted.end());
      const double iqr = quantile_sorted(sorted, 0.75) - quantile_sorted(sorted, 0.25);
      const double spread = std::min(sd, iqr / 1.34);
      const double h = 0.9 * spread * std::pow(m, -0.2);
      if (!(h > 0.0) || !std::isfinite(h))
        throw_config("compare: parameter '" + names[0][static_cast<std::size_t>(j)] +
                     "' in " + traces[i].string() +
                     " has zero spread, so its kernel bandwidth is degenerate");
      bandwidth[i] = h;
      widest = std::max(widest, h);
      lo = std::min(lo, sorted.front());
      hi = std::max(hi, sorted.back());
      std::snprintf(line, sizeof(line), "%-16s trace_%-4zu %16.9g %16.9g\n",
                    names[0][static_cast<std::size_t>(j)].c_str(), i, mean, sd);
      report << line;
    }
    lo -= 3.0 * widest;
    hi += 3.0 * widest;

    Eigen::MatrixXd grid(kGridPoints, 1 + static_cast<Eigen::Index>(k));
    for (int g = 0; g < kGridPoints; ++g)
      grid(g, 0) = lo + (hi - lo) * static_cast<double>(g) / (kGridPoints - 1);
    for (std::size_t i = 0; i < k; ++i) {
      const Eigen::ArrayXd col = samples[i].col(j).array();
      const double h = bandwidth[i];
      const double norm = 1.0 / (static_cast<double>(col.size()) * h * std::sqrt(2.0 * M_PI));
      for (int g = 0; g < kGridPoints; ++g) {
        const Eigen::ArrayXd z = (grid(g, 0) - col) / h;
        grid(g, 1 + static_cast<Eigen::Index>(i)) = norm * (-0.5 * z.square()).exp().sum();
      }
    }

    std::vector<std::string> header = {"x"};
    for (std::size_t i = 0; i < k; ++i) header.push_back("trace_" + std::to_string(i));
    const auto density_path =
        out_dir / ("density_" + names[0][static_cast<std::size_t>(j)] + ".csv");
    write_csv(density_path, header, grid);
    result.files.push_back(density_path);
  }

  report.close();
  result.files.push_back(out_dir / "compare.txt");
  return result;
}

}  // namespace emcmc
