#include "emcmc/mcmc.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "emcmc/error.hpp"
#include "emcmc/gaussian.hpp"

namespace emcmc {

namespace {

// Factor scale * covariance as F * F^T after validating the proposal.
// Cholesky gives the deterministic lower-triangular root whenever the
// covariance is positive definite; degenerate (semidefinite) covariances
// fall back to a clamped eigendecomposition so that exactly-zero directions
// propose no movement at all.
Eigen::MatrixXd proposal_root(const ProposalSpec& proposal, int dim) {
  const Eigen::MatrixXd& cov = proposal.covariance;
  if (cov.rows() != dim || cov.cols() != dim)
    throw_dimension("proposal covariance must be square with one row per parameter");
  if (!(proposal.scale > 0.0)) throw_config("proposal scale must be positive");
  const double magnitude = std::max(1.0, cov.cwiseAbs().maxCoeff());
  if ((cov - cov.transpose()).cwiseAbs().maxCoeff() > 1e-12 * magnitude)
    throw_config("proposal covariance must be symmetric");
  const double root_scale = std::sqrt(proposal.scale);
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() == Eigen::Success)
    return root_scale * Eigen::MatrixXd(llt.matrixL());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eigen(cov);
  if (eigen.info() != Eigen::Success)
    throw_numerical("proposal covariance eigendecomposition failed");
  const Eigen::VectorXd& values = eigen.eigenvalues();
  const double tol = 1e-12 * std::max(1.0, values.cwiseAbs().maxCoeff());
  if (values.minCoeff() < -tol)
    throw_config("proposal covariance must be positive semidefinite");
  return root_scale * eigen.eigenvectors() *
         values.cwiseMax(0.0).cwiseSqrt().asDiagonal();
}

// One likelihood evaluation with the requested estimator.  The correlated
// estimator is excluded here: its auxiliary block is owned by the chain, so
// correlated evaluations go through the NormalBlock overload directly.
LogLikelihoodEstimate evaluate_estimate(const SsmModel& model, const Eigen::VectorXd& theta,
                                        const Dataset& data, EstimatorKind kind, int n,
                                        RngStream& stream, const EarlyStopRule* rule) {
  switch (kind) {
    case EstimatorKind::Bpf:
      return bpf_loglik(model, theta, data, n, stream);
    case EstimatorKind::Enkf: {
      EnkfOptions options;
      options.early_stop = rule;
      return enkf_loglik(model, theta, data, n, stream, options);
    }
    case EstimatorKind::EnkfUnbiased: {
      EnkfOptions options;
      options.density = DensityMode::Unbiased;
      return enkf_loglik(model, theta, data, n, stream, options);
    }
    case EstimatorKind::EnkfRqmc: {
      EnkfOptions options;
      options.early_stop = rule;
      return enkf_loglik_rqmc(model, theta, data, n, stream, options);
    }
    case EstimatorKind::Kalman: {
      const std::optional<LinearGaussianSpec> spec = model.linear_spec(theta);
      if (!spec)
        throw_config("the exact Kalman estimator requires a model exposing linear-Gaussian "
                     "dynamics");
      LogLikelihoodEstimate estimate;
      estimate.value = kalman_loglik(*spec, data);
      estimate.estimator = EstimatorKind::Kalman;
      estimate.n = 0;
      estimate.early_stop_t = data.steps() + 1;
      return estimate;
    }
    case EstimatorKind::EnkfCorrelated:
      throw_config("correlated likelihood estimates are driven by correlated_emcmc_run");
  }
  throw_config("unknown estimator kind");
}

// Log of the largest value a single plugin-density likelihood factor can
// attain: the Gaussian density at its mean with covariance S(theta), the
// limit of the factor as the forecast ensemble collapses.
double early_rejection_log_bound(const SsmModel& model, const Eigen::VectorXd& theta) {
  const Eigen::MatrixXd s = model.obs_noise(theta);
  Eigen::LLT<Eigen::MatrixXd> llt(s);
  if (llt.info() != Eigen::Success)
    throw_numerical("early rejection bounds each likelihood factor by the observation-noise "
                    "density at its mode, which needs a positive definite observation "
                    "covariance; floor the observation variances to enable it");
  double log_det = 0.0;
  for (Eigen::Index i = 0; i < s.rows(); ++i) log_det += 2.0 * std::log(llt.matrixL()(i, i));
  return -0.5 * (static_cast<double>(s.rows()) * kLogTwoPi + log_det);
}

struct StepPolicy {
  EstimatorKind kind = EstimatorKind::Enkf;
  int n = 0;
  bool correlated = false;
  double sigma_u = 0.0;
  bool early_rejection = false;
};

struct StepOutcome {
  bool accepted = false;
  int early_stop = 0;
  long long evolve_member_steps = 0;
};

// One Metropolis-Hastings iteration.  Mutates `state` in place on acceptance
// and leaves it untouched on rejection.  The iteration stream is split into
// fixed child roles: 0 drives the proposal draw, 1 the acceptance uniform,
// and 2 the likelihood-estimator randomness, so that samplers sharing a seed
// see identical proposals and acceptance uniforms regardless of how much
// randomness their estimators consume.
StepOutcome advance(ChainState& state, const SsmModel& model, const Dataset& data,
                    const StepPolicy& policy, const Eigen::MatrixXd& root,
                    const RngStream& iter_stream) {
  RngStream proposal_rng = iter_stream.child(0);
  RngStream accept_rng = iter_stream.child(1);
  RngStream noise_rng = iter_stream.child(2);

  const Eigen::VectorXd z = standard_normals(proposal_rng, state.theta.size());
  const Eigen::VectorXd theta_star = state.theta + root * z;
  const double log_u = std::log(accept_rng.uniform());
  const double log_prior_star = prior_logpdf(theta_star, model);

  StepOutcome outcome;
  // A zero-prior proposal is rejected without running the estimator.
  if (!(log_prior_star > kNegInf)) return outcome;

  // accept  <=>  log L* >= log u + (log L + log p(theta)) - log p(theta*),
  // an exact rearrangement of log u < log r that shares its threshold with
  // the running early-stop check inside the filters.
  const double threshold =
      log_u + (state.log_like.value + state.log_prior) - log_prior_star;

  EarlyStopRule rule{};
  const EarlyStopRule* rule_ptr = nullptr;
  if (policy.early_rejection) {
    rule.threshold_base = threshold;
    rule.log_bound = early_rejection_log_bound(model, theta_star);
    rule_ptr = &rule;
    // Even a run in which every remaining factor attains its upper bound
    // cannot reach the threshold: reject before touching the filter.
    if (0.0 < threshold - static_cast<double>(data.n_obs()) * rule.log_bound) return outcome;
  }

  LogLikelihoodEstimate estimate;
  std::optional<NormalBlock> u_star;
  if (policy.correlated) {
    u_star = crank_nicolson(*state.u, policy.sigma_u, noise_rng);
    EnkfOptions options;
    options.early_stop = rule_ptr;
    estimate = enkf_loglik(model, theta_star, data, policy.n, *u_star, options);
  } else {
    estimate =
        evaluate_estimate(model, theta_star, data, policy.kind, policy.n, noise_rng, rule_ptr);
  }
  outcome.evolve_member_steps = estimate.evolve_member_steps;
  outcome.early_stop = estimate.early_stop_t;
  outcome.accepted = !estimate.early_stopped && estimate.value >= threshold;
  if (outcome.accepted) {
    estimate.consumed_block = nullptr;  // the block it pointed at is local to this call
    state.theta = theta_star;
    state.log_prior = log_prior_star;
    state.log_like = estimate;
    if (policy.correlated) state.u = std::move(u_star);
  }
  return outcome;
}

constexpr int kMaxInitAttempts = 100;

ChainTrace run_chain(const SsmModel& model, const Dataset& data, const StepPolicy& policy,
                     const ProposalSpec& proposal, int iterations, const Eigen::VectorXd& init,
                     RngStream& stream, const IterationCallback& on_iteration) {
  if (iterations < 1) throw_config("chain run: the number of iterations must be positive");
  const int dim = model.param_dim();
  if (init.size() != dim)
    throw_dimension("chain run: initial parameter vector length does not match the model");
  const Eigen::MatrixXd root = proposal_root(proposal, dim);
  data.validate(model.obs_dim());

  BlockLayout layout;
  if (policy.correlated) {
    if (!model.normal_draw_count())
      throw_config("correlated proposals require a model with a fixed per-step normal draw "
                   "count");
    if (!model.deterministic_init())
      throw_config("correlated proposals require a deterministic initial ensemble so the "
                   "auxiliary block carries all of the filter randomness");
    if (!(policy.sigma_u > 0.0) || !(policy.sigma_u <= 1.0))
      throw_config("correlated proposals require sigma_u in (0, 1]");
    layout = block_layout_for(model, data, policy.n);
  }

  ChainState state;
  state.theta = init;
  state.log_prior = prior_logpdf(init, model);
  if (!(state.log_prior > kNegInf))
    throw_config("chain initialization: the initial parameters have zero prior density");

  ChainTrace trace;
  // Initialization attempt a draws from stream.child(0).child(a); a -inf
  // estimate is retried with fresh randomness up to a fixed bound.
  const RngStream init_parent = stream.child(0);
  bool initialized = false;
  for (int attempt = 0; attempt < kMaxInitAttempts; ++attempt) {
    RngStream attempt_rng = init_parent.child(static_cast<std::uint64_t>(attempt));
    LogLikelihoodEstimate estimate;
    std::optional<NormalBlock> u;
    if (policy.correlated) {
      u = NormalBlock::draw(layout, attempt_rng);
      estimate = enkf_loglik(model, init, data, policy.n, *u, EnkfOptions{});
    } else {
      estimate = evaluate_estimate(model, init, data, policy.kind, policy.n, attempt_rng, nullptr);
    }
    trace.evolve_member_steps += estimate.evolve_member_steps;
    trace.init_attempts = attempt + 1;
    if (estimate.value > kNegInf) {
      estimate.consumed_block = nullptr;
      state.log_like = estimate;
      state.u = std::move(u);
      initialized = true;
      break;
    }
  }
  if (!initialized)
    throw_numerical("chain initialization: the log-likelihood estimate stayed at -inf after "
                    "100 attempts; the initial parameters may be incompatible with the data");

  trace.samples.resize(iterations, dim);
  trace.accepted.assign(static_cast<std::size_t>(iterations), 0);
  trace.log_like.resize(iterations);
  trace.early_stop.assign(static_cast<std::size_t>(iterations), 0);

  const auto start = std::chrono::steady_clock::now();
  for (int i = 1; i <= iterations; ++i) {
    const StepOutcome outcome =
        advance(state, model, data, policy, root, stream.child(static_cast<std::uint64_t>(i)));
    trace.evolve_member_steps += outcome.evolve_member_steps;
    trace.samples.row(i - 1) = state.theta.transpose();
    trace.accepted[static_cast<std::size_t>(i - 1)] = outcome.accepted ? 1 : 0;
    trace.log_like(i - 1) = state.log_like.value;
    trace.early_stop[static_cast<std::size_t>(i - 1)] = outcome.early_stop;
    if (on_iteration) on_iteration(i, state, outcome.accepted, outcome.early_stop);
  }
  trace.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  trace.final_state = std::move(state);
  return trace;
}

}  // namespace

LogLikelihoodEstimate evaluate_loglik(const SsmModel& model, const Eigen::VectorXd& theta,
                                      const Dataset& data, EstimatorKind estimator, int n,
                                      RngStream& stream) {
  return evaluate_estimate(model, theta, data, estimator, n, stream, nullptr);
}

ChainTrace pmmh_run(const SsmModel& model, const Dataset& data, EstimatorKind estimator, int n,
                    const ProposalSpec& proposal, int iterations, const Eigen::VectorXd& init,
                    RngStream& stream, const IterationCallback& on_iteration) {
  if (estimator == EstimatorKind::EnkfCorrelated)
    throw_config("pmmh_run: the correlated estimator is driven by correlated_emcmc_run");
  StepPolicy policy;
  policy.kind = estimator;
  policy.n = n;
  return run_chain(model, data, policy, proposal, iterations, init, stream, on_iteration);
}

ChainTrace correlated_emcmc_run(const SsmModel& model, const Dataset& data, int n, double sigma_u,
                                const ProposalSpec& proposal, int iterations,
                                const Eigen::VectorXd& init, RngStream& stream,
                                const IterationCallback& on_iteration, bool early_rejection) {
  StepPolicy policy;
  policy.kind = EstimatorKind::EnkfCorrelated;
  policy.n = n;
  policy.correlated = true;
  policy.sigma_u = sigma_u;
  policy.early_rejection = early_rejection;
  return run_chain(model, data, policy, proposal, iterations, init, stream, on_iteration);
}

EarlyRejectionStep early_rejection_emcmc_step(const ChainState& state, const SsmModel& model,
                                              const Dataset& data, int n,
                                              const ProposalSpec& proposal,
                                              RngStream& iter_stream) {
  const int dim = model.param_dim();
  if (state.theta.size() != dim)
    throw_dimension("early rejection step: chain state does not match the model dimension");
  const Eigen::MatrixXd root = proposal_root(proposal, dim);
  StepPolicy policy;
  policy.kind = EstimatorKind::Enkf;
  policy.n = n;
  policy.early_rejection = true;
  EarlyRejectionStep step;
  step.state = state;
  const StepOutcome outcome = advance(step.state, model, data, policy, root, iter_stream);
  step.accepted = outcome.accepted;
  step.early_stop = outcome.early_stop;
  step.evolve_member_steps = outcome.evolve_member_steps;
  return step;
}

ChainTrace early_rejection_emcmc_run(const SsmModel& model, const Dataset& data,
                                     EstimatorKind estimator, int n, const ProposalSpec& proposal,
                                     int iterations, const Eigen::VectorXd& init,
                                     RngStream& stream, const IterationCallback& on_iteration) {
  if (estimator != EstimatorKind::Enkf && estimator != EstimatorKind::EnkfRqmc)
    throw_config("early rejection bounds the plugin-density likelihood factors and therefore "
                 "applies to the enkf and enkf-rqmc estimators only");
  StepPolicy policy;
  policy.kind = estimator;
  policy.n = n;
  policy.early_rejection = true;
  return run_chain(model, data, policy, proposal, iterations, init, stream, on_iteration);
}

TuneResult tune_particles(const SsmModel& model, const Dataset& data,
                          const Eigen::VectorXd& theta, EstimatorKind estimator,
                          const std::vector<int>& candidates, int replicates,
                          RngStream& stream) {
  if (candidates.empty()) throw_config("tune_particles: no candidate ensemble sizes given");
  if (replicates < 10)
    throw_config("tune_particles: at least 10 replicates per candidate are required");
  if (estimator == EstimatorKind::EnkfCorrelated)
    throw_config("tune_particles: tune the correlated sampler with the plain ensemble "
                 "estimator");
  const int dim = model.param_dim();
  if (theta.size() != dim)
    throw_dimension("tune_particles: parameter vector length does not match the model");

  TuneResult result;
  result.table.reserve(candidates.size());
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    const RngStream candidate_parent = stream.child(static_cast<std::uint64_t>(c));
    std::vector<double> finite_values;
    finite_values.reserve(static_cast<std::size_t>(replicates));
    int n_neg_inf = 0;
    for (int r = 0; r < replicates; ++r) {
      RngStream replicate_rng = candidate_parent.child(static_cast<std::uint64_t>(r));
      const LogLikelihoodEstimate estimate =
          evaluate_estimate(model, theta, data, estimator, candidates[c], replicate_rng, nullptr);
      if (estimate.value > kNegInf)
        finite_values.push_back(estimate.value);
      else
        ++n_neg_inf;
    }
    TuneCandidate row;
    row.n = candidates[c];
    row.neg_inf_fraction = static_cast<double>(n_neg_inf) / static_cast<double>(replicates);
    if (finite_values.size() >= 2) {
      const auto [lo, hi] = std::minmax_element(finite_values.begin(), finite_values.end());
      if (*lo == *hi) {
        // A deterministic estimator repeats the same value; report zero
        // spread rather than mean-accumulation rounding noise.
        row.sd = 0.0;
      } else {
        double mean = 0.0;
        for (const double v : finite_values) mean += v;
        mean /= static_cast<double>(finite_values.size());
        double sum_sq = 0.0;
        for (const double v : finite_values) sum_sq += (v - mean) * (v - mean);
        row.sd = std::sqrt(sum_sq / static_cast<double>(finite_values.size() - 1));
      }
    } else {
      row.sd = std::numeric_limits<double>::infinity();
    }
    result.table.push_back(row);
  }

  int best = -1;
  for (const TuneCandidate& row : result.table)
    if (row.sd <= kTuneSdTarget && (best < 0 || row.n < best)) best = row.n;
  if (best >= 0) {
    result.chosen_n = best;
    result.threshold_met = true;
  } else {
    int largest = result.table.front().n;
    for (const TuneCandidate& row : result.table) largest = std::max(largest, row.n);
    result.chosen_n = largest;
    result.threshold_met = false;
  }
  return result;
}

ProposalSpec pilot_proposal(const ChainTrace& trace, double scale) {
  if (!(scale > 0.0)) throw_config("pilot_proposal: scale must be positive");
  const Eigen::Index n = trace.samples.rows();
  if (n < 2) throw_config("pilot_proposal: the pilot trace is too short to estimate a covariance");
  const Eigen::RowVectorXd mean = trace.samples.colwise().mean();
  const Eigen::MatrixXd centered = trace.samples.rowwise() - mean;
  Eigen::MatrixXd cov = (centered.transpose() * centered) / static_cast<double>(n - 1);
  cov = (0.5 * (cov + cov.transpose())).eval();
  if (cov.isZero(0.0))
    throw_config("pilot_proposal: the pilot chain never moved, so its sample covariance is "
                 "zero and cannot seed a proposal");
  ProposalSpec proposal;
  proposal.covariance = std::move(cov);
  proposal.scale = scale;
  return proposal;
}

}  // namespace emcmc
