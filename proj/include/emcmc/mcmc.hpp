#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "emcmc/filters.hpp"
#include "emcmc/random.hpp"
#include "emcmc/state_space.hpp"

// Random-walk Metropolis samplers driven by the log-likelihood estimators:
// the plain pseudo-marginal chain, the correlated variant that recycles the
// auxiliary normals through a Crank-Nicolson kernel, and the early-rejection
// variant that abandons an ensemble filter pass as soon as the acceptance
// test is already decided. A particle-count tuner picks the cheapest
// estimator whose log-likelihood noise is acceptable.
//
// Reproducibility contract shared by every sampler here: from the run stream
// R, initialization attempt a draws from R.child(0).child(a), and iteration
// i >= 1 uses R.child(i), split as
//   .child(0) -> proposal normals,
//   .child(1) -> the acceptance uniform,
//   .child(2) -> filter randomness (the Crank-Nicolson refresh in the
//                correlated sampler).
// Because every iteration owns an independent substream, a run that stops a
// filter pass early consumes exactly the same randomness elsewhere as one
// that does not; this is what makes the early-rejection chain replay the
// plain chain bit for bit on a shared (seed, stream) pair.

namespace emcmc {

// Random-walk proposal theta* ~ N(theta, scale * covariance). The covariance
// must be symmetric positive semidefinite (exactly zero is the degenerate
// stay-put proposal); scale must be positive.
struct ProposalSpec {
  Eigen::MatrixXd covariance;
  double scale = 1.0;
};

// The standard dimension-scaled multiplier for a proposal covariance taken
// from a posterior estimate: 2.562^2 / d.
inline double default_proposal_scale(int dim) {
  if (dim < 1) throw_config("default_proposal_scale: dimension must be positive");
  return 2.562 * 2.562 / static_cast<double>(dim);
}

struct ChainState {
  Eigen::VectorXd theta;
  LogLikelihoodEstimate log_like;  // produced at exactly this theta (and u)
  double log_prior = 0.0;
  // Auxiliary normal block of the correlated sampler; empty otherwise.
  std::optional<NormalBlock> u;
};

// Per-iteration records of a finished run. Row i of samples is the chain
// state AFTER iteration i+1, so accepted[i] == false means the row equals
// its predecessor and log_like[i] is the carried-forward incumbent
// estimate. early_stop[i] is the observation index at which the filter pass
// for that iteration's proposal was abandoned: steps()+1 when it ran to
// completion, 0 when the proposal was rejected before any factor was folded
// (zero-prior proposal, or the early-rejection check firing ahead of the
// filter), and t in [times.front(), steps()] for a mid-filter stop.
struct ChainTrace {
  Eigen::MatrixXd samples;             // iterations x param_dim
  std::vector<std::uint8_t> accepted;  // 1 = proposal accepted
  Eigen::VectorXd log_like;            // incumbent estimate per iteration
  std::vector<int> early_stop;
  ChainState final_state;
  double wall_seconds = 0.0;            // sampling loop only, init excluded
  long long evolve_member_steps = 0;    // total single-member evolution calls
  int init_attempts = 1;
};

// Invoked after each iteration with (iteration index starting at 1, the
// chain state after the accept/reject decision, whether the proposal was
// accepted, the proposal's early-stop index: steps+1 for a completed
// estimate, 0 when the proposal was rejected before the filter ran, the
// stopping step otherwise). Lets a caller stream rows to disk as the chain
// advances.
using IterationCallback = std::function<void(int, const ChainState&, bool, int)>;

// log of the Metropolis ratio for a symmetric proposal, grouped as
// (to_ll + to_lp) - (from_ll + from_lp) so that swapping the endpoints
// negates the result exactly. The samplers below evaluate the equivalent
// rearrangement  to_ll >= log(u) + (from_ll + from_lp) - to_lp  so that the
// final comparison is the same expression the early-rejection filter rule
// tests, keeping the two samplers' decisions identical.
inline double log_acceptance_ratio(double from_log_prior, double from_log_like,
                                   double to_log_prior, double to_log_like) {
  return (to_log_like + to_log_prior) - (from_log_like + from_log_prior);
}

// One log-likelihood evaluation with the requested stream-driven estimator:
// dispatches to the bootstrap particle filter, the ensemble filter in plugin
// or unbiased density mode, its scrambled-Sobol variant, or the exact Kalman
// recursion (which requires the model to expose linear-Gaussian dynamics).
// EstimatorKind::EnkfCorrelated is rejected with a config error: its normal
// block is owned by a chain, so correlated evaluations cannot stand alone.
LogLikelihoodEstimate evaluate_loglik(const SsmModel& model, const Eigen::VectorXd& theta,
                                      const Dataset& data, EstimatorKind estimator, int n,
                                      RngStream& stream);

// Pseudo-marginal Metropolis-Hastings: propose theta* from the random walk,
// estimate its log-likelihood with the requested estimator, accept with
// probability min(1, r). A rejected iteration carries the incumbent
// estimate forward untouched; the incumbent is never re-evaluated.
// Proposals with zero prior density are rejected without running the
// estimator. Initialization retries the estimate on fresh substreams up to
// 100 times while it is -inf, then fails with a numerical error.
// EstimatorKind::EnkfCorrelated is not accepted here; use
// correlated_emcmc_run.
ChainTrace pmmh_run(const SsmModel& model, const Dataset& data,
                    EstimatorKind estimator, int n, const ProposalSpec& proposal,
                    int iters, const Eigen::VectorXd& init, RngStream& stream,
                    const IterationCallback& on_iteration = {});

// Correlated pseudo-marginal sampler: the chain state is (theta, u) where u
// is the normal block driving a block-fed ensemble filter pass. Each
// iteration proposes theta* from the random walk and u* from the
// Crank-Nicolson kernel with mixing rate sigma_u in (0, 1]; the pair is
// accepted or rejected jointly (the Crank-Nicolson kernel is reversible
// with respect to N(0, I) and contributes nothing to the ratio), and a
// rejection leaves both theta and u unchanged. Requires a model with a
// fixed per-step normal draw count and a deterministic initial ensemble.
// With early_rejection set, filter passes are abandoned once the decision
// is known (see early_rejection_emcmc_run).
ChainTrace correlated_emcmc_run(const SsmModel& model, const Dataset& data, int n,
                                double sigma_u, const ProposalSpec& proposal,
                                int iters, const Eigen::VectorXd& init,
                                RngStream& stream,
                                const IterationCallback& on_iteration = {},
                                bool early_rejection = false);

struct EarlyRejectionStep {
  ChainState state;
  bool accepted = false;
  // Same convention as ChainTrace::early_stop.
  int early_stop = 0;
  long long evolve_member_steps = 0;
};

// One early-rejection iteration from the given state, using the ensemble
// filter with the plugin density. Draws the acceptance uniform up front,
// then folds likelihood factors only while the proposal can still be
// accepted: after factor k of K the pass aborts as soon as
//   partial < log(u) + [log p(theta) + log Lhat(theta)] - log p(theta*)
//             - (K - k) * log B(theta*),
// where B(theta*) = N(0; 0, S(theta*)) bounds every remaining plugin
// factor. A completed pass yields the ordinary estimate, and the decision
// it produces is identical to the plain sampler's on the same iteration
// stream. Observation covariances that are not positive definite make the
// bound infinite and raise a numerical error (floor the observation
// variance instead of passing an exactly singular matrix).
EarlyRejectionStep early_rejection_emcmc_step(const ChainState& state,
                                              const SsmModel& model,
                                              const Dataset& data, int n,
                                              const ProposalSpec& proposal,
                                              RngStream& iter_stream);

// Full chain driven by early_rejection_emcmc_step's rule. estimator must be
// Enkf or EnkfRqmc (the bound holds for the plugin density under either
// noise source). On the same (seed, stream) pair this produces the same
// samples, accept flags, and log-likelihood column as pmmh_run with the
// same estimator, while performing strictly less evolution work whenever
// any pass was abandoned; only the early_stop column differs.
ChainTrace early_rejection_emcmc_run(const SsmModel& model, const Dataset& data,
                                     EstimatorKind estimator, int n,
                                     const ProposalSpec& proposal, int iters,
                                     const Eigen::VectorXd& init, RngStream& stream,
                                     const IterationCallback& on_iteration = {});

// Largest acceptable standard deviation of the log-likelihood estimate at a
// representative parameter value; the tuner picks the smallest candidate
// size meeting it.
inline constexpr double kTuneSdTarget = 1.5;

struct TuneCandidate {
  int n = 0;
  double sd = 0.0;               // over finite replicates; +inf when fewer than 2
  double neg_inf_fraction = 0.0; // replicates whose estimate was -inf
};

struct TuneResult {
  int chosen_n = 0;
  bool threshold_met = false;  // false: no candidate qualified, largest returned
  std::vector<TuneCandidate> table;  // in the order the candidates were given
};

// Replicated log-likelihood estimates at theta_rep for every candidate size,
// returning the smallest candidate whose standard deviation is at most
// kTuneSdTarget (or the largest candidate, flagged, when none qualifies).
// -inf replicates are excluded from the deviation and reported as a
// fraction. Requires at least 10 replicates.
TuneResult tune_particles(const SsmModel& model, const Dataset& data,
                          const Eigen::VectorXd& theta_rep, EstimatorKind estimator,
                          const std::vector<int>& candidates, int replicates,
                          RngStream& stream);

// Proposal covariance frozen from a pilot trace: the sample covariance of
// the recorded chain (divisor n-1) with the given scale. Fails if the trace
// is shorter than 2 iterations or never moved.
ProposalSpec pilot_proposal(const ChainTrace& trace, double scale);

}  // namespace emcmc
