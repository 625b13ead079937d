#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <optional>

#include "emcmc/random.hpp"
#include "emcmc/sobol.hpp"
#include "emcmc/state_space.hpp"

// Log-likelihood estimators over a dataset at fixed parameters: bootstrap
// particle filter, stochastic ensemble Kalman filter (plugin or unbiased
// density, stream / block / quasi-Monte-Carlo noise), and the exact Kalman
// recursion for linear-Gaussian models.

namespace emcmc {

enum class EstimatorKind { Bpf, Enkf, EnkfUnbiased, EnkfCorrelated, EnkfRqmc, Kalman };

enum class DensityMode { Plugin, Unbiased };

struct ForecastMoments {
  Eigen::VectorXd mean;   // sample mean of the forecast ensemble
  Eigen::MatrixXd cov;    // sample covariance, divisor N-1, exactly symmetric
};

// Stopping rule threaded through an estimator run by early-rejection MCMC:
// after folding the k-th likelihood factor (k = 1..total_factors), the run
// aborts as soon as
//   partial_loglik < threshold_base - (total_factors - k) * log_bound,
// where log_bound is the largest value any remaining factor can contribute.
struct EarlyStopRule {
  double threshold_base;
  double log_bound;
};

struct LogLikelihoodEstimate {
  double value = 0.0;
  EstimatorKind estimator = EstimatorKind::Enkf;
  int n = 0;                        // particles / ensemble members
  bool early_stopped = false;
  // Index of the observation being folded when the run stopped early;
  // steps()+1 when the run completed. Matches the trace column convention.
  int early_stop_t = 0;
  // Number of single-member evolution calls performed (N per step executed);
  // the work counter behind the "strictly fewer evolution steps" guarantee.
  long long evolve_member_steps = 0;
  const NormalBlock* consumed_block = nullptr;
};

struct EnkfOptions {
  DensityMode density = DensityMode::Plugin;
  const EarlyStopRule* early_stop = nullptr;
  // Observation hook, called after each shift with (t, members); used by
  // tests to probe the filtering distribution. Leave empty in production.
  std::function<void(int, const Eigen::MatrixXd&)> post_shift_observer;
};

// Sample mean and covariance (divisor N-1) of an ensemble stored one member
// per column. Requires N >= 2.
ForecastMoments ensemble_moments(const Eigen::Ref<const Eigen::MatrixXd>& members);

// K = cov P' (P cov P' + S)^{-1} via a symmetric factorization solve (with a
// small jitter ladder before declaring singularity), never an explicit
// inverse.
Eigen::MatrixXd kalman_gain(const ForecastMoments& moments, const ObsModel& obs);

// Exactly unbiased log-estimate of log N(y; mu, Sigma) built from the sample
// mean and covariance (divisor N-1) of N Gaussian draws. Returns -inf when
// the rank-one-corrected scatter matrix is not positive definite. Requires
// N > d + 3.
double unbiased_gaussian_logpdf(const Eigen::VectorXd& y,
                                const Eigen::VectorXd& sample_mean,
                                const Eigen::MatrixXd& sample_cov, int n);

// Bootstrap particle filter: multinomial resampling, evolution-density
// proposal, returns sum_t log(S_t / N). All weights zero at some step yields
// value = -inf (certain rejection, not an error).
LogLikelihoodEstimate bpf_loglik(const SsmModel& model, const Eigen::VectorXd& theta,
                                 const Dataset& data, int n_particles,
                                 RngStream& stream);

// Stochastic EnKF estimate. Per step: evolve the ensemble, fold the plugin
// density log N(y_t; P mu, P cov P' + S) or its unbiased counterpart
// evaluated on the pseudo-observation ensemble, then shift members toward
// y_t with the sampled Kalman gain. Shift noise is drawn at every step in
// both density modes so the two variants consume randomness identically.
LogLikelihoodEstimate enkf_loglik(const SsmModel& model, const Eigen::VectorXd& theta,
                                  const Dataset& data, int n_members,
                                  RngStream& stream, const EnkfOptions& opts = {});

// Same estimator with every normal read from a pre-drawn block (layout per
// block_layout_for) instead of the stream; the correlated-proposal driver.
LogLikelihoodEstimate enkf_loglik(const SsmModel& model, const Eigen::VectorXd& theta,
                                  const Dataset& data, int n_members,
                                  const NormalBlock& block, const EnkfOptions& opts = {});

// EnKF with both shift and evolution noise driven by a fresh scrambled Sobol
// point set of dimension d_y + m per time step (plugin density only).
// Scramble seeds are derived from the stream, one per step.
LogLikelihoodEstimate enkf_loglik_rqmc(const SsmModel& model, const Eigen::VectorXd& theta,
                                       const Dataset& data, int n_members,
                                       RngStream& stream, const EnkfOptions& opts = {});

// One quasi-Monte-Carlo forecast step: each Sobol point supplies d_y normals
// to shift the given ensemble toward y_prev and m normals to evolve it one
// step; returns the moments of the resulting forecast ensemble.
ForecastMoments enkf_moments_rqmc(const SsmModel& model, const Eigen::VectorXd& theta,
                                  const Eigen::Ref<const Eigen::MatrixXd>& members,
                                  const Eigen::VectorXd& y_prev, SobolSampler& sobol);

// Exact log-likelihood of a linear-Gaussian model (prediction/update
// recursion, Joseph-form covariance update). Deterministic.
double kalman_loglik(const LinearGaussianSpec& spec, const Dataset& data);

// The block layout an EnKF run over this dataset consumes: an optional
// leading shift slice at t=0, then per step a shift slice followed by an
// evolution slice, members contiguous within a slice.
BlockLayout block_layout_for(const SsmModel& model, const Dataset& data, int n_members);

}  // namespace emcmc
