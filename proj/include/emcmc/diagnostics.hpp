#pragma once

#include <Eigen/Dense>

#include "emcmc/mcmc.hpp"
#include "emcmc/state_space.hpp"

namespace emcmc {

// Multivariate effective sample size of a chain, with the two covariance
// estimates it is built from.
struct EssReport {
  int n = 0;           // chain length
  int p = 0;           // parameter dimension
  double mess = 0.0;   // n * (det sample_cov / det batch_means_cov)^(1/p)
  int batch_size = 0;  // floor(sqrt(n))
  Eigen::MatrixXd sample_cov;       // p x p, divisor n - 1
  Eigen::MatrixXd batch_means_cov;  // p x p long-run covariance estimate
};

// Effective sample size from non-overlapping batch means: split the first
// a*b rows (b = floor(sqrt(n)), a = floor(n/b)) into a batches, estimate
// the long-run covariance as b/(a-1) times the scatter of the batch means
// about their grand mean, and compare its determinant with the sample
// covariance of the full chain. Determinants are taken in log space through
// Cholesky-style symmetric factorizations, so the result is invariant under
// affine reparameterizations of the chain.
//
// Preconditions: n >= 100 and every column non-constant (config / numerical
// errors otherwise). A singular sample covariance (linearly dependent
// columns) or singular batch-means covariance (more parameters than batches
// can resolve; run a longer chain) raises a numerical error.
EssReport multivariate_ess(const Eigen::Ref<const Eigen::MatrixXd>& chain);

// Fraction of iterations whose proposal was accepted. Config error on an
// empty trace.
double acceptance_rate(const ChainTrace& trace);

// Spread of repeated log-likelihood estimates at one parameter value.
struct NoiseProbe {
  double tau = 0.0;       // sample sd of the finite replicate estimates
  int neg_inf_count = 0;  // replicates excluded because the estimate was -inf
  int replicates = 0;     // total replicates requested
};

// Re-estimates the log-likelihood `replicates` times (replicate r draws from
// stream.child(r)) and reports the sample standard deviation of the finite
// estimates. -inf replicates are excluded from the spread and counted
// separately; if fewer than two replicates are finite the spread is
// undefined and a numerical error is raised. Requires replicates >= 10.
NoiseProbe loglik_noise_probe(const SsmModel& model, const Dataset& data,
                              const Eigen::VectorXd& theta, EstimatorKind estimator,
                              int n, int replicates, RngStream& stream);

// One row of a sampler-efficiency comparison table.
struct EfficiencySummary {
  EstimatorKind estimator = EstimatorKind::Enkf;
  int n = 0;                     // ensemble / particle count (0 for exact)
  double tau = 0.0;              // log-likelihood noise sd at a representative theta
  double acceptance = 0.0;       // fraction of accepted iterations
  double mess = 0.0;             // multivariate effective sample size
  double wall_seconds = 0.0;     // sampling-loop wall time
  double mess_per_second = 0.0;  // mess / wall_seconds
};

// Assembles the summary row from a finished chain and its effective-size
// report. The trace must carry a positive wall time (config error
// otherwise); tau comes from loglik_noise_probe at a representative
// parameter value chosen by the caller.
EfficiencySummary efficiency_summary(EstimatorKind estimator, int n, double tau,
                                     const ChainTrace& trace, const EssReport& ess);

}  // namespace emcmc
