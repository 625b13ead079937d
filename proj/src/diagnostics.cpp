#include "emcmc/diagnostics.hpp"

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "emcmc/error.hpp"
#include "emcmc/gaussian.hpp"

namespace emcmc {

namespace {

// Log-determinant of a symmetric PSD matrix through its eigendecomposition,
// treating eigenvalues below a relative rank tolerance as exact zeros so
// that linearly dependent inputs fail deterministically instead of hinging
// on rounding in a Cholesky pivot.
double logdet_psd(const Eigen::MatrixXd& m, const std::string& singular_message) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eigen(m);
  if (eigen.info() != Eigen::Success)
    throw_numerical("diagnostics: eigendecomposition of a covariance failed");
  const Eigen::VectorXd& values = eigen.eigenvalues();
  const double largest = values.cwiseAbs().maxCoeff();
  const double tol =
      static_cast<double>(m.rows()) * std::numeric_limits<double>::epsilon() * largest;
  double log_det = 0.0;
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    if (values(i) <= tol) throw_numerical(singular_message);
    log_det += std::log(values(i));
  }
  return log_det;
}

double sample_sd(const std::vector<double>& values) {
  double lo = values.front(), hi = values.front();
  for (const double v : values) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  // Identical replicates have zero spread; do not report mean-accumulation
  // rounding noise for a deterministic estimator.
  if (lo == hi) return 0.0;
  double mean = 0.0;
  for (const double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double sum_sq = 0.0;
  for (const double v : values) sum_sq += (v - mean) * (v - mean);
  return std::sqrt(sum_sq / static_cast<double>(values.size() - 1));
}

}  // namespace

EssReport multivariate_ess(const Eigen::Ref<const Eigen::MatrixXd>& chain) {
  const Eigen::Index n = chain.rows();
  const Eigen::Index p = chain.cols();
  if (p < 1) throw_config("multivariate_ess: the chain must have at least one column");
  if (n < 100)
    throw_config("multivariate_ess: need at least 100 samples, got " + std::to_string(n));
  for (Eigen::Index j = 0; j < p; ++j) {
    if (chain.col(j).minCoeff() == chain.col(j).maxCoeff())
      throw_numerical("multivariate_ess: column " + std::to_string(j) +
                      " is constant; the chain never moved in that coordinate");
  }

  EssReport report;
  report.n = static_cast<int>(n);
  report.p = static_cast<int>(p);
  report.batch_size = static_cast<int>(std::floor(std::sqrt(static_cast<double>(n))));
  const Eigen::Index b = report.batch_size;
  const Eigen::Index a = n / b;  // number of batches; the remainder is dropped

  const Eigen::RowVectorXd mean = chain.colwise().mean();
  const Eigen::MatrixXd centered = chain.rowwise() - mean;
  report.sample_cov = (centered.transpose() * centered) / static_cast<double>(n - 1);
  report.sample_cov = (0.5 * (report.sample_cov + report.sample_cov.transpose())).eval();

  const Eigen::RowVectorXd grand = chain.topRows(a * b).colwise().mean();
  Eigen::MatrixXd scatter = Eigen::MatrixXd::Zero(p, p);
  for (Eigen::Index k = 0; k < a; ++k) {
    const Eigen::RowVectorXd deviation = chain.middleRows(k * b, b).colwise().mean() - grand;
    scatter.noalias() += deviation.transpose() * deviation;
  }
  report.batch_means_cov = scatter * (static_cast<double>(b) / static_cast<double>(a - 1));
  report.batch_means_cov =
      (0.5 * (report.batch_means_cov + report.batch_means_cov.transpose())).eval();

  const double log_det_sample = logdet_psd(
      report.sample_cov,
      "multivariate_ess: the sample covariance is singular; the chain columns are linearly "
      "dependent");
  const double log_det_batch = logdet_psd(
      report.batch_means_cov,
      "multivariate_ess: the batch-means covariance is singular; run a longer chain so the "
      "batch count exceeds the parameter dimension");
  report.mess = static_cast<double>(n) *
                std::exp((log_det_sample - log_det_batch) / static_cast<double>(p));
  return report;
}

double acceptance_rate(const ChainTrace& trace) {
  if (trace.accepted.empty()) throw_config("acceptance_rate: the trace is empty");
  long long accepted = 0;
  for (const std::uint8_t flag : trace.accepted) accepted += flag ? 1 : 0;
  return static_cast<double>(accepted) / static_cast<double>(trace.accepted.size());
}

NoiseProbe loglik_noise_probe(const SsmModel& model, const Dataset& data,
                              const Eigen::VectorXd& theta, EstimatorKind estimator,
                              int n, int replicates, RngStream& stream) {
  if (replicates < 10) throw_config("loglik_noise_probe: at least 10 replicates are required");

  NoiseProbe probe;
  probe.replicates = replicates;
  std::vector<double> finite_values;
  finite_values.reserve(static_cast<std::size_t>(replicates));
  for (int r = 0; r < replicates; ++r) {
    RngStream replicate_rng = stream.child(static_cast<std::uint64_t>(r));
    const LogLikelihoodEstimate estimate =
        evaluate_loglik(model, theta, data, estimator, n, replicate_rng);
    if (estimate.value > kNegInf)
      finite_values.push_back(estimate.value);
    else
      ++probe.neg_inf_count;
  }
  if (finite_values.size() < 2)
    throw_numerical("loglik_noise_probe: fewer than two replicates produced a finite "
                    "log-likelihood estimate; the spread is undefined at this parameter "
                    "value");
  probe.tau = sample_sd(finite_values);
  return probe;
}

EfficiencySummary efficiency_summary(EstimatorKind estimator, int n, double tau,
                                     const ChainTrace& trace, const EssReport& ess) {
  if (!(trace.wall_seconds > 0.0))
    throw_config("efficiency_summary: the trace carries no positive wall time");
  EfficiencySummary summary;
  summary.estimator = estimator;
  summary.n = n;
  summary.tau = tau;
  summary.acceptance = acceptance_rate(trace);
  summary.mess = ess.mess;
  summary.wall_seconds = trace.wall_seconds;
  summary.mess_per_second = ess.mess / trace.wall_seconds;
  return summary;
}

}  // namespace emcmc
