#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <cmath>
#include <limits>

#include "emcmc/error.hpp"

// Gaussian density and quantile utilities. Everything works in log space;
// -inf is a legitimate return value, not an error.

namespace emcmc {

inline constexpr double kLogTwoPi = 1.8378770664093454835606594728112353;
inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

inline double normal_logpdf(double x, double mean, double sd) {
  if (!(sd > 0.0)) throw_config("normal_logpdf: sd must be positive");
  const double z = (x - mean) / sd;
  return -0.5 * z * z - std::log(sd) - 0.5 * kLogTwoPi;
}

// Phi(x), accurate in both tails via erfc.
inline double normal_cdf(double x) {
  return 0.5 * std::erfc(-x * 0.7071067811865475244);
}

namespace detail {

// Rational approximation to the inverse standard normal CDF, |relative
// error| < 1.2e-9 over (0,1). Used directly for bulk sampling, where that
// error is far below statistical resolution and the refinement step would
// dominate the cost; quantile-transform callers go through
// inverse_normal_cdf below, which polishes to full double precision.
// Caller guarantees p in (0,1).
inline double normal_quantile_approx(double p) {
  static const double a[6] = {-3.969683028665376e+01, 2.209460984245205e+02,
                              -2.759285104469687e+02, 1.383577518672690e+02,
                              -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[5] = {-5.447609879822406e+01, 1.615858368580409e+02,
                              -1.556989798598866e+02, 6.680131188771972e+01,
                              -1.328068155288572e+01};
  static const double c[6] = {-7.784894002430293e-03, -3.223964580411365e-01,
                              -2.400758277161838e+00, -2.549732539343734e+00,
                              4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[4] = {7.784695709041462e-03, 3.224671290700398e-01,
                              2.445134137142996e+00, 3.754408661907416e+00};

  const double p_low = 0.02425;
  double x;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - p_low) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) *
        q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log1p(-p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  return x;
}

}  // namespace detail

// Inverse standard normal CDF: rational approximation followed by a single
// Halley refinement against erfc, which brings the result to full double
// precision. One uniform maps to exactly one normal, so stream bookkeeping
// stays trivial.
inline double inverse_normal_cdf(double p) {
  if (!(p > 0.0) || !(p < 1.0))
    throw_config("inverse_normal_cdf: p must lie strictly in (0,1)");
  double x = detail::normal_quantile_approx(p);
  // Refinement is skipped far in the tails where exp(x^2/2) would overflow
  // (the approximation alone is already well below 1e-9 relative there).
  if (x * x < 1400.0) {
    const double e = normal_cdf(x) - p;
    const double u = e * std::sqrt(2.0 * M_PI) * std::exp(0.5 * x * x);
    x = x - u / (1.0 + 0.5 * x * u);
  }
  return x;
}

// log N(y; mean, cov) given the Cholesky factor of cov.
template <class D1, class D2>
double gaussian_logpdf_chol(const Eigen::MatrixBase<D1>& y,
                            const Eigen::MatrixBase<D2>& mean,
                            const Eigen::LLT<Eigen::MatrixXd>& llt) {
  const Eigen::Index d = y.size();
  Eigen::VectorXd z = y - mean;
  llt.matrixL().solveInPlace(z);
  double logdet = 0.0;
  for (Eigen::Index i = 0; i < d; ++i)
    logdet += 2.0 * std::log(llt.matrixL()(i, i));
  return -0.5 * (d * kLogTwoPi + logdet + z.squaredNorm());
}

// log N(y; mean, cov). Throws ErrorKind::Numerical if cov is not positive
// definite.
template <class D1, class D2, class D3>
double gaussian_logpdf(const Eigen::MatrixBase<D1>& y,
                       const Eigen::MatrixBase<D2>& mean,
                       const Eigen::MatrixBase<D3>& cov) {
  if (y.size() != mean.size() || cov.rows() != cov.cols() ||
      cov.rows() != y.size())
    throw_dimension("gaussian_logpdf: inconsistent dimensions");
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success)
    throw_numerical("gaussian_logpdf: covariance not positive definite");
  return gaussian_logpdf_chol(y, mean, llt);
}

// log of the density maximum, log N(mu; mu, cov) -- the bound used by
// early rejection.
inline double gaussian_logpdf_at_mean(const Eigen::MatrixXd& cov) {
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success)
    throw_numerical("gaussian_logpdf_at_mean: covariance not positive definite");
  double logdet = 0.0;
  for (Eigen::Index i = 0; i < cov.rows(); ++i)
    logdet += 2.0 * std::log(llt.matrixL()(i, i));
  return -0.5 * (cov.rows() * kLogTwoPi + logdet);
}

}  // namespace emcmc
