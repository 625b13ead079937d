#pragma once

// Shared helpers for the test suite: classical goodness-of-fit machinery
// (implemented here from textbook formulas, independent of the library) and
// small toy state space models with closed-form structure.

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "emcmc/state_space.hpp"

namespace testsupport {

// Regularized lower incomplete gamma P(a, x): series for x < a+1,
// continued fraction otherwise (Numerical Recipes construction).
inline double gamma_p(double a, double x) {
  if (x < 0.0 || a <= 0.0) return std::numeric_limits<double>::quiet_NaN();
  if (x == 0.0) return 0.0;
  const double gln = std::lgamma(a);
  if (x < a + 1.0) {
    double ap = a, sum = 1.0 / a, del = sum;
    for (int i = 0; i < 500; ++i) {
      ap += 1.0;
      del *= x / ap;
      sum += del;
      if (std::abs(del) < std::abs(sum) * 1e-15) break;
    }
    return sum * std::exp(-x + a * std::log(x) - gln);
  }
  double b = x + 1.0 - a, c = 1e300, d = 1.0 / b, h = d;
  for (int i = 1; i < 500; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < 1e-300) d = 1e-300;
    c = b + an / c;
    if (std::abs(c) < 1e-300) c = 1e-300;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < 1e-15) break;
  }
  return 1.0 - std::exp(-x + a * std::log(x) - gln) * h;
}

// Survival function of a chi-squared with k degrees of freedom.
inline double chi2_sf(double x, int k) { return 1.0 - gamma_p(0.5 * k, 0.5 * x); }

// Chi-squared goodness-of-fit p-value for observed counts against expected
// probabilities.
inline double chi2_gof_pvalue(const std::vector<int>& counts,
                              const std::vector<double>& probs) {
  const double n = std::accumulate(counts.begin(), counts.end(), 0.0);
  double stat = 0.0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    const double e = n * probs[i];
    stat += (counts[i] - e) * (counts[i] - e) / e;
  }
  return chi2_sf(stat, static_cast<int>(counts.size()) - 1);
}

// Asymptotic Kolmogorov survival function.
inline double kolmogorov_sf(double lambda) {
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 == 1 ? 1.0 : -1.0) * term;
    if (term < 1e-12) break;
  }
  return std::min(1.0, std::max(0.0, 2.0 * sum));
}

// One-sample Kolmogorov-Smirnov p-value against a continuous CDF.
template <class Cdf>
double ks_pvalue(std::vector<double> xs, Cdf cdf) {
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = cdf(xs[i]);
    d = std::max(d, std::abs(f - (i + 1) / n));
    d = std::max(d, std::abs(f - i / n));
  }
  const double sq = std::sqrt(n);
  return kolmogorov_sf((sq + 0.12 + 0.11 / sq) * d);
}

inline double mean_of(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / v.size();
}

inline double var_of(const std::vector<double>& v) {
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / (v.size() - 1);
}

// Scalar AR(1) state space model with fixed coefficients and no free
// parameters: x' = a x + N(0, q_sd^2), y = x + N(0, s_sd^2),
// x_0 ~ N(m0, sd0^2) (point mass when sd0 = 0).
struct ToyAr1 : emcmc::SsmModel {
  double a = 0.9, q_sd = 0.5, s_sd = 0.4, m0 = 0.0, sd0 = 1.0;

  ToyAr1() = default;
  ToyAr1(double a_, double q, double s, double m, double sd)
      : a(a_), q_sd(q), s_sd(s), m0(m), sd0(sd) {}

  std::string name() const override { return "toy-ar1"; }
  int state_dim() const override { return 1; }
  int obs_dim() const override { return 1; }
  const std::vector<std::string>& param_names() const override {
    static const std::vector<std::string> none;
    return none;
  }
  double prior_logpdf(const Eigen::VectorXd&) const override { return 0.0; }
  Eigen::MatrixXd obs_matrix() const override {
    return Eigen::MatrixXd::Identity(1, 1);
  }
  Eigen::MatrixXd obs_noise(const Eigen::VectorXd&) const override {
    Eigen::MatrixXd s(1, 1);
    s(0, 0) = s_sd * s_sd;
    return s;
  }
  bool deterministic_init() const override { return sd0 == 0.0; }
  void init_ensemble(const Eigen::VectorXd&, Eigen::Ref<Eigen::MatrixXd> members,
                     emcmc::RngStream& rng) const override {
    for (Eigen::Index j = 0; j < members.cols(); ++j)
      members(0, j) = m0 + (sd0 > 0.0 ? sd0 * rng.normal() : 0.0);
  }
  std::optional<int> normal_draw_count() const override { return 1; }
  void evolve_from_normals(const Eigen::VectorXd&, int,
                           Eigen::Ref<Eigen::MatrixXd> members,
                           const Eigen::Ref<const Eigen::MatrixXd>& z) const override {
    members = a * members + q_sd * z;
  }
  std::optional<emcmc::LinearGaussianSpec> linear_spec(
      const Eigen::VectorXd&) const override {
    emcmc::LinearGaussianSpec spec;
    spec.A = Eigen::MatrixXd::Constant(1, 1, a);
    spec.Q = Eigen::MatrixXd::Constant(1, 1, q_sd * q_sd);
    spec.P = Eigen::MatrixXd::Identity(1, 1);
    spec.S = Eigen::MatrixXd::Constant(1, 1, s_sd * s_sd);
    spec.init_mean = Eigen::VectorXd::Constant(1, m0);
    spec.init_cov = Eigen::MatrixXd::Constant(1, 1, sd0 * sd0);
    return spec;
  }
  Eigen::VectorXd default_theta() const override { return Eigen::VectorXd(0); }
};

// Two-dimensional linear-Gaussian model matching the frozen Kalman oracle
// values: A=[[.9,.1],[0,.8]], Q=[[.5,.1],[.1,.3]], P=[1 0], S=[.4],
// x_0 ~ N((.5,-.5), [[1,.2],[.2,.7]]).
struct ToyLinear2 : emcmc::SsmModel {
  bool point_init = false;  // replaces the init distribution by its mean

  Eigen::Matrix2d A, Q, C0;
  Eigen::Vector2d m0;
  Eigen::Matrix2d q_root, c0_root;

  ToyLinear2() {
    A << 0.9, 0.1, 0.0, 0.8;
    Q << 0.5, 0.1, 0.1, 0.3;
    C0 << 1.0, 0.2, 0.2, 0.7;
    m0 << 0.5, -0.5;
    q_root = Q.llt().matrixL();
    c0_root = C0.llt().matrixL();
  }

  std::string name() const override { return "toy-linear2"; }
  int state_dim() const override { return 2; }
  int obs_dim() const override { return 1; }
  const std::vector<std::string>& param_names() const override {
    static const std::vector<std::string> none;
    return none;
  }
  double prior_logpdf(const Eigen::VectorXd&) const override { return 0.0; }
  Eigen::MatrixXd obs_matrix() const override {
    Eigen::MatrixXd p(1, 2);
    p << 1.0, 0.0;
    return p;
  }
  Eigen::MatrixXd obs_noise(const Eigen::VectorXd&) const override {
    return Eigen::MatrixXd::Constant(1, 1, 0.4);
  }
  bool deterministic_init() const override { return point_init; }
  void init_ensemble(const Eigen::VectorXd&, Eigen::Ref<Eigen::MatrixXd> members,
                     emcmc::RngStream& rng) const override {
    if (point_init) {
      members = m0.replicate(1, members.cols());
      return;
    }
    Eigen::MatrixXd z(2, members.cols());
    emcmc::fill_standard_normals(rng, z);
    members = (c0_root * z).colwise() + m0;
  }
  std::optional<int> normal_draw_count() const override { return 2; }
  void evolve_from_normals(const Eigen::VectorXd&, int,
                           Eigen::Ref<Eigen::MatrixXd> members,
                           const Eigen::Ref<const Eigen::MatrixXd>& z) const override {
    members = A * members + q_root * z;
  }
  std::optional<emcmc::LinearGaussianSpec> linear_spec(
      const Eigen::VectorXd&) const override {
    emcmc::LinearGaussianSpec spec;
    spec.A = A;
    spec.Q = Q;
    spec.P = obs_matrix();
    spec.S = obs_noise(Eigen::VectorXd());
    spec.init_mean = m0;
    spec.init_cov = point_init ? Eigen::Matrix2d::Zero().eval() : C0;
    return spec;
  }
  Eigen::VectorXd default_theta() const override { return Eigen::VectorXd(0); }
};

// Constant-state model: x stays at m0 forever (zero process noise, point
// init), y ~ N(x, s_sd^2). Every filter's estimate has the closed form
// sum_t log N(y_t; m0, s_sd^2).
struct ToyConst : emcmc::SsmModel {
  double m0 = 1.2, s_sd = 0.7;

  ToyConst() = default;
  ToyConst(double m, double s) : m0(m), s_sd(s) {}

  std::string name() const override { return "toy-const"; }
  int state_dim() const override { return 1; }
  int obs_dim() const override { return 1; }
  const std::vector<std::string>& param_names() const override {
    static const std::vector<std::string> none;
    return none;
  }
  double prior_logpdf(const Eigen::VectorXd&) const override { return 0.0; }
  Eigen::MatrixXd obs_matrix() const override {
    return Eigen::MatrixXd::Identity(1, 1);
  }
  Eigen::MatrixXd obs_noise(const Eigen::VectorXd&) const override {
    return Eigen::MatrixXd::Constant(1, 1, s_sd * s_sd);
  }
  void init_ensemble(const Eigen::VectorXd&, Eigen::Ref<Eigen::MatrixXd> members,
                     emcmc::RngStream&) const override {
    members.setConstant(m0);
  }
  std::optional<int> normal_draw_count() const override { return 1; }
  void evolve_from_normals(const Eigen::VectorXd&, int,
                           Eigen::Ref<Eigen::MatrixXd>,
                           const Eigen::Ref<const Eigen::MatrixXd>&) const override {
    // zero process noise: members unchanged
  }
  Eigen::VectorXd default_theta() const override { return Eigen::VectorXd(0); }
};

}  // namespace testsupport
