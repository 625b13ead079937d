#include "emcmc/models/ecology.hpp"

#include <cmath>

namespace emcmc {

namespace {

constexpr double kLogCap = 700.0;

double clamp_log_state(double v) {
  if (v > kLogCap) return kLogCap;
  if (v < -kLogCap) return -kLogCap;
  return v;  // NaN passes through; evolution never manufactures one
}

// coef * value with the convention 0 * inf = 0, so a zero coefficient
// cannot poison a step whose power term overflowed.
double term(double coef, double value) { return coef == 0.0 ? 0.0 : coef * value; }

double exp_rate_logpdf(double x) {  // Exp(1), support x > 0
  return x > 0.0 ? -x : kNegInf;
}

double std_normal_logpdf(double x) { return -0.5 * (kLogTwoPi + x * x); }

}  // namespace

EcologyModel::EcologyModel(GrowthMap map) : map_(map) {
  switch (map_) {
    case GrowthMap::Ricker:
      names_ = {"beta0", "beta1", "sigma_w", "sigma_e", "log_n0"};
      break;
    case GrowthMap::ThetaLogistic:
      names_ = {"beta0", "beta2", "beta3", "sigma_w", "sigma_e", "log_n0"};
      break;
    case GrowthMap::MateLimited:
      names_ = {"beta0", "beta1", "beta4", "sigma_w", "sigma_e", "log_n0"};
      break;
    case GrowthMap::FlexibleAllee:
      names_ = {"beta0", "beta1", "beta5", "sigma_w", "sigma_e", "log_n0"};
      break;
  }
}

std::string EcologyModel::name() const {
  switch (map_) {
    case GrowthMap::Ricker: return "ricker";
    case GrowthMap::ThetaLogistic: return "theta-logistic";
    case GrowthMap::MateLimited: return "mate-limited";
    case GrowthMap::FlexibleAllee: return "flexible-allee";
  }
  return {};
}

double EcologyModel::prior_logpdf(const Eigen::VectorXd& theta) const {
  // Layout: growth coefficients, then sigma_w, sigma_e, log n0.
  const int d = param_dim();
  const double sigma_w = theta(d - 3);
  const double sigma_e = theta(d - 2);
  double lp = exp_rate_logpdf(sigma_w) + exp_rate_logpdf(sigma_e);
  // log n0 is improper-flat: contributes nothing.
  switch (map_) {
    case GrowthMap::Ricker:
      lp += std_normal_logpdf(theta(0)) + std_normal_logpdf(theta(1));
      break;
    case GrowthMap::ThetaLogistic:
      lp += std_normal_logpdf(theta(0)) + std_normal_logpdf(theta(1)) +
            std_normal_logpdf(theta(2));
      break;
    case GrowthMap::MateLimited:
      lp += std_normal_logpdf(theta(0)) + std_normal_logpdf(theta(1)) +
            exp_rate_logpdf(theta(2));
      break;
    case GrowthMap::FlexibleAllee:
      lp += std_normal_logpdf(theta(0)) + std_normal_logpdf(theta(1)) +
            std_normal_logpdf(theta(2));
      break;
  }
  return lp;
}

Eigen::MatrixXd EcologyModel::obs_matrix() const {
  return Eigen::MatrixXd::Identity(1, 1);
}

Eigen::MatrixXd EcologyModel::obs_noise(const Eigen::VectorXd& theta) const {
  const double sigma_e = theta(param_dim() - 2);
  return Eigen::MatrixXd::Constant(1, 1, sigma_e * sigma_e);
}

void EcologyModel::init_ensemble(const Eigen::VectorXd& theta,
                                 Eigen::Ref<Eigen::MatrixXd> members, RngStream& rng) const {
  (void)rng;
  members.setConstant(clamp_log_state(theta(param_dim() - 1)));
}

void EcologyModel::evolve_from_normals(const Eigen::VectorXd& theta, int step,
                                       Eigen::Ref<Eigen::MatrixXd> members,
                                       const Eigen::Ref<const Eigen::MatrixXd>& z) const {
  (void)step;
  const int d = param_dim();
  const double b0 = theta(0);
  const double sigma_w = theta(d - 3);
  for (Eigen::Index j = 0; j < members.cols(); ++j) {
    const double logn = clamp_log_state(members(0, j));
    const double n = std::exp(logn);
    double next = 0.0;
    switch (map_) {
      case GrowthMap::Ricker:
        next = logn + b0 + term(theta(1), n);
        break;
      case GrowthMap::ThetaLogistic:
        next = logn + b0 + term(theta(1), std::pow(n, theta(2)));
        break;
      case GrowthMap::MateLimited:
        next = 2.0 * logn + b0 + term(theta(1), n) - std::log(theta(2) + n);
        break;
      case GrowthMap::FlexibleAllee:
        next = logn + b0 + term(theta(1), n) + term(theta(2), n * n);
        break;
    }
    members(0, j) = clamp_log_state(next + sigma_w * z(0, j));
  }
}

Eigen::VectorXd EcologyModel::default_theta() const {
  Eigen::VectorXd theta(param_dim());
  switch (map_) {
    case GrowthMap::Ricker:
      theta << 0.4, -0.02, 0.3, 0.1, 3.0;
      break;
    case GrowthMap::ThetaLogistic:
      theta << 0.4, -0.1, 0.5, 0.3, 0.1, 3.0;
      break;
    case GrowthMap::MateLimited:
      theta << 1.0, -0.01, 10.0, 0.3, 0.1, 4.0;
      break;
    case GrowthMap::FlexibleAllee:
      theta << -0.1, 0.03, -0.0005, 0.3, 0.1, 3.5;
      break;
  }
  return theta;
}

}  // namespace emcmc
