#include "emcmc/models/linear_gaussian.hpp"

#include <cmath>

namespace emcmc {

LinearGaussianModel::LinearGaussianModel() : LinearGaussianModel(Settings{}) {}

LinearGaussianModel::LinearGaussianModel(Settings settings)
    : settings_(settings), names_{"init_mean"} {
  if (settings_.q < 0.0) throw_config("linear-gaussian: q must be nonnegative");
  if (settings_.s < 0.0) throw_config("linear-gaussian: s must be nonnegative");
  if (settings_.init_var < 0.0)
    throw_config("linear-gaussian: init_var must be nonnegative");
  if (settings_.prior_var <= 0.0)
    throw_config("linear-gaussian: prior_var must be positive");
}

double LinearGaussianModel::prior_logpdf(const Eigen::VectorXd& theta) const {
  return normal_logpdf(theta(0), settings_.prior_mean, std::sqrt(settings_.prior_var));
}

Eigen::MatrixXd LinearGaussianModel::obs_matrix() const {
  return Eigen::MatrixXd::Constant(1, 1, settings_.p);
}

Eigen::MatrixXd LinearGaussianModel::obs_noise(const Eigen::VectorXd& theta) const {
  (void)theta;
  return Eigen::MatrixXd::Constant(1, 1, settings_.s);
}

void LinearGaussianModel::init_ensemble(const Eigen::VectorXd& theta,
                                        Eigen::Ref<Eigen::MatrixXd> members,
                                        RngStream& rng) const {
  members.setConstant(theta(0));
  if (settings_.init_var > 0.0) {
    Eigen::MatrixXd z(1, members.cols());
    fill_standard_normals(rng, z);
    members += std::sqrt(settings_.init_var) * z;
  }
}

void LinearGaussianModel::evolve_from_normals(const Eigen::VectorXd& theta, int step,
                                              Eigen::Ref<Eigen::MatrixXd> members,
                                              const Eigen::Ref<const Eigen::MatrixXd>& z) const {
  (void)theta;
  (void)step;
  members = settings_.a * members + std::sqrt(settings_.q) * z;
}

std::optional<LinearGaussianSpec> LinearGaussianModel::linear_spec(
    const Eigen::VectorXd& theta) const {
  LinearGaussianSpec spec;
  spec.A = Eigen::MatrixXd::Constant(1, 1, settings_.a);
  spec.Q = Eigen::MatrixXd::Constant(1, 1, settings_.q);
  spec.P = Eigen::MatrixXd::Constant(1, 1, settings_.p);
  spec.S = Eigen::MatrixXd::Constant(1, 1, settings_.s);
  spec.init_mean = Eigen::VectorXd::Constant(1, theta(0));
  spec.init_cov = Eigen::MatrixXd::Constant(1, 1, settings_.init_var);
  return spec;
}

Eigen::VectorXd LinearGaussianModel::default_theta() const {
  return Eigen::VectorXd::Constant(1, 1.0);
}

}  // namespace emcmc
