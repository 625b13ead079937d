#include "emcmc/models/lorenz.hpp"

#include <cmath>
#include <string>

namespace emcmc {

namespace {

// Exp(0.1) prior on e^psi with the log-transform Jacobian folded in.
double exp01_transformed_logpdf(double psi) {
  return std::log(0.1) - 0.1 * std::exp(psi) + psi;
}

}  // namespace

Lorenz63Model::Lorenz63Model(double dt, int inner_steps, double obs_var)
    : dt_(dt),
      inner_steps_(inner_steps),
      obs_var_(obs_var),
      names_{"log_theta1", "log_theta2", "log_theta3",
             "log_sigma1", "log_sigma2", "log_sigma3"} {
  if (dt_ <= 0.0) throw_config("lorenz63: dt must be positive");
  if (inner_steps_ < 1) throw_config("lorenz63: inner_steps must be at least 1");
  if (obs_var_ <= 0.0) throw_config("lorenz63: obs_var must be positive");
}

double Lorenz63Model::prior_logpdf(const Eigen::VectorXd& theta) const {
  double lp = 0.0;
  for (int i = 0; i < 6; ++i) lp += exp01_transformed_logpdf(theta(i));
  return lp;
}

Eigen::MatrixXd Lorenz63Model::obs_matrix() const {
  return Eigen::MatrixXd::Identity(3, 3);
}

Eigen::MatrixXd Lorenz63Model::obs_noise(const Eigen::VectorXd& theta) const {
  (void)theta;
  return obs_var_ * Eigen::MatrixXd::Identity(3, 3);
}

void Lorenz63Model::init_ensemble(const Eigen::VectorXd& theta,
                                  Eigen::Ref<Eigen::MatrixXd> members, RngStream& rng) const {
  (void)theta;
  (void)rng;
  members.setZero();
}

void Lorenz63Model::evolve_from_normals(const Eigen::VectorXd& theta, int step,
                                        Eigen::Ref<Eigen::MatrixXd> members,
                                        const Eigen::Ref<const Eigen::MatrixXd>& z) const {
  (void)step;
  const double t1 = std::exp(theta(0));
  const double t2 = std::exp(theta(1));
  const double t3 = std::exp(theta(2));
  const double sqdt = std::sqrt(dt_);
  const Eigen::Vector3d noise_scale(std::exp(theta(3)) * sqdt, std::exp(theta(4)) * sqdt,
                                    std::exp(theta(5)) * sqdt);
  for (Eigen::Index j = 0; j < members.cols(); ++j) {
    Eigen::Vector3d x = members.col(j);
    for (int k = 0; k < inner_steps_; ++k) {
      const Eigen::Vector3d alpha(t1 * (x(1) - x(0)), t2 * x(0) - x(1) - x(0) * x(2),
                                  x(0) * x(1) - t3 * x(2));
      x += alpha * dt_ + noise_scale.cwiseProduct(z.block<3, 1>(3 * k, j));
      if (!x.allFinite())
        throw_numerical("lorenz63: state diverged at inner step " + std::to_string(k + 1));
    }
    members.col(j) = x;
  }
}

Eigen::VectorXd Lorenz63Model::default_theta() const {
  Eigen::VectorXd theta(6);
  theta << std::log(10.0), std::log(28.0), std::log(8.0 / 3.0), 0.5 * std::log(10.0),
      0.5 * std::log(10.0), 0.5 * std::log(10.0);
  return theta;
}

}  // namespace emcmc
