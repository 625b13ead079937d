#pragma once

#include <string>
#include <vector>

#include "emcmc/state_space.hpp"

// Stochastic Lorenz 63 system, discretised by Euler–Maruyama:
//   x_{i+1} = x_i + alpha(x_i, theta) dt + diag(sigma) sqrt(dt) z_{i+1}
//   alpha(x) = (t1 (x2 - x1), t2 x1 - x2 - x1 x3, x1 x2 - t3 x3)
// with `inner_steps` increments between successive observations and
// independent observations y ~ N(x, obs_var I3) on all three coordinates.
//
// Sampled parameters are (log t1, log t2, log t3, log s1, log s2, log s3);
// each natural-scale value carries an Exp(0.1) prior, with the change of
// variables folded into prior_logpdf. The observation variance is fixed.

namespace emcmc {

class Lorenz63Model : public SsmModel {
 public:
  explicit Lorenz63Model(double dt = 0.01, int inner_steps = 20, double obs_var = 2.0);

  std::string name() const override { return "lorenz63"; }
  int state_dim() const override { return 3; }
  int obs_dim() const override { return 3; }
  const std::vector<std::string>& param_names() const override { return names_; }

  double prior_logpdf(const Eigen::VectorXd& theta) const override;
  Eigen::MatrixXd obs_matrix() const override;
  Eigen::MatrixXd obs_noise(const Eigen::VectorXd& theta) const override;

  void init_ensemble(const Eigen::VectorXd& theta, Eigen::Ref<Eigen::MatrixXd> members,
                     RngStream& rng) const override;
  std::optional<int> normal_draw_count() const override { return 3 * inner_steps_; }
  void evolve_from_normals(const Eigen::VectorXd& theta, int step,
                           Eigen::Ref<Eigen::MatrixXd> members,
                           const Eigen::Ref<const Eigen::MatrixXd>& z) const override;

  Eigen::VectorXd default_theta() const override;

  double dt() const { return dt_; }
  int inner_steps() const { return inner_steps_; }

 private:
  double dt_;
  int inner_steps_;
  double obs_var_;
  std::vector<std::string> names_;
};

}  // namespace emcmc
