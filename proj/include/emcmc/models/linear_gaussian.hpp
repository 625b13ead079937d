#pragma once

#include <string>
#include <vector>

#include "emcmc/state_space.hpp"

// Scalar linear-Gaussian model used to validate samplers and estimators
// against exact Kalman answers:
//   x_0 ~ N(theta, init_var),  x_t = a x_{t-1} + N(0, q),  y_t = p x_t + N(0, s)
// The single sampled parameter is the initial mean, with a normal prior.
// The defaults (a = 1, q = 0, init_var = 0) make y_t iid N(theta, s), so
// the posterior over theta is conjugate and available in closed form.

namespace emcmc {

class LinearGaussianModel : public SsmModel {
 public:
  struct Settings {
    double a = 1.0;
    double q = 0.0;
    double p = 1.0;
    double s = 0.25;
    double init_var = 0.0;
    double prior_mean = 0.0;
    double prior_var = 4.0;
  };

  LinearGaussianModel();
  explicit LinearGaussianModel(Settings settings);

  std::string name() const override { return "linear-gaussian"; }
  int state_dim() const override { return 1; }
  int obs_dim() const override { return 1; }
  const std::vector<std::string>& param_names() const override { return names_; }

  double prior_logpdf(const Eigen::VectorXd& theta) const override;
  Eigen::MatrixXd obs_matrix() const override;
  Eigen::MatrixXd obs_noise(const Eigen::VectorXd& theta) const override;

  bool deterministic_init() const override { return settings_.init_var == 0.0; }
  void init_ensemble(const Eigen::VectorXd& theta, Eigen::Ref<Eigen::MatrixXd> members,
                     RngStream& rng) const override;
  std::optional<int> normal_draw_count() const override { return 1; }
  void evolve_from_normals(const Eigen::VectorXd& theta, int step,
                           Eigen::Ref<Eigen::MatrixXd> members,
                           const Eigen::Ref<const Eigen::MatrixXd>& z) const override;

  std::optional<LinearGaussianSpec> linear_spec(const Eigen::VectorXd& theta) const override;
  Eigen::VectorXd default_theta() const override;

  const Settings& settings() const { return settings_; }

 private:
  Settings settings_;
  std::vector<std::string> names_;
};

}  // namespace emcmc
