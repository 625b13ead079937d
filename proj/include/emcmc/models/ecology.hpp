#pragma once

#include <string>
#include <vector>

#include "emcmc/state_space.hpp"

// Scalar population-growth state space models. The state is log n_t, so the
// abundance n_t stays positive by construction, and observations are noisy
// readings of the log abundance: y_t ~ N(log n_t, sigma_e^2).
//
// Growth recursions (epsilon ~ N(0, sigma_w^2)):
//   Ricker          log n' = log n + b0 + b1 n + eps
//   ThetaLogistic   log n' = log n + b0 + b2 n^b3 + eps
//   MateLimited     log n' = 2 log n + b0 + b1 n - log(b4 + n) + eps
//   FlexibleAllee   log n' = log n + b0 + b1 n + b5 n^2 + eps
//
// Coefficients carry N(0,1) priors, the scales sigma_w, sigma_e and the
// saturation constant b4 carry Exp(1) priors, and log n_0 — a sampled
// parameter that doubles as the point-mass initial state — carries an
// improper flat prior. The log state is clamped to [-700, 700] wherever it
// enters or leaves an evolution step, so exp(log n) never overflows.

namespace emcmc {

enum class GrowthMap { Ricker, ThetaLogistic, MateLimited, FlexibleAllee };

class EcologyModel : public SsmModel {
 public:
  explicit EcologyModel(GrowthMap map);

  std::string name() const override;
  int state_dim() const override { return 1; }
  int obs_dim() const override { return 1; }
  const std::vector<std::string>& param_names() const override { return names_; }

  double prior_logpdf(const Eigen::VectorXd& theta) const override;
  Eigen::MatrixXd obs_matrix() const override;
  Eigen::MatrixXd obs_noise(const Eigen::VectorXd& theta) const override;

  void init_ensemble(const Eigen::VectorXd& theta, Eigen::Ref<Eigen::MatrixXd> members,
                     RngStream& rng) const override;
  std::optional<int> normal_draw_count() const override { return 1; }
  void evolve_from_normals(const Eigen::VectorXd& theta, int step,
                           Eigen::Ref<Eigen::MatrixXd> members,
                           const Eigen::Ref<const Eigen::MatrixXd>& z) const override;

  Eigen::VectorXd default_theta() const override;
  GrowthMap growth_map() const { return map_; }

 private:
  GrowthMap map_;
  std::vector<std::string> names_;
};

}  // namespace emcmc
