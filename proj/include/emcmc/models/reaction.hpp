#pragma once

#include <functional>
#include <string>
#include <vector>

#include "emcmc/state_space.hpp"

// Markov jump processes simulated exactly by Gillespie's direct method, and
// the two reaction-network state space models built on it. Between
// observations the state advances by `t_span` time units of exact
// simulation; the ensemble analysis step may leave states fractional, so
// hazards are evaluated on real-valued states, clamped to be nonnegative,
// and a reaction is masked off whenever firing it would push a component
// below zero (for integer states this never binds: mass-action hazards
// already vanish when reactants run out).

namespace emcmc {

struct ReactionNetwork {
  Eigen::MatrixXi stoichiometry;  // n_reactions x n_species state increments
  std::function<void(const Eigen::VectorXd& x, const Eigen::VectorXd& c,
                     Eigen::Ref<Eigen::VectorXd> hazards)>
      hazard;

  int n_reactions() const { return static_cast<int>(stoichiometry.rows()); }
  int n_species() const { return static_cast<int>(stoichiometry.cols()); }
};

// One direct-method event: dwell ~ Exp(h0), reaction i w.p. h_i / h0.
// An absorbing state (h0 = 0) yields {inf, -1} and consumes no randomness.
struct GillespieEvent {
  double dwell;
  int reaction;
};

GillespieEvent gillespie_next(const ReactionNetwork& net, const Eigen::VectorXd& x,
                              const Eigen::VectorXd& c, RngStream& rng);

// Advance x by t_span time units; returns the number of events applied.
// Throws a numerical error when more than event_cap events fire, which
// signals rate explosion rather than a recoverable state.
long gillespie_evolve(const ReactionNetwork& net, Eigen::Ref<Eigen::VectorXd> x,
                      const Eigen::VectorXd& c, double t_span, RngStream& rng,
                      long event_cap = 1000000);

// Predator-prey system: species (prey, predator), reactions
//   prey birth (+1, 0), predation (-1, +1), predator death (0, -1)
// with hazards (c1 x1, c2 x1 x2, c3 x2). Sampled parameters are
// (log c1, log c2, log c3, log s1, log s2) under U(-8, 8) priors; the
// observation is y = x + N(0, diag(s1^2, s2^2)).
class LotkaVolterraModel : public SsmModel {
 public:
  explicit LotkaVolterraModel(double t_span = 1.0, long event_cap = 1000000);

  std::string name() const override { return "lotka-volterra"; }
  int state_dim() const override { return 2; }
  int obs_dim() const override { return 2; }
  const std::vector<std::string>& param_names() const override { return names_; }

  double prior_logpdf(const Eigen::VectorXd& theta) const override;
  Eigen::MatrixXd obs_matrix() const override;
  Eigen::MatrixXd obs_noise(const Eigen::VectorXd& theta) const override;

  void init_ensemble(const Eigen::VectorXd& theta, Eigen::Ref<Eigen::MatrixXd> members,
                     RngStream& rng) const override;
  void evolve_ensemble(const Eigen::VectorXd& theta, int step,
                       Eigen::Ref<Eigen::MatrixXd> members, RngStream& rng) const override;
  bool reflect_nonnegative() const override { return true; }

  Eigen::VectorXd default_theta() const override;
  const ReactionNetwork& network() const { return net_; }

 private:
  ReactionNetwork net_;
  double t_span_;
  long event_cap_;
  std::vector<std::string> names_;
};

// Prokaryotic autoregulation network: species (gene, bound gene, RNA,
// protein P, dimer P2) with the eight reactions
//   R1 gene + P2 -> bound     R2 bound -> gene + P2
//   R3 gene -> gene + RNA     R4 RNA -> RNA + P
//   R5 2P -> P2               R6 P2 -> 2P
//   R7 RNA -> 0               R8 P -> 0
// and mass-action hazards (c1 x1 x5, c2 x2, c3 x1, c4 x3,
// c5 x4 (x4 - 1) / 2, c6 x5, c7 x3, c8 x4). The dimerisation rates c5, c6
// are fixed; the sampled parameters are log c_i for i in {1,2,3,4,7,8}
// with Ga(1, 1/2) priors on the natural scale. Observed are RNA and the
// total protein count x4 + 2 x5, with known noise sd (sigma1, sigma2); the
// filtering noise is floored at noise_floor per coordinate so an exact
// observation regime still shifts the ensemble, while simulation keeps the
// exact noise.
class AutoregModel : public SsmModel {
 public:
  explicit AutoregModel(double sigma1 = 1.0, double sigma2 = 1.0, double noise_floor = 0.01,
                        double c5 = 0.1, double c6 = 0.9, double t_span = 1.0,
                        long event_cap = 1000000);

  std::string name() const override { return "autoreg"; }
  int state_dim() const override { return 5; }
  int obs_dim() const override { return 2; }
  const std::vector<std::string>& param_names() const override { return names_; }

  double prior_logpdf(const Eigen::VectorXd& theta) const override;
  Eigen::MatrixXd obs_matrix() const override;
  Eigen::MatrixXd obs_noise(const Eigen::VectorXd& theta) const override;
  Eigen::MatrixXd sim_obs_noise(const Eigen::VectorXd& theta) const override;

  void init_ensemble(const Eigen::VectorXd& theta, Eigen::Ref<Eigen::MatrixXd> members,
                     RngStream& rng) const override;
  void evolve_ensemble(const Eigen::VectorXd& theta, int step,
                       Eigen::Ref<Eigen::MatrixXd> members, RngStream& rng) const override;
  bool reflect_nonnegative() const override { return true; }

  Eigen::VectorXd default_theta() const override;
  const ReactionNetwork& network() const { return net_; }

 private:
  Eigen::VectorXd rates(const Eigen::VectorXd& theta) const;

  ReactionNetwork net_;
  double sigma1_, sigma2_, noise_floor_;
  double c5_, c6_;
  double t_span_;
  long event_cap_;
  std::vector<std::string> names_;
};

}  // namespace emcmc
