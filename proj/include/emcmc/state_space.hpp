#pragma once

#include <Eigen/Core>
#include <optional>
#include <string>
#include <vector>

#include "emcmc/error.hpp"
#include "emcmc/gaussian.hpp"
#include "emcmc/random.hpp"

// The state space model contract shared by filters, samplers, and the CLI.
// A model owns its parameterization (including any log-scale transforms,
// whose Jacobians are folded into the transformed prior), its observation
// map y = P x + v with v ~ N(0, S(theta)), and its evolution kernel from
// one observation time to the next. Evolution randomness either has a
// fixed per-step draw count m (normal-driven models, required by the
// correlated and quasi-Monte Carlo variants) or is consumed freely from a
// stream (jump processes).

namespace emcmc {

struct LinearGaussianSpec {
  Eigen::MatrixXd A;          // x' = A x + w, w ~ N(0, Q)
  Eigen::MatrixXd Q;
  Eigen::MatrixXd P;          // y = P x + v, v ~ N(0, S)
  Eigen::MatrixXd S;
  Eigen::VectorXd init_mean;
  Eigen::MatrixXd init_cov;
};

// Linear observation regime y = P x + v, v ~ N(0, S), with S already
// evaluated at a concrete parameter vector.
struct ObsModel {
  Eigen::MatrixXd P;
  Eigen::MatrixXd S;
};

class SsmModel {
 public:
  virtual ~SsmModel() = default;

  virtual std::string name() const = 0;
  virtual int state_dim() const = 0;
  virtual int obs_dim() const = 0;
  virtual const std::vector<std::string>& param_names() const = 0;
  int param_dim() const { return static_cast<int>(param_names().size()); }

  // log p(theta) on the sampled scale; -inf outside support.
  virtual double prior_logpdf(const Eigen::VectorXd& theta) const = 0;

  virtual Eigen::MatrixXd obs_matrix() const = 0;
  virtual Eigen::MatrixXd obs_noise(const Eigen::VectorXd& theta) const = 0;

  // Observation noise used when generating synthetic data. Defaults to the
  // filtering noise; models that floor a degenerate variance for the
  // filter's benefit override this so simulated data keeps the exact noise.
  virtual Eigen::MatrixXd sim_obs_noise(const Eigen::VectorXd& theta) const {
    return obs_noise(theta);
  }

  // Whether the initial ensemble is a deterministic function of theta
  // (point-mass initialization). Block-driven and correlated runs require
  // this, since the auxiliary block only covers per-step noise.
  virtual bool deterministic_init() const { return true; }

  // Fill members (state_dim x N) with draws from the initial distribution.
  virtual void init_ensemble(const Eigen::VectorXd& theta,
                             Eigen::Ref<Eigen::MatrixXd> members,
                             RngStream& rng) const = 0;

  // Fixed evolution draw count m per observation step, when the model is
  // normal-driven. Jump-process models return nullopt and must override
  // evolve_ensemble instead.
  virtual std::optional<int> normal_draw_count() const { return std::nullopt; }

  // Advance all members from observation step-1 to step given the m x N
  // matrix of standard normals z.
  virtual void evolve_from_normals(const Eigen::VectorXd& theta, int step,
                                   Eigen::Ref<Eigen::MatrixXd> members,
                                   const Eigen::Ref<const Eigen::MatrixXd>& z) const {
    (void)theta;
    (void)step;
    (void)members;
    (void)z;
    throw_config(name() + ": evolution is not normal-driven");
  }

  // Stream-driven evolution. Normal-driven models route through
  // evolve_from_normals so stream and block executions agree draw for
  // draw; jump processes override this directly.
  virtual void evolve_ensemble(const Eigen::VectorXd& theta, int step,
                               Eigen::Ref<Eigen::MatrixXd> members,
                               RngStream& rng) const {
    const auto m = normal_draw_count();
    if (!m) throw_config(name() + ": evolve_ensemble not implemented");
    Eigen::MatrixXd z(*m, members.cols());
    fill_standard_normals(rng, z);
    evolve_from_normals(theta, step, members, z);
  }

  // Jump-process models keep ensemble states nonnegative after the
  // analysis shift via reflection x <- |x|.
  virtual bool reflect_nonnegative() const { return false; }

  // Exact linear-Gaussian structure at theta, when the model has one.
  virtual std::optional<LinearGaussianSpec> linear_spec(
      const Eigen::VectorXd& theta) const {
    (void)theta;
    return std::nullopt;
  }

  // Reference parameter values used by the bundled simulation protocols.
  virtual Eigen::VectorXd default_theta() const = 0;
};

// Observations indexed by observation step. Steps must be contiguous
// (1..T, or 0..T when an observation of the initial state exists).
struct Dataset {
  std::vector<int> times;  // observation step indices
  Eigen::MatrixXd y;       // obs_dim x n_obs, column j observed at times[j]

  int n_obs() const { return static_cast<int>(times.size()); }
  bool has_y0() const { return !times.empty() && times.front() == 0; }
  int steps() const { return times.empty() ? 0 : times.back(); }

  void validate(int obs_dim) const {
    if (times.empty()) throw_config("Dataset: no observations");
    if (y.cols() != static_cast<Eigen::Index>(times.size()))
      throw_dimension("Dataset: observation count does not match time list");
    if (y.rows() != obs_dim)
      throw_dimension("Dataset: observation dimension does not match model");
    if (times.front() != 0 && times.front() != 1)
      throw_config("Dataset: observation steps must start at 0 or 1");
    for (std::size_t i = 1; i < times.size(); ++i)
      if (times[i] != times[i - 1] + 1)
        throw_config("Dataset: observation steps must be contiguous");
  }
};

inline double prior_logpdf(const Eigen::VectorXd& theta, const SsmModel& model) {
  if (theta.size() != model.param_dim())
    throw_dimension("prior_logpdf: parameter vector has wrong length");
  return model.prior_logpdf(theta);
}

// log N(y; P x, S(theta))
inline double observe_logpdf(const Eigen::VectorXd& y, const Eigen::VectorXd& x,
                             const Eigen::VectorXd& theta,
                             const SsmModel& model) {
  if (y.size() != model.obs_dim())
    throw_dimension("observe_logpdf: observation has wrong length");
  if (x.size() != model.state_dim())
    throw_dimension("observe_logpdf: state has wrong length");
  const Eigen::MatrixXd P = model.obs_matrix();
  const Eigen::MatrixXd S = model.obs_noise(theta);
  Eigen::LLT<Eigen::MatrixXd> llt(S);
  if (llt.info() != Eigen::Success)
    throw_numerical("observe_logpdf: singular observation covariance");
  return gaussian_logpdf_chol(y, (P * x).eval(), llt);
}

}  // namespace emcmc
