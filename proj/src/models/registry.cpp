#include "emcmc/models/registry.hpp"

#include <Eigen/Cholesky>
#include <cmath>

#include "emcmc/models/ecology.hpp"
#include "emcmc/models/linear_gaussian.hpp"
#include "emcmc/models/lorenz.hpp"
#include "emcmc/models/reaction.hpp"

namespace emcmc {

namespace {

double take(std::map<std::string, double>& m, const std::string& key, double fallback) {
  const auto it = m.find(key);
  if (it == m.end()) return fallback;
  const double v = it->second;
  m.erase(it);
  return v;
}

long take_count(std::map<std::string, double>& m, const std::string& key, long fallback) {
  const auto it = m.find(key);
  if (it == m.end()) return fallback;
  const double v = it->second;
  m.erase(it);
  if (!(v == std::floor(v)))
    throw_config("build_model: override '" + key + "' must be an integer");
  return static_cast<long>(v);
}

void expect_consumed(const std::map<std::string, double>& m, const std::string& name) {
  if (!m.empty())
    throw_config("build_model: " + name + " does not accept override '" +
                 m.begin()->first + "'");
}

}  // namespace

const std::vector<std::string>& model_names() {
  static const std::vector<std::string> names = {
      "ricker",   "theta-logistic", "mate-limited", "flexible-allee",
      "lorenz63", "lotka-volterra", "autoreg",      "linear-gaussian"};
  return names;
}

std::unique_ptr<SsmModel> build_model(const std::string& name,
                                      const std::map<std::string, double>& overrides) {
  std::map<std::string, double> ov = overrides;
  std::unique_ptr<SsmModel> model;
  if (name == "ricker") {
    model = std::make_unique<EcologyModel>(GrowthMap::Ricker);
  } else if (name == "theta-logistic") {
    model = std::make_unique<EcologyModel>(GrowthMap::ThetaLogistic);
  } else if (name == "mate-limited") {
    model = std::make_unique<EcologyModel>(GrowthMap::MateLimited);
  } else if (name == "flexible-allee") {
    model = std::make_unique<EcologyModel>(GrowthMap::FlexibleAllee);
  } else if (name == "lorenz63") {
    const double dt = take(ov, "dt", 0.01);
    const long inner = take_count(ov, "inner_steps", 20);
    const double obs_var = take(ov, "obs_var", 2.0);
    model = std::make_unique<Lorenz63Model>(dt, static_cast<int>(inner), obs_var);
  } else if (name == "lotka-volterra") {
    const double t_span = take(ov, "t_span", 1.0);
    const long cap = take_count(ov, "event_cap", 1000000);
    model = std::make_unique<LotkaVolterraModel>(t_span, cap);
  } else if (name == "autoreg") {
    const double sigma1 = take(ov, "sigma1", 1.0);
    const double sigma2 = take(ov, "sigma2", 1.0);
    const double floor = take(ov, "noise_floor", 0.01);
    const double c5 = take(ov, "c5", 0.1);
    const double c6 = take(ov, "c6", 0.9);
    const double t_span = take(ov, "t_span", 1.0);
    const long cap = take_count(ov, "event_cap", 1000000);
    model = std::make_unique<AutoregModel>(sigma1, sigma2, floor, c5, c6, t_span, cap);
  } else if (name == "linear-gaussian") {
    LinearGaussianModel::Settings s;
    s.a = take(ov, "a", s.a);
    s.q = take(ov, "q", s.q);
    s.p = take(ov, "p", s.p);
    s.s = take(ov, "s", s.s);
    s.init_var = take(ov, "init_var", s.init_var);
    s.prior_mean = take(ov, "prior_mean", s.prior_mean);
    s.prior_var = take(ov, "prior_var", s.prior_var);
    model = std::make_unique<LinearGaussianModel>(s);
  } else {
    throw_config("build_model: unknown model '" + name + "'");
  }
  expect_consumed(ov, name);
  return model;
}

SimulationProtocol default_protocol(const std::string& name) {
  if (name == "ricker" || name == "theta-logistic" || name == "mate-limited" ||
      name == "flexible-allee")
    return {100, false};
  if (name == "lorenz63") return {30, false};
  if (name == "lotka-volterra") return {50, true};
  if (name == "autoreg") return {100, true};
  if (name == "linear-gaussian") return {5, false};
  throw_config("default_protocol: unknown model '" + name + "'");
}

SimulatedData simulate_dataset(const SsmModel& model, const Eigen::VectorXd& theta_true,
                               int steps, bool observe_initial, RngStream& stream) {
  if (steps < 1) throw_config("simulate_dataset: steps must be at least 1");
  if (theta_true.size() != model.param_dim())
    throw_dimension("simulate_dataset: parameter vector has wrong length");

  const int dx = model.state_dim();
  const int dy = model.obs_dim();
  const Eigen::MatrixXd P = model.obs_matrix();
  const Eigen::MatrixXd S = model.sim_obs_noise(theta_true);
  const bool noisy = !S.isZero(0.0);
  Eigen::MatrixXd noise_root;
  if (noisy) {
    Eigen::LLT<Eigen::MatrixXd> llt(S);
    if (llt.info() != Eigen::Success)
      throw_numerical("simulate_dataset: observation noise is not factorizable");
    noise_root = llt.matrixL();
  }

  SimulatedData out;
  out.states.resize(dx, steps + 1);
  const int n_obs = steps + (observe_initial ? 1 : 0);
  out.data.y.resize(dy, n_obs);
  out.data.times.reserve(n_obs);

  Eigen::MatrixXd x(dx, 1);
  model.init_ensemble(theta_true, x, stream);
  out.states.col(0) = x.col(0);

  int obs_idx = 0;
  auto observe = [&](int t) {
    Eigen::VectorXd y = P * out.states.col(t);
    if (noisy) y += noise_root * standard_normals(stream, dy);
    out.data.times.push_back(t);
    out.data.y.col(obs_idx++) = y;
  };

  if (observe_initial) observe(0);
  for (int t = 1; t <= steps; ++t) {
    model.evolve_ensemble(theta_true, t, x, stream);
    out.states.col(t) = x.col(0);
    observe(t);
  }
  out.data.validate(dy);
  return out;
}

}  // namespace emcmc
