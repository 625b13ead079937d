#include "emcmc/io/config.hpp"

#include <fstream>
#include <set>

#include "emcmc/error.hpp"
#include "emcmc/models/registry.hpp"

namespace emcmc {

namespace {

const std::vector<std::pair<std::string, EstimatorKind>>& estimator_table() {
  static const std::vector<std::pair<std::string, EstimatorKind>> table = {
      {"bpf", EstimatorKind::Bpf},
      {"enkf", EstimatorKind::Enkf},
      {"enkf-unbiased", EstimatorKind::EnkfUnbiased},
      {"enkf-correlated", EstimatorKind::EnkfCorrelated},
      {"enkf-rqmc", EstimatorKind::EnkfRqmc},
      {"kalman", EstimatorKind::Kalman},
  };
  return table;
}

bool uses_early_rejection(EstimatorKind kind) {
  return kind == EstimatorKind::Enkf || kind == EstimatorKind::EnkfRqmc ||
         kind == EstimatorKind::EnkfCorrelated;
}

// nlohmann reports type mismatches with its own exception hierarchy; convert
// to config errors naming the offending key.
template <typename T>
T get_as(const nlohmann::json& j, const std::string& key) {
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw_config("config: key '" + key + "' has the wrong type (" + e.what() + ")");
  }
}

std::vector<double> get_vector(const nlohmann::json& j, const std::string& key) {
  if (!j.at(key).is_array())
    throw_config("config: key '" + key + "' must be an array of numbers");
  return get_as<std::vector<double>>(j, key);
}

}  // namespace

const std::vector<std::string>& estimator_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& [name, kind] : estimator_table()) out.push_back(name);
    return out;
  }();
  return names;
}

EstimatorKind estimator_from_name(const std::string& name) {
  for (const auto& [known, kind] : estimator_table())
    if (known == name) return kind;
  std::string known;
  for (const auto& n : estimator_names()) known += (known.empty() ? "" : ", ") + n;
  throw_config("config: unknown estimator '" + name + "' (known: " + known + ")");
}

const std::string& estimator_name(EstimatorKind kind) {
  for (const auto& [name, known] : estimator_table())
    if (known == kind) return name;
  throw_config("config: unnamed estimator kind");
}

RunConfig config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw_config("config: expected a JSON object");
  static const std::set<std::string> known = {
      "model",         "overrides",     "data",           "steps",
      "observe_initial", "theta_true",  "estimator",      "n_particles",
      "sigma_u",       "early_rejection", "proposal",     "pilot_iterations",
      "pilot_step",    "scale",         "iterations",     "burn_in",
      "init",          "chains",        "seed_master",    "seed_data",
      "seed_chain",    "out"};
  for (const auto& [key, value] : j.items())
    if (!known.count(key)) throw_config("config: unknown key '" + key + "'");

  RunConfig c;
  if (j.contains("model")) c.model = get_as<std::string>(j, "model");
  if (j.contains("overrides")) {
    if (!j.at("overrides").is_object())
      throw_config("config: 'overrides' must be an object of numbers");
    c.overrides = get_as<std::map<std::string, double>>(j, "overrides");
  }
  if (j.contains("data")) c.data = get_as<std::string>(j, "data");
  if (j.contains("steps")) c.steps = get_as<int>(j, "steps");
  if (j.contains("observe_initial")) c.observe_initial = get_as<bool>(j, "observe_initial");
  if (j.contains("theta_true")) c.theta_true = get_vector(j, "theta_true");
  if (j.contains("estimator"))
    c.estimator = estimator_from_name(get_as<std::string>(j, "estimator"));
  if (j.contains("n_particles")) c.n_particles = get_as<int>(j, "n_particles");
  if (j.contains("sigma_u")) c.sigma_u = get_as<double>(j, "sigma_u");
  if (j.contains("early_rejection")) c.early_rejection = get_as<bool>(j, "early_rejection");
  if (j.contains("proposal")) c.proposal = get_as<std::string>(j, "proposal");
  if (j.contains("pilot_iterations"))
    c.pilot_iterations = get_as<int>(j, "pilot_iterations");
  if (j.contains("pilot_step")) c.pilot_step = get_as<double>(j, "pilot_step");
  if (j.contains("scale")) c.scale = get_as<double>(j, "scale");
  if (j.contains("iterations")) c.iterations = get_as<int>(j, "iterations");
  if (j.contains("burn_in")) c.burn_in = get_as<double>(j, "burn_in");
  if (j.contains("init")) c.init = get_vector(j, "init");
  if (j.contains("chains")) c.chains = get_as<int>(j, "chains");
  if (j.contains("seed_master")) c.seed_master = get_as<std::uint64_t>(j, "seed_master");
  if (j.contains("seed_data")) c.seed_data = get_as<std::uint64_t>(j, "seed_data");
  if (j.contains("seed_chain")) c.seed_chain = get_as<std::uint64_t>(j, "seed_chain");
  if (j.contains("out")) c.out = get_as<std::string>(j, "out");
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw_config("config: cannot open " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw_config("config: " + path.string() + " is not valid JSON (" + e.what() + ")");
  }
  // A run's metadata.json nests the resolved config under "config"; accept it
  // directly so finished runs can be replayed.
  if (j.is_object() && j.contains("config") && j.at("config").is_object())
    j = j.at("config");
  return config_from_json(j);
}

nlohmann::json config_to_json(const RunConfig& c) {
  nlohmann::json j;
  j["model"] = c.model;
  if (!c.overrides.empty()) j["overrides"] = c.overrides;
  if (!c.data.empty()) j["data"] = c.data;
  if (c.steps) j["steps"] = *c.steps;
  if (c.observe_initial) j["observe_initial"] = *c.observe_initial;
  if (!c.theta_true.empty()) j["theta_true"] = c.theta_true;
  j["estimator"] = estimator_name(c.estimator);
  j["n_particles"] = c.n_particles;
  if (c.estimator == EstimatorKind::EnkfCorrelated) j["sigma_u"] = c.sigma_u;
  j["early_rejection"] = c.early_rejection;
  if (!c.proposal.empty()) {
    j["proposal"] = c.proposal;
  } else {
    j["pilot_iterations"] = c.pilot_iterations;
    j["pilot_step"] = c.pilot_step;
  }
  if (c.scale) j["scale"] = *c.scale;
  j["iterations"] = c.iterations;
  j["burn_in"] = c.burn_in;
  if (!c.init.empty()) j["init"] = c.init;
  j["chains"] = c.chains;
  j["seed_master"] = c.seed_master;
  j["seed_data"] = c.seed_data;
  j["seed_chain"] = c.seed_chain;
  if (!c.out.empty()) j["out"] = c.out;
  return j;
}

void validate_config(const RunConfig& c) {
  if (c.model.empty()) throw_config("config: 'model' is required");
  if (c.iterations < 1) throw_config("config: 'iterations' must be at least 1");
  if (!(c.burn_in >= 0.0 && c.burn_in < 1.0))
    throw_config("config: 'burn_in' must lie in [0, 1)");
  if (c.chains < 1) throw_config("config: 'chains' must be at least 1");
  if (c.n_particles < 1) throw_config("config: 'n_particles' must be at least 1");
  if (c.estimator == EstimatorKind::EnkfCorrelated &&
      !(c.sigma_u > 0.0 && c.sigma_u <= 1.0))
    throw_config("config: 'sigma_u' must lie in (0, 1] for the correlated estimator");
  if (c.early_rejection && !uses_early_rejection(c.estimator))
    throw_config("config: early rejection requires an ensemble estimator with a bounded "
                 "observation density (enkf, enkf-rqmc, or enkf-correlated), not " +
                 estimator_name(c.estimator));
  if (!c.data.empty()) {
    if (c.steps) throw_config("config: 'steps' only applies when simulating, not with 'data'");
    if (c.observe_initial)
      throw_config("config: 'observe_initial' only applies when simulating, not with 'data'");
    if (!c.theta_true.empty())
      throw_config("config: 'theta_true' only applies when simulating, not with 'data'");
  }
  if (c.steps && *c.steps < 1) throw_config("config: 'steps' must be at least 1");
  if (c.proposal.empty()) {
    if (c.pilot_iterations < 10)
      throw_config("config: 'pilot_iterations' must be at least 10");
    if (!(c.pilot_step > 0.0)) throw_config("config: 'pilot_step' must be positive");
  }
  if (c.scale && !(*c.scale > 0.0)) throw_config("config: 'scale' must be positive");
}

void validate_config(const RunConfig& c, const SsmModel& model) {
  validate_config(c);
  const int d = model.param_dim();
  if (!c.theta_true.empty() && static_cast<int>(c.theta_true.size()) != d)
    throw_dimension("config: 'theta_true' has " + std::to_string(c.theta_true.size()) +
                    " entries but the model has " + std::to_string(d) + " parameters");
  if (!c.init.empty() && static_cast<int>(c.init.size()) != d)
    throw_dimension("config: 'init' has " + std::to_string(c.init.size()) +
                    " entries but the model has " + std::to_string(d) + " parameters");
  if (c.estimator == EstimatorKind::Kalman && !model.linear_spec(model.default_theta()))
    throw_config("config: the kalman estimator requires a linear-Gaussian model; '" +
                 c.model + "' does not provide one");
  if ((c.estimator == EstimatorKind::EnkfCorrelated ||
       c.estimator == EstimatorKind::EnkfRqmc) &&
      !model.normal_draw_count())
    throw_config("config: the " + estimator_name(c.estimator) +
                 " estimator requires a model with a fixed per-step normal draw count; '" +
                 c.model + "' does not declare one");
  if (c.estimator == EstimatorKind::EnkfCorrelated && !model.deterministic_init())
    throw_config("config: the correlated estimator requires a model whose ensembles "
                 "initialize deterministically; '" +
                 c.model + "' draws a random initial ensemble");
}

RunConfig resolve_config(RunConfig c, const SsmModel& model) {
  validate_config(c, model);
  const Eigen::VectorXd theta0 = model.default_theta();
  if (c.data.empty()) {
    const SimulationProtocol protocol = default_protocol(c.model);
    if (!c.steps) c.steps = protocol.n_obs_steps;
    if (!c.observe_initial) c.observe_initial = protocol.observe_initial;
    if (c.theta_true.empty())
      c.theta_true.assign(theta0.data(), theta0.data() + theta0.size());
  }
  if (c.init.empty()) {
    if (!c.theta_true.empty()) {
      c.init = c.theta_true;
    } else {
      c.init.assign(theta0.data(), theta0.data() + theta0.size());
    }
  }
  if (!c.scale) c.scale = default_proposal_scale(model.param_dim());
  return c;
}

}  // namespace emcmc
