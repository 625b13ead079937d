#include "emcmc/models/reaction.hpp"

#include <cmath>
#include <limits>

namespace emcmc {

GillespieEvent gillespie_next(const ReactionNetwork& net, const Eigen::VectorXd& x,
                              const Eigen::VectorXd& c, RngStream& rng) {
  const int n_r = net.n_reactions();
  const int n_s = net.n_species();
  Eigen::VectorXd h(n_r);
  net.hazard(x, c, h);

  // Shifted ensemble states can be fractional, so raw mass-action hazards
  // may be slightly negative, and a feasible-looking reaction could still
  // push a component below zero. Clamp and mask both cases.
  double h0 = 0.0;
  for (int i = 0; i < n_r; ++i) {
    double hi = h(i) > 0.0 ? h(i) : 0.0;
    if (hi > 0.0) {
      for (int s = 0; s < n_s; ++s) {
        const int delta = net.stoichiometry(i, s);
        if (delta < 0 && x(s) + delta < 0.0) {
          hi = 0.0;
          break;
        }
      }
    }
    h(i) = hi;
    h0 += hi;
  }
  if (h0 <= 0.0) return {std::numeric_limits<double>::infinity(), -1};

  const double dwell = -std::log(rng.uniform()) / h0;
  const double v = rng.uniform() * h0;
  double cum = 0.0;
  int pick = -1;
  for (int i = 0; i < n_r; ++i) {
    if (h(i) <= 0.0) continue;
    pick = i;
    cum += h(i);
    if (v <= cum) break;  // rounding can leave v past the final cum; keep last
  }
  return {dwell, pick};
}

long gillespie_evolve(const ReactionNetwork& net, Eigen::Ref<Eigen::VectorXd> x,
                      const Eigen::VectorXd& c, double t_span, RngStream& rng,
                      long event_cap) {
  if (t_span <= 0.0) throw_config("gillespie_evolve: t_span must be positive");
  double t = 0.0;
  long events = 0;
  for (;;) {
    const GillespieEvent ev = gillespie_next(net, x, c, rng);
    if (ev.reaction < 0) return events;  // absorbing
    t += ev.dwell;
    if (t > t_span) return events;
    x += net.stoichiometry.row(ev.reaction).transpose().cast<double>();
    if (++events > event_cap)
      throw_numerical("gillespie_evolve: event cap exceeded; reaction rates exploded");
  }
}

// ---------------------------------------------------------------------------
// Lotka-Volterra

LotkaVolterraModel::LotkaVolterraModel(double t_span, long event_cap)
    : t_span_(t_span),
      event_cap_(event_cap),
      names_{"log_c1", "log_c2", "log_c3", "log_sigma1", "log_sigma2"} {
  if (t_span_ <= 0.0) throw_config("lotka-volterra: t_span must be positive");
  if (event_cap_ < 1) throw_config("lotka-volterra: event_cap must be at least 1");
  net_.stoichiometry.resize(3, 2);
  net_.stoichiometry << 1, 0, -1, 1, 0, -1;
  net_.hazard = [](const Eigen::VectorXd& x, const Eigen::VectorXd& c,
                   Eigen::Ref<Eigen::VectorXd> h) {
    h(0) = c(0) * x(0);
    h(1) = c(1) * x(0) * x(1);
    h(2) = c(2) * x(1);
  };
}

double LotkaVolterraModel::prior_logpdf(const Eigen::VectorXd& theta) const {
  for (int i = 0; i < 5; ++i)
    if (std::abs(theta(i)) > 8.0) return kNegInf;
  return 5.0 * std::log(1.0 / 16.0);
}

Eigen::MatrixXd LotkaVolterraModel::obs_matrix() const {
  return Eigen::MatrixXd::Identity(2, 2);
}

Eigen::MatrixXd LotkaVolterraModel::obs_noise(const Eigen::VectorXd& theta) const {
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(2, 2);
  s(0, 0) = std::exp(2.0 * theta(3));
  s(1, 1) = std::exp(2.0 * theta(4));
  return s;
}

void LotkaVolterraModel::init_ensemble(const Eigen::VectorXd& theta,
                                       Eigen::Ref<Eigen::MatrixXd> members,
                                       RngStream& rng) const {
  (void)theta;
  (void)rng;
  Eigen::Vector2d x0(71.0, 79.0);
  members = x0.replicate(1, members.cols());
}

void LotkaVolterraModel::evolve_ensemble(const Eigen::VectorXd& theta, int step,
                                         Eigen::Ref<Eigen::MatrixXd> members,
                                         RngStream& rng) const {
  (void)step;
  const Eigen::Vector3d c = theta.head(3).array().exp();
  for (Eigen::Index j = 0; j < members.cols(); ++j)
    gillespie_evolve(net_, members.col(j), c, t_span_, rng, event_cap_);
}

Eigen::VectorXd LotkaVolterraModel::default_theta() const {
  Eigen::VectorXd theta(5);
  theta << std::log(0.5), std::log(0.0025), std::log(0.3), 0.0, 0.0;
  return theta;
}

// ---------------------------------------------------------------------------
// Autoregulatory network

AutoregModel::AutoregModel(double sigma1, double sigma2, double noise_floor, double c5,
                           double c6, double t_span, long event_cap)
    : sigma1_(sigma1),
      sigma2_(sigma2),
      noise_floor_(noise_floor),
      c5_(c5),
      c6_(c6),
      t_span_(t_span),
      event_cap_(event_cap),
      names_{"log_c1", "log_c2", "log_c3", "log_c4", "log_c7", "log_c8"} {
  if (sigma1_ < 0.0 || sigma2_ < 0.0)
    throw_config("autoreg: observation noise sds must be nonnegative");
  if (noise_floor_ <= 0.0) throw_config("autoreg: noise_floor must be positive");
  if (c5_ <= 0.0 || c6_ <= 0.0) throw_config("autoreg: fixed rates must be positive");
  if (t_span_ <= 0.0) throw_config("autoreg: t_span must be positive");
  if (event_cap_ < 1) throw_config("autoreg: event_cap must be at least 1");
  net_.stoichiometry.resize(8, 5);
  net_.stoichiometry << -1, 1, 0, 0, -1,  //  gene + P2 -> bound
      1, -1, 0, 0, 1,                     //  bound -> gene + P2
      0, 0, 1, 0, 0,                      //  transcription
      0, 0, 0, 1, 0,                      //  translation
      0, 0, 0, -2, 1,                     //  dimerisation
      0, 0, 0, 2, -1,                     //  dissociation
      0, 0, -1, 0, 0,                     //  RNA decay
      0, 0, 0, -1, 0;                     //  protein decay
  net_.hazard = [](const Eigen::VectorXd& x, const Eigen::VectorXd& c,
                   Eigen::Ref<Eigen::VectorXd> h) {
    h(0) = c(0) * x(0) * x(4);
    h(1) = c(1) * x(1);
    h(2) = c(2) * x(0);
    h(3) = c(3) * x(2);
    h(4) = c(4) * x(3) * (x(3) - 1.0) / 2.0;
    h(5) = c(5) * x(4);
    h(6) = c(6) * x(2);
    h(7) = c(7) * x(3);
  };
}

double AutoregModel::prior_logpdf(const Eigen::VectorXd& theta) const {
  // Ga(1, 1/2) on each rate, log scale: log p(psi) = log(1/2) - e^psi/2 + psi.
  double lp = 0.0;
  for (int i = 0; i < 6; ++i)
    lp += std::log(0.5) - 0.5 * std::exp(theta(i)) + theta(i);
  return lp;
}

Eigen::MatrixXd AutoregModel::obs_matrix() const {
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(2, 5);
  p(0, 2) = 1.0;  // RNA copies
  p(1, 3) = 1.0;  // total protein: monomers plus twice the dimers
  p(1, 4) = 2.0;
  return p;
}

Eigen::MatrixXd AutoregModel::obs_noise(const Eigen::VectorXd& theta) const {
  (void)theta;
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(2, 2);
  s(0, 0) = std::max(sigma1_ * sigma1_, noise_floor_);
  s(1, 1) = std::max(sigma2_ * sigma2_, noise_floor_);
  return s;
}

Eigen::MatrixXd AutoregModel::sim_obs_noise(const Eigen::VectorXd& theta) const {
  (void)theta;
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(2, 2);
  s(0, 0) = sigma1_ * sigma1_;
  s(1, 1) = sigma2_ * sigma2_;
  return s;
}

void AutoregModel::init_ensemble(const Eigen::VectorXd& theta,
                                 Eigen::Ref<Eigen::MatrixXd> members, RngStream& rng) const {
  (void)theta;
  (void)rng;
  Eigen::VectorXd x0(5);
  x0 << 5.0, 5.0, 8.0, 8.0, 8.0;
  members = x0.replicate(1, members.cols());
}

Eigen::VectorXd AutoregModel::rates(const Eigen::VectorXd& theta) const {
  Eigen::VectorXd c(8);
  c << std::exp(theta(0)), std::exp(theta(1)), std::exp(theta(2)), std::exp(theta(3)), c5_,
      c6_, std::exp(theta(4)), std::exp(theta(5));
  return c;
}

void AutoregModel::evolve_ensemble(const Eigen::VectorXd& theta, int step,
                                   Eigen::Ref<Eigen::MatrixXd> members, RngStream& rng) const {
  (void)step;
  const Eigen::VectorXd c = rates(theta);
  for (Eigen::Index j = 0; j < members.cols(); ++j)
    gillespie_evolve(net_, members.col(j), c, t_span_, rng, event_cap_);
}

Eigen::VectorXd AutoregModel::default_theta() const {
  Eigen::VectorXd theta(6);
  theta << std::log(0.1), std::log(0.7), std::log(0.35), std::log(0.2), std::log(0.3),
      std::log(0.1);
  return theta;
}

}  // namespace emcmc
