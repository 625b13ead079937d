#include "emcmc/filters.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <vector>

#include "emcmc/error.hpp"
#include "emcmc/gaussian.hpp"

namespace emcmc {
namespace {

// Factorize a symmetric matrix, adding jitter from a fixed ladder
// (1e-10..1e-6 of the mean diagonal) before declaring singularity;
// near-degenerate ensembles are routine at small N.
Eigen::LLT<Eigen::MatrixXd> robust_llt(const Eigen::MatrixXd& w, const char* what) {
  Eigen::LLT<Eigen::MatrixXd> llt(w);
  if (llt.info() == Eigen::Success) return llt;
  const double scale = w.trace() / static_cast<double>(w.rows());
  if (scale > 0.0) {
    const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(w.rows(), w.cols());
    double eps = 1e-10 * scale;
    for (int k = 0; k < 5; ++k, eps *= 10.0) {
      llt.compute(w + eps * id);
      if (llt.info() == Eigen::Success) return llt;
    }
  }
  throw_numerical(std::string(what) + ": innovation covariance is numerically singular");
}

// K = cov P' W^{-1} given W's factorization; cov is symmetric.
Eigen::MatrixXd gain_from(const Eigen::MatrixXd& cov, const Eigen::MatrixXd& p,
                          const Eigen::LLT<Eigen::MatrixXd>& w_llt) {
  return w_llt.solve(p * cov).transpose();
}

// Cholesky factor of the observation noise, with S = 0 admitted as the
// exact-observation limit (pseudo-observations then carry no noise).
struct ObsNoiseRoot {
  Eigen::MatrixXd l;
  bool zero = false;
};

ObsNoiseRoot obs_noise_root(const Eigen::MatrixXd& s) {
  ObsNoiseRoot root;
  if (s.isZero(0.0)) {
    root.zero = true;
    root.l = Eigen::MatrixXd::Zero(s.rows(), s.cols());
    return root;
  }
  Eigen::LLT<Eigen::MatrixXd> llt(s);
  if (llt.info() != Eigen::Success)
    throw_numerical(
        "observation covariance must be positive definite (or exactly zero); "
        "apply variance flooring for degenerate components");
  root.l = llt.matrixL();
  return root;
}

// Where each step's normals come from: the live stream, a pre-drawn block,
// or per-step scrambled Sobol point sets.
struct NoiseSource {
  virtual ~NoiseSource() = default;
  virtual void shift_normals(int t, Eigen::Ref<Eigen::MatrixXd> z) = 0;
  virtual void evolve_normals(int t, Eigen::Ref<Eigen::MatrixXd> z) = 0;
  // Non-null when models without a declared draw count may consume the
  // stream directly (jump-process evolution).
  virtual RngStream* stream() { return nullptr; }
  // Plugin mode never uses the final step's pseudo-observations, but stream
  // and block sources still draw them so that plugin and unbiased runs
  // consume randomness identically. Sobol sources skip the draw instead of
  // generating a point set nothing consumes.
  virtual bool draws_final_shift() const { return true; }
};

struct StreamSource final : NoiseSource {
  explicit StreamSource(RngStream& s) : s_(&s) {}
  void shift_normals(int, Eigen::Ref<Eigen::MatrixXd> z) override {
    fill_standard_normals(*s_, z);
  }
  void evolve_normals(int, Eigen::Ref<Eigen::MatrixXd> z) override {
    fill_standard_normals(*s_, z);
  }
  RngStream* stream() override { return s_; }
  RngStream* s_;
};

struct BlockSource final : NoiseSource {
  BlockSource(const NormalBlock& b) : block_(&b) {}

  void shift_normals(int t, Eigen::Ref<Eigen::MatrixXd> z) override {
    const auto& lay = block_->layout;
    const Eigen::Index head =
        lay.has_y0 ? static_cast<Eigen::Index>(lay.members) * lay.obs_dim : 0;
    Eigen::Index off;
    if (t == 0) {
      off = 0;
    } else {
      off = head + static_cast<Eigen::Index>(t - 1) * lay.members *
                       (lay.obs_dim + lay.draw_count);
    }
    z = Eigen::Map<const Eigen::MatrixXd>(block_->values.data() + off,
                                          lay.obs_dim, lay.members);
  }

  void evolve_normals(int t, Eigen::Ref<Eigen::MatrixXd> z) override {
    const auto& lay = block_->layout;
    const Eigen::Index head =
        lay.has_y0 ? static_cast<Eigen::Index>(lay.members) * lay.obs_dim : 0;
    const Eigen::Index off =
        head +
        static_cast<Eigen::Index>(t - 1) * lay.members * (lay.obs_dim + lay.draw_count) +
        static_cast<Eigen::Index>(lay.members) * lay.obs_dim;
    z = Eigen::Map<const Eigen::MatrixXd>(block_->values.data() + off,
                                          lay.draw_count, lay.members);
  }

  const NormalBlock* block_;
};

// One fresh scrambled Sobol point set per transition: point set t supplies
// the shift at t-1 (first d_y coordinates) and the evolution to t (last m),
// so the (d_y+m)-dimensional joint draw for each member is one QMC point.
// Scramble seeds come off the run stream, one per step, in step order.
struct SobolSource final : NoiseSource {
  SobolSource(RngStream& s, int dy, int m, int members)
      : s_(&s), dy_(dy), m_(m), members_(members) {}

  void ensure(int t) {
    while (have_ < t) {
      ++have_;
      SobolSampler sampler(dy_ + m_, s_->next_u64());
      Eigen::MatrixXd z = normals_from_uniforms(sampler.points(members_));
      shift_ = z.leftCols(dy_).transpose();
      evolve_ = z.rightCols(m_).transpose();
    }
  }

  void shift_normals(int t, Eigen::Ref<Eigen::MatrixXd> z) override {
    ensure(t + 1);
    z = shift_;
  }
  void evolve_normals(int t, Eigen::Ref<Eigen::MatrixXd> z) override {
    ensure(t);
    z = evolve_;
  }
  bool draws_final_shift() const override { return false; }

  RngStream* s_;
  int dy_, m_, members_;
  int have_ = 0;
  Eigen::MatrixXd shift_, evolve_;
};

struct EnkfRun {
  const SsmModel& model;
  const Eigen::VectorXd& theta;
  const Dataset& data;
  int n;
  NoiseSource& noise;
  const EnkfOptions& opts;

  LogLikelihoodEstimate run(RngStream* init_stream) {
    data.validate(model.obs_dim());
    if (n < 2) throw_config("enkf_loglik: at least 2 ensemble members required");
    const int dy = model.obs_dim();
    const int dx = model.state_dim();
    if (opts.density == DensityMode::Unbiased && n <= dy + 3)
      throw_config("enkf_loglik: unbiased density requires N > d_y + 3");
    if (theta.size() != model.param_dim())
      throw_dimension("enkf_loglik: theta dimension mismatch");

    const Eigen::MatrixXd p = model.obs_matrix();
    const Eigen::MatrixXd s = model.obs_noise(theta);
    const ObsNoiseRoot s_root = obs_noise_root(s);
    const int steps = data.steps();
    const int total_factors = data.n_obs();

    LogLikelihoodEstimate est;
    est.estimator = opts.density == DensityMode::Unbiased ? EstimatorKind::EnkfUnbiased
                                                          : EstimatorKind::Enkf;
    est.n = n;
    est.early_stop_t = steps + 1;

    Eigen::MatrixXd x(dx, n);
    if (init_stream) {
      model.init_ensemble(theta, x, *init_stream);
    } else {
      if (!model.deterministic_init())
        throw_config("enkf_loglik: block-driven runs require a deterministic initial ensemble");
      RngStream unused(0, 0);
      model.init_ensemble(theta, x, unused);
    }

    double ll = 0.0;
    int folded = 0;
    Eigen::MatrixXd z_shift(dy, n), z_evolve, ytil, w, k;

    // Folds the likelihood factor for the observation at time t, then shifts
    // the ensemble toward it (except after the final factor, whose shifted
    // ensemble nothing would consume). Returns false when the run is decided:
    // early-stopped or an exactly-zero factor.
    auto fold = [&](int t, const Eigen::VectorXd& y) -> bool {
      const bool final_factor = (t == steps);
      const bool need_pseudo_obs =
          opts.density == DensityMode::Unbiased || !final_factor;
      if (!final_factor || noise.draws_final_shift())
        noise.shift_normals(t, z_shift);
      if (need_pseudo_obs) {
        ytil.noalias() = p * x;
        if (!s_root.zero) ytil.noalias() += s_root.l * z_shift;
      }

      // Forecast moments feed the plugin density and the gain; the unbiased
      // density at the final factor needs neither.
      ForecastMoments mom;
      Eigen::LLT<Eigen::MatrixXd> w_llt;
      const bool need_gain_or_plugin =
          opts.density == DensityMode::Plugin || !final_factor;
      if (need_gain_or_plugin) {
        mom = ensemble_moments(x);
        w.noalias() = p * mom.cov * p.transpose();
        w += s;
        w = 0.5 * (w + w.transpose()).eval();
        w_llt = robust_llt(w, "enkf_loglik");
      }

      double alpha;
      if (opts.density == DensityMode::Unbiased) {
        const Eigen::VectorXd ym = ytil.rowwise().mean();
        Eigen::MatrixXd yc = ytil.colwise() - ym;
        Eigen::MatrixXd ycov = Eigen::MatrixXd::Zero(dy, dy);
        ycov.selfadjointView<Eigen::Lower>().rankUpdate(yc, 1.0 / (n - 1));
        ycov.triangularView<Eigen::StrictlyUpper>() = ycov.transpose();
        alpha = unbiased_gaussian_logpdf(y, ym, ycov, n);
      } else {
        alpha = gaussian_logpdf_chol(y, p * mom.mean, w_llt);
      }

      if (alpha == kNegInf) {
        ll = kNegInf;
        return false;
      }
      ll += alpha;
      ++folded;
      if (opts.early_stop &&
          ll < opts.early_stop->threshold_base -
                   (total_factors - folded) * opts.early_stop->log_bound) {
        est.early_stopped = true;
        est.early_stop_t = t;
        return false;
      }

      if (!final_factor) {
        k = gain_from(mom.cov, p, w_llt);
        x.noalias() += k * (y.replicate(1, n) - ytil);
        if (model.reflect_nonnegative()) x = x.cwiseAbs();
        if (opts.post_shift_observer) opts.post_shift_observer(t, x);
      }
      return true;
    };

    int obs_idx = 0;
    bool alive = true;
    if (data.has_y0()) {
      alive = fold(0, data.y.col(obs_idx));
      ++obs_idx;
    }
    const auto m = model.normal_draw_count();
    if (m) z_evolve.resize(*m, n);
    for (int t = 1; t <= steps && alive; ++t, ++obs_idx) {
      if (m) {
        noise.evolve_normals(t, z_evolve);
        model.evolve_from_normals(theta, t, x, z_evolve);
      } else {
        RngStream* s = noise.stream();
        if (!s)
          throw_config(
              "enkf_loglik: model lacks a fixed per-step normal draw count; "
              "only the stream-driven estimator applies");
        model.evolve_ensemble(theta, t, x, *s);
      }
      est.evolve_member_steps += n;
      alive = fold(t, data.y.col(obs_idx));
    }

    est.value = ll;
    return est;
  }
};

}  // namespace

ForecastMoments ensemble_moments(const Eigen::Ref<const Eigen::MatrixXd>& members) {
  const Eigen::Index n = members.cols();
  if (n < 2) throw_config("ensemble_moments: at least 2 members required");
  ForecastMoments mom;
  mom.mean = members.rowwise().mean();
  const Eigen::MatrixXd centered = members.colwise() - mom.mean;
  mom.cov = Eigen::MatrixXd::Zero(members.rows(), members.rows());
  mom.cov.selfadjointView<Eigen::Lower>().rankUpdate(centered,
                                                     1.0 / static_cast<double>(n - 1));
  mom.cov.triangularView<Eigen::StrictlyUpper>() = mom.cov.transpose();
  return mom;
}

Eigen::MatrixXd kalman_gain(const ForecastMoments& moments, const ObsModel& obs) {
  if (obs.P.cols() != moments.cov.rows())
    throw_dimension("kalman_gain: observation matrix does not match state dimension");
  if (obs.S.rows() != obs.P.rows() || obs.S.cols() != obs.P.rows())
    throw_dimension("kalman_gain: observation noise has wrong shape");
  Eigen::MatrixXd w = obs.P * moments.cov * obs.P.transpose() + obs.S;
  w = 0.5 * (w + w.transpose()).eval();
  const auto w_llt = robust_llt(w, "kalman_gain");
  return gain_from(moments.cov, obs.P, w_llt);
}

double unbiased_gaussian_logpdf(const Eigen::VectorXd& y,
                                const Eigen::VectorXd& sample_mean,
                                const Eigen::MatrixXd& sample_cov, int n) {
  const Eigen::Index d = y.size();
  if (sample_mean.size() != d || sample_cov.rows() != d || sample_cov.cols() != d)
    throw_dimension("unbiased_gaussian_logpdf: inconsistent dimensions");
  if (n <= d + 3)
    throw_config("unbiased_gaussian_logpdf: requires N > d + 3");

  const Eigen::MatrixXd m = static_cast<double>(n - 1) * sample_cov;
  Eigen::LLT<Eigen::MatrixXd> m_llt(m);
  if (m_llt.info() != Eigen::Success) return kNegInf;  // degenerate scatter
  double logdet_m = 0.0;
  for (Eigen::Index i = 0; i < d; ++i)
    logdet_m += 2.0 * std::log(m_llt.matrixL()(i, i));

  const double shrink = 1.0 - 1.0 / static_cast<double>(n);
  const Eigen::VectorXd diff = y - sample_mean;
  const Eigen::MatrixXd a = m - diff * diff.transpose() / shrink;
  Eigen::LLT<Eigen::MatrixXd> a_llt(a);
  if (a_llt.info() != Eigen::Success) return kNegInf;  // psi(A) = 0 branch
  double logdet_a = 0.0;
  for (Eigen::Index i = 0; i < d; ++i)
    logdet_a += 2.0 * std::log(a_llt.matrixL()(i, i));

  // log of c(d, n-2)/c(d, n-1) with
  // 1/c(k,v) = 2^{kv/2} pi^{k(k-1)/4} prod_{i=1..k} Gamma((v-i+1)/2)
  double logc_ratio = 0.5 * d * std::log(2.0);
  for (Eigen::Index i = 1; i <= d; ++i)
    logc_ratio += std::lgamma(0.5 * (n - i)) - std::lgamma(0.5 * (n - 1 - i));

  return -0.5 * d * kLogTwoPi + logc_ratio - 0.5 * d * std::log(shrink) -
         0.5 * (n - d - 2) * logdet_m + 0.5 * (n - d - 3) * logdet_a;
}

LogLikelihoodEstimate bpf_loglik(const SsmModel& model, const Eigen::VectorXd& theta,
                                 const Dataset& data, int n_particles,
                                 RngStream& stream) {
  data.validate(model.obs_dim());
  if (n_particles < 1) throw_config("bpf_loglik: at least 1 particle required");
  if (theta.size() != model.param_dim())
    throw_dimension("bpf_loglik: theta dimension mismatch");
  const int n = n_particles;
  const int dx = model.state_dim();
  const int dy = model.obs_dim();
  const int steps = data.steps();

  const Eigen::MatrixXd p = model.obs_matrix();
  const Eigen::MatrixXd s = model.obs_noise(theta);
  Eigen::LLT<Eigen::MatrixXd> s_llt(s);
  if (s_llt.info() != Eigen::Success)
    throw_numerical(
        "bpf_loglik: observation covariance must be positive definite; "
        "apply variance flooring for degenerate components");
  double logdet_s = 0.0;
  for (int i = 0; i < dy; ++i) logdet_s += 2.0 * std::log(s_llt.matrixL()(i, i));
  const double norm_const = 0.5 * (dy * kLogTwoPi + logdet_s);

  LogLikelihoodEstimate est;
  est.estimator = EstimatorKind::Bpf;
  est.n = n;
  est.early_stop_t = steps + 1;

  Eigen::MatrixXd x(dx, n), x_next(dx, n), resid(dy, n);
  model.init_ensemble(theta, x, stream);

  Eigen::ArrayXd logw(n), wu(n);
  Eigen::VectorXd cumw(n);
  std::vector<double> sorted_u(n);
  std::vector<int> ancestor(n);
  double ll = 0.0;
  bool have_weights = false;  // weights from the previous factor, unnormalized in wu

  // log sum of unnormalized weights for y_t against the current particles;
  // fills wu with exp(logw - max). Returns -inf when every weight is zero.
  auto weight = [&](const Eigen::VectorXd& y) -> double {
    resid.noalias() = y.replicate(1, n) - p * x;
    s_llt.matrixL().solveInPlace(resid);
    logw = -0.5 * resid.colwise().squaredNorm().array() - norm_const;
    const double mx = logw.maxCoeff();
    if (!(mx > kNegInf)) return kNegInf;
    wu = (logw - mx).exp();
    return mx + std::log(wu.sum());
  };

  // Multinomial resampling from the unnormalized weights in wu via sorted
  // uniforms built from exponential spacings (O(N), no sort).
  auto resample = [&]() {
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
      acc += -std::log(stream.uniform());
      sorted_u[i] = acc;
    }
    acc += -std::log(stream.uniform());
    const double w_total = wu.sum();
    cumw[0] = wu[0];
    for (int i = 1; i < n; ++i) cumw[i] = cumw[i - 1] + wu[i];
    int j = 0;
    for (int i = 0; i < n; ++i) {
      const double target = sorted_u[i] / acc * w_total;
      while (j < n - 1 && cumw[j] < target) ++j;
      ancestor[i] = j;
    }
    for (int i = 0; i < n; ++i) x_next.col(i) = x.col(ancestor[i]);
    x.swap(x_next);
  };

  int obs_idx = 0;
  if (data.has_y0()) {
    const double factor = weight(data.y.col(obs_idx));
    ++obs_idx;
    if (factor == kNegInf) {
      est.value = kNegInf;
      return est;
    }
    ll += factor - std::log(static_cast<double>(n));
    have_weights = true;
  }

  for (int t = 1; t <= steps; ++t, ++obs_idx) {
    if (have_weights) resample();
    model.evolve_ensemble(theta, t, x, stream);
    est.evolve_member_steps += n;
    const double factor = weight(data.y.col(obs_idx));
    if (factor == kNegInf) {
      est.value = kNegInf;
      return est;
    }
    ll += factor - std::log(static_cast<double>(n));
    have_weights = true;
  }

  est.value = ll;
  return est;
}

LogLikelihoodEstimate enkf_loglik(const SsmModel& model, const Eigen::VectorXd& theta,
                                  const Dataset& data, int n_members,
                                  RngStream& stream, const EnkfOptions& opts) {
  StreamSource noise(stream);
  EnkfRun run{model, theta, data, n_members, noise, opts};
  return run.run(&stream);
}

LogLikelihoodEstimate enkf_loglik(const SsmModel& model, const Eigen::VectorXd& theta,
                                  const Dataset& data, int n_members,
                                  const NormalBlock& block, const EnkfOptions& opts) {
  const BlockLayout expect = block_layout_for(model, data, n_members);
  const auto& lay = block.layout;
  if (lay.steps != expect.steps || lay.obs_dim != expect.obs_dim ||
      lay.draw_count != expect.draw_count || lay.members != expect.members ||
      lay.has_y0 != expect.has_y0)
    throw_config("enkf_loglik: normal block layout does not match model/dataset");
  if (block.values.size() != lay.size())
    throw_config("enkf_loglik: normal block size does not match its layout");
  BlockSource noise(block);
  EnkfRun run{model, theta, data, n_members, noise, opts};
  LogLikelihoodEstimate est = run.run(nullptr);
  est.consumed_block = &block;
  if (est.estimator == EstimatorKind::Enkf) est.estimator = EstimatorKind::EnkfCorrelated;
  return est;
}

LogLikelihoodEstimate enkf_loglik_rqmc(const SsmModel& model, const Eigen::VectorXd& theta,
                                       const Dataset& data, int n_members,
                                       RngStream& stream, const EnkfOptions& opts) {
  const auto m = model.normal_draw_count();
  if (!m)
    throw_config(
        "enkf_loglik_rqmc: model lacks a fixed per-step normal draw count");
  if (opts.density == DensityMode::Unbiased)
    throw_config("enkf_loglik_rqmc: unbiased density is not available with "
                 "quasi-Monte-Carlo noise");
  SobolSource noise(stream, model.obs_dim(), *m, n_members);
  EnkfRun run{model, theta, data, n_members, noise, opts};
  LogLikelihoodEstimate est = run.run(&stream);
  est.estimator = EstimatorKind::EnkfRqmc;
  return est;
}

ForecastMoments enkf_moments_rqmc(const SsmModel& model, const Eigen::VectorXd& theta,
                                  const Eigen::Ref<const Eigen::MatrixXd>& members,
                                  const Eigen::VectorXd& y_prev, SobolSampler& sobol) {
  const auto m = model.normal_draw_count();
  if (!m)
    throw_config("enkf_moments_rqmc: model lacks a fixed per-step normal draw count");
  const int dy = model.obs_dim();
  if (sobol.dim() != dy + *m)
    throw_dimension("enkf_moments_rqmc: sampler dimension must be d_y + m");
  if (y_prev.size() != dy)
    throw_dimension("enkf_moments_rqmc: observation dimension mismatch");
  const Eigen::Index n = members.cols();
  if (n < 2) throw_config("enkf_moments_rqmc: at least 2 members required");

  const Eigen::MatrixXd p = model.obs_matrix();
  const Eigen::MatrixXd s = model.obs_noise(theta);
  const ObsNoiseRoot s_root = obs_noise_root(s);
  const ForecastMoments mom = ensemble_moments(members);
  Eigen::MatrixXd w = p * mom.cov * p.transpose() + s;
  w = 0.5 * (w + w.transpose()).eval();
  const auto w_llt = robust_llt(w, "enkf_moments_rqmc");
  const Eigen::MatrixXd k = gain_from(mom.cov, p, w_llt);

  const Eigen::MatrixXd z = normals_from_uniforms(sobol.points(n));
  Eigen::MatrixXd ytil = p * members;
  if (!s_root.zero) ytil.noalias() += s_root.l * z.leftCols(dy).transpose();
  Eigen::MatrixXd x = members;
  x.noalias() += k * (y_prev.replicate(1, n) - ytil);
  if (model.reflect_nonnegative()) x = x.cwiseAbs();
  const Eigen::MatrixXd z_evolve = z.rightCols(*m).transpose();
  model.evolve_from_normals(theta, 1, x, z_evolve);
  return ensemble_moments(x);
}

double kalman_loglik(const LinearGaussianSpec& spec, const Dataset& data) {
  const Eigen::Index dx = spec.A.rows();
  const Eigen::Index dy = spec.P.rows();
  if (spec.A.cols() != dx || spec.Q.rows() != dx || spec.Q.cols() != dx ||
      spec.P.cols() != dx || spec.S.rows() != dy || spec.S.cols() != dy ||
      spec.init_mean.size() != dx || spec.init_cov.rows() != dx ||
      spec.init_cov.cols() != dx)
    throw_dimension("kalman_loglik: inconsistent model spec shapes");
  data.validate(static_cast<int>(dy));

  Eigen::VectorXd mu = spec.init_mean;
  Eigen::MatrixXd sig = spec.init_cov;
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(dx, dx);
  double ll = 0.0;
  for (int i = 0; i < data.n_obs(); ++i) {
    if (data.times[i] > 0) {
      mu = spec.A * mu;
      sig = spec.A * sig * spec.A.transpose() + spec.Q;
    }
    Eigen::MatrixXd w = spec.P * sig * spec.P.transpose() + spec.S;
    w = 0.5 * (w + w.transpose()).eval();
    Eigen::LLT<Eigen::MatrixXd> w_llt(w);
    if (w_llt.info() != Eigen::Success)
      throw_numerical("kalman_loglik: singular innovation covariance");
    ll += gaussian_logpdf_chol(data.y.col(i), spec.P * mu, w_llt);
    const Eigen::MatrixXd k = w_llt.solve(spec.P * sig).transpose();
    mu += k * (data.y.col(i) - spec.P * mu);
    // Joseph form keeps the covariance symmetric PSD under roundoff.
    const Eigen::MatrixXd ikp = id - k * spec.P;
    sig = ikp * sig * ikp.transpose() + k * spec.S * k.transpose();
    sig = 0.5 * (sig + sig.transpose()).eval();
  }
  return ll;
}

BlockLayout block_layout_for(const SsmModel& model, const Dataset& data, int n_members) {
  const auto m = model.normal_draw_count();
  if (!m)
    throw_config("block_layout_for: model lacks a fixed per-step normal draw count");
  data.validate(model.obs_dim());
  if (n_members < 1) throw_config("block_layout_for: members must be positive");
  BlockLayout lay;
  lay.steps = data.steps();
  lay.obs_dim = model.obs_dim();
  lay.draw_count = *m;
  lay.members = n_members;
  lay.has_y0 = data.has_y0();
  return lay;
}

}  // namespace emcmc
