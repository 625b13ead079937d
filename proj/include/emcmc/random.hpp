#pragma once

#include <Eigen/Core>
#include <cstdint>

#include "emcmc/error.hpp"
#include "emcmc/gaussian.hpp"

// Counter-based random number streams. A stream is identified by
// (seed, stream id); draws are a pure function of (seed, stream, counter),
// so a stream can be replayed, copied, or advanced without touching any
// other stream. That property is what makes the early-rejection sampler
// replay-identical to the plain one and lets chains run per-iteration
// substreams.

namespace emcmc {

namespace detail {

// 10-round Philox-style 4x64 counter block cipher (two 64x64->128
// multiplies per round, Weyl key schedule).
struct PhiloxBlock {
  std::uint64_t w[4];
};

inline PhiloxBlock philox4x64(std::uint64_t counter_lo, std::uint64_t counter_hi,
                              std::uint64_t key0, std::uint64_t key1) {
  constexpr std::uint64_t kM0 = 0xD2E7470EE14C6C93ull;
  constexpr std::uint64_t kM1 = 0xCA5A826395121157ull;
  constexpr std::uint64_t kW0 = 0x9E3779B97F4A7C15ull;
  constexpr std::uint64_t kW1 = 0xBB67AE8584CAA73Bull;

  std::uint64_t x0 = counter_lo, x1 = counter_hi, x2 = 0, x3 = 0;
  std::uint64_t k0 = key0, k1 = key1;
  for (int round = 0; round < 10; ++round) {
    const unsigned __int128 p0 = static_cast<unsigned __int128>(kM0) * x0;
    const unsigned __int128 p1 = static_cast<unsigned __int128>(kM1) * x2;
    const std::uint64_t hi0 = static_cast<std::uint64_t>(p0 >> 64);
    const std::uint64_t lo0 = static_cast<std::uint64_t>(p0);
    const std::uint64_t hi1 = static_cast<std::uint64_t>(p1 >> 64);
    const std::uint64_t lo1 = static_cast<std::uint64_t>(p1);
    x0 = hi1 ^ x1 ^ k0;
    x1 = lo1;
    x2 = hi0 ^ x3 ^ k1;
    x3 = lo0;
    k0 += kW0;
    k1 += kW1;
  }
  return PhiloxBlock{{x0, x1, x2, x3}};
}

// SplitMix64 finalizer, used for deriving child stream ids.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

}  // namespace detail

class RngStream {
 public:
  RngStream() : RngStream(0, 0) {}
  RngStream(std::uint64_t seed, std::uint64_t stream)
      : seed_(seed), stream_(stream) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }
  std::uint64_t counter() const { return counter_; }
  void set_counter(std::uint64_t c) {
    counter_ = c;
    cached_block_ = ~std::uint64_t{0};
  }

  // Derive a statistically independent substream. Children of distinct
  // (stream, id) pairs get distinct ids; the derivation is deterministic.
  RngStream child(std::uint64_t id) const {
    return RngStream(seed_, detail::mix64(stream_ ^ detail::mix64(id + 0x51ED2701)));
  }

  // One 64-bit word; advances the counter by exactly one.
  std::uint64_t next_u64() {
    const std::uint64_t block = counter_ >> 2;
    if (block != cached_block_) {
      const detail::PhiloxBlock b = detail::philox4x64(block, stream_, seed_,
                                                       0x243F6A8885A308D3ull);
      words_[0] = b.w[0];
      words_[1] = b.w[1];
      words_[2] = b.w[2];
      words_[3] = b.w[3];
      cached_block_ = block;
    }
    return words_[counter_++ & 3];
  }

  // Uniform on the open interval (0,1); one counter tick.
  double uniform() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1p-53;
  }

  // Standard normal via the inverse CDF; one counter tick per draw. Uses
  // the unrefined quantile approximation -- see normal_quantile_approx.
  double normal() { return detail::normal_quantile_approx(uniform()); }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t counter_ = 0;
  std::uint64_t cached_block_ = ~std::uint64_t{0};
  std::uint64_t words_[4] = {0, 0, 0, 0};
};

// n iid standard normals; advances the stream counter by exactly n.
inline Eigen::VectorXd standard_normals(RngStream& stream, Eigen::Index n) {
  if (n < 0) throw_config("standard_normals: n must be nonnegative");
  Eigen::VectorXd out(n);
  for (Eigen::Index i = 0; i < n; ++i) out[i] = stream.normal();
  return out;
}

inline void fill_standard_normals(RngStream& stream,
                                  Eigen::Ref<Eigen::MatrixXd> out) {
  double* p = out.data();
  const Eigen::Index n = out.size();
  for (Eigen::Index i = 0; i < n; ++i) p[i] = stream.normal();
}

// The auxiliary-variate block driving one ensemble Kalman filter pass on a
// fixed dataset: for each time step with an observation, N members consume
// d_y shift-noise normals and m evolution-noise normals. Storage is one
// slice per step, [shift-noise: N*d_y | evolution-noise: N*m], member-major
// within each part. Datasets with an observation at time 0 get a leading
// slice holding shift noise only.
struct BlockLayout {
  int steps = 0;      // evolution steps T
  int obs_dim = 0;    // d_y
  int draw_count = 0; // m, the model's per-step evolution draw count
  int members = 0;    // N
  bool has_y0 = false;

  Eigen::Index size() const {
    const Eigen::Index per_step =
        static_cast<Eigen::Index>(members) * (obs_dim + draw_count);
    const Eigen::Index head =
        has_y0 ? static_cast<Eigen::Index>(members) * obs_dim : 0;
    return head + static_cast<Eigen::Index>(steps) * per_step;
  }
};

struct NormalBlock {
  BlockLayout layout;
  Eigen::VectorXd values;

  static NormalBlock draw(const BlockLayout& layout, RngStream& stream) {
    NormalBlock b;
    b.layout = layout;
    b.values = standard_normals(stream, layout.size());
    return b;
  }
};

// Crank-Nicolson proposal u* = sqrt(1-sigma_u^2) u + sigma_u z with
// z ~ N(0,I). Reversible with respect to N(0,I): if u is standard normal
// then so is u*, and the proposal density ratio cancels exactly, so no
// term for it appears in any acceptance ratio. sigma_u = 1 redraws the
// block wholesale; sigma_u = 0 is a no-op copy.
inline NormalBlock crank_nicolson(const NormalBlock& u, double sigma_u,
                                  RngStream& stream) {
  if (!(sigma_u >= 0.0) || !(sigma_u <= 1.0))
    throw_config("crank_nicolson: sigma_u must lie in [0,1]");
  NormalBlock out;
  out.layout = u.layout;
  const double keep = std::sqrt(1.0 - sigma_u * sigma_u);
  out.values = keep * u.values +
               sigma_u * standard_normals(stream, u.values.size());
  return out;
}

}  // namespace emcmc
