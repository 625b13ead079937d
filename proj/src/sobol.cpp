#include "emcmc/sobol.hpp"

#include <array>
#include <vector>

#include "emcmc/random.hpp"

namespace emcmc {

namespace {

constexpr int kBits = 52;  // resolution; fits a double mantissa
constexpr int kMaxDim = 64;

// Primitive polynomial over GF(2) plus initial direction values for one
// dimension. `a` packs the interior coefficients of the polynomial
// x^s + a_1 x^{s-1} + ... + a_{s-1} x + 1, most significant first.
struct DimSpec {
  int degree;
  std::uint32_t a;
  std::array<std::uint32_t, 9> m;
};

// Classical initial direction values for the low dimensions (dimension 1
// is the van der Corput sequence and handled separately).
constexpr DimSpec kLowDims[] = {
    {1, 0, {1}},                  // dim 2
    {2, 1, {1, 3}},               // dim 3
    {3, 1, {1, 3, 1}},            // dim 4
    {3, 2, {1, 1, 1}},            // dim 5
    {4, 1, {1, 1, 3, 3}},         // dim 6
    {4, 4, {1, 3, 5, 13}},        // dim 7
    {5, 2, {1, 1, 5, 5, 17}},     // dim 8
    {5, 4, {1, 1, 5, 5, 5}},      // dim 9
    {5, 7, {1, 1, 7, 11, 19}},    // dim 10
    {5, 11, {1, 1, 5, 1, 1}},     // dim 11
    {5, 13, {1, 1, 1, 3, 11}},    // dim 12
    {5, 14, {1, 3, 5, 5, 31}},    // dim 13
};
constexpr int kLowDimCount = static_cast<int>(std::size(kLowDims)) + 1;

// --- GF(2) polynomial helpers for generating the higher dimensions ---

std::uint32_t gf2_mulmod(std::uint32_t a, std::uint32_t b, std::uint32_t p,
                         int deg) {
  std::uint32_t r = 0;
  while (b) {
    if (b & 1u) r ^= a;
    b >>= 1;
    a <<= 1;
    if (a & (1u << deg)) a ^= p;
  }
  return r;
}

std::uint32_t gf2_powmod(std::uint32_t base, std::uint64_t e, std::uint32_t p,
                         int deg) {
  std::uint32_t r = 1;
  while (e) {
    if (e & 1ull) r = gf2_mulmod(r, base, p, deg);
    base = gf2_mulmod(base, base, p, deg);
    e >>= 1;
  }
  return r;
}

bool gf2_irreducible(std::uint32_t p, int deg) {
  // trial division by every polynomial of degree 1..deg/2
  for (int d = 1; 2 * d <= deg; ++d) {
    for (std::uint32_t q = (1u << d); q < (2u << d); ++q) {
      // long division p / q over GF(2)
      std::uint32_t rem = p;
      int shift = deg - d;
      while (shift >= 0) {
        if (rem & (1u << (d + shift))) rem ^= q << shift;
        --shift;
      }
      if (rem == 0) return false;
    }
  }
  return true;
}

bool gf2_primitive(std::uint32_t p, int deg) {
  if (!(p & 1u)) return false;  // needs nonzero constant term
  if (!gf2_irreducible(p, deg)) return false;
  const std::uint64_t order = (1ull << deg) - 1;
  // prime factors of 2^deg - 1 for the degrees we generate
  static const std::vector<std::uint64_t> factors_by_deg[] = {
      {}, {1}, {3}, {7}, {3, 5}, {31}, {3, 7}, {127}, {3, 5, 17}, {7, 73}};
  for (std::uint64_t q : factors_by_deg[deg]) {
    if (q <= 1) continue;
    if (gf2_powmod(2u, order / q, p, deg) == 1u) return false;
  }
  return gf2_powmod(2u, order, p, deg) == 1u;
}

// Base (unscrambled) direction integers for dimensions 1..64, built once.
// Low dimensions use the classical tables; higher ones pair successive
// primitive polynomials with fixed pseudorandom odd initial values, which
// keeps the digital-net structure (any odd m_i < 2^i is admissible).
const Eigen::Matrix<std::uint64_t, kBits, kMaxDim>& base_directions() {
  static const auto table = [] {
    Eigen::Matrix<std::uint64_t, kBits, kMaxDim> v;
    // dimension 1: v_i = 2^{-i}
    for (int i = 0; i < kBits; ++i) v(i, 0) = 1ull << (kBits - 1 - i);

    std::vector<DimSpec> specs(kLowDims, kLowDims + std::size(kLowDims));
    int degree = 6;
    std::uint32_t a = 0;
    while (static_cast<int>(specs.size()) + 1 < kMaxDim) {
      if (a >= (1u << (degree - 1))) {
        ++degree;
        a = 0;
        continue;
      }
      const std::uint32_t poly = (1u << degree) | (a << 1) | 1u;
      if (gf2_primitive(poly, degree)) {
        DimSpec s{degree, a, {}};
        const int d = static_cast<int>(specs.size()) + 2;
        for (int i = 0; i < degree; ++i) {
          const std::uint64_t r = detail::mix64(0x50B0Cull * 64 + d * 64 + i);
          s.m[i] = static_cast<std::uint32_t>(r & ((1u << (i + 1)) - 1)) | 1u;
        }
        specs.push_back(s);
      }
      ++a;
    }

    for (int d = 0; d < static_cast<int>(specs.size()); ++d) {
      const DimSpec& s = specs[d];
      const int deg = s.degree;
      for (int i = 0; i < deg; ++i)
        v(i, d + 1) = static_cast<std::uint64_t>(s.m[i]) << (kBits - 1 - i);
      for (int i = deg; i < kBits; ++i) {
        std::uint64_t vi = v(i - deg, d + 1) ^ (v(i - deg, d + 1) >> deg);
        for (int k = 1; k < deg; ++k)
          if ((s.a >> (deg - 1 - k)) & 1u) vi ^= v(i - k, d + 1);
        v(i, d + 1) = vi;
      }
    }
    return v;
  }();
  return table;
}

}  // namespace

SobolSampler::SobolSampler(int dim, std::optional<std::uint64_t> scramble_seed)
    : dim_(dim) {
  if (dim < 1 || dim > kMaxDim)
    throw_config("SobolSampler: dimension must lie in [1,64]");
  dirs_ = base_directions().topLeftCorner(kBits, dim);
  shift_.setZero(dim);
  x_.setZero(dim);

  if (scramble_seed) {
    RngStream rng(*scramble_seed, 0x5C6A3B1Eull);
    for (int d = 0; d < dim; ++d) {
      // random lower-triangular bit matrix with unit diagonal, rows packed
      // so that bit (kBits-1-r) is row r
      std::uint64_t rows[kBits];
      for (int r = 0; r < kBits; ++r) {
        const std::uint64_t diag = 1ull << (kBits - 1 - r);
        const std::uint64_t above = r == 0 ? 0 : (rng.next_u64() << (kBits - r));
        rows[r] = diag | (above & ~((diag << 1) - 1) & ((~0ull) >> (64 - kBits)));
      }
      for (int i = 0; i < kBits; ++i) {
        const std::uint64_t col = dirs_(i, d);
        std::uint64_t out = 0;
        for (int r = 0; r < kBits; ++r)
          out |= static_cast<std::uint64_t>(__builtin_parityll(rows[r] & col))
                 << (kBits - 1 - r);
        dirs_(i, d) = out;
      }
      shift_[d] = rng.next_u64() >> (64 - kBits);
    }
  }
}

void SobolSampler::reset() {
  index_ = 0;
  x_.setZero(dim_);
}

void SobolSampler::fill(Eigen::Ref<Eigen::MatrixXd> out) {
  if (out.cols() != dim_)
    throw_dimension("SobolSampler::fill: column count must equal dim");
  for (Eigen::Index row = 0; row < out.rows(); ++row) {
    const std::uint64_t k = ++index_;  // skip index 0
    const int bit = __builtin_ctzll(k);
    for (int d = 0; d < dim_; ++d) {
      x_[d] ^= dirs_(bit, d);
      out(row, d) = (static_cast<double>(x_[d] ^ shift_[d]) + 0.5) *
                    0x1p-52;
    }
  }
}

Eigen::MatrixXd SobolSampler::points(Eigen::Index n) {
  Eigen::MatrixXd out(n, dim_);
  fill(out);
  return out;
}

Eigen::MatrixXd sobol_points(int dim, Eigen::Index n,
                             std::optional<std::uint64_t> scramble_seed) {
  SobolSampler s(dim, scramble_seed);
  return s.points(n);
}

}  // namespace emcmc
