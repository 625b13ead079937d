#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <optional>

#include "emcmc/error.hpp"
#include "emcmc/gaussian.hpp"

// Scrambled Sobol sequences in up to 64 dimensions, 52 bits of resolution.
// Scrambling is a random linear (lower-triangular) transform of the
// generator matrices followed by a digital XOR shift, so every coordinate
// of every point is marginally uniform while the digital-net structure is
// preserved. Point index 0 is never emitted; coordinates are strictly
// inside (0,1).

namespace emcmc {

class SobolSampler {
 public:
  // Unscrambled when scramble_seed is empty.
  explicit SobolSampler(int dim,
                        std::optional<std::uint64_t> scramble_seed = {});

  int dim() const { return dim_; }

  // Restart the sequence (same scrambling).
  void reset();

  // Next n points in sequence order, one row per point.
  Eigen::MatrixXd points(Eigen::Index n);

  // Fill a preallocated n x dim block.
  void fill(Eigen::Ref<Eigen::MatrixXd> out);

 private:
  int dim_;
  std::uint64_t index_ = 0;  // points emitted so far
  Eigen::Matrix<std::uint64_t, Eigen::Dynamic, Eigen::Dynamic> dirs_;  // 52 x dim
  Eigen::Matrix<std::uint64_t, 1, Eigen::Dynamic> shift_;  // digital shift per dim
  Eigen::Matrix<std::uint64_t, 1, Eigen::Dynamic> x_;      // Gray-code state
};

// One-call form: the first n points of a (scrambled) Sobol sequence.
Eigen::MatrixXd sobol_points(int dim, Eigen::Index n,
                             std::optional<std::uint64_t> scramble_seed = {});

// Map uniforms to standard normals through the inverse CDF, elementwise.
// Errors if any entry lies outside the open interval (0,1).
template <class Derived>
Eigen::MatrixXd normals_from_uniforms(const Eigen::MatrixBase<Derived>& u) {
  Eigen::MatrixXd z(u.rows(), u.cols());
  for (Eigen::Index j = 0; j < u.cols(); ++j)
    for (Eigen::Index i = 0; i < u.rows(); ++i)
      z(i, j) = inverse_normal_cdf(u(i, j));
  return z;
}

}  // namespace emcmc
