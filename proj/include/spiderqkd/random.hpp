#pragma once

// Seeded randomness. The generator is SplitMix64; substreams are keyed by
// (seed, stream index) so that any round or trial can be regenerated on its
// own. Distributions are implemented here rather than taken from <random>
// because the standard distributions are not bit-reproducible across
// standard library implementations.

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>

#include "spiderqkd/linalg.hpp"

namespace spiderqkd {

inline std::uint64_t splitmix64_step(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Seed of the substream `stream` of a run seeded with `seed`.
inline std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t s = seed ^ (0xD1B54A32D192ED03ULL * (stream + 1));
  splitmix64_step(s);
  return splitmix64_step(s);
}

class Rng {
public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed) : state_(seed) {}
  Rng(std::uint64_t seed, std::uint64_t stream) : state_(substream_seed(seed, stream)) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
  result_type operator()() { return splitmix64_step(state_); }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, n), rejection sampled.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = max() - max() % n;
    std::uint64_t x;
    do {
      x = (*this)();
    } while (x >= limit);
    return x % n;
  }

  /// Standard normal via Box-Muller.
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  Complex complex_normal() { return {normal() / std::numbers::sqrt2, normal() / std::numbers::sqrt2}; }

private:
  std::uint64_t state_;
};

inline ComplexMatrix random_ginibre(std::size_t rows, std::size_t cols, Rng& rng) {
  ComplexMatrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = rng.complex_normal();
  return m;
}

/// Haar-random isometry C^cols -> C^rows (rows >= cols), QR with phase fix.
inline ComplexMatrix random_isometry(std::size_t rows, std::size_t cols, Rng& rng) {
  if (rows < cols) throw DimensionError("random_isometry: rows < cols");
  const ComplexMatrix g = random_ginibre(rows, cols, rng);
  Eigen::HouseholderQR<ComplexMatrix> qr(g);
  ComplexMatrix q = qr.householderQ() * ComplexMatrix::Identity(g.rows(), g.cols());
  const ComplexMatrix r = qr.matrixQR();
  for (Eigen::Index k = 0; k < q.cols(); ++k) {
    const Complex d = r(k, k);
    if (std::abs(d) > 0.0) q.col(k) *= d / std::abs(d);
  }
  return q;
}

inline ComplexMatrix random_unitary(std::size_t dim, Rng& rng) {
  return random_isometry(dim, dim, rng);
}

/// Unit vector, Haar-distributed.
inline ComplexMatrix random_pure_state(std::size_t dim, Rng& rng) {
  ComplexMatrix v = random_ginibre(dim, 1, rng);
  return v / v.norm();
}

/// Density matrix of the induced measure with ancilla `rank`.
inline ComplexMatrix random_density(std::size_t dim, Rng& rng, std::size_t rank = 0) {
  if (rank == 0) rank = dim;
  const ComplexMatrix g = random_ginibre(dim, rank, rng);
  ComplexMatrix rho = g * g.adjoint();
  return rho / rho.trace().real();
}

inline ComplexMatrix random_hermitian(std::size_t dim, Rng& rng) {
  const ComplexMatrix g = random_ginibre(dim, dim, rng);
  return 0.5 * (g + g.adjoint());
}

}  // namespace spiderqkd
