#pragma once

#include <cmath>
#include <vector>

#include "spiderqkd/spiderqkd.hpp"

namespace spiderqkd::testing {

inline ComplexMatrix diag(std::initializer_list<double> values) {
  ComplexMatrix m = ComplexMatrix::Zero(static_cast<Eigen::Index>(values.size()), static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double v : values) m(i, i) = v, ++i;
  return m;
}

inline ComplexMatrix pauli_z() { return diag({1.0, -1.0}); }

/// Random CPTP map B(C^in) -> B(C^out) with the given number of Kraus operators.
inline Channel random_channel(std::size_t in, std::size_t out, std::size_t kraus, Rng& rng) {
  const ComplexMatrix iso = random_isometry(out * kraus, in, rng);
  return Dilation{iso, out, kraus}.channel();
}

/// Output of a channel through its Choi matrix: Tr_in[(I (x) rho^T) J], J on out (x) in.
inline ComplexMatrix choi_contraction(const ComplexMatrix& j, const ComplexMatrix& rho, std::size_t out) {
  const auto in = static_cast<std::size_t>(rho.rows());
  ComplexMatrix r = ComplexMatrix::Zero(static_cast<Eigen::Index>(out), static_cast<Eigen::Index>(out));
  for (std::size_t a = 0; a < out; ++a)
    for (std::size_t b = 0; b < out; ++b)
      for (std::size_t i = 0; i < in; ++i)
        for (std::size_t k = 0; k < in; ++k)
          r(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) +=
              j(static_cast<Eigen::Index>(a * in + i), static_cast<Eigen::Index>(b * in + k)) *
              rho(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k));
  return r;
}

/// Spanning set of inputs: all |i><j|.
inline std::vector<ComplexMatrix> matrix_units(std::size_t d) {
  std::vector<ComplexMatrix> out;
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) out.push_back(ket(d, i) * ket(d, j).adjoint());
  return out;
}

inline double max_output_distance(const Channel& a, const Channel& b) {
  double worst = 0.0;
  for (const auto& e : matrix_units(a.in_dim())) worst = std::max(worst, max_abs(apply(a, e) - apply(b, e)));
  return worst;
}

/// (1/D) sum |ii><jj| on C^D (x) C^D.
inline ComplexMatrix max_entangled_projector(std::size_t d) {
  const ComplexMatrix psi = maximally_entangled(d);
  return psi * psi.adjoint();
}

}  // namespace spiderqkd::testing
