#pragma once

// Spiders of an orthonormal basis and the maps derived from them.
//
// Classical wires are carried as the diagonal subalgebra of a D-dimensional
// space: a distribution p is the density matrix diag(p), and the classical
// outcome i of a measurement in basis b is the computational vector |i>.

#include <cmath>
#include <numbers>
#include <string>

#include "spiderqkd/channels.hpp"
#include "spiderqkd/linalg.hpp"

namespace spiderqkd {

inline constexpr double kOrthonormalityTolerance = 1e-12;
inline constexpr double kUnbiasednessTolerance = 1e-10;

/// Orthonormal basis of C^D, stored as the columns of a unitary.
class Basis {
public:
  explicit Basis(ComplexMatrix vectors) : vectors_(std::move(vectors)) {
    if (vectors_.rows() != vectors_.cols() || vectors_.rows() == 0)
      throw DimensionError("Basis: expected a nonempty square matrix of column vectors");
    const double defect = max_abs(vectors_.adjoint() * vectors_ - identity(dim()));
    if (defect > kOrthonormalityTolerance)
      throw PreconditionError("Basis: columns are not orthonormal (defect " + std::to_string(defect) + ")");
  }

  static Basis computational(std::size_t dim) { return Basis(identity(dim)); }

  [[nodiscard]] std::size_t dim() const { return static_cast<std::size_t>(vectors_.rows()); }
  [[nodiscard]] const ComplexMatrix& vectors() const { return vectors_; }
  [[nodiscard]] ComplexMatrix vector(std::size_t i) const {
    return vectors_.col(static_cast<Eigen::Index>(i));
  }
  [[nodiscard]] ComplexMatrix projector(std::size_t i) const {
    const ComplexMatrix v = vector(i);
    return v * v.adjoint();
  }

private:
  ComplexMatrix vectors_;
};

/// Columns (1/sqrt D) sum_k w^{jk} |k>, w = exp(2 pi i / D).
inline Basis fourier_basis(std::size_t dim) {
  if (dim == 0) throw DimensionError("fourier_basis: dimension must be positive");
  const auto d = static_cast<Eigen::Index>(dim);
  ComplexMatrix f(d, d);
  const double norm = 1.0 / std::sqrt(static_cast<double>(dim));
  for (Eigen::Index k = 0; k < d; ++k)
    for (Eigen::Index j = 0; j < d; ++j) {
      // reduce jk mod D first so large products keep full phase accuracy
      const auto r = static_cast<double>((j * k) % d);
      f(k, j) = norm * std::polar(1.0, 2.0 * std::numbers::pi * r / static_cast<double>(dim));
    }
  return Basis(f);
}

/// The fixed pair of bases (white = Z, gray = X). Unbiasedness is reported, not enforced.
class SpiderPair {
public:
  SpiderPair(Basis white, Basis gray) : white_(std::move(white)), gray_(std::move(gray)) {
    if (white_.dim() != gray_.dim()) throw DimensionError("SpiderPair: bases have different dimensions");
  }

  /// Computational basis with its Fourier partner.
  static SpiderPair standard(std::size_t dim) { return {Basis::computational(dim), fourier_basis(dim)}; }

  [[nodiscard]] std::size_t dim() const { return white_.dim(); }
  [[nodiscard]] const Basis& white() const { return white_; }
  [[nodiscard]] const Basis& gray() const { return gray_; }

  /// G(i, j) = <z_i | x_j>
  [[nodiscard]] ComplexMatrix overlaps() const { return white_.vectors().adjoint() * gray_.vectors(); }

  /// max_ij | |<z_i|x_j>|^2 - 1/D |
  [[nodiscard]] double unbiasedness_residual() const {
    const ComplexMatrix g = overlaps();
    const double target = 1.0 / static_cast<double>(dim());
    return (g.cwiseAbs2().array() - target).abs().maxCoeff();
  }

  [[nodiscard]] bool is_unbiased() const { return unbiasedness_residual() <= kUnbiasednessTolerance; }

  /// min_ij |<z_i|x_j>|
  [[nodiscard]] double min_overlap() const { return overlaps().cwiseAbs().minCoeff(); }

private:
  Basis white_;
  Basis gray_;
};

/// sum_i |i>^{(x) n} <i|^{(x) m}, a D^n x D^m matrix; the 0-legged spider is [D].
inline ComplexMatrix spider(const Basis& b, std::size_t inputs, std::size_t outputs) {
  const std::size_t d = b.dim();
  std::size_t rows = 1, cols = 1;
  for (std::size_t k = 0; k < outputs; ++k) rows *= d;
  for (std::size_t k = 0; k < inputs; ++k) cols *= d;
  ComplexMatrix s = ComplexMatrix::Zero(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < d; ++i) {
    const ComplexMatrix v = b.vector(i);
    const ComplexMatrix out = tensor_power(v, outputs);
    const ComplexMatrix in = tensor_power(v.adjoint(), inputs);
    s.noalias() += out * in;
  }
  return s;
}

/// Plugs the last k outputs of `lower` (D^n x D^m) into the first k inputs of
/// `upper` (D^n2 x D^m2). Result: outputs (lower's first n-k, upper's n2),
/// inputs (lower's m, upper's last m2-k). Same as
/// (1^{n-k} (x) upper) o (lower (x) 1^{m2-k}) without forming the identities.
inline ComplexMatrix compose_along(const ComplexMatrix& lower, std::size_t lower_outputs,
                                   const ComplexMatrix& upper, std::size_t upper_inputs,
                                   std::size_t k, std::size_t d) {
  auto power = [d](std::size_t e) {
    std::size_t p = 1;
    for (std::size_t i = 0; i < e; ++i) p *= d;
    return p;
  };
  if (k > lower_outputs || k > upper_inputs) throw DimensionError("compose_along: too many legs");
  if (static_cast<std::size_t>(lower.rows()) != power(lower_outputs) ||
      static_cast<std::size_t>(upper.cols()) != power(upper_inputs))
    throw DimensionError("compose_along: leg counts do not match matrix shapes");
  const std::size_t a_dim = power(lower_outputs - k);
  const std::size_t w_dim = power(k);
  const std::size_t c_dim = static_cast<std::size_t>(lower.cols());
  const std::size_t b_dim = static_cast<std::size_t>(upper.rows());
  const std::size_t r_dim = power(upper_inputs - k);
  ComplexMatrix out = ComplexMatrix::Zero(static_cast<Eigen::Index>(a_dim * b_dim),
                                          static_cast<Eigen::Index>(c_dim * r_dim));
  for (std::size_t a = 0; a < a_dim; ++a)
    for (std::size_t w = 0; w < w_dim; ++w) {
      const auto lrow = static_cast<Eigen::Index>(a * w_dim + w);
      for (std::size_t c = 0; c < c_dim; ++c) {
        const Complex lv = lower(lrow, static_cast<Eigen::Index>(c));
        if (lv == Complex(0.0)) continue;
        for (std::size_t b = 0; b < b_dim; ++b)
          for (std::size_t r = 0; r < r_dim; ++r)
            out(static_cast<Eigen::Index>(a * b_dim + b), static_cast<Eigen::Index>(c * r_dim + r)) +=
                lv * upper(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(w * r_dim + r));
      }
    }
  return out;
}

/// Frobenius residual of spider fusion along k legs (an upper bound on the operator-norm residual).
inline double spider_fusion_residual(const Basis& b, std::size_t m, std::size_t n, std::size_t m2,
                                     std::size_t n2, std::size_t k) {
  const ComplexMatrix fused = compose_along(spider(b, m, n), n, spider(b, m2, n2), m2, k, b.dim());
  return (fused - spider(b, m + m2 - k, n + n2 - k)).norm();
}

/// || S^dagger S - I || for the one-input spider S with n >= 1 outputs: its doubling preserves trace.
inline double spider_trace_preservation_residual(const Basis& b, std::size_t outputs) {
  const ComplexMatrix s = spider(b, 1, outputs);
  return operator_norm(s.adjoint() * s - identity(b.dim()));
}

// Measurement, encoding and decoherence ------------------------------------

/// rho -> (<b_i|rho|b_i>)_i as a diagonal classical state.
inline Channel measure_map(const Basis& b) {
  const std::size_t d = b.dim();
  std::vector<ComplexMatrix> kraus;
  for (std::size_t i = 0; i < d; ++i) kraus.push_back(ket(d, i) * b.vector(i).adjoint());
  return Channel(std::move(kraus), {quantum(d)}, {classical(d)});
}

/// p -> sum_i p_i |b_i><b_i|
inline Channel encode_map(const Basis& b) {
  const std::size_t d = b.dim();
  std::vector<ComplexMatrix> kraus;
  for (std::size_t i = 0; i < d; ++i) kraus.push_back(b.vector(i) * ket(d, i).adjoint());
  return Channel(std::move(kraus), {classical(d)}, {quantum(d)});
}

/// rho_ij -> delta_ij rho_ii in basis b.
inline Channel decoherence(const Basis& b) {
  std::vector<ComplexMatrix> kraus;
  for (std::size_t i = 0; i < b.dim(); ++i) kraus.push_back(b.projector(i));
  return Channel::from_kraus(std::move(kraus));
}

/// Identity on a classical wire; as a map on all matrices it is computational decoherence.
inline Channel classical_identity(std::size_t d) {
  std::vector<ComplexMatrix> kraus;
  for (std::size_t i = 0; i < d; ++i) kraus.push_back(ket(d, i) * ket(d, i).adjoint());
  return Channel(std::move(kraus), {classical(d)}, {classical(d)});
}

/// rho -> sum_i |b_i><b_i| rho |b_i><b_i| (x) |i><i|
inline Channel nondemolition_measurement(const Basis& b) {
  const std::size_t d = b.dim();
  std::vector<ComplexMatrix> kraus;
  for (std::size_t i = 0; i < d; ++i)
    kraus.push_back(tensor(b.vector(i), ket(d, i)) * b.vector(i).adjoint());
  return Channel(std::move(kraus), {quantum(d)}, {quantum(d), classical(d)});
}

/// m as a linear map B(H) -> C^D on row-major vectorized operators (D x D^2).
inline ComplexMatrix measure_matrix(const Basis& b) {
  const std::size_t d = b.dim();
  ComplexMatrix m(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d * d));
  for (std::size_t k = 0; k < d; ++k) m.row(static_cast<Eigen::Index>(k)) = vec(b.projector(k)).adjoint();
  return m;
}

/// e as a linear map C^D -> B(H) on row-major vectorized operators (D^2 x D).
inline ComplexMatrix encode_matrix(const Basis& b) {
  const std::size_t d = b.dim();
  ComplexMatrix e(static_cast<Eigen::Index>(d * d), static_cast<Eigen::Index>(d));
  for (std::size_t k = 0; k < d; ++k) e.col(static_cast<Eigen::Index>(k)) = vec(b.projector(k));
  return e;
}

/// Superoperator of a channel on row-major vectorized operators: sum_k K (x) conj(K).
inline ComplexMatrix superoperator(const Channel& c) {
  const auto n = static_cast<Eigen::Index>(c.out_dim() * c.out_dim());
  const auto m = static_cast<Eigen::Index>(c.in_dim() * c.in_dim());
  ComplexMatrix s = ComplexMatrix::Zero(n, m);
  for (const auto& k : c.kraus()) s += tensor(k, k.conjugate());
  return s;
}

// Classical spiders ----------------------------------------------------------

/// sum_i |ii><i| on the classical wire of b.
inline ComplexMatrix classical_copy(const Basis& b) { return spider(Basis::computational(b.dim()), 1, 2); }

/// sum_i <i|
inline ComplexMatrix classical_delete(const Basis& b) { return spider(Basis::computational(b.dim()), 1, 0); }

/// (1/D) sum_i |i>
inline ComplexMatrix classical_uniform(const Basis& b) {
  return spider(Basis::computational(b.dim()), 0, 1) / static_cast<double>(b.dim());
}

// Complementarity ------------------------------------------------------------

/// s = sum_ij <z_i|x_j> |x_j><z_i|
inline ComplexMatrix antipode(const SpiderPair& p) {
  const std::size_t d = p.dim();
  ComplexMatrix s = ComplexMatrix::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) {
      const Complex overlap = (p.white().vector(i).adjoint() * p.gray().vector(j))(0, 0);
      s += overlap * p.gray().vector(j) * p.white().vector(i).adjoint();
    }
  return s;
}

/// || m_gray o e_white - (1/D) uniform-times-delete ||_inf, where the right side
/// is the all-ones D x D matrix over D.
inline double check_complementarity_thm1(const SpiderPair& p) {
  const ComplexMatrix lhs = measure_matrix(p.gray()) * encode_matrix(p.white());
  const ComplexMatrix rhs = classical_uniform(p.white()) * classical_delete(p.white());
  return operator_norm(lhs - rhs);
}

/// || gray merge o (1 (x) s) o white copy - (1/D) gray unit o white counit ||_inf
inline double check_complementarity_thm2(const SpiderPair& p) {
  const std::size_t d = p.dim();
  const ComplexMatrix lhs =
      spider(p.gray(), 2, 1) * tensor(identity(d), antipode(p)) * spider(p.white(), 1, 2);
  const ComplexMatrix rhs = spider(p.gray(), 0, 1) * spider(p.white(), 1, 0) / static_cast<double>(d);
  return operator_norm(lhs - rhs);
}

}  // namespace spiderqkd
