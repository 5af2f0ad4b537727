#pragma once

// Dense complex linear algebra with tensor-factor bookkeeping.
//
// Index convention: a composite index over factors (d_1, ..., d_k) is
// big-endian, i.e. factor 1 is the most significant digit. Every
// tensor-aware routine below works against this convention.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numeric>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "spiderqkd/errors.hpp"

namespace spiderqkd {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;

inline constexpr double kHermitianTolerance = 1e-12;

/// Ordered list of subsystem dimensions annotating one side of a matrix.
struct FactorShape {
  std::vector<std::size_t> factors;

  FactorShape() = default;
  FactorShape(std::initializer_list<std::size_t> dims) : factors(dims) {}
  explicit FactorShape(std::vector<std::size_t> dims) : factors(std::move(dims)) {}

  [[nodiscard]] std::size_t size() const { return factors.size(); }
  [[nodiscard]] std::size_t operator[](std::size_t i) const { return factors.at(i); }

  [[nodiscard]] std::size_t total() const {
    return std::accumulate(factors.begin(), factors.end(), std::size_t{1},
                           std::multiplies<>());
  }

  /// Stride of factor i in the big-endian composite index.
  [[nodiscard]] std::size_t stride(std::size_t i) const {
    std::size_t s = 1;
    for (std::size_t j = i + 1; j < factors.size(); ++j) s *= factors[j];
    return s;
  }

  /// Splits a composite index into per-factor digits.
  [[nodiscard]] std::vector<std::size_t> digits(std::size_t index) const {
    std::vector<std::size_t> out(factors.size());
    for (std::size_t j = factors.size(); j-- > 0;) {
      out[j] = index % factors[j];
      index /= factors[j];
    }
    return out;
  }

  [[nodiscard]] std::size_t index(const std::vector<std::size_t>& digits) const {
    std::size_t idx = 0;
    for (std::size_t j = 0; j < factors.size(); ++j) idx = idx * factors[j] + digits[j];
    return idx;
  }

  friend bool operator==(const FactorShape&, const FactorShape&) = default;
};

inline ComplexMatrix identity(std::size_t n) {
  return ComplexMatrix::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
}

/// Column vector |i> of the computational basis of C^dim.
inline ComplexMatrix ket(std::size_t dim, std::size_t i) {
  ComplexMatrix v = ComplexMatrix::Zero(static_cast<Eigen::Index>(dim), 1);
  v(static_cast<Eigen::Index>(i), 0) = 1.0;
  return v;
}

inline bool all_finite(const ComplexMatrix& m) {
  return m.allFinite();
}

/// Kronecker product, a's indices major.
inline ComplexMatrix tensor(const ComplexMatrix& a, const ComplexMatrix& b) {
  const Eigen::Index br = b.rows();
  const Eigen::Index bc = b.cols();
  ComplexMatrix out(a.rows() * br, a.cols() * bc);
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * br, j * bc, br, bc) = a(i, j) * b;
  return out;
}

inline ComplexMatrix tensor_power(const ComplexMatrix& a, std::size_t n) {
  ComplexMatrix out = ComplexMatrix::Ones(1, 1);
  for (std::size_t k = 0; k < n; ++k) out = tensor(out, a);
  return out;
}

/// f after g, i.e. the matrix product f * g.
inline ComplexMatrix compose(const ComplexMatrix& f, const ComplexMatrix& g) {
  if (g.rows() != f.cols())
    throw DimensionError("compose: g has " + std::to_string(g.rows()) +
                         " rows but f has " + std::to_string(f.cols()) + " columns");
  return f * g;
}

inline ComplexMatrix dagger(const ComplexMatrix& m) {
  return m.adjoint();
}

inline double trace_real(const ComplexMatrix& m) {
  return m.trace().real();
}

/// Largest absolute entry; cheap entrywise residual.
inline double max_abs(const ComplexMatrix& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

/// Partial trace over the listed factors; the remaining factors keep their order.
inline ComplexMatrix partial_trace(const ComplexMatrix& m, const FactorShape& shape,
                                   const std::set<std::size_t>& traced) {
  if (m.rows() != m.cols()) throw DimensionError("partial_trace: matrix not square");
  if (static_cast<std::size_t>(m.rows()) != shape.total())
    throw DimensionError("partial_trace: shape does not match matrix dimension");
  for (std::size_t t : traced)
    if (t >= shape.size()) throw DimensionError("partial_trace: factor index out of range");

  // full index = kept_offset[a] + traced_offset[t]
  std::vector<std::size_t> kept_offsets{0};
  std::vector<std::size_t> traced_offsets{0};
  for (std::size_t f = 0; f < shape.size(); ++f) {
    auto& offsets = traced.count(f) ? traced_offsets : kept_offsets;
    const std::size_t stride = shape.stride(f);
    std::vector<std::size_t> next;
    next.reserve(offsets.size() * shape[f]);
    for (std::size_t base : offsets)
      for (std::size_t d = 0; d < shape[f]; ++d) next.push_back(base + d * stride);
    offsets = std::move(next);
  }

  const auto n = static_cast<Eigen::Index>(kept_offsets.size());
  ComplexMatrix out = ComplexMatrix::Zero(n, n);
  for (Eigen::Index a = 0; a < n; ++a)
    for (Eigen::Index b = 0; b < n; ++b) {
      Complex acc = 0.0;
      for (std::size_t t : traced_offsets)
        acc += m(static_cast<Eigen::Index>(kept_offsets[a] + t),
                 static_cast<Eigen::Index>(kept_offsets[b] + t));
      out(a, b) = acc;
    }
  return out;
}

/// Unitary sending |i_1 ... i_k> to the product state whose factor j is old factor perm[j].
inline ComplexMatrix permutation_matrix(const FactorShape& shape,
                                        const std::vector<std::size_t>& perm) {
  if (perm.size() != shape.size()) throw DimensionError("permutation_matrix: size mismatch");
  std::vector<std::size_t> sorted = perm;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < sorted.size(); ++i)
    if (sorted[i] != i) throw PreconditionError("permutation_matrix: not a permutation");

  std::vector<std::size_t> new_dims(perm.size());
  for (std::size_t j = 0; j < perm.size(); ++j) new_dims[j] = shape[perm[j]];
  const FactorShape new_shape(new_dims);

  const std::size_t n = shape.total();
  ComplexMatrix p = ComplexMatrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  std::vector<std::size_t> moved(perm.size());
  for (std::size_t idx = 0; idx < n; ++idx) {
    const auto d = shape.digits(idx);
    for (std::size_t j = 0; j < perm.size(); ++j) moved[j] = d[perm[j]];
    p(static_cast<Eigen::Index>(new_shape.index(moved)), static_cast<Eigen::Index>(idx)) = 1.0;
  }
  return p;
}

/// Lifts a square operator acting on the `targets` factors (in that order) to the whole space.
inline ComplexMatrix embed_operator(const ComplexMatrix& op, const FactorShape& shape,
                                    const std::vector<std::size_t>& targets) {
  std::vector<std::size_t> perm = targets;
  std::size_t target_dim = 1;
  for (std::size_t t : targets) {
    if (t >= shape.size()) throw DimensionError("embed_operator: factor out of range");
    target_dim *= shape[t];
  }
  if (op.rows() != op.cols() || static_cast<std::size_t>(op.rows()) != target_dim)
    throw DimensionError("embed_operator: operator does not match target factors");
  for (std::size_t f = 0; f < shape.size(); ++f)
    if (std::find(targets.begin(), targets.end(), f) == targets.end()) perm.push_back(f);
  const ComplexMatrix p = permutation_matrix(shape, perm);
  const ComplexMatrix lifted = tensor(op, identity(shape.total() / target_dim));
  return p.adjoint() * lifted * p;
}

inline RealVector singular_values(const ComplexMatrix& m) {
  if (m.size() == 0) return RealVector();
  Eigen::JacobiSVD<ComplexMatrix> svd(m);
  return svd.singularValues();
}

/// Largest singular value.
inline double operator_norm(const ComplexMatrix& m) {
  if (m.size() == 0) return 0.0;
  if (m.rows() == 1 || m.cols() == 1) return m.norm();
  return singular_values(m).maxCoeff();
}

/// Sum of singular values.
inline double trace_norm(const ComplexMatrix& m) {
  if (m.rows() != m.cols()) throw DimensionError("trace_norm: matrix not square");
  return singular_values(m).sum();
}

inline double hermiticity_defect(const ComplexMatrix& m) {
  return max_abs(m - m.adjoint());
}

struct EigenDecomposition {
  RealVector eigenvalues;     // descending
  ComplexMatrix eigenvectors; // columns, unitary
};

/// Eigendecomposition of a Hermitian matrix, eigenvalues in descending order.
/// The input is symmetrized as (m + m^dagger)/2 after the Hermiticity check.
inline EigenDecomposition hermitian_eig(const ComplexMatrix& m) {
  if (m.rows() != m.cols()) throw DimensionError("hermitian_eig: matrix not square");
  const double scale = std::max(1.0, max_abs(m));
  if (hermiticity_defect(m) > kHermitianTolerance * scale)
    throw PreconditionError("hermitian_eig: matrix is not Hermitian");
  const ComplexMatrix h = 0.5 * (m + m.adjoint());
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(h);
  const Eigen::Index n = h.rows();
  EigenDecomposition out{RealVector(n), ComplexMatrix(n, n)};
  for (Eigen::Index k = 0; k < n; ++k) {
    out.eigenvalues(k) = solver.eigenvalues()(n - 1 - k);
    out.eigenvectors.col(k) = solver.eigenvectors().col(n - 1 - k);
  }
  return out;
}

/// Unitary factor W = P Q^dagger of m = P Sigma Q^dagger; maximizes Re Tr(W^dagger m).
inline ComplexMatrix polar_unitary(const ComplexMatrix& m) {
  if (m.rows() != m.cols()) throw DimensionError("polar_unitary: matrix not square");
  Eigen::JacobiSVD<ComplexMatrix> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  return svd.matrixU() * svd.matrixV().adjoint();
}

/// exp(generator) for skew-Hermitian generator, through the Hermitian eigenproblem of -i*generator.
inline ComplexMatrix unitary_exp(const ComplexMatrix& skew) {
  const ComplexMatrix h = Complex(0.0, -1.0) * skew;
  const auto eig = hermitian_eig(0.5 * (h + h.adjoint()));
  ComplexVector phases(eig.eigenvalues.size());
  for (Eigen::Index k = 0; k < phases.size(); ++k)
    phases(k) = std::exp(Complex(0.0, eig.eigenvalues(k)));
  return eig.eigenvectors * phases.asDiagonal() * eig.eigenvectors.adjoint();
}

inline double unitarity_defect(const ComplexMatrix& u) {
  return operator_norm(u.adjoint() * u - identity(static_cast<std::size_t>(u.cols())));
}

/// Row-major vectorization: vec(m)[i*cols + j] = m(i, j).
inline ComplexMatrix vec(const ComplexMatrix& m) {
  ComplexMatrix out(m.size(), 1);
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) out(i * m.cols() + j, 0) = m(i, j);
  return out;
}

inline ComplexMatrix unvec(const ComplexMatrix& v, Eigen::Index rows, Eigen::Index cols) {
  if (v.size() != rows * cols) throw DimensionError("unvec: size mismatch");
  ComplexMatrix out(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) out(i, j) = v(i * cols + j);
  return out;
}

}  // namespace spiderqkd
