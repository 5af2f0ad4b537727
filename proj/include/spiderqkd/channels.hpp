#pragma once

// Completely positive maps in Kraus form, their Choi matrices, and Stinespring
// dilations.
//
// Conventions:
//   * Kraus operators map in -> out, so they are out_dim x in_dim.
//   * The Choi matrix lives on out (x) in:
//       J = sum_k vec(K_k) vec(K_k)^dagger = sum_ij Phi(|i><j|) (x) |i><j|
//     with vec the row-major vectorization.
//   * A dilation V : H -> K (x) L has the environment L as the last factor,
//     V = sum_k K_k (x) |k>_L.

#include <cstddef>
#include <numeric>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "spiderqkd/errors.hpp"
#include "spiderqkd/linalg.hpp"

namespace spiderqkd {

inline constexpr double kChoiCutoff = 1e-10;
inline constexpr double kChannelTolerance = 1e-10;

enum class LegKind { Quantum, Classical };

/// One tensor factor on either side of a channel. Classical legs carry
/// distributions as diagonal density matrices of the same dimension.
struct Leg {
  std::size_t dim = 1;
  LegKind kind = LegKind::Quantum;
  friend bool operator==(const Leg&, const Leg&) = default;
};

inline Leg quantum(std::size_t dim) { return {dim, LegKind::Quantum}; }
inline Leg classical(std::size_t dim) { return {dim, LegKind::Classical}; }

inline std::size_t legs_dim(const std::vector<Leg>& legs) {
  std::size_t d = 1;
  for (const auto& l : legs) d *= l.dim;
  return d;
}

inline FactorShape legs_shape(const std::vector<Leg>& legs) {
  std::vector<std::size_t> dims;
  dims.reserve(legs.size());
  for (const auto& l : legs) dims.push_back(l.dim);
  return FactorShape(dims);
}

class Channel {
public:
  Channel(std::vector<ComplexMatrix> kraus, std::vector<Leg> in_legs, std::vector<Leg> out_legs)
      : kraus_(std::move(kraus)), in_legs_(std::move(in_legs)), out_legs_(std::move(out_legs)) {
    const auto in = static_cast<Eigen::Index>(legs_dim(in_legs_));
    const auto out = static_cast<Eigen::Index>(legs_dim(out_legs_));
    if (kraus_.empty()) kraus_.push_back(ComplexMatrix::Zero(out, in));
    for (const auto& k : kraus_) {
      if (k.rows() != out || k.cols() != in)
        throw DimensionError("Channel: Kraus operator is " + std::to_string(k.rows()) + "x" +
                             std::to_string(k.cols()) + ", expected " + std::to_string(out) +
                             "x" + std::to_string(in));
      if (!k.allFinite()) throw PreconditionError("Channel: non-finite Kraus entry");
    }
  }

  /// Single quantum leg on each side, dimensions read off the Kraus operators.
  static Channel from_kraus(std::vector<ComplexMatrix> kraus) {
    if (kraus.empty()) throw PreconditionError("Channel::from_kraus: empty Kraus list");
    const auto out = static_cast<std::size_t>(kraus.front().rows());
    const auto in = static_cast<std::size_t>(kraus.front().cols());
    return Channel(std::move(kraus), {quantum(in)}, {quantum(out)});
  }

  [[nodiscard]] std::size_t in_dim() const { return legs_dim(in_legs_); }
  [[nodiscard]] std::size_t out_dim() const { return legs_dim(out_legs_); }
  [[nodiscard]] const std::vector<ComplexMatrix>& kraus() const { return kraus_; }
  [[nodiscard]] const std::vector<Leg>& in_legs() const { return in_legs_; }
  [[nodiscard]] const std::vector<Leg>& out_legs() const { return out_legs_; }
  [[nodiscard]] FactorShape in_shape() const { return legs_shape(in_legs_); }
  [[nodiscard]] FactorShape out_shape() const { return legs_shape(out_legs_); }

  /// || sum_k K_k^dagger K_k - I ||_inf
  [[nodiscard]] double trace_preservation_defect() const {
    ComplexMatrix s = ComplexMatrix::Zero(static_cast<Eigen::Index>(in_dim()),
                                          static_cast<Eigen::Index>(in_dim()));
    for (const auto& k : kraus_) s += k.adjoint() * k;
    return operator_norm(s - identity(in_dim()));
  }

  [[nodiscard]] bool is_trace_preserving(double tol = kChannelTolerance) const {
    return trace_preservation_defect() <= tol;
  }

  /// Same Kraus family with new leg annotations of matching total dimensions.
  [[nodiscard]] Channel relabeled(std::vector<Leg> in_legs, std::vector<Leg> out_legs) const {
    return Channel(kraus_, std::move(in_legs), std::move(out_legs));
  }

private:
  std::vector<ComplexMatrix> kraus_;
  std::vector<Leg> in_legs_;
  std::vector<Leg> out_legs_;
};

/// sum_k K rho K^dagger
inline ComplexMatrix apply(const Channel& c, const ComplexMatrix& rho) {
  if (rho.rows() != rho.cols() || static_cast<std::size_t>(rho.rows()) != c.in_dim())
    throw DimensionError("apply: state dimension does not match channel input");
  ComplexMatrix out = ComplexMatrix::Zero(static_cast<Eigen::Index>(c.out_dim()),
                                          static_cast<Eigen::Index>(c.out_dim()));
  for (const auto& k : c.kraus()) out += k * rho * k.adjoint();
  return out;
}

/// c2 after c1.
inline Channel compose(const Channel& c2, const Channel& c1) {
  if (c2.in_dim() != c1.out_dim()) throw DimensionError("compose: channel dimensions mismatch");
  std::vector<ComplexMatrix> kraus;
  kraus.reserve(c1.kraus().size() * c2.kraus().size());
  for (const auto& k2 : c2.kraus())
    for (const auto& k1 : c1.kraus()) {
      ComplexMatrix k = k2 * k1;
      if (k.squaredNorm() > 0.0) kraus.push_back(std::move(k));
    }
  return Channel(std::move(kraus), c1.in_legs(), c2.out_legs());
}

inline Channel tensor(const Channel& a, const Channel& b) {
  std::vector<ComplexMatrix> kraus;
  kraus.reserve(a.kraus().size() * b.kraus().size());
  for (const auto& ka : a.kraus())
    for (const auto& kb : b.kraus()) {
      ComplexMatrix k = tensor(ka, kb);
      if (k.squaredNorm() > 0.0) kraus.push_back(std::move(k));
    }
  std::vector<Leg> in = a.in_legs();
  in.insert(in.end(), b.in_legs().begin(), b.in_legs().end());
  std::vector<Leg> out = a.out_legs();
  out.insert(out.end(), b.out_legs().begin(), b.out_legs().end());
  return Channel(std::move(kraus), std::move(in), std::move(out));
}

inline ComplexMatrix choi(const Channel& c) {
  const auto n = static_cast<Eigen::Index>(c.in_dim() * c.out_dim());
  ComplexMatrix j = ComplexMatrix::Zero(n, n);
  for (const auto& k : c.kraus()) {
    const ComplexMatrix v = vec(k);
    j += v * v.adjoint();
  }
  return j;
}

/// Kraus family recovered from the eigenvectors of a positive Choi matrix;
/// eigenvalues at or below the cutoff are dropped.
inline Channel from_choi(const ComplexMatrix& j, std::vector<Leg> in_legs, std::vector<Leg> out_legs) {
  const std::size_t in = legs_dim(in_legs);
  const std::size_t out = legs_dim(out_legs);
  if (static_cast<std::size_t>(j.rows()) != in * out || j.rows() != j.cols())
    throw DimensionError("from_choi: Choi matrix dimension mismatch");
  const auto eig = hermitian_eig(j);
  const double scale = std::max(1.0, eig.eigenvalues.size() ? eig.eigenvalues(0) : 0.0);
  if (eig.eigenvalues.size() > 0 && eig.eigenvalues(eig.eigenvalues.size() - 1) < -kChoiCutoff * scale)
    throw PreconditionError("from_choi: Choi matrix is not positive semidefinite");
  std::vector<ComplexMatrix> kraus;
  for (Eigen::Index k = 0; k < eig.eigenvalues.size(); ++k) {
    const double lambda = eig.eigenvalues(k);
    if (lambda <= kChoiCutoff) break;
    kraus.push_back(std::sqrt(lambda) *
                    unvec(eig.eigenvectors.col(k), static_cast<Eigen::Index>(out),
                          static_cast<Eigen::Index>(in)));
  }
  return Channel(std::move(kraus), std::move(in_legs), std::move(out_legs));
}

inline Channel from_choi(const ComplexMatrix& j, std::size_t in_dim, std::size_t out_dim) {
  return from_choi(j, {quantum(in_dim)}, {quantum(out_dim)});
}

/// Minimal Kraus family of the same map (eigen-Kraus of the Choi matrix).
inline Channel canonical(const Channel& c) {
  return from_choi(choi(c), c.in_legs(), c.out_legs());
}

inline std::size_t choi_rank(const Channel& c) {
  const auto eig = hermitian_eig(choi(c));
  std::size_t r = 0;
  for (Eigen::Index k = 0; k < eig.eigenvalues.size(); ++k)
    if (eig.eigenvalues(k) > kChoiCutoff) ++r;
  return r;
}

/// Operator-norm distance of Choi matrices; zero iff the maps agree on all inputs.
inline double choi_distance(const Channel& a, const Channel& b) {
  if (a.in_dim() != b.in_dim() || a.out_dim() != b.out_dim())
    throw DimensionError("choi_distance: dimension mismatch");
  return operator_norm(choi(a) - choi(b));
}

/// Weighted sum sum_i w_i Phi_i; weights must be nonnegative.
inline Channel mixture(const std::vector<std::pair<double, Channel>>& parts) {
  if (parts.empty()) throw PreconditionError("mixture: no components");
  std::vector<ComplexMatrix> kraus;
  for (const auto& [w, c] : parts) {
    if (w < 0.0) throw PreconditionError("mixture: negative weight");
    if (c.in_dim() != parts.front().second.in_dim() || c.out_dim() != parts.front().second.out_dim())
      throw DimensionError("mixture: component dimensions differ");
    if (w == 0.0) continue;
    for (const auto& k : c.kraus()) kraus.push_back(std::sqrt(w) * k);
  }
  const auto& first = parts.front().second;
  return Channel(std::move(kraus), first.in_legs(), first.out_legs());
}

/// Discards the listed output legs.
inline Channel trace_out(const Channel& c, const std::set<std::size_t>& traced) {
  const FactorShape shape = c.out_shape();
  for (std::size_t t : traced)
    if (t >= shape.size()) throw DimensionError("trace_out: leg index out of range");
  std::vector<Leg> kept_legs;
  std::vector<std::size_t> kept_dims, traced_dims, perm;
  for (std::size_t f = 0; f < shape.size(); ++f)
    if (!traced.count(f)) {
      kept_legs.push_back(c.out_legs()[f]);
      perm.push_back(f);
    }
  for (std::size_t f : traced) perm.push_back(f);
  std::size_t kept = legs_dim(kept_legs);
  const std::size_t env = shape.total() / kept;
  const ComplexMatrix p = permutation_matrix(shape, perm);
  std::vector<ComplexMatrix> kraus;
  for (const auto& k : c.kraus()) {
    const ComplexMatrix pk = p * k;
    for (std::size_t e = 0; e < env; ++e) {
      ComplexMatrix block(static_cast<Eigen::Index>(kept), pk.cols());
      for (std::size_t a = 0; a < kept; ++a)
        block.row(static_cast<Eigen::Index>(a)) = pk.row(static_cast<Eigen::Index>(a * env + e));
      if (block.squaredNorm() > 0.0) kraus.push_back(std::move(block));
    }
  }
  if (kept_legs.empty()) kept_legs.push_back(quantum(1));
  return Channel(std::move(kraus), c.in_legs(), std::move(kept_legs));
}

/// Reorders output legs: new leg j is old leg perm[j].
inline Channel permute_outputs(const Channel& c, const std::vector<std::size_t>& perm) {
  const ComplexMatrix p = permutation_matrix(c.out_shape(), perm);
  std::vector<ComplexMatrix> kraus;
  kraus.reserve(c.kraus().size());
  for (const auto& k : c.kraus()) kraus.push_back(p * k);
  std::vector<Leg> legs;
  for (std::size_t j : perm) legs.push_back(c.out_legs()[j]);
  return Channel(std::move(kraus), c.in_legs(), std::move(legs));
}

// Standard channels -------------------------------------------------------

/// Pure channel rho -> v rho v^dagger.
inline Channel doubled(const ComplexMatrix& v) {
  return Channel::from_kraus({v});
}

inline Channel identity_channel(std::size_t dim) { return doubled(identity(dim)); }

inline Channel unitary_channel(const ComplexMatrix& u) { return doubled(u); }

/// Trace: B(H) -> C, a single classical output of dimension 1.
inline Channel discard(std::size_t dim) {
  std::vector<ComplexMatrix> kraus;
  for (std::size_t i = 0; i < dim; ++i) kraus.push_back(ket(dim, i).adjoint());
  return Channel(std::move(kraus), {quantum(dim)}, {classical(1)});
}

/// State preparation C -> B(H).
inline Channel prepare(const ComplexMatrix& rho) {
  const auto eig = hermitian_eig(rho);
  std::vector<ComplexMatrix> kraus;
  for (Eigen::Index k = 0; k < eig.eigenvalues.size(); ++k)
    if (eig.eigenvalues(k) > kChoiCutoff)
      kraus.push_back(std::sqrt(eig.eigenvalues(k)) * eig.eigenvectors.col(k));
  return Channel(std::move(kraus), {quantum(1)}, {quantum(static_cast<std::size_t>(rho.rows()))});
}

/// id_H (x) rho: B(H) -> B(H (x) E), the separable eavesdropper channel.
inline Channel append_state(std::size_t dim, const ComplexMatrix& rho) {
  const Channel c = tensor(identity_channel(dim), prepare(rho));
  return Channel(c.kraus(), {quantum(dim)}, {quantum(dim), quantum(static_cast<std::size_t>(rho.rows()))});
}

/// rho -> (1-p) rho + p Tr(rho) I/D
inline Channel depolarizing(std::size_t dim, double p) {
  if (p < 0.0 || p > 1.0) throw PreconditionError("depolarizing: p outside [0, 1]");
  std::vector<ComplexMatrix> kraus{std::sqrt(1.0 - p) * identity(dim)};
  if (p > 0.0)
    for (std::size_t a = 0; a < dim; ++a)
      for (std::size_t b = 0; b < dim; ++b)
        kraus.push_back(std::sqrt(p / static_cast<double>(dim)) * ket(dim, a) * ket(dim, b).adjoint());
  return Channel::from_kraus(std::move(kraus));
}

// Dilations ---------------------------------------------------------------

/// Isometry-style purification V : H -> K (x) L.
struct Dilation {
  ComplexMatrix v;
  std::size_t out_dim = 1;
  std::size_t env_dim = 1;

  [[nodiscard]] std::size_t in_dim() const { return static_cast<std::size_t>(v.cols()); }

  /// (1_K (x) <k|) V
  [[nodiscard]] ComplexMatrix block(std::size_t k) const {
    ComplexMatrix b(static_cast<Eigen::Index>(out_dim), v.cols());
    for (std::size_t a = 0; a < out_dim; ++a)
      b.row(static_cast<Eigen::Index>(a)) = v.row(static_cast<Eigen::Index>(a * env_dim + k));
    return b;
  }

  [[nodiscard]] std::vector<ComplexMatrix> blocks() const {
    std::vector<ComplexMatrix> out;
    for (std::size_t k = 0; k < env_dim; ++k) out.push_back(block(k));
    return out;
  }

  /// Tr_L of the doubled isometry.
  [[nodiscard]] Channel channel() const { return Channel::from_kraus(blocks()); }

  /// Same map with the environment enlarged by zero columns.
  [[nodiscard]] Dilation padded(std::size_t new_env) const {
    if (new_env < env_dim) throw DimensionError("Dilation::padded: cannot shrink environment");
    std::vector<ComplexMatrix> b = blocks();
    for (std::size_t k = env_dim; k < new_env; ++k)
      b.push_back(ComplexMatrix::Zero(static_cast<Eigen::Index>(out_dim), v.cols()));
    return from_blocks(b);
  }

  static Dilation from_blocks(const std::vector<ComplexMatrix>& kraus) {
    if (kraus.empty()) throw PreconditionError("Dilation: empty Kraus family");
    const std::size_t env = kraus.size();
    const auto out = static_cast<std::size_t>(kraus.front().rows());
    ComplexMatrix v = ComplexMatrix::Zero(static_cast<Eigen::Index>(out * env), kraus.front().cols());
    for (std::size_t k = 0; k < env; ++k) v += tensor(kraus[k], ket(env, k));
    return {v, out, env};
  }
};

/// Minimal dilation from the Choi eigenbasis; env_dim equals the Choi rank.
inline Dilation purify(const Channel& c) {
  return Dilation::from_blocks(canonical(c).kraus());
}

/// Dilation built from the channel's own Kraus family (not necessarily minimal).
inline Dilation dilation_from_kraus(const Channel& c) {
  return Dilation::from_blocks(c.kraus());
}

struct IntertwinerResult {
  ComplexMatrix unitary;      // U on the common environment
  double residual = 0.0;      // || (1 (x) U) V1 - V2 ||_inf
  double channel_residual = 0.0; // Choi distance of the dilated channels
  bool channels_equal = false;   // channel_residual <= 1e-8
};

inline ComplexMatrix apply_env_unitary(const Dilation& d, const ComplexMatrix& u) {
  return tensor(identity(d.out_dim), u) * d.v;
}

/// Cross-Gram matrix G_{lk} = Tr(K1_k^dagger K2_l) of two dilations with equal environments.
inline ComplexMatrix cross_gram(const Dilation& d1, const Dilation& d2) {
  const auto b1 = d1.blocks();
  const auto b2 = d2.blocks();
  const auto e = static_cast<Eigen::Index>(d1.env_dim);
  ComplexMatrix g(e, e);
  for (Eigen::Index l = 0; l < e; ++l)
    for (Eigen::Index k = 0; k < e; ++k)
      g(l, k) = (b1[static_cast<std::size_t>(k)].adjoint() * b2[static_cast<std::size_t>(l)]).trace();
  return g;
}

/// Pads both dilations to a common environment dimension.
inline std::pair<Dilation, Dilation> common_environment(const Dilation& d1, const Dilation& d2) {
  if (d1.in_dim() != d2.in_dim() || d1.out_dim != d2.out_dim)
    throw DimensionError("dilation dimensions mismatch");
  const std::size_t e = std::max(d1.env_dim, d2.env_dim);
  return {d1.padded(e), d2.padded(e)};
}

/// Environment unitary relating two dilations, from the polar factor of the cross-Gram matrix.
inline IntertwinerResult dilation_intertwiner(const Dilation& v1, const Dilation& v2) {
  const auto [a, b] = common_environment(v1, v2);
  IntertwinerResult r;
  r.unitary = polar_unitary(cross_gram(a, b));
  r.residual = operator_norm(apply_env_unitary(a, r.unitary) - b.v);
  r.channel_residual = choi_distance(a.channel(), b.channel());
  r.channels_equal = r.channel_residual <= 1e-8;
  return r;
}

}  // namespace spiderqkd
