#pragma once

// Two-sided estimate of the completely bounded distance between channels.
//
// lower: max over pure inputs psi on in (x) ref of
//          || ((Phi1 - Phi2) (x) id)(psi psi^dagger) ||_1
//        found by alternating maximization (sign operator / top eigenvector),
//        started from the maximally entangled input and seeded random inputs.
// upper: (||V1|| + ||V2||) * || (1 (x) U) V1 - V2 ||_inf for the best
//        environment unitary U found; equals the 2 inf_U bound for isometries.
// Any U gives a valid upper bound, so the refinement only has to improve on
// its polar initialization, not reach the optimum.

#include <algorithm>
#include <cstdint>

#include "spiderqkd/channels.hpp"
#include "spiderqkd/random.hpp"

namespace spiderqkd {

struct CbBounds {
  double lower = 0.0;
  double upper = 0.0;
};

struct CbOptions {
  std::uint64_t seed = 0x5EED;
  std::size_t random_starts = 32;
  std::size_t max_seesaw_iterations = 200;
  std::size_t max_refine_iterations = 500;
  double refine_step = 0.05;
  double improvement_tolerance = 1e-12;
  bool refine_upper = true;
  std::size_t upper_restarts = 4;
};

namespace detail {

struct LiftedDifference {
  std::vector<ComplexMatrix> plus;   // K (x) 1_ref for the first channel
  std::vector<ComplexMatrix> minus;  // same for the second
  std::size_t in_dim = 0;
  std::size_t out_dim = 0;
};

inline LiftedDifference lift(const Channel& a, const Channel& b) {
  LiftedDifference d;
  d.in_dim = a.in_dim();
  d.out_dim = a.out_dim();
  const ComplexMatrix ref = identity(a.in_dim());
  const Channel ca = canonical(a);
  const Channel cb = canonical(b);
  for (const auto& k : ca.kraus()) d.plus.push_back(tensor(k, ref));
  for (const auto& k : cb.kraus()) d.minus.push_back(tensor(k, ref));
  return d;
}

inline ComplexMatrix difference_output(const LiftedDifference& d, const ComplexMatrix& psi) {
  const auto n = static_cast<Eigen::Index>(d.out_dim * d.in_dim);
  ComplexMatrix out = ComplexMatrix::Zero(n, n);
  for (const auto& k : d.plus) {
    const ComplexMatrix w = k * psi;
    out += w * w.adjoint();
  }
  for (const auto& k : d.minus) {
    const ComplexMatrix w = k * psi;
    out -= w * w.adjoint();
  }
  return out;
}

inline ComplexMatrix difference_adjoint(const LiftedDifference& d, const ComplexMatrix& w) {
  const auto n = static_cast<Eigen::Index>(d.in_dim * d.in_dim);
  ComplexMatrix out = ComplexMatrix::Zero(n, n);
  for (const auto& k : d.plus) out += k.adjoint() * w * k;
  for (const auto& k : d.minus) out -= k.adjoint() * w * k;
  return 0.5 * (out + out.adjoint());
}

/// Alternating ascent of the trace-norm objective from one starting vector.
inline double seesaw(const LiftedDifference& d, ComplexMatrix psi, const CbOptions& opt) {
  double best = 0.0;
  for (std::size_t it = 0; it < opt.max_seesaw_iterations; ++it) {
    const auto eig = hermitian_eig(difference_output(d, psi));
    double value = 0.0;
    ComplexVector signs(eig.eigenvalues.size());
    for (Eigen::Index k = 0; k < signs.size(); ++k) {
      value += std::abs(eig.eigenvalues(k));
      signs(k) = eig.eigenvalues(k) >= 0.0 ? 1.0 : -1.0;
    }
    const bool improved = value > best + opt.improvement_tolerance;
    best = std::max(best, value);
    if (it > 0 && !improved) break;
    const ComplexMatrix sign_op = eig.eigenvectors * signs.asDiagonal() * eig.eigenvectors.adjoint();
    const auto top = hermitian_eig(difference_adjoint(d, sign_op));
    psi = top.eigenvectors.col(0);
  }
  return best;
}

}  // namespace detail

/// Trace distance of the two outputs on one input psi in in (x) ref.
inline double stabilized_output_distance(const Channel& a, const Channel& b, const ComplexMatrix& psi) {
  const auto d = detail::lift(a, b);
  return trace_norm(detail::difference_output(d, psi));
}

inline ComplexMatrix maximally_entangled(std::size_t dim) {
  ComplexMatrix psi = ComplexMatrix::Zero(static_cast<Eigen::Index>(dim * dim), 1);
  for (std::size_t i = 0; i < dim; ++i) psi(static_cast<Eigen::Index>(i * dim + i), 0) = 1.0;
  return psi / std::sqrt(static_cast<double>(dim));
}

inline double cb_lower_bound(const Channel& a, const Channel& b, const CbOptions& opt = {}) {
  if (a.in_dim() != b.in_dim() || a.out_dim() != b.out_dim())
    throw DimensionError("cb_distance_bounds: dimension mismatch");
  const auto d = detail::lift(a, b);
  double best = detail::seesaw(d, maximally_entangled(a.in_dim()), opt);
  for (std::size_t s = 0; s < opt.random_starts; ++s) {
    Rng rng(opt.seed, s);
    best = std::max(best, detail::seesaw(d, random_pure_state(a.in_dim() * a.in_dim(), rng), opt));
  }
  return best;
}

/// Best environment unitary found and the resulting dilation residual.
struct UnitaryFit {
  ComplexMatrix unitary;
  double residual = 0.0;
};

/// Minimizes || (1 (x) U) V1 - V2 ||_inf over environment unitaries: polar
/// initialization plus seeded random restarts, each followed by descent along one-parameter unitary subgroups
/// generated by the projected gradient of the top singular value.
inline UnitaryFit fit_environment_unitary(const Dilation& v1, const Dilation& v2, const CbOptions& opt = {}) {
  const auto [a, b] = common_environment(v1, v2);
  const std::size_t env = a.env_dim;
  const std::size_t out = a.out_dim;
  auto residual_of = [&](const ComplexMatrix& u) {
    return operator_norm(apply_env_unitary(a, u) - b.v);
  };
  auto descend = [&](ComplexMatrix start) {
    UnitaryFit fit{std::move(start), 0.0};
    fit.residual = residual_of(fit.unitary);
    double step = opt.refine_step;
    for (std::size_t it = 0; it < opt.max_refine_iterations && fit.residual > 1e-14; ++it) {
      const ComplexMatrix rotated = apply_env_unitary(a, fit.unitary);
      const ComplexMatrix diff = rotated - b.v;
      Eigen::JacobiSVD<ComplexMatrix> svd(diff, Eigen::ComputeThinU | Eigen::ComputeThinV);
      const ComplexVector u1 = svd.matrixU().col(0);
      const ComplexVector w = rotated * svd.matrixV().col(0);
      // N = Tr_K(w u1^dagger), an env x env matrix
      ComplexMatrix n = ComplexMatrix::Zero(static_cast<Eigen::Index>(env), static_cast<Eigen::Index>(env));
      for (std::size_t k = 0; k < out; ++k)
        for (std::size_t l = 0; l < env; ++l)
          for (std::size_t lp = 0; lp < env; ++lp)
            n(static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(lp)) +=
                w(static_cast<Eigen::Index>(k * env + l)) * std::conj(u1(static_cast<Eigen::Index>(k * env + lp)));
      ComplexMatrix g = 0.5 * (n.adjoint() - n);
      const double gnorm = g.norm();
      if (gnorm < 1e-15) break;
      g /= gnorm;
      bool accepted = false;
      while (step > 1e-6) {
        const ComplexMatrix candidate = unitary_exp(-step * g) * fit.unitary;
        const double r = residual_of(candidate);
        if (r < fit.residual - opt.improvement_tolerance) {
          fit.unitary = candidate;
          fit.residual = r;
          accepted = true;
          break;
        }
        step *= 0.5;
      }
      if (!accepted) break;
    }
    return fit;
  };

  const ComplexMatrix polar = polar_unitary(cross_gram(a, b));
  if (!opt.refine_upper) return UnitaryFit{polar, residual_of(polar)};
  UnitaryFit fit = descend(polar);
  for (std::size_t s = 0; s < opt.upper_restarts && fit.residual > 1e-14; ++s) {
    Rng rng(opt.seed ^ 0x0A11CE, s);
    UnitaryFit other = descend(random_unitary(env, rng));
    if (other.residual < fit.residual) fit = std::move(other);
  }
  return fit;
}

inline double cb_upper_bound(const Dilation& v1, const Dilation& v2, const CbOptions& opt = {}) {
  const auto fit = fit_environment_unitary(v1, v2, opt);
  return (operator_norm(v1.v) + operator_norm(v2.v)) * fit.residual;
}

inline CbBounds cb_distance_bounds(const Channel& a, const Channel& b, const CbOptions& opt = {}) {
  if (a.in_dim() != b.in_dim() || a.out_dim() != b.out_dim())
    throw DimensionError("cb_distance_bounds: dimension mismatch");
  CbBounds r;
  r.lower = cb_lower_bound(a, b, opt);
  r.upper = cb_upper_bound(purify(a), purify(b), opt);
  return r;
}

}  // namespace spiderqkd
