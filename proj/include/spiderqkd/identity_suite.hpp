#pragma once

// Numerical check of the spider identities for one dimension, over the
// computational basis and its Fourier partner. Every entry is a residual;
// callers pick the threshold.

#include <algorithm>
#include <map>
#include <string>

#include "spiderqkd/spiders.hpp"

namespace spiderqkd {

inline constexpr double kIdentityTolerance = 1e-10;

struct SpiderIdentityReport {
  std::size_t dim = 0;
  std::size_t max_legs = 0;
  std::map<std::string, double> residuals;

  [[nodiscard]] double worst() const {
    double w = 0.0;
    for (const auto& [name, r] : residuals) w = std::max(w, r);
    return w;
  }
  [[nodiscard]] bool passed(double tol = kIdentityTolerance) const { return worst() <= tol; }
};

/// Fusion legs are capped so that the largest composite stays desk-sized:
/// three legs per side up to D = 4, two beyond.
inline std::size_t default_fusion_legs(std::size_t dim) { return dim <= 4 ? 3 : 2; }

namespace detail {

inline void record(SpiderIdentityReport& r, const std::string& name, double value) {
  auto [it, inserted] = r.residuals.emplace(name, value);
  if (!inserted) it->second = std::max(it->second, value);
}

inline void basis_identities(SpiderIdentityReport& r, const Basis& b) {
  const std::size_t d = b.dim();
  const std::size_t legs = r.max_legs;

  // spider fusion along k >= 1 legs
  for (std::size_t m = 0; m <= legs; ++m)
    for (std::size_t n = 1; n <= legs; ++n)
      for (std::size_t m2 = 1; m2 <= legs; ++m2)
        for (std::size_t n2 = 0; n2 <= legs; ++n2)
          for (std::size_t k = 1; k <= std::min<std::size_t>(2, std::min(n, m2)); ++k)
            record(r, "fusion", spider_fusion_residual(b, m, n, m2, n2, k));
  record(r, "spider_scalar", std::abs(spider(b, 0, 0)(0, 0) - Complex(static_cast<double>(d))));

  for (std::size_t n = 1; n <= 3; ++n)
    record(r, "trace_preservation", spider_trace_preservation_residual(b, n));

  // decoherence split and its definition from the doubled copy spider
  const ComplexMatrix meas = measure_matrix(b);
  const ComplexMatrix enc = encode_matrix(b);
  record(r, "decoherence_split", operator_norm(enc * meas - superoperator(decoherence(b))));
  record(r, "decoherence_split", operator_norm(meas * enc - identity(d)));
  record(r, "decoherence_split", choi_distance(compose(encode_map(b), measure_map(b)), decoherence(b)));
  record(r, "decoherence_split", choi_distance(compose(measure_map(b), encode_map(b)), classical_identity(d)));
  record(r, "decoherence_from_spider",
         choi_distance(trace_out(doubled(spider(b, 1, 2)).relabeled({quantum(d)}, {quantum(d), quantum(d)}), {1}),
                       decoherence(b)));
  const Channel deco = decoherence(b);
  record(r, "decoherence_idempotent", choi_distance(compose(deco, deco), deco));
  record(r, "measure_encode_adjoint", max_abs(meas - enc.adjoint()));

  // classical copy, delete, uniform
  const ComplexMatrix copy = classical_copy(b);
  const ComplexMatrix del = classical_delete(b);
  const ComplexMatrix uni = classical_uniform(b);
  record(r, "copy_delete_uniform", operator_norm(tensor(del, identity(d)) * copy - identity(d)));
  record(r, "copy_delete_uniform", operator_norm(tensor(identity(d), del) * copy - identity(d)));
  record(r, "copy_delete_uniform", std::abs((del * uni)(0, 0) - Complex(1.0)));
  // deleting a measurement outcome is the quantum trace
  record(r, "copy_delete_uniform", max_abs(del * meas - vec(identity(d)).adjoint()));
  // encoding the uniform distribution is the maximally mixed state
  record(r, "copy_delete_uniform", max_abs(enc * uni - vec(identity(d)) / static_cast<double>(d)));
  // measuring both halves of the doubled quantum copy spider is the classical copy
  const Channel quantum_copy = doubled(spider(b, 1, 2)).relabeled({quantum(d)}, {quantum(d), quantum(d)});
  const Channel via_quantum =
      compose(tensor(measure_map(b), measure_map(b)), compose(quantum_copy, encode_map(b)));
  const Channel classical_copy_channel =
      compose(doubled(copy).relabeled({classical(d)}, {classical(d), classical(d)}), classical_identity(d));
  record(r, "copy_delete_uniform", choi_distance(via_quantum, classical_copy_channel));

  // non-demolition measurement marginals
  const Channel nd = nondemolition_measurement(b);
  record(r, "nondemolition", choi_distance(trace_out(nd, {1}), decoherence(b)));
  record(r, "nondemolition", choi_distance(trace_out(nd, {0}), measure_map(b)));
  record(r, "nondemolition", nd.trace_preservation_defect());
}

}  // namespace detail

inline SpiderIdentityReport run_spider_identity_suite(std::size_t dim, std::size_t max_legs = 0) {
  SpiderIdentityReport r;
  r.dim = dim;
  r.max_legs = max_legs == 0 ? default_fusion_legs(dim) : max_legs;
  const SpiderPair pair = SpiderPair::standard(dim);
  detail::basis_identities(r, pair.white());
  detail::basis_identities(r, pair.gray());
  detail::record(r, "complementarity_measure_encode", check_complementarity_thm1(pair));
  detail::record(r, "complementarity_antipode", check_complementarity_thm2(pair));
  detail::record(r, "antipode_unitarity", unitarity_defect(antipode(pair)));
  detail::record(r, "unbiasedness", pair.unbiasedness_residual());
  return r;
}

}  // namespace spiderqkd
