#pragma once

// Executable security statements for an eavesdropper channel
// Phi : B(H) -> B(H (x) E).
//
// Disturbance in basis b is the cb distance between what Bob sees when
// Alice encodes and Bob measures in b, m_b o Tr_E o Phi o e_b, and the
// classical identity. Separation is measured as the cb distance of Phi from
// the separable channel id_H (x) rho.
//
// Noise constant. With V a purification of Phi, eps the larger disturbance,
// phi_i = (<z_i| (x) 1) V |z_i> and chi_j likewise for the gray basis:
//   || V - sum_i |z_i><z_i| (x) phi_i ||  <=  sqrt(D eps / 2)            (a)
//   || phi_i - chi_j ||  <=  2 sqrt(D eps / 2) / c_min                    (b)
//   || V - 1 (x) chi_0 ||  <=  sqrt(D eps / 2) (1 + 2 / c_min)            (c)
//   || Phi - id (x) rho* ||_cb <= 2 (c) + eps / 2
// where c_min = min |<z_i|x_j>| (1/sqrt D for unbiased pairs) and eps <= 2.
// The candidate state Tr_H Phi(I/D) is at most twice as far as rho*, which
// gives the shipped constant 2 * [sqrt(2D)(1 + 2/c_min) + 1/sqrt 2].

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "spiderqkd/cb_distance.hpp"
#include "spiderqkd/channels.hpp"
#include "spiderqkd/protocol.hpp"
#include "spiderqkd/random.hpp"
#include "spiderqkd/spiders.hpp"

namespace spiderqkd {

inline constexpr double kExactHypothesisTolerance = 1e-9;
inline constexpr double kExactSeparationTolerance = 1e-6;
inline constexpr std::size_t kGapLineSearchIterations = 200;

struct DisturbanceReport {
  CbBounds eps_z;
  CbBounds eps_x;

  [[nodiscard]] double max_upper() const { return std::max(eps_z.upper, eps_x.upper); }
  [[nodiscard]] double max_lower() const { return std::max(eps_z.lower, eps_x.lower); }
};

/// Separable target and its distance from the channel.
struct SeparabilityGap {
  ComplexMatrix rho;
  CbBounds gap;
  std::size_t iterations = 0;
};

/// Residuals of the separation argument replayed on a purification.
struct ProofReplay {
  double intertwiner_z = 0.0;  // essential uniqueness for the Z-decohered composite
  double intertwiner_x = 0.0;
  double controlled_z = 0.0;   // || V - sum_i |z_i><z_i| (x) phi_i ||
  double controlled_x = 0.0;
  double cross_consistency = 0.0;  // max_ij || phi_i - chi_j ||
  double separation = 0.0;         // || V - 1 (x) chi_0 ||

  [[nodiscard]] double max_controlled() const { return std::max(controlled_z, controlled_x); }
};

struct ExactSecurityVerdict {
  DisturbanceReport disturbance;
  bool hypothesis_met = false;
  SeparabilityGap separability;
  double separation_tolerance = 0.0;
  bool separated = false;
  ProofReplay replay;
  std::string verdict;  // "pass", "hypothesis not met", "fail"
};

struct SeparabilityReport {
  DisturbanceReport disturbance;
  SeparabilityGap separability;
  double epsilon = 0.0;    // max(eps_z.upper, eps_x.upper)
  double n_est = 0.0;
  double bound_rhs = 0.0;  // n_est * sqrt(epsilon)
  bool verdict = false;    // gap.lower <= bound_rhs
  ProofReplay replay;
};

// Constants ------------------------------------------------------------------

/// Bound on the controlled-state residuals: sqrt(D/2) * sqrt(eps).
inline double controlled_residual_constant(const SpiderPair& pair) {
  return std::sqrt(static_cast<double>(pair.dim()) / 2.0);
}

/// Bound on the distance from id (x) rho*, before the candidate-state factor.
inline double dilation_noise_constant(const SpiderPair& pair) {
  const double d = static_cast<double>(pair.dim());
  return std::sqrt(2.0 * d) * (1.0 + 2.0 / pair.min_overlap()) + 1.0 / std::numbers::sqrt2;
}

/// The dimension-dependent constant used by the noise-bound check.
inline double noise_constant(const SpiderPair& pair) { return 2.0 * dilation_noise_constant(pair); }

// Channel plumbing -----------------------------------------------------------

/// Attaches the (H, E) output legs to Phi : B(H) -> B(H (x) E).
inline Channel as_eve_channel(const Channel& phi, std::size_t system_dim) {
  if (phi.in_dim() != system_dim || phi.out_dim() % system_dim != 0)
    throw DimensionError("eavesdropper channel must map B(H) to B(H (x) E) with dim H = " +
                         std::to_string(system_dim));
  return phi.relabeled({quantum(system_dim)}, {quantum(system_dim), quantum(phi.out_dim() / system_dim)});
}

inline std::size_t eve_dim(const Channel& phi) { return phi.out_dim() / phi.in_dim(); }

/// Classical -> classical channel seen by Bob when both parties use basis b.
inline Channel bob_view(const Channel& phi, const Basis& b) {
  const Channel eve = as_eve_channel(phi, b.dim());
  return compose(measure_map(b), compose(trace_out(eve, {1}), encode_map(b)));
}

/// Eve's marginal Tr_H Phi(rho).
inline ComplexMatrix eve_marginal(const Channel& phi, const ComplexMatrix& rho) {
  const std::size_t d = phi.in_dim();
  return partial_trace(spiderqkd::apply(phi, rho), FactorShape{d, eve_dim(phi)}, {0});
}

inline Channel separable_channel(std::size_t dim, const ComplexMatrix& rho) {
  return append_state(dim, rho);
}

// Operations -------------------------------------------------------------------

inline DisturbanceReport disturbance(const Channel& phi, const SpiderPair& pair, const CbOptions& opt = {}) {
  if (phi.in_dim() != pair.dim()) throw DimensionError("disturbance: channel input does not match pair dimension");
  const std::size_t d = pair.dim();
  DisturbanceReport r;
  r.eps_z = cb_distance_bounds(bob_view(phi, pair.white()), classical_identity(d), opt);
  r.eps_x = cb_distance_bounds(bob_view(phi, pair.gray()), classical_identity(d), opt);
  return r;
}

namespace detail {

inline Dilation separable_dilation(std::size_t dim, const ComplexMatrix& rho) {
  return Dilation::from_blocks(separable_channel(dim, rho).kraus());
}

}  // namespace detail

/// Nearest separable channel id (x) rho found by convex line search on the
/// polar-fit dilation bound, starting from Tr_H Phi(I/D).
inline SeparabilityGap separability_gap(const Channel& phi, const CbOptions& opt = {}) {
  const std::size_t d = phi.in_dim();
  const std::size_t e = eve_dim(phi);
  if (d * e != phi.out_dim()) throw DimensionError("separability_gap: output is not H (x) E");
  const Dilation v = purify(phi);
  CbOptions cheap = opt;
  cheap.refine_upper = false;
  auto objective = [&](const ComplexMatrix& rho) {
    return cb_upper_bound(v, detail::separable_dilation(d, rho), cheap);
  };

  SeparabilityGap out;
  out.rho = eve_marginal(phi, identity(d) / static_cast<double>(d));
  double value = objective(out.rho);

  std::vector<ComplexMatrix> directions{identity(e) / static_cast<double>(e)};
  const SpiderPair pair = SpiderPair::standard(d);
  for (const Basis* b : {&pair.white(), &pair.gray()})
    for (std::size_t i = 0; i < d; ++i) directions.push_back(eve_marginal(phi, b->projector(i)));

  static constexpr double kSteps[] = {0.5, 0.25, 0.125, 0.0625};
  for (std::size_t it = 0; it < kGapLineSearchIterations && value > 1e-13; ++it) {
    double best = value;
    ComplexMatrix best_rho = out.rho;
    for (const auto& sigma : directions)
      for (double s : kSteps) {
        const ComplexMatrix candidate = (1.0 - s) * out.rho + s * sigma;
        const double c = objective(candidate);
        if (c < best) {
          best = c;
          best_rho = candidate;
        }
      }
    if (value - best < opt.improvement_tolerance) break;
    value = best;
    out.rho = best_rho;
    out.iterations = it + 1;
  }
  out.rho = 0.5 * (out.rho + out.rho.adjoint());
  out.rho /= out.rho.trace().real();
  out.gap = cb_distance_bounds(as_eve_channel(phi, d), separable_channel(d, out.rho), opt);
  return out;
}

/// Replays the separation argument on a purification of Phi.
inline ProofReplay replay_separation_proof(const Channel& phi, const SpiderPair& pair) {
  const std::size_t d = pair.dim();
  const Dilation v = purify(phi);
  const std::size_t f = v.out_dim / d * v.env_dim;  // Eve's total system E (x) L
  const ComplexMatrix& iso = v.v;                    // H -> H (x) F
  ProofReplay r;

  auto intertwiner = [&](const Basis& b) {
    // W = (copy (x) 1_F (x) 1_H1)(V (x) 1_H1) copy  :  H -> H (x) H2 (x) F (x) H1
    const ComplexMatrix copy = spider(b, 1, 2);
    const ComplexMatrix w = tensor(copy, identity(f * d)) * tensor(iso, identity(d)) * copy;
    // R = copy with a fixed pure state on H2 (x) F, reordered to the same factors
    const ComplexMatrix reorder = permutation_matrix(FactorShape{d, d, d, f}, {0, 2, 3, 1});
    const ComplexMatrix rr = reorder * tensor(copy, ket(d * f, 0));
    const std::size_t env = d * f * d;
    const auto res = dilation_intertwiner(Dilation{rr, d, env}, Dilation{w, d, env});
    return res.residual;
  };
  r.intertwiner_z = intertwiner(pair.white());
  r.intertwiner_x = intertwiner(pair.gray());

  auto controlled = [&](const Basis& b, std::vector<ComplexMatrix>& states) {
    ComplexMatrix c = ComplexMatrix::Zero(iso.rows(), iso.cols());
    for (std::size_t i = 0; i < d; ++i) {
      const ComplexMatrix bi = b.vector(i);
      const ComplexMatrix state = tensor(bi.adjoint(), identity(f)) * iso * bi;
      c += tensor(bi, state) * bi.adjoint();
      states.push_back(state);
    }
    return operator_norm(iso - c);
  };
  std::vector<ComplexMatrix> phis, chis;
  r.controlled_z = controlled(pair.white(), phis);
  r.controlled_x = controlled(pair.gray(), chis);
  for (const auto& p : phis)
    for (const auto& c : chis) r.cross_consistency = std::max(r.cross_consistency, (p - c).norm());
  r.separation = operator_norm(iso - tensor(identity(d), chis.front()));
  return r;
}

inline double separation_tolerance(const SpiderPair& pair, double tol) {
  return std::max(kExactSeparationTolerance, noise_constant(pair) * std::sqrt(tol));
}

inline ExactSecurityVerdict verify_exact_security(const Channel& phi, const SpiderPair& pair,
                                                  double tol = kExactHypothesisTolerance,
                                                  const CbOptions& opt = {}) {
  ExactSecurityVerdict v;
  v.disturbance = disturbance(phi, pair, opt);
  v.hypothesis_met = v.disturbance.max_upper() <= tol;
  v.separability = separability_gap(phi, opt);
  v.separation_tolerance = separation_tolerance(pair, tol);
  v.separated = v.separability.gap.upper <= v.separation_tolerance;
  v.replay = replay_separation_proof(phi, pair);
  if (!v.hypothesis_met)
    v.verdict = "hypothesis not met";
  else
    v.verdict = v.separated ? "pass" : "fail";
  return v;
}

inline SeparabilityReport verify_noise_bound(const Channel& phi, const SpiderPair& pair, const CbOptions& opt = {}) {
  SeparabilityReport r;
  r.disturbance = disturbance(phi, pair, opt);
  r.separability = separability_gap(phi, opt);
  r.epsilon = r.disturbance.max_upper();
  r.n_est = noise_constant(pair);
  r.bound_rhs = r.n_est * std::sqrt(r.epsilon);
  r.verdict = r.separability.gap.lower <= r.bound_rhs;
  r.replay = replay_separation_proof(phi, pair);
  return r;
}

// Memory attacks ---------------------------------------------------------------

struct MemoryRound {
  std::size_t round = 0;
  ComplexMatrix rho_in;  // Eve's memory entering the round
  DisturbanceReport disturbance;
  bool hypothesis_met = false;
  CbBounds gap;
  ComplexMatrix rho_out;  // separable state extracted for the next round
};

struct MemoryVerdict {
  std::vector<MemoryRound> rounds;
  std::string status;  // "separates" or "detectable"
  std::optional<std::size_t> detectable_round;
  double max_gap_upper = 0.0;
};

/// Phi o (id_H (x) rho): the round channel B(H) -> B(H (x) E) of a memory attack.
inline Channel memory_round_channel(const MemoryAttack& attack, const ComplexMatrix& rho) {
  const std::size_t d = attack.system_dim();
  const Channel c = compose(attack.phi.relabeled({quantum(d), quantum(attack.env_dim())},
                                                 {quantum(d), quantum(attack.env_dim())}),
                            separable_channel(d, rho));
  return as_eve_channel(c, d);
}

/// Round-by-round separation: each round must meet the zero-disturbance
/// hypothesis with the memory state handed over by the previous round.
inline MemoryVerdict memory_separation(const MemoryAttack& attack, std::size_t n_rounds,
                                       double tol = kExactHypothesisTolerance, const CbOptions& opt = {}) {
  const std::size_t d = attack.system_dim();
  if (n_rounds < 1) throw PreconditionError("memory_separation: n_rounds must be positive");
  std::size_t total = attack.env_dim();
  for (std::size_t k = 0; k < n_rounds; ++k) {
    total *= d;
    if (total > kMemoryUnrollLimit)
      throw SizeGuardError("memory_separation: D^n * dim(E) exceeds " + std::to_string(kMemoryUnrollLimit));
  }
  const SpiderPair pair = SpiderPair::standard(d);
  MemoryVerdict v;
  v.status = "separates";
  ComplexMatrix rho = attack.rho0;
  for (std::size_t k = 1; k <= n_rounds; ++k) {
    MemoryRound round;
    round.round = k;
    round.rho_in = rho;
    const Channel phi_k = memory_round_channel(attack, rho);
    round.disturbance = disturbance(phi_k, pair, opt);
    round.hypothesis_met = round.disturbance.max_upper() <= tol;
    const auto sep = separability_gap(phi_k, opt);
    round.gap = sep.gap;
    round.rho_out = sep.rho;
    v.max_gap_upper = std::max(v.max_gap_upper, sep.gap.upper);
    v.rounds.push_back(round);
    if (!round.hypothesis_met) {
      v.status = "detectable";
      v.detectable_round = k;
      break;
    }
    rho = sep.rho;
  }
  return v;
}

// Attack presets -----------------------------------------------------------------

/// Eve keeps the outcome of a non-demolition measurement in basis b.
inline Channel nondemolition_attack(const Basis& b) {
  const std::size_t d = b.dim();
  return as_eve_channel(nondemolition_measurement(b).relabeled({quantum(d)}, {quantum(d), quantum(d)}), d);
}

/// (1 - t)(id (x) rho) + t * attack
inline Channel convex_path(const Channel& attack, const ComplexMatrix& rho, double t) {
  const std::size_t d = attack.in_dim();
  return as_eve_channel(
      mixture({{1.0 - t, as_eve_channel(separable_channel(d, rho), d)}, {t, as_eve_channel(attack, d)}}), d);
}

/// Haar-random isometric channel B(H) -> B(H (x) E) with the given Kraus rank.
inline Channel random_eve_channel(std::size_t d, std::size_t e, std::size_t kraus_rank, Rng& rng) {
  const ComplexMatrix iso = random_isometry(d * e * kraus_rank, d, rng);
  const Dilation dil{iso, d * e, kraus_rank};
  return as_eve_channel(dil.channel(), d);
}

/// Swaps H with the storage register S of E = C (x) S when the control C is |1>.
inline MemoryAttack controlled_swap_memory(std::size_t d) {
  const std::size_t e = 2 * d;
  const FactorShape shape{d, 2, d};
  const ComplexMatrix swap = permutation_matrix(FactorShape{d, d}, {1, 0});
  const ComplexMatrix off = ket(2, 0) * ket(2, 0).adjoint();
  const ComplexMatrix on = ket(2, 1) * ket(2, 1).adjoint();
  const ComplexMatrix u = embed_operator(off, shape, {1}) + embed_operator(tensor(on, swap), shape, {1, 0, 2});
  const ComplexMatrix rho0 = tensor(on, ket(d, 0) * ket(d, 0).adjoint());
  return {Channel(std::vector<ComplexMatrix>{u}, {quantum(d), quantum(e)}, {quantum(d), quantum(e)}), rho0};
}

// Grids and calibration ------------------------------------------------------------

struct GridPoint {
  double t = 0.0;
  SeparabilityReport report;
};

/// verify_noise_bound along (1 - t)(id (x) rho) + t * attack.
inline std::vector<GridPoint> convex_path_grid(const Channel& attack, const ComplexMatrix& rho,
                                               const std::vector<double>& ts, const SpiderPair& pair,
                                               const CbOptions& opt = {}) {
  std::vector<GridPoint> out;
  out.reserve(ts.size());
  for (double t : ts) {
    if (!(t >= 0.0 && t <= 1.0)) throw PreconditionError("convex_path_grid: t outside [0, 1]");
    out.push_back({t, verify_noise_bound(convex_path(attack, rho, t), pair, opt)});
  }
  return out;
}

/// t = 0.01, 0.02, ..., 0.30
inline std::vector<double> default_calibration_grid() {
  std::vector<double> ts;
  for (int k = 1; k <= 30; ++k) ts.push_back(k / 100.0);
  return ts;
}

struct CalibrationResult {
  std::size_t dim = 0;
  std::size_t env_dim = 0;
  double n_analytic = 0.0;
  double n_empirical = 0.0;
  double c_analytic = 0.0;
  double c_empirical = 0.0;
  std::size_t seeds = 0;
  std::uint64_t base_seed = 0;
  std::size_t grid_points = 0;
  double grid_max_ratio = 0.0;
  double random_max_ratio = 0.0;
  std::size_t violations = 0;
  std::size_t worst_seed = 0;

  [[nodiscard]] bool passed() const { return violations == 0 && n_empirical <= n_analytic; }
};

namespace detail {

inline void calibration_sample(CalibrationResult& r, const SeparabilityReport& report, double& family_max) {
  const double eps = report.epsilon;
  if (eps > 1e-12) {
    const double ratio = report.separability.gap.lower / std::sqrt(eps);
    family_max = std::max(family_max, ratio);
    r.c_empirical = std::max(r.c_empirical, report.replay.max_controlled() / std::sqrt(eps));
    if (ratio > r.n_analytic) ++r.violations;
  } else if (report.separability.gap.lower > kExactSeparationTolerance) {
    ++r.violations;
  }
}

}  // namespace detail

/// Largest gap.lower / sqrt(eps) ratio over the convex path from id (x) |0><0|
/// to the Z non-demolition attack, and over random channels near the separable
/// set, (1 - t)(id (x) rho) + t Psi with Psi random and t log-uniform in
/// [1e-3, 1]. A violation is a ratio above n_analytic, or a nonzero gap at
/// zero disturbance.
inline CalibrationResult calibrate_noise_constant(std::size_t dim, std::size_t seeds, std::uint64_t base_seed,
                                                  std::size_t env_dim = 2, bool include_grid = true,
                                                  const CbOptions& base_opt = {}) {
  if (dim < 2) throw PreconditionError("calibrate_noise_constant: dim must be at least 2");
  if (env_dim < 1) throw PreconditionError("calibrate_noise_constant: env_dim must be positive");
  const SpiderPair pair = SpiderPair::standard(dim);
  CalibrationResult r;
  r.dim = dim;
  r.env_dim = env_dim;
  r.seeds = seeds;
  r.base_seed = base_seed;
  r.n_analytic = noise_constant(pair);
  r.c_analytic = controlled_residual_constant(pair);

  if (include_grid) {
    CbOptions opt = base_opt;
    opt.seed = base_seed;
    const auto grid = convex_path_grid(nondemolition_attack(pair.white()), ket(dim, 0) * ket(dim, 0).adjoint(),
                                       default_calibration_grid(), pair, opt);
    r.grid_points = grid.size();
    for (const auto& g : grid) detail::calibration_sample(r, g.report, r.grid_max_ratio);
  }
  for (std::size_t s = 0; s < seeds; ++s) {
    Rng rng(base_seed, s);
    const std::size_t rank = 1 + static_cast<std::size_t>(rng.below(4));
    const Channel psi = random_eve_channel(dim, env_dim, rank, rng);
    const ComplexMatrix rho = random_density(env_dim, rng);
    const double t = std::pow(10.0, -3.0 * rng.uniform());
    CbOptions opt = base_opt;
    opt.seed = substream_seed(base_seed, s);
    const double before = r.random_max_ratio;
    detail::calibration_sample(r, verify_noise_bound(convex_path(psi, rho, t), pair, opt), r.random_max_ratio);
    if (r.random_max_ratio > before) r.worst_seed = s;
  }
  r.n_empirical = std::max(r.grid_max_ratio, r.random_max_ratio);
  return r;
}

}  // namespace spiderqkd
