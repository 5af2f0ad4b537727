#pragma once

// Seeded simulation of the prepare-and-measure key distribution protocol on
// qudits, with pluggable eavesdroppers, and the exact per-bit detection
// probability for memoryless attacks.
//
// Randomness: round r draws from Rng(seed, r); check-bit selection draws from
// the stream kCheckStream. A run is therefore a pure function of
// (config, attack), whatever order the rounds are evaluated in.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "spiderqkd/channels.hpp"
#include "spiderqkd/errors.hpp"
#include "spiderqkd/random.hpp"
#include "spiderqkd/spiders.hpp"

namespace spiderqkd {

inline constexpr std::uint64_t kCheckStream = std::numeric_limits<std::uint64_t>::max();
inline constexpr std::size_t kMemoryUnrollLimit = 256;

struct ProtocolConfig {
  std::size_t dim = 2;
  std::size_t target_key_bits = 64;
  std::size_t rounds = 0;  // 0 means 4 * target_key_bits
  double check_fraction = 0.5;
  double abort_threshold = 0.0;
  std::uint64_t seed = 0;

  [[nodiscard]] std::size_t effective_rounds() const { return rounds ? rounds : 4 * target_key_bits; }

  void validate() const {
    if (dim < 2) throw PreconditionError("ProtocolConfig: dim must be at least 2");
    if (effective_rounds() < 1) throw PreconditionError("ProtocolConfig: at least one round required");
    if (!(check_fraction >= 0.0 && check_fraction <= 1.0))
      throw PreconditionError("ProtocolConfig: check_fraction outside [0, 1]");
    if (!(abort_threshold >= 0.0 && abort_threshold <= 1.0))
      throw PreconditionError("ProtocolConfig: abort_threshold outside [0, 1]");
  }
};

enum class InterceptPolicy { AlwaysZ, AlwaysX, UniformRandom };

struct NoAttack {};

/// Eve measures in a guessed basis and re-prepares her outcome.
struct InterceptResend {
  InterceptPolicy policy = InterceptPolicy::UniformRandom;
};

/// Memoryless attack Phi : B(H) -> B(H (x) E), applied afresh every round.
struct ChannelAttack {
  Channel phi;
};

/// Phi : B(H (x) E) -> B(H (x) E) with Eve's memory E starting in rho0.
struct MemoryAttack {
  Channel phi;
  ComplexMatrix rho0;

  [[nodiscard]] std::size_t env_dim() const { return static_cast<std::size_t>(rho0.rows()); }
  [[nodiscard]] std::size_t system_dim() const { return phi.in_dim() / env_dim(); }
};

using AttackModel = std::variant<NoAttack, InterceptResend, ChannelAttack, MemoryAttack>;

inline std::string attack_kind(const AttackModel& a) {
  switch (a.index()) {
    case 0: return "none";
    case 1: return "intercept_resend";
    case 2: return "channel";
    default: return "memory";
  }
}

struct RoundRecord {
  std::uint32_t alice_bit = 0;
  std::uint32_t alice_basis = 0;  // 0 = Z (white), 1 = X (gray)
  std::uint32_t bob_basis = 0;
  std::uint32_t bob_bit = 0;
  bool sifted = false;
  bool check = false;
  std::int32_t eve_basis = -1;    // -1 when Eve has no classical record
  std::int32_t eve_outcome = -1;

  friend bool operator==(const RoundRecord&, const RoundRecord&) = default;
};

struct ProtocolRun {
  ProtocolConfig config;
  std::string attack;
  std::vector<RoundRecord> rounds;
  std::size_t sifted_count = 0;
  std::size_t check_count = 0;
  std::size_t check_mismatches = 0;
  double qber_estimate = 0.0;
  bool aborted = false;
  std::vector<std::uint32_t> final_key_alice;
  std::vector<std::uint32_t> final_key_bob;

  [[nodiscard]] std::vector<std::int32_t> eve_transcript() const {
    std::vector<std::int32_t> t;
    t.reserve(rounds.size());
    for (const auto& r : rounds) t.push_back(r.eve_outcome);
    return t;
  }
};

namespace detail {

inline std::size_t sample_index(const std::vector<double>& probs, double u) {
  double total = 0.0;
  for (double p : probs) total += std::max(p, 0.0);
  double acc = 0.0;
  for (std::size_t k = 0; k < probs.size(); ++k) {
    acc += std::max(probs[k], 0.0) / total;
    if (u < acc) return k;
  }
  return probs.size() - 1;
}

inline std::vector<double> born_probabilities(const Basis& b, const ComplexMatrix& rho) {
  std::vector<double> p(b.dim());
  for (std::size_t i = 0; i < b.dim(); ++i) {
    const ComplexMatrix v = b.vector(i);
    p[i] = (v.adjoint() * rho * v)(0, 0).real();
  }
  return p;
}

inline void check_attack_dims(const AttackModel& attack, std::size_t dim) {
  if (const auto* c = std::get_if<ChannelAttack>(&attack)) {
    if (c->phi.in_dim() != dim || c->phi.out_dim() % dim != 0)
      throw DimensionError("ChannelAttack: channel must map B(H) to B(H (x) E) with dim H = " +
                           std::to_string(dim));
  } else if (const auto* m = std::get_if<MemoryAttack>(&attack)) {
    const std::size_t e = m->env_dim();
    if (m->rho0.rows() != m->rho0.cols() || m->phi.in_dim() != dim * e || m->phi.out_dim() != dim * e)
      throw DimensionError("MemoryAttack: channel must act on B(H (x) E) with dim H = " + std::to_string(dim));
  }
}

}  // namespace detail

inline Basis protocol_basis(const SpiderPair& pair, std::uint32_t index) {
  return index == 0 ? pair.white() : pair.gray();
}

/// One seeded execution of the protocol.
inline ProtocolRun run_protocol(const ProtocolConfig& cfg, const AttackModel& attack) {
  cfg.validate();
  detail::check_attack_dims(attack, cfg.dim);
  const std::size_t d = cfg.dim;
  const SpiderPair pair = SpiderPair::standard(d);
  const std::array<Basis, 2> bases{pair.white(), pair.gray()};

  ProtocolRun run;
  run.config = cfg;
  run.attack = attack_kind(attack);
  const std::size_t n_rounds = cfg.effective_rounds();
  run.rounds.resize(n_rounds);

  ComplexMatrix memory;
  if (const auto* m = std::get_if<MemoryAttack>(&attack)) memory = m->rho0;

  for (std::size_t r = 0; r < n_rounds; ++r) {
    Rng rng(cfg.seed, r);
    RoundRecord& rec = run.rounds[r];
    rec.alice_bit = static_cast<std::uint32_t>(rng.below(d));
    rec.alice_basis = static_cast<std::uint32_t>(rng.below(2));
    rec.bob_basis = static_cast<std::uint32_t>(rng.below(2));
    const Basis& bob = bases[rec.bob_basis];
    const ComplexMatrix sent = bases[rec.alice_basis].projector(rec.alice_bit);

    if (std::holds_alternative<NoAttack>(attack)) {
      rec.bob_bit = static_cast<std::uint32_t>(detail::sample_index(detail::born_probabilities(bob, sent), rng.uniform()));
    } else if (const auto* ir = std::get_if<InterceptResend>(&attack)) {
      std::uint32_t eve_basis = 0;
      switch (ir->policy) {
        case InterceptPolicy::AlwaysZ: eve_basis = 0; break;
        case InterceptPolicy::AlwaysX: eve_basis = 1; break;
        case InterceptPolicy::UniformRandom: eve_basis = static_cast<std::uint32_t>(rng.below(2)); break;
      }
      const Basis& eve = bases[eve_basis];
      const auto outcome = detail::sample_index(detail::born_probabilities(eve, sent), rng.uniform());
      rec.eve_basis = static_cast<std::int32_t>(eve_basis);
      rec.eve_outcome = static_cast<std::int32_t>(outcome);
      rec.bob_bit = static_cast<std::uint32_t>(
          detail::sample_index(detail::born_probabilities(bob, eve.projector(outcome)), rng.uniform()));
    } else if (const auto* ca = std::get_if<ChannelAttack>(&attack)) {
      const ComplexMatrix out = spiderqkd::apply(ca->phi, sent);
      const std::size_t e = ca->phi.out_dim() / d;
      // joint Born distribution of Bob's outcome and Eve's computational readout
      std::vector<double> joint(d * e);
      for (std::size_t j = 0; j < d; ++j) {
        const ComplexMatrix bj = bob.vector(j);
        for (std::size_t k = 0; k < e; ++k) {
          const ComplexMatrix v = tensor(bj, ket(e, k));
          joint[j * e + k] = (v.adjoint() * out * v)(0, 0).real();
        }
      }
      const std::size_t idx = detail::sample_index(joint, rng.uniform());
      rec.bob_bit = static_cast<std::uint32_t>(idx / e);
      rec.eve_basis = 0;
      rec.eve_outcome = static_cast<std::int32_t>(idx % e);
    } else {
      const auto& ma = std::get<MemoryAttack>(attack);
      const std::size_t e = ma.env_dim();
      const ComplexMatrix out = spiderqkd::apply(ma.phi, tensor(sent, memory));
      std::vector<ComplexMatrix> branches;
      std::vector<double> probs;
      for (std::size_t j = 0; j < d; ++j) {
        const ComplexMatrix lift = tensor(bob.vector(j).adjoint(), identity(e));
        ComplexMatrix branch = lift * out * lift.adjoint();
        probs.push_back(branch.trace().real());
        branches.push_back(std::move(branch));
      }
      const std::size_t j = detail::sample_index(probs, rng.uniform());
      rec.bob_bit = static_cast<std::uint32_t>(j);
      memory = branches[j] / probs[j];
    }
    rec.sifted = rec.alice_basis == rec.bob_basis;
  }

  std::vector<std::size_t> sifted;
  for (std::size_t r = 0; r < n_rounds; ++r)
    if (run.rounds[r].sifted) sifted.push_back(r);
  run.sifted_count = sifted.size();

  // seeded Fisher-Yates prefix of the sifted indices
  const auto n_check = static_cast<std::size_t>(std::floor(cfg.check_fraction * static_cast<double>(sifted.size())));
  Rng check_rng(cfg.seed, kCheckStream);
  for (std::size_t i = 0; i < n_check; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(check_rng.below(sifted.size() - i));
    std::swap(sifted[i], sifted[j]);
    run.rounds[sifted[i]].check = true;
  }
  run.check_count = n_check;
  for (const auto& rec : run.rounds)
    if (rec.check && rec.alice_bit != rec.bob_bit) ++run.check_mismatches;
  run.qber_estimate = n_check ? static_cast<double>(run.check_mismatches) / static_cast<double>(n_check) : 0.0;
  run.aborted = run.qber_estimate > cfg.abort_threshold;

  if (!run.aborted)
    for (const auto& rec : run.rounds)
      if (rec.sifted && !rec.check) {
        run.final_key_alice.push_back(rec.alice_bit);
        run.final_key_bob.push_back(rec.bob_bit);
      }
  return run;
}

/// What reaches Bob from a sent state, Eve's share discarded.
inline ComplexMatrix bob_state(const AttackModel& attack, const SpiderPair& pair, const ComplexMatrix& sent) {
  if (std::holds_alternative<NoAttack>(attack)) return sent;
  if (const auto* ir = std::get_if<InterceptResend>(&attack)) {
    const ComplexMatrix z = spiderqkd::apply(decoherence(pair.white()), sent);
    const ComplexMatrix x = spiderqkd::apply(decoherence(pair.gray()), sent);
    switch (ir->policy) {
      case InterceptPolicy::AlwaysZ: return z;
      case InterceptPolicy::AlwaysX: return x;
      case InterceptPolicy::UniformRandom: return 0.5 * (z + x);
    }
  }
  if (const auto* ca = std::get_if<ChannelAttack>(&attack)) {
    const std::size_t d = pair.dim();
    const std::size_t e = ca->phi.out_dim() / d;
    return partial_trace(spiderqkd::apply(ca->phi, sent), FactorShape{d, e}, {1});
  }
  throw PreconditionError("exact_detection_probability: unsupported attack kind " + attack_kind(attack));
}

/// Mismatch probability per sifted bit, by density-matrix algebra.
inline double exact_detection_probability(const ProtocolConfig& cfg, const AttackModel& attack) {
  cfg.validate();
  if (std::holds_alternative<MemoryAttack>(attack))
    throw PreconditionError("exact_detection_probability: memory attacks are not supported");
  detail::check_attack_dims(attack, cfg.dim);
  const SpiderPair pair = SpiderPair::standard(cfg.dim);
  double total = 0.0;
  for (std::uint32_t basis = 0; basis < 2; ++basis) {
    const Basis b = protocol_basis(pair, basis);
    for (std::size_t i = 0; i < cfg.dim; ++i) {
      const ComplexMatrix out = bob_state(attack, pair, b.projector(i));
      total += 1.0 - (b.vector(i).adjoint() * out * b.vector(i))(0, 0).real();
    }
  }
  return total / static_cast<double>(2 * cfg.dim);
}

/// Phi' : B(H^{(x) n}) -> B(H^{(x) n} (x) E), Eve's memory threaded through n rounds from rho0.
inline Channel memory_unrolled_channel(const MemoryAttack& attack, std::size_t n_rounds) {
  if (n_rounds < 1) throw PreconditionError("memory_unrolled_channel: n_rounds must be positive");
  const std::size_t e = attack.env_dim();
  const std::size_t d = attack.system_dim();
  if (d * e != attack.phi.in_dim() || attack.phi.out_dim() != attack.phi.in_dim())
    throw DimensionError("memory_unrolled_channel: channel must act on B(H (x) E)");
  std::size_t total = e;
  for (std::size_t k = 0; k < n_rounds; ++k) {
    total *= d;
    if (total > kMemoryUnrollLimit)
      throw SizeGuardError("memory_unrolled_channel: D^n * dim(E) exceeds " + std::to_string(kMemoryUnrollLimit));
  }
  const std::size_t sys = total / e;

  std::vector<Leg> in_legs(n_rounds, quantum(d));
  std::vector<Leg> out_legs = in_legs;
  out_legs.push_back(quantum(e));
  std::vector<std::size_t> dims(n_rounds, d);
  dims.push_back(e);
  const FactorShape shape(dims);

  std::vector<ComplexMatrix> kraus = prepare(attack.rho0).kraus();
  for (auto& k : kraus) k = tensor(identity(sys), k);
  for (std::size_t round = 0; round < n_rounds; ++round) {
    std::vector<ComplexMatrix> lifted;
    for (const auto& k : attack.phi.kraus()) lifted.push_back(embed_operator(k, shape, {round, n_rounds}));
    std::vector<ComplexMatrix> next;
    for (const auto& l : lifted)
      for (const auto& k : kraus) {
        ComplexMatrix p = l * k;
        if (p.squaredNorm() > 0.0) next.push_back(std::move(p));
      }
    kraus = std::move(next);
  }
  return Channel(std::move(kraus), std::move(in_legs), std::move(out_legs));
}

/// Plug-in mutual information (bits) of two paired discrete samples.
inline double empirical_mutual_information(const std::vector<std::int64_t>& x, const std::vector<std::int64_t>& y) {
  if (x.size() != y.size()) throw DimensionError("empirical_mutual_information: sample sizes differ");
  if (x.empty()) return 0.0;
  std::map<std::int64_t, double> px, py;
  std::map<std::pair<std::int64_t, std::int64_t>, double> pxy;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    px[x[i]] += 1.0 / n;
    py[y[i]] += 1.0 / n;
    pxy[{x[i], y[i]}] += 1.0 / n;
  }
  double mi = 0.0;
  for (const auto& [key, p] : pxy) mi += p * std::log2(p / (px[key.first] * py[key.second]));
  return std::max(mi, 0.0);
}

}  // namespace spiderqkd
