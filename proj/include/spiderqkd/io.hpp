#pragma once

// JSON and CSV plumbing for the command-line tool.
//
// Complex numbers are [re, im]; matrices are row-major arrays of rows.
// Config documents carry "schema_version": 1 and are read strictly: unknown
// keys, missing required keys and wrong types raise ConfigError.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "spiderqkd/linalg.hpp"
#include "spiderqkd/protocol.hpp"
#include "spiderqkd/security.hpp"

namespace spiderqkd {

using Json = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Values ------------------------------------------------------------------------

inline Json complex_to_json(Complex z) { return Json::array({z.real(), z.imag()}); }

inline Json matrix_to_json(const ComplexMatrix& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(complex_to_json(m(i, j)));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Complex complex_from_json(const Json& j, const std::string& where) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number())
    return {j[0].get<double>(), j[1].get<double>()};
  throw ConfigError(where + ": expected a number or an [re, im] pair");
}

inline ComplexMatrix matrix_from_json(const Json& j, const std::string& where) {
  if (!j.is_array() || j.empty() || !j[0].is_array() || j[0].empty())
    throw ConfigError(where + ": expected a non-empty array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = static_cast<Eigen::Index>(j[0].size());
  ComplexMatrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const Json& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
      throw ConfigError(where + ": rows have unequal lengths");
    for (Eigen::Index k = 0; k < cols; ++k)
      m(i, k) = complex_from_json(row[static_cast<std::size_t>(k)], where);
  }
  if (!all_finite(m)) throw ConfigError(where + ": non-finite entry");
  return m;
}

inline Json interval_to_json(const CbBounds& b) { return Json{{"lower", b.lower}, {"upper", b.upper}}; }

/// Fixed 17-significant-digit rendering used in CSV output.
inline std::string format_double(double x) {
  std::ostringstream os;
  os.imbue(std::locale::classic());
  os << std::setprecision(17) << x;
  return os.str();
}

// Strict object reader ----------------------------------------------------------

class ObjectReader {
 public:
  ObjectReader(const Json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw ConfigError(where_ + ": expected an object");
  }

  [[nodiscard]] bool has(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key);
  }

  const Json& required(const std::string& key) {
    if (!has(key)) throw ConfigError(where_ + ": missing required field '" + key + "'");
    return j_.at(key);
  }

  [[nodiscard]] std::string path(const std::string& key) const { return where_ + "." + key; }

  std::uint64_t get_uint(const std::string& key) { return as_uint(required(key), path(key)); }
  std::uint64_t get_uint(const std::string& key, std::uint64_t fallback) {
    return has(key) ? as_uint(j_.at(key), path(key)) : fallback;
  }
  double get_double(const std::string& key, double fallback) {
    if (!has(key)) return fallback;
    const Json& v = j_.at(key);
    if (!v.is_number()) throw ConfigError(path(key) + ": expected a number");
    return v.get<double>();
  }
  bool get_bool(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    const Json& v = j_.at(key);
    if (!v.is_boolean()) throw ConfigError(path(key) + ": expected a boolean");
    return v.get<bool>();
  }
  std::string get_string(const std::string& key) {
    const Json& v = required(key);
    if (!v.is_string()) throw ConfigError(path(key) + ": expected a string");
    return v.get<std::string>();
  }
  std::string get_string(const std::string& key, const std::string& fallback) {
    return has(key) ? get_string(key) : fallback;
  }

  /// Rejects keys that were never asked for.
  void finish() const {
    for (const auto& [key, value] : j_.items())
      if (!seen_.count(key)) throw ConfigError(where_ + ": unknown field '" + key + "'");
  }

  static std::uint64_t as_uint(const Json& v, const std::string& where) {
    if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0))
      throw ConfigError(where + ": expected a nonnegative integer");
    return v.get<std::uint64_t>();
  }

 private:
  const Json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

inline void check_schema_version(ObjectReader& r) {
  const Json& v = r.required("schema_version");
  if (!v.is_number_integer() || v.get<std::int64_t>() != kSchemaVersion)
    throw ConfigError("schema_version must be " + std::to_string(kSchemaVersion));
}

// Attack specs ------------------------------------------------------------------

inline std::vector<ComplexMatrix> kraus_from_json(const Json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) throw ConfigError(where + ": expected a non-empty list of matrices");
  std::vector<ComplexMatrix> out;
  for (std::size_t k = 0; k < j.size(); ++k) out.push_back(matrix_from_json(j[k], where + "[" + std::to_string(k) + "]"));
  for (const auto& k : out)
    if (k.rows() != out.front().rows() || k.cols() != out.front().cols())
      throw ConfigError(where + ": Kraus operators have different shapes");
  return out;
}

inline ComplexMatrix pure_zero(std::size_t dim) { return ket(dim, 0) * ket(dim, 0).adjoint(); }

inline void require_channel(const Channel& c, const std::string& where) {
  if (!c.is_trace_preserving()) throw ConfigError(where + ": channel is not trace preserving");
}

inline void require_state(const ComplexMatrix& rho, const std::string& where) {
  if (rho.rows() != rho.cols()) throw DimensionError(where + ": state is not square");
  if (hermiticity_defect(rho) > 1e-10 || std::abs(rho.trace() - Complex(1.0)) > 1e-10)
    throw ConfigError(where + ": state is not a unit-trace Hermitian matrix");
  if (hermitian_eig(rho).eigenvalues.minCoeff() < -1e-10) throw ConfigError(where + ": state is not positive");
}

/// Channel attack Phi : B(H) -> B(H (x) E) from a Kraus list or a preset.
///   {"kind": "channel", "kraus": [...]}
///   {"kind": "channel", "preset": "z_nondemolition" | "x_nondemolition"}
///   {"kind": "channel", "preset": "separable", "rho": matrix}
inline Channel channel_attack_from_json(ObjectReader& r, std::size_t dim) {
  const SpiderPair pair = SpiderPair::standard(dim);
  if (r.has("kraus")) {
    auto kraus = kraus_from_json(r.required("kraus"), r.path("kraus"));
    const auto rows = static_cast<std::size_t>(kraus.front().rows());
    const auto cols = static_cast<std::size_t>(kraus.front().cols());
    if (cols != dim || rows % dim != 0)
      throw DimensionError(r.path("kraus") + ": Kraus operators must be (D * dim E) x D with D = " +
                           std::to_string(dim));
    Channel c(std::move(kraus), {quantum(dim)}, {quantum(dim), quantum(rows / dim)});
    require_channel(c, r.path("kraus"));
    return c;
  }
  const std::string preset = r.get_string("preset");
  if (preset == "z_nondemolition") return nondemolition_attack(pair.white());
  if (preset == "x_nondemolition") return nondemolition_attack(pair.gray());
  if (preset == "separable") {
    const ComplexMatrix rho = matrix_from_json(r.required("rho"), r.path("rho"));
    require_state(rho, r.path("rho"));
    return separable_channel(dim, rho);
  }
  throw ConfigError(r.path("preset") + ": unknown channel preset '" + preset + "'");
}

/// Memory attack Phi : B(H (x) E) -> B(H (x) E) with initial memory rho0.
///   {"kind": "memory", "kraus": [...], "rho0": matrix}
///   {"kind": "memory", "preset": "identity", "env_dim": n, "rho0"?: matrix}
///   {"kind": "memory", "preset": "local_unitary", "unitary": matrix, "rho0"?: matrix}
///   {"kind": "memory", "preset": "controlled_swap"}
inline MemoryAttack memory_attack_from_json(ObjectReader& r, std::size_t dim) {
  auto rho0_or = [&](std::size_t env) {
    if (!r.has("rho0")) return pure_zero(env);
    ComplexMatrix rho0 = matrix_from_json(r.required("rho0"), r.path("rho0"));
    require_state(rho0, r.path("rho0"));
    if (static_cast<std::size_t>(rho0.rows()) != env) throw DimensionError(r.path("rho0") + ": wrong dimension");
    return rho0;
  };
  if (r.has("kraus")) {
    auto kraus = kraus_from_json(r.required("kraus"), r.path("kraus"));
    const ComplexMatrix rho0 = matrix_from_json(r.required("rho0"), r.path("rho0"));
    require_state(rho0, r.path("rho0"));
    const auto env = static_cast<std::size_t>(rho0.rows());
    const auto n = static_cast<std::size_t>(kraus.front().cols());
    if (n != dim * env || static_cast<std::size_t>(kraus.front().rows()) != n)
      throw DimensionError(r.path("kraus") + ": Kraus operators must act on H (x) E");
    Channel c(std::move(kraus), {quantum(dim), quantum(env)}, {quantum(dim), quantum(env)});
    require_channel(c, r.path("kraus"));
    return {std::move(c), rho0};
  }
  const std::string preset = r.get_string("preset");
  if (preset == "identity") {
    const auto env = static_cast<std::size_t>(r.get_uint("env_dim"));
    if (env < 1) throw ConfigError(r.path("env_dim") + ": must be positive");
    return {identity_channel(dim * env).relabeled({quantum(dim), quantum(env)}, {quantum(dim), quantum(env)}),
            rho0_or(env)};
  }
  if (preset == "local_unitary") {
    const ComplexMatrix u = matrix_from_json(r.required("unitary"), r.path("unitary"));
    if (u.rows() != u.cols()) throw DimensionError(r.path("unitary") + ": not square");
    if (unitarity_defect(u) > 1e-10) throw ConfigError(r.path("unitary") + ": not unitary");
    const auto env = static_cast<std::size_t>(u.rows());
    return {unitary_channel(tensor(identity(dim), u)).relabeled({quantum(dim), quantum(env)},
                                                                  {quantum(dim), quantum(env)}),
            rho0_or(env)};
  }
  if (preset == "controlled_swap") return controlled_swap_memory(dim);
  throw ConfigError(r.path("preset") + ": unknown memory preset '" + preset + "'");
}

inline InterceptPolicy policy_from_string(const std::string& s, const std::string& where) {
  if (s == "always_z") return InterceptPolicy::AlwaysZ;
  if (s == "always_x") return InterceptPolicy::AlwaysX;
  if (s == "uniform") return InterceptPolicy::UniformRandom;
  throw ConfigError(where + ": policy must be always_z, always_x or uniform");
}

inline AttackModel attack_from_json(const Json& j, std::size_t dim, const std::string& where = "attack") {
  ObjectReader r(j, where);
  const std::string kind = r.get_string("kind");
  AttackModel a;
  if (kind == "none") {
    a = NoAttack{};
  } else if (kind == "intercept_resend") {
    a = InterceptResend{policy_from_string(r.get_string("policy", "uniform"), r.path("policy"))};
  } else if (kind == "channel") {
    a = ChannelAttack{channel_attack_from_json(r, dim)};
  } else if (kind == "memory") {
    a = memory_attack_from_json(r, dim);
  } else {
    throw ConfigError(r.path("kind") + ": unknown attack kind '" + kind + "'");
  }
  r.finish();
  return a;
}

inline ProtocolConfig protocol_from_json(const Json& j, std::uint64_t seed) {
  ObjectReader r(j, "protocol");
  ProtocolConfig c;
  c.dim = static_cast<std::size_t>(r.get_uint("dim"));
  c.target_key_bits = static_cast<std::size_t>(r.get_uint("target_key_bits"));
  c.rounds = static_cast<std::size_t>(r.get_uint("rounds", 0));
  c.check_fraction = r.get_double("check_fraction", 0.5);
  c.abort_threshold = r.get_double("abort_threshold", 0.0);
  c.seed = seed;
  r.finish();
  try {
    c.validate();
  } catch (const PreconditionError& e) {
    throw ConfigError(e.what());
  }
  return c;
}

// Output records ------------------------------------------------------------------

inline Json disturbance_to_json(const DisturbanceReport& d) {
  return Json{{"eps_z", interval_to_json(d.eps_z)}, {"eps_x", interval_to_json(d.eps_x)}};
}

inline Json replay_to_json(const ProofReplay& p) {
  return Json{{"intertwiner_z", p.intertwiner_z},     {"intertwiner_x", p.intertwiner_x},
              {"controlled_z", p.controlled_z},       {"controlled_x", p.controlled_x},
              {"cross_consistency", p.cross_consistency}, {"separation", p.separation}};
}

inline Json separability_to_json(const SeparabilityReport& s) {
  return Json{{"rho_candidate", matrix_to_json(s.separability.rho)},
              {"gap", interval_to_json(s.separability.gap)},
              {"line_search_iterations", s.separability.iterations},
              {"epsilon", s.epsilon},
              {"n_est", s.n_est},
              {"bound_rhs", s.bound_rhs},
              {"verdict", s.verdict}};
}

inline Json exact_to_json(const ExactSecurityVerdict& v) {
  return Json{{"tolerance", kExactHypothesisTolerance},
              {"hypothesis_met", v.hypothesis_met},
              {"separation_tolerance", v.separation_tolerance},
              {"gap", interval_to_json(v.separability.gap)},
              {"separated", v.separated},
              {"verdict", v.verdict}};
}

inline Json memory_to_json(const MemoryVerdict& v) {
  Json rounds = Json::array();
  for (const auto& r : v.rounds)
    rounds.push_back(Json{{"round", r.round},
                          {"rho_in", matrix_to_json(r.rho_in)},
                          {"disturbance", disturbance_to_json(r.disturbance)},
                          {"hypothesis_met", r.hypothesis_met},
                          {"gap", interval_to_json(r.gap)},
                          {"rho_out", matrix_to_json(r.rho_out)}});
  return Json{{"status", v.status},
              {"detectable_round", v.detectable_round ? Json(*v.detectable_round) : Json(nullptr)},
              {"max_gap_upper", v.max_gap_upper},
              {"rounds", std::move(rounds)}};
}

inline Json protocol_config_to_json(const ProtocolConfig& c) {
  return Json{{"dim", c.dim},
              {"target_key_bits", c.target_key_bits},
              {"rounds", c.effective_rounds()},
              {"check_fraction", c.check_fraction},
              {"abort_threshold", c.abort_threshold},
              {"seed", c.seed}};
}

/// Run record; per-round data is stored column-wise.
inline Json protocol_run_to_json(const ProtocolRun& run, bool include_rounds) {
  Json j{{"config", protocol_config_to_json(run.config)},
         {"attack", run.attack},
         {"summary",
          Json{{"rounds", run.rounds.size()},
               {"sifted", run.sifted_count},
               {"check_bits", run.check_count},
               {"check_mismatches", run.check_mismatches},
               {"qber", run.qber_estimate},
               {"aborted", run.aborted},
               {"key_len", run.final_key_alice.size()}}},
         {"final_key_alice", run.final_key_alice},
         {"final_key_bob", run.final_key_bob}};
  if (include_rounds) {
    std::vector<std::uint32_t> ab, abas, bbas, bb;
    std::vector<int> sifted, check;
    std::vector<std::int32_t> eb, eo;
    for (const auto& r : run.rounds) {
      ab.push_back(r.alice_bit);
      abas.push_back(r.alice_basis);
      bbas.push_back(r.bob_basis);
      bb.push_back(r.bob_bit);
      sifted.push_back(r.sifted ? 1 : 0);
      check.push_back(r.check ? 1 : 0);
      eb.push_back(r.eve_basis);
      eo.push_back(r.eve_outcome);
    }
    j["rounds"] = Json{{"alice_bit", ab}, {"alice_basis", abas}, {"bob_basis", bbas}, {"bob_bit", bb},
                       {"sifted", sifted}, {"check", check},     {"eve_basis", eb},   {"eve_outcome", eo}};
  }
  return j;
}

inline Json calibration_to_json(const CalibrationResult& c, const std::string& date) {
  return Json{{"schema_version", kSchemaVersion},
              {"dim", c.dim},
              {"n_analytic", c.n_analytic},
              {"n_empirical", c.n_empirical},
              {"seeds", c.seeds},
              {"date", date},
              {"base_seed", c.base_seed},
              {"env_dim", c.env_dim},
              {"grid_points", c.grid_points},
              {"grid_max_ratio", c.grid_max_ratio},
              {"random_max_ratio", c.random_max_ratio},
              {"worst_seed", c.worst_seed},
              {"c_analytic", c.c_analytic},
              {"c_empirical", c.c_empirical},
              {"violations", c.violations},
              {"passed", c.passed()}};
}

// Files ---------------------------------------------------------------------------

inline Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError(std::string("malformed JSON: ") + e.what());
  }
}

inline void write_text_file(const std::string& path, const std::string& text) {
  const std::filesystem::path parent = std::filesystem::path(path).parent_path();
  std::error_code ec;
  if (!parent.empty()) std::filesystem::create_directories(parent, ec);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
  if (!out) throw std::runtime_error("write failed for " + path);
}

inline void write_json_file(const std::string& path, const Json& j) { write_text_file(path, j.dump(2) + "\n"); }

/// foo.json -> foo.csv; other names get ".csv" appended.
inline std::string csv_path_for(const std::string& path) {
  const auto slash = path.find_last_of('/');
  const auto dot = path.find_last_of('.');
  if (dot != std::string::npos && (slash == std::string::npos || dot > slash)) return path.substr(0, dot) + ".csv";
  return path + ".csv";
}

}  // namespace spiderqkd
