#pragma once

// Subcommands of the spiderqkd tool. Each takes a parsed config document and
// returns a process exit code:
//   0 ok, 1 check failed, 2 bad config, 3 dimension error.

#include <cstdint>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>

#include "spiderqkd/identity_suite.hpp"
#include "spiderqkd/io.hpp"
#include "spiderqkd/protocol.hpp"
#include "spiderqkd/security.hpp"

namespace spiderqkd {

enum ExitCode : int { kExitOk = 0, kExitCheckFailed = 1, kExitBadConfig = 2, kExitDimension = 3 };

struct CommandOptions {
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  bool quiet = false;
};

inline constexpr const char* kDefaultCalibrationDate = "unset";

namespace detail {

struct Common {
  std::uint64_t seed = 0;
  std::string out;
};

inline Common read_common(ObjectReader& r, const CommandOptions& opt) {
  check_schema_version(r);
  Common c;
  c.seed = r.get_uint("seed");
  c.out = r.get_string("out");
  if (opt.seed) c.seed = *opt.seed;
  if (opt.out) c.out = *opt.out;
  if (c.out.empty()) throw ConfigError("out: empty output path");
  return c;
}

inline Json header(const std::string& command, const Common& c) {
  return Json{{"schema_version", kSchemaVersion}, {"command", command}, {"seed", c.seed}};
}

inline CbOptions cb_options(std::uint64_t seed) {
  CbOptions o;
  o.seed = seed;
  return o;
}

}  // namespace detail

inline int cmd_verify_spiders(const Json& config, const CommandOptions& opt, std::ostream& log) {
  ObjectReader r(config, "config");
  const auto common = detail::read_common(r, opt);
  std::vector<std::size_t> dims{2, 3, 4, 5};
  if (r.has("dims")) {
    const Json& j = r.required("dims");
    if (!j.is_array() || j.empty()) throw ConfigError("config.dims: expected a non-empty array");
    dims.clear();
    for (const auto& d : j) {
      const auto v = ObjectReader::as_uint(d, "config.dims");
      if (v < 1 || v > 8) throw ConfigError("config.dims: dimensions must lie in [1, 8]");
      dims.push_back(static_cast<std::size_t>(v));
    }
  }
  const auto max_legs = static_cast<std::size_t>(r.get_uint("max_legs", 0));
  if (max_legs > 3) throw ConfigError("config.max_legs: at most 3");
  r.finish();

  Json out = detail::header("verify-spiders", common);
  out["tolerance"] = kIdentityTolerance;
  Json reports = Json::array();
  bool all = true;
  for (std::size_t d : dims) {
    const auto rep = run_spider_identity_suite(d, max_legs);
    Json res = Json::object();
    for (const auto& [name, value] : rep.residuals) res[name] = value;
    reports.push_back(Json{{"dim", d},
                           {"max_legs", rep.max_legs},
                           {"worst", rep.worst()},
                           {"passed", rep.passed()},
                           {"residuals", std::move(res)}});
    all = all && rep.passed();
    if (!opt.quiet) log << "dim " << d << ": worst residual " << rep.worst() << (rep.passed() ? " ok" : " FAIL") << "\n";
  }
  out["passed"] = all;
  out["dimensions"] = std::move(reports);
  write_json_file(common.out, out);
  return all ? kExitOk : kExitCheckFailed;
}

inline std::string simulate_csv(const ProtocolRun& run) {
  std::ostringstream os;
  os << "seed,dim,rounds,sifted,qber,aborted,key_len\n"
     << run.config.seed << ',' << run.config.dim << ',' << run.rounds.size() << ',' << run.sifted_count << ','
     << format_double(run.qber_estimate) << ',' << (run.aborted ? 1 : 0) << ',' << run.final_key_alice.size()
     << "\n";
  return os.str();
}

inline int cmd_simulate(const Json& config, const CommandOptions& opt, std::ostream& log) {
  ObjectReader r(config, "config");
  const auto common = detail::read_common(r, opt);
  const ProtocolConfig pc = protocol_from_json(r.required("protocol"), common.seed);
  const AttackModel attack = r.has("attack") ? attack_from_json(r.required("attack"), pc.dim) : AttackModel{NoAttack{}};
  const bool include_rounds = r.get_bool("include_rounds", true);
  r.finish();

  const ProtocolRun run = run_protocol(pc, attack);
  Json out = detail::header("simulate", common);
  out["run"] = protocol_run_to_json(run, include_rounds);
  write_json_file(common.out, out);
  write_text_file(csv_path_for(common.out), simulate_csv(run));
  if (!opt.quiet)
    log << "rounds " << run.rounds.size() << ", sifted " << run.sifted_count << ", qber " << run.qber_estimate
        << (run.aborted ? ", aborted" : "") << "\n";
  return kExitOk;
}

inline std::string grid_csv(const std::vector<GridPoint>& grid) {
  std::ostringstream os;
  os << "t,eps_z_lower,eps_z_upper,eps_x_lower,eps_x_upper,gap_lower,gap_upper,bound_rhs,verdict\n";
  for (const auto& g : grid) {
    const auto& d = g.report.disturbance;
    const auto& gap = g.report.separability.gap;
    os << format_double(g.t) << ',' << format_double(d.eps_z.lower) << ',' << format_double(d.eps_z.upper) << ','
       << format_double(d.eps_x.lower) << ',' << format_double(d.eps_x.upper) << ',' << format_double(gap.lower)
       << ',' << format_double(gap.upper) << ',' << format_double(g.report.bound_rhs) << ','
       << (g.report.verdict ? 1 : 0) << "\n";
  }
  return os.str();
}

inline int cmd_analyze_attack(const Json& config, const CommandOptions& opt, std::ostream& log) {
  ObjectReader r(config, "config");
  const auto common = detail::read_common(r, opt);
  const auto dim = static_cast<std::size_t>(r.get_uint("dim"));
  if (dim < 2) throw ConfigError("config.dim: must be at least 2");
  const AttackModel attack = attack_from_json(r.required("attack"), dim);
  const double tol = r.get_double("tolerance", kExactHypothesisTolerance);
  if (!(tol >= 0.0)) throw ConfigError("config.tolerance: must be nonnegative");
  const CbOptions cb = detail::cb_options(common.seed);
  const SpiderPair pair = SpiderPair::standard(dim);
  Json out = detail::header("analyze-attack", common);
  out["dim"] = dim;
  out["attack"] = attack_kind(attack);
  out["tolerance"] = tol;

  if (const auto* mem = std::get_if<MemoryAttack>(&attack)) {
    const auto n = static_cast<std::size_t>(r.get_uint("n_rounds", 1));
    r.finish();
    const auto verdict = memory_separation(*mem, n, tol, cb);
    out["memory"] = memory_to_json(verdict);
    write_json_file(common.out, out);
    if (!opt.quiet) log << "memory attack: " << verdict.status << "\n";
    return kExitOk;
  }
  const auto* ch = std::get_if<ChannelAttack>(&attack);
  if (!ch) throw ConfigError("config.attack: analyze-attack needs a channel or memory attack");

  std::optional<std::pair<std::vector<double>, ComplexMatrix>> grid_spec;
  if (r.has("grid")) {
    ObjectReader g(r.required("grid"), "config.grid");
    const Json& ts = g.required("t");
    if (!ts.is_array() || ts.empty()) throw ConfigError("config.grid.t: expected a non-empty array");
    std::vector<double> values;
    for (const auto& t : ts) {
      if (!t.is_number() || t.get<double>() < 0.0 || t.get<double>() > 1.0)
        throw ConfigError("config.grid.t: entries must lie in [0, 1]");
      values.push_back(t.get<double>());
    }
    const std::size_t env = eve_dim(ch->phi);
    ComplexMatrix rho = pure_zero(env);
    if (g.has("rho")) {
      rho = matrix_from_json(g.required("rho"), "config.grid.rho");
      require_state(rho, "config.grid.rho");
      if (static_cast<std::size_t>(rho.rows()) != env) throw DimensionError("config.grid.rho: wrong dimension");
    }
    g.finish();
    grid_spec.emplace(std::move(values), std::move(rho));
  }
  r.finish();

  const auto exact = verify_exact_security(ch->phi, pair, tol, cb);
  SeparabilityReport noise;
  noise.disturbance = exact.disturbance;
  noise.separability = exact.separability;
  noise.epsilon = exact.disturbance.max_upper();
  noise.n_est = noise_constant(pair);
  noise.bound_rhs = noise.n_est * std::sqrt(noise.epsilon);
  noise.verdict = noise.separability.gap.lower <= noise.bound_rhs;
  noise.replay = exact.replay;

  out["disturbance"] = disturbance_to_json(exact.disturbance);
  out["exact"] = exact_to_json(exact);
  out["separability"] = separability_to_json(noise);
  out["replay"] = replay_to_json(exact.replay);
  bool ok = noise.verdict && exact.verdict != "fail";
  if (grid_spec) {
    const auto grid = convex_path_grid(ch->phi, grid_spec->second, grid_spec->first, pair, cb);
    for (const auto& g : grid) ok = ok && g.report.verdict;
    const std::string csv = csv_path_for(common.out);
    write_text_file(csv, grid_csv(grid));
    out["grid_csv"] = csv;
  }
  write_json_file(common.out, out);
  if (!opt.quiet)
    log << "eps_z <= " << exact.disturbance.eps_z.upper << ", eps_x <= " << exact.disturbance.eps_x.upper << ", gap in ["
        << exact.separability.gap.lower << ", " << exact.separability.gap.upper << "], " << exact.verdict << "\n";
  return ok ? kExitOk : kExitCheckFailed;
}

inline int cmd_calibrate(const Json& config, const CommandOptions& opt, std::ostream& log) {
  ObjectReader r(config, "config");
  const auto common = detail::read_common(r, opt);
  const auto dim = static_cast<std::size_t>(r.get_uint("dim"));
  if (dim < 2 || dim > 4) throw ConfigError("config.dim: calibration supports 2 <= dim <= 4");
  const auto seeds = static_cast<std::size_t>(r.get_uint("seeds", 1000));
  const auto env = static_cast<std::size_t>(r.get_uint("env_dim", 2));
  if (env < 1 || env > 4) throw ConfigError("config.env_dim: must lie in [1, 4]");
  const bool grid = r.get_bool("include_grid", true);
  const std::string date = r.get_string("date", kDefaultCalibrationDate);
  r.finish();

  const auto result = calibrate_noise_constant(dim, seeds, common.seed, env, grid, detail::cb_options(common.seed));
  write_json_file(common.out, calibration_to_json(result, date));
  if (!opt.quiet)
    log << "dim " << dim << ": n_empirical " << result.n_empirical << " vs n_analytic " << result.n_analytic << ", "
        << result.violations << " violations\n";
  return result.passed() ? kExitOk : kExitCheckFailed;
}

/// Dispatches by name and maps exceptions to exit codes.
inline int run_command(const std::string& name, const Json& config, const CommandOptions& opt, std::ostream& log,
                       std::ostream& err) {
  try {
    if (name == "verify-spiders") return cmd_verify_spiders(config, opt, log);
    if (name == "simulate") return cmd_simulate(config, opt, log);
    if (name == "analyze-attack") return cmd_analyze_attack(config, opt, log);
    if (name == "calibrate") return cmd_calibrate(config, opt, log);
    err << "unknown command " << name << "\n";
    return kExitBadConfig;
  } catch (const DimensionError& e) {
    err << "dimension error: " << e.what() << "\n";
    return kExitDimension;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitBadConfig;
  } catch (const PreconditionError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitBadConfig;
  } catch (const SizeGuardError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitBadConfig;
  } catch (const nlohmann::json::exception& e) {
    err << "config error: " << e.what() << "\n";
    return kExitBadConfig;
  } catch (const std::runtime_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitBadConfig;
  }
}

}  // namespace spiderqkd
