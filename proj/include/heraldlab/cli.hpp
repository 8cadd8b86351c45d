#pragma once

// Command-line front end: `simulate`, `protocol` and `purify`.
//
// Every command prints a human summary to `out` and, with --json PATH, writes
// the envelope {schema_version, command, result, timing_ms}. Exit codes: 0 ok,
// 1 runtime or I/O failure, 2 usage, parse or semantic error.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "heraldlab/dsl.hpp"
#include "heraldlab/protocols.hpp"
#include "heraldlab/purification.hpp"
#include "heraldlab/serialization.hpp"

namespace heraldlab::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kSchemaVersion = 1;
inline constexpr std::size_t kSummaryTerms = 8;
inline constexpr const char* kSeedVariable = "HERALDLAB_SEED";

using Json = nlohmann::ordered_json;

class UsageError : public Error {
 public:
  using Error::Error;
};

struct SimulateOptions {
  std::string file;
  std::optional<std::uint64_t> shots;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> json_path;
};

struct ProtocolOptions {
  std::string name;  // "bell" or "ghz"
  std::optional<int> n;
  std::optional<std::string> alpha;
  std::optional<std::string> beta;
  std::optional<std::uint64_t> shots;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> json_path;
};

struct PurifyOptions {
  double f = 0.0;
  int rounds = 1;
  std::optional<std::string> json_path;
};

// ---------------------------------------------------------------------------
// Formatting helpers

inline std::string fixed6(double x) { return dsl::format_fixed6(x); }

inline std::string format_amplitude(Complex c) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "%+.6f%+.6fi", c.real(), c.imag());
  return buf;
}

/// Up to eight largest-magnitude amplitudes, ties kept in canonical ket order.
inline void print_top_terms(std::ostream& out, const PureState& s) {
  std::vector<std::pair<OccupationKet, Complex>> terms(s.terms().begin(), s.terms().end());
  std::stable_sort(terms.begin(), terms.end(),
                   [](const auto& a, const auto& b) { return std::abs(a.second) > std::abs(b.second); });
  const std::size_t shown = std::min(kSummaryTerms, terms.size());
  out << "final state (" << shown << " of " << terms.size() << " terms):\n";
  for (std::size_t i = 0; i < shown; ++i)
    out << "  " << format_amplitude(terms[i].second) << "  " << terms[i].first.to_string() << "\n";
}

inline void print_top_populations(std::ostream& out, const DensityMatrix& rho) {
  std::vector<std::pair<OccupationKet, double>> diag;
  for (const auto& ket : rho.support()) diag.emplace_back(ket, rho.entry(ket, ket).real());
  std::stable_sort(diag.begin(), diag.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  const std::size_t shown = std::min(kSummaryTerms, diag.size());
  out << "final state, mixed (" << shown << " of " << diag.size() << " populations):\n";
  for (std::size_t i = 0; i < shown; ++i) out << "  " << fixed6(diag[i].second) << "  " << diag[i].first.to_string() << "\n";
}

inline Json complex_json(Complex c) { return Json{{"re", c.real()}, {"im", c.imag()}}; }

inline Json rate_json(const RateEstimate& r, std::uint64_t seed) {
  return Json{{"shots", r.shots},
              {"seed", seed},
              {"successes", r.successes},
              {"estimate", r.estimate},
              {"std_error", r.std_error}};
}

// ---------------------------------------------------------------------------
// Shared plumbing

/// --seed, then HERALDLAB_SEED, then 0.
inline std::uint64_t resolve_seed(std::optional<std::uint64_t> flag) {
  if (flag) return *flag;
  const char* env = std::getenv(kSeedVariable);
  if (env == nullptr || *env == '\0') return 0;
  std::uint64_t value = 0;
  const std::string_view text(env);
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size())
    throw UsageError(std::string(kSeedVariable) + " must be a non-negative integer, got '" + env + "'");
  return value;
}

inline Json envelope(const std::string& command, Json arguments, Json result, double timing_ms) {
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["command"] = {{"name", command}, {"arguments", std::move(arguments)}};
  j["result"] = std::move(result);
  j["timing_ms"] = timing_ms;
  return j;
}

inline void write_json(const std::string& path, const Json& j) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write report to '" + path + "'");
  f << j.dump(2) << "\n";
  if (!f) throw Error("failed writing report to '" + path + "'");
}

class Stopwatch {
 public:
  double elapsed_ms() const {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

inline Json optional_json(const auto& value) {
  if (value) return Json(*value);
  return Json(nullptr);
}

// ---------------------------------------------------------------------------
// simulate

inline int cmd_simulate(const SimulateOptions& opt, std::ostream& out, std::ostream& err) {
  const Stopwatch clock;
  std::ifstream in(opt.file, std::ios::binary);
  if (!in) {
    err << "error: cannot read circuit file '" << opt.file << "'\n";
    return kExitRuntime;
  }
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string text = buffer.str();

  const auto parsed = dsl::parse(text);
  if (!parsed.ok()) {
    for (const auto& d : parsed.errors) err << opt.file << ": error: " << d.to_string() << "\n";
    return kExitUsage;
  }
  const auto compiled = dsl::validate(parsed.ast);
  if (!compiled.ok()) {
    for (const auto& d : compiled.errors) err << opt.file << ": error: " << d.to_string() << "\n";
    return kExitUsage;
  }

  const std::uint64_t seed = resolve_seed(opt.seed);
  const auto report = dsl::run(*compiled.pipeline, dsl::RunOptions{opt.shots, seed});

  out << "circuit: " << opt.file << "\n";
  out << "stages:";
  for (const auto& name : compiled.pipeline->stage_names()) out << " [" << name << "]";
  out << "\n";
  for (const auto& step : report.steps) {
    if (step.directive.empty()) continue;
    out << "  line " << step.position.line << ": " << step.directive << "  ";
    out << (step.skipped ? std::string("skipped") : "p = " + fixed6(step.probability)) << "\n";
  }
  out << "success probability: " << fixed6(report.success_probability) << "\n";
  if (report.monte_carlo)
    out << "monte carlo: " << fixed6(report.monte_carlo->estimate) << " +- " << fixed6(report.monte_carlo->std_error)
        << " (" << report.monte_carlo->shots << " shots, seed " << seed << ")\n";
  if (report.target) {
    out << "fidelity vs " << report.target->name << ": "
        << (report.fidelity ? fixed6(*report.fidelity) : std::string("n/a")) << "\n";
  }
  if (!report.final_state) {
    out << "final state: none (herald never fires)\n";
  } else if (const auto* pure = std::get_if<PureState>(&*report.final_state)) {
    print_top_terms(out, *pure);
  } else {
    print_top_populations(out, std::get<DensityMatrix>(*report.final_state));
  }

  if (opt.json_path) {
    Json args{{"file", opt.file}, {"shots", optional_json(opt.shots)}, {"seed", seed}};
    write_json(*opt.json_path, envelope("simulate", std::move(args), report.to_json(), clock.elapsed_ms()));
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// protocol

inline Complex parse_amplitude(const std::optional<std::string>& text, double fallback, const char* flag) {
  if (!text) return fallback;
  auto value = dsl::parse_complex_value(*text);
  if (!value) throw UsageError(std::string("malformed number for ") + flag + ": '" + *text + "'");
  return *value;
}

inline Json protocol_result(const ProtocolOptions& opt, int n, const SourceSpec& spec, std::uint64_t seed) {
  std::vector<SourceSpec> specs(static_cast<std::size_t>(n), spec);
  const ChainProtocol protocol{specs, {}};
  const ProtocolResult result = run_protocol(protocol);
  const PureState& state = result.heralded_state;
  const PureState target =
      opt.name == "bell" ? bell_state(BellKind::PhiPlus, state.modes()[0], state.modes()[1]) : ghz_state(state.modes());

  Json j;
  j["protocol"] = opt.name;
  j["n"] = n;
  j["alpha"] = complex_json(spec.alpha());
  j["beta"] = complex_json(spec.beta());
  j["pbs_count"] = result.count(StepKind::Pbs);
  j["herald_count"] = result.count(StepKind::Herald);
  j["success_probability"] = result.success_probability;
  j["analytic_probability"] = success_probability_analytic(protocol);
  Json heralds = Json::array();
  for (double p : herald_probabilities(result)) heralds.push_back(p);
  j["herald_probabilities"] = std::move(heralds);
  j["ghz_sign"] = optional_json(result.ghz_sign);
  Json modes = Json::array();
  for (const auto& m : state.modes()) modes.push_back(m.str());
  j["final_modes"] = std::move(modes);
  j["final_state"] = {{"representation", "pure"}, {"terms", to_json(state)}};
  j["target"] = opt.name == "bell" ? "phi+" : "ghz" + std::to_string(n);
  j["fidelity"] = fidelity(state, target);
  if (opt.shots) j["monte_carlo"] = rate_json(sample_heralds(herald_probabilities(result), *opt.shots, seed), seed);
  return j;
}

inline int cmd_protocol(const ProtocolOptions& opt, std::ostream& out, std::ostream& err) {
  const Stopwatch clock;
  int n = 0;
  if (opt.name == "bell") {
    if (opt.n && *opt.n != 2) {
      err << "error: protocol bell uses exactly two photons, got --n " << *opt.n << "\n";
      return kExitUsage;
    }
    n = 2;
  } else if (opt.name == "ghz") {
    n = opt.n.value_or(3);
    if (n < 2 || n > 10) {
      err << "error: protocol ghz needs 2 <= n <= 10, got " << n << "\n";
      return kExitUsage;
    }
  } else {
    err << "error: unknown protocol '" << opt.name << "' (expected bell or ghz)\n";
    return kExitUsage;
  }

  const double r = std::sqrt(0.5);
  const Complex alpha = parse_amplitude(opt.alpha, r, "--alpha");
  Complex beta = parse_amplitude(opt.beta, r, "--beta");
  if (opt.alpha && !opt.beta) beta = std::sqrt(std::max(0.0, 1.0 - std::norm(alpha)));
  const double norm = std::norm(alpha) + std::norm(beta);
  if (std::abs(norm - 1.0) > dsl::kSourceTolerance) {
    err << "error: unnormalized source: |alpha|^2+|beta|^2 = " << dsl::format_short(norm) << "\n";
    return kExitUsage;
  }
  const SourceSpec spec(alpha / std::sqrt(norm), beta / std::sqrt(norm));
  const std::uint64_t seed = resolve_seed(opt.seed);
  Json result = protocol_result(opt, n, spec, seed);

  out << "protocol " << opt.name << " (n = " << n << ")\n";
  out << "resources: " << n << " sources, " << result["pbs_count"].get<std::size_t>() << " pbs, "
      << result["herald_count"].get<std::size_t>() << " heralds\n";
  out << "success probability: " << fixed6(result["success_probability"].get<double>()) << " (analytic "
      << fixed6(result["analytic_probability"].get<double>()) << ")\n";
  if (result.contains("monte_carlo")) {
    const auto& mc = result["monte_carlo"];
    out << "monte carlo: " << fixed6(mc["estimate"].get<double>()) << " +- " << fixed6(mc["std_error"].get<double>())
        << " (" << mc["shots"].get<std::uint64_t>() << " shots, seed " << seed << ")\n";
  }
  out << "fidelity vs " << result["target"].get<std::string>() << ": " << fixed6(result["fidelity"].get<double>())
      << "\n";
  print_top_terms(out, pure_state_from_json(result["final_state"]["terms"], [&] {
                    ModeSet modes;
                    for (const auto& m : result["final_modes"]) modes.emplace_back(m.get<std::string>());
                    return modes;
                  }()));

  if (opt.json_path) {
    Json args{{"name", opt.name},
              {"n", n},
              {"alpha", optional_json(opt.alpha)},
              {"beta", optional_json(opt.beta)},
              {"shots", optional_json(opt.shots)},
              {"seed", seed}};
    write_json(*opt.json_path, envelope("protocol", std::move(args), std::move(result), clock.elapsed_ms()));
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// purify

inline int cmd_purify(const PurifyOptions& opt, std::ostream& out, std::ostream& err) {
  const Stopwatch clock;
  if (!(opt.f >= 0.0 && opt.f <= 1.0)) {
    err << "error: --f must lie in [0, 1], got " << opt.f << "\n";
    return kExitUsage;
  }
  if (opt.rounds < 0) {
    err << "error: --rounds must be non-negative, got " << opt.rounds << "\n";
    return kExitUsage;
  }
  const Trajectory t = iterate(opt.f, opt.rounds);

  Json warnings = Json::array();
  if (t.non_purifying) {
    const std::string w = "non-purifying regime: f0 = " + fixed6(opt.f) + " <= 0.5, the fraction cannot increase";
    err << "warning: " << w << "\n";
    warnings.push_back(w);
  }

  out << "round  f          selection  yield\n";
  Json rows = Json::array();
  for (const auto& row : t.rows) {
    char line[128];
    std::snprintf(line, sizeof line, "%-6d %-10s %-10s %s\n", row.round, fixed6(row.f).c_str(),
                  row.selection_probability ? fixed6(*row.selection_probability).c_str() : "-",
                  fixed6(row.cumulative_yield).c_str());
    out << line;
    rows.push_back({{"round", row.round},
                    {"f", row.f},
                    {"selection_probability", optional_json(row.selection_probability)},
                    {"cumulative_yield", row.cumulative_yield}});
  }

  if (opt.json_path) {
    Json result;
    result["f0"] = opt.f;
    result["rounds"] = opt.rounds;
    result["non_purifying"] = t.non_purifying;
    result["trajectory"] = std::move(rows);
    result["final_f"] = t.rows.back().f;
    result["final_yield"] = t.rows.back().cumulative_yield;
    result["warnings"] = std::move(warnings);
    write_json(*opt.json_path, envelope("purify", Json{{"f", opt.f}, {"rounds", opt.rounds}}, std::move(result),
                                        clock.elapsed_ms()));
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// Dispatch

inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Heralded photonic entanglement simulator", "heraldlab"};
  app.require_subcommand(1);

  SimulateOptions sim;
  auto* simulate = app.add_subcommand("simulate", "Run a circuit script");
  simulate->add_option("file", sim.file, "Circuit script")->required();
  simulate->add_option("--shots", sim.shots, "Monte Carlo shots");
  simulate->add_option("--seed", sim.seed, "Sampling seed (default: $HERALDLAB_SEED or 0)");
  simulate->add_option("--json", sim.json_path, "Write the JSON report here");

  ProtocolOptions proto;
  auto* protocol = app.add_subcommand("protocol", "Run a built-in protocol (bell, ghz)");
  protocol->add_option("name", proto.name, "bell or ghz")->required();
  protocol->add_option("--n", proto.n, "Photon count for ghz (2..10)");
  protocol->add_option("--alpha", proto.alpha, "H amplitude of every source");
  protocol->add_option("--beta", proto.beta, "V amplitude of every source");
  protocol->add_option("--shots", proto.shots, "Monte Carlo shots");
  protocol->add_option("--seed", proto.seed, "Sampling seed (default: $HERALDLAB_SEED or 0)");
  protocol->add_option("--json", proto.json_path, "Write the JSON report here");

  PurifyOptions pur;
  auto* purify = app.add_subcommand("purify", "Iterate the purification round");
  purify->add_option("--f", pur.f, "Initial H fraction")->required();
  purify->add_option("--rounds", pur.rounds, "Number of rounds")->capture_default_str();
  purify->add_option("--json", pur.json_path, "Write the JSON report here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (simulate->parsed()) return cmd_simulate(sim, out, err);
    if (protocol->parsed()) return cmd_protocol(proto, out, err);
    return cmd_purify(pur, out, err);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}

}  // namespace heraldlab::cli
