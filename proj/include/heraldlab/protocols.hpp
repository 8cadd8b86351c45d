#pragma once

// Entanglement-generation protocols built from single-photon sources, PBSs
// and single-photon QNDM heralds.
//
// Wiring used throughout: sources sit on modes "1", "2", ..., "n". The first
// PBS maps (1, 2) -> (1', 2') and the QNDM watches 1'. Each later photon k is
// combined with the newest arm, (k-1)', on a PBS whose outputs are (k-1)''
// and k'; the QNDM watches (k-1)''.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "heraldlab/elements.hpp"
#include "heraldlab/fock.hpp"
#include "heraldlab/qndm.hpp"

namespace heraldlab {

enum class BellKind { PhiPlus, PhiMinus, PsiPlus, PsiMinus };

inline const char* to_string(BellKind k) {
  switch (k) {
    case BellKind::PhiPlus: return "phi+";
    case BellKind::PhiMinus: return "phi-";
    case BellKind::PsiPlus: return "psi+";
    case BellKind::PsiMinus: return "psi-";
  }
  return "?";
}

inline std::optional<BellKind> parse_bell_kind(std::string_view name) {
  if (name == "phi+") return BellKind::PhiPlus;
  if (name == "phi-") return BellKind::PhiMinus;
  if (name == "psi+") return BellKind::PsiPlus;
  if (name == "psi-") return BellKind::PsiMinus;
  return std::nullopt;
}

/// Bell state with `a` as the first and `b` as the second photon.
inline PureState bell_state(BellKind kind, const ModeLabel& a, const ModeLabel& b) {
  const double r = std::numbers::sqrt2 / 2;
  const Occupation h{1, 0};
  const Occupation v{0, 1};
  const bool phi = kind == BellKind::PhiPlus || kind == BellKind::PhiMinus;
  const double sign = (kind == BellKind::PhiPlus || kind == BellKind::PsiPlus) ? 1.0 : -1.0;
  PureState s(ModeSet{a, b});
  s.add(OccupationKet({{a, h}, {b, phi ? h : v}}), r);
  s.add(OccupationKet({{a, v}, {b, phi ? v : h}}), sign * r);
  return s;
}

/// (|H...H> + sign |V...V>)/sqrt(2) over `modes`.
inline PureState ghz_state(const ModeSet& modes, double sign = 1.0) {
  if (modes.empty()) throw ModeError("GHZ state needs at least one mode");
  std::vector<ModeOccupation> all_h;
  std::vector<ModeOccupation> all_v;
  for (const auto& m : modes) {
    all_h.push_back({m, Occupation{1, 0}});
    all_v.push_back({m, Occupation{0, 1}});
  }
  PureState s(modes);
  s.add(OccupationKet(std::move(all_h)), std::numbers::sqrt2 / 2);
  s.add(OccupationKet(std::move(all_v)), sign * std::numbers::sqrt2 / 2);
  return s;
}

enum class StepKind { Source, Pbs, Herald, LocalUnitary };

inline const char* to_string(StepKind k) {
  switch (k) {
    case StepKind::Source: return "source";
    case StepKind::Pbs: return "pbs";
    case StepKind::Herald: return "qndm";
    case StepKind::LocalUnitary: return "local_unitary";
  }
  return "?";
}

struct StepRecord {
  StepKind kind = StepKind::Source;
  std::string element;
  std::optional<HeraldOutcome> outcome;
  double probability = 1.0;
};

struct ProtocolResult {
  PureState heralded_state;
  double success_probability = 1.0;
  std::vector<StepRecord> steps;
  /// Relative sign of the |V...V> term for two-term GHZ-type outputs, before
  /// any recorded correction.
  std::optional<int> ghz_sign;

  std::size_t count(StepKind kind) const {
    return static_cast<std::size_t>(
        std::count_if(steps.begin(), steps.end(), [&](const StepRecord& s) { return s.kind == kind; }));
  }
};

namespace detail {

class ProtocolRun {
 public:
  void add_source(const ModeLabel& mode, const SourceSpec& spec) {
    PureState photon = make_single_photon(mode, spec);
    state_ = started_ ? tensor(state_, photon) : photon;
    started_ = true;
    steps_.push_back({StepKind::Source, "source " + mode.str(), std::nullopt, 1.0});
  }

  void add_state(const PureState& s, std::string description) {
    state_ = started_ ? tensor(state_, s) : s;
    started_ = true;
    steps_.push_back({StepKind::Source, std::move(description), std::nullopt, 1.0});
  }

  void pbs(const PbsSpec& spec) {
    state_ = pbs_apply(state_, spec);
    steps_.push_back({StepKind::Pbs,
                      "pbs " + spec.in_a.str() + " " + spec.in_b.str() + " -> " + spec.out_a.str() + " " +
                          spec.out_b.str(),
                      std::nullopt, 1.0});
  }

  void herald(const ModeLabel& mode) {
    auto branches = qndm_herald(state_, mode);
    steps_.push_back({StepKind::Herald, "qndm " + mode.str(), HeraldOutcome::Success, branches.success.probability});
    if (!branches.success.post_state)
      throw ProtocolError("degenerate protocol: herald on mode '" + mode.str() + "' has zero success probability");
    state_ = std::move(*branches.success.post_state);
    probability_ *= branches.success.probability;
  }

  void correct(const ModeLabel& mode, const PolarizationUnitary& u, std::string name) {
    state_ = local_unitary(state_, mode, u);
    steps_.push_back({StepKind::LocalUnitary, std::move(name) + " " + mode.str(), std::nullopt, 1.0});
  }

  const PureState& state() const { return state_; }

  ProtocolResult finish() && {
    return ProtocolResult{std::move(state_), probability_, std::move(steps_), std::nullopt};
  }

 private:
  PureState state_;
  bool started_ = false;
  double probability_ = 1.0;
  std::vector<StepRecord> steps_;
};

inline ModeLabel primed(const ModeLabel& m) { return ModeLabel(m.str() + "'"); }

inline ModeLabel source_mode(std::size_t index) { return ModeLabel(std::to_string(index + 1)); }

/// Sign of amp(|V...V>)/amp(|H...H>) when the state is exactly those two terms
/// with a real ratio.
inline std::optional<int> two_term_sign(const PureState& s) {
  if (s.size() != 2) return std::nullopt;
  const auto& first = *s.terms().begin();
  const auto& last = *s.terms().rbegin();
  for (const auto& e : first.first.entries())
    if (e.occupation != Occupation{1, 0}) return std::nullopt;
  for (const auto& e : last.first.entries())
    if (e.occupation != Occupation{0, 1}) return std::nullopt;
  const Complex ratio = last.second / first.second;
  if (std::abs(ratio.imag()) > 1e-9 * std::abs(ratio)) return std::nullopt;
  return ratio.real() >= 0.0 ? 1 : -1;
}

}  // namespace detail

struct ChainOptions {
  Complex reflect_phase{1.0, 0.0};
  /// Apply sigma_z on the first arm when the chain ends with a minus sign.
  bool correct_sign = false;
};

/// n-photon chain: n sources, n-1 PBSs, n-1 heralds.
inline ProtocolResult chain_n(std::span<const SourceSpec> specs, const ChainOptions& options = {}) {
  if (specs.size() < 2) throw ProtocolError("chain needs at least two sources, got " + std::to_string(specs.size()));
  detail::ProtocolRun run;
  for (std::size_t i = 0; i < specs.size(); ++i) run.add_source(detail::source_mode(i), specs[i]);

  ModeLabel arm = detail::source_mode(0);
  for (std::size_t i = 1; i < specs.size(); ++i) {
    const ModeLabel incoming = detail::source_mode(i);
    PbsSpec spec{arm, incoming, detail::primed(arm), detail::primed(incoming), options.reflect_phase, false};
    run.pbs(spec);
    run.herald(spec.out_a);
    arm = spec.out_b;
  }

  const std::optional<int> sign = detail::two_term_sign(run.state());
  if (options.correct_sign && sign == -1) {
    const ModeLabel first = run.state().modes().front();  // copy: correct() replaces the state
    run.correct(first, PolarizationUnitary::pauli_z(), "sigma_z");
  }
  ProtocolResult result = std::move(run).finish();
  result.ghz_sign = sign;
  return result;
}

inline ProtocolResult chain_n(std::initializer_list<SourceSpec> specs, const ChainOptions& options = {}) {
  return chain_n(std::span<const SourceSpec>(specs.begin(), specs.size()), options);
}

/// Two sources, one PBS, one herald on 1'. Output on modes 1', 2'.
inline ProtocolResult entangle_two(const SourceSpec& s1, const SourceSpec& s2) {
  const std::array specs{s1, s2};
  return chain_n(specs);
}

/// Runs entangle_two on balanced sources and rotates mode 2' into the requested
/// Bell state (identity, sigma_z, sigma_x, or sigma_x sigma_z).
inline PureState make_bell(BellKind which) {
  PureState phi = entangle_two(SourceSpec::balanced(), SourceSpec::balanced()).heralded_state;
  const ModeLabel target = "2'";
  switch (which) {
    case BellKind::PhiPlus: return phi;
    case BellKind::PhiMinus: return local_unitary(phi, target, PolarizationUnitary::pauli_z());
    case BellKind::PsiPlus: return local_unitary(phi, target, PolarizationUnitary::pauli_x());
    case BellKind::PsiMinus:
      return local_unitary(phi, target, PolarizationUnitary::pauli_x() * PolarizationUnitary::pauli_z());
  }
  return phi;
}

namespace detail {

inline void require_pair_on_2_3(const PureState& pair) {
  if (pair.modes() != ModeSet{"2", "3"})
    throw ProtocolError("ghz_three needs a pair on modes {2, 3}, got " + describe(pair.modes()));
  for (const auto& [ket, amp] : pair.terms())
    if (photon_number(ket, "2") != 1 || photon_number(ket, "3") != 1)
      throw ProtocolError("ghz_three pair must hold one photon in each of modes 2 and 3, found " + ket.to_string());
}

}  // namespace detail

/// Source photon on mode 1 joins photon 2 of `pair` (modes 2, 3) on a PBS;
/// the herald watches 1'.
inline ProtocolResult ghz_three(const SourceSpec& s1, const PureState& pair) {
  detail::require_pair_on_2_3(pair);
  detail::ProtocolRun run;
  run.add_source("1", s1);
  run.add_state(normalize(pair).state, "pair 2 3");
  run.pbs(PbsSpec{"1", "2", "1'", "2'"});
  run.herald("1'");
  return std::move(run).finish();
}

// ---------------------------------------------------------------------------
// Protocol descriptions, closed forms and Monte Carlo

struct EntangleTwoProtocol {
  SourceSpec s1;
  SourceSpec s2;
};

struct GhzThreeProtocol {
  SourceSpec s1;
  PureState pair;
};

struct ChainProtocol {
  std::vector<SourceSpec> specs;
  ChainOptions options;
};

using ProtocolDescription = std::variant<EntangleTwoProtocol, GhzThreeProtocol, ChainProtocol>;

inline ProtocolResult run_protocol(const ProtocolDescription& protocol) {
  struct Visitor {
    ProtocolResult operator()(const EntangleTwoProtocol& p) const { return entangle_two(p.s1, p.s2); }
    ProtocolResult operator()(const GhzThreeProtocol& p) const { return ghz_three(p.s1, p.pair); }
    ProtocolResult operator()(const ChainProtocol& p) const { return chain_n(p.specs, p.options); }
  };
  return std::visit(Visitor{}, protocol);
}

/// Closed-form success probability; no state is simulated.
inline double success_probability_analytic(const ProtocolDescription& protocol) {
  struct Visitor {
    double operator()(const EntangleTwoProtocol& p) const {
      return std::norm(p.s1.alpha() * p.s2.alpha()) + std::norm(p.s1.beta() * p.s2.beta());
    }
    // Success needs photons 1 and 2 to share a polarization.
    double operator()(const GhzThreeProtocol& p) const {
      detail::require_pair_on_2_3(p.pair);
      double h2 = 0.0;
      double v2 = 0.0;
      for (const auto& [ket, amp] : p.pair.terms()) (ket.at("2").h == 1 ? h2 : v2) += std::norm(amp);
      return (std::norm(p.s1.alpha()) * h2 + std::norm(p.s1.beta()) * v2) / (h2 + v2);
    }
    // After each herald the state is a|H...H> + b|V...V>; only |a|^2, |b|^2 matter.
    double operator()(const ChainProtocol& p) const {
      if (p.specs.size() < 2) throw ProtocolError("unsupported protocol: chain needs n >= 2");
      double a2 = std::norm(p.specs[0].alpha());
      double b2 = std::norm(p.specs[0].beta());
      double total = 1.0;
      for (std::size_t k = 1; k < p.specs.size(); ++k) {
        const double ha = a2 * std::norm(p.specs[k].alpha());
        const double vb = b2 * std::norm(p.specs[k].beta());
        const double step = ha + vb;
        if (step == 0.0) return 0.0;
        total *= step;
        a2 = ha / step;
        b2 = vb / step;
      }
      return total;
    }
  };
  return std::visit(Visitor{}, protocol);
}

struct RateEstimate {
  std::uint64_t shots = 0;
  std::uint64_t successes = 0;
  double estimate = 0.0;
  double std_error = 0.0;
};

/// Samples a sequence of heralds with the given per-step success
/// probabilities; a shot succeeds when every herald fires. Deterministic in
/// (step_probabilities, shots, seed).
inline RateEstimate sample_heralds(std::span<const double> step_probabilities, std::uint64_t shots,
                                   std::uint64_t seed) {
  if (shots == 0) throw ProtocolError("Monte Carlo needs at least one shot");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::uint64_t successes = 0;
  for (std::uint64_t shot = 0; shot < shots; ++shot) {
    bool ok = true;
    for (double p : step_probabilities) {
      if (!(uniform(rng) < p)) {
        ok = false;
        break;
      }
    }
    if (ok) ++successes;
  }
  RateEstimate r;
  r.shots = shots;
  r.successes = successes;
  r.estimate = static_cast<double>(successes) / static_cast<double>(shots);
  r.std_error = std::sqrt(r.estimate * (1.0 - r.estimate) / static_cast<double>(shots));
  return r;
}

inline std::vector<double> herald_probabilities(const ProtocolResult& result) {
  std::vector<double> out;
  for (const auto& step : result.steps)
    if (step.kind == StepKind::Herald) out.push_back(step.probability);
  return out;
}

inline RateEstimate monte_carlo(const ProtocolDescription& protocol, std::uint64_t shots, std::uint64_t seed) {
  if (shots == 0) throw ProtocolError("Monte Carlo needs at least one shot");
  const auto probabilities = herald_probabilities(run_protocol(protocol));
  return sample_heralds(probabilities, shots, seed);
}

}  // namespace heraldlab
