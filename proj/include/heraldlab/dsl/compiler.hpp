#pragma once

// Semantic validation of a parsed circuit and lowering to an executable
// pipeline.
//
// Preparations (mode, source, bell) are hoisted into a single "build sources"
// stage; pbs, qndm and measure become ordered steps. The validator tracks a
// static photon count per live mode where one is known, which is what lets it
// accept a polarization measurement only when the mode provably holds exactly
// one photon.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "heraldlab/dsl/ast.hpp"
#include "heraldlab/elements.hpp"
#include "heraldlab/protocols.hpp"
#include "heraldlab/qndm.hpp"

namespace heraldlab::dsl {

inline constexpr double kSourceTolerance = 1e-9;

struct PrepSource {
  ModeLabel mode;
  SourceSpec spec;
};

struct PrepMixed {
  ModeLabel mode;
  double f = 0.0;
};

struct PrepBell {
  BellKind kind = BellKind::PhiPlus;
  ModeLabel mode_a;
  ModeLabel mode_b;
};

struct PrepVacuum {
  ModeLabel mode;
};

using Preparation = std::variant<PrepSource, PrepMixed, PrepBell, PrepVacuum>;

struct PbsStep {
  PbsSpec spec;
};

struct HeraldStep {
  ModeLabel mode;
  std::optional<MeterSpec> meter;  // absent: ideal projector
};

struct MeasureStep {
  ModeLabel mode;
  MeasurementBasis basis = MeasurementBasis::HV;
};

struct PipelineStep {
  SourcePosition position;
  std::string text;  // canonical directive text
  std::variant<PbsStep, HeraldStep, MeasureStep> action;
};

struct CompiledTarget {
  std::string name;
  ModeSet modes;
  PureState state;  // normalized
};

struct CompiledPipeline {
  std::vector<Preparation> preparations;
  std::vector<PipelineStep> steps;
  std::optional<CompiledTarget> target;
  bool mixed = false;
  unsigned initial_photons = 0;
  ModeSet final_modes;

  /// "build sources" followed by one keyword per step.
  std::vector<std::string> stage_names() const {
    std::vector<std::string> names{"build sources"};
    for (const auto& s : steps) names.push_back(s.text.substr(0, s.text.find(' ')));
    return names;
  }

  /// Per-polarization occupation bound large enough for every reachable ket.
  unsigned occupation_bound() const { return std::max(kDefaultMaxOccupation, initial_photons); }
};

struct CompileResult {
  std::optional<CompiledPipeline> pipeline;
  std::vector<Diagnostic> errors;

  bool ok() const noexcept { return errors.empty() && pipeline.has_value(); }
};

inline std::string format_short(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", x);
  return buf;
}

namespace detail {

class Validator {
 public:
  CompileResult run(const CircuitAST& ast) {
    for (const auto& d : ast.directives) {
      pos_ = d.position;
      std::visit([this](const auto& body) { handle(body); }, d.body);
    }
    if (target_decl_) resolve_target();
    CompileResult result;
    result.errors = std::move(errors_);
    if (result.errors.empty()) {
      pipeline_.final_modes = live_modes();
      result.pipeline = std::move(pipeline_);
    }
    return result;
  }

 private:
  struct ModeInfo {
    std::optional<unsigned> photons;
    bool prepared = false;  // filled by a source or bell
  };

  struct PairInfo {
    ModeLabel partner;
    std::optional<unsigned> total;
  };

  void error(std::string message) { errors_.push_back({pos_, std::move(message)}); }

  bool known(const ModeLabel& m) const { return used_.count(m) > 0; }

  // Checks that `m` can be operated on; reports why not.
  bool require_live(const ModeLabel& m, const char* what) {
    if (live_.count(m)) return true;
    if (measured_.count(m)) {
      error(std::string(what) + " uses mode '" + m.str() + "' after it was measured");
    } else if (consumed_.count(m)) {
      error(std::string(what) + " uses mode '" + m.str() + "', which was already consumed by a pbs");
    } else {
      error(std::string(what) + " references undeclared mode '" + m.str() + "'");
    }
    return false;
  }

  bool introduce(const ModeLabel& m, const char* what) {
    if (known(m)) {
      error(std::string(what) + " redeclares mode '" + m.str() + "'");
      return false;
    }
    used_.insert(m);
    return true;
  }

  // A source may fill a mode previously declared as vacuum.
  bool fill(const ModeLabel& m, const char* what) {
    auto it = live_.find(m);
    if (it != live_.end() && !it->second.prepared) {
      if (!pipeline_.steps.empty()) {
        error(std::string(what) + " fills vacuum mode '" + m.str() + "' after circuit steps have started");
        return false;
      }
      std::erase_if(pipeline_.preparations, [&](const Preparation& p) {
        const auto* v = std::get_if<PrepVacuum>(&p);
        return v && v->mode == m;
      });
      it->second = {1u, true};
      return true;
    }
    if (it != live_.end() || known(m)) {
      error(std::string(what) + " redeclares mode '" + m.str() + "'");
      return false;
    }
    used_.insert(m);
    live_[m] = {1u, true};
    return true;
  }

  void handle(const ModeDecl& d) {
    for (const auto& m : d.labels) {
      if (!introduce(m, "mode")) continue;
      live_[m] = {0u, false};
      pipeline_.preparations.push_back(PrepVacuum{m});
    }
  }

  void handle(const SourceDecl& d) {
    const Complex a = d.alpha.value();
    const Complex b = d.beta.value();
    const double n = std::norm(a) + std::norm(b);
    // The mode is declared either way so one bad source does not cascade.
    if (!fill(d.mode, "source")) return;
    if (std::abs(n - 1.0) > kSourceTolerance) {
      error("unnormalized source: |\xCE\xB1|\xC2\xB2+|\xCE\xB2|\xC2\xB2 = " + format_short(n));
      return;
    }
    const double scale = 1.0 / std::sqrt(n);
    pipeline_.preparations.push_back(PrepSource{d.mode, SourceSpec(a * scale, b * scale)});
    pipeline_.initial_photons += 1;
  }

  void handle(const MixedSourceDecl& d) {
    const double f = d.f.value();
    if (!fill(d.mode, "source")) return;
    if (!(f >= 0.0 && f <= 1.0)) {
      error("mixed source fraction must lie in [0, 1], got " + format_short(f));
      return;
    }
    pipeline_.preparations.push_back(PrepMixed{d.mode, f});
    pipeline_.mixed = true;
    pipeline_.initial_photons += 1;
  }

  void handle(const BellDecl& d) {
    if (d.mode_a == d.mode_b) {
      error("bell needs two distinct modes, got '" + d.mode_a.str() + "' twice");
      return;
    }
    const bool ok_a = fill(d.mode_a, "bell");
    const bool ok_b = fill(d.mode_b, "bell");
    if (!ok_a || !ok_b) return;
    pipeline_.preparations.push_back(PrepBell{d.kind, d.mode_a, d.mode_b});
    pipeline_.initial_photons += 2;
  }

  void handle(const PbsDecl& d) {
    bool ok = require_live(d.in_a, "pbs");
    ok = require_live(d.in_b, "pbs") && ok;
    if (d.in_a == d.in_b) {
      error("pbs inputs must be distinct, got '" + d.in_a.str() + "' twice");
      ok = false;
    }
    if (d.out_a == d.out_b) {
      error("pbs outputs must be distinct, got '" + d.out_a.str() + "' twice");
      ok = false;
    }
    for (const auto* out : {&d.out_a, &d.out_b}) {
      if (known(*out)) {
        error("pbs output label '" + out->str() + "' is already in use");
        ok = false;
      }
    }
    Complex phase{1.0, 0.0};
    if (d.reflect_phase) {
      phase = d.reflect_phase->value();
      if (std::abs(std::abs(phase) - 1.0) > kSourceTolerance) {
        error("pbs phase must have unit modulus, got |phase| = " + format_short(std::abs(phase)));
        ok = false;
      }
      phase /= std::abs(phase);
    }
    if (!ok) return;

    const auto na = live_[d.in_a].photons;
    const auto nb = live_[d.in_b].photons;
    std::optional<unsigned> total;
    if (na && nb) total = *na + *nb;
    for (const auto& m : {d.in_a, d.in_b}) {
      live_.erase(m);
      pairs_.erase(m);
      consumed_.insert(m);
    }
    used_.insert(d.out_a);
    used_.insert(d.out_b);
    // Zero photons in, zero photons out on both sides.
    const std::optional<unsigned> each = total == 0u ? std::optional<unsigned>(0u) : std::nullopt;
    live_[d.out_a] = {each, true};
    live_[d.out_b] = {each, true};
    pairs_[d.out_a] = {d.out_b, total};
    pairs_[d.out_b] = {d.out_a, total};
    pipeline_.steps.push_back({pos_, print_directive(d), PbsStep{PbsSpec{d.in_a, d.in_b, d.out_a, d.out_b, phase, false}}});
  }

  void handle(const QndmDecl& d) {
    if (!require_live(d.mode, "qndm")) return;
    std::optional<MeterSpec> meter;
    if (d.model || d.c_g || d.c_d) {
      MeterSpec m;
      if (d.model) m.model = *d.model;
      if (d.c_g) m.c_g = d.c_g->value();
      if (d.c_d) m.c_d = d.c_d->value();
      const double n = std::norm(m.c_g) + std::norm(m.c_d);
      if (std::abs(n - 1.0) > kSourceTolerance) {
        error("unnormalized meter: |cg|\xC2\xB2+|cd|\xC2\xB2 = " + format_short(n));
        return;
      }
      m.c_g /= std::sqrt(n);
      m.c_d /= std::sqrt(n);
      meter = m;
    }
    const bool exact = !meter || meter->is_ideal_projector();
    if (exact) {
      live_[d.mode].photons = 1u;
      if (auto it = pairs_.find(d.mode); it != pairs_.end()) {
        const auto& [partner, total] = it->second;
        if (total && *total >= 1 && live_.count(partner)) live_[partner].photons = *total - 1;
      }
    }
    pipeline_.steps.push_back({pos_, print_directive(d), HeraldStep{d.mode, meter}});
  }

  void handle(const MeasureDecl& d) {
    if (!require_live(d.mode, "measure")) return;
    const auto photons = live_[d.mode].photons;
    if (photons != 1u) {
      error("measure needs exactly one photon in mode '" + d.mode.str() +
            "', which is not statically guaranteed (herald it first)");
      return;
    }
    live_.erase(d.mode);
    if (auto it = pairs_.find(d.mode); it != pairs_.end()) {
      pairs_.erase(it->second.partner);
      pairs_.erase(it);
    }
    measured_.insert(d.mode);
    pipeline_.mixed = true;
    pipeline_.steps.push_back({pos_, print_directive(d), MeasureStep{d.mode, d.basis}});
  }

  void handle(const TargetDecl& d) {
    if (target_decl_) {
      error("duplicate target (first declared at line " + std::to_string(target_pos_.line) + ")");
      return;
    }
    target_decl_ = d;
    target_pos_ = pos_;
  }

  ModeSet live_modes() const {
    ModeSet modes;
    for (const auto& [m, info] : live_) modes.push_back(m);
    return canonical_modes(modes);
  }

  void resolve_target() {
    pos_ = target_pos_;
    const TargetDecl& d = *target_decl_;
    const ModeSet live = live_modes();
    const unsigned bound = std::max(kDefaultMaxOccupation, pipeline_.initial_photons);
    try {
      if (d.name == "state") {
        resolve_explicit(d, bound);
        return;
      }
      ModeSet modes = d.modes.empty() ? live : d.modes;
      for (const auto& m : modes) {
        if (!live_.count(m)) {
          error("target mode '" + m.str() + "' is not live at the end of the circuit");
          return;
        }
      }
      std::size_t wanted = 0;
      PureState state;
      if (auto kind = parse_bell_kind(d.name)) {
        wanted = 2;
        if (modes.size() == wanted) state = bell_state(*kind, modes[0], modes[1]);
      } else {
        wanted = static_cast<std::size_t>(std::stoul(d.name.substr(3)));
        if (wanted == 0) {
          error("target '" + d.name + "' needs at least one mode");
          return;
        }
        if (modes.size() == wanted) state = ghz_state(modes);
      }
      if (modes.size() != wanted) {
        error("target '" + d.name + "' needs " + std::to_string(wanted) + " modes, got " +
              std::to_string(modes.size()) + " " + describe(modes));
        return;
      }
      pipeline_.target = CompiledTarget{d.name, canonical_modes(modes), widen(state, bound)};
    } catch (const Error& e) {
      error(std::string("invalid target: ") + e.what());
    } catch (const std::out_of_range&) {
      error("invalid target '" + d.name + "'");
    }
  }

  void resolve_explicit(const TargetDecl& d, unsigned bound) {
    ModeSet modes;
    for (const auto& e : d.terms.front().ket) modes.push_back(e.mode);
    modes = canonical_modes(modes);
    for (const auto& m : modes) {
      if (!live_.count(m)) {
        error("target mode '" + m.str() + "' is not live at the end of the circuit");
        return;
      }
    }
    PureState state(modes, bound);
    for (const auto& term : d.terms) state.add(OccupationKet(term.ket), term.amplitude.value());
    if (state.norm() <= kZeroNormTolerance) {
      error("target state has zero norm");
      return;
    }
    pipeline_.target = CompiledTarget{"state", modes, normalize(state).state};
  }

  static PureState widen(const PureState& s, unsigned bound) {
    PureState out(s.modes(), bound);
    for (const auto& [ket, amp] : s.terms()) out.add(ket, amp);
    return out;
  }

  SourcePosition pos_;
  std::vector<Diagnostic> errors_;
  CompiledPipeline pipeline_;
  std::map<ModeLabel, ModeInfo> live_;
  std::map<ModeLabel, PairInfo> pairs_;
  std::set<ModeLabel> used_;
  std::set<ModeLabel> consumed_;
  std::set<ModeLabel> measured_;
  std::optional<TargetDecl> target_decl_;
  SourcePosition target_pos_;
};

}  // namespace detail

inline CompileResult validate(const CircuitAST& ast) { return detail::Validator{}.run(ast); }

}  // namespace heraldlab::dsl
