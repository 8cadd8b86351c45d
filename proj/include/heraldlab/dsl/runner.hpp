#pragma once

// Executes a compiled pipeline exactly. Heralds keep their success branch and
// record every branch probability; polarization measurements continue with
// the outcome-averaged state. When a herald has zero probability the remaining
// steps are reported as skipped and there is no final state.

#include <cstdint>
#include <optional>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include <json.hpp>

#include "heraldlab/dsl/compiler.hpp"
#include "heraldlab/purification.hpp"
#include "heraldlab/qndm.hpp"
#include "heraldlab/serialization.hpp"

namespace heraldlab::dsl {

struct RunOptions {
  std::optional<std::uint64_t> shots;
  std::uint64_t seed = 0;
};

struct BranchRecord {
  std::string outcome;
  double probability = 0.0;
};

struct StepReport {
  std::string stage;
  std::string directive;
  SourcePosition position;
  bool skipped = false;
  double probability = 1.0;  // conditional on reaching the step
  std::optional<std::string> herald;  // "projector" or "meter"
  std::vector<BranchRecord> branches;
};

using SimState = std::variant<PureState, DensityMatrix>;

struct RunReport {
  bool mixed = false;
  unsigned photons = 0;
  std::vector<StepReport> steps;
  double success_probability = 1.0;
  std::optional<SimState> final_state;
  std::optional<CompiledTarget> target;
  std::optional<double> fidelity;
  std::optional<RateEstimate> monte_carlo;
  std::uint64_t seed = 0;

  ModeSet final_modes() const {
    if (!final_state) return {};
    return std::visit([](const auto& s) { return s.modes(); }, *final_state);
  }

  nlohmann::ordered_json to_json() const {
    using nlohmann::ordered_json;
    ordered_json j;
    j["mixed"] = mixed;
    j["photons"] = photons;
    ordered_json steps_json = ordered_json::array();
    for (const auto& s : steps) {
      ordered_json e;
      e["stage"] = s.stage;
      if (!s.directive.empty()) {
        e["directive"] = s.directive;
        e["line"] = s.position.line;
      }
      if (s.skipped) {
        e["skipped"] = true;
      } else {
        e["probability"] = s.probability;
      }
      if (s.herald) e["herald"] = *s.herald;
      if (!s.branches.empty()) {
        ordered_json b = ordered_json::array();
        for (const auto& br : s.branches) b.push_back({{"outcome", br.outcome}, {"probability", br.probability}});
        e["branches"] = std::move(b);
      }
      steps_json.push_back(std::move(e));
    }
    j["steps"] = std::move(steps_json);
    j["success_probability"] = success_probability;
    ordered_json modes = ordered_json::array();
    for (const auto& m : final_modes()) modes.push_back(m.str());
    j["final_modes"] = std::move(modes);
    if (!final_state) {
      j["final_state"] = nullptr;
    } else if (const auto* pure = std::get_if<PureState>(&*final_state)) {
      j["final_state"] = {{"representation", "pure"}, {"terms", heraldlab::to_json(*pure)}};
    } else {
      j["final_state"] = {{"representation", "density"},
                          {"entries", heraldlab::to_json(std::get<DensityMatrix>(*final_state))}};
    }
    if (target) {
      ordered_json tm = ordered_json::array();
      for (const auto& m : target->modes) tm.push_back(m.str());
      j["target"] = {{"name", target->name}, {"modes", std::move(tm)}};
    } else {
      j["target"] = nullptr;
    }
    j["fidelity"] = fidelity ? ordered_json(*fidelity) : ordered_json(nullptr);
    if (monte_carlo) {
      j["monte_carlo"] = {{"shots", monte_carlo->shots},
                          {"seed", seed},
                          {"successes", monte_carlo->successes},
                          {"estimate", monte_carlo->estimate},
                          {"std_error", monte_carlo->std_error}};
    }
    return j;
  }
};

namespace detail {

inline PureState widen(const PureState& s, unsigned bound) {
  PureState out(s.modes(), bound);
  for (const auto& [ket, amp] : s.terms()) out.add(ket, amp);
  return out;
}

inline DensityMatrix widen(const DensityMatrix& rho, unsigned bound) {
  DensityMatrix out(rho.modes(), bound);
  for (const auto& [idx, value] : rho.entries()) out.add(idx.first, idx.second, value);
  return out;
}

inline PureState prepare_pure(const Preparation& p, unsigned bound) {
  struct Visitor {
    unsigned bound;
    PureState operator()(const PrepSource& s) const { return widen(make_single_photon(s.mode, s.spec), bound); }
    PureState operator()(const PrepBell& b) const { return widen(bell_state(b.kind, b.mode_a, b.mode_b), bound); }
    PureState operator()(const PrepVacuum& v) const {
      PureState s(ModeSet{v.mode}, bound);
      s.add(OccupationKet({{v.mode, Occupation{0, 0}}}), 1.0);
      return s;
    }
    PureState operator()(const PrepMixed&) const { throw Error("internal inconsistency: mixed source in a pure run"); }
  };
  return std::visit(Visitor{bound}, p);
}

inline DensityMatrix prepare_mixed(const Preparation& p, unsigned bound) {
  if (const auto* m = std::get_if<PrepMixed>(&p)) return widen(diagonal_photon_state(m->f, m->mode), bound);
  return to_density(prepare_pure(p, bound));
}

inline SimState build_initial(const CompiledPipeline& pipeline) {
  const unsigned bound = pipeline.occupation_bound();
  if (pipeline.preparations.empty()) return PureState::scalar(1.0);
  if (pipeline.mixed) {
    DensityMatrix rho = prepare_mixed(pipeline.preparations.front(), bound);
    for (std::size_t i = 1; i < pipeline.preparations.size(); ++i)
      rho = tensor(rho, prepare_mixed(pipeline.preparations[i], bound));
    return rho;
  }
  PureState s = prepare_pure(pipeline.preparations.front(), bound);
  for (std::size_t i = 1; i < pipeline.preparations.size(); ++i)
    s = tensor(s, prepare_pure(pipeline.preparations[i], bound));
  return s;
}

inline DensityMatrix as_density(const SimState& s) {
  if (const auto* pure = std::get_if<PureState>(&s)) return to_density(*pure);
  return std::get<DensityMatrix>(s);
}

// Returns false when the success branch vanished.
inline bool apply_step(const PipelineStep& step, SimState& state, StepReport& report) {
  if (const auto* pbs = std::get_if<PbsStep>(&step.action)) {
    state = std::visit(
        [&](const auto& s) -> SimState {
          if constexpr (std::is_same_v<std::decay_t<decltype(s)>, PureState>) {
            return pbs_apply(s, pbs->spec);
          } else {
            return pbs_channel(s, pbs->spec);
          }
        },
        state);
    return true;
  }
  if (const auto* herald = std::get_if<HeraldStep>(&step.action)) {
    return std::visit(
        [&](const auto& s) -> bool {
          using State = std::decay_t<decltype(s)>;
          std::optional<State> next;
          if (!herald->meter) {
            report.herald = "projector";
            auto branches = qndm_herald(s, herald->mode);
            report.branches = {{"success", branches.success.probability}, {"failure", branches.failure.probability}};
            report.probability = branches.success.probability;
            next = std::move(branches.success.post_state);
          } else {
            report.herald = "meter";
            auto branches = meter_qndm(s, herald->mode, *herald->meter);
            for (const auto& b : branches) report.branches.push_back({to_string(b.outcome), b.probability});
            report.probability = branches[1].probability;
            next = std::move(branches[1].post_state);
          }
          if (!next) {
            report.probability = 0.0;
            return false;
          }
          state = std::move(*next);
          return true;
        },
        state);
  }
  const auto& measure = std::get<MeasureStep>(step.action);
  DensityMatrix rho = as_density(state);
  ModeSet rest;
  for (const auto& m : rho.modes())
    if (m != measure.mode) rest.push_back(m);
  DensityMatrix averaged(rest, rho.max_occupation());
  for (const auto& b : measure_polarization(rho, measure.mode, measure.basis)) {
    report.branches.push_back({to_string(b.outcome), b.probability});
    if (!b.post_state) continue;
    for (const auto& [idx, value] : b.post_state->entries()) averaged.add(idx.first, idx.second, b.probability * value);
  }
  state = std::move(averaged);
  return true;
}

inline double target_fidelity(const SimState& state, const CompiledTarget& target) {
  if (const auto* pure = std::get_if<PureState>(&state); pure && pure->modes() == target.modes)
    return fidelity(*pure, target.state);
  return fidelity_pure(partial_trace(as_density(state), target.modes), target.state);
}

}  // namespace detail

inline RunReport run(const CompiledPipeline& pipeline, const RunOptions& options = {}) {
  RunReport report;
  report.mixed = pipeline.mixed;
  report.photons = pipeline.initial_photons;
  report.target = pipeline.target;
  report.seed = options.seed;

  SimState state = detail::build_initial(pipeline);
  report.steps.push_back({"build sources", "", {}, false, 1.0, std::nullopt, {}});

  bool alive = true;
  std::vector<double> herald_probabilities;
  for (const auto& step : pipeline.steps) {
    StepReport sr;
    sr.stage = step.text.substr(0, step.text.find(' '));
    sr.directive = step.text;
    sr.position = step.position;
    if (!alive) {
      sr.skipped = true;
      report.steps.push_back(std::move(sr));
      continue;
    }
    alive = detail::apply_step(step, state, sr);
    if (std::holds_alternative<HeraldStep>(step.action)) {
      herald_probabilities.push_back(sr.probability);
      report.success_probability *= sr.probability;
    }
    report.steps.push_back(std::move(sr));
  }
  if (!alive) report.success_probability = 0.0;

  if (alive) {
    report.final_state = state;
    if (pipeline.target) report.fidelity = detail::target_fidelity(state, *pipeline.target);
  }
  if (options.shots) report.monte_carlo = sample_heralds(herald_probabilities, *options.shots, options.seed);
  return report;
}

}  // namespace heraldlab::dsl
