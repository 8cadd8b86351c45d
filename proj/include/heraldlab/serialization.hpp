#pragma once

// Canonical JSON forms of kets, states and density matrices.
//
//   ket:   {"1": "H", "2'": "HV"}
//   state: [{"ket": {...}, "re": 0.5, "im": 0.0}, ...]   (canonical ket order)
//   rho:   [{"row": {...}, "col": {...}, "re": ..., "im": ...}, ...]

#include <json.hpp>

#include "heraldlab/fock.hpp"

namespace heraldlab {

inline nlohmann::ordered_json ket_to_json(const OccupationKet& ket) {
  nlohmann::ordered_json out = nlohmann::ordered_json::object();
  for (const auto& e : ket.entries()) out[e.mode.str()] = e.occupation.to_string();
  return out;
}

inline OccupationKet ket_from_json(const nlohmann::ordered_json& j) {
  std::vector<ModeOccupation> entries;
  for (const auto& [mode, occ] : j.items())
    entries.push_back({ModeLabel(mode), Occupation::parse(occ.get<std::string>())});
  return OccupationKet(std::move(entries));
}

inline nlohmann::ordered_json to_json(const PureState& s) {
  nlohmann::ordered_json out = nlohmann::ordered_json::array();
  for (const auto& [ket, amp] : s.terms())
    out.push_back({{"ket", ket_to_json(ket)}, {"re", amp.real()}, {"im", amp.imag()}});
  return out;
}

inline nlohmann::ordered_json to_json(const DensityMatrix& rho) {
  nlohmann::ordered_json out = nlohmann::ordered_json::array();
  for (const auto& [idx, value] : rho.entries())
    out.push_back({{"row", ket_to_json(idx.first)},
                   {"col", ket_to_json(idx.second)},
                   {"re", value.real()},
                   {"im", value.imag()}});
  return out;
}

inline PureState pure_state_from_json(const nlohmann::ordered_json& j, const ModeSet& modes,
                                      unsigned max_occupation = kDefaultMaxOccupation) {
  PureState s(modes, max_occupation);
  for (const auto& term : j)
    s.add(ket_from_json(term.at("ket")), Complex{term.at("re").get<double>(), term.at("im").get<double>()});
  return s;
}

}  // namespace heraldlab
