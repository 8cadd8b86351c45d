#pragma once

// Single-photon quantum non-demolition measurement.
//
// Two descriptions of the same device are provided. `qndm_herald` is the ideal
// photon-number projector onto "exactly one photon in the cavity mode".
// `meter_qndm` models the atom-cavity meter explicitly: the meter state
// c_g|g> + c_d|d> has its |g> component phase-kicked by pi when the cavity
// holds one photon (net effect of a 2pi Rabi pulse, the excited level is not
// represented), and the meter is then read out in (|g> +- |d>)/sqrt(2). For
// c_g = c_d the minus outcome reproduces the projector exactly.
//
// `measure_polarization` is the destructive single-photon polarization
// measurement used by the purification round.

#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <type_traits>
#include <vector>

#include "heraldlab/fock.hpp"

namespace heraldlab {

enum class HeraldOutcome { Success, Failure };

inline const char* to_string(HeraldOutcome o) { return o == HeraldOutcome::Success ? "success" : "failure"; }

/// One branch of a heralding measurement. `post_state` is normalized and absent
/// when the branch has zero probability.
template <class State>
struct BasicHeraldResult {
  HeraldOutcome outcome = HeraldOutcome::Failure;
  std::optional<State> post_state;
  double probability = 0.0;
};

using HeraldResult = BasicHeraldResult<PureState>;
using MixedHeraldResult = BasicHeraldResult<DensityMatrix>;

template <class State>
struct HeraldBranches {
  BasicHeraldResult<State> success;
  BasicHeraldResult<State> failure;
};

template <class State>
struct Projection {
  State state;  // unnormalized kept part
  double probability = 0.0;
};

namespace detail {

inline double weight(const PureState& s) { return s.squared_norm(); }
inline double weight(const DensityMatrix& rho) { return rho.trace().real(); }

inline PureState normalized_state(const PureState& s) { return normalize(s).state; }
inline DensityMatrix normalized_state(const DensityMatrix& rho) { return normalize(rho).rho; }

// Applies the diagonal operator |k> -> factor(k) |k>.
template <class Factor>
PureState apply_diagonal(const PureState& s, Factor&& factor) {
  return transform(s, s.modes(), [&](const OccupationKet& ket) { return KetImage{{ket, factor(ket)}}; });
}

template <class Factor>
DensityMatrix apply_diagonal(const DensityMatrix& rho, Factor&& factor) {
  return conjugate(rho, rho.modes(), [&](const OccupationKet& ket) { return KetImage{{ket, factor(ket)}}; });
}

template <class State>
State keep_if_photons(const State& s, const ModeLabel& mode, unsigned n, bool keep_equal) {
  return apply_diagonal(s, [&](const OccupationKet& ket) {
    const bool equal = photon_number(ket, mode) == n;
    return Complex{equal == keep_equal ? 1.0 : 0.0, 0.0};
  });
}

template <class State>
double require_nonzero(const State& s) {
  const double w = weight(s);
  if (w <= kZeroNormTolerance * kZeroNormTolerance) throw ZeroNormError("measurement on a zero state");
  return w;
}

}  // namespace detail

/// Keeps the kets with exactly `n` photons in `mode`. The probability is
/// relative to the input's squared norm (or trace).
template <class State>
Projection<State> number_projector(const State& s, const ModeLabel& mode, unsigned n) {
  require_mode(s.modes(), mode);
  State kept = detail::keep_if_photons(s, mode, n, true);
  const double total = detail::weight(s);
  const double p = total > 0.0 ? detail::weight(kept) / total : 0.0;
  return {std::move(kept), p};
}

/// Ideal single-photon QNDM on `mode`: the success branch keeps exactly the
/// one-photon kets, the failure branch keeps the complement. Polarization
/// amplitudes are untouched.
template <class State>
HeraldBranches<State> qndm_herald(const State& s, const ModeLabel& mode) {
  require_mode(s.modes(), mode);
  const double total = detail::require_nonzero(s);
  HeraldBranches<State> out;
  out.success.outcome = HeraldOutcome::Success;
  out.failure.outcome = HeraldOutcome::Failure;

  State kept = detail::keep_if_photons(s, mode, 1, true);
  State rest = detail::keep_if_photons(s, mode, 1, false);
  out.success.probability = detail::weight(kept) / total;
  out.failure.probability = detail::weight(rest) / total;
  if (!kept.is_zero()) out.success.post_state = detail::normalized_state(kept);
  if (!rest.is_zero()) out.failure.post_state = detail::normalized_state(rest);
  return out;
}

// ---------------------------------------------------------------------------
// Atom-cavity meter model

enum class MultiPhotonModel {
  IdealNoShift,  // only n = 1 shifts the meter
  SqrtRabi,      // phase pi*sqrt(n) for every n
};

struct MeterSpec {
  Complex c_g{std::numbers::sqrt2 / 2, 0.0};
  Complex c_d{std::numbers::sqrt2 / 2, 0.0};
  MultiPhotonModel model = MultiPhotonModel::IdealNoShift;

  void validate() const {
    const double n = std::norm(c_g) + std::norm(c_d);
    if (std::abs(n - 1.0) > kTolerance)
      throw NormalizationError("meter state not normalized: |c_g|^2+|c_d|^2 = " + std::to_string(n));
  }

  /// True when the minus outcome is an exact one-photon projector.
  bool is_ideal_projector() const {
    return model == MultiPhotonModel::IdealNoShift && std::abs(c_g - c_d) <= kTolerance;
  }
};

enum class MeterOutcome { Plus, Minus };

inline const char* to_string(MeterOutcome o) { return o == MeterOutcome::Plus ? "plus" : "minus"; }

template <class State>
struct MeterBranch {
  MeterOutcome outcome = MeterOutcome::Plus;
  double probability = 0.0;
  std::optional<State> post_state;
};

/// Phase acquired by the |g> meter component for `n` cavity photons.
inline double meter_phase(unsigned n, MultiPhotonModel model) {
  if (model == MultiPhotonModel::SqrtRabi) return std::numbers::pi * std::sqrt(static_cast<double>(n));
  return n == 1 ? std::numbers::pi : 0.0;
}

/// Overlap <+-|m_n> of the readout state with the kicked meter.
inline Complex meter_amplitude(MeterOutcome outcome, unsigned n, const MeterSpec& meter) {
  const double sign = outcome == MeterOutcome::Plus ? 1.0 : -1.0;
  return (meter.c_g * std::polar(1.0, meter_phase(n, meter.model)) + sign * meter.c_d) / std::numbers::sqrt2;
}

/// Returns the plus and minus readout branches (in that order).
template <class State>
std::vector<MeterBranch<State>> meter_qndm(const State& s, const ModeLabel& cavity_mode, const MeterSpec& meter) {
  meter.validate();
  require_mode(s.modes(), cavity_mode);
  const double total = detail::require_nonzero(s);
  std::vector<MeterBranch<State>> out;
  for (MeterOutcome outcome : {MeterOutcome::Plus, MeterOutcome::Minus}) {
    State branch = detail::apply_diagonal(s, [&](const OccupationKet& ket) {
      return meter_amplitude(outcome, photon_number(ket, cavity_mode), meter);
    });
    MeterBranch<State> b;
    b.outcome = outcome;
    b.probability = detail::weight(branch) / total;
    if (!branch.is_zero()) b.post_state = detail::normalized_state(branch);
    out.push_back(std::move(b));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Destructive polarization measurement

enum class MeasurementBasis { HV, PlusMinus };

enum class PolarizationOutcome { H, V, Plus, Minus };

inline const char* to_string(MeasurementBasis b) { return b == MeasurementBasis::HV ? "hv" : "pm"; }

inline const char* to_string(PolarizationOutcome o) {
  switch (o) {
    case PolarizationOutcome::H: return "H";
    case PolarizationOutcome::V: return "V";
    case PolarizationOutcome::Plus: return "+";
    case PolarizationOutcome::Minus: return "-";
  }
  return "?";
}

template <class State>
struct MeasurementBranch {
  PolarizationOutcome outcome = PolarizationOutcome::H;
  double probability = 0.0;
  std::optional<State> post_state;  // measured mode removed
};

namespace detail {

/// <outcome|pol> for a single photon.
inline Complex basis_overlap(PolarizationOutcome outcome, const Occupation& occ) {
  const bool is_h = occ.h == 1;
  const double r = std::numbers::sqrt2 / 2;
  switch (outcome) {
    case PolarizationOutcome::H: return is_h ? 1.0 : 0.0;
    case PolarizationOutcome::V: return is_h ? 0.0 : 1.0;
    case PolarizationOutcome::Plus: return r;
    case PolarizationOutcome::Minus: return is_h ? r : -r;
  }
  return 0.0;
}

inline void require_single_photon(const OccupationKet& ket, const ModeLabel& mode) {
  if (photon_number(ket, mode) != 1)
    throw MeasurementError("polarization measurement of mode '" + mode.str() + "' needs exactly one photon, ket " +
                           ket.to_string() + " has " + std::to_string(photon_number(ket, mode)));
}

inline ModeSet without_mode(const ModeSet& modes, const ModeLabel& mode) {
  ModeSet out;
  for (const auto& m : modes)
    if (m != mode) out.push_back(m);
  return out;
}

inline KetImage measurement_image(const OccupationKet& ket, const ModeLabel& mode, PolarizationOutcome outcome) {
  require_single_photon(ket, mode);
  return {{ket.without(mode), basis_overlap(outcome, ket.at(mode))}};
}

inline PureState project_out(const PureState& s, const ModeLabel& mode, PolarizationOutcome outcome) {
  return transform(s, without_mode(s.modes(), mode),
                   [&](const OccupationKet& ket) { return measurement_image(ket, mode, outcome); });
}

inline DensityMatrix project_out(const DensityMatrix& rho, const ModeLabel& mode, PolarizationOutcome outcome) {
  return conjugate(rho, without_mode(rho.modes(), mode),
                   [&](const OccupationKet& ket) { return measurement_image(ket, mode, outcome); });
}

template <class State>
void require_single_photon_everywhere(const State& s, const ModeLabel& mode) {
  if constexpr (std::is_same_v<State, PureState>) {
    for (const auto& [ket, amp] : s.terms()) require_single_photon(ket, mode);
  } else {
    for (const auto& ket : s.support()) require_single_photon(ket, mode);
  }
}

}  // namespace detail

/// Born-rule branches of measuring the photon in `mode`; the mode is traced
/// out of each post-state.
template <class State>
std::vector<MeasurementBranch<State>> measure_polarization(const State& s, const ModeLabel& mode,
                                                           MeasurementBasis basis) {
  require_mode(s.modes(), mode);
  detail::require_single_photon_everywhere(s, mode);
  const double total = detail::require_nonzero(s);
  const auto outcomes = basis == MeasurementBasis::HV
                            ? std::array{PolarizationOutcome::H, PolarizationOutcome::V}
                            : std::array{PolarizationOutcome::Plus, PolarizationOutcome::Minus};
  std::vector<MeasurementBranch<State>> out;
  for (auto outcome : outcomes) {
    State branch = detail::project_out(s, mode, outcome);
    MeasurementBranch<State> b;
    b.outcome = outcome;
    b.probability = detail::weight(branch) / total;
    if (!branch.is_zero()) b.post_state = detail::normalized_state(branch);
    out.push_back(std::move(b));
  }
  return out;
}

}  // namespace heraldlab
