#pragma once

// Purification of mixed single-photon polarization states.
//
// One round: two photons drawn from the ensemble meet on a PBS, the two-mode
// case (one photon per output) is post-selected, the photon in 2' is measured
// in the +/- basis, and 1' is corrected (identity on +, sigma_z on -). For the
// diagonal input f|H><H| + (1-f)|V><V| the surviving photon has
// f' = f^2 / (f^2 + (1-f)^2).

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "heraldlab/elements.hpp"
#include "heraldlab/fock.hpp"
#include "heraldlab/qndm.hpp"

namespace heraldlab {

/// f -> f^2 / (f^2 + (1-f)^2). Fixed points 0, 1/2, 1.
inline double f_update(double f) {
  if (!(f >= 0.0 && f <= 1.0)) throw Error("fraction f must lie in [0, 1], got " + std::to_string(f));
  const double h = f * f;
  const double v = (1.0 - f) * (1.0 - f);
  return h / (h + v);
}

/// f|H><H| + (1-f)|V><V| on one mode.
inline DensityMatrix diagonal_photon_state(double f, const ModeLabel& mode = "1") {
  if (!(f >= 0.0 && f <= 1.0)) throw Error("fraction f must lie in [0, 1], got " + std::to_string(f));
  DensityMatrix rho(ModeSet{mode});
  const OccupationKet h({{mode, Occupation{1, 0}}});
  const OccupationKet v({{mode, Occupation{0, 1}}});
  rho.add(h, h, f);
  rho.add(v, v, 1.0 - f);
  return rho;
}

/// Population of |H> in a one-photon, one-mode density matrix.
inline double h_fraction(const DensityMatrix& rho) {
  if (rho.modes().size() != 1) throw ModeError("h_fraction needs a single-mode density matrix");
  const OccupationKet h({{rho.modes().front(), Occupation{1, 0}}});
  return rho.entry(h, h).real();
}

struct PurificationBranch {
  PolarizationOutcome outcome = PolarizationOutcome::Plus;
  double probability = 0.0;
  DensityMatrix state;  // corrected state of mode 1'
};

struct RoundReport {
  double input_f = 0.0;
  double post_selection_probability = 0.0;
  std::vector<PurificationBranch> outcome_branches;
  /// Branch-averaged corrected output on mode 1'.
  DensityMatrix output_state;
  double output_f = 0.0;
  /// Surviving photons per input photon: two inputs per attempt.
  double yield_fraction = 0.0;
};

namespace detail {

inline void require_one_photon_state(const DensityMatrix& rho) {
  if (rho.modes().size() != 1)
    throw InvalidDensityMatrixError("purification input must be a single-mode state, got modes " +
                                    describe(rho.modes()));
  for (const auto& ket : rho.support())
    if (ket.total_photons() != 1)
      throw InvalidDensityMatrixError("purification input must hold exactly one photon, found " + ket.to_string());
  rho.validate();
}

struct PostSelectedPair {
  DensityMatrix rho;  // normalized two-mode state on 1', 2'
  double probability = 0.0;
};

inline PostSelectedPair post_select_pair(const DensityMatrix& rho) {
  require_one_photon_state(rho);
  const ModeLabel& mode = rho.modes().front();
  DensityMatrix pair = tensor(relabel(rho, mode, "1"), relabel(rho, mode, "2"));
  DensityMatrix mixed = pbs_channel(pair, PbsSpec{"1", "2", "1'", "2'"});
  auto kept = number_projector(mixed, "1'", 1);
  if (kept.state.is_zero() || kept.probability <= 0.0)
    throw ProtocolError("purification round has zero post-selection probability");
  return {normalize(kept.state).rho, kept.probability};
}

}  // namespace detail

/// Normalized two-mode state after the PBS and two-mode post-selection, before
/// the +/- measurement.
inline DensityMatrix entangled_mixture_check(const DensityMatrix& rho) { return detail::post_select_pair(rho).rho; }

inline RoundReport purify_round(const DensityMatrix& rho) {
  auto selected = detail::post_select_pair(rho);
  RoundReport report;
  report.input_f = h_fraction(rho);
  report.post_selection_probability = selected.probability;
  report.yield_fraction = selected.probability / 2.0;

  DensityMatrix averaged(ModeSet{"1'"});
  for (auto& branch : measure_polarization(selected.rho, "2'", MeasurementBasis::PlusMinus)) {
    if (!branch.post_state) continue;
    DensityMatrix corrected = branch.outcome == PolarizationOutcome::Minus
                                  ? local_unitary(*branch.post_state, "1'", PolarizationUnitary::pauli_z())
                                  : *branch.post_state;
    for (const auto& [idx, value] : corrected.entries()) averaged.add(idx.first, idx.second, branch.probability * value);
    report.outcome_branches.push_back({branch.outcome, branch.probability, std::move(corrected)});
  }
  report.output_state = std::move(averaged);
  report.output_f = h_fraction(report.output_state);
  return report;
}

struct TrajectoryRow {
  int round = 0;
  double f = 0.0;
  std::optional<double> selection_probability;  // absent for round 0
  double cumulative_yield = 1.0;
};

struct Trajectory {
  std::vector<TrajectoryRow> rows;
  bool non_purifying = false;  // f0 <= 1/2: the fraction cannot grow
};

/// Runs `rounds` exact purification rounds starting from the diagonal state
/// with fraction f0.
inline Trajectory iterate(double f0, int rounds) {
  if (!(f0 >= 0.0 && f0 <= 1.0)) throw Error("initial fraction must lie in [0, 1], got " + std::to_string(f0));
  if (rounds < 0) throw Error("rounds must be non-negative");
  Trajectory t;
  t.non_purifying = f0 <= 0.5;
  t.rows.push_back({0, f0, std::nullopt, 1.0});
  DensityMatrix rho = diagonal_photon_state(f0);
  double yield = 1.0;
  for (int k = 1; k <= rounds; ++k) {
    RoundReport r = purify_round(rho);
    yield *= r.yield_fraction;
    t.rows.push_back({k, r.output_f, r.post_selection_probability, yield});
    rho = std::move(r.output_state);
  }
  return t;
}

}  // namespace heraldlab
