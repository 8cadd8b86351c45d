#pragma once

// Linear-optical elements: the polarizing beam splitter, local polarization
// unitaries (wave plates) and phase shifters.

#include <array>
#include <cmath>
#include <numbers>
#include <string>

#include "heraldlab/fock.hpp"

namespace heraldlab {

/// Polarizing beam splitter wiring. H is transmitted, V is reflected:
///
///   H of in_a -> out_b      H of in_b -> out_a
///   V of in_a -> out_a      V of in_b -> out_b   (each V picks up reflect_phase)
///
/// With inputs "1", "2" and outputs "1'", "2'" this reproduces
/// |chi1>_1 |chi2>_2 -> a1 a2 |H>|H> + b1 b2 |V>|V> + a1 b2 |0>|HV> + a2 b1 |HV>|0>.
/// `swap_outputs` exchanges the roles of out_a and out_b.
struct PbsSpec {
  ModeLabel in_a;
  ModeLabel in_b;
  ModeLabel out_a;
  ModeLabel out_b;
  Complex reflect_phase{1.0, 0.0};
  bool swap_outputs = false;

  void validate() const {
    const ModeSet labels{in_a, in_b, out_a, out_b};
    try {
      (void)canonical_modes(labels);
    } catch (const ModeError&) {
      throw ModeError("PBS needs four distinct labels, got " + in_a.str() + ", " + in_b.str() + " -> " +
                      out_a.str() + ", " + out_b.str());
    }
    if (std::abs(std::abs(reflect_phase) - 1.0) > kTolerance)
      throw NonUnitaryError("PBS reflection phase must have unit modulus");
  }
};

namespace detail {

inline Complex integer_power(Complex base, unsigned exponent) {
  Complex out{1.0, 0.0};
  for (unsigned i = 0; i < exponent; ++i) out *= base;
  return out;
}

inline ModeSet pbs_output_modes(const ModeSet& modes, const PbsSpec& spec) {
  spec.validate();
  require_mode(modes, spec.in_a);
  require_mode(modes, spec.in_b);
  ModeSet out;
  for (const auto& m : modes) {
    if (m == spec.in_a || m == spec.in_b) continue;
    if (m == spec.out_a || m == spec.out_b)
      throw ModeError("PBS output label '" + m.str() + "' is already in use");
    out.push_back(m);
  }
  out.push_back(spec.out_a);
  out.push_back(spec.out_b);
  return out;
}

// The PBS permutes the four single-photon modes, so each input occupation ket
// maps onto exactly one output ket.
inline KetImage pbs_ket_image(const OccupationKet& ket, const PbsSpec& spec) {
  const Occupation a = ket.at(spec.in_a);
  const Occupation b = ket.at(spec.in_b);
  const ModeLabel& out_a = spec.swap_outputs ? spec.out_b : spec.out_a;
  const ModeLabel& out_b = spec.swap_outputs ? spec.out_a : spec.out_b;
  const Occupation new_a{b.h, a.v};
  const Occupation new_b{a.h, b.v};
  const Complex phase = integer_power(spec.reflect_phase, a.v + b.v);
  return {{ket.without(spec.in_a).without(spec.in_b).with(out_a, new_a).with(out_b, new_b), phase}};
}

}  // namespace detail

inline PureState pbs_apply(const PureState& s, const PbsSpec& spec) {
  return transform(s, detail::pbs_output_modes(s.modes(), spec),
                   [&](const OccupationKet& ket) { return detail::pbs_ket_image(ket, spec); });
}

inline DensityMatrix pbs_channel(const DensityMatrix& rho, const PbsSpec& spec) {
  return conjugate(rho, detail::pbs_output_modes(rho.modes(), spec),
                   [&](const OccupationKet& ket) { return detail::pbs_ket_image(ket, spec); });
}

/// 2x2 unitary acting on the (H, V) amplitudes of one spatial mode:
/// a^dag_H -> u(0,0) a^dag_H + u(1,0) a^dag_V, a^dag_V -> u(0,1) a^dag_H + u(1,1) a^dag_V.
class PolarizationUnitary {
 public:
  PolarizationUnitary(Complex u00, Complex u01, Complex u10, Complex u11) : m_{u00, u01, u10, u11} {
    const Complex d00 = std::norm(u00) + std::norm(u10);
    const Complex d11 = std::norm(u01) + std::norm(u11);
    const Complex off = std::conj(u00) * u01 + std::conj(u10) * u11;
    if (std::abs(d00 - 1.0) > kTolerance || std::abs(d11 - 1.0) > kTolerance || std::abs(off) > kTolerance)
      throw NonUnitaryError("polarization matrix is not unitary");
  }

  static PolarizationUnitary identity() { return {1.0, 0.0, 0.0, 1.0}; }
  static PolarizationUnitary pauli_x() { return {0.0, 1.0, 1.0, 0.0}; }
  static PolarizationUnitary pauli_y() { return {0.0, Complex{0, -1}, Complex{0, 1}, 0.0}; }
  static PolarizationUnitary pauli_z() { return {1.0, 0.0, 0.0, -1.0}; }

  /// Half-wave plate with fast axis at `theta` radians from H.
  static PolarizationUnitary half_wave_plate(double theta) {
    const double c = std::cos(2 * theta);
    const double s = std::sin(2 * theta);
    return {c, s, s, -c};
  }

  /// Quarter-wave plate with fast axis at `theta` radians from H.
  static PolarizationUnitary quarter_wave_plate(double theta) {
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    const Complex i{0.0, 1.0};
    return {c * c + i * s * s, (1.0 - i) * s * c, (1.0 - i) * s * c, s * s + i * c * c};
  }

  Complex operator()(int row, int col) const { return m_[static_cast<std::size_t>(2 * row + col)]; }

  bool is_diagonal(double tol = kTolerance) const {
    return std::abs(m_[1]) <= tol && std::abs(m_[2]) <= tol;
  }

  PolarizationUnitary adjoint() const {
    return {std::conj(m_[0]), std::conj(m_[2]), std::conj(m_[1]), std::conj(m_[3])};
  }

  friend PolarizationUnitary operator*(const PolarizationUnitary& a, const PolarizationUnitary& b) {
    return {a(0, 0) * b(0, 0) + a(0, 1) * b(1, 0), a(0, 0) * b(0, 1) + a(0, 1) * b(1, 1),
            a(1, 0) * b(0, 0) + a(1, 1) * b(1, 0), a(1, 0) * b(0, 1) + a(1, 1) * b(1, 1)};
  }

 private:
  std::array<Complex, 4> m_;
};

namespace detail {

inline KetImage local_unitary_image(const OccupationKet& ket, const ModeLabel& mode, const PolarizationUnitary& u) {
  const Occupation occ = ket.at(mode);
  if (occ.total() == 0) return {{ket, 1.0}};
  if (u.is_diagonal()) return {{ket, integer_power(u(0, 0), occ.h) * integer_power(u(1, 1), occ.v)}};
  if (occ.total() > 1)
    throw Error("non-diagonal polarization unitary on a multi-photon occupation of mode '" + mode.str() +
                "' is not supported");
  const int col = occ.h == 1 ? 0 : 1;
  return {{ket.with(mode, Occupation{1, 0}), u(0, col)}, {ket.with(mode, Occupation{0, 1}), u(1, col)}};
}

}  // namespace detail

inline PureState local_unitary(const PureState& s, const ModeLabel& mode, const PolarizationUnitary& u) {
  require_mode(s.modes(), mode);
  return transform(s, s.modes(), [&](const OccupationKet& ket) { return detail::local_unitary_image(ket, mode, u); });
}

inline DensityMatrix local_unitary(const DensityMatrix& rho, const ModeLabel& mode, const PolarizationUnitary& u) {
  require_mode(rho.modes(), mode);
  return conjugate(rho, rho.modes(),
                   [&](const OccupationKet& ket) { return detail::local_unitary_image(ket, mode, u); });
}

/// Multiplies each ket by exp(i phi n_pol(mode)).
inline PureState phase_shift(const PureState& s, const ModeLabel& mode, Polarization pol, double phi) {
  require_mode(s.modes(), mode);
  return transform(s, s.modes(), [&](const OccupationKet& ket) {
    return KetImage{{ket, std::polar(1.0, phi * ket.at(mode).count(pol))}};
  });
}

}  // namespace heraldlab
