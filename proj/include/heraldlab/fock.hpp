#pragma once

// Sparse Fock-space states over polarized spatial modes.
//
// A basis ket records, per spatial mode, how many H and how many V photons it
// holds. |HV> in one spatial mode is a^dag_H a^dag_V |0>, so it has unit norm and
// no bosonic sqrt(2) factor; only repeated polarizations (|HH>, ...) carry one,
// and those never arise from the element maps in this library.

#include <algorithm>
#include <cmath>
#include <compare>
#include <complex>
#include <cstdint>
#include <initializer_list>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "heraldlab/errors.hpp"

namespace heraldlab {

using Complex = std::complex<double>;

inline constexpr double kPruneTolerance = 1e-15;
inline constexpr double kTolerance = 1e-12;
inline constexpr double kPsdFloor = -1e-10;
inline constexpr double kZeroNormTolerance = 1e-14;
inline constexpr unsigned kDefaultMaxOccupation = 2;

enum class Polarization : std::uint8_t { H, V };

inline constexpr char to_char(Polarization p) noexcept { return p == Polarization::H ? 'H' : 'V'; }

// ---------------------------------------------------------------------------
// Mode labels

class ModeLabel {
 public:
  ModeLabel() = default;
  ModeLabel(const char* name) : ModeLabel(std::string(name)) {}  // NOLINT: literals read naturally
  explicit ModeLabel(std::string name) : name_(std::move(name)) {
    if (name_.empty()) throw ModeError("mode label must not be empty");
  }

  const std::string& str() const noexcept { return name_; }

  friend bool operator==(const ModeLabel&, const ModeLabel&) = default;
  friend auto operator<=>(const ModeLabel&, const ModeLabel&) = default;

 private:
  std::string name_;
};

/// Sorted, duplicate-free list of mode labels.
using ModeSet = std::vector<ModeLabel>;

inline ModeSet canonical_modes(ModeSet modes) {
  std::sort(modes.begin(), modes.end());
  auto dup = std::adjacent_find(modes.begin(), modes.end());
  if (dup != modes.end()) throw ModeError("duplicate mode label '" + dup->str() + "'");
  return modes;
}

inline bool contains(const ModeSet& modes, const ModeLabel& mode) {
  return std::binary_search(modes.begin(), modes.end(), mode);
}

inline std::string describe(const ModeSet& modes) {
  std::string out = "{";
  for (std::size_t i = 0; i < modes.size(); ++i) {
    if (i) out += ", ";
    out += modes[i].str();
  }
  return out + "}";
}

inline void require_mode(const ModeSet& modes, const ModeLabel& mode) {
  if (!contains(modes, mode))
    throw ModeError("unknown mode '" + mode.str() + "' (state modes " + describe(modes) + ")");
}

// ---------------------------------------------------------------------------
// Occupations and kets

struct Occupation {
  unsigned h = 0;
  unsigned v = 0;

  constexpr unsigned total() const noexcept { return h + v; }
  constexpr unsigned count(Polarization p) const noexcept { return p == Polarization::H ? h : v; }

  friend constexpr bool operator==(const Occupation&, const Occupation&) = default;

  // Fewer photons first; at equal number the H-heavier occupation comes first,
  // so a single photon orders |H> before |V>.
  friend constexpr std::strong_ordering operator<=>(const Occupation& a, const Occupation& b) {
    if (auto c = a.total() <=> b.total(); c != 0) return c;
    return b.h <=> a.h;
  }

  std::string to_string() const {
    if (total() == 0) return "0";
    return std::string(h, 'H') + std::string(v, 'V');
  }

  /// Accepts "0" or any string of H/V letters ("H", "HV", "HHV", ...).
  static Occupation parse(std::string_view text) {
    if (text == "0") return {};
    if (text.empty()) throw Error("empty occupation");
    Occupation occ;
    for (char c : text) {
      if (c == 'H') {
        ++occ.h;
      } else if (c == 'V') {
        ++occ.v;
      } else {
        throw Error("invalid occupation '" + std::string(text) + "'");
      }
    }
    return occ;
  }
};

struct ModeOccupation {
  ModeLabel mode;
  Occupation occupation;

  friend bool operator==(const ModeOccupation&, const ModeOccupation&) = default;
  friend auto operator<=>(const ModeOccupation&, const ModeOccupation&) = default;
};

/// One Fock basis element. Entries are kept in canonical mode order.
class OccupationKet {
 public:
  OccupationKet() = default;

  explicit OccupationKet(std::vector<ModeOccupation> entries) : entries_(std::move(entries)) {
    std::sort(entries_.begin(), entries_.end(),
              [](const auto& a, const auto& b) { return a.mode < b.mode; });
    auto dup = std::adjacent_find(entries_.begin(), entries_.end(),
                                  [](const auto& a, const auto& b) { return a.mode == b.mode; });
    if (dup != entries_.end()) throw ModeError("duplicate mode label '" + dup->mode.str() + "' in ket");
  }

  /// `{{"1", "H"}, {"2'", "HV"}}`
  OccupationKet(std::initializer_list<std::pair<std::string_view, std::string_view>> entries)
      : OccupationKet(convert(entries)) {}

  std::span<const ModeOccupation> entries() const noexcept { return entries_; }
  std::size_t mode_count() const noexcept { return entries_.size(); }

  ModeSet modes() const {
    ModeSet out;
    out.reserve(entries_.size());
    for (const auto& e : entries_) out.push_back(e.mode);
    return out;
  }

  bool has_mode(const ModeLabel& mode) const { return find(mode) != entries_.end(); }

  const Occupation& at(const ModeLabel& mode) const {
    auto it = find(mode);
    if (it == entries_.end()) throw ModeError("unknown mode '" + mode.str() + "' in ket " + to_string());
    return it->occupation;
  }

  unsigned total_photons() const noexcept {
    unsigned n = 0;
    for (const auto& e : entries_) n += e.occupation.total();
    return n;
  }

  OccupationKet with(const ModeLabel& mode, Occupation occ) const {
    OccupationKet out = *this;
    auto it = std::lower_bound(out.entries_.begin(), out.entries_.end(), mode,
                               [](const ModeOccupation& e, const ModeLabel& m) { return e.mode < m; });
    if (it != out.entries_.end() && it->mode == mode) {
      it->occupation = occ;
    } else {
      out.entries_.insert(it, ModeOccupation{mode, occ});
    }
    return out;
  }

  OccupationKet without(const ModeLabel& mode) const {
    OccupationKet out = *this;
    std::erase_if(out.entries_, [&](const ModeOccupation& e) { return e.mode == mode; });
    return out;
  }

  OccupationKet restricted(const ModeSet& keep) const {
    OccupationKet out;
    for (const auto& e : entries_)
      if (contains(keep, e.mode)) out.entries_.push_back(e);
    return out;
  }

  /// Union of two kets over disjoint mode sets.
  friend OccupationKet join(const OccupationKet& a, const OccupationKet& b) {
    std::vector<ModeOccupation> merged;
    merged.reserve(a.entries_.size() + b.entries_.size());
    merged.insert(merged.end(), a.entries_.begin(), a.entries_.end());
    merged.insert(merged.end(), b.entries_.begin(), b.entries_.end());
    return OccupationKet(std::move(merged));
  }

  std::string to_string() const {
    std::string out = "|";
    for (std::size_t i = 0; i < entries_.size(); ++i) {
      if (i) out += ", ";
      out += entries_[i].mode.str() + "=" + entries_[i].occupation.to_string();
    }
    return out + ">";
  }

  friend bool operator==(const OccupationKet&, const OccupationKet&) = default;
  friend auto operator<=>(const OccupationKet&, const OccupationKet&) = default;

 private:
  std::vector<ModeOccupation>::const_iterator find(const ModeLabel& mode) const {
    auto it = std::lower_bound(entries_.begin(), entries_.end(), mode,
                               [](const ModeOccupation& e, const ModeLabel& m) { return e.mode < m; });
    return (it != entries_.end() && it->mode == mode) ? it : entries_.end();
  }

  static std::vector<ModeOccupation> convert(
      std::initializer_list<std::pair<std::string_view, std::string_view>> entries) {
    std::vector<ModeOccupation> out;
    out.reserve(entries.size());
    for (const auto& [mode, occ] : entries)
      out.push_back({ModeLabel(std::string(mode)), Occupation::parse(occ)});
    return out;
  }

  std::vector<ModeOccupation> entries_;
};

inline unsigned photon_number(const OccupationKet& ket, const ModeLabel& mode) { return ket.at(mode).total(); }

// ---------------------------------------------------------------------------
// Single-photon source parameters

class SourceSpec {
 public:
  SourceSpec(Complex alpha, Complex beta) : alpha_(alpha), beta_(beta) {
    const double n = std::norm(alpha) + std::norm(beta);
    if (std::abs(n - 1.0) > kTolerance)
      throw NormalizationError("source spec not normalized: |alpha|^2+|beta|^2 = " + std::to_string(n));
  }

  static SourceSpec horizontal() { return {1.0, 0.0}; }
  static SourceSpec vertical() { return {0.0, 1.0}; }
  static SourceSpec balanced() { return {std::sqrt(0.5), std::sqrt(0.5)}; }

  Complex alpha() const noexcept { return alpha_; }
  Complex beta() const noexcept { return beta_; }

 private:
  Complex alpha_;
  Complex beta_;
};

// ---------------------------------------------------------------------------
// Pure states

class PureState {
 public:
  using Terms = std::map<OccupationKet, Complex>;

  PureState() = default;

  explicit PureState(ModeSet modes, unsigned max_occupation = kDefaultMaxOccupation)
      : modes_(canonical_modes(std::move(modes))), max_occupation_(max_occupation) {}

  /// Builds a state from explicit terms; the mode set is taken from the first ket.
  static PureState from_terms(std::initializer_list<std::pair<OccupationKet, Complex>> terms,
                              unsigned max_occupation = kDefaultMaxOccupation) {
    if (terms.size() == 0) throw Error("from_terms needs at least one term");
    PureState s(terms.begin()->first.modes(), max_occupation);
    for (const auto& [ket, amp] : terms) s.add(ket, amp);
    return s;
  }

  /// Zero-mode state c|>, the result of measuring out every mode.
  static PureState scalar(Complex c) {
    PureState s;
    s.add(OccupationKet{}, c);
    return s;
  }

  const ModeSet& modes() const noexcept { return modes_; }
  unsigned max_occupation() const noexcept { return max_occupation_; }
  const Terms& terms() const noexcept { return terms_; }
  std::size_t size() const noexcept { return terms_.size(); }
  bool is_zero() const noexcept { return terms_.empty(); }

  Complex amplitude(const OccupationKet& ket) const {
    auto it = terms_.find(ket);
    return it == terms_.end() ? Complex{} : it->second;
  }

  /// Accumulates `amplitude` onto `ket`; entries that fall below the prune
  /// threshold are dropped.
  void add(const OccupationKet& ket, Complex amplitude) {
    check_ket(ket);
    auto [it, inserted] = terms_.try_emplace(ket, amplitude);
    if (!inserted) it->second += amplitude;
    if (std::abs(it->second) < kPruneTolerance) terms_.erase(it);
  }

  double squared_norm() const {
    double n = 0.0;
    for (const auto& [ket, amp] : terms_) n += std::norm(amp);
    return n;
  }

  double norm() const { return std::sqrt(squared_norm()); }

  PureState scaled(Complex factor) const {
    PureState out(modes_, max_occupation_);
    for (const auto& [ket, amp] : terms_) out.add(ket, amp * factor);
    return out;
  }

 private:
  void check_ket(const OccupationKet& ket) const {
    auto entries = ket.entries();
    bool same = entries.size() == modes_.size();
    for (std::size_t i = 0; same && i < entries.size(); ++i) same = entries[i].mode == modes_[i];
    if (!same)
      throw ModeError("ket " + ket.to_string() + " does not match state modes " + describe(modes_));
    for (const auto& e : entries) {
      if (e.occupation.h > max_occupation_ || e.occupation.v > max_occupation_)
        throw OccupationOverflowError("occupation of mode '" + e.mode.str() + "' in " + ket.to_string() +
                                      " exceeds n_max = " + std::to_string(max_occupation_));
    }
  }

  ModeSet modes_;
  unsigned max_occupation_ = kDefaultMaxOccupation;
  Terms terms_;
};

using KetImage = std::vector<std::pair<OccupationKet, Complex>>;

/// Applies a linear map defined on basis kets: `map(ket)` returns the image of
/// `ket` as a list of (ket, amplitude) over `out_modes`.
template <class KetMap>
PureState transform(const PureState& s, ModeSet out_modes, KetMap&& map) {
  PureState out(std::move(out_modes), s.max_occupation());
  for (const auto& [ket, amp] : s.terms())
    for (const auto& [image, c] : map(ket)) out.add(image, amp * c);
  return out;
}

inline PureState make_single_photon(const ModeLabel& mode, const SourceSpec& spec) {
  PureState s(ModeSet{mode});
  s.add(OccupationKet({{mode, Occupation{1, 0}}}), spec.alpha());
  s.add(OccupationKet({{mode, Occupation{0, 1}}}), spec.beta());
  return s;
}

inline PureState tensor(const PureState& a, const PureState& b) {
  ModeSet modes = a.modes();
  for (const auto& m : b.modes()) {
    if (contains(a.modes(), m)) throw ModeError("mode collision in tensor product: '" + m.str() + "'");
    modes.push_back(m);
  }
  PureState out(std::move(modes), std::max(a.max_occupation(), b.max_occupation()));
  for (const auto& [ka, ca] : a.terms())
    for (const auto& [kb, cb] : b.terms()) out.add(join(ka, kb), ca * cb);
  return out;
}

/// <a|b>, conjugate-linear in `a`.
inline Complex inner(const PureState& a, const PureState& b) {
  if (a.modes() != b.modes())
    throw ModeError("inner product over different mode sets " + describe(a.modes()) + " and " +
                    describe(b.modes()));
  Complex sum{};
  const auto& small = a.size() <= b.size() ? a : b;
  const auto& large = a.size() <= b.size() ? b : a;
  for (const auto& [ket, amp] : small.terms()) {
    Complex other = large.amplitude(ket);
    sum += (&small == &a) ? std::conj(amp) * other : std::conj(other) * amp;
  }
  return sum;
}

struct NormalizedState {
  PureState state;
  double norm = 0.0;
};

inline NormalizedState normalize(const PureState& s) {
  const double n = s.norm();
  if (n <= kZeroNormTolerance) throw ZeroNormError("cannot normalize a zero state");
  return {s.scaled(1.0 / n), n};
}

/// |<a|b>|^2 / (<a|a><b|b>).
inline double fidelity(const PureState& a, const PureState& b) {
  const double na = a.squared_norm();
  const double nb = b.squared_norm();
  if (na <= 0.0 || nb <= 0.0) throw ZeroNormError("fidelity with a zero state");
  return std::norm(inner(a, b)) / (na * nb);
}

inline bool approx_equal(const PureState& a, const PureState& b, double tol = kTolerance) {
  if (a.modes() != b.modes()) return false;
  for (const auto& [ket, amp] : a.terms())
    if (std::abs(amp - b.amplitude(ket)) > tol) return false;
  for (const auto& [ket, amp] : b.terms())
    if (std::abs(amp - a.amplitude(ket)) > tol) return false;
  return true;
}

inline PureState relabel(const PureState& s, const ModeLabel& from, const ModeLabel& to) {
  require_mode(s.modes(), from);
  if (from == to) return s;
  if (contains(s.modes(), to)) throw ModeError("relabel target '" + to.str() + "' already present");
  ModeSet modes = s.modes();
  std::replace(modes.begin(), modes.end(), from, to);
  return transform(s, std::move(modes), [&](const OccupationKet& ket) {
    return KetImage{{ket.without(from).with(to, ket.at(from)), 1.0}};
  });
}

/// Schmidt coefficients (descending) of `s` across the cut `part | rest`.
inline std::vector<double> schmidt_coefficients(const PureState& s, const ModeSet& part) {
  for (const auto& m : part) require_mode(s.modes(), m);
  const ModeSet left = canonical_modes(part);
  ModeSet right;
  for (const auto& m : s.modes())
    if (!contains(left, m)) right.push_back(m);

  std::map<OccupationKet, Eigen::Index> rows;
  std::map<OccupationKet, Eigen::Index> cols;
  for (const auto& [ket, amp] : s.terms()) {
    rows.try_emplace(ket.restricted(left), static_cast<Eigen::Index>(rows.size()));
    cols.try_emplace(ket.restricted(right), static_cast<Eigen::Index>(cols.size()));
  }
  if (rows.empty()) return {};
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(rows.size()),
                                              static_cast<Eigen::Index>(cols.size()));
  for (const auto& [ket, amp] : s.terms()) m(rows[ket.restricted(left)], cols[ket.restricted(right)]) = amp;
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(m);
  const auto& sv = svd.singularValues();
  return {sv.data(), sv.data() + sv.size()};
}

// ---------------------------------------------------------------------------
// Density matrices

class DensityMatrix {
 public:
  using Index = std::pair<OccupationKet, OccupationKet>;
  using Entries = std::map<Index, Complex>;

  DensityMatrix() = default;

  explicit DensityMatrix(ModeSet modes, unsigned max_occupation = kDefaultMaxOccupation)
      : modes_(canonical_modes(std::move(modes))), max_occupation_(max_occupation) {}

  const ModeSet& modes() const noexcept { return modes_; }
  unsigned max_occupation() const noexcept { return max_occupation_; }
  const Entries& entries() const noexcept { return entries_; }
  bool is_zero() const noexcept { return entries_.empty(); }

  Complex entry(const OccupationKet& row, const OccupationKet& col) const {
    auto it = entries_.find(Index{row, col});
    return it == entries_.end() ? Complex{} : it->second;
  }

  void add(const OccupationKet& row, const OccupationKet& col, Complex value) {
    check_ket(row);
    check_ket(col);
    auto [it, inserted] = entries_.try_emplace(Index{row, col}, value);
    if (!inserted) it->second += value;
    if (std::abs(it->second) < kPruneTolerance) entries_.erase(it);
  }

  Complex trace() const {
    Complex t{};
    for (const auto& [idx, value] : entries_)
      if (idx.first == idx.second) t += value;
    return t;
  }

  /// Every ket appearing as a row or column index, in canonical order.
  std::vector<OccupationKet> support() const {
    std::vector<OccupationKet> kets;
    for (const auto& [idx, value] : entries_) {
      kets.push_back(idx.first);
      kets.push_back(idx.second);
    }
    std::sort(kets.begin(), kets.end());
    kets.erase(std::unique(kets.begin(), kets.end()), kets.end());
    return kets;
  }

  Eigen::MatrixXcd dense(const std::vector<OccupationKet>& basis) const {
    const auto n = static_cast<Eigen::Index>(basis.size());
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(n, n);
    for (const auto& [idx, value] : entries_) {
      auto r = std::lower_bound(basis.begin(), basis.end(), idx.first);
      auto c = std::lower_bound(basis.begin(), basis.end(), idx.second);
      if (r == basis.end() || *r != idx.first || c == basis.end() || *c != idx.second)
        throw Error("dense(): basis does not cover the matrix support");
      m(r - basis.begin(), c - basis.begin()) = value;
    }
    return m;
  }

  bool is_hermitian(double tol = kTolerance) const {
    for (const auto& [idx, value] : entries_)
      if (std::abs(value - std::conj(entry(idx.second, idx.first))) > tol) return false;
    return true;
  }

  /// Smallest eigenvalue of the Hermitian part over the support.
  double min_eigenvalue() const {
    const auto basis = support();
    if (basis.empty()) return 0.0;
    Eigen::MatrixXcd m = dense(basis);
    Eigen::MatrixXcd herm = 0.5 * (m + m.adjoint());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(herm, Eigen::EigenvaluesOnly);
    return solver.eigenvalues().minCoeff();
  }

  /// Throws InvalidDensityMatrixError unless Hermitian, trace one and PSD.
  void validate() const {
    if (!is_hermitian()) throw InvalidDensityMatrixError("density matrix is not Hermitian");
    const Complex t = trace();
    if (std::abs(t - 1.0) > kTolerance)
      throw InvalidDensityMatrixError("density matrix trace is " + std::to_string(t.real()) + ", expected 1");
    if (min_eigenvalue() < kPsdFloor) throw InvalidDensityMatrixError("density matrix has a negative eigenvalue");
  }

  DensityMatrix scaled(Complex factor) const {
    DensityMatrix out(modes_, max_occupation_);
    for (const auto& [idx, value] : entries_) out.add(idx.first, idx.second, value * factor);
    return out;
  }

 private:
  void check_ket(const OccupationKet& ket) const {
    auto entries = ket.entries();
    bool same = entries.size() == modes_.size();
    for (std::size_t i = 0; same && i < entries.size(); ++i) same = entries[i].mode == modes_[i];
    if (!same)
      throw ModeError("ket " + ket.to_string() + " does not match density matrix modes " + describe(modes_));
    for (const auto& e : entries) {
      if (e.occupation.h > max_occupation_ || e.occupation.v > max_occupation_)
        throw OccupationOverflowError("occupation of mode '" + e.mode.str() + "' exceeds n_max = " +
                                      std::to_string(max_occupation_));
    }
  }

  ModeSet modes_;
  unsigned max_occupation_ = kDefaultMaxOccupation;
  Entries entries_;
};

/// rho -> M rho M^dag for a linear map M given on basis kets (see transform()).
template <class KetMap>
DensityMatrix conjugate(const DensityMatrix& rho, ModeSet out_modes, KetMap&& map) {
  DensityMatrix out(std::move(out_modes), rho.max_occupation());
  std::map<OccupationKet, KetImage> images;
  for (const auto& ket : rho.support()) images.emplace(ket, map(ket));
  for (const auto& [idx, value] : rho.entries()) {
    const auto& row_image = images.at(idx.first);
    const auto& col_image = images.at(idx.second);
    for (const auto& [r, cr] : row_image)
      for (const auto& [c, cc] : col_image) out.add(r, c, cr * value * std::conj(cc));
  }
  return out;
}

inline DensityMatrix to_density(const PureState& s) {
  DensityMatrix rho(s.modes(), s.max_occupation());
  for (const auto& [a, ca] : s.terms())
    for (const auto& [b, cb] : s.terms()) rho.add(a, b, ca * std::conj(cb));
  return rho;
}

struct WeightedDensity {
  double weight = 0.0;
  DensityMatrix rho;
};

/// Convex combination. Weights must be non-negative and sum to one.
inline DensityMatrix mix(std::span<const WeightedDensity> parts) {
  if (parts.empty()) throw NormalizationError("mix of an empty list");
  double total = 0.0;
  for (const auto& p : parts) {
    if (p.weight < 0.0) throw NormalizationError("negative mixture weight " + std::to_string(p.weight));
    if (p.rho.modes() != parts.front().rho.modes()) throw ModeError("mixture parts have different mode sets");
    total += p.weight;
  }
  if (std::abs(total - 1.0) > kTolerance)
    throw NormalizationError("mixture weights sum to " + std::to_string(total));
  unsigned max_occ = 0;
  for (const auto& p : parts) max_occ = std::max(max_occ, p.rho.max_occupation());
  DensityMatrix out(parts.front().rho.modes(), max_occ);
  for (const auto& p : parts)
    for (const auto& [idx, value] : p.rho.entries()) out.add(idx.first, idx.second, p.weight * value);
  return out;
}

inline DensityMatrix mix(std::initializer_list<WeightedDensity> parts) {
  return mix(std::span<const WeightedDensity>(parts.begin(), parts.size()));
}

inline DensityMatrix tensor(const DensityMatrix& a, const DensityMatrix& b) {
  ModeSet modes = a.modes();
  for (const auto& m : b.modes()) {
    if (contains(a.modes(), m)) throw ModeError("mode collision in tensor product: '" + m.str() + "'");
    modes.push_back(m);
  }
  DensityMatrix out(std::move(modes), std::max(a.max_occupation(), b.max_occupation()));
  for (const auto& [ia, va] : a.entries())
    for (const auto& [ib, vb] : b.entries()) out.add(join(ia.first, ib.first), join(ia.second, ib.second), va * vb);
  return out;
}

inline DensityMatrix partial_trace(const DensityMatrix& rho, const ModeSet& keep) {
  for (const auto& m : keep) require_mode(rho.modes(), m);
  ModeSet kept = canonical_modes(keep);
  ModeSet traced;
  for (const auto& m : rho.modes())
    if (!contains(kept, m)) traced.push_back(m);
  DensityMatrix out(kept, rho.max_occupation());
  for (const auto& [idx, value] : rho.entries()) {
    if (idx.first.restricted(traced) != idx.second.restricted(traced)) continue;
    out.add(idx.first.restricted(kept), idx.second.restricted(kept), value);
  }
  return out;
}

/// <target|rho|target>.
inline double fidelity_pure(const DensityMatrix& rho, const PureState& target) {
  if (rho.modes() != target.modes())
    throw ModeError("fidelity over different mode sets " + describe(rho.modes()) + " and " +
                    describe(target.modes()));
  Complex sum{};
  for (const auto& [idx, value] : rho.entries())
    sum += std::conj(target.amplitude(idx.first)) * value * target.amplitude(idx.second);
  return sum.real();
}

struct NormalizedDensity {
  DensityMatrix rho;
  double trace = 0.0;
};

inline NormalizedDensity normalize(const DensityMatrix& rho) {
  const double t = rho.trace().real();
  if (t <= kZeroNormTolerance) throw ZeroNormError("cannot normalize a zero-trace density matrix");
  return {rho.scaled(1.0 / t), t};
}

inline DensityMatrix relabel(const DensityMatrix& rho, const ModeLabel& from, const ModeLabel& to) {
  require_mode(rho.modes(), from);
  if (from == to) return rho;
  if (contains(rho.modes(), to)) throw ModeError("relabel target '" + to.str() + "' already present");
  ModeSet modes = rho.modes();
  std::replace(modes.begin(), modes.end(), from, to);
  return conjugate(rho, std::move(modes), [&](const OccupationKet& ket) {
    return KetImage{{ket.without(from).with(to, ket.at(from)), 1.0}};
  });
}

inline double trace_distance(const DensityMatrix& a, const DensityMatrix& b) {
  if (a.modes() != b.modes()) throw ModeError("trace distance over different mode sets");
  auto basis = a.support();
  auto other = b.support();
  basis.insert(basis.end(), other.begin(), other.end());
  std::sort(basis.begin(), basis.end());
  basis.erase(std::unique(basis.begin(), basis.end()), basis.end());
  if (basis.empty()) return 0.0;
  Eigen::MatrixXcd diff = a.dense(basis) - b.dense(basis);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(0.5 * (diff + diff.adjoint()), Eigen::EigenvaluesOnly);
  return 0.5 * solver.eigenvalues().cwiseAbs().sum();
}

inline bool approx_equal(const DensityMatrix& a, const DensityMatrix& b, double tol = kTolerance) {
  if (a.modes() != b.modes()) return false;
  for (const auto& [idx, value] : a.entries())
    if (std::abs(value - b.entry(idx.first, idx.second)) > tol) return false;
  for (const auto& [idx, value] : b.entries())
    if (std::abs(value - a.entry(idx.first, idx.second)) > tol) return false;
  return true;
}

}  // namespace heraldlab
