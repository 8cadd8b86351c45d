#pragma once

// Syntax tree of the circuit description language and its canonical printer.
//
// Numeric literals keep their written form (plain decimal or sqrt(x), cartesian
// or polar complex) so that printing and re-parsing is lossless at the printed
// resolution of six decimals.

#include <cmath>
#include <complex>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "heraldlab/fock.hpp"
#include "heraldlab/protocols.hpp"
#include "heraldlab/qndm.hpp"

namespace heraldlab::dsl {

struct SourcePosition {
  int line = 0;
  int column = 0;

  friend bool operator==(const SourcePosition&, const SourcePosition&) = default;
};

struct Diagnostic {
  SourcePosition position;
  std::string message;

  std::string to_string() const {
    return message + " at line " + std::to_string(position.line) + ", column " + std::to_string(position.column);
  }

  friend bool operator==(const Diagnostic&, const Diagnostic&) = default;
};

inline std::string format_fixed6(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", x);
  std::string s(buf);
  if (s == "-0.000000") s = "0.000000";
  return s;
}

struct RealLiteral {
  bool negative = false;
  bool is_sqrt = false;
  double operand = 0.0;

  static RealLiteral of(double v) { return {v < 0.0, false, std::abs(v)}; }

  double value() const {
    const double magnitude = is_sqrt ? std::sqrt(operand) : operand;
    return negative ? -magnitude : magnitude;
  }

  bool is_zero() const { return format_fixed6(operand) == "0.000000"; }

  std::string canonical() const {
    const std::string body = is_sqrt ? "sqrt(" + format_fixed6(operand) + ")" : format_fixed6(operand);
    return (negative && !is_zero()) ? "-" + body : body;
  }

  RealLiteral magnitude() const { return {false, is_sqrt, operand}; }

  friend bool operator==(const RealLiteral& a, const RealLiteral& b) { return a.canonical() == b.canonical(); }
};

struct ComplexLiteral {
  enum class Form { Cartesian, Polar };

  Form form = Form::Cartesian;
  RealLiteral first;   // real part, or magnitude
  RealLiteral second;  // imaginary part, or phase in radians

  static ComplexLiteral real(double v) { return {Form::Cartesian, RealLiteral::of(v), {}}; }

  Complex value() const {
    if (form == Form::Polar) return std::polar(first.value(), second.value());
    return {first.value(), second.value()};
  }

  std::string canonical() const {
    if (form == Form::Polar) return first.canonical() + "@" + second.canonical();
    if (second.is_zero()) return first.canonical();
    if (first.is_zero()) return second.canonical() + "i";
    return first.canonical() + (second.negative ? "-" : "+") + second.magnitude().canonical() + "i";
  }

  friend bool operator==(const ComplexLiteral& a, const ComplexLiteral& b) { return a.canonical() == b.canonical(); }
};

// ---------------------------------------------------------------------------
// Directives

struct ModeDecl {
  std::vector<ModeLabel> labels;
  friend bool operator==(const ModeDecl&, const ModeDecl&) = default;
};

struct SourceDecl {
  ModeLabel mode;
  ComplexLiteral alpha;
  ComplexLiteral beta;
  friend bool operator==(const SourceDecl&, const SourceDecl&) = default;
};

struct MixedSourceDecl {
  ModeLabel mode;
  RealLiteral f;
  friend bool operator==(const MixedSourceDecl&, const MixedSourceDecl&) = default;
};

struct BellDecl {
  BellKind kind = BellKind::PhiPlus;
  ModeLabel mode_a;
  ModeLabel mode_b;
  friend bool operator==(const BellDecl&, const BellDecl&) = default;
};

struct PbsDecl {
  ModeLabel in_a;
  ModeLabel in_b;
  ModeLabel out_a;
  ModeLabel out_b;
  std::optional<ComplexLiteral> reflect_phase;
  friend bool operator==(const PbsDecl&, const PbsDecl&) = default;
};

struct QndmDecl {
  ModeLabel mode;
  std::optional<MultiPhotonModel> model;
  std::optional<ComplexLiteral> c_g;
  std::optional<ComplexLiteral> c_d;
  friend bool operator==(const QndmDecl&, const QndmDecl&) = default;
};

struct MeasureDecl {
  ModeLabel mode;
  MeasurementBasis basis = MeasurementBasis::HV;
  friend bool operator==(const MeasureDecl&, const MeasureDecl&) = default;
};

struct TargetTerm {
  ComplexLiteral amplitude;
  std::vector<ModeOccupation> ket;  // in written order
  friend bool operator==(const TargetTerm&, const TargetTerm&) = default;
};

/// `target phi+`, `target ghz3 a b c`, or `target state <amp> <ket> ...`.
struct TargetDecl {
  std::string name;
  std::vector<ModeLabel> modes;
  std::vector<TargetTerm> terms;  // only for name == "state"
  friend bool operator==(const TargetDecl&, const TargetDecl&) = default;
};

using DirectiveBody =
    std::variant<ModeDecl, SourceDecl, MixedSourceDecl, BellDecl, PbsDecl, QndmDecl, MeasureDecl, TargetDecl>;

struct Directive {
  SourcePosition position;
  DirectiveBody body;

  /// Structural equality ignores source positions.
  friend bool operator==(const Directive& a, const Directive& b) { return a.body == b.body; }
};

struct CircuitAST {
  std::vector<Directive> directives;
  friend bool operator==(const CircuitAST&, const CircuitAST&) = default;
};

inline const char* keyword(const DirectiveBody& body) {
  struct Visitor {
    const char* operator()(const ModeDecl&) const { return "mode"; }
    const char* operator()(const SourceDecl&) const { return "source"; }
    const char* operator()(const MixedSourceDecl&) const { return "source"; }
    const char* operator()(const BellDecl&) const { return "bell"; }
    const char* operator()(const PbsDecl&) const { return "pbs"; }
    const char* operator()(const QndmDecl&) const { return "qndm"; }
    const char* operator()(const MeasureDecl&) const { return "measure"; }
    const char* operator()(const TargetDecl&) const { return "target"; }
  };
  return std::visit(Visitor{}, body);
}

inline const char* to_string(MultiPhotonModel m) {
  return m == MultiPhotonModel::IdealNoShift ? "ideal" : "sqrt_rabi";
}

// ---------------------------------------------------------------------------
// Canonical printing

inline std::string print_directive(const DirectiveBody& body) {
  struct Visitor {
    std::string operator()(const ModeDecl& d) const {
      std::string out = "mode";
      for (const auto& l : d.labels) out += " " + l.str();
      return out;
    }
    std::string operator()(const SourceDecl& d) const {
      return "source " + d.mode.str() + " " + d.alpha.canonical() + " " + d.beta.canonical();
    }
    std::string operator()(const MixedSourceDecl& d) const {
      return "source " + d.mode.str() + " mixed " + d.f.canonical();
    }
    std::string operator()(const BellDecl& d) const {
      return std::string("bell ") + heraldlab::to_string(d.kind) + " " + d.mode_a.str() + " " + d.mode_b.str();
    }
    std::string operator()(const PbsDecl& d) const {
      std::string out = "pbs " + d.in_a.str() + " " + d.in_b.str() + " -> " + d.out_a.str() + " " + d.out_b.str();
      if (d.reflect_phase) out += " phase=" + d.reflect_phase->canonical();
      return out;
    }
    std::string operator()(const QndmDecl& d) const {
      std::string out = "qndm " + d.mode.str();
      if (d.model) out += std::string(" model=") + to_string(*d.model);
      if (d.c_g) out += " cg=" + d.c_g->canonical();
      if (d.c_d) out += " cd=" + d.c_d->canonical();
      return out;
    }
    std::string operator()(const MeasureDecl& d) const {
      return "measure " + d.mode.str() + " " + heraldlab::to_string(d.basis);
    }
    std::string operator()(const TargetDecl& d) const {
      std::string out = "target " + d.name;
      for (const auto& m : d.modes) out += " " + m.str();
      for (const auto& term : d.terms) {
        out += " " + term.amplitude.canonical() + " ";
        for (std::size_t i = 0; i < term.ket.size(); ++i) {
          if (i) out += ",";
          out += term.ket[i].mode.str() + "=" + term.ket[i].occupation.to_string();
        }
      }
      return out;
    }
  };
  return std::visit(Visitor{}, body);
}

/// One directive per line, single spaces, six-decimal numerics, LF endings.
inline std::string pretty_print(const CircuitAST& ast) {
  std::string out;
  for (const auto& d : ast.directives) out += print_directive(d.body) + "\n";
  return out;
}

}  // namespace heraldlab::dsl
