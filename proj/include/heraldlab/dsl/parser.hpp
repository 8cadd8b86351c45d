#pragma once

// Line-oriented parser for circuit scripts.
//
//   file      := line*
//   line      := comment | directive
//   directive := "mode" label+
//              | "source" label complex complex
//              | "source" label "mixed" real
//              | "bell" kind label label
//              | "pbs" label label "->" label label ["phase=" complex]
//              | "qndm" label ["model=" (ideal|sqrt_rabi)] ["cg=" complex] ["cd=" complex]
//              | "measure" label ("hv"|"pm")
//              | "target" name [label*]
//              | "target" "state" (complex ket)+
//   real      := ["-"|"+"] (decimal | "sqrt(" decimal ")")
//   complex   := real | real "i" | real ("+"|"-") real "i" | real "@" real
//   ket       := label "=" occ ("," label "=" occ)*      occ := "0" | [HV]+
//   label     := [A-Za-z0-9_']+
//
// '#' starts a comment. Keywords are lowercase. Errors are collected for the
// whole file rather than stopping at the first one.

#include <cctype>
#include <charconv>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "heraldlab/dsl/ast.hpp"

namespace heraldlab::dsl {

struct ParseResult {
  CircuitAST ast;
  std::vector<Diagnostic> errors;

  bool ok() const noexcept { return errors.empty(); }
};

namespace detail {

struct Token {
  std::string_view text;
  int column = 0;
};

inline bool is_label_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '\'';
}

inline bool is_label(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s)
    if (!is_label_char(c)) return false;
  return true;
}

inline std::optional<double> parse_decimal(std::string_view s) {
  if (s.empty() || !(std::isdigit(static_cast<unsigned char>(s.front())) || s.front() == '.')) return std::nullopt;
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(value)) return std::nullopt;
  return value;
}

inline std::optional<RealLiteral> parse_real(std::string_view s) {
  RealLiteral lit;
  if (!s.empty() && (s.front() == '-' || s.front() == '+')) {
    lit.negative = s.front() == '-';
    s.remove_prefix(1);
  }
  if (s.starts_with("sqrt(") && s.ends_with(")")) {
    lit.is_sqrt = true;
    s = s.substr(5, s.size() - 6);
  }
  auto value = parse_decimal(s);
  if (!value) return std::nullopt;
  lit.operand = *value;
  return lit;
}

inline std::optional<ComplexLiteral> parse_complex(std::string_view s) {
  if (s.empty()) return std::nullopt;
  if (auto at = s.find('@'); at != std::string_view::npos) {
    auto mag = parse_real(s.substr(0, at));
    auto phase = parse_real(s.substr(at + 1));
    if (!mag || !phase) return std::nullopt;
    return ComplexLiteral{ComplexLiteral::Form::Polar, *mag, *phase};
  }
  if (!s.ends_with('i')) {
    auto re = parse_real(s);
    if (!re) return std::nullopt;
    return ComplexLiteral{ComplexLiteral::Form::Cartesian, *re, {}};
  }
  std::string_view body = s.substr(0, s.size() - 1);
  // Split at the last top-level sign that is not an exponent sign.
  std::size_t split = std::string_view::npos;
  int depth = 0;
  for (std::size_t k = body.size(); k-- > 1;) {
    const char c = body[k];
    if (c == ')') ++depth;
    if (c == '(') --depth;
    if (depth == 0 && (c == '+' || c == '-') && body[k - 1] != 'e' && body[k - 1] != 'E') {
      split = k;
      break;
    }
  }
  RealLiteral re;
  std::string_view im_text = body;
  if (split != std::string_view::npos) {
    auto parsed = parse_real(body.substr(0, split));
    if (!parsed) return std::nullopt;
    re = *parsed;
    im_text = body.substr(split);
  }
  std::optional<RealLiteral> im;
  if (im_text.empty() || im_text == "+" || im_text == "-") {
    im = RealLiteral{im_text == "-", false, 1.0};
  } else {
    im = parse_real(im_text);
  }
  if (!im) return std::nullopt;
  return ComplexLiteral{ComplexLiteral::Form::Cartesian, re, *im};
}

inline std::vector<Token> tokenize(std::string_view line) {
  std::vector<Token> tokens;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    if (i >= line.size()) break;
    std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t') ++i;
    tokens.push_back({line.substr(start, i - start), static_cast<int>(start) + 1});
  }
  return tokens;
}

class LineParser {
 public:
  LineParser(int line, std::vector<Token> tokens, std::vector<Diagnostic>& errors)
      : line_(line), tokens_(std::move(tokens)), errors_(errors) {}

  std::optional<Directive> parse() {
    const Token& kw = tokens_.front();
    const SourcePosition pos{line_, kw.column};
    std::optional<DirectiveBody> body;
    if (kw.text == "mode") {
      body = parse_mode();
    } else if (kw.text == "source") {
      body = parse_source();
    } else if (kw.text == "bell") {
      body = parse_bell();
    } else if (kw.text == "pbs") {
      body = parse_pbs();
    } else if (kw.text == "qndm") {
      body = parse_qndm();
    } else if (kw.text == "measure") {
      body = parse_measure();
    } else if (kw.text == "target") {
      body = parse_target();
    } else {
      error(kw, "unknown directive '" + std::string(kw.text) + "'");
    }
    if (!body || failed_) return std::nullopt;
    return Directive{pos, std::move(*body)};
  }

 private:
  void error(const Token& at, std::string message) {
    errors_.push_back({{line_, at.column}, std::move(message)});
    failed_ = true;
  }

  void arity(std::string usage) { error(tokens_.front(), "directive '" + std::string(tokens_.front().text) + "' expects '" + usage + "'"); }

  ModeLabel label(const Token& t) {
    if (!is_label(t.text)) {
      error(t, "invalid label '" + std::string(t.text) + "'");
      return ModeLabel("_");
    }
    return ModeLabel(std::string(t.text));
  }

  ComplexLiteral complex(const Token& t) {
    auto c = parse_complex(t.text);
    if (!c) {
      error(t, "malformed number '" + std::string(t.text) + "'");
      return {};
    }
    return *c;
  }

  RealLiteral real(const Token& t) {
    auto r = parse_real(t.text);
    if (!r) {
      error(t, "malformed number '" + std::string(t.text) + "'");
      return {};
    }
    return *r;
  }

  std::optional<DirectiveBody> parse_mode() {
    if (tokens_.size() < 2) {
      arity("mode <label>+");
      return std::nullopt;
    }
    ModeDecl d;
    for (std::size_t i = 1; i < tokens_.size(); ++i) d.labels.push_back(label(tokens_[i]));
    return d;
  }

  std::optional<DirectiveBody> parse_source() {
    if (tokens_.size() != 4) {
      arity("source <mode> <alpha> <beta>' or 'source <mode> mixed <f>");
      return std::nullopt;
    }
    if (tokens_[2].text == "mixed") return MixedSourceDecl{label(tokens_[1]), real(tokens_[3])};
    return SourceDecl{label(tokens_[1]), complex(tokens_[2]), complex(tokens_[3])};
  }

  std::optional<DirectiveBody> parse_bell() {
    if (tokens_.size() != 4) {
      arity("bell <kind> <mode> <mode>");
      return std::nullopt;
    }
    auto kind = parse_bell_kind(tokens_[1].text);
    if (!kind) error(tokens_[1], "unknown bell state '" + std::string(tokens_[1].text) + "'");
    return BellDecl{kind.value_or(BellKind::PhiPlus), label(tokens_[2]), label(tokens_[3])};
  }

  std::optional<DirectiveBody> parse_pbs() {
    if (tokens_.size() < 6 || tokens_[3].text != "->") {
      arity("pbs <in> <in> -> <out> <out>");
      return std::nullopt;
    }
    PbsDecl d{label(tokens_[1]), label(tokens_[2]), label(tokens_[4]), label(tokens_[5]), std::nullopt};
    for (std::size_t i = 6; i < tokens_.size(); ++i) {
      auto [key, value] = split_option(tokens_[i]);
      if (key == "phase") {
        if (d.reflect_phase) error(tokens_[i], "duplicate option 'phase'");
        d.reflect_phase = complex(Token{value, tokens_[i].column + static_cast<int>(key.size()) + 1});
      } else {
        error(tokens_[i], "unknown option '" + std::string(tokens_[i].text) + "' for 'pbs'");
      }
    }
    return d;
  }

  std::optional<DirectiveBody> parse_qndm() {
    if (tokens_.size() < 2) {
      arity("qndm <mode> [model=ideal|sqrt_rabi] [cg=<c>] [cd=<c>]");
      return std::nullopt;
    }
    QndmDecl d{label(tokens_[1]), std::nullopt, std::nullopt, std::nullopt};
    for (std::size_t i = 2; i < tokens_.size(); ++i) {
      auto [key, value] = split_option(tokens_[i]);
      const Token value_token{value, tokens_[i].column + static_cast<int>(key.size()) + 1};
      if (key == "model") {
        if (d.model) error(tokens_[i], "duplicate option 'model'");
        if (value == "ideal") {
          d.model = MultiPhotonModel::IdealNoShift;
        } else if (value == "sqrt_rabi") {
          d.model = MultiPhotonModel::SqrtRabi;
        } else {
          error(value_token, "unknown multi-photon model '" + std::string(value) + "'");
        }
      } else if (key == "cg") {
        if (d.c_g) error(tokens_[i], "duplicate option 'cg'");
        d.c_g = complex(value_token);
      } else if (key == "cd") {
        if (d.c_d) error(tokens_[i], "duplicate option 'cd'");
        d.c_d = complex(value_token);
      } else {
        error(tokens_[i], "unknown option '" + std::string(tokens_[i].text) + "' for 'qndm'");
      }
    }
    return d;
  }

  std::optional<DirectiveBody> parse_measure() {
    if (tokens_.size() != 3) {
      arity("measure <mode> hv|pm");
      return std::nullopt;
    }
    MeasureDecl d{label(tokens_[1]), MeasurementBasis::HV};
    if (tokens_[2].text == "hv") {
      d.basis = MeasurementBasis::HV;
    } else if (tokens_[2].text == "pm") {
      d.basis = MeasurementBasis::PlusMinus;
    } else {
      error(tokens_[2], "unknown basis '" + std::string(tokens_[2].text) + "'");
    }
    return d;
  }

  std::optional<DirectiveBody> parse_target() {
    if (tokens_.size() < 2) {
      arity("target <name> [<mode>...]' or 'target state <amp> <ket> ...");
      return std::nullopt;
    }
    const std::string name(tokens_[1].text);
    TargetDecl d{name, {}, {}};
    if (name == "state") {
      if (tokens_.size() < 4 || tokens_.size() % 2 != 0) {
        arity("target state <amp> <ket> [<amp> <ket>]...");
        return std::nullopt;
      }
      for (std::size_t i = 2; i + 1 < tokens_.size(); i += 2)
        d.terms.push_back(TargetTerm{complex(tokens_[i]), ket(tokens_[i + 1])});
      return d;
    }
    if (!is_named_target(name)) error(tokens_[1], "unknown target '" + name + "'");
    for (std::size_t i = 2; i < tokens_.size(); ++i) d.modes.push_back(label(tokens_[i]));
    return d;
  }

  std::vector<ModeOccupation> ket(const Token& t) {
    std::vector<ModeOccupation> out;
    std::string_view rest = t.text;
    while (true) {
      const auto comma = rest.find(',');
      const std::string_view item = rest.substr(0, comma);
      const auto eq = item.find('=');
      if (eq == std::string_view::npos || !is_label(item.substr(0, eq))) {
        error(t, "malformed ket '" + std::string(t.text) + "'");
        return {};
      }
      try {
        out.push_back({ModeLabel(std::string(item.substr(0, eq))), Occupation::parse(item.substr(eq + 1))});
      } catch (const Error&) {
        error(t, "malformed ket '" + std::string(t.text) + "'");
        return {};
      }
      if (comma == std::string_view::npos) break;
      rest = rest.substr(comma + 1);
    }
    return out;
  }

  static bool is_named_target(std::string_view name) {
    if (parse_bell_kind(name)) return true;
    if (!name.starts_with("ghz") || name.size() == 3) return false;
    for (char c : name.substr(3))
      if (!std::isdigit(static_cast<unsigned char>(c))) return false;
    return true;
  }

  static std::pair<std::string_view, std::string_view> split_option(const Token& t) {
    const auto eq = t.text.find('=');
    if (eq == std::string_view::npos) return {t.text, {}};
    return {t.text.substr(0, eq), t.text.substr(eq + 1)};
  }

  int line_;
  std::vector<Token> tokens_;
  std::vector<Diagnostic>& errors_;
  bool failed_ = false;
};

}  // namespace detail

inline ParseResult parse(std::string_view text) {
  ParseResult result;
  int line_number = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto end = text.find('\n', start);
    std::string_view line = text.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start);
    ++line_number;
    if (line_number == 1 && line.starts_with("\xEF\xBB\xBF")) line.remove_prefix(3);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    auto tokens = detail::tokenize(line);
    if (!tokens.empty()) {
      detail::LineParser parser(line_number, std::move(tokens), result.errors);
      if (auto d = parser.parse()) result.ast.directives.push_back(std::move(*d));
    }
    if (end == std::string_view::npos) break;
    start = end + 1;
  }
  return result;
}

/// Parses a complex literal in the DSL's syntax (also used by the CLI).
inline std::optional<Complex> parse_complex_value(std::string_view text) {
  auto c = detail::parse_complex(text);
  if (!c) return std::nullopt;
  return c->value();
}

}  // namespace heraldlab::dsl
