#pragma once

// Golden-corpus helpers shared by the unit tests and the acceptance binary.
//
// A valid script NAME.hd comes with NAME.expected.json, a subset of the run
// report: every key present there must match (numbers within 1e-9, arrays
// element by element). An invalid script comes with NAME.errors.json listing
// the exact diagnostics and the pass that reports them.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "heraldlab/dsl.hpp"

namespace corpus {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

inline constexpr double kTolerance = 1e-9;

inline std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline Json read_json(const fs::path& p) { return Json::parse(read_file(p)); }

struct Entry {
  std::string name;
  fs::path script;
  std::optional<fs::path> expected;  // valid scripts
  std::optional<fs::path> errors;    // malformed scripts
};

inline std::vector<Entry> entries(const fs::path& dir) {
  std::vector<Entry> out;
  for (const auto& f : fs::directory_iterator(dir)) {
    if (f.path().extension() != ".hd") continue;
    Entry e{f.path().stem().string(), f.path(), std::nullopt, std::nullopt};
    const auto expected = dir / (e.name + ".expected.json");
    const auto errors = dir / (e.name + ".errors.json");
    if (fs::exists(expected)) e.expected = expected;
    if (fs::exists(errors)) e.errors = errors;
    out.push_back(std::move(e));
  }
  std::sort(out.begin(), out.end(), [](const Entry& a, const Entry& b) { return a.name < b.name; });
  return out;
}

/// Empty string on match, otherwise the first mismatching JSON path.
inline std::string subset_mismatch(const Json& expected, const Json& actual, const std::string& path = "$") {
  if (expected.is_object()) {
    if (!actual.is_object()) return path + ": expected object";
    for (const auto& [key, value] : expected.items()) {
      if (!actual.contains(key)) return path + "." + key + ": missing";
      if (auto m = subset_mismatch(value, actual.at(key), path + "." + key); !m.empty()) return m;
    }
    return {};
  }
  if (expected.is_array()) {
    if (!actual.is_array() || actual.size() != expected.size())
      return path + ": expected array of " + std::to_string(expected.size());
    for (std::size_t i = 0; i < expected.size(); ++i)
      if (auto m = subset_mismatch(expected[i], actual[i], path + "[" + std::to_string(i) + "]"); !m.empty())
        return m;
    return {};
  }
  if (expected.is_number()) {
    if (!actual.is_number()) return path + ": expected number";
    const double d = std::abs(expected.get<double>() - actual.get<double>());
    if (!(d <= kTolerance)) return path + ": " + expected.dump() + " vs " + actual.dump();
    return {};
  }
  if (expected != actual) return path + ": " + expected.dump() + " vs " + actual.dump();
  return {};
}

struct Outcome {
  std::string stage;  // "parse", "validate" or "run"
  std::vector<heraldlab::dsl::Diagnostic> errors;
  std::optional<heraldlab::dsl::RunReport> report;
};

inline Outcome execute(const std::string& text) {
  Outcome o;
  auto parsed = heraldlab::dsl::parse(text);
  if (!parsed.ok()) {
    o.stage = "parse";
    o.errors = std::move(parsed.errors);
    return o;
  }
  auto compiled = heraldlab::dsl::validate(parsed.ast);
  if (!compiled.ok()) {
    o.stage = "validate";
    o.errors = std::move(compiled.errors);
    return o;
  }
  o.stage = "run";
  o.report = heraldlab::dsl::run(*compiled.pipeline);
  return o;
}

/// Checks one corpus entry; returns an empty string on success.
inline std::string check(const Entry& e) {
  const Outcome o = execute(read_file(e.script));
  if (e.expected) {
    if (!o.report) {
      std::string msg = "unexpected " + o.stage + " errors:";
      for (const auto& d : o.errors) msg += " [" + d.to_string() + "]";
      return msg;
    }
    return subset_mismatch(read_json(*e.expected), o.report->to_json());
  }
  if (!e.errors) return "no expectation file";
  const Json spec = read_json(*e.errors);
  if (o.stage != spec.at("stage").get<std::string>()) return "failed in " + o.stage + ", expected " + spec.at("stage").dump();
  const auto& want = spec.at("errors");
  if (want.size() != o.errors.size()) {
    std::string msg = "expected " + std::to_string(want.size()) + " errors, got " + std::to_string(o.errors.size()) + ":";
    for (const auto& d : o.errors) msg += " [" + d.to_string() + "]";
    return msg;
  }
  for (std::size_t i = 0; i < want.size(); ++i) {
    const auto& d = o.errors[i];
    if (d.position.line != want[i].at("line").get<int>() || d.position.column != want[i].at("column").get<int>() ||
        d.message != want[i].at("message").get<std::string>())
      return "error " + std::to_string(i) + ": got [" + d.to_string() + "]";
  }
  return {};
}

/// parse(pretty_print(parse(text))) == parse(text), structurally.
inline bool round_trips(const std::string& text) {
  const auto first = heraldlab::dsl::parse(text);
  if (!first.ok()) return false;
  const std::string printed = heraldlab::dsl::pretty_print(first.ast);
  const auto second = heraldlab::dsl::parse(printed);
  return second.ok() && second.ast == first.ast && heraldlab::dsl::pretty_print(second.ast) == printed;
}

}  // namespace corpus
