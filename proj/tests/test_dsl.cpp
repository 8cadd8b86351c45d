#include <gtest/gtest.h>

#include <cstdio>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "corpus_support.hpp"
#include "heraldlab/dsl.hpp"

using namespace heraldlab;
using namespace heraldlab::dsl;

namespace {

std::string messages(const std::vector<Diagnostic>& ds) {
  std::string out;
  for (const auto& d : ds) out += d.to_string() + "\n";
  return out;
}

CompiledPipeline compile_ok(const std::string& text) {
  auto p = parse(text);
  EXPECT_TRUE(p.ok()) << messages(p.errors);
  auto c = validate(p.ast);
  EXPECT_TRUE(c.ok()) << messages(c.errors);
  return c.pipeline.value_or(CompiledPipeline{});
}

std::vector<Diagnostic> semantic_errors(const std::string& text) {
  auto p = parse(text);
  EXPECT_TRUE(p.ok()) << messages(p.errors);
  return validate(p.ast).errors;
}

}  // namespace

// ---------------------------------------------------------------------------
// Parser

TEST(Parser, SourceDirective) {
  const auto r = parse("source 1 0.707107 0.707107");
  ASSERT_TRUE(r.ok());
  ASSERT_EQ(r.ast.directives.size(), 1u);
  const auto& d = std::get<SourceDecl>(r.ast.directives[0].body);
  EXPECT_EQ(d.mode, ModeLabel("1"));
  EXPECT_DOUBLE_EQ(d.alpha.value().real(), 0.707107);
  EXPECT_DOUBLE_EQ(d.beta.value().real(), 0.707107);
  EXPECT_EQ(r.ast.directives[0].position, (SourcePosition{1, 1}));
}

TEST(Parser, UnknownDirective) {
  const auto r = parse("pbz 1 2 -> 1p 2p");
  ASSERT_EQ(r.errors.size(), 1u);
  EXPECT_EQ(r.errors[0].to_string(), "unknown directive 'pbz' at line 1, column 1");
}

TEST(Parser, CollectsAllErrors) {
  const auto r = parse("pbz\nsource 1 a b\n\n  measure x zz\n");
  ASSERT_EQ(r.errors.size(), 4u);
  EXPECT_EQ(r.errors[0].position, (SourcePosition{1, 1}));
  EXPECT_EQ(r.errors[1].position, (SourcePosition{2, 10}));
  EXPECT_EQ(r.errors[2].position, (SourcePosition{2, 12}));
  EXPECT_EQ(r.errors[3].position, (SourcePosition{4, 13}));
}

TEST(Parser, CommentsBlankLinesAndCrlf) {
  const auto r = parse("# header\r\n\r\nsource 1 1 0 # trailing\r\n   \r\nqndm 1\r\n");
  ASSERT_TRUE(r.ok()) << messages(r.errors);
  ASSERT_EQ(r.ast.directives.size(), 2u);
  EXPECT_EQ(r.ast.directives[1].position.line, 5);
}

TEST(Parser, KeywordsAreCaseSensitive) { EXPECT_FALSE(parse("Source 1 1 0").ok()); }

TEST(Parser, ComplexLiteralForms) {
  const auto value = [](const char* text) { return parse_complex_value(text); };
  EXPECT_EQ(value("0.5"), Complex(0.5, 0));
  EXPECT_EQ(value("-0.5i"), Complex(0, -0.5));
  EXPECT_EQ(value("i"), Complex(0, 1));
  EXPECT_EQ(value("0.6+0.8i"), Complex(0.6, 0.8));
  EXPECT_EQ(value("0.6-0.8i"), Complex(0.6, -0.8));
  EXPECT_EQ(value("1e-3+2E+1i"), Complex(1e-3, 20));
  EXPECT_EQ(value("sqrt(0.25)"), Complex(0.5, 0));
  EXPECT_EQ(value("-sqrt(0.25)-sqrt(0.25)i"), Complex(-0.5, -0.5));
  const auto polar = value("2@1.5707963267948966");
  ASSERT_TRUE(polar);
  EXPECT_NEAR(std::abs(*polar - Complex(0, 2)), 0.0, 1e-15);
  for (const char* bad : {"", "x", "1..2", "nan", "inf", "1+", "0.5ii", "sqrt(-1)", "@1", "1@", "--1"})
    EXPECT_FALSE(value(bad)) << bad;
}

TEST(Parser, LabelsAndKets) {
  EXPECT_TRUE(parse("mode a_1 b' C9''").ok());
  const auto bad = parse("mode a-b");
  ASSERT_EQ(bad.errors.size(), 1u);
  EXPECT_EQ(bad.errors[0].message, "invalid label 'a-b'");
  const auto target = parse("target state 1 a=H,b=V -1 a=V,b=H");
  ASSERT_TRUE(target.ok());
  const auto& t = std::get<TargetDecl>(target.ast.directives[0].body);
  ASSERT_EQ(t.terms.size(), 2u);
  EXPECT_EQ(t.terms[1].ket[0].occupation, (Occupation{0, 1}));
  EXPECT_EQ(parse("target state 1 a=Q").errors.at(0).message, "malformed ket 'a=Q'");
}

TEST(Parser, OptionsAndDuplicates) {
  const auto ok = parse("qndm c model=sqrt_rabi cg=0.6 cd=0.8i\npbs a b -> c d phase=-1");
  ASSERT_TRUE(ok.ok()) << messages(ok.errors);
  const auto& q = std::get<QndmDecl>(ok.ast.directives[0].body);
  EXPECT_EQ(q.model, MultiPhotonModel::SqrtRabi);
  EXPECT_EQ(q.c_d->value(), Complex(0, 0.8));
  const auto dup = parse("qndm c cg=1 cg=0");
  ASSERT_EQ(dup.errors.size(), 1u);
  EXPECT_EQ(dup.errors[0].message, "duplicate option 'cg'");
}

// ---------------------------------------------------------------------------
// Pretty printer

TEST(PrettyPrint, CanonicalNumbers) {
  const auto r = parse("source   1   0.7071067811   0.7071067811");
  EXPECT_EQ(pretty_print(r.ast), "source 1 0.707107 0.707107\n");
  EXPECT_EQ(pretty_print(parse("source x -0.0 -0.6-0.8i").ast), "source x 0.000000 -0.600000-0.800000i\n");
  EXPECT_EQ(pretty_print(parse("qndm 1' cd=1@-0.5").ast), "qndm 1' cd=1.000000@-0.500000\n");
}

TEST(PrettyPrint, RoundTripsEveryDirectiveKind) {
  const std::string text =
      "mode v w\nsource 1 sqrt(0.5) sqrt(0.5)i\nsource 2 mixed 0.75\nbell psi- a b\n"
      "pbs 1 a -> 1' a' phase=0.6+0.8i\nqndm 1' model=ideal cg=0.6 cd=0.8\nmeasure a' pm\n"
      "target state 0.5 1'=H,b=V -0.5i 1'=V,b=H\n";
  EXPECT_TRUE(corpus::round_trips(text));
  EXPECT_TRUE(corpus::round_trips("target ghz3 x y z\n"));
}

// ---------------------------------------------------------------------------
// Validator

TEST(Validate, BellPipelineStages) {
  const auto p = compile_ok("source 1 sqrt(0.5) sqrt(0.5)\nsource 2 sqrt(0.5) sqrt(0.5)\npbs 1 2 -> 1' 2'\nqndm 1'\n");
  EXPECT_EQ(p.stage_names(), (std::vector<std::string>{"build sources", "pbs", "qndm"}));
  EXPECT_EQ(p.initial_photons, 2u);
  EXPECT_EQ(p.final_modes, (ModeSet{"1'", "2'"}));
}

TEST(Validate, UndeclaredModeNamesModeAndPosition) {
  const auto errors = semantic_errors("source 1 1 0\npbs 7 1 -> a b\n");
  ASSERT_EQ(errors.size(), 1u);
  EXPECT_EQ(errors[0].to_string(), "pbs references undeclared mode '7' at line 2, column 1");
}

TEST(Validate, UnnormalizedSource) {
  const auto errors = semantic_errors("source 1 1 1\n");
  ASSERT_EQ(errors.size(), 1u);
  EXPECT_EQ(errors[0].message, "unnormalized source: |\xCE\xB1|\xC2\xB2+|\xCE\xB2|\xC2\xB2 = 2");
}

TEST(Validate, NormalizationToleranceIsOneInABillion) {
  EXPECT_TRUE(semantic_errors("source 1 0.6 0.8000000001\n").empty());
  EXPECT_EQ(semantic_errors("source 1 0.6 0.80001\n").size(), 1u);
  // Six printed decimals of 1/sqrt(2) are outside the tolerance.
  EXPECT_EQ(semantic_errors("source 1 0.707107 0.707107\n").size(), 1u);
}

TEST(Validate, ConsumedAndMeasuredModes) {
  EXPECT_EQ(semantic_errors("bell phi+ a b\npbs a b -> c d\nqndm a\n").at(0).message,
            "qndm uses mode 'a', which was already consumed by a pbs");
  EXPECT_EQ(semantic_errors("bell phi+ a b\nmeasure a hv\nmeasure a hv\n").at(0).message,
            "measure uses mode 'a' after it was measured");
}

TEST(Validate, OutputLabelsMustBeFresh) {
  const auto errors = semantic_errors("bell phi+ a b\nsource c 1 0\npbs a b -> c d\n");
  ASSERT_EQ(errors.size(), 1u);
  EXPECT_EQ(errors[0].message, "pbs output label 'c' is already in use");
  EXPECT_EQ(semantic_errors("bell phi+ a b\npbs a b -> c c\n").at(0).message, "pbs outputs must be distinct, got 'c' twice");
  // Reusing a consumed label is also rejected.
  EXPECT_EQ(semantic_errors("bell phi+ a b\npbs a b -> c d\npbs c d -> a e\n").size(), 1u);
}

TEST(Validate, MeasureNeedsStaticSinglePhoton) {
  EXPECT_TRUE(semantic_errors("source 1 1 0\nmeasure 1 hv\n").empty());
  EXPECT_EQ(semantic_errors("source 1 1 0\nsource 2 1 0\npbs 1 2 -> a b\nmeasure b hv\n").size(), 1u);
  EXPECT_TRUE(semantic_errors("source 1 1 0\nsource 2 1 0\npbs 1 2 -> a b\nqndm a\nmeasure b hv\n").empty());
  // A non-projective meter does not certify the photon number.
  EXPECT_EQ(semantic_errors("source 1 1 0\nsource 2 1 0\npbs 1 2 -> a b\nqndm a model=sqrt_rabi\nmeasure a hv\n").size(),
            1u);
  EXPECT_EQ(semantic_errors("mode v\nmeasure v hv\n").size(), 1u);
}

TEST(Validate, MixedFractionAndMeter) {
  EXPECT_EQ(semantic_errors("source 1 mixed 1.2\n").at(0).message, "mixed source fraction must lie in [0, 1], got 1.2");
  EXPECT_EQ(semantic_errors("source 1 1 0\nqndm 1 cg=1 cd=1\n").at(0).message,
            "unnormalized meter: |cg|\xC2\xB2+|cd|\xC2\xB2 = 2");
  EXPECT_EQ(semantic_errors("bell phi+ a b\npbs a b -> c d phase=2\n").at(0).message,
            "pbs phase must have unit modulus, got |phase| = 2");
}

TEST(Validate, VacuumModesCanBeFilledOnce) {
  const auto p = compile_ok("mode 1 2\nsource 1 1 0\nsource 2 0 1\n");
  EXPECT_EQ(p.preparations.size(), 2u);
  EXPECT_EQ(semantic_errors("mode 1\nsource 1 1 0\nsource 1 1 0\n").at(0).message, "source redeclares mode '1'");
  EXPECT_EQ(semantic_errors("mode 1\nmode 1\n").at(0).message, "mode redeclares mode '1'");
}

TEST(Validate, Targets) {
  EXPECT_EQ(semantic_errors("bell phi+ a b\nsource c 1 0\ntarget phi+\n").at(0).message,
            "target 'phi+' needs 2 modes, got 3 {a, b, c}");
  EXPECT_EQ(semantic_errors("bell phi+ a b\ntarget phi+ a z\n").at(0).message,
            "target mode 'z' is not live at the end of the circuit");
  EXPECT_EQ(semantic_errors("bell phi+ a b\ntarget phi+\ntarget phi-\n").at(0).message,
            "duplicate target (first declared at line 2)");
  EXPECT_EQ(semantic_errors("bell phi+ a b\ntarget state 0 a=H,b=H\n").at(0).message, "target state has zero norm");
  EXPECT_TRUE(semantic_errors("bell phi+ a b\nsource c 1 0\ntarget ghz3\n").empty());
}

// ---------------------------------------------------------------------------
// Runner

TEST(Run, BellScript) {
  const auto p = compile_ok("source 1 sqrt(0.5) sqrt(0.5)\nsource 2 sqrt(0.5) sqrt(0.5)\npbs 1 2 -> 1' 2'\nqndm 1'\ntarget phi+\n");
  const auto r = run(p);
  EXPECT_EQ(r.success_probability, 0.5);
  ASSERT_TRUE(r.fidelity);
  EXPECT_NEAR(*r.fidelity, 1.0, 1e-12);
  EXPECT_FALSE(r.monte_carlo);
}

TEST(Run, GhzScriptFromBellPair) {
  const auto p = compile_ok(
      "source 1 sqrt(0.5) sqrt(0.5)\nbell psi- 2 3\npbs 1 2 -> 1' 2'\nqndm 1'\n"
      "target state 1 1'=H,2'=H,3=V -1 1'=V,2'=V,3=H\n");
  const auto r = run(p);
  EXPECT_NEAR(r.success_probability, 0.5, 1e-12);
  EXPECT_NEAR(r.fidelity.value(), 1.0, 1e-12);
}

TEST(Run, AlwaysTwoPhotonsNeverHeralds) {
  const auto r = run(compile_ok("source 1 0 1\nsource 2 1 0\npbs 1 2 -> a b\nqndm a\n"));
  EXPECT_EQ(r.success_probability, 0.0);
  EXPECT_FALSE(r.final_state);
  EXPECT_EQ(r.to_json()["final_state"], nullptr);
}

TEST(Run, MonteCarloIsSeededAndByteStable) {
  const auto p = compile_ok("source 1 sqrt(0.5) sqrt(0.5)\nsource 2 sqrt(0.5) sqrt(0.5)\npbs 1 2 -> 1' 2'\nqndm 1'\n");
  const auto a = run(p, {20000, 9}).to_json().dump();
  const auto b = run(p, {20000, 9}).to_json().dump();
  const auto c = run(p, {20000, 10}).to_json().dump();
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
  const auto mc = run(p, {20000, 9}).monte_carlo.value();
  EXPECT_NEAR(mc.estimate, 0.5, 5 * mc.std_error);
}

TEST(Run, MixedSourcesGiveValidDensityMatrix) {
  const auto r = run(compile_ok("source 1 mixed 0.8\nsource 2 mixed 0.8\npbs 1 2 -> a b\nqndm a\nmeasure b pm\n"));
  ASSERT_TRUE(r.final_state);
  const auto& rho = std::get<DensityMatrix>(*r.final_state);
  EXPECT_NO_THROW(rho.validate());
  const double f = 0.64 / (0.64 + 0.04);
  EXPECT_NEAR(rho.entry(OccupationKet({{"a", "H"}}), OccupationKet({{"a", "H"}})).real(), f, 1e-12);
}

// ---------------------------------------------------------------------------
// Golden corpus

namespace corpus {
// Keeps gtest from dumping the raw bytes of each parameter.
void PrintTo(const Entry& e, std::ostream* os) { *os << e.script.filename().string(); }
}  // namespace corpus

class Corpus : public ::testing::TestWithParam<corpus::Entry> {};

TEST_P(Corpus, MatchesExpectation) {
  const std::string mismatch = corpus::check(GetParam());
  EXPECT_TRUE(mismatch.empty()) << GetParam().name << ": " << mismatch;
}

// Scripts with only semantic errors still parse, so they must round-trip too.
TEST_P(Corpus, ParsableFilesRoundTrip) {
  const std::string text = corpus::read_file(GetParam().script);
  if (!heraldlab::dsl::parse(text).ok()) GTEST_SKIP() << "syntax errors by design";
  EXPECT_TRUE(corpus::round_trips(text));
}

TEST_P(Corpus, ErrorPositionsWithinInput) {
  const std::string text = corpus::read_file(GetParam().script);
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto end = text.find('\n', start);
    lines.push_back(text.substr(start, end == std::string::npos ? std::string::npos : end - start));
    if (end == std::string::npos) break;
    start = end + 1;
  }
  for (const auto& d : corpus::execute(text).errors) {
    ASSERT_GE(d.position.line, 1);
    ASSERT_LE(static_cast<std::size_t>(d.position.line), lines.size());
    EXPECT_GE(d.position.column, 1);
    EXPECT_LE(static_cast<std::size_t>(d.position.column), lines[static_cast<std::size_t>(d.position.line - 1)].size());
  }
}

INSTANTIATE_TEST_SUITE_P(Golden, Corpus, ::testing::ValuesIn(corpus::entries(HERALDLAB_CORPUS_DIR)),
                         [](const auto& info) { return info.param.name; });

TEST(CorpusShape, SizeAndMix) {
  const auto all = corpus::entries(HERALDLAB_CORPUS_DIR);
  const auto malformed = std::count_if(all.begin(), all.end(), [](const auto& e) { return e.errors.has_value(); });
  EXPECT_GE(all.size(), 12u);
  EXPECT_GE(malformed, 5);
}

TEST(SampleCircuits, AllRun) {
  std::size_t count = 0;
  for (const auto& f : std::filesystem::directory_iterator(HERALDLAB_CIRCUITS_DIR)) {
    if (f.path().extension() != ".hd") continue;
    ++count;
    const auto o = corpus::execute(corpus::read_file(f.path()));
    EXPECT_EQ(o.stage, "run") << f.path() << "\n" << messages(o.errors);
    EXPECT_TRUE(corpus::round_trips(corpus::read_file(f.path()))) << f.path();
  }
  EXPECT_GT(count, 0u);
}

// ---------------------------------------------------------------------------
// Randomized scripts: whatever the validator accepts must run cleanly.

namespace {

std::string random_script(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> coin(0, 99);
  std::normal_distribution<double> gauss;
  std::vector<std::string> live;
  std::string text;
  int fresh = 0;
  const auto label = [&] { return "m" + std::to_string(fresh++); };
  const auto pick = [&]() -> std::string {
    if (live.empty()) return "nope";
    std::uniform_int_distribution<std::size_t> i(0, live.size() - 1);
    return live[i(rng)];
  };
  const auto number = [](double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return std::string(buf);
  };

  const int preps = 2 + coin(rng) % 3;
  for (int k = 0; k < preps; ++k) {
    const int kind = coin(rng);
    if (kind < 60) {
      const double a = gauss(rng), b = gauss(rng), c = gauss(rng), d = gauss(rng);
      const double n = std::sqrt(a * a + b * b + c * c + d * d);
      const std::string m = label();
      text += "source " + m + " " + number(a / n) + (b >= 0 ? "+" : "") + number(b / n) + "i " + number(c / n) +
              (d >= 0 ? "+" : "") + number(d / n) + "i\n";
      live.push_back(m);
    } else if (kind < 80) {
      const std::string a = label(), b = label();
      static const char* kinds[] = {"phi+", "phi-", "psi+", "psi-"};
      text += std::string("bell ") + kinds[coin(rng) % 4] + " " + a + " " + b + "\n";
      live.push_back(a);
      live.push_back(b);
    } else if (kind < 90) {
      const std::string m = label();
      text += "source " + m + " mixed " + number(coin(rng) / 99.0) + "\n";
      live.push_back(m);
    } else {
      const std::string m = label();
      text += "mode " + m + "\n";
      live.push_back(m);
    }
  }
  const int ops = 1 + coin(rng) % 6;
  for (int k = 0; k < ops; ++k) {
    const int kind = coin(rng);
    if (kind < 40 && live.size() >= 2) {
      const std::string a = pick();
      std::string b = pick();
      const std::string oa = label(), ob = label();
      text += "pbs " + a + " " + b + " -> " + oa + " " + ob + (coin(rng) < 20 ? " phase=-1" : "") + "\n";
      std::erase(live, a);
      std::erase(live, b);
      live.push_back(oa);
      live.push_back(ob);
    } else if (kind < 75) {
      text += "qndm " + pick() + (coin(rng) < 15 ? " model=sqrt_rabi" : "") + "\n";
    } else {
      const std::string m = pick();
      text += "measure " + m + (coin(rng) < 50 ? " hv" : " pm") + "\n";
      std::erase(live, m);
    }
  }
  return text;
}

}  // namespace

TEST(RandomScripts, AcceptedPipelinesRunWithoutBudgetErrors) {
  std::mt19937_64 rng(31337);
  int accepted = 0;
  int attempts = 0;
  while (accepted < 100 && attempts < 20000) {
    ++attempts;
    const std::string text = random_script(rng);
    auto parsed = parse(text);
    ASSERT_TRUE(parsed.ok()) << text << messages(parsed.errors);
    auto compiled = validate(parsed.ast);
    if (!compiled.ok()) continue;
    ++accepted;
    EXPECT_NO_THROW({
      const auto r = run(*compiled.pipeline, {100, 1});
      EXPECT_GE(r.success_probability, 0.0);
      EXPECT_LE(r.success_probability, 1.0 + 1e-12);
      for (const auto& s : r.steps) {
        double total = 0.0;
        for (const auto& b : s.branches) total += b.probability;
        if (!s.branches.empty()) {
          EXPECT_NEAR(total, 1.0, 1e-9) << text;
        }
      }
    }) << text;
    EXPECT_TRUE(corpus::round_trips(text)) << text;
  }
  EXPECT_EQ(accepted, 100);
}
