#include <gtest/gtest.h>

#include <cmath>

#include "heraldlab/purification.hpp"
#include "oracle.hpp"

using namespace heraldlab;

TEST(FUpdate, FixedPointsAreExact) {
  EXPECT_EQ(f_update(0.0), 0.0);
  EXPECT_EQ(f_update(0.5), 0.5);
  EXPECT_EQ(f_update(1.0), 1.0);
  EXPECT_THROW(f_update(1.5), Error);
}

TEST(PurifyRound, SixTenthsGivesNineThirteenths) {
  const auto r = purify_round(diagonal_photon_state(0.6));
  EXPECT_NEAR(r.output_f, 9.0 / 13.0, 1e-12);
  EXPECT_NEAR(r.post_selection_probability, 0.36 + 0.16, 1e-12);
  EXPECT_NEAR(r.yield_fraction, 0.26, 1e-12);
  EXPECT_NO_THROW(r.output_state.validate());
}

TEST(PurifyRound, ExactChannelMatchesRationalOracle) {
  for (int q : {7, 10, 13, 20}) {
    for (int p = 0; p <= q; ++p) {
      const oracle::Rational f = oracle::Rational::make(p, q);
      const auto r = purify_round(diagonal_photon_state(f.value()));
      EXPECT_NEAR(r.output_f, oracle::purify_step(f).value(), 1e-12) << p << "/" << q;
    }
  }
}

TEST(PurifyRound, BranchesAreEquallyLikelyAndCorrected) {
  const auto r = purify_round(diagonal_photon_state(0.7));
  ASSERT_EQ(r.outcome_branches.size(), 2u);
  for (const auto& b : r.outcome_branches) {
    EXPECT_NEAR(b.probability, 0.5, 1e-12);
    EXPECT_NEAR(h_fraction(b.state), f_update(0.7), 1e-12);
  }
}

TEST(PurifyRound, EntangledMixtureBeforeMeasurement) {
  // f^2 |HH><HH| + (1-f)^2 |VV><VV| normalized, no coherence for diagonal input.
  const DensityMatrix rho = entangled_mixture_check(diagonal_photon_state(0.6));
  const OccupationKet hh({{"1'", "H"}, {"2'", "H"}});
  const OccupationKet vv({{"1'", "V"}, {"2'", "V"}});
  EXPECT_NEAR(rho.entry(hh, hh).real(), 0.36 / 0.52, 1e-12);
  EXPECT_NEAR(rho.entry(vv, vv).real(), 0.16 / 0.52, 1e-12);
  EXPECT_NEAR(std::abs(rho.entry(hh, vv)), 0.0, 1e-12);
}

TEST(PurifyRound, RejectsMultiPhotonInput) {
  DensityMatrix rho(ModeSet{"1"});
  const OccupationKet hv({{"1", "HV"}});
  rho.add(hv, hv, 1.0);
  EXPECT_THROW(purify_round(rho), InvalidDensityMatrixError);
}

TEST(Iterate, TrajectoryFromSixTenthsIsExact) {
  const auto t = iterate(0.6, 3);
  ASSERT_EQ(t.rows.size(), 4u);
  oracle::Rational f = oracle::Rational::make(3, 5);
  for (int k = 1; k <= 3; ++k) {
    f = oracle::purify_step(f);
    EXPECT_NEAR(t.rows[static_cast<std::size_t>(k)].f, f.value(), 1e-12) << "round " << k;
  }
  EXPECT_EQ(f, (oracle::Rational{6561, 6817}));
  EXPECT_FALSE(t.rows[0].selection_probability);
  EXPECT_FALSE(t.non_purifying);
}

TEST(Iterate, HalfIsNonPurifying) {
  const auto t = iterate(0.5, 5);
  EXPECT_TRUE(t.non_purifying);
  for (const auto& row : t.rows) EXPECT_DOUBLE_EQ(row.f, 0.5);
}

TEST(Iterate, PerfectInputHalvesYield) {
  const auto t = iterate(1.0, 2);
  EXPECT_DOUBLE_EQ(t.rows.back().f, 1.0);
  EXPECT_NEAR(t.rows.back().cumulative_yield, 0.25, 1e-15);
  EXPECT_NEAR(*t.rows[1].selection_probability, 1.0, 1e-15);
}

TEST(Iterate, MonotoneAboveOneHalf) {
  for (double f = 0.51; f < 1.0; f += 0.01) {
    const double next = purify_round(diagonal_photon_state(f)).output_f;
    EXPECT_GT(next, f);
    EXPECT_LE(next, 1.0);
  }
}
