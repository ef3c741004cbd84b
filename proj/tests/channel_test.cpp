#include <gtest/gtest.h>

#include <cmath>

#include "tetra_sds/channel.hpp"

using namespace tetra_sds;

TEST(SnrOfLink, Examples) {
  const auto tu = PropagationModel::defaults(Environment::TU);
  LinkBudget b;
  EXPECT_DOUBLE_EQ(snr_of_link(b.reference_distance_m, 0.0, tu, b), b.tx_margin_db);
  // 10 * 3.5 * log10(2) = 10.536...
  const double drop = snr_of_link(800.0, 0.0, tu, b) - snr_of_link(1600.0, 0.0, tu, b);
  EXPECT_NEAR(drop, 10.536, 0.001);
  EXPECT_DOUBLE_EQ(snr_of_link(1200.0, 3.0, tu, b) - snr_of_link(1200.0, 0.0, tu, b), 3.0);
}

TEST(SnrOfLink, RejectsNonPositiveDistance) {
  const auto tu = PropagationModel::defaults(Environment::TU);
  EXPECT_THROW(snr_of_link(0.0, 0.0, tu, LinkBudget{}), StructuralError);
  EXPECT_THROW(snr_of_link(-5.0, 0.0, tu, LinkBudget{}), StructuralError);
}

TEST(BurstErrorProb, Examples) {
  for (auto e : {Environment::RA, Environment::TU, Environment::HT}) {
    const auto m = PropagationModel::defaults(e);
    EXPECT_DOUBLE_EQ(burst_error_prob(m.error_curve_midpoint_db, m), 0.5);
    EXPECT_LT(burst_error_prob(200.0, m), 1e-40);
    EXPECT_GT(burst_error_prob(-200.0, m), 1.0 - 1e-12);
    EXPECT_EQ(burst_error_prob(1e6, m), 0.0);
    EXPECT_EQ(burst_error_prob(-1e6, m), 1.0);
  }
  const double snr = 6.0;
  EXPECT_GT(burst_error_prob(snr, PropagationModel::defaults(Environment::HT)),
            burst_error_prob(snr, PropagationModel::defaults(Environment::TU)));
  EXPECT_GT(burst_error_prob(snr, PropagationModel::defaults(Environment::TU)),
            burst_error_prob(snr, PropagationModel::defaults(Environment::RA)));
}

TEST(BurstErrorProb, EnvironmentOrderingAndMonotonicity) {
  const auto ra = PropagationModel::defaults(Environment::RA);
  const auto tu = PropagationModel::defaults(Environment::TU);
  const auto ht = PropagationModel::defaults(Environment::HT);
  double prev_ra = 2.0, prev_tu = 2.0, prev_ht = 2.0;
  for (int snr = -20; snr <= 40; ++snr) {
    const double pr = burst_error_prob(snr, ra);
    const double pt = burst_error_prob(snr, tu);
    const double ph = burst_error_prob(snr, ht);
    EXPECT_LE(pr, pt) << snr;
    EXPECT_LE(pt, ph) << snr;
    for (double p : {pr, pt, ph}) {
      EXPECT_GE(p, 0.0);
      EXPECT_LE(p, 1.0);
    }
    EXPECT_LE(pr, prev_ra);
    EXPECT_LE(pt, prev_tu);
    EXPECT_LE(ph, prev_ht);
    prev_ra = pr, prev_tu = pt, prev_ht = ph;
  }
}

TEST(DecideBurst, Extremes) {
  RngStream s(7);
  for (int i = 0; i < 1000; ++i) {
    EXPECT_EQ(decide_burst(s, 0.0), BurstResult::Delivered);
    EXPECT_EQ(decide_burst(s, 1.0), BurstResult::Corrupted);
  }
  EXPECT_THROW(decide_burst(s, -0.01), StructuralError);
  EXPECT_THROW(decide_burst(s, 1.01), StructuralError);
  EXPECT_THROW(decide_burst(s, std::nan("")), StructuralError);
}

TEST(DecideBurst, FrequencyWithinThreeSigma) {
  RngStream s(20200601, 0, "channel-test");
  const int n = 1'000'000;
  int bad = 0;
  for (int i = 0; i < n; ++i) bad += decide_burst(s, 0.3) == BurstResult::Corrupted;
  EXPECT_NEAR(static_cast<double>(bad) / n, 0.3, 0.002);
}

TEST(DecideBurst, ConsumesExactlyOneDraw) {
  RngStream s(11);
  for (double p : {0.0, 0.2, 0.5, 1.0}) {
    const auto before = s.draws();
    decide_burst(s, p);
    EXPECT_EQ(s.draws(), before + 1);
  }
}

TEST(DrawLink, PlacementStaysInsideTheCell) {
  const auto tu = PropagationModel::defaults(Environment::TU);
  LinkBudget b;
  RngStream placement(1, 0, "placement"), shadowing(1, 0, "shadowing");
  double sum_r2 = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const auto l = draw_link(placement, shadowing, tu, b);
    EXPECT_GT(l.distance_m, 0.0);
    EXPECT_LE(l.distance_m, b.cell_radius_m);
    EXPECT_TRUE(std::isfinite(l.snr_db));
    EXPECT_GE(l.burst_error, 0.0);
    EXPECT_LE(l.burst_error, 1.0);
    sum_r2 += l.distance_m * l.distance_m;
  }
  // Uniform over the disk: E[r^2] = R^2 / 2.
  EXPECT_NEAR(sum_r2 / n / (b.cell_radius_m * b.cell_radius_m), 0.5, 0.01);
  EXPECT_EQ(placement.draws(), 2u * n);
  EXPECT_EQ(shadowing.draws(), 2u * n);
}

TEST(DrawLink, DownlinkGainLowersErrors) {
  const auto ht = PropagationModel::defaults(Environment::HT);
  LinkBudget b;
  b.downlink_gain_db = 6.0;
  RngStream placement(3), shadowing(4);
  for (int i = 0; i < 100; ++i) {
    const auto l = draw_link(placement, shadowing, ht, b);
    EXPECT_LE(l.burst_error_downlink, l.burst_error);
  }
}

TEST(Environment, ParseAndPrint) {
  for (auto e : {Environment::RA, Environment::TU, Environment::HT}) {
    EXPECT_EQ(parse_environment(to_string(e)), e);
  }
  EXPECT_EQ(parse_environment("ht"), Environment::HT);
  EXPECT_THROW(parse_environment("urban"), StructuralError);
}
