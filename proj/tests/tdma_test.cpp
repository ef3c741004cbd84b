#include <gtest/gtest.h>

#include <cmath>

#include "tetra_sds/tdma.hpp"

using namespace tetra_sds;

namespace {

// Independent decimal arithmetic: durations in units of 0.0000005 s so that
// 14.167 ms and its half are whole numbers.
constexpr std::int64_t kUnit = 28334;  // one slot in half-microseconds
constexpr double kUnitSeconds = 0.0000005;

double oracle_seconds(std::int64_t mf, int frame, int subslot) {
  const std::int64_t units = mf * 18 * 4 * kUnit + (frame - 1) * 4 * kUnit + subslot * (kUnit / 2);
  return static_cast<double>(units) * kUnitSeconds;
}

}  // namespace

TEST(TimingConstants, SlotArithmetic) {
  EXPECT_DOUBLE_EQ(TimingConstants::frame_duration, 4 * TimingConstants::slot_duration);
  EXPECT_DOUBLE_EQ(TimingConstants::subslot_duration, TimingConstants::slot_duration / 2);
  EXPECT_NEAR(TimingConstants::frame_duration, 0.056668, 1e-12);
  EXPECT_NEAR(TimingConstants::multiframe_duration, 1.020024, 1e-12);
  EXPECT_NEAR(1000 * TimingConstants::multiframe_duration, 1020.024, 1e-9);
}

TEST(TimeOf, Examples) {
  EXPECT_DOUBLE_EQ(time_of({0, 1, 0}), 0.0);
  EXPECT_NEAR(time_of({0, 1, 1}), 0.0070835, 1e-12);
  EXPECT_NEAR(time_of({0, 2, 0}), 0.056668, 1e-12);
}

TEST(TimeOf, MatchesDecimalOracle) {
  for (std::int64_t mf : {0, 1, 7, 999}) {
    for (int f = 1; f <= 18; ++f) {
      for (int s = 0; s < 2; ++s) {
        EXPECT_NEAR(time_of({mf, f, s}), oracle_seconds(mf, f, s), 1e-9);
      }
    }
  }
}

TEST(TimeOf, RejectsInvalidAddresses) {
  EXPECT_THROW(time_of({0, 0, 0}), StructuralError);
  EXPECT_THROW(time_of({0, 19, 0}), StructuralError);
  EXPECT_THROW(time_of({0, 1, 2}), StructuralError);
  EXPECT_THROW(time_of({-1, 1, 0}), StructuralError);
}

TEST(NextMcchSubslot, Examples) {
  EXPECT_EQ(next_mcch_subslot({0, 1, 0}, true), (SubslotAddress{0, 1, 1}));
  EXPECT_EQ(next_mcch_subslot({0, 17, 1}, true), (SubslotAddress{1, 1, 0}));
  EXPECT_EQ(next_mcch_subslot({0, 17, 1}, false), (SubslotAddress{0, 18, 0}));
  EXPECT_EQ(next_mcch_subslot({0, 18, 1}, false), (SubslotAddress{1, 1, 0}));
}

TEST(ReservedRun, Examples) {
  EXPECT_EQ(reserved_run({0, 17, 0}, 3),
            (std::vector<SubslotAddress>{{0, 17, 0}, {0, 17, 1}, {1, 1, 0}}));
  EXPECT_EQ(reserved_run({0, 1, 0}, 1), (std::vector<SubslotAddress>{{0, 1, 0}}));
  EXPECT_EQ(reserved_run({0, 1, 0}, 4),
            (std::vector<SubslotAddress>{{0, 1, 0}, {0, 1, 1}, {0, 2, 0}, {0, 2, 1}}));
  EXPECT_THROW(reserved_run({0, 1, 0}, 0), StructuralError);
}

TEST(ReservedRun, NeverTouchesFrame18) {
  for (int f = 1; f <= 18; ++f) {
    for (int s = 0; s < 2; ++s) {
      for (std::size_t n : {1u, 8u, 40u}) {
        const auto run = reserved_run({3, f, s}, n);
        ASSERT_EQ(run.size(), n);
        for (std::size_t i = 0; i < run.size(); ++i) {
          EXPECT_NE(run[i].frame, 18);
          if (i > 0) {
            EXPECT_LT(run[i - 1], run[i]);
          }
        }
      }
    }
  }
}

TEST(ReservedRun, TickFormAgreesWithAddresses) {
  for (int f = 1; f <= 18; ++f) {
    const SubslotAddress start{2, f, 1};
    const auto addrs = reserved_run(start, 9);
    const auto ticks = reserved_run_ticks(to_tick(start), 9);
    ASSERT_EQ(addrs.size(), ticks.size());
    for (std::size_t i = 0; i < addrs.size(); ++i) EXPECT_EQ(to_tick(addrs[i]), ticks[i]);
  }
}

TEST(Address, RoundTripThroughTicksAndSeconds) {
  for (std::int64_t mf = 0; mf < 3; ++mf) {
    for (int f = 1; f <= 18; ++f) {
      for (int s = 0; s < 2; ++s) {
        const SubslotAddress a{mf, f, s};
        EXPECT_EQ(address_at(to_tick(a)), a);
        EXPECT_EQ(address_at(tick_at_or_after(time_of(a))), a);
        EXPECT_DOUBLE_EQ(seconds_of(to_tick(a)), time_of(a));
      }
    }
  }
}

TEST(Address, LongRunRoundTrip) {
  const SubslotAddress a{999, 18, 1};
  EXPECT_EQ(address_at(tick_at_or_after(time_of(a))), a);
}

TEST(Address, TimeStrictlyIncreasesAlongChains) {
  for (bool skip : {false, true}) {
    SubslotAddress a{0, 1, 0};
    double prev = time_of(a);
    for (int i = 0; i < 5000; ++i) {
      const auto b = next_mcch_subslot(a, skip);
      ASSERT_LT(a, b);
      const double t = time_of(b);
      ASSERT_GT(t, prev);
      if (skip) {
        ASSERT_NE(b.frame, 18);
      }
      prev = t;
      a = b;
    }
  }
}

TEST(Ticks, NonMcchTickHasNoAddress) {
  EXPECT_THROW(address_at(2), StructuralError);
  EXPECT_THROW(address_at(-1), StructuralError);
  EXPECT_EQ(next_mcch_tick(1, false), 8);
  EXPECT_EQ(next_mcch_tick(3, false), 8);
  EXPECT_EQ(mcch_tick_at_or_after(136, true), 144);
  EXPECT_EQ(mcch_tick_at_or_after(136, false), 136);
}

TEST(Ticks, TickAtOrAfter) {
  EXPECT_EQ(tick_at_or_after(0.0), 0);
  EXPECT_EQ(tick_at_or_after(-3.0), 0);
  EXPECT_EQ(tick_at_or_after(TimingConstants::subslot_duration), 1);
  EXPECT_EQ(tick_at_or_after(TimingConstants::subslot_duration * 1.5), 2);
  for (Tick t = 0; t < 2000; t += 37) EXPECT_EQ(tick_at_or_after(seconds_of(t)), t);
}
