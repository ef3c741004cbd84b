#pragma once

// TETRA TDMA time base.
//
// A frame holds four 14.167 ms timeslots, a multiframe holds 18 frames and
// the MCCH sits on timeslot 1 of the main carrier.  Each MCCH slot splits into
// two subslots.  Internally every instant is an integer number of half-slots
// ("ticks") since the start of multiframe 0, so ordering is exact no matter
// how long the run; seconds are only ever a derived view.

#include <compare>
#include <cstdint>
#include <vector>

#include "tetra_sds/error.hpp"

namespace tetra_sds {

using Tick = std::int64_t;

struct TimingConstants {
  static constexpr double slot_duration = 0.014167;
  static constexpr double subslot_duration = slot_duration / 2.0;
  static constexpr double frame_duration = 4.0 * slot_duration;
  static constexpr int slots_per_frame = 4;
  static constexpr int multiframe_frames = 18;
  static constexpr int control_frame = 18;
  static constexpr int mcch_subslots_per_frame = 2;

  static constexpr Tick ticks_per_frame = 2 * slots_per_frame;
  static constexpr Tick ticks_per_multiframe = ticks_per_frame * multiframe_frames;
  static constexpr double multiframe_duration = multiframe_frames * frame_duration;
  // MCCH offset within the frame, in ticks.  Timeslot 1 is taken as offset 0.
  static constexpr Tick mcch_offset = 0;
};

inline constexpr double seconds_of(Tick t) {
  return static_cast<double>(t) * TimingConstants::subslot_duration;
}

// Smallest tick whose start is not earlier than `seconds`.
inline Tick tick_at_or_after(double seconds) {
  if (seconds <= 0.0) return 0;
  auto t = static_cast<Tick>(seconds / TimingConstants::subslot_duration);
  while (seconds_of(t) < seconds) ++t;
  while (t > 0 && seconds_of(t - 1) >= seconds) --t;
  return t;
}

inline constexpr Tick frame_start(Tick t) {
  return t - (t % TimingConstants::ticks_per_frame);
}

// 1-based frame number within the multiframe for tick `t`.
inline constexpr int frame_of(Tick t) {
  return static_cast<int>((t % TimingConstants::ticks_per_multiframe) /
                          TimingConstants::ticks_per_frame) +
         1;
}

inline constexpr bool is_mcch_tick(Tick t) {
  const Tick in_frame = t % TimingConstants::ticks_per_frame - TimingConstants::mcch_offset;
  return in_frame >= 0 && in_frame < TimingConstants::mcch_subslots_per_frame;
}

struct SubslotAddress {
  std::int64_t multiframe = 0;
  int frame = 1;    // 1..18
  int subslot = 0;  // 0 or 1

  auto operator<=>(const SubslotAddress&) const = default;

  bool valid() const {
    return multiframe >= 0 && frame >= 1 && frame <= TimingConstants::multiframe_frames &&
           (subslot == 0 || subslot == 1);
  }
};

inline void require_valid(const SubslotAddress& a) {
  if (!a.valid()) {
    throw StructuralError("invalid subslot address (multiframe " + std::to_string(a.multiframe) +
                          ", frame " + std::to_string(a.frame) + ", subslot " +
                          std::to_string(a.subslot) + ")");
  }
}

inline Tick to_tick(const SubslotAddress& a) {
  require_valid(a);
  return a.multiframe * TimingConstants::ticks_per_multiframe +
         (a.frame - 1) * TimingConstants::ticks_per_frame + TimingConstants::mcch_offset + a.subslot;
}

inline SubslotAddress address_at(Tick t) {
  if (t < 0 || !is_mcch_tick(t)) {
    throw StructuralError("tick " + std::to_string(t) + " is not an MCCH subslot");
  }
  SubslotAddress a;
  a.multiframe = t / TimingConstants::ticks_per_multiframe;
  a.frame = frame_of(t);
  a.subslot = static_cast<int>(t % TimingConstants::ticks_per_frame - TimingConstants::mcch_offset);
  return a;
}

// Goes through the tick count so that time_of and seconds_of agree to the
// last bit; summing frame and subslot durations separately can round apart.
inline double time_of(const SubslotAddress& a) { return seconds_of(to_tick(a)); }

// Following MCCH subslot on the timeline, optionally jumping over frame 18.
inline SubslotAddress next_mcch_subslot(SubslotAddress a, bool skip_frame_18) {
  require_valid(a);
  do {
    if (a.subslot == 0) {
      a.subslot = 1;
    } else {
      a.subslot = 0;
      if (++a.frame > TimingConstants::multiframe_frames) {
        a.frame = 1;
        ++a.multiframe;
      }
    }
  } while (skip_frame_18 && a.frame == TimingConstants::control_frame);
  return a;
}

// Tick form of next_mcch_subslot.  `t` need not be an MCCH tick; the result
// is the first MCCH tick strictly after it.
inline Tick next_mcch_tick(Tick t, bool skip_frame_18) {
  Tick n = t + 1;
  for (;;) {
    if (!is_mcch_tick(n)) {
      n = frame_start(n) + TimingConstants::ticks_per_frame + TimingConstants::mcch_offset;
      continue;
    }
    if (skip_frame_18 && frame_of(n) == TimingConstants::control_frame) {
      n = frame_start(n) + TimingConstants::ticks_per_frame + TimingConstants::mcch_offset;
      continue;
    }
    return n;
  }
}

// First MCCH tick at or after `t`.
inline Tick mcch_tick_at_or_after(Tick t, bool skip_frame_18) {
  if (is_mcch_tick(t) && !(skip_frame_18 && frame_of(t) == TimingConstants::control_frame)) {
    return t;
  }
  return next_mcch_tick(t, skip_frame_18);
}

// n consecutive MCCH subslots from `start`, never touching frame 18.
inline std::vector<SubslotAddress> reserved_run(SubslotAddress start, std::size_t n) {
  require_valid(start);
  if (n == 0) throw StructuralError("reserved_run: empty request");
  if (start.frame == TimingConstants::control_frame) start = next_mcch_subslot(start, true);
  std::vector<SubslotAddress> run;
  run.reserve(n);
  run.push_back(start);
  while (run.size() < n) run.push_back(next_mcch_subslot(run.back(), true));
  return run;
}

inline std::vector<Tick> reserved_run_ticks(Tick start, std::size_t n) {
  if (n == 0) throw StructuralError("reserved_run: empty request");
  std::vector<Tick> run;
  run.reserve(n);
  run.push_back(mcch_tick_at_or_after(start, true));
  while (run.size() < n) run.push_back(next_mcch_tick(run.back(), true));
  return run;
}

}  // namespace tetra_sds
