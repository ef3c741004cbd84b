#pragma once

// Base-station MAC: access-code marking of open MCCH subslots, contention
// resolution, MAC-RESOURCE grants over reserved uplink runs, reassembly with
// ACK, and the prioritised downlink queue.

#include <algorithm>
#include <array>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "tetra_sds/channel.hpp"
#include "tetra_sds/ms_mac.hpp"
#include "tetra_sds/tdma.hpp"
#include "tetra_sds/traffic.hpp"

namespace tetra_sds {

enum class SubslotUse { Open, ReservedUplink, Control };

struct UplinkReservation {
  StationId station = 0;
  std::int64_t grant_id = 0;
};

struct Grant {
  std::int64_t id = 0;
  StationId station = 0;
  MessageId message = 0;
  Tick issued_at = 0;
  Tick delivered_at = 0;  // MAC-RESOURCE on the downlink
  std::vector<Tick> subslots;
};

enum class AccessResult { Idle, Success, Collision };

struct AccessOutcome {
  AccessResult result = AccessResult::Idle;
  std::optional<AccessBurst> winner;
  int contenders = 0;
};

// 0 bursts: idle.  2 or more: collision, no capture.  Exactly one: success
// iff the channel delivers it; a corrupted lone burst looks idle to the BS.
// `decide` is only invoked for a lone burst.
inline AccessOutcome resolve_access(std::span<const AccessBurst> bursts,
                                    const std::function<BurstResult(const AccessBurst&)>& decide) {
  AccessOutcome out;
  out.contenders = static_cast<int>(bursts.size());
  if (bursts.empty()) return out;
  if (bursts.size() >= 2) {
    out.result = AccessResult::Collision;
    return out;
  }
  if (decide(bursts.front()) == BurstResult::Delivered) {
    out.result = AccessResult::Success;
    out.winner = bursts.front();
  }
  return out;
}

class BsSchedule {
 public:
  explicit BsSchedule(std::vector<AccessCode> pattern = {AccessCode::A},
                      bool access_in_frame_18 = false)
      : pattern_(std::move(pattern)), access_in_frame_18_(access_in_frame_18) {
    if (pattern_.empty()) throw StructuralError("access code pattern must be nonempty");
  }

  const std::vector<AccessCode>& pattern() const { return pattern_; }

  SubslotUse use_of(Tick t) const {
    if (uplink_.contains(t)) return SubslotUse::ReservedUplink;
    if (!access_in_frame_18_ && frame_of(t) == TimingConstants::control_frame) {
      return SubslotUse::Control;
    }
    return SubslotUse::Open;
  }

  std::optional<UplinkReservation> reservation_at(Tick t) const {
    auto it = uplink_.find(t);
    if (it == uplink_.end()) return std::nullopt;
    return it->second;
  }

  // Code for the next open subslot in timeline order; rotates through the pattern.
  AccessCode next_opportunity_code() { return pattern_[opportunities_++ % pattern_.size()]; }

  std::size_t reserved_count() const { return uplink_.size(); }

  struct GrantProgress {
    Grant grant;
    std::vector<bool> received;
  };

  // Earliest run of `n_reserved` free subslots starting no earlier than the
  // frame `grant_delay_frames` after `now`.  Marks them reserved.
  Grant issue_grant(StationId station, MessageId message, int n_reserved, Tick now,
                    int grant_delay_frames = 1) {
    Grant g;
    g.id = next_grant_id_++;
    g.station = station;
    g.message = message;
    g.issued_at = now;
    g.delivered_at = frame_start(now) + grant_delay_frames * TimingConstants::ticks_per_frame;
    if (n_reserved <= 0) return g;
    Tick candidate = mcch_tick_at_or_after(g.delivered_at, true);
    for (;;) {
      auto run = reserved_run_ticks(candidate, static_cast<std::size_t>(n_reserved));
      auto clash = std::find_if(run.begin(), run.end(), [&](Tick t) { return uplink_.contains(t); });
      if (clash == run.end()) {
        g.subslots = std::move(run);
        break;
      }
      candidate = next_mcch_tick(*clash, true);
    }
    for (Tick t : g.subslots) {
      auto [it, inserted] = uplink_.emplace(t, UplinkReservation{station, g.id});
      if (!inserted) throw std::logic_error("uplink subslot double-booked");
    }
    grants_.emplace(g.id, GrantProgress{g, std::vector<bool>(g.subslots.size(), false)});
    return g;
  }

  // Records reception of one reserved fragment.  Returns the completed grant
  // progress when `t` is the final subslot of its run.
  std::optional<GrantProgress> record_fragment(Tick t, bool delivered) {
    auto it = uplink_.find(t);
    if (it == uplink_.end()) return std::nullopt;
    auto g = grants_.find(it->second.grant_id);
    uplink_.erase(it);
    if (g == grants_.end()) return std::nullopt;
    auto& prog = g->second;
    for (std::size_t i = 0; i < prog.grant.subslots.size(); ++i) {
      if (prog.grant.subslots[i] == t) prog.received[i] = delivered;
    }
    if (prog.grant.subslots.back() != t) return std::nullopt;
    GrantProgress done = std::move(prog);
    grants_.erase(g);
    return done;
  }

  // Drops reservations strictly before `now` that nobody transmitted in.
  void prune_before(Tick now) {
    while (!uplink_.empty() && uplink_.begin()->first < now) uplink_.erase(uplink_.begin());
  }

 private:
  std::vector<AccessCode> pattern_;
  bool access_in_frame_18_;
  std::uint64_t opportunities_ = 0;
  std::int64_t next_grant_id_ = 1;
  std::map<Tick, UplinkReservation> uplink_;
  std::map<std::int64_t, GrantProgress> grants_;
};

struct MarkedOpportunity {
  SubslotAddress address;
  AccessCode code;
};

// Access-code marking over `horizon_multiframes` multiframes from `from`:
// every open (unreserved, non-control) MCCH subslot gets the next code of the
// rotation.  Does not advance the schedule's own rotation.
inline std::vector<MarkedOpportunity> mark_opportunities(const BsSchedule& schedule,
                                                         std::int64_t horizon_multiframes,
                                                         Tick from = 0) {
  std::vector<MarkedOpportunity> out;
  const auto& pattern = schedule.pattern();
  const Tick end = from + horizon_multiframes * TimingConstants::ticks_per_multiframe;
  std::size_t k = 0;
  for (Tick t = mcch_tick_at_or_after(from, false); t < end; t = next_mcch_tick(t, false)) {
    if (schedule.use_of(t) != SubslotUse::Open) continue;
    out.push_back({address_at(t), pattern[k++ % pattern.size()]});
  }
  return out;
}

// True when the BS can rebuild the message: the fragment carried in
// MAC-ACCESS plus every reserved fragment arrived intact.
inline bool reassemble_and_ack(bool access_fragment_ok, const std::vector<bool>& reserved_received) {
  if (!access_fragment_ok) return false;
  for (bool ok : reserved_received) {
    if (!ok) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Downlink

enum class DownlinkClass { Voice = 0, Ack = 1, Sds = 2 };
inline constexpr std::size_t kDownlinkClasses = 3;

enum class DownlinkKind { Ack, VoiceAssignment, VoiceTeardown, ForwardSds };

struct DownlinkJob {
  DownlinkKind kind = DownlinkKind::Ack;
  StationId recipient = 0;
  MessageId message = 0;  // the uplink message this job answers or forwards
  std::optional<SdsMessage> payload;
  int fragments = 1;
  int sent = 0;
  bool corrupted = false;
  int retries = 0;
  Tick ready_at = 0;
};

struct DownlinkBurst {
  DownlinkJob job;  // snapshot after this burst
  bool job_done = false;
};

class DownlinkQueue {
 public:
  // `order[i]` is the class served i-th; default voice > ack > sds.
  explicit DownlinkQueue(std::array<DownlinkClass, kDownlinkClasses> order = {
                             DownlinkClass::Voice, DownlinkClass::Ack, DownlinkClass::Sds})
      : order_(order) {}

  static DownlinkClass class_of(DownlinkKind k) {
    switch (k) {
      case DownlinkKind::VoiceAssignment:
      case DownlinkKind::VoiceTeardown: return DownlinkClass::Voice;
      case DownlinkKind::Ack: return DownlinkClass::Ack;
      case DownlinkKind::ForwardSds: return DownlinkClass::Sds;
    }
    return DownlinkClass::Sds;
  }

  void push(DownlinkJob job) { queues_[static_cast<std::size_t>(class_of(job.kind))].push_back(std::move(job)); }

  bool empty() const {
    for (const auto& q : queues_) {
      if (!q.empty()) return false;
    }
    return true;
  }

  std::size_t size() const {
    std::size_t n = 0;
    for (const auto& q : queues_) n += q.size();
    return n;
  }

  const std::deque<DownlinkJob>& jobs(DownlinkClass c) const {
    return queues_[static_cast<std::size_t>(c)];
  }

  // Picks the job for one downlink subslot at `now`: highest class first,
  // FIFO inside a class.  A multi-fragment job sends one fragment per call.
  // `corrupted` reports the channel outcome of the burst that is about to be
  // sent.  A forwarded SDS with a corrupted fragment is resent in full up to
  // `sds_retry_limit` times.
  std::optional<DownlinkBurst> serve(Tick now, int sds_retry_limit,
                                     const std::function<bool(const DownlinkJob&)>& corrupted) {
    for (DownlinkClass c : order_) {
      auto& q = queues_[static_cast<std::size_t>(c)];
      if (q.empty() || q.front().ready_at > now) continue;
      DownlinkJob& job = q.front();
      if (corrupted(job)) job.corrupted = true;
      ++job.sent;
      DownlinkBurst burst{job, false};
      if (job.sent < job.fragments) return burst;
      if (job.corrupted && job.kind == DownlinkKind::ForwardSds && job.retries < sds_retry_limit) {
        ++job.retries;
        job.sent = 0;
        job.corrupted = false;
        return burst;
      }
      burst.job = job;
      burst.job_done = true;
      q.pop_front();
      return burst;
    }
    return std::nullopt;
  }

 private:
  std::array<DownlinkClass, kDownlinkClasses> order_;
  std::array<std::deque<DownlinkJob>, kDownlinkClasses> queues_;
};

}  // namespace tetra_sds
