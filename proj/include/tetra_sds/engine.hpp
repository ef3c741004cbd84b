#pragma once

// Discrete-event loop for one replication of a single TETRA cell.
//
// Station layout: first responders are ids [0, n_f), the remote agent is
// n_f, background MSs follow.  Random substreams are named by role and
// per-role index, so e.g. responder 3 sees the same arrivals whatever n_c is.

#include <cmath>
#include <cstdint>
#include <optional>
#include <queue>
#include <set>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "tetra_sds/bs_mac.hpp"
#include "tetra_sds/channel.hpp"
#include "tetra_sds/config.hpp"
#include "tetra_sds/metrics.hpp"
#include "tetra_sds/ms_mac.hpp"
#include "tetra_sds/rng.hpp"
#include "tetra_sds/tdma.hpp"
#include "tetra_sds/traffic.hpp"

namespace tetra_sds {

// Same-tick processing order.  Arrivals happened somewhere in the preceding
// half-slot, so they go first; subslot boundaries run before timers.
enum class EventClass : int { Arrival = 0, GrantDelivery = 1, Subslot = 2, Timer = 3, CallEnd = 4 };

enum class EventType {
  ReportArrival,
  BackgroundSdsArrival,
  VoiceArrival,
  FeedbackArrival,
  GrantDelivery,
  McchSubslot,
  WtExpiry,
  AckTimeout,
  CallEnd,
};

struct Event {
  Tick tick = 0;
  EventClass cls = EventClass::Subslot;
  StationId station = 0;
  std::uint64_t seq = 0;
  EventType type = EventType::McchSubslot;
  double time = 0.0;       // exact instant for arrivals
  std::int64_t ref = 0;    // grant id, message id, ...
};

class EventQueue {
 public:
  void push(Event e) {
    if (e.tick < now_) throw std::logic_error("event scheduled in the past");
    e.seq = next_seq_++;
    heap_.push(e);
  }

  bool empty() const { return heap_.empty(); }
  std::size_t size() const { return heap_.size(); }
  Tick now() const { return now_; }

  Event pop() {
    Event e = heap_.top();
    heap_.pop();
    if (e.tick < now_) throw std::logic_error("event processed out of time order");
    now_ = e.tick;
    return e;
  }

 private:
  struct Later {
    bool operator()(const Event& a, const Event& b) const {
      if (a.tick != b.tick) return a.tick > b.tick;
      if (a.cls != b.cls) return a.cls > b.cls;
      if (a.time != b.time) return a.time > b.time;  // arrivals inside one half-slot
      if (a.station != b.station) return a.station > b.station;
      return a.seq > b.seq;
    }
  };
  std::priority_queue<Event, std::vector<Event>, Later> heap_;
  Tick now_ = 0;
  std::uint64_t next_seq_ = 0;
};

enum class StationRole { Responder, RemoteAgent, Background };

struct BsCounters {
  long long report_receptions = 0;  // complete uplink reports rebuilt at the BS
  long long report_acks = 0;
  long long report_forward_jobs = 0;
  long long acks_total = 0;
  long long forwards_completed = 0;
  long long forwards_failed = 0;
  long long collisions = 0;
  long long idle_opportunities = 0;
  long long successes = 0;
  long long lost_access_bursts = 0;
  long long calls_started = 0;
  long long calls_blocked = 0;
};

struct ReplicationResult {
  RunSummary summary;
  MetricStore metrics;
  std::array<Counts, 4> by_kind{};  // whole run, indexed by MessageKind
  BsCounters bs;
  long long events = 0;
  std::vector<std::string> stream_names;
};

class Simulation {
 public:
  Simulation(const ScenarioConfig& cfg, std::uint64_t replication)
      : cfg_(cfg),
        traffic_(cfg.resolved_traffic()),
        replication_(replication),
        schedule_(cfg.code_pattern, cfg.access_in_frame_18),
        downlink_(cfg.downlink_order),
        horizon_(cfg.horizon_ticks()) {
    cfg_.validate();
    result_.metrics = MetricStore(cfg_.warmup_seconds());
    result_.metrics.set_closure(cfg_.paoi_closure);
    build_stations();
  }

  ReplicationResult run() {
    seed_arrivals();
    events_.push(make(0, EventClass::Subslot, 0, EventType::McchSubslot));
    while (!events_.empty()) {
      Event e = events_.pop();
      if (e.tick >= horizon_) break;
      ++result_.events;
      dispatch(e);
    }
    finish();
    return std::move(result_);
  }

 private:
  struct Station {
    StationId id = 0;
    StationRole role = StationRole::Background;
    int index = 0;
    MsContext ctx;
    RadioLink link;
    double burst_error = 0.0;           // MS -> BS
    double burst_error_downlink = 0.0;  // BS -> MS
    RngStream sds;      // SDS / report / feedback arrivals
    RngStream voice;    // call arrivals and durations
    RngStream channel;  // every burst to or from this station
    RngStream backoff;
  };

  std::string stream_name(const Station& s, const char* purpose) const {
    switch (s.role) {
      case StationRole::Responder: return "responder/" + std::to_string(s.index) + "/" + purpose;
      case StationRole::RemoteAgent: return std::string("agent/") + purpose;
      case StationRole::Background: return "background/" + std::to_string(s.index) + "/" + purpose;
    }
    return purpose;
  }

  RngStream open_stream(const std::string& name) {
    result_.stream_names.push_back(name);
    return RngStream(cfg_.master_seed, replication_, name);
  }

  void build_stations() {
    const int n_f = traffic_.n_f;
    const int n_c = traffic_.n_c;
    stations_.reserve(static_cast<std::size_t>(n_f + n_c + 1));
    auto add = [&](StationRole role, int index) {
      Station s;
      s.id = static_cast<StationId>(stations_.size());
      s.role = role;
      s.index = index;
      s.ctx = MsContext(s.id, cfg_.code_for(static_cast<std::size_t>(s.id)));
      s.sds = open_stream(stream_name(s, "sds"));
      s.voice = open_stream(stream_name(s, "voice"));
      s.channel = open_stream(stream_name(s, "channel"));
      s.backoff = open_stream(stream_name(s, "backoff"));
      RngStream placement = open_stream(stream_name(s, "placement"));
      RngStream shadowing = open_stream(stream_name(s, "shadowing"));
      s.link = draw_link(placement, shadowing, cfg_.model(), cfg_.link);
      s.burst_error = cfg_.error_free_channel ? 0.0 : s.link.burst_error;
      s.burst_error_downlink = cfg_.error_free_channel ? 0.0 : s.link.burst_error_downlink;
      stations_.push_back(std::move(s));
    };
    for (int i = 0; i < n_f; ++i) add(StationRole::Responder, i);
    agent_ = static_cast<StationId>(n_f);
    add(StationRole::RemoteAgent, 0);
    first_background_ = static_cast<StationId>(stations_.size());
    for (int j = 0; j < n_c; ++j) add(StationRole::Background, j);
  }

  Event make(Tick tick, EventClass cls, StationId st, EventType type, double time = 0.0,
             std::int64_t ref = 0) const {
    Event e;
    e.tick = tick;
    e.cls = cls;
    e.station = st;
    e.type = type;
    e.time = time;
    e.ref = ref;
    return e;
  }

  void schedule_arrival(Station& s, EventType type, double t) {
    if (t >= cfg_.horizon_seconds()) return;
    events_.push(make(tick_at_or_after(t), EventClass::Arrival, s.id, type, t));
  }

  void seed_arrivals() {
    for (auto& s : stations_) {
      switch (s.role) {
        case StationRole::Responder:
          if (traffic_.lambda_o > 0.0) {
            schedule_arrival(s, EventType::ReportArrival, sample_interarrival(traffic_.lambda_o, s.sds));
          }
          break;
        case StationRole::RemoteAgent:
          if (traffic_.lambda_f() > 0.0) {
            schedule_arrival(s, EventType::FeedbackArrival, sample_interarrival(traffic_.lambda_f(), s.sds));
          }
          break;
        case StationRole::Background:
          if (traffic_.lambda_c() > 0.0) {
            schedule_arrival(s, EventType::BackgroundSdsArrival, sample_interarrival(traffic_.lambda_c(), s.sds));
          }
          if (traffic_.lambda_voice() > 0.0) {
            schedule_arrival(s, EventType::VoiceArrival, sample_interarrival(traffic_.lambda_voice(), s.voice));
          }
          break;
      }
    }
  }

  void dispatch(const Event& e) {
    switch (e.type) {
      case EventType::ReportArrival:
      case EventType::BackgroundSdsArrival:
      case EventType::VoiceArrival:
      case EventType::FeedbackArrival: on_arrival(e); break;
      case EventType::GrantDelivery: on_grant_delivery(e); break;
      case EventType::McchSubslot: on_subslot(e.tick); break;
      case EventType::WtExpiry: on_wt_expiry(e); break;
      case EventType::AckTimeout: on_ack_timeout(e); break;
      case EventType::CallEnd: on_call_end(e); break;
    }
  }

  // ---- arrivals -----------------------------------------------------------

  void on_arrival(const Event& e) {
    Station& s = stations_[static_cast<std::size_t>(e.station)];
    SdsMessage m;
    m.id = next_message_id_++;
    m.source = s.id;
    m.generated_at = e.time;
    switch (e.type) {
      case EventType::ReportArrival:
        m = generate_report(m.id, s.id, agent_, e.time, traffic_);
        schedule_arrival(s, EventType::ReportArrival, e.time + sample_interarrival(traffic_.lambda_o, s.sds));
        break;
      case EventType::FeedbackArrival:
        m.kind = MessageKind::Feedback;
        m.destination = static_cast<StationId>(s.sds.below(static_cast<std::uint64_t>(traffic_.n_f)));
        m.payload_bits = 8 * traffic_.feedback_bytes;
        schedule_arrival(s, EventType::FeedbackArrival, e.time + sample_interarrival(traffic_.lambda_f(), s.sds));
        break;
      case EventType::BackgroundSdsArrival: {
        m.kind = MessageKind::Background;
        m.payload_bits = 8 * traffic_.background_bytes;
        m.destination = background_destination(s);
        if (traffic_.background_holding_timer) {
          m.holding_deadline = e.time + *traffic_.background_holding_timer;
        }
        schedule_arrival(s, EventType::BackgroundSdsArrival, e.time + sample_interarrival(traffic_.lambda_c(), s.sds));
        break;
      }
      case EventType::VoiceArrival: {
        const VoiceCall call = generate_voice_call(s.id, e.time, traffic_, s.voice);
        m.kind = MessageKind::VoiceSetup;
        m.destination = s.id;
        m.payload_bits = 1;
        m.call_duration = call.duration;
        schedule_arrival(s, EventType::VoiceArrival, e.time + sample_interarrival(traffic_.lambda_voice(), s.voice));
        break;
      }
      default: return;
    }
    count(m.kind).generated += 1;
    if (m.kind == MessageKind::Report) result_.metrics.on_generated(flow_of(m), m.generated_at);
    s.ctx.queue().push(std::move(m));
    purge(s, seconds_of(e.tick));
    try_prime(s);
  }

  StationId background_destination(Station& s) {
    const auto n_c = static_cast<std::uint64_t>(traffic_.n_c);
    if (n_c < 2) {
      s.sds.below(1);
      return agent_;
    }
    auto j = s.sds.below(n_c - 1);
    if (j >= static_cast<std::uint64_t>(s.index)) ++j;
    return first_background_ + static_cast<StationId>(j);
  }

  // ---- MS helpers ---------------------------------------------------------

  Counts& count(MessageKind k) { return result_.by_kind[static_cast<std::size_t>(k)]; }

  static FlowKey flow_of(const SdsMessage& m) { return {m.source, m.destination}; }

  int draw_backoff(Station& s, bool first_attempt) {
    if (first_attempt && cfg_.immediate_first_attempt) return 0;
    return static_cast<int>(s.backoff.below(static_cast<std::uint64_t>(cfg_.backoff_window)));
  }

  void purge(Station& s, double now) {
    for (auto& m : purge_expired(s.ctx.queue(), now)) record_drop(m, DropCause::Holding);
    s.ctx.settle();
  }

  void try_prime(Station& s) {
    if (s.ctx.state() != MsState::Idle || s.ctx.queue().empty() || s.ctx.contending()) return;
    s.ctx.prime(draw_backoff(s, true));
    contenders_.insert(s.id);
  }

  void record_drop(const SdsMessage& m, DropCause cause) {
    count(m.kind).add_drop(cause);
    if (m.kind == MessageKind::Report) result_.metrics.on_dropped(flow_of(m), m.generated_at, cause);
  }

  void after_message(Station& s, Tick now) {
    purge(s, seconds_of(now));
    try_prime(s);
  }

  // Holding-timer abort of an in-flight message, when enabled.
  bool maybe_abort(Station& s, Tick now) {
    if (!cfg_.abort_in_flight_on_expiry) return false;
    const auto& cur = s.ctx.current_message();
    if (!cur || !cur->holding_deadline || !(*cur->holding_deadline < seconds_of(now))) return false;
    auto m = s.ctx.abort_current();
    record_drop(*m, DropCause::Holding);
    after_message(s, now);
    return true;
  }

  void on_delivered(Station& s, const SdsMessage& m, Tick t) {
    count(m.kind).delivered += 1;
    if (m.kind == MessageKind::Report) {
      result_.metrics.on_delivered_at_ack(flow_of(m), m.generated_at,
                                          seconds_of(t) + TimingConstants::subslot_duration);
    }
    if (m.kind == MessageKind::VoiceSetup) start_call(s, m, t);
    after_message(s, t);
  }

  // ---- voice --------------------------------------------------------------

  void start_call(Station& s, const SdsMessage& m, Tick t) {
    if (cfg_.traffic_channels > 0 && active_calls_ >= cfg_.traffic_channels) {
      ++result_.bs.calls_blocked;
      return;
    }
    ++active_calls_;
    ++result_.bs.calls_started;
    const Tick end = tick_at_or_after(seconds_of(t) + m.call_duration);
    events_.push(make(end, EventClass::CallEnd, s.id, EventType::CallEnd));
  }

  void on_call_end(const Event& e) {
    --active_calls_;
    if (cfg_.voice_teardown_downlink_subslots > 0) {
      DownlinkJob job;
      job.kind = DownlinkKind::VoiceTeardown;
      job.recipient = e.station;
      job.fragments = cfg_.voice_teardown_downlink_subslots;
      job.ready_at = e.tick;
      downlink_.push(job);
    }
  }

  // ---- MCCH subslot -------------------------------------------------------

  void on_subslot(Tick t) {
    if (frame_of(t) != TimingConstants::control_frame) serve_downlink(t);
    serve_uplink(t);
    schedule_.prune_before(t);
    const Tick next = next_mcch_tick(t, false);
    if (next < horizon_) events_.push(make(next, EventClass::Subslot, 0, EventType::McchSubslot));
  }

  void serve_downlink(Tick t) {
    auto burst = downlink_.serve(t, cfg_.sds_retry_limit, [&](const DownlinkJob& job) {
      Station& r = stations_[static_cast<std::size_t>(job.recipient)];
      return decide_burst(r.channel, r.burst_error_downlink) == BurstResult::Corrupted;
    });
    if (!burst || !burst->job_done) return;
    const DownlinkJob& job = burst->job;
    Station& r = stations_[static_cast<std::size_t>(job.recipient)];
    switch (job.kind) {
      case DownlinkKind::Ack:
      case DownlinkKind::VoiceAssignment: {
        if (job.corrupted) return;
        MsResult res = r.ctx.on_ack(job.message);
        if (res.outcome == MsOutcome::Delivered) on_delivered(r, *res.finished, t);
        break;
      }
      case DownlinkKind::VoiceTeardown: break;
      case DownlinkKind::ForwardSds: {
        if (job.corrupted) {
          ++result_.bs.forwards_failed;
          return;
        }
        ++result_.bs.forwards_completed;
        const SdsMessage& m = *job.payload;
        if (m.kind == MessageKind::Report) {
          result_.metrics.on_forwarded(flow_of(m), m.id, m.generated_at,
                                       seconds_of(t) + TimingConstants::subslot_duration);
        }
        break;
      }
    }
  }

  void serve_uplink(Tick t) {
    switch (schedule_.use_of(t)) {
      case SubslotUse::Control: return;
      case SubslotUse::ReservedUplink: {
        const auto res = *schedule_.reservation_at(t);
        Station& s = stations_[static_cast<std::size_t>(res.station)];
        bool delivered = false;
        if (auto frag = s.ctx.on_reserved_subslot(t)) {
          delivered = decide_burst(s.channel, s.burst_error) == BurstResult::Delivered;
          if (frag->last) {
            events_.push(make(*s.ctx.ack_expiry(), EventClass::Timer, s.id, EventType::AckTimeout));
          }
        }
        if (auto done = schedule_.record_fragment(t, delivered)) {
          auto it = grant_messages_.find(done->grant.id);
          if (reassemble_and_ack(true, done->received)) bs_received(it->second, t + 1);
          grant_messages_.erase(it);
        }
        return;
      }
      case SubslotUse::Open: serve_access(t); return;
    }
  }

  void serve_access(Tick t) {
    const AccessCode code = schedule_.next_opportunity_code();
    bursts_.clear();
    for (auto it = contenders_.begin(); it != contenders_.end();) {
      Station& s = stations_[static_cast<std::size_t>(*it)];
      if (s.ctx.state() == MsState::Idle) purge(s, seconds_of(t));
      if (!s.ctx.contending()) {
        it = contenders_.erase(it);
        continue;
      }
      if (auto b = s.ctx.on_access_opportunity(t, code, cfg_.access, cfg_.subslot_capacity_bits,
                                               cfg_.ack_wait_frames)) {
        bursts_.push_back(*b);
        events_.push(make(*s.ctx.wt_expiry(), EventClass::Timer, s.id, EventType::WtExpiry));
        it = contenders_.erase(it);
        continue;
      }
      ++it;
    }
    const AccessOutcome out = resolve_access(bursts_, [&](const AccessBurst& b) {
      Station& s = stations_[static_cast<std::size_t>(b.station)];
      return decide_burst(s.channel, s.burst_error);
    });
    switch (out.result) {
      case AccessResult::Idle:
        if (bursts_.empty()) ++result_.bs.idle_opportunities;
        else ++result_.bs.lost_access_bursts;
        return;
      case AccessResult::Collision: ++result_.bs.collisions; return;
      case AccessResult::Success: break;
    }
    ++result_.bs.successes;
    const AccessBurst& w = *out.winner;
    Station& s = stations_[static_cast<std::size_t>(w.station)];
    const SdsMessage& m = *s.ctx.current_message();
    Grant g = schedule_.issue_grant(w.station, w.message, w.reserved_requested, t, cfg_.grant_delay_frames);
    events_.push(make(g.delivered_at, EventClass::GrantDelivery, w.station, EventType::GrantDelivery, 0.0, g.id));
    pending_grants_.emplace(g.id, g);
    if (g.subslots.empty()) {
      bs_received(m, g.delivered_at);
    } else {
      grant_messages_.emplace(g.id, m);
    }
  }

  // Whole message rebuilt at the BS: ACK (or call assignment) and forwarding.
  void bs_received(const SdsMessage& m, Tick ready_at) {
    DownlinkJob ack;
    ack.recipient = m.source;
    ack.message = m.id;
    ack.ready_at = ready_at;
    if (m.kind == MessageKind::VoiceSetup) {
      ack.kind = DownlinkKind::VoiceAssignment;
      ack.fragments = std::max(1, cfg_.voice_setup_downlink_subslots);
      downlink_.push(ack);
      return;
    }
    ack.kind = DownlinkKind::Ack;
    downlink_.push(ack);
    ++result_.bs.acks_total;
    if (m.kind == MessageKind::Report) {
      ++result_.bs.report_receptions;
      ++result_.bs.report_acks;
    }
    if (m.destination == m.source) return;
    DownlinkJob fwd;
    fwd.kind = DownlinkKind::ForwardSds;
    fwd.recipient = m.destination;
    fwd.message = m.id;
    fwd.payload = m;
    fwd.fragments = fragments_needed(m.payload_bits, cfg_.subslot_capacity_bits);
    fwd.ready_at = ready_at;
    downlink_.push(std::move(fwd));
    if (m.kind == MessageKind::Report) ++result_.bs.report_forward_jobs;
  }

  void on_grant_delivery(const Event& e) {
    auto it = pending_grants_.find(e.ref);
    if (it == pending_grants_.end()) return;
    const Grant g = std::move(it->second);
    pending_grants_.erase(it);
    Station& s = stations_[static_cast<std::size_t>(g.station)];
    if (decide_burst(s.channel, s.burst_error_downlink) == BurstResult::Corrupted) return;
    const MsState before = s.ctx.state();
    s.ctx.on_grant(g.message, g.subslots, cfg_.subslot_capacity_bits);
    if (before == MsState::AwaitingGrant && s.ctx.state() == MsState::AwaitingAck) {
      events_.push(make(*s.ctx.ack_expiry(), EventClass::Timer, s.id, EventType::AckTimeout));
    }
  }

  void on_wt_expiry(const Event& e) {
    Station& s = stations_[static_cast<std::size_t>(e.station)];
    if (s.ctx.state() != MsState::AwaitingGrant || s.ctx.wt_expiry() != e.tick) return;
    if (maybe_abort(s, e.tick)) return;
    MsResult r = s.ctx.on_wt_expiry(e.tick, cfg_.access, draw_backoff(s, false));
    if (r.outcome == MsOutcome::Retry) {
      contenders_.insert(s.id);
    } else if (r.outcome == MsOutcome::DroppedNu) {
      record_drop(*r.finished, DropCause::Nu);
      after_message(s, e.tick);
    }
  }

  void on_ack_timeout(const Event& e) {
    Station& s = stations_[static_cast<std::size_t>(e.station)];
    if (s.ctx.state() != MsState::AwaitingAck || s.ctx.ack_expiry() != e.tick) return;
    if (maybe_abort(s, e.tick)) return;
    MsResult r = s.ctx.on_ack_timeout(e.tick, cfg_.sds_retry_limit, draw_backoff(s, true));
    if (r.outcome == MsOutcome::FullRetry) {
      contenders_.insert(s.id);
    } else if (r.outcome == MsOutcome::DroppedSdsRetry) {
      record_drop(*r.finished, DropCause::SdsRetry);
      after_message(s, e.tick);
    }
  }

  void finish() {
    const double end = cfg_.horizon_seconds();
    long long report_pending = 0;
    for (auto& s : stations_) {
      purge(s, end);
      auto tally = [&](const SdsMessage& m) {
        count(m.kind).pending += 1;
        if (m.kind == MessageKind::Report && result_.metrics.in_window(m.generated_at)) ++report_pending;
      };
      if (s.ctx.current_message()) tally(*s.ctx.current_message());
      for (const auto& m : s.ctx.queue().pending()) tally(m);
    }
    result_.metrics.set_pending(report_pending);
    result_.summary = result_.metrics.summary();
  }

  ScenarioConfig cfg_;
  TrafficConfig traffic_;
  std::uint64_t replication_;
  BsSchedule schedule_;
  DownlinkQueue downlink_;
  Tick horizon_;
  EventQueue events_;
  std::vector<Station> stations_;
  StationId agent_ = 0;
  StationId first_background_ = 0;
  std::set<StationId> contenders_;
  std::vector<AccessBurst> bursts_;
  std::unordered_map<std::int64_t, Grant> pending_grants_;
  std::unordered_map<std::int64_t, SdsMessage> grant_messages_;
  MessageId next_message_id_ = 0;
  int active_calls_ = 0;
  ReplicationResult result_;
};

inline ReplicationResult run_replication_detailed(const ScenarioConfig& cfg, std::uint64_t replication) {
  return Simulation(cfg, replication).run();
}

inline RunSummary run_replication(const ScenarioConfig& cfg, std::uint64_t replication) {
  return run_replication_detailed(cfg, replication).summary;
}

}  // namespace tetra_sds
