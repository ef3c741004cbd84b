#pragma once

// Message and call arrivals, plus the per-station output queue with its
// holding timer.

#include <cstdint>
#include <deque>
#include <optional>
#include <vector>

#include "tetra_sds/error.hpp"
#include "tetra_sds/rng.hpp"

namespace tetra_sds {

using StationId = std::int32_t;
using MessageId = std::int64_t;

enum class MessageKind {
  Report,      // first responder -> remote agent
  Background,  // background MS -> another MS
  Feedback,    // remote agent -> first responder
  VoiceSetup,  // call setup signalling, no payload
};

struct SdsMessage {
  MessageId id = 0;
  MessageKind kind = MessageKind::Report;
  StationId source = 0;
  StationId destination = 0;
  int payload_bits = 0;
  double generated_at = 0.0;
  std::optional<double> holding_deadline;
  int sds_retry_count = 0;
  double call_duration = 0.0;  // VoiceSetup only
};

inline constexpr int kSdsType4MaxBits = 2047;

struct TrafficConfig {
  int n_f = 10;
  int n_c = 100;
  double lambda_o = 0.1;               // reports per second per responder
  double lambda_c_per_hour = 10.0;     // SDS per hour per background MS
  double lambda_voice_per_hour = 3.0;  // calls per hour per background MS
  double feedback_per_responder_per_s = 1.0 / 60.0;  // lambda_F = n_f / 60 s
  double call_duration_min = 20.0;
  double call_duration_max = 40.0;
  int report_bytes = 100;
  int background_bytes = 100;
  int feedback_bytes = 1;
  std::optional<double> holding_timer;  // first-responder reports only
  std::optional<double> background_holding_timer;

  int n_tot() const { return n_c + n_f + 1; }
  double lambda_c() const { return lambda_c_per_hour / 3600.0; }
  double lambda_voice() const { return lambda_voice_per_hour / 3600.0; }
  double lambda_f() const { return n_f * feedback_per_responder_per_s; }
};

inline double sample_interarrival(double rate, RngStream& stream) {
  if (!(rate > 0.0)) throw StructuralError("sample_interarrival: rate must be positive");
  return stream.exponential(rate);
}

inline SdsMessage generate_report(MessageId id, StationId responder, StationId remote_agent,
                                  double t, const TrafficConfig& cfg) {
  SdsMessage m;
  m.id = id;
  m.kind = MessageKind::Report;
  m.source = responder;
  m.destination = remote_agent;
  m.payload_bits = 8 * cfg.report_bytes;
  m.generated_at = t;
  if (cfg.holding_timer) m.holding_deadline = t + *cfg.holding_timer;
  return m;
}

struct VoiceCall {
  StationId ms = 0;
  double setup_at = 0.0;
  double duration = 0.0;
};

// One uniform draw.
inline VoiceCall generate_voice_call(StationId ms, double t, const TrafficConfig& cfg,
                                     RngStream& stream) {
  return {ms, t, stream.uniform(cfg.call_duration_min, cfg.call_duration_max)};
}

class OutputQueue {
 public:
  explicit OutputQueue(StationId owner = 0) : owner_(owner) {}

  StationId owner() const { return owner_; }
  bool empty() const { return pending_.empty(); }
  std::size_t size() const { return pending_.size(); }
  const SdsMessage& front() const { return pending_.front(); }
  const std::deque<SdsMessage>& pending() const { return pending_; }

  void push(SdsMessage m) {
    if (!pending_.empty() && m.generated_at < pending_.back().generated_at) {
      throw StructuralError("output queue: messages must arrive in generation order");
    }
    pending_.push_back(std::move(m));
  }

  SdsMessage pop() {
    SdsMessage m = std::move(pending_.front());
    pending_.pop_front();
    return m;
  }

 private:
  friend std::vector<SdsMessage> purge_expired(OutputQueue& q, double now);
  StationId owner_;
  std::deque<SdsMessage> pending_;
};

// Removes every message whose holding deadline is strictly before `now`.
inline std::vector<SdsMessage> purge_expired(OutputQueue& q, double now) {
  std::vector<SdsMessage> dropped;
  bool any = false;
  for (const auto& m : q.pending_) {
    if (m.holding_deadline && *m.holding_deadline < now) {
      any = true;
      break;
    }
  }
  if (!any) return dropped;
  std::deque<SdsMessage> kept;
  for (auto& m : q.pending_) {
    if (m.holding_deadline && *m.holding_deadline < now) {
      dropped.push_back(std::move(m));
    } else {
      kept.push_back(std::move(m));
    }
  }
  q.pending_ = std::move(kept);
  return dropped;
}

}  // namespace tetra_sds
