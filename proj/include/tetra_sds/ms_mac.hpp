#pragma once

// Mobile-station side of the SDS random access procedure.
//
// The transition table lives in ms_transition() and is the single source of
// truth; MsContext evaluates the guards (code match, backoff, attempt and
// retry counters) and then applies whatever the table says.  The committed
// copy of the table is docs/ms_transition_table.md.

#include <array>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "tetra_sds/error.hpp"
#include "tetra_sds/tdma.hpp"
#include "tetra_sds/traffic.hpp"

namespace tetra_sds {

enum class AccessCode { A, B, C, D };

inline char to_char(AccessCode c) { return static_cast<char>('A' + static_cast<int>(c)); }

inline AccessCode parse_access_code(std::string_view s) {
  if (s.size() == 1 && s[0] >= 'A' && s[0] <= 'D') return static_cast<AccessCode>(s[0] - 'A');
  throw StructuralError("unknown access code '" + std::string(s) + "'");
}

struct AccessParams {
  int wt = 5;  // TDMA frames
  int nu = 5;  // random access attempts per message
  AccessCode access_code = AccessCode::A;

  void validate() const {
    if (wt < 1 || wt > 15) throw StructuralError("WT must lie in [1,15]");
    if (nu < 1 || nu > 15) throw StructuralError("Nu must lie in [1,15]");
  }
};

inline int fragments_needed(int payload_bits, int subslot_capacity_bits) {
  if (subslot_capacity_bits < 1) throw StructuralError("fragments_needed: zero subslot capacity");
  if (payload_bits < 1) throw StructuralError("fragments_needed: empty payload");
  return (payload_bits + subslot_capacity_bits - 1) / subslot_capacity_bits;
}

enum class MsState { Idle, AwaitingGrant, SendingReserved, AwaitingAck };

// Events with their guard already resolved.
enum class MsEvent {
  OpportunityEligible,
  OpportunityNotEligible,
  WtExpiredRetry,      // attempts < Nu
  WtExpiredExhausted,  // attempts == Nu
  GrantWithSlots,
  GrantEmpty,
  FragmentSlot,      // reserved subslot, more fragments after this one
  LastFragmentSlot,  // reserved subslot carrying the final fragment
  AckReceived,
  AckTimeoutRetry,      // retry count still within the SDS retry limit
  AckTimeoutExhausted,  // retry limit exceeded
};

enum class MsAction {
  None,
  SendAccess,
  ArmRetry,
  DropNu,
  StartReserved,
  AwaitAck,
  SendFragment,
  SendLastFragment,
  Deliver,
  RestartAccess,
  DropSdsRetry,
};

inline constexpr std::array kAllMsStates = {MsState::Idle, MsState::AwaitingGrant,
                                            MsState::SendingReserved, MsState::AwaitingAck};
inline constexpr std::array kAllMsEvents = {
    MsEvent::OpportunityEligible, MsEvent::OpportunityNotEligible, MsEvent::WtExpiredRetry,
    MsEvent::WtExpiredExhausted,  MsEvent::GrantWithSlots,         MsEvent::GrantEmpty,
    MsEvent::FragmentSlot,        MsEvent::LastFragmentSlot,       MsEvent::AckReceived,
    MsEvent::AckTimeoutRetry,     MsEvent::AckTimeoutExhausted};

struct MsTransition {
  MsState next;
  MsAction action;
  bool operator==(const MsTransition&) const = default;
};

constexpr MsTransition ms_transition(MsState s, MsEvent e) {
  using S = MsState;
  using E = MsEvent;
  using A = MsAction;
  switch (s) {
    case S::Idle:
      if (e == E::OpportunityEligible) return {S::AwaitingGrant, A::SendAccess};
      break;
    case S::AwaitingGrant:
      switch (e) {
        case E::OpportunityEligible: return {S::AwaitingGrant, A::SendAccess};
        case E::WtExpiredRetry: return {S::AwaitingGrant, A::ArmRetry};
        case E::WtExpiredExhausted: return {S::Idle, A::DropNu};
        case E::GrantWithSlots: return {S::SendingReserved, A::StartReserved};
        case E::GrantEmpty: return {S::AwaitingAck, A::AwaitAck};
        // Single-fragment message whose empty MAC-RESOURCE was lost: the ACK
        // still proves the BS has the whole message.
        case E::AckReceived: return {S::Idle, A::Deliver};
        default: break;
      }
      break;
    case S::SendingReserved:
      if (e == E::FragmentSlot) return {S::SendingReserved, A::SendFragment};
      if (e == E::LastFragmentSlot) return {S::AwaitingAck, A::SendLastFragment};
      break;
    case S::AwaitingAck:
      if (e == E::AckReceived) return {S::Idle, A::Deliver};
      if (e == E::AckTimeoutRetry) return {S::AwaitingGrant, A::RestartAccess};
      if (e == E::AckTimeoutExhausted) return {S::Idle, A::DropSdsRetry};
      break;
  }
  return {s, A::None};
}

inline std::string_view to_string(MsState s) {
  switch (s) {
    case MsState::Idle: return "Idle";
    case MsState::AwaitingGrant: return "AwaitingGrant";
    case MsState::SendingReserved: return "SendingReserved";
    case MsState::AwaitingAck: return "AwaitingAck";
  }
  return "?";
}

inline std::string_view to_string(MsEvent e) {
  switch (e) {
    case MsEvent::OpportunityEligible: return "OpportunityEligible";
    case MsEvent::OpportunityNotEligible: return "OpportunityNotEligible";
    case MsEvent::WtExpiredRetry: return "WtExpiredRetry";
    case MsEvent::WtExpiredExhausted: return "WtExpiredExhausted";
    case MsEvent::GrantWithSlots: return "GrantWithSlots";
    case MsEvent::GrantEmpty: return "GrantEmpty";
    case MsEvent::FragmentSlot: return "FragmentSlot";
    case MsEvent::LastFragmentSlot: return "LastFragmentSlot";
    case MsEvent::AckReceived: return "AckReceived";
    case MsEvent::AckTimeoutRetry: return "AckTimeoutRetry";
    case MsEvent::AckTimeoutExhausted: return "AckTimeoutExhausted";
  }
  return "?";
}

inline std::string_view to_string(MsAction a) {
  switch (a) {
    case MsAction::None: return "None";
    case MsAction::SendAccess: return "SendAccess";
    case MsAction::ArmRetry: return "ArmRetry";
    case MsAction::DropNu: return "DropNu";
    case MsAction::StartReserved: return "StartReserved";
    case MsAction::AwaitAck: return "AwaitAck";
    case MsAction::SendFragment: return "SendFragment";
    case MsAction::SendLastFragment: return "SendLastFragment";
    case MsAction::Deliver: return "Deliver";
    case MsAction::RestartAccess: return "RestartAccess";
    case MsAction::DropSdsRetry: return "DropSdsRetry";
  }
  return "?";
}

struct AccessBurst {
  StationId station = 0;
  MessageId message = 0;
  Tick tick = 0;
  int reserved_requested = 0;  // fragments beyond the one carried in MAC-ACCESS
};

struct FragmentBurst {
  StationId station = 0;
  MessageId message = 0;
  Tick tick = 0;
  bool last = false;
};

enum class MsOutcome { None, Retry, Delivered, FullRetry, DroppedNu, DroppedSdsRetry };

struct MsResult {
  MsOutcome outcome = MsOutcome::None;
  std::optional<SdsMessage> finished;  // set when the message leaves the station
};

class MsContext {
 public:
  MsContext(StationId station = 0, AccessCode code = AccessCode::A)
      : station_(station), code_(code), queue_(station) {}

  StationId station() const { return station_; }
  AccessCode access_code() const { return code_; }
  MsState state() const { return state_; }
  const std::optional<SdsMessage>& current_message() const { return current_; }
  int access_attempts_used() const { return attempts_; }
  std::optional<Tick> wt_expiry() const { return wt_expiry_; }
  std::optional<Tick> ack_expiry() const { return ack_expiry_; }
  const std::vector<Tick>& reserved_schedule() const { return reserved_; }
  OutputQueue& queue() { return queue_; }
  const OutputQueue& queue() const { return queue_; }

  // True when the station will transmit MAC-ACCESS once its backoff runs out.
  bool contending() const {
    return ready_ && (state_ == MsState::AwaitingGrant || (state_ == MsState::Idle && !queue_.empty()));
  }
  int backoff_remaining() const { return backoff_; }

  // Called when an Idle station gains a queued message (or after finishing a
  // message with more queued).  `backoff` is the number of matching
  // opportunities to let pass before the first attempt.
  void prime(int backoff) {
    if (state_ != MsState::Idle || queue_.empty() || ready_) return;
    ready_ = true;
    backoff_ = backoff;
  }

  // Clears readiness if the queue drained underneath an Idle station.
  void settle() {
    if (state_ == MsState::Idle && queue_.empty()) ready_ = false;
  }

  std::optional<AccessBurst> on_access_opportunity(Tick tick, AccessCode opportunity_code,
                                                   const AccessParams& params,
                                                   int subslot_capacity_bits, int ack_wait_frames) {
    if (opportunity_code != code_) return std::nullopt;
    if (!contending()) {
      apply(MsEvent::OpportunityNotEligible);
      return std::nullopt;
    }
    if (backoff_ > 0) {
      --backoff_;
      apply(MsEvent::OpportunityNotEligible);
      return std::nullopt;
    }
    const MsState before = state_;
    apply(MsEvent::OpportunityEligible);
    if (before == MsState::Idle) {
      current_ = queue_.pop();
      attempts_ = 0;
    }
    ++attempts_;
    if (attempts_ > params.nu) throw std::logic_error("access attempts exceed Nu");
    ready_ = false;
    last_access_tick_ = tick;
    wt_expiry_ = tick + static_cast<Tick>(params.wt) * TimingConstants::ticks_per_frame;
    ack_wait_frames_ = ack_wait_frames;
    const int frags = fragments_needed(current_->payload_bits, subslot_capacity_bits);
    return AccessBurst{station_, current_->id, tick, frags - 1};
  }

  // `now` must equal the armed WT expiry; anything else is a stale timer.
  MsResult on_wt_expiry(Tick now, const AccessParams& params, int retry_backoff) {
    if (state_ != MsState::AwaitingGrant || !wt_expiry_ || *wt_expiry_ != now) return {};
    wt_expiry_.reset();
    if (attempts_ < params.nu) {
      apply(MsEvent::WtExpiredRetry);
      ready_ = true;
      backoff_ = retry_backoff;
      return {MsOutcome::Retry, std::nullopt};
    }
    apply(MsEvent::WtExpiredExhausted);
    return finish(MsOutcome::DroppedNu);
  }

  // MAC-RESOURCE for the message currently awaiting a grant.
  void on_grant(MessageId message, const std::vector<Tick>& grant, int subslot_capacity_bits) {
    if (state_ != MsState::AwaitingGrant || !current_ || current_->id != message || ready_) return;
    const auto expected =
        static_cast<std::size_t>(fragments_needed(current_->payload_bits, subslot_capacity_bits) - 1);
    if (grant.size() != expected) {
      throw StructuralError("grant length " + std::to_string(grant.size()) + " does not match " +
                            std::to_string(expected) + " reserved fragments");
    }
    wt_expiry_.reset();
    if (grant.empty()) {
      apply(MsEvent::GrantEmpty);
      ack_expiry_ = last_access_tick_ + ack_wait_frames_ * TimingConstants::ticks_per_frame;
    } else {
      apply(MsEvent::GrantWithSlots);
      reserved_ = grant;
      next_fragment_ = 0;
    }
  }

  std::optional<FragmentBurst> on_reserved_subslot(Tick tick) {
    if (state_ != MsState::SendingReserved || next_fragment_ >= reserved_.size() ||
        reserved_[next_fragment_] != tick) {
      return std::nullopt;
    }
    const bool last = next_fragment_ + 1 == reserved_.size();
    apply(last ? MsEvent::LastFragmentSlot : MsEvent::FragmentSlot);
    ++next_fragment_;
    if (last) ack_expiry_ = tick + ack_wait_frames_ * TimingConstants::ticks_per_frame;
    return FragmentBurst{station_, current_->id, tick, last};
  }

  MsResult on_ack(MessageId message) {
    if (!current_ || current_->id != message) return {};
    if (state_ != MsState::AwaitingAck && state_ != MsState::AwaitingGrant) return {};
    apply(MsEvent::AckReceived);
    return finish(MsOutcome::Delivered);
  }

  MsResult on_ack_timeout(Tick now, int sds_retry_limit, int restart_backoff) {
    if (state_ != MsState::AwaitingAck || !ack_expiry_ || *ack_expiry_ != now) return {};
    ack_expiry_.reset();
    if (current_->sds_retry_count + 1 <= sds_retry_limit) {
      apply(MsEvent::AckTimeoutRetry);
      ++current_->sds_retry_count;
      attempts_ = 0;
      ready_ = true;
      backoff_ = restart_backoff;
      reserved_.clear();
      return {MsOutcome::FullRetry, std::nullopt};
    }
    apply(MsEvent::AckTimeoutExhausted);
    return finish(MsOutcome::DroppedSdsRetry);
  }

  // Abandons the in-flight message (holding timer abort).  Returns it.
  std::optional<SdsMessage> abort_current() {
    if (!current_) return std::nullopt;
    MsResult r = finish(MsOutcome::None);
    return r.finished;
  }

 private:
  void apply(MsEvent e) { state_ = ms_transition(state_, e).next; }

  MsResult finish(MsOutcome o) {
    MsResult r{o, std::move(current_)};
    current_.reset();
    state_ = MsState::Idle;
    attempts_ = 0;
    ready_ = false;
    backoff_ = 0;
    wt_expiry_.reset();
    ack_expiry_.reset();
    reserved_.clear();
    next_fragment_ = 0;
    return r;
  }

  StationId station_;
  AccessCode code_;
  MsState state_ = MsState::Idle;
  std::optional<SdsMessage> current_;
  int attempts_ = 0;
  bool ready_ = false;
  int backoff_ = 0;
  std::optional<Tick> wt_expiry_;
  std::optional<Tick> ack_expiry_;
  std::vector<Tick> reserved_;
  std::size_t next_fragment_ = 0;
  Tick last_access_tick_ = 0;
  int ack_wait_frames_ = 4;
  OutputQueue queue_;
};

}  // namespace tetra_sds
