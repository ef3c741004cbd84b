#pragma once

// Per-flow delivery and drop records, run summaries, and Student-t
// aggregation across replications.

#include <boost/math/distributions/students_t.hpp>

#include <cmath>
#include <compare>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tetra_sds/error.hpp"
#include "tetra_sds/traffic.hpp"

namespace tetra_sds {

enum class DropCause { Holding, Nu, SdsRetry };

inline std::string_view to_string(DropCause c) {
  switch (c) {
    case DropCause::Holding: return "holding";
    case DropCause::Nu: return "nu";
    case DropCause::SdsRetry: return "sds_retry";
  }
  return "?";
}

inline DropCause parse_drop_cause(std::string_view s) {
  if (s == "holding") return DropCause::Holding;
  if (s == "nu") return DropCause::Nu;
  if (s == "sds_retry") return DropCause::SdsRetry;
  throw StructuralError("unknown drop cause '" + std::string(s) + "'");
}

struct FlowKey {
  StationId source = 0;
  StationId destination = 0;
  auto operator<=>(const FlowKey&) const = default;
};

struct Delivery {
  double generated_at = 0.0;
  double closed_at = 0.0;
};

struct Drop {
  double generated_at = 0.0;
  DropCause cause = DropCause::Nu;
};

struct DeliverySample {
  double delay = 0.0;
  std::optional<double> paoi;
};

struct FlowRecord {
  FlowKey flow;
  std::vector<Delivery> deliveries;
  std::vector<Drop> drops;
  std::optional<double> last_delivered_generation_time;
};

// Delay = closed - generated.  PAoI = closed - generation time of the
// previously delivered message of the same flow.
inline DeliverySample record_delivery(FlowRecord& rec, double generated_at, double closed_at) {
  if (closed_at < generated_at) {
    throw StructuralError("record_delivery: closure precedes generation");
  }
  if (!rec.deliveries.empty() && closed_at < rec.deliveries.back().closed_at) {
    throw StructuralError("record_delivery: closures out of order");
  }
  DeliverySample s{closed_at - generated_at, std::nullopt};
  if (rec.last_delivered_generation_time) s.paoi = closed_at - *rec.last_delivered_generation_time;
  rec.deliveries.push_back({generated_at, closed_at});
  rec.last_delivered_generation_time = generated_at;
  return s;
}

inline void record_drop(FlowRecord& rec, double generated_at, DropCause cause) {
  rec.drops.push_back({generated_at, cause});
}

struct Counts {
  long long generated = 0;
  long long delivered = 0;
  long long dropped_holding = 0;
  long long dropped_nu = 0;
  long long dropped_sds_retry = 0;
  long long pending = 0;

  long long dropped() const { return dropped_holding + dropped_nu + dropped_sds_retry; }
  bool conserved() const { return generated == delivered + dropped() + pending; }
  bool operator==(const Counts&) const = default;

  Counts& operator+=(const Counts& o) {
    generated += o.generated;
    delivered += o.delivered;
    dropped_holding += o.dropped_holding;
    dropped_nu += o.dropped_nu;
    dropped_sds_retry += o.dropped_sds_retry;
    pending += o.pending;
    return *this;
  }

  void add_drop(DropCause c) {
    switch (c) {
      case DropCause::Holding: ++dropped_holding; break;
      case DropCause::Nu: ++dropped_nu; break;
      case DropCause::SdsRetry: ++dropped_sds_retry; break;
    }
  }
};

struct RunSummary {
  std::optional<double> average_delay;  // seconds, none without deliveries
  double failure_probability = 0.0;
  std::optional<double> average_paoi;   // seconds, none without PAoI samples
  Counts counts;
  long long delay_samples = 0;
  long long paoi_samples = 0;

  bool operator==(const RunSummary&) const = default;
};

enum class PaoiClosure { AtAck, AtForwardingComplete };

// Collects the study flows (first-responder reports) of one replication.
// Messages generated before `window_start` still move a flow's PAoI anchor
// but contribute no samples or counts.
class MetricStore {
 public:
  explicit MetricStore(double window_start = 0.0) : window_start_(window_start) {}

  double window_start() const { return window_start_; }
  bool in_window(double generated_at) const { return generated_at >= window_start_; }

  void on_generated(const FlowKey& f, double generated_at) {
    ack_flow(f);
    forward_flow(f);
    if (in_window(generated_at)) ++counts_.generated;
  }

  void on_delivered_at_ack(const FlowKey& f, double generated_at, double closed_at) {
    auto s = record_delivery(ack_flow(f), generated_at, closed_at);
    if (!in_window(generated_at)) return;
    ++counts_.delivered;
    delay_sum_ += s.delay;
    ++delay_n_;
    if (s.paoi && closure_ == PaoiClosure::AtAck) add_paoi(*s.paoi);
  }

  void on_forwarded(const FlowKey& f, MessageId id, double generated_at, double closed_at) {
    auto& rec = forward_flow(f);
    if (forwarded_ids_[f] >= id + 1) return;  // duplicate after a lost ACK
    forwarded_ids_[f] = id + 1;
    if (!rec.deliveries.empty() && closed_at < rec.deliveries.back().closed_at) return;
    auto s = record_delivery(rec, generated_at, closed_at);
    if (in_window(generated_at) && s.paoi && closure_ == PaoiClosure::AtForwardingComplete) {
      add_paoi(*s.paoi);
    }
  }

  void on_dropped(const FlowKey& f, double generated_at, DropCause cause) {
    record_drop(ack_flow(f), generated_at, cause);
    if (in_window(generated_at)) counts_.add_drop(cause);
  }

  void set_pending(long long pending) { counts_.pending = pending; }
  void set_closure(PaoiClosure c) { closure_ = c; }

  const std::map<FlowKey, FlowRecord>& ack_flows() const { return ack_; }
  const std::map<FlowKey, FlowRecord>& forward_flows() const { return forward_; }
  const std::vector<double>& paoi_samples() const { return paoi_; }
  const Counts& counts() const { return counts_; }

  RunSummary summary() const {
    RunSummary r;
    r.counts = counts_;
    r.delay_samples = delay_n_;
    r.paoi_samples = static_cast<long long>(paoi_.size());
    if (delay_n_ > 0) r.average_delay = delay_sum_ / static_cast<double>(delay_n_);
    if (!paoi_.empty()) {
      double s = 0.0;
      for (double v : paoi_) s += v;
      r.average_paoi = s / static_cast<double>(paoi_.size());
    }
    r.failure_probability = counts_.generated > 0 ? static_cast<double>(counts_.dropped()) /
                                                        static_cast<double>(counts_.generated)
                                                  : 0.0;
    return r;
  }

 private:
  FlowRecord& ack_flow(const FlowKey& f) {
    auto& r = ack_[f];
    r.flow = f;
    return r;
  }
  FlowRecord& forward_flow(const FlowKey& f) {
    auto& r = forward_[f];
    r.flow = f;
    return r;
  }
  void add_paoi(double v) { paoi_.push_back(v); }

  double window_start_;
  PaoiClosure closure_ = PaoiClosure::AtAck;
  std::map<FlowKey, FlowRecord> ack_;
  std::map<FlowKey, FlowRecord> forward_;
  std::map<FlowKey, MessageId> forwarded_ids_;
  std::vector<double> paoi_;
  double delay_sum_ = 0.0;
  long long delay_n_ = 0;
  Counts counts_;
};

struct MeanCi {
  double mean = std::numeric_limits<double>::quiet_NaN();
  double half_width = std::numeric_limits<double>::quiet_NaN();
  std::size_t n = 0;
};

// Sample mean and two-sided Student-t half-width at `confidence`.
inline MeanCi mean_ci(std::span<const double> xs, double confidence) {
  if (xs.size() < 2) throw InsufficientDataError("confidence interval needs at least 2 samples");
  if (!(confidence > 0.0 && confidence < 1.0)) {
    throw StructuralError("confidence level must lie in (0,1)");
  }
  const double n = static_cast<double>(xs.size());
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= n;
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / (n - 1.0));
  boost::math::students_t dist(n - 1.0);
  const double t = boost::math::quantile(boost::math::complement(dist, (1.0 - confidence) / 2.0));
  return {mean, t * sd / std::sqrt(n), xs.size()};
}

struct Aggregate {
  MeanCi delay;
  MeanCi failure;
  MeanCi paoi;
  Counts counts;  // summed over replications
  std::size_t runs = 0;
};

inline MeanCi mean_ci_or_partial(const std::vector<double>& xs, double confidence) {
  if (xs.size() >= 2) return mean_ci(xs, confidence);
  MeanCi m;
  m.n = xs.size();
  if (xs.size() == 1) m.mean = xs.front();
  return m;
}

// Runs lacking a metric (no deliveries) are left out of that metric's mean.
inline Aggregate aggregate(std::span<const RunSummary> runs, double confidence) {
  if (runs.size() < 2) throw InsufficientDataError("aggregate needs at least 2 runs");
  std::vector<double> delay, failure, paoi;
  Aggregate a;
  a.runs = runs.size();
  for (const auto& r : runs) {
    if (r.average_delay) delay.push_back(*r.average_delay);
    if (r.counts.generated > 0) failure.push_back(r.failure_probability);
    if (r.average_paoi) paoi.push_back(*r.average_paoi);
    a.counts += r.counts;
  }
  a.delay = mean_ci_or_partial(delay, confidence);
  a.failure = mean_ci_or_partial(failure, confidence);
  a.paoi = mean_ci_or_partial(paoi, confidence);
  return a;
}

}  // namespace tetra_sds
