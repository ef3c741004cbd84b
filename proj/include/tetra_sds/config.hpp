#pragma once

// Scenario configuration.
//
// File format: one `dotted.key = value` per line, `#` starts a comment.
// Omitted keys keep their defaults.  to_text() writes every key, so its output
// loads back into an identical config.

#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <iomanip>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "tetra_sds/bs_mac.hpp"
#include "tetra_sds/channel.hpp"
#include "tetra_sds/error.hpp"
#include "tetra_sds/metrics.hpp"
#include "tetra_sds/ms_mac.hpp"
#include "tetra_sds/traffic.hpp"

namespace tetra_sds {

// Holding timer setting: off, a fixed period, or 1/lambda_o.
struct HoldingTimerSetting {
  enum class Mode { Off, Fixed, InverseRate } mode = Mode::Off;
  double seconds = 0.0;

  std::optional<double> resolve(double lambda_o) const {
    switch (mode) {
      case Mode::Off: return std::nullopt;
      case Mode::Fixed: return seconds;
      case Mode::InverseRate: return lambda_o > 0.0 ? std::optional<double>(1.0 / lambda_o) : std::nullopt;
    }
    return std::nullopt;
  }
  bool operator==(const HoldingTimerSetting&) const = default;
};

struct ScenarioConfig {
  TrafficConfig traffic;
  HoldingTimerSetting holding_timer;
  HoldingTimerSetting background_holding_timer;

  // Voice footprint on the MCCH.
  int voice_setup_downlink_subslots = 1;
  int voice_teardown_downlink_subslots = 1;
  int traffic_channels = 0;  // 0 = unlimited

  AccessParams access;
  std::vector<AccessCode> code_pattern{AccessCode::A};
  std::vector<AccessCode> station_codes{AccessCode::A};
  int backoff_window = 32;         // matching opportunities a retry spreads over
  bool immediate_first_attempt = true;
  bool access_in_frame_18 = false;

  int subslot_capacity_bits = 92;
  int sds_retry_limit = 3;
  int ack_wait_frames = 4;
  int grant_delay_frames = 1;
  bool abort_in_flight_on_expiry = false;
  std::array<DownlinkClass, kDownlinkClasses> downlink_order{DownlinkClass::Voice,
                                                              DownlinkClass::Ack,
                                                              DownlinkClass::Sds};

  Environment environment = Environment::TU;
  std::array<PropagationModel, 3> models{PropagationModel::defaults(Environment::RA),
                                         PropagationModel::defaults(Environment::TU),
                                         PropagationModel::defaults(Environment::HT)};
  LinkBudget link;
  bool error_free_channel = false;

  PaoiClosure paoi_closure = PaoiClosure::AtAck;
  int warmup_multiframes = 50;
  double confidence = 0.95;

  int run_length_multiframes = 1000;
  int replications = 30;
  std::uint64_t master_seed = 20200601;
  int threads = 0;  // 0 = hardware concurrency

  std::string sweep_axis;
  std::vector<std::string> sweep_values;

  const PropagationModel& model() const { return models[static_cast<std::size_t>(environment)]; }
  PropagationModel& model_for(Environment e) { return models[static_cast<std::size_t>(e)]; }

  TrafficConfig resolved_traffic() const {
    TrafficConfig t = traffic;
    t.holding_timer = holding_timer.resolve(t.lambda_o);
    t.background_holding_timer = background_holding_timer.resolve(t.lambda_o);
    return t;
  }

  AccessCode code_for(std::size_t station_index) const {
    return station_codes[station_index % station_codes.size()];
  }

  Tick horizon_ticks() const {
    return static_cast<Tick>(run_length_multiframes) * TimingConstants::ticks_per_multiframe;
  }
  double horizon_seconds() const { return seconds_of(horizon_ticks()); }
  double warmup_seconds() const {
    return seconds_of(static_cast<Tick>(warmup_multiframes) * TimingConstants::ticks_per_multiframe);
  }

  // Throws ValidationError naming every offending field.
  void validate() const;
};

namespace config_detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline std::string format_double(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::ostringstream os;
  os.imbue(std::locale::classic());
  os << std::setprecision(17) << v;
  return os.str();
}

inline double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ValidationError(key + ": expected a number, got '" + v + "'");
  }
}

inline long long parse_int(const std::string& key, const std::string& v) {
  long long out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) {
    throw ValidationError(key + ": expected an integer, got '" + v + "'");
  }
  return out;
}

inline std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) {
    throw ValidationError(key + ": expected an unsigned integer, got '" + v + "'");
  }
  return out;
}

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ValidationError(key + ": expected a boolean, got '" + v + "'");
}

inline HoldingTimerSetting parse_holding(const std::string& key, const std::string& v) {
  if (v == "none" || v == "off") return {HoldingTimerSetting::Mode::Off, 0.0};
  if (v == "auto" || v == "on" || v == "inverse_rate") return {HoldingTimerSetting::Mode::InverseRate, 0.0};
  return {HoldingTimerSetting::Mode::Fixed, parse_double(key, v)};
}

inline std::string format_holding(const HoldingTimerSetting& h) {
  switch (h.mode) {
    case HoldingTimerSetting::Mode::Off: return "none";
    case HoldingTimerSetting::Mode::InverseRate: return "auto";
    case HoldingTimerSetting::Mode::Fixed: return format_double(h.seconds);
  }
  return "none";
}

inline std::vector<AccessCode> parse_codes(const std::string& key, const std::string& v) {
  std::vector<AccessCode> out;
  try {
    for (const auto& tok : split(v, ',')) out.push_back(parse_access_code(tok));
  } catch (const StructuralError&) {
    throw ValidationError(key + ": expected a comma-separated list of A..D, got '" + v + "'");
  }
  return out;
}

inline std::string format_codes(const std::vector<AccessCode>& codes) {
  std::string s;
  for (std::size_t i = 0; i < codes.size(); ++i) {
    if (i) s += ',';
    s += to_char(codes[i]);
  }
  return s;
}

inline std::string_view class_name(DownlinkClass c) {
  switch (c) {
    case DownlinkClass::Voice: return "voice";
    case DownlinkClass::Ack: return "ack";
    case DownlinkClass::Sds: return "sds";
  }
  return "?";
}

inline std::array<DownlinkClass, kDownlinkClasses> parse_order(const std::string& key,
                                                               const std::string& v) {
  auto toks = split(v, ',');
  std::array<DownlinkClass, kDownlinkClasses> out{};
  std::array<bool, kDownlinkClasses> seen{};
  if (toks.size() != kDownlinkClasses) {
    throw ValidationError(key + ": expected a permutation of voice,ack,sds");
  }
  for (std::size_t i = 0; i < toks.size(); ++i) {
    DownlinkClass c;
    if (toks[i] == "voice") c = DownlinkClass::Voice;
    else if (toks[i] == "ack") c = DownlinkClass::Ack;
    else if (toks[i] == "sds") c = DownlinkClass::Sds;
    else throw ValidationError(key + ": unknown class '" + toks[i] + "'");
    if (seen[static_cast<std::size_t>(c)]) throw ValidationError(key + ": repeated class");
    seen[static_cast<std::size_t>(c)] = true;
    out[i] = c;
  }
  return out;
}

struct Field {
  std::function<void(ScenarioConfig&, const std::string&, const std::string&)> set;
  std::function<std::string(const ScenarioConfig&)> get;
};

#define TETRA_SDS_DOUBLE(member)                                                              \
  Field {                                                                                     \
    [](ScenarioConfig& c, const std::string& k, const std::string& v) { c.member = parse_double(k, v); }, \
        [](const ScenarioConfig& c) { return format_double(c.member); }                       \
  }
#define TETRA_SDS_INT(member)                                                                 \
  Field {                                                                                     \
    [](ScenarioConfig& c, const std::string& k, const std::string& v) {                       \
      c.member = static_cast<int>(parse_int(k, v));                                           \
    },                                                                                        \
        [](const ScenarioConfig& c) { return std::to_string(c.member); }                      \
  }
#define TETRA_SDS_BOOL(member)                                                                \
  Field {                                                                                     \
    [](ScenarioConfig& c, const std::string& k, const std::string& v) { c.member = parse_bool(k, v); }, \
        [](const ScenarioConfig& c) { return std::string(c.member ? "true" : "false"); }      \
  }

inline void add_model_fields(std::map<std::string, Field>& f, Environment e, const std::string& p) {
  const auto i = static_cast<std::size_t>(e);
  f[p + ".path_loss_exponent"] = {
      [i](ScenarioConfig& c, const std::string& k, const std::string& v) { c.models[i].path_loss_exponent = parse_double(k, v); },
      [i](const ScenarioConfig& c) { return format_double(c.models[i].path_loss_exponent); }};
  f[p + ".shadowing_sigma_db"] = {
      [i](ScenarioConfig& c, const std::string& k, const std::string& v) { c.models[i].shadowing_sigma_db = parse_double(k, v); },
      [i](const ScenarioConfig& c) { return format_double(c.models[i].shadowing_sigma_db); }};
  f[p + ".midpoint_db"] = {
      [i](ScenarioConfig& c, const std::string& k, const std::string& v) { c.models[i].error_curve_midpoint_db = parse_double(k, v); },
      [i](const ScenarioConfig& c) { return format_double(c.models[i].error_curve_midpoint_db); }};
  f[p + ".slope_per_db"] = {
      [i](ScenarioConfig& c, const std::string& k, const std::string& v) { c.models[i].error_curve_slope_per_db = parse_double(k, v); },
      [i](const ScenarioConfig& c) { return format_double(c.models[i].error_curve_slope_per_db); }};
}

inline const std::map<std::string, Field>& fields() {
  static const std::map<std::string, Field> table = [] {
    std::map<std::string, Field> f;
    f["traffic.n_f"] = TETRA_SDS_INT(traffic.n_f);
    f["traffic.n_c"] = TETRA_SDS_INT(traffic.n_c);
    f["traffic.lambda_o"] = TETRA_SDS_DOUBLE(traffic.lambda_o);
    f["traffic.lambda_c_per_hour"] = TETRA_SDS_DOUBLE(traffic.lambda_c_per_hour);
    f["traffic.lambda_voice_per_hour"] = TETRA_SDS_DOUBLE(traffic.lambda_voice_per_hour);
    f["traffic.feedback_per_responder_per_s"] = TETRA_SDS_DOUBLE(traffic.feedback_per_responder_per_s);
    f["traffic.call_duration_min_s"] = TETRA_SDS_DOUBLE(traffic.call_duration_min);
    f["traffic.call_duration_max_s"] = TETRA_SDS_DOUBLE(traffic.call_duration_max);
    f["traffic.report_bytes"] = TETRA_SDS_INT(traffic.report_bytes);
    f["traffic.background_bytes"] = TETRA_SDS_INT(traffic.background_bytes);
    f["traffic.feedback_bytes"] = TETRA_SDS_INT(traffic.feedback_bytes);
    f["traffic.holding_timer"] = {
        [](ScenarioConfig& c, const std::string& k, const std::string& v) { c.holding_timer = parse_holding(k, v); },
        [](const ScenarioConfig& c) { return format_holding(c.holding_timer); }};
    f["traffic.background_holding_timer"] = {
        [](ScenarioConfig& c, const std::string& k, const std::string& v) { c.background_holding_timer = parse_holding(k, v); },
        [](const ScenarioConfig& c) { return format_holding(c.background_holding_timer); }};
    f["voice.setup_downlink_subslots"] = TETRA_SDS_INT(voice_setup_downlink_subslots);
    f["voice.teardown_downlink_subslots"] = TETRA_SDS_INT(voice_teardown_downlink_subslots);
    f["voice.traffic_channels"] = TETRA_SDS_INT(traffic_channels);
    f["access.wt"] = TETRA_SDS_INT(access.wt);
    f["access.nu"] = TETRA_SDS_INT(access.nu);
    f["access.code_pattern"] = {
        [](ScenarioConfig& c, const std::string& k, const std::string& v) { c.code_pattern = parse_codes(k, v); },
        [](const ScenarioConfig& c) { return format_codes(c.code_pattern); }};
    f["access.station_codes"] = {
        [](ScenarioConfig& c, const std::string& k, const std::string& v) { c.station_codes = parse_codes(k, v); },
        [](const ScenarioConfig& c) { return format_codes(c.station_codes); }};
    f["access.backoff_window"] = TETRA_SDS_INT(backoff_window);
    f["access.immediate_first_attempt"] = TETRA_SDS_BOOL(immediate_first_attempt);
    f["access.in_frame_18"] = TETRA_SDS_BOOL(access_in_frame_18);
    f["mac.subslot_capacity_bits"] = TETRA_SDS_INT(subslot_capacity_bits);
    f["mac.sds_retry_limit"] = TETRA_SDS_INT(sds_retry_limit);
    f["mac.ack_wait_frames"] = TETRA_SDS_INT(ack_wait_frames);
    f["mac.grant_delay_frames"] = TETRA_SDS_INT(grant_delay_frames);
    f["mac.abort_in_flight_on_expiry"] = TETRA_SDS_BOOL(abort_in_flight_on_expiry);
    f["mac.downlink_order"] = {
        [](ScenarioConfig& c, const std::string& k, const std::string& v) { c.downlink_order = parse_order(k, v); },
        [](const ScenarioConfig& c) {
          std::string s;
          for (std::size_t i = 0; i < c.downlink_order.size(); ++i) {
            if (i) s += ',';
            s += class_name(c.downlink_order[i]);
          }
          return s;
        }};
    f["channel.model"] = {
        [](ScenarioConfig& c, const std::string& k, const std::string& v) {
          try {
            c.environment = parse_environment(v);
          } catch (const StructuralError&) {
            throw ValidationError(k + ": expected RA, TU or HT, got '" + v + "'");
          }
        },
        [](const ScenarioConfig& c) { return std::string(to_string(c.environment)); }};
    add_model_fields(f, Environment::RA, "channel.ra");
    add_model_fields(f, Environment::TU, "channel.tu");
    add_model_fields(f, Environment::HT, "channel.ht");
    f["channel.tx_margin_db"] = TETRA_SDS_DOUBLE(link.tx_margin_db);
    f["channel.reference_distance_m"] = TETRA_SDS_DOUBLE(link.reference_distance_m);
    f["channel.cell_radius_m"] = TETRA_SDS_DOUBLE(link.cell_radius_m);
    f["channel.downlink_gain_db"] = TETRA_SDS_DOUBLE(link.downlink_gain_db);
    f["channel.error_free"] = TETRA_SDS_BOOL(error_free_channel);
    f["metrics.paoi_closure"] = {
        [](ScenarioConfig& c, const std::string& k, const std::string& v) {
          if (v == "at_ack") c.paoi_closure = PaoiClosure::AtAck;
          else if (v == "at_forwarding_complete") c.paoi_closure = PaoiClosure::AtForwardingComplete;
          else throw ValidationError(k + ": expected at_ack or at_forwarding_complete");
        },
        [](const ScenarioConfig& c) {
          return std::string(c.paoi_closure == PaoiClosure::AtAck ? "at_ack" : "at_forwarding_complete");
        }};
    f["metrics.warmup_multiframes"] = TETRA_SDS_INT(warmup_multiframes);
    f["metrics.confidence"] = TETRA_SDS_DOUBLE(confidence);
    f["run.length_multiframes"] = TETRA_SDS_INT(run_length_multiframes);
    f["run.replications"] = TETRA_SDS_INT(replications);
    f["run.seed"] = {
        [](ScenarioConfig& c, const std::string& k, const std::string& v) { c.master_seed = parse_u64(k, v); },
        [](const ScenarioConfig& c) { return std::to_string(c.master_seed); }};
    f["run.threads"] = TETRA_SDS_INT(threads);
    f["sweep.axis"] = {
        [](ScenarioConfig& c, const std::string&, const std::string& v) { c.sweep_axis = v; },
        [](const ScenarioConfig& c) { return c.sweep_axis; }};
    f["sweep.values"] = {
        [](ScenarioConfig& c, const std::string&, const std::string& v) {
          c.sweep_values.clear();
          if (!v.empty()) c.sweep_values = split(v, ',');
        },
        [](const ScenarioConfig& c) {
          std::string s;
          for (std::size_t i = 0; i < c.sweep_values.size(); ++i) {
            if (i) s += ',';
            s += c.sweep_values[i];
          }
          return s;
        }};
    return f;
  }();
  return table;
}

#undef TETRA_SDS_DOUBLE
#undef TETRA_SDS_INT
#undef TETRA_SDS_BOOL

}  // namespace config_detail

inline std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& [k, _] : config_detail::fields()) keys.push_back(k);
  return keys;
}

inline void set_config_value(ScenarioConfig& cfg, const std::string& key, const std::string& value) {
  const auto& f = config_detail::fields();
  auto it = f.find(key);
  if (it == f.end()) throw ValidationError("unknown config key '" + key + "'");
  it->second.set(cfg, key, value);
}

inline std::string get_config_value(const ScenarioConfig& cfg, const std::string& key) {
  const auto& f = config_detail::fields();
  auto it = f.find(key);
  if (it == f.end()) throw ValidationError("unknown config key '" + key + "'");
  return it->second.get(cfg);
}

// Parses `key = value` lines on top of `base`.
inline ScenarioConfig parse_config(std::string_view text, ScenarioConfig base = {}) {
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  std::vector<std::string> errors;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto t = config_detail::trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      errors.push_back("line " + std::to_string(lineno) + ": expected 'key = value'");
      continue;
    }
    try {
      set_config_value(base, config_detail::trim(t.substr(0, eq)), config_detail::trim(t.substr(eq + 1)));
    } catch (const ValidationError& e) {
      errors.push_back("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (!errors.empty()) {
    std::string msg = "invalid scenario config:";
    for (const auto& e : errors) msg += "\n  " + e;
    throw ValidationError(msg);
  }
  return base;
}

inline ScenarioConfig load_config(const std::string& path, ScenarioConfig base = {}) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read scenario file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), std::move(base));
}

inline std::string to_text(const ScenarioConfig& cfg) {
  std::string out;
  for (const auto& [k, f] : config_detail::fields()) out += k + " = " + f.get(cfg) + "\n";
  return out;
}

inline void ScenarioConfig::validate() const {
  std::vector<std::string> bad;
  auto need = [&](bool ok, const char* what) {
    if (!ok) bad.emplace_back(what);
  };
  need(traffic.n_f >= 0, "traffic.n_f must be >= 0");
  need(traffic.n_c >= 0 && traffic.n_c <= 500, "traffic.n_c must lie in [0,500]");
  need(traffic.lambda_o >= 0.0, "traffic.lambda_o must be >= 0");
  need(traffic.lambda_c_per_hour >= 0.0, "traffic.lambda_c_per_hour must be >= 0");
  need(traffic.lambda_voice_per_hour >= 0.0, "traffic.lambda_voice_per_hour must be >= 0");
  need(traffic.feedback_per_responder_per_s >= 0.0, "traffic.feedback_per_responder_per_s must be >= 0");
  need(traffic.call_duration_min >= 0.0 && traffic.call_duration_max >= traffic.call_duration_min,
       "traffic.call_duration_min_s/max_s must satisfy 0 <= min <= max");
  need(traffic.report_bytes * 8 >= 16 && traffic.report_bytes * 8 <= kSdsType4MaxBits,
       "traffic.report_bytes must give 16..2047 bits");
  need(traffic.background_bytes * 8 >= 1 && traffic.background_bytes * 8 <= kSdsType4MaxBits,
       "traffic.background_bytes must give 1..2047 bits");
  need(traffic.feedback_bytes >= 1 && traffic.feedback_bytes * 8 <= kSdsType4MaxBits,
       "traffic.feedback_bytes must give 1..2047 bits");
  need(holding_timer.mode != HoldingTimerSetting::Mode::Fixed || holding_timer.seconds > 0.0,
       "traffic.holding_timer must be positive");
  need(background_holding_timer.mode != HoldingTimerSetting::Mode::Fixed ||
           background_holding_timer.seconds > 0.0,
       "traffic.background_holding_timer must be positive");
  need(voice_setup_downlink_subslots >= 0, "voice.setup_downlink_subslots must be >= 0");
  need(voice_teardown_downlink_subslots >= 0, "voice.teardown_downlink_subslots must be >= 0");
  need(traffic_channels >= 0, "voice.traffic_channels must be >= 0");
  need(access.wt >= 1 && access.wt <= 15, "access.wt must lie in [1,15]");
  need(access.nu >= 1 && access.nu <= 15, "access.nu must lie in [1,15]");
  need(!code_pattern.empty(), "access.code_pattern must be nonempty");
  need(!station_codes.empty(), "access.station_codes must be nonempty");
  need(backoff_window >= 1, "access.backoff_window must be >= 1");
  need(subslot_capacity_bits >= 1, "mac.subslot_capacity_bits must be >= 1");
  need(sds_retry_limit >= 0, "mac.sds_retry_limit must be >= 0");
  need(ack_wait_frames >= 1, "mac.ack_wait_frames must be >= 1");
  need(grant_delay_frames >= 1 && grant_delay_frames <= access.wt,
       "mac.grant_delay_frames must lie in [1, access.wt]");
  for (const auto& m : models) {
    need(m.path_loss_exponent > 0.0, "channel.*.path_loss_exponent must be > 0");
    need(m.shadowing_sigma_db >= 0.0, "channel.*.shadowing_sigma_db must be >= 0");
    need(m.error_curve_slope_per_db > 0.0, "channel.*.slope_per_db must be > 0");
  }
  need(link.reference_distance_m > 0.0, "channel.reference_distance_m must be > 0");
  need(link.cell_radius_m > 0.0, "channel.cell_radius_m must be > 0");
  need(std::isfinite(link.downlink_gain_db), "channel.downlink_gain_db must be finite");
  need(warmup_multiframes >= 0 && warmup_multiframes < run_length_multiframes,
       "metrics.warmup_multiframes must lie in [0, run.length_multiframes)");
  need(confidence > 0.0 && confidence < 1.0, "metrics.confidence must lie in (0,1)");
  need(run_length_multiframes >= 1, "run.length_multiframes must be >= 1");
  need(replications >= 1, "run.replications must be >= 1");
  need(threads >= 0, "run.threads must be >= 0");
  if (!bad.empty()) {
    std::string msg = "invalid scenario config:";
    for (const auto& b : bad) msg += "\n  " + b;
    throw ValidationError(msg);
  }
}

}  // namespace tetra_sds
