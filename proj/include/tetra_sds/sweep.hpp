#pragma once

// Replication fan-out, parameter sweeps and CSV emission.

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <thread>
#include <vector>

#include "tetra_sds/config.hpp"
#include "tetra_sds/engine.hpp"
#include "tetra_sds/metrics.hpp"

namespace tetra_sds {

// Replications run on a small worker pool; each owns its own Simulation, and
// results land in a slot indexed by replication, so the output does not
// depend on which worker finished first.
inline std::vector<RunSummary> run_replications(const ScenarioConfig& cfg) {
  cfg.validate();
  const auto n = static_cast<std::size_t>(cfg.replications);
  std::vector<RunSummary> out(n);
  unsigned workers = cfg.threads > 0 ? static_cast<unsigned>(cfg.threads)
                                     : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min<unsigned>(workers, static_cast<unsigned>(n));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) out[i] = run_replication(cfg, i);
    return out;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = next++; i < n; i = next++) out[i] = run_replication(cfg, i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

inline Aggregate run_point(const ScenarioConfig& cfg) {
  const auto runs = run_replications(cfg);
  if (runs.size() < 2) {
    Aggregate a;
    a.runs = runs.size();
    for (const auto& r : runs) {
      a.counts += r.counts;
      if (r.average_delay) a.delay.mean = *r.average_delay, a.delay.n = 1;
      if (r.counts.generated > 0) a.failure.mean = r.failure_probability, a.failure.n = 1;
      if (r.average_paoi) a.paoi.mean = *r.average_paoi, a.paoi.n = 1;
    }
    return a;
  }
  return aggregate(runs, cfg.confidence);
}

inline const std::map<std::string, std::string>& sweep_axes() {
  static const std::map<std::string, std::string> axes = {
      {"n_c", "traffic.n_c"},
      {"n_f", "traffic.n_f"},
      {"lambda_o", "traffic.lambda_o"},
      {"wt", "access.wt"},
      {"nu", "access.nu"},
      {"model", "channel.model"},
      {"holding_timer", "traffic.holding_timer"},
  };
  return axes;
}

inline std::string canonical_axis(std::string axis) {
  std::transform(axis.begin(), axis.end(), axis.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (axis == "propagation" || axis == "environment") axis = "model";
  if (!sweep_axes().contains(axis)) {
    std::string msg = "unknown sweep axis '" + axis + "'; expected one of:";
    for (const auto& [k, _] : sweep_axes()) msg += " " + k;
    throw ValidationError(msg);
  }
  return axis;
}

inline ScenarioConfig with_axis_value(ScenarioConfig cfg, const std::string& axis, const std::string& value) {
  set_config_value(cfg, sweep_axes().at(canonical_axis(axis)), value);
  return cfg;
}

struct SweepRow {
  std::string value;
  Aggregate aggregate;
};

struct SweepTable {
  std::string axis;
  std::vector<SweepRow> rows;
  ScenarioConfig base;
};

inline SweepTable run_sweep(const ScenarioConfig& base, const std::string& axis,
                            const std::vector<std::string>& values) {
  if (values.empty()) throw ValidationError("sweep over '" + axis + "' has no values");
  SweepTable table;
  table.axis = canonical_axis(axis);
  table.base = base;
  table.base.sweep_axis = table.axis;
  table.base.sweep_values = values;
  for (const auto& v : values) {
    ScenarioConfig cfg = with_axis_value(base, table.axis, v);
    cfg.validate();
    table.rows.push_back({v, run_point(cfg)});
  }
  return table;
}

inline std::string csv_header() {
  return "axis,value,delay_mean_s,delay_ci_s,failure_prob,failure_ci,paoi_mean_s,paoi_ci_s,"
         "generated,delivered,dropped,dropped_holding,dropped_nu,dropped_sds_retry,pending,replications";
}

inline std::string format_metric(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

inline std::string to_csv(const SweepTable& table) {
  std::string out = csv_header() + "\n";
  for (const auto& r : table.rows) {
    const auto& a = r.aggregate;
    out += table.axis + "," + r.value + "," + format_metric(a.delay.mean) + "," +
           format_metric(a.delay.half_width) + "," + format_metric(a.failure.mean) + "," +
           format_metric(a.failure.half_width) + "," + format_metric(a.paoi.mean) + "," +
           format_metric(a.paoi.half_width) + "," + std::to_string(a.counts.generated) + "," +
           std::to_string(a.counts.delivered) + "," + std::to_string(a.counts.dropped()) + "," +
           std::to_string(a.counts.dropped_holding) + "," + std::to_string(a.counts.dropped_nu) + "," +
           std::to_string(a.counts.dropped_sds_retry) + "," + std::to_string(a.counts.pending) + "," +
           std::to_string(a.runs) + "\n";
  }
  return out;
}

inline std::filesystem::path sidecar_path(const std::filesystem::path& csv) {
  auto p = csv;
  p.replace_extension(".scenario");
  return p;
}

inline void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << text;
  out.close();
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

// Writes the CSV and, next to it, the fully resolved scenario (including the
// sweep axis and values and the seed) that reproduces it.
inline std::filesystem::path emit_results(const SweepTable& table, const std::filesystem::path& csv) {
  if (table.rows.empty()) throw ValidationError("emit_results: empty table");
  write_file(csv, to_csv(table));
  const auto side = sidecar_path(csv);
  write_file(side, "# resolved scenario; rerun with --scenario " + side.filename().string() + "\n" +
                       to_text(table.base));
  return side;
}

}  // namespace tetra_sds
