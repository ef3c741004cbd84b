#pragma once

// Parametric burst-error channel.
//
// Each mobile gets a quasi-static link (distance and a shadowing sample drawn
// once per replication).  The per-burst error probability is a logistic
// function of the link SNR whose midpoint depends on the propagation
// environment; fast fading is folded into that curve.

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <string_view>

#include "tetra_sds/error.hpp"
#include "tetra_sds/rng.hpp"

namespace tetra_sds {

enum class Environment { RA, TU, HT };

inline std::string_view to_string(Environment e) {
  switch (e) {
    case Environment::RA: return "RA";
    case Environment::TU: return "TU";
    case Environment::HT: return "HT";
  }
  return "?";
}

inline Environment parse_environment(std::string_view s) {
  if (s == "RA" || s == "ra") return Environment::RA;
  if (s == "TU" || s == "tu") return Environment::TU;
  if (s == "HT" || s == "ht") return Environment::HT;
  throw StructuralError("unknown propagation model '" + std::string(s) + "'");
}

struct PropagationModel {
  Environment kind = Environment::TU;
  double path_loss_exponent = 3.5;
  double shadowing_sigma_db = 8.0;
  double error_curve_midpoint_db = 0.0;
  double error_curve_slope_per_db = 0.5;

  static PropagationModel defaults(Environment e);
};

// Calibrated defaults.  Midpoints are ordered RA < TU < HT with a common
// slope, which keeps p(RA) <= p(TU) <= p(HT) at every SNR.
inline PropagationModel PropagationModel::defaults(Environment e) {
  switch (e) {
    case Environment::RA: return {Environment::RA, 2.7, 4.0, 3.0, 0.6};
    case Environment::TU: return {Environment::TU, 3.5, 8.0, 4.0, 0.6};
    case Environment::HT: return {Environment::HT, 4.0, 10.0, 5.0, 0.6};
  }
  return {};
}

struct LinkBudget {
  double tx_margin_db = 35.0;           // SNR at the reference distance
  double reference_distance_m = 500.0;
  double cell_radius_m = 2000.0;
  double downlink_gain_db = 0.0;        // BS transmit advantage over a handheld
};

struct RadioLink {
  double distance_m = 1.0;
  double shadowing_db = 0.0;
  double snr_db = 0.0;
  double burst_error = 0.0;           // uplink
  double burst_error_downlink = 0.0;
};

inline double snr_of_link(double distance_m, double shadowing_db, const PropagationModel& model,
                          const LinkBudget& budget) {
  if (!(distance_m > 0.0)) throw StructuralError("snr_of_link: distance must be positive");
  return budget.tx_margin_db -
         10.0 * model.path_loss_exponent * std::log10(distance_m / budget.reference_distance_m) +
         shadowing_db;
}

inline double burst_error_prob(double snr_db, const PropagationModel& model) {
  const double x = model.error_curve_slope_per_db * (snr_db - model.error_curve_midpoint_db);
  // 1 / (1 + e^x), written to stay finite for large |x|.
  if (x >= 0.0) {
    const double e = std::exp(-x);
    return e / (1.0 + e);
  }
  return 1.0 / (1.0 + std::exp(x));
}

enum class BurstResult { Delivered, Corrupted };

// Exactly one draw from `stream` per call.
inline BurstResult decide_burst(RngStream& stream, double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw StructuralError("decide_burst: probability outside [0,1]");
  return stream.uniform() < p ? BurstResult::Corrupted : BurstResult::Delivered;
}

// Uniform placement over the cell disk plus a log-normal shadowing sample.
// Two draws from `placement`, two from `shadowing`.
inline RadioLink draw_link(RngStream& placement, RngStream& shadowing,
                           const PropagationModel& model, const LinkBudget& budget) {
  RadioLink link;
  // Keep users off the mast itself; 1 m is far below any useful reference distance.
  link.distance_m = std::max(1.0, budget.cell_radius_m * std::sqrt(placement.uniform()));
  placement.uniform();  // azimuth, unused but kept so the stream layout is stable
  link.shadowing_db = model.shadowing_sigma_db * shadowing.normal();
  link.snr_db = snr_of_link(link.distance_m, link.shadowing_db, model, budget);
  link.burst_error = burst_error_prob(link.snr_db, model);
  link.burst_error_downlink = burst_error_prob(link.snr_db + budget.downlink_gain_db, model);
  return link;
}

}  // namespace tetra_sds
