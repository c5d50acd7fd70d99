#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "uavnet/geometry.hpp"
#include "uavnet/rng.hpp"

namespace uavnet {

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double v) { return 10.0 * std::log10(v); }
inline double dbm_per_hz_to_w_per_hz(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }

// Air-to-ground channel constants. Excess-loss standard deviations are kept
// for Monte-Carlo sampling; the deterministic planner uses the means only.
struct ChannelParams {
  double carrier_frequency_hz = 5e9;
  double light_speed_m_s = 299792458.0;
  double env_a = 9.61;
  double env_b = 0.16;
  double excess_loss_los_db_mean = 1.0;
  double excess_loss_los_db_std = 0.0;
  double excess_loss_nlos_db_mean = 20.0;
  double excess_loss_nlos_db_std = 0.0;
  double noise_density_dbm_hz = -174.0;
  double antenna_gain_db = 10.0;

  double noise_w_per_hz() const { return dbm_per_hz_to_w_per_hz(noise_density_dbm_hz); }
  double antenna_gain_linear() const { return db_to_linear(antenna_gain_db); }

  void validate() const {
    if (!(carrier_frequency_hz > 0.0)) throw std::invalid_argument("channel: carrier_frequency_hz must be > 0");
    if (!(env_a > 0.0) || !(env_b > 0.0)) throw std::invalid_argument("channel: env_a and env_b must be > 0");
    if (excess_loss_los_db_std < 0.0 || excess_loss_nlos_db_std < 0.0)
      throw std::invalid_argument("channel: excess-loss std must be >= 0");
    if (excess_loss_nlos_db_mean < excess_loss_los_db_mean)
      throw std::invalid_argument("channel: NLOS excess loss must be >= LOS excess loss");
  }

  static ChannelParams urban() { return ChannelParams{}; }
};

struct UavPose {
  double x_m = 0.0;
  double y_m = 0.0;
  double h_m = 100.0;

  Vec2 xy() const { return {x_m, y_m}; }
};

struct GroundPoint {
  double x_m = 0.0;
  double y_m = 0.0;
};

struct LinkBudget {
  double distance_m = 0.0;
  double elevation_rad = 0.0;
  double p_los = 0.0;
  double mean_path_loss_linear = 0.0;
};

inline double slant_distance(const UavPose& uav, const GroundPoint& g) {
  const double dx = g.x_m - uav.x_m;
  const double dy = g.y_m - uav.y_m;
  return std::sqrt(dx * dx + dy * dy + uav.h_m * uav.h_m);
}

inline double free_space_path_loss_db(const ChannelParams& p, double distance_m) {
  return 20.0 * std::log10(4.0 * std::numbers::pi * p.carrier_frequency_hz * distance_m /
                           p.light_speed_m_s);
}

inline double path_loss_db(const ChannelParams& p, const UavPose& uav, const GroundPoint& g,
                           double excess_db) {
  return free_space_path_loss_db(p, slant_distance(uav, g)) + excess_db;
}

inline double elevation_rad(const UavPose& uav, const GroundPoint& g) {
  return std::asin(uav.h_m / slant_distance(uav, g));
}

inline double los_probability(const ChannelParams& p, const UavPose& uav, const GroundPoint& g) {
  const double theta_deg = elevation_rad(uav, g) * 180.0 / std::numbers::pi;
  return 1.0 / (1.0 + p.env_a * std::exp(-p.env_b * (theta_deg - p.env_a)));
}

// Mean path loss in linear scale: LOS/NLOS mix with the mean excess losses.
inline double mean_path_loss_linear(const ChannelParams& p, const UavPose& uav,
                                    const GroundPoint& g) {
  const double fspl = free_space_path_loss_db(p, slant_distance(uav, g));
  const double plos = los_probability(p, uav, g);
  const double l_los = db_to_linear(fspl + p.excess_loss_los_db_mean);
  const double l_nlos = db_to_linear(fspl + p.excess_loss_nlos_db_mean);
  return plos * l_los + (1.0 - plos) * l_nlos;
}

// LOS-only path loss in linear scale (high-altitude regime, p_los ~ 1).
inline double los_path_loss_linear(const ChannelParams& p, const UavPose& uav,
                                   const GroundPoint& g) {
  return db_to_linear(free_space_path_loss_db(p, slant_distance(uav, g)) +
                      p.excess_loss_los_db_mean);
}

inline LinkBudget link_budget(const ChannelParams& p, const UavPose& uav, const GroundPoint& g) {
  LinkBudget lb;
  lb.distance_m = slant_distance(uav, g);
  lb.elevation_rad = elevation_rad(uav, g);
  lb.p_los = los_probability(p, uav, g);
  lb.mean_path_loss_linear = mean_path_loss_linear(p, uav, g);
  return lb;
}

// One random excess-loss draw in dB (Monte-Carlo mode).
inline double sample_excess_loss_db(const ChannelParams& p, bool line_of_sight, Rng& rng) {
  return line_of_sight ? rng.normal(p.excess_loss_los_db_mean, p.excess_loss_los_db_std)
                       : rng.normal(p.excess_loss_nlos_db_mean, p.excess_loss_nlos_db_std);
}

inline double downlink_capacity(const ChannelParams& p, double bandwidth_hz, double tx_power_w,
                                double mean_pl_linear) {
  if (!(bandwidth_hz > 0.0)) throw std::invalid_argument("downlink_capacity: bandwidth must be > 0");
  if (tx_power_w <= 0.0) return 0.0;
  const double snr =
      tx_power_w * p.antenna_gain_linear() / (mean_pl_linear * bandwidth_hz * p.noise_w_per_hz());
  return bandwidth_hz * std::log2(1.0 + snr);
}

// Minimum transmit power meeting a rate demand through one of n_users channels
// of an UAV with total bandwidth total_bw_hz. The user count is the service
// area integral of the user density and need not be integral.
inline double min_transmit_power(const ChannelParams& p, double total_bw_hz, double n_users,
                                 double rate_demand_bps, double mean_pl_linear) {
  if (!(n_users >= 1.0)) throw std::invalid_argument("min_transmit_power: n_users must be >= 1");
  if (!(total_bw_hz > 0.0)) throw std::invalid_argument("min_transmit_power: bandwidth must be > 0");
  if (rate_demand_bps <= 0.0) return 0.0;
  const double coeff =
      total_bw_hz * p.noise_w_per_hz() * mean_pl_linear / (p.antenna_gain_linear() * n_users);
  return coeff * (std::exp2(rate_demand_bps * n_users / total_bw_hz) - 1.0);
}

}  // namespace uavnet
