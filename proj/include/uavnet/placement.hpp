#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "uavnet/partition.hpp"

namespace uavnet {

enum class PlacementMode { high_alt, low_alt, exact };

struct PlacementOptions {
  PlacementMode mode = PlacementMode::exact;
  double h_min = 100.0;
  double h_max = 100.0;
  int max_iter = 150;
  int backtracks = 40;
};

// Optimal transmit-power location in the high-altitude regime: demand-exponent
// weighted centroid of the cells, computed by grid sums. Falls back to the
// plain area centroid when no cell carries demand.
inline Vec2 closed_form_location(const DemandGrid& grid, const std::vector<int>& cells,
                                 double bandwidth_hz, double n_users) {
  if (cells.empty()) throw std::invalid_argument("closed_form_location: empty cell set");
  double zsum = 0.0;
  Vec2 acc{0, 0};
  for (int c : cells) {
    const double z = std::exp2(grid.rate_density[c] * n_users / bandwidth_hz) - 1.0;
    const Vec2 p = grid.cell_center(c);
    acc += p * z;
    zsum += z;
  }
  if (zsum <= 0.0) {
    Vec2 centroid{0, 0};
    for (int c : cells) centroid += grid.cell_center(c);
    return centroid * (1.0 / cells.size());
  }
  return acc * (1.0 / zsum);
}

struct PlacementResult {
  UavPose pose;
  double objective = 0.0;  // internal-model transmit power + mobility spend
  double mobility_j = 0.0;
  int iterations = 0;
};

namespace detail {

// Transmit power for the placement objective; high_alt swaps the averaged
// path loss for the LOS-only approximation.
inline double placement_power(const ChannelParams& channel, const UavPose& pose,
                              double bandwidth_hz, double n_users, const DemandGrid& grid,
                              const std::vector<int>& cells, PlacementMode mode) {
  double acc = 0.0;
  for (int c : cells) {
    const double beta = grid.rate_density[c];
    if (beta <= 0.0) continue;
    const Vec2 p = grid.cell_center(c);
    const double pl = mode == PlacementMode::high_alt
                          ? los_path_loss_linear(channel, pose, {p.x, p.y})
                          : mean_path_loss_linear(channel, pose, {p.x, p.y});
    acc += min_transmit_power(channel, bandwidth_hz, n_users, beta, pl) * grid.cell_area;
  }
  return acc;
}

inline double pose_distance(const UavPose& a, const UavPose& b) {
  const double dx = a.x_m - b.x_m;
  const double dy = a.y_m - b.y_m;
  const double dh = a.h_m - b.h_m;
  return std::sqrt(dx * dx + dy * dy + dh * dh);
}

}  // namespace detail

// Minimizes one UAV's transmit power plus mobility cost over its service
// cells by projected gradient descent with a backtracking line search.
// Altitude is a free coordinate only in exact mode, clamped to [h_min, h_max].
inline PlacementResult joint_location_optimize(const UavState& uav, double n_users,
                                               const std::vector<int>& cells,
                                               const DemandGrid& grid,
                                               const ChannelParams& channel,
                                               const PlacementOptions& opts) {
  if (!(opts.h_min > 0.0) || opts.h_max < opts.h_min)
    throw std::invalid_argument("joint_location_optimize: bad altitude bounds");
  const UavPose origin = uav.pose;
  const bool free_altitude = opts.mode == PlacementMode::exact && opts.h_max > opts.h_min;
  const double diag = grid.region.diagonal();
  const double gamma = uav.mobility_rate_j_per_m;

  auto clamp_pose = [&](UavPose p) {
    const Vec2 xy = grid.region.clamp({p.x_m, p.y_m});
    p.x_m = xy.x;
    p.y_m = xy.y;
    p.h_m = std::clamp(free_altitude ? p.h_m : origin.h_m, opts.h_min, opts.h_max);
    return p;
  };
  auto objective = [&](const UavPose& p) {
    return detail::placement_power(channel, p, uav.bandwidth_hz, n_users, grid, cells, opts.mode) +
           gamma * detail::pose_distance(origin, p);
  };

  const double dxy = std::max(1e-3, 1e-4 * diag);
  const double dh = std::max(1e-3, 1e-4 * (opts.h_max - opts.h_min));

  auto descend = [&](UavPose start, int& iterations) {
    UavPose p = clamp_pose(start);
    double f = objective(p);
    if (std::isnan(f))
      throw std::runtime_error("joint_location_optimize: objective is NaN at the start pose");
    int iter = 0;
    for (; iter < opts.max_iter; ++iter) {
      double gx = (objective({p.x_m + dxy, p.y_m, p.h_m}) - objective({p.x_m - dxy, p.y_m, p.h_m})) /
                  (2.0 * dxy);
      double gy = (objective({p.x_m, p.y_m + dxy, p.h_m}) - objective({p.x_m, p.y_m - dxy, p.h_m})) /
                  (2.0 * dxy);
      double gh = 0.0;
      if (free_altitude)
        gh = (objective({p.x_m, p.y_m, std::min(p.h_m + dh, opts.h_max)}) -
              objective({p.x_m, p.y_m, std::max(p.h_m - dh, opts.h_min)})) /
             (std::min(p.h_m + dh, opts.h_max) - std::max(p.h_m - dh, opts.h_min));
      const double gnorm = std::sqrt(gx * gx + gy * gy + gh * gh);
      if (!(gnorm > 0.0) || std::isnan(gnorm)) break;

      double t = 0.25 * diag / gnorm;
      bool accepted = false;
      for (int b = 0; b < opts.backtracks; ++b) {
        const UavPose cand = clamp_pose({p.x_m - t * gx, p.y_m - t * gy, p.h_m - t * gh});
        const double fc = objective(cand);
        if (std::isnan(fc))
          throw std::runtime_error("joint_location_optimize: objective is NaN at iteration " +
                                   std::to_string(iter) + " pose (" + std::to_string(cand.x_m) +
                                   ", " + std::to_string(cand.y_m) + ", " + std::to_string(cand.h_m) +
                                   ")");
        if (fc <= f - 1e-4 * t * gnorm * gnorm) {
          const double moved = detail::pose_distance(p, cand);
          p = cand;
          f = fc;
          accepted = true;
          if (moved < 1e-7 * diag) iter = opts.max_iter;  // converged
          break;
        }
        t *= 0.5;
      }
      if (!accepted) break;
    }
    iterations = iter;
    return std::pair<UavPose, double>{p, f};
  };

  // candidate starts: stay where we are, or jump to the demand centroid
  int it_a = 0, it_b = 0;
  auto [pa, fa] = descend(origin, it_a);
  UavPose centroid_start = origin;
  const Vec2 cf = closed_form_location(grid, cells, uav.bandwidth_hz, std::max(1.0, n_users));
  centroid_start.x_m = cf.x;
  centroid_start.y_m = cf.y;
  auto [pb, fb] = descend(centroid_start, it_b);

  PlacementResult out;
  const double f_origin = objective(origin);
  if (f_origin <= fa && f_origin <= fb) {
    out.pose = origin;
    out.objective = f_origin;
    out.iterations = 0;
  } else if (fa <= fb) {
    out.pose = pa;
    out.objective = fa;
    out.iterations = it_a;
  } else {
    out.pose = pb;
    out.objective = fb;
    out.iterations = it_b;
  }
  out.mobility_j = gamma * detail::pose_distance(origin, out.pose);
  return out;
}

}  // namespace uavnet
