#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "uavnet/geometry.hpp"
#include "uavnet/predictor.hpp"

namespace uavnet {

// Discretized demand over the service region. rate_density holds the minimum
// data-rate requirement density (bit/s per m^2) at each cell center; user_mass
// holds the expected user count per cell.
struct DemandGrid {
  Region region;
  int nx = 0;
  int ny = 0;
  double cell_area = 0.0;
  double period_s = 3600.0;
  std::vector<double> rate_density;  // beta, bit/s/m^2
  std::vector<double> user_mass;     // users per cell

  int size() const { return nx * ny; }
  Vec2 cell_center(int i) const {
    const int ix = i % nx;
    const int iy = i / nx;
    return {region.xmin + (ix + 0.5) * region.width() / nx,
            region.ymin + (iy + 0.5) * region.height() / ny};
  }
  int cell_index_at(const Vec2& p) const {
    int ix = static_cast<int>((p.x - region.xmin) / region.width() * nx);
    int iy = static_cast<int>((p.y - region.ymin) / region.height() * ny);
    ix = std::clamp(ix, 0, nx - 1);
    iy = std::clamp(iy, 0, ny - 1);
    return iy * nx + ix;
  }
  double total_rate_bps() const {
    double acc = 0.0;
    for (double b : rate_density) acc += b;
    return acc * cell_area;
  }
  double total_users() const {
    double acc = 0.0;
    for (double u : user_mass) acc += u;
    return acc;
  }
  bool has_demand() const {
    for (double b : rate_density)
      if (b > 0.0) return true;
    return false;
  }
};

// Discretizes a forecast onto a resolution x resolution grid. Cell masses are
// normalized over the grid so the totals match the forecast exactly.
inline DemandGrid build_demand_grid(const DemandForecast& forecast, const Region& region,
                                    int resolution, double period_s = 3600.0) {
  if (resolution < 8) throw std::invalid_argument("build_demand_grid: resolution must be >= 8");
  region.validate();
  DemandGrid g;
  g.region = region;
  g.nx = g.ny = resolution;
  g.cell_area = region.area() / (resolution * resolution);
  g.period_s = period_s;
  g.rate_density.assign(g.size(), 0.0);
  g.user_mass.assign(g.size(), 0.0);
  if (forecast.no_demand || forecast.total_bytes <= 0.0) return g;

  std::vector<double> pdf(g.size()), updf(g.size());
  double psum = 0.0, usum = 0.0;
  for (int i = 0; i < g.size(); ++i) {
    const Vec2 c = g.cell_center(i);
    pdf[i] = gmm_pdf(forecast.spatial_bytes, c);
    updf[i] = gmm_pdf(forecast.spatial_users, c);
    psum += pdf[i];
    usum += updf[i];
  }
  if (!(psum > 0.0))
    throw std::runtime_error("build_demand_grid: forecast density is zero everywhere on the grid");

  const double total_bits = 8.0 * forecast.total_bytes;
  for (int i = 0; i < g.size(); ++i) {
    const double mass = pdf[i] / psum;  // fraction of demand in this cell
    g.rate_density[i] = total_bits * mass / (period_s * g.cell_area);
    if (usum > 0.0) g.user_mass[i] = forecast.total_users * updf[i] / usum;
  }
  return g;
}

// Deposits realized per-BS records into cells with a bilinear (cloud-in-cell)
// kernel over the four nearest cell centers; conserves totals exactly.
inline DemandGrid build_actual_grid(const std::vector<HourlySlice::Sample>& records,
                                    const Region& region, int resolution,
                                    double period_s = 3600.0) {
  if (resolution < 8) throw std::invalid_argument("build_actual_grid: resolution must be >= 8");
  region.validate();
  DemandGrid g;
  g.region = region;
  g.nx = g.ny = resolution;
  g.cell_area = region.area() / (resolution * resolution);
  g.period_s = period_s;
  g.rate_density.assign(g.size(), 0.0);
  g.user_mass.assign(g.size(), 0.0);
  const double wx = region.width() / resolution;
  const double wy = region.height() / resolution;
  for (const auto& r : records) {
    const double fx = std::clamp((r.point.x - region.xmin) / wx - 0.5, 0.0,
                                 static_cast<double>(resolution - 1));
    const double fy = std::clamp((r.point.y - region.ymin) / wy - 0.5, 0.0,
                                 static_cast<double>(resolution - 1));
    const int ix = std::min(static_cast<int>(fx), resolution - 2 >= 0 ? resolution - 2 : 0);
    const int iy = std::min(static_cast<int>(fy), resolution - 2 >= 0 ? resolution - 2 : 0);
    const double tx = fx - ix;
    const double ty = fy - iy;
    const double w[4] = {(1 - tx) * (1 - ty), tx * (1 - ty), (1 - tx) * ty, tx * ty};
    const int idx[4] = {iy * resolution + ix, iy * resolution + ix + 1,
                        (iy + 1) * resolution + ix, (iy + 1) * resolution + ix + 1};
    for (int k = 0; k < 4; ++k) {
      g.rate_density[idx[k]] += w[k] * 8.0 * r.bytes / (period_s * g.cell_area);
      g.user_mass[idx[k]] += w[k] * r.users;
    }
  }
  return g;
}

}  // namespace uavnet
