#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "uavnet/em.hpp"
#include "uavnet/gmm.hpp"
#include "uavnet/traffic.hpp"

namespace uavnet {

struct PredictorOptions {
  double threshold = 0.6;  // CDF threshold for the predicted totals
  int k_min = 1;
  int k_max = 8;
  double covariance_floor_factor = 1e-6;  // times (scale)^2
  FitOptions em;
  KmeansOptions kmeans;
};

// Fitted models for one hour of day: spatial/temporal mixtures for the data
// traffic, and the same pair for the user counts.
struct HourModels {
  int hour = 0;
  bool no_demand = false;
  GmmModel spatial;          // g^t, 2-D, byte-weighted
  FitReport spatial_report;
  GmmModel temporal;         // D^t, 1-D, unit weights
  FitReport temporal_report;
  GmmModel user_spatial;     // f^t, 2-D, user-weighted
  FitReport user_spatial_report;
  GmmModel user_temporal;    // N^t, 1-D, unit weights
  FitReport user_temporal_report;
};

struct ModelSet {
  std::uint64_t seed = 0;
  Region region;
  std::vector<HourModels> hours;  // 24 entries
};

namespace detail {

inline double value_range(const std::vector<double>& v) {
  double lo = v.empty() ? 0.0 : v[0], hi = lo;
  for (double x : v) {
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
  return hi - lo;
}

inline std::pair<GmmModel, FitReport> fit_spatial(const std::vector<WeightedSample>& samples,
                                                  const Region& region,
                                                  const PredictorOptions& opts,
                                                  std::uint64_t seed) {
  FitOptions em = opts.em;
  em.covariance_floor =
      std::max(1e-12, opts.covariance_floor_factor * region.diagonal() * region.diagonal());
  return fit_gmm_auto(samples, 2, opts.k_min, opts.k_max, seed, em, opts.kmeans);
}

inline std::pair<GmmModel, FitReport> fit_temporal(const std::vector<double>& totals,
                                                   const PredictorOptions& opts,
                                                   std::uint64_t seed) {
  std::vector<WeightedSample> samples;
  samples.reserve(totals.size());
  for (double v : totals) samples.push_back({{v, 0.0}, 1.0});
  FitOptions em = opts.em;
  const double range = value_range(totals);
  em.covariance_floor = std::max(1e-12, opts.covariance_floor_factor * range * range);
  return fit_gmm_auto(samples, 1, opts.k_min, opts.k_max, seed, em, opts.kmeans);
}

// Mixture mass over a rectangle, composite Simpson on a 256-interval grid.
inline double mixture_mass_over(const GmmModel& m, const Region& region) {
  constexpr int kIntervals = 256;
  const double hx = region.width() / kIntervals;
  const double hy = region.height() / kIntervals;
  auto coeff = [](int i) { return i == 0 || i == kIntervals ? 1.0 : (i % 2 ? 4.0 : 2.0); };
  double acc = 0.0;
  for (int iy = 0; iy <= kIntervals; ++iy) {
    const double y = region.ymin + iy * hy;
    double row = 0.0;
    for (int ix = 0; ix <= kIntervals; ++ix)
      row += coeff(ix) * gmm_pdf(m, Vec2{region.xmin + ix * hx, y});
    acc += coeff(iy) * row;
  }
  return acc * hx * hy / 9.0;
}

}  // namespace detail

// Fits the four per-hour models of one slice. Spatial models use byte/user
// weighted samples pooled over days; temporal models use the day totals with
// unit weights.
inline HourModels fit_hour(const HourlySlice& slice, const PredictorOptions& opts,
                           std::uint64_t seed) {
  HourModels out;
  out.hour = slice.hour_of_day;
  if (slice.no_demand()) {
    out.no_demand = true;
    return out;
  }
  try {
    std::vector<WeightedSample> byte_samples, user_samples;
    for (const auto& day : slice.per_day) {
      for (const auto& s : day) {
        byte_samples.push_back({s.point, s.bytes});
        user_samples.push_back({s.point, s.users});
      }
    }
    auto seed_for = [&](int which) {
      return splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(slice.hour_of_day) * 8 + which));
    };
    std::tie(out.spatial, out.spatial_report) =
        detail::fit_spatial(byte_samples, slice.region, opts, seed_for(0));
    std::tie(out.temporal, out.temporal_report) =
        detail::fit_temporal(slice.day_total_bytes, opts, seed_for(1));

    double user_weight = 0.0;
    for (const auto& s : user_samples) user_weight += s.weight;
    if (user_weight > 0.0) {
      std::tie(out.user_spatial, out.user_spatial_report) =
          detail::fit_spatial(user_samples, slice.region, opts, seed_for(2));
      std::tie(out.user_temporal, out.user_temporal_report) =
          detail::fit_temporal(slice.day_total_users, opts, seed_for(3));
    } else {
      // no user overflow this hour; reuse the traffic shape with zero totals
      out.user_spatial = out.spatial;
      out.user_temporal = out.temporal;
      for (auto& c : out.user_temporal.components) c.mean.x = 0.0;
    }
  } catch (const std::exception& e) {
    throw std::runtime_error("fit_hour: hour " + std::to_string(slice.hour_of_day) + ": " +
                             e.what());
  }
  return out;
}

inline ModelSet fit_models(const AerialDataset& data, const PredictorOptions& opts,
                           std::uint64_t seed) {
  const auto slices = hourly_slices(data);
  ModelSet set;
  set.seed = seed;
  set.region = data.region;
  set.hours.reserve(24);
  for (int h = 0; h < 24; ++h) set.hours.push_back(fit_hour(slices[h], opts, seed));
  return set;
}

// Demand forecast for one hour: predicted totals plus spatial densities
// restricted to the region and renormalized.
struct DemandForecast {
  int hour = 0;
  bool no_demand = false;
  double total_bytes = 0.0;  // D^t
  double total_users = 0.0;  // N^t
  Region region;
  GmmModel spatial_bytes;
  GmmModel spatial_users;
  double byte_mass = 1.0;  // mixture mass inside the region
  double user_mass = 1.0;

  double density_at(const Vec2& p) const {
    if (no_demand || !region.contains(p)) return 0.0;
    return gmm_pdf(spatial_bytes, p) / byte_mass;
  }
  double user_density_at(const Vec2& p) const {
    if (no_demand || !region.contains(p)) return 0.0;
    return gmm_pdf(spatial_users, p) / user_mass;
  }
};

inline DemandForecast predict(const HourModels& models, double threshold, const Region& region) {
  DemandForecast f;
  f.hour = models.hour;
  f.region = region;
  if (models.no_demand) {
    f.no_demand = true;
    return f;
  }
  f.total_bytes = std::max(0.0, cdf_invert(models.temporal, threshold));
  f.total_users = std::max(0.0, cdf_invert(models.user_temporal, threshold));
  if (f.total_bytes <= 0.0) {
    f.no_demand = true;
    return f;
  }
  f.spatial_bytes = models.spatial;
  f.spatial_users = models.user_spatial;
  f.byte_mass = detail::mixture_mass_over(f.spatial_bytes, region);
  f.user_mass = detail::mixture_mass_over(f.spatial_users, region);
  if (!(f.byte_mass > 0.0))
    throw std::runtime_error("predict: hour " + std::to_string(f.hour) +
                             ": spatial density carries no mass inside the region");
  if (!(f.user_mass > 0.0)) f.user_mass = 1.0;
  return f;
}

// ---- JSON serialization ----------------------------------------------------

inline constexpr int kModelSchemaVersion = 1;

inline void to_json(nlohmann::json& j, const GmmComponent& c) {
  j = {{"weight", c.weight},
       {"mean", {c.mean.x, c.mean.y}},
       {"cov", {c.cov.xx, c.cov.xy, c.cov.yy}}};
}
inline void from_json(const nlohmann::json& j, GmmComponent& c) {
  c.weight = j.at("weight").get<double>();
  c.mean = {j.at("mean")[0].get<double>(), j.at("mean")[1].get<double>()};
  c.cov = {j.at("cov")[0].get<double>(), j.at("cov")[1].get<double>(), j.at("cov")[2].get<double>()};
}

inline void to_json(nlohmann::json& j, const GmmModel& m) {
  j = {{"dim", m.dim}, {"covariance_floor", m.covariance_floor}, {"components", m.components}};
}
inline void from_json(const nlohmann::json& j, GmmModel& m) {
  m.dim = j.at("dim").get<int>();
  m.covariance_floor = j.at("covariance_floor").get<double>();
  m.components = j.at("components").get<std::vector<GmmComponent>>();
}

inline void to_json(nlohmann::json& j, const FitReport& r) {
  j = {{"iterations", r.iterations},
       {"log_likelihood_trace", r.log_likelihood_trace},
       {"converged", r.converged},
       {"chosen_k", r.chosen_k},
       {"kmeans_ratio_trace", r.kmeans_ratio_trace}};
}
inline void from_json(const nlohmann::json& j, FitReport& r) {
  r.iterations = j.at("iterations").get<int>();
  r.log_likelihood_trace = j.at("log_likelihood_trace").get<std::vector<double>>();
  r.converged = j.at("converged").get<bool>();
  r.chosen_k = j.at("chosen_k").get<int>();
  r.kmeans_ratio_trace = j.at("kmeans_ratio_trace").get<std::vector<std::pair<int, double>>>();
}

inline void to_json(nlohmann::json& j, const HourModels& h) {
  j = {{"hour", h.hour}, {"no_demand", h.no_demand}};
  if (!h.no_demand) {
    j["spatial"] = h.spatial;
    j["spatial_report"] = h.spatial_report;
    j["temporal"] = h.temporal;
    j["temporal_report"] = h.temporal_report;
    j["user_spatial"] = h.user_spatial;
    j["user_spatial_report"] = h.user_spatial_report;
    j["user_temporal"] = h.user_temporal;
    j["user_temporal_report"] = h.user_temporal_report;
  }
}
inline void from_json(const nlohmann::json& j, HourModels& h) {
  h.hour = j.at("hour").get<int>();
  h.no_demand = j.at("no_demand").get<bool>();
  if (!h.no_demand) {
    h.spatial = j.at("spatial").get<GmmModel>();
    h.spatial_report = j.at("spatial_report").get<FitReport>();
    h.temporal = j.at("temporal").get<GmmModel>();
    h.temporal_report = j.at("temporal_report").get<FitReport>();
    h.user_spatial = j.at("user_spatial").get<GmmModel>();
    h.user_spatial_report = j.at("user_spatial_report").get<FitReport>();
    h.user_temporal = j.at("user_temporal").get<GmmModel>();
    h.user_temporal_report = j.at("user_temporal_report").get<FitReport>();
  }
}

inline void to_json(nlohmann::json& j, const Region& r) {
  j = {{"xmin", r.xmin}, {"xmax", r.xmax}, {"ymin", r.ymin}, {"ymax", r.ymax}};
}
inline void from_json(const nlohmann::json& j, Region& r) {
  r.xmin = j.at("xmin").get<double>();
  r.xmax = j.at("xmax").get<double>();
  r.ymin = j.at("ymin").get<double>();
  r.ymax = j.at("ymax").get<double>();
}

inline void save_models(const ModelSet& set, const std::string& path) {
  nlohmann::json j;
  j["schema_version"] = kModelSchemaVersion;
  j["seed"] = set.seed;
  j["region"] = set.region;
  j["hours"] = set.hours;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_models: cannot open " + path);
  out << j.dump(2) << "\n";
}

inline ModelSet load_models(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_models: cannot open " + path);
  nlohmann::json j;
  in >> j;
  if (j.at("schema_version").get<int>() != kModelSchemaVersion)
    throw std::runtime_error("load_models: unsupported schema_version");
  ModelSet set;
  set.seed = j.at("seed").get<std::uint64_t>();
  set.region = j.at("region").get<Region>();
  set.hours = j.at("hours").get<std::vector<HourModels>>();
  return set;
}

}  // namespace uavnet
