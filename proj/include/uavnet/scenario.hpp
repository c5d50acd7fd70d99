#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "uavnet/deploy.hpp"
#include "uavnet/predictor.hpp"
#include "uavnet/traffic.hpp"

namespace uavnet {

inline constexpr int kConfigSchemaVersion = 1;

struct FleetSpec {
  int count = 9;
  double bandwidth_hz = 1e7;
  double available_energy_j = 1000.0;
  double mobility_rate_j_per_m = 0.1;
  double altitude_m = 100.0;
  std::string layout = "grid";         // "grid" | "ring" (when initial_poses empty)
  double ring_radius_m = 0.0;          // 0: one third of the smaller region extent
  std::vector<UavPose> initial_poses;  // explicit poses override the layout

  std::vector<UavState> make_fleet(const Region& region) const {
    if (count < 1) throw std::invalid_argument("fleet: count must be >= 1");
    std::vector<UavState> fleet;
    fleet.reserve(count);
    if (!initial_poses.empty()) {
      if (static_cast<int>(initial_poses.size()) != count)
        throw std::invalid_argument("fleet: initial_poses size does not match count");
      for (int i = 0; i < count; ++i)
        fleet.push_back({i, initial_poses[i], available_energy_j, bandwidth_hz,
                         mobility_rate_j_per_m});
      return fleet;
    }
    if (layout == "ring") {
      const Vec2 center = region.center();
      const double r =
          ring_radius_m > 0.0 ? ring_radius_m : std::min(region.width(), region.height()) / 3.0;
      for (int i = 0; i < count; ++i) {
        const double angle = 2.0 * std::numbers::pi * i / count;
        UavPose pose;
        pose.x_m = center.x + r * std::cos(angle);
        pose.y_m = center.y + r * std::sin(angle);
        pose.h_m = altitude_m;
        fleet.push_back({i, pose, available_energy_j, bandwidth_hz, mobility_rate_j_per_m});
      }
      return fleet;
    }
    if (layout != "grid") throw std::invalid_argument("fleet: unknown layout '" + layout + "'");
    // near-square grid, row-major, deterministic
    const int cols = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(count))));
    const int rows = (count + cols - 1) / cols;
    for (int i = 0; i < count; ++i) {
      const int r = i / cols;
      const int c = i % cols;
      UavPose pose;
      pose.x_m = region.xmin + (c + 0.5) * region.width() / cols;
      pose.y_m = region.ymin + (r + 0.5) * region.height() / rows;
      pose.h_m = altitude_m;
      fleet.push_back({i, pose, available_energy_j, bandwidth_hz, mobility_rate_j_per_m});
    }
    return fleet;
  }
};

// Synthetic-dataset description: either explicit 24 hour specs or the
// rotating-hotspots generator.
struct RotatingHotspotsSpec {
  int days = 16;
  int samples_per_hour = 240;
  int components = 3;
  double center_radius_m = 3600.0;
  double rotate_deg_per_hour = 5.0;
  double hotspot_sigma_m = 1400.0;
  double center_jitter_std_m = 300.0;
  double bytes_mean = 2e14;
  double bytes_std = 1.5e13;
  double users_mean = 270.0;
  double users_std = 15.0;
  std::int64_t base_users = 0;
  double base_bytes = 0.0;

  SyntheticSpec build(const Region& region) const {
    SyntheticSpec spec;
    spec.days = days;
    spec.samples_per_hour = samples_per_hour;
    spec.region = region;
    spec.base_users = base_users;
    spec.base_bytes = base_bytes;
    const Vec2 center = region.center();
    for (int h = 0; h < 24; ++h) {
      HourSpec hs;
      const double base_angle = h * rotate_deg_per_hour * std::numbers::pi / 180.0;
      for (int k = 0; k < components; ++k) {
        const double angle = base_angle + 2.0 * std::numbers::pi * k / components;
        GaussianComponentSpec c;
        c.weight = 1.0 / components;
        c.mean = {center.x + center_radius_m * std::cos(angle),
                  center.y + center_radius_m * std::sin(angle)};
        c.cov = Sym2::isotropic(hotspot_sigma_m * hotspot_sigma_m);
        hs.components.push_back(c);
      }
      hs.total_bytes_mean = bytes_mean;
      hs.total_bytes_std = bytes_std;
      hs.total_users_mean = users_mean;
      hs.total_users_std = users_std;
      hs.center_jitter_std_m = center_jitter_std_m;
      spec.hours[h] = hs;
    }
    return spec;
  }
};

enum class RunMode { predictive, reactive, both };

struct SweepSpec {
  std::string axis = "uav_count";  // or "bandwidth"
  std::vector<double> values;

  void validate() const {
    if (axis != "uav_count" && axis != "bandwidth")
      throw std::invalid_argument("sweep: axis must be uav_count or bandwidth");
    for (std::size_t i = 1; i < values.size(); ++i)
      if (values[i] <= values[i - 1])
        throw std::invalid_argument("sweep: values must be sorted ascending");
  }
};

struct ScenarioConfig {
  std::uint64_t seed = 42;
  Region region{0, 10000, 0, 10000};
  ChannelParams channel = ChannelParams::urban();
  FleetSpec fleet;
  PredictorOptions predictor;
  DeployOptions deploy;
  int resolution = 32;
  double period_s = 3600.0;
  double train_fraction = 7.0 / 8.0;
  std::int64_t capacity_users = 0;  // N_m
  double capacity_bytes = 0.0;      // D_m
  RunMode mode = RunMode::both;
  SweepSpec sweep;
  std::string csv_path;                              // dataset from file...
  std::optional<RotatingHotspotsSpec> synthetic;     // ...or generated
  std::optional<SyntheticSpec> synthetic_explicit;   // ...or fully spelled out
  std::string models_path;  // pre-fitted models for the plan command

  void validate() const {
    region.validate();
    channel.validate();
    if (resolution < 8) throw std::invalid_argument("config: resolution must be >= 8");
    if (!(predictor.threshold > 0.0 && predictor.threshold < 1.0))
      throw std::invalid_argument("config: threshold must be in (0,1)");
    if (csv_path.empty() && !synthetic && !synthetic_explicit)
      throw std::invalid_argument("config: a dataset source (csv or synthetic) is required");
    sweep.validate();
  }

  AerialDataset load_dataset() const {
    if (!csv_path.empty()) return ingest_csv(csv_path, capacity_users, capacity_bytes);
    if (synthetic_explicit) return synthesize(*synthetic_explicit, seed).data;
    return synthesize(synthetic->build(region), seed).data;
  }

  // Reference setup: 10 km x 10 km region, 9 UAVs at 100 m, 10 MHz, urban
  // channel, rotating three-hotspot synthetic demand.
  static ScenarioConfig reference() {
    ScenarioConfig cfg;
    cfg.seed = 42;
    cfg.region = {0, 10000, 0, 10000};
    cfg.channel = ChannelParams::urban();
    cfg.fleet.count = 9;
    cfg.fleet.bandwidth_hz = 1e7;
    cfg.fleet.available_energy_j = 1000.0;
    cfg.fleet.mobility_rate_j_per_m = 0.1;
    cfg.fleet.altitude_m = 100.0;
    cfg.fleet.layout = "ring";
    cfg.fleet.ring_radius_m = 3600.0;
    cfg.predictor.threshold = 0.6;
    cfg.resolution = 40;
    cfg.deploy.partition.tol = 0.15;
    cfg.deploy.placement.h_min = cfg.deploy.placement.h_max = 100.0;
    cfg.synthetic = RotatingHotspotsSpec{};
    cfg.sweep.axis = "uav_count";
    cfg.sweep.values = {9, 16, 25, 36};
    return cfg;
  }
};

// ---- JSON ------------------------------------------------------------------

inline void to_json(nlohmann::json& j, const ChannelParams& p) {
  j = {{"carrier_frequency_hz", p.carrier_frequency_hz},
       {"light_speed_m_s", p.light_speed_m_s},
       {"env_a", p.env_a},
       {"env_b", p.env_b},
       {"excess_loss_los_db_mean", p.excess_loss_los_db_mean},
       {"excess_loss_los_db_std", p.excess_loss_los_db_std},
       {"excess_loss_nlos_db_mean", p.excess_loss_nlos_db_mean},
       {"excess_loss_nlos_db_std", p.excess_loss_nlos_db_std},
       {"noise_density_dbm_hz", p.noise_density_dbm_hz},
       {"antenna_gain_db", p.antenna_gain_db}};
}
inline void from_json(const nlohmann::json& j, ChannelParams& p) {
  if (j.contains("preset")) {
    const auto preset = j.at("preset").get<std::string>();
    if (preset == "urban")
      p = ChannelParams::urban();
    else
      throw std::invalid_argument("channel: unknown preset '" + preset + "'");
  }
  auto opt = [&](const char* key, double& target) {
    if (j.contains(key)) target = j.at(key).get<double>();
  };
  opt("carrier_frequency_hz", p.carrier_frequency_hz);
  opt("light_speed_m_s", p.light_speed_m_s);
  opt("env_a", p.env_a);
  opt("env_b", p.env_b);
  opt("excess_loss_los_db_mean", p.excess_loss_los_db_mean);
  opt("excess_loss_los_db_std", p.excess_loss_los_db_std);
  opt("excess_loss_nlos_db_mean", p.excess_loss_nlos_db_mean);
  opt("excess_loss_nlos_db_std", p.excess_loss_nlos_db_std);
  opt("noise_density_dbm_hz", p.noise_density_dbm_hz);
  opt("antenna_gain_db", p.antenna_gain_db);
  p.validate();
}

inline void to_json(nlohmann::json& j, const RotatingHotspotsSpec& s) {
  j = {{"kind", "rotating_hotspots"},
       {"days", s.days},
       {"samples_per_hour", s.samples_per_hour},
       {"components", s.components},
       {"center_radius_m", s.center_radius_m},
       {"rotate_deg_per_hour", s.rotate_deg_per_hour},
       {"hotspot_sigma_m", s.hotspot_sigma_m},
       {"center_jitter_std_m", s.center_jitter_std_m},
       {"bytes_mean", s.bytes_mean},
       {"bytes_std", s.bytes_std},
       {"users_mean", s.users_mean},
       {"users_std", s.users_std},
       {"base_users", s.base_users},
       {"base_bytes", s.base_bytes}};
}
inline void from_json(const nlohmann::json& j, RotatingHotspotsSpec& s) {
  auto opt = [&](const char* key, auto& target) {
    if (j.contains(key)) target = j.at(key).get<std::decay_t<decltype(target)>>();
  };
  opt("days", s.days);
  opt("samples_per_hour", s.samples_per_hour);
  opt("components", s.components);
  opt("center_radius_m", s.center_radius_m);
  opt("rotate_deg_per_hour", s.rotate_deg_per_hour);
  opt("hotspot_sigma_m", s.hotspot_sigma_m);
  opt("center_jitter_std_m", s.center_jitter_std_m);
  opt("bytes_mean", s.bytes_mean);
  opt("bytes_std", s.bytes_std);
  opt("users_mean", s.users_mean);
  opt("users_std", s.users_std);
  opt("base_users", s.base_users);
  opt("base_bytes", s.base_bytes);
}

inline void to_json(nlohmann::json& j, const GaussianComponentSpec& c) {
  j = {{"weight", c.weight},
       {"mean", {c.mean.x, c.mean.y}},
       {"cov", {c.cov.xx, c.cov.xy, c.cov.yy}}};
}
inline void from_json(const nlohmann::json& j, GaussianComponentSpec& c) {
  c.weight = j.at("weight").get<double>();
  c.mean = {j.at("mean")[0].get<double>(), j.at("mean")[1].get<double>()};
  c.cov = {j.at("cov")[0].get<double>(), j.at("cov")[1].get<double>(), j.at("cov")[2].get<double>()};
}

inline void to_json(nlohmann::json& j, const HourSpec& h) {
  j = {{"components", h.components},
       {"total_bytes_mean", h.total_bytes_mean},
       {"total_bytes_std", h.total_bytes_std},
       {"total_users_mean", h.total_users_mean},
       {"total_users_std", h.total_users_std},
       {"center_jitter_std_m", h.center_jitter_std_m}};
}
inline void from_json(const nlohmann::json& j, HourSpec& h) {
  h.components = j.value("components", std::vector<GaussianComponentSpec>{});
  h.total_bytes_mean = j.value("total_bytes_mean", 0.0);
  h.total_bytes_std = j.value("total_bytes_std", 0.0);
  h.total_users_mean = j.value("total_users_mean", 0.0);
  h.total_users_std = j.value("total_users_std", 0.0);
  h.center_jitter_std_m = j.value("center_jitter_std_m", 0.0);
}

inline void to_json(nlohmann::json& j, const SyntheticSpec& s) {
  j = {{"kind", "explicit"},
       {"schema_version", kConfigSchemaVersion},
       {"days", s.days},
       {"samples_per_hour", s.samples_per_hour},
       {"region", s.region},
       {"base_users", s.base_users},
       {"base_bytes", s.base_bytes},
       {"hours", s.hours}};
}
inline void from_json(const nlohmann::json& j, SyntheticSpec& s) {
  s.days = j.at("days").get<int>();
  s.samples_per_hour = j.at("samples_per_hour").get<int>();
  s.region = j.at("region").get<Region>();
  s.base_users = j.value("base_users", std::int64_t{0});
  s.base_bytes = j.value("base_bytes", 0.0);
  const auto& hours = j.at("hours");
  if (hours.size() != 24) throw std::invalid_argument("synthetic spec: hours must have 24 entries");
  for (int h = 0; h < 24; ++h) s.hours[h] = hours[h].get<HourSpec>();
}

inline void to_json(nlohmann::json& j, const ScenarioConfig& c) {
  j = {{"schema_version", kConfigSchemaVersion},
       {"seed", c.seed},
       {"region", c.region},
       {"channel", c.channel},
       {"fleet",
        {{"count", c.fleet.count},
         {"bandwidth_hz", c.fleet.bandwidth_hz},
         {"available_energy_j", c.fleet.available_energy_j},
         {"mobility_rate_j_per_m", c.fleet.mobility_rate_j_per_m},
         {"altitude_m", c.fleet.altitude_m},
         {"layout", c.fleet.layout},
         {"ring_radius_m", c.fleet.ring_radius_m}}},
       {"predictor",
        {{"threshold", c.predictor.threshold},
         {"k_min", c.predictor.k_min},
         {"k_max", c.predictor.k_max}}},
       {"deploy",
        {{"partition_tol", c.deploy.partition.tol},
         {"partition_max_rounds", c.deploy.partition.max_rounds},
         {"alternation_rounds", c.deploy.alternation_rounds},
         {"placement_mode", c.deploy.placement.mode == PlacementMode::high_alt  ? "high_alt"
                            : c.deploy.placement.mode == PlacementMode::low_alt ? "low_alt"
                                                                                : "exact"},
         {"h_min", c.deploy.placement.h_min},
         {"h_max", c.deploy.placement.h_max},
         {"horizon_s", c.deploy.horizon_s}}},
       {"resolution", c.resolution},
       {"period_s", c.period_s},
       {"train_fraction", c.train_fraction},
       {"capacity", {{"users", c.capacity_users}, {"bytes", c.capacity_bytes}}},
       {"mode", c.mode == RunMode::predictive ? "predictive"
                : c.mode == RunMode::reactive ? "reactive"
                                              : "both"},
       {"sweep", {{"axis", c.sweep.axis}, {"values", c.sweep.values}}}};
  if (!c.csv_path.empty()) j["dataset"] = {{"csv", c.csv_path}};
  if (c.synthetic) j["dataset"] = {{"synthetic", *c.synthetic}};
  if (c.synthetic_explicit) j["dataset"] = {{"synthetic", *c.synthetic_explicit}};
  if (!c.models_path.empty()) j["models"] = c.models_path;
}

inline void from_json(const nlohmann::json& j, ScenarioConfig& c) {
  if (j.value("schema_version", 1) != kConfigSchemaVersion)
    throw std::invalid_argument("config: unsupported schema_version");
  auto opt = [&](const nlohmann::json& node, const char* key, auto& target) {
    if (node.contains(key)) target = node.at(key).get<std::decay_t<decltype(target)>>();
  };
  opt(j, "seed", c.seed);
  if (j.contains("region")) c.region = j.at("region").get<Region>();
  if (j.contains("channel")) c.channel = j.at("channel").get<ChannelParams>();
  if (j.contains("fleet")) {
    const auto& f = j.at("fleet");
    opt(f, "count", c.fleet.count);
    opt(f, "bandwidth_hz", c.fleet.bandwidth_hz);
    opt(f, "available_energy_j", c.fleet.available_energy_j);
    opt(f, "mobility_rate_j_per_m", c.fleet.mobility_rate_j_per_m);
    opt(f, "altitude_m", c.fleet.altitude_m);
    opt(f, "layout", c.fleet.layout);
    opt(f, "ring_radius_m", c.fleet.ring_radius_m);
    if (f.contains("initial_poses"))
      c.fleet.initial_poses = f.at("initial_poses").get<std::vector<UavPose>>();
  }
  if (j.contains("predictor")) {
    const auto& p = j.at("predictor");
    opt(p, "threshold", c.predictor.threshold);
    opt(p, "k_min", c.predictor.k_min);
    opt(p, "k_max", c.predictor.k_max);
  }
  if (j.contains("deploy")) {
    const auto& d = j.at("deploy");
    opt(d, "partition_tol", c.deploy.partition.tol);
    opt(d, "partition_max_rounds", c.deploy.partition.max_rounds);
    opt(d, "alternation_rounds", c.deploy.alternation_rounds);
    opt(d, "h_min", c.deploy.placement.h_min);
    opt(d, "h_max", c.deploy.placement.h_max);
    opt(d, "horizon_s", c.deploy.horizon_s);
    if (d.contains("placement_mode")) {
      const auto m = d.at("placement_mode").get<std::string>();
      if (m == "high_alt")
        c.deploy.placement.mode = PlacementMode::high_alt;
      else if (m == "low_alt")
        c.deploy.placement.mode = PlacementMode::low_alt;
      else if (m == "exact")
        c.deploy.placement.mode = PlacementMode::exact;
      else
        throw std::invalid_argument("config: unknown placement_mode '" + m + "'");
    }
  }
  opt(j, "resolution", c.resolution);
  opt(j, "period_s", c.period_s);
  opt(j, "train_fraction", c.train_fraction);
  if (j.contains("capacity")) {
    opt(j.at("capacity"), "users", c.capacity_users);
    opt(j.at("capacity"), "bytes", c.capacity_bytes);
  }
  if (j.contains("mode")) {
    const auto m = j.at("mode").get<std::string>();
    if (m == "predictive")
      c.mode = RunMode::predictive;
    else if (m == "reactive")
      c.mode = RunMode::reactive;
    else if (m == "both")
      c.mode = RunMode::both;
    else
      throw std::invalid_argument("config: unknown mode '" + m + "'");
  }
  if (j.contains("sweep")) {
    opt(j.at("sweep"), "axis", c.sweep.axis);
    opt(j.at("sweep"), "values", c.sweep.values);
  }
  if (j.contains("dataset")) {
    const auto& d = j.at("dataset");
    if (d.contains("csv")) c.csv_path = d.at("csv").get<std::string>();
    if (d.contains("synthetic")) {
      const auto& s = d.at("synthetic");
      if (s.value("kind", "rotating_hotspots") == "explicit")
        c.synthetic_explicit = s.get<SyntheticSpec>();
      else
        c.synthetic = s.get<RotatingHotspotsSpec>();
    }
  }
  opt(j, "models", c.models_path);
  c.validate();
}

inline ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_config: cannot open " + path);
  nlohmann::json j;
  in >> j;
  return j.get<ScenarioConfig>();
}

}  // namespace uavnet
