#pragma once

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "uavnet/scenario.hpp"

namespace uavnet {

struct EpochResult {
  int day = 0;   // test-day index within the test split
  int hour = 0;
  std::string mode;  // "predictive" | "reactive"
  double pc_w = 0.0;
  double pt_j = 0.0;
  double objective = 0.0;
  double efficiency = 1.0;  // pc / (pc + pt); 1 when nothing was spent
  std::vector<double> shares;
  std::vector<double> movement_m;
};

namespace detail {

inline double scored_objective(const ScenarioConfig& cfg, double pc_w, double pt_j) {
  const double w = cfg.deploy.horizon_s > 0.0 ? cfg.deploy.horizon_s : 1.0;
  return w * pc_w + pt_j;
}

}  // namespace detail

// One mode's pass over the test split: plan each hour (forecast-driven or
// from the observed demand), score transmit power against the realized
// demand, carry poses across hours.
inline std::vector<EpochResult> run_epochs(const ScenarioConfig& cfg, const AerialDataset& test,
                                           const ModelSet& models, RunMode mode) {
  if (mode == RunMode::both) throw std::invalid_argument("run_epochs: pick one mode");
  const bool predictive = mode == RunMode::predictive;
  const auto slices = hourly_slices(test);
  std::vector<UavState> fleet = cfg.fleet.make_fleet(cfg.region);
  std::vector<EpochResult> out;

  for (int day = 0; day < test.days; ++day) {
    for (int hour = 0; hour < 24; ++hour) {
      const DemandGrid actual =
          build_actual_grid(slices[hour].per_day[day], cfg.region, cfg.resolution, cfg.period_s);

      DemandGrid planning_grid;
      if (predictive) {
        const DemandForecast forecast =
            predict(models.hours[hour], cfg.predictor.threshold, cfg.region);
        planning_grid = forecast.no_demand
                            ? DemandGrid{}
                            : build_demand_grid(forecast, cfg.region, cfg.resolution, cfg.period_s);
      } else {
        planning_grid = actual;
      }

      EpochResult epoch;
      epoch.day = day;
      epoch.hour = hour;
      epoch.mode = predictive ? "predictive" : "reactive";

      std::vector<UavPose> new_poses;
      std::vector<int> assignment;
      if (planning_grid.size() > 0 && planning_grid.has_demand()) {
        DeployOptions dopts = cfg.deploy;
        dopts.mobility_aware = predictive;  // the baseline redeploys for power alone
        const DeploymentPlan plan = plan_deployment(fleet, planning_grid, cfg.channel, dopts);
        new_poses = plan.placements;
        assignment = plan.partition.assignment;
        epoch.movement_m = plan.movement_m;
        epoch.pt_j = plan.mobility_energy_j;
      } else {
        // no (expected) demand: hold position
        new_poses.reserve(fleet.size());
        for (const auto& u : fleet) new_poses.push_back(u.pose);
        epoch.movement_m.assign(fleet.size(), 0.0);
      }

      if (actual.has_demand()) {
        if (assignment.empty())
          assignment = greedy_assignment(fleet, new_poses, actual, cfg.channel);
        const AssignmentEval ev =
            evaluate_assignment(fleet, new_poses, assignment, actual, cfg.channel);
        epoch.pc_w = ev.total_power_w;
        epoch.shares = ev.shares;
      } else {
        epoch.shares.assign(fleet.size(), 0.0);
      }

      epoch.objective = detail::scored_objective(cfg, epoch.pc_w, epoch.pt_j);
      const double spend = epoch.pc_w + epoch.pt_j;
      epoch.efficiency = spend > 0.0 ? epoch.pc_w / spend : 1.0;
      out.push_back(std::move(epoch));

      for (std::size_t i = 0; i < fleet.size(); ++i) fleet[i].pose = new_poses[i];
    }
  }
  return out;
}

inline std::vector<EpochResult> run_predictive(const ScenarioConfig& cfg,
                                               const AerialDataset& test, const ModelSet& models) {
  return run_epochs(cfg, test, models, RunMode::predictive);
}
inline std::vector<EpochResult> run_reactive(const ScenarioConfig& cfg, const AerialDataset& test,
                                             const ModelSet& models) {
  return run_epochs(cfg, test, models, RunMode::reactive);
}

struct SweepRow {
  std::string axis;
  double value = 0.0;
  std::string mode;
  double total_pc_w = 0.0;        // fleet total, averaged over epochs
  double avg_pc_per_uav_w = 0.0;
  double total_pt_j = 0.0;        // averaged over epochs
  double objective = 0.0;
  double efficiency = 0.0;        // ratio of summed pc to summed spend
};

struct SweepResult {
  std::vector<SweepRow> rows;
  std::map<double, double> benefit_percent;  // value -> predictive gain over reactive
  std::uint64_t seed = 0;
  std::string config_hash;
  double elapsed_s = 0.0;
};

namespace detail {

inline SweepRow aggregate(const std::vector<EpochResult>& epochs, const std::string& axis,
                          double value, const std::string& mode, int uav_count) {
  SweepRow row;
  row.axis = axis;
  row.value = value;
  row.mode = mode;
  double pc = 0.0, pt = 0.0, obj = 0.0;
  for (const auto& e : epochs) {
    pc += e.pc_w;
    pt += e.pt_j;
    obj += e.objective;
  }
  const double n = static_cast<double>(epochs.size());
  row.total_pc_w = pc / n;
  row.avg_pc_per_uav_w = row.total_pc_w / uav_count;
  row.total_pt_j = pt / n;
  row.objective = obj / n;
  row.efficiency = (pc + pt) > 0.0 ? pc / (pc + pt) : 1.0;
  return row;
}

inline std::string fnv1a_hex(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace detail

// Runs every sweep value in both (or the configured) modes against one shared
// dataset and model set, so the mode comparison is paired.
inline SweepResult sweep(const ScenarioConfig& cfg) {
  cfg.validate();
  if (cfg.sweep.values.empty()) throw std::invalid_argument("sweep: no values configured");
  const auto t0 = std::chrono::steady_clock::now();

  const AerialDataset dataset = cfg.load_dataset();
  const auto [train, test] = train_test_split(dataset, cfg.train_fraction);
  const ModelSet models = fit_models(train, cfg.predictor, cfg.seed);

  SweepResult result;
  result.seed = cfg.seed;
  result.config_hash = detail::fnv1a_hex(nlohmann::json(cfg).dump());

  for (double value : cfg.sweep.values) {
    ScenarioConfig point = cfg;
    if (cfg.sweep.axis == "uav_count") {
      point.fleet.count = static_cast<int>(value);
    } else {
      point.fleet.bandwidth_hz = value;
    }
    double obj_pred = 0.0, obj_react = 0.0;
    if (cfg.mode != RunMode::reactive) {
      const auto epochs = run_epochs(point, test, models, RunMode::predictive);
      result.rows.push_back(
          detail::aggregate(epochs, cfg.sweep.axis, value, "predictive", point.fleet.count));
      obj_pred = result.rows.back().objective;
    }
    if (cfg.mode != RunMode::predictive) {
      const auto epochs = run_epochs(point, test, models, RunMode::reactive);
      result.rows.push_back(
          detail::aggregate(epochs, cfg.sweep.axis, value, "reactive", point.fleet.count));
      obj_react = result.rows.back().objective;
    }
    if (cfg.mode == RunMode::both && obj_react > 0.0)
      result.benefit_percent[value] = 100.0 * (obj_react - obj_pred) / obj_react;
  }
  result.elapsed_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return result;
}

// ---- file emission ---------------------------------------------------------

namespace detail {

inline std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("emit: cannot open " + path.string());
  out << content;
  if (!out) throw std::runtime_error("emit: write failed for " + path.string());
}

}  // namespace detail

// Writes the figure CSVs derivable from the sweep rows, a sidecar column
// schema, and a JSON run manifest.
inline std::vector<std::string> emit(const SweepResult& result, const std::string& out_dir) {
  if (result.rows.empty()) throw std::invalid_argument("emit: no sweep rows");
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (!fs::is_directory(out_dir))
    throw std::runtime_error("emit: cannot create output directory " + out_dir);

  std::vector<std::string> written;
  std::string fig1, fig2, fig3;
  for (const auto& row : result.rows) {
    if (row.axis == "uav_count") {
      fig1 += detail::fmt(row.value) + "," + row.mode + "," + detail::fmt(row.total_pc_w) + "," +
              detail::fmt(row.avg_pc_per_uav_w) + "," + detail::fmt(row.total_pt_j) + "," +
              detail::fmt(row.objective) + "\n";
      fig2 += detail::fmt(row.value) + "," + row.mode + "," + detail::fmt(row.efficiency) + "\n";
    } else {
      fig3 += detail::fmt(row.value) + "," + row.mode + "," + detail::fmt(row.total_pc_w) + "," +
              detail::fmt(row.avg_pc_per_uav_w) + "\n";
    }
  }
  const fs::path dir(out_dir);
  if (!fig1.empty()) {
    detail::write_file(dir / "fig1_power.csv",
                       "uav_count,mode,total_pc_w,avg_pc_per_uav_w,total_pt_j,objective\n" + fig1);
    detail::write_file(dir / "fig2_efficiency.csv", "uav_count,mode,efficiency\n" + fig2);
    written.push_back("fig1_power.csv");
    written.push_back("fig2_efficiency.csv");
  }
  if (!fig3.empty()) {
    detail::write_file(dir / "fig3_bandwidth.csv",
                       "bandwidth_hz,mode,total_pc_w,avg_pc_per_uav_w\n" + fig3);
    written.push_back("fig3_bandwidth.csv");
  }

  nlohmann::json schema = {
      {"fig1_power.csv",
       {"uav_count: swept fleet size", "mode: predictive|reactive",
        "total_pc_w: fleet transmit power, epoch average (W)",
        "avg_pc_per_uav_w: total_pc_w / uav_count",
        "total_pt_j: fleet mobility energy, epoch average (J)",
        "objective: scored transmit power + mobility energy"}},
      {"fig2_efficiency.csv",
       {"uav_count: swept fleet size", "mode: predictive|reactive",
        "efficiency: summed pc / summed (pc + pt) over epochs"}},
      {"fig3_bandwidth.csv",
       {"bandwidth_hz: swept per-UAV bandwidth", "mode: predictive|reactive",
        "total_pc_w: fleet transmit power, epoch average (W)",
        "avg_pc_per_uav_w: total_pc_w / uav_count"}}};
  detail::write_file(dir / "fig_schema.json", schema.dump(2) + "\n");
  written.push_back("fig_schema.json");

  nlohmann::json manifest;
  manifest["schema_version"] = 1;
  manifest["seed"] = result.seed;
  manifest["config_hash"] = result.config_hash;
  manifest["elapsed_s"] = result.elapsed_s;
  nlohmann::json benefits = nlohmann::json::object();
  for (const auto& [value, pct] : result.benefit_percent)
    benefits[detail::fmt(value)] = pct;
  manifest["prediction_benefit_percent"] = benefits;
  detail::write_file(dir / "run_manifest.json", manifest.dump(2) + "\n");
  written.push_back("run_manifest.json");
  return written;
}

// Per-epoch CSV for the run command.
inline void write_epochs_csv(const std::vector<EpochResult>& epochs, const std::string& path) {
  if (epochs.empty()) throw std::invalid_argument("write_epochs_csv: no epochs");
  std::string body = "day,hour,mode,pc_w,pt_j,objective,efficiency\n";
  for (const auto& e : epochs) {
    body += std::to_string(e.day) + "," + std::to_string(e.hour) + "," + e.mode + "," +
            detail::fmt(e.pc_w) + "," + detail::fmt(e.pt_j) + "," + detail::fmt(e.objective) +
            "," + detail::fmt(e.efficiency) + "\n";
  }
  detail::write_file(path, body);
}

}  // namespace uavnet
