#include <cstdio>
#include <filesystem>
#include <string>

#include <CLI11.hpp>

#include "uavnet/harness.hpp"

using namespace uavnet;

namespace {

struct CommonArgs {
  std::string config_path;
  std::string out_dir = "out";
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string mode;
  int resolution = 0;
  double threshold = 0.0;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool config_required = true) {
  auto* opt = cmd->add_option("--config", args.config_path, "scenario config JSON");
  if (config_required) opt->required();
  cmd->add_option("--out", args.out_dir, "output directory");
  cmd->add_option("--seed", args.seed, "override the config seed")
      ->each([&](const std::string&) { args.seed_set = true; });
  cmd->add_option("--mode", args.mode, "predictive|reactive|both");
  cmd->add_option("--resolution", args.resolution, "override the demand grid resolution");
  cmd->add_option("--threshold", args.threshold, "override the CDF prediction threshold")
      ->check(CLI::Range(0.0, 1.0));
}

ScenarioConfig load_with_overrides(const CommonArgs& args) {
  ScenarioConfig cfg = load_config(args.config_path);
  if (args.seed_set) cfg.seed = args.seed;
  if (!args.mode.empty()) {
    if (args.mode == "predictive")
      cfg.mode = RunMode::predictive;
    else if (args.mode == "reactive")
      cfg.mode = RunMode::reactive;
    else if (args.mode == "both")
      cfg.mode = RunMode::both;
    else
      throw std::invalid_argument("unknown --mode '" + args.mode + "'");
  }
  if (args.resolution > 0) cfg.resolution = args.resolution;
  if (args.threshold > 0.0) cfg.predictor.threshold = args.threshold;
  cfg.validate();
  return cfg;
}

std::filesystem::path ensure_out(const std::string& dir) {
  std::filesystem::path p(dir);
  std::error_code ec;
  std::filesystem::create_directories(p, ec);
  if (!std::filesystem::is_directory(p))
    throw std::runtime_error("cannot create output directory " + dir);
  return p;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"UAV aerial base-station demand prediction and deployment toolkit"};
  app.require_subcommand(1);

  CommonArgs args;

  auto* synth = app.add_subcommand("synth", "generate a synthetic traffic CSV from the config");
  add_common(synth, args);

  auto* fit = app.add_subcommand("fit", "fit per-hour demand models and write models.json");
  add_common(fit, args);

  auto* plan = app.add_subcommand("plan", "plan one hour's deployment and write plan.json");
  add_common(plan, args);
  int plan_hour = 0;
  plan->add_option("--hour", plan_hour, "hour of day to plan")->check(CLI::Range(0, 23));

  auto* run = app.add_subcommand("run", "run the scenario and write per-epoch results");
  add_common(run, args);

  auto* swp = app.add_subcommand("sweep", "sweep the configured axis and write figure CSVs");
  add_common(swp, args);

  CLI11_PARSE(app, argc, argv);

  try {
    const auto out = ensure_out(args.out_dir);

    if (synth->parsed()) {
      const ScenarioConfig cfg = load_with_overrides(args);
      if (cfg.csv_path.empty() == false)
        throw std::invalid_argument("synth: config must define a synthetic dataset, not a csv");
      const SyntheticSpec spec =
          cfg.synthetic_explicit ? *cfg.synthetic_explicit : cfg.synthetic->build(cfg.region);
      const SyntheticResult res = synthesize(spec, cfg.seed);
      const auto path = (out / "dataset.csv").string();
      write_csv(res.data, path, spec.base_users, spec.base_bytes);
      std::printf("wrote %s (%zu records, %d days)\n", path.c_str(), res.data.records.size(),
                  res.data.days);
      return 0;
    }

    if (fit->parsed()) {
      const ScenarioConfig cfg = load_with_overrides(args);
      const AerialDataset dataset = cfg.load_dataset();
      const auto [train, test] = train_test_split(dataset, cfg.train_fraction);
      const ModelSet models = fit_models(train, cfg.predictor, cfg.seed);
      const auto path = (out / "models.json").string();
      save_models(models, path);
      std::printf("wrote %s (fit on %d train days)\n", path.c_str(), train.days);
      return 0;
    }

    if (plan->parsed()) {
      const ScenarioConfig cfg = load_with_overrides(args);
      ModelSet models;
      if (!cfg.models_path.empty()) {
        models = load_models(cfg.models_path);
      } else {
        const AerialDataset dataset = cfg.load_dataset();
        const auto [train, test] = train_test_split(dataset, cfg.train_fraction);
        models = fit_models(train, cfg.predictor, cfg.seed);
      }
      const DemandForecast forecast =
          predict(models.hours[plan_hour], cfg.predictor.threshold, cfg.region);
      const DemandGrid grid =
          forecast.no_demand
              ? DemandGrid{}
              : build_demand_grid(forecast, cfg.region, cfg.resolution, cfg.period_s);
      const auto fleet = cfg.fleet.make_fleet(cfg.region);
      const DeploymentPlan the_plan = plan_deployment(fleet, grid, cfg.channel, cfg.deploy);
      const auto path = (out / "plan.json").string();
      save_plan(the_plan, path);
      std::printf("wrote %s (hour %d, objective %.3f)\n", path.c_str(), plan_hour,
                  the_plan.objective);
      return 0;
    }

    if (run->parsed()) {
      const ScenarioConfig cfg = load_with_overrides(args);
      const AerialDataset dataset = cfg.load_dataset();
      const auto [train, test] = train_test_split(dataset, cfg.train_fraction);
      const ModelSet models = fit_models(train, cfg.predictor, cfg.seed);
      std::vector<EpochResult> epochs;
      if (cfg.mode != RunMode::reactive) {
        const auto e = run_predictive(cfg, test, models);
        epochs.insert(epochs.end(), e.begin(), e.end());
      }
      if (cfg.mode != RunMode::predictive) {
        const auto e = run_reactive(cfg, test, models);
        epochs.insert(epochs.end(), e.begin(), e.end());
      }
      const auto path = (out / "epochs.csv").string();
      write_epochs_csv(epochs, path);
      std::printf("wrote %s (%zu epochs)\n", path.c_str(), epochs.size());
      return 0;
    }

    if (swp->parsed()) {
      const ScenarioConfig cfg = load_with_overrides(args);
      const SweepResult result = sweep(cfg);
      const auto files = emit(result, out.string());
      for (const auto& f : files) std::printf("wrote %s\n", (out / f).string().c_str());
      return 0;
    }
  } catch (const std::exception& e) {
    nlohmann::json err = {{"error", e.what()}};
    std::fprintf(stderr, "%s\n", err.dump().c_str());
    return 1;
  }
  return 0;
}
