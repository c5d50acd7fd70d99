#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <numeric>

#include "oracles.hpp"
#include "uavnet/deploy.hpp"

using namespace uavnet;

namespace {

const ChannelParams kChannel = ChannelParams::urban();

DemandGrid make_grid(const Region& region, int n, double period_s = 3600.0) {
  DemandGrid g;
  g.region = region;
  g.nx = g.ny = n;
  g.cell_area = region.area() / (n * n);
  g.period_s = period_s;
  g.rate_density.assign(n * n, 0.0);
  g.user_mass.assign(n * n, 0.0);
  return g;
}

// isotropic Gaussian demand blob deposited onto the grid
void add_blob(DemandGrid& g, Vec2 center, double sigma, double total_rate_bps, double users) {
  std::vector<double> pdf(g.size());
  double sum = 0.0;
  for (int c = 0; c < g.size(); ++c) {
    const Vec2 d = g.cell_center(c) - center;
    pdf[c] = std::exp(-0.5 * d.norm2() / (sigma * sigma));
    sum += pdf[c];
  }
  for (int c = 0; c < g.size(); ++c) {
    g.rate_density[c] += total_rate_bps * pdf[c] / (sum * g.cell_area);
    g.user_mass[c] += users * pdf[c] / sum;
  }
}

std::vector<UavState> make_fleet(std::vector<UavPose> poses, double pa = 1000.0, double b = 1e7,
                                 double gamma = 0.1) {
  std::vector<UavState> fleet;
  for (std::size_t i = 0; i < poses.size(); ++i)
    fleet.push_back({static_cast<int>(i), poses[i], pa, b, gamma});
  return fleet;
}

DemandForecast blob_forecast(const Region& region, Vec2 mean, double sigma_sq, double bytes,
                             double users) {
  DemandForecast f;
  f.hour = 0;
  f.region = region;
  f.total_bytes = bytes;
  f.total_users = users;
  f.spatial_bytes.dim = 2;
  f.spatial_bytes.components = {{1.0, mean, Sym2::isotropic(sigma_sq)}};
  f.spatial_users = f.spatial_bytes;
  return f;
}

}  // namespace

TEST_CASE("build_demand_grid") {
  const Region region{0, 10000, 0, 10000};

  SECTION("near-uniform density gives near-equal cells") {
    const auto f = blob_forecast(region, {5000, 5000}, 1e18, 1e12, 100);  // huge sigma
    const auto g = build_demand_grid(f, region, 16);
    const double first = g.rate_density[0];
    for (double b : g.rate_density) CHECK(b == Catch::Approx(first).epsilon(1e-6));
  }
  SECTION("grid totals match the forecast at every resolution") {
    const auto f = blob_forecast(region, {4000, 6000}, 1.2e6, 3e15, 250);
    const auto g16 = build_demand_grid(f, region, 16);
    const auto g32 = build_demand_grid(f, region, 32);
    const double expected_rate = 8.0 * f.total_bytes / 3600.0;
    CHECK(g16.total_rate_bps() == Catch::Approx(expected_rate).epsilon(1e-9));
    CHECK(g32.total_rate_bps() == Catch::Approx(expected_rate).epsilon(1e-9));
    CHECK(std::abs(g32.total_rate_bps() - g16.total_rate_bps()) <
          0.005 * g16.total_rate_bps());
    CHECK(g16.total_users() == Catch::Approx(250.0).epsilon(1e-9));
  }
  SECTION("point mass lands in its containing cell") {
    const auto g0 = make_grid(region, 16);
    const Vec2 target = g0.cell_center(5 * 16 + 7);
    const auto f = blob_forecast(region, target, 1e-6, 1e12, 10);
    const auto g = build_demand_grid(f, region, 16);
    const int idx = 5 * 16 + 7;
    CHECK(g.rate_density[idx] * g.cell_area == Catch::Approx(g.total_rate_bps()).epsilon(1e-9));
  }
  SECTION("resolution below 8 is rejected") {
    const auto f = blob_forecast(region, {5000, 5000}, 1e6, 1e12, 10);
    CHECK_THROWS_AS(build_demand_grid(f, region, 4), std::invalid_argument);
  }
  SECTION("zero density everywhere is an error") {
    const auto f = blob_forecast(region, {1e9, 1e9}, 1.0, 1e12, 10);
    CHECK_THROWS_WITH(build_demand_grid(f, region, 16),
                      Catch::Matchers::ContainsSubstring("zero"));
  }
}

TEST_CASE("transmit_power_integral") {
  const Region region{0, 10000, 0, 10000};
  auto g = make_grid(region, 16);

  SECTION("zero-demand cells cost nothing") {
    const std::vector<int> cells = {0, 1, 2};
    CHECK(transmit_power_integral(kChannel, {0, 0, 100}, 1e7, 5, g, cells) == 0.0);
  }
  SECTION("single cell matches the hand-composed channel math") {
    const int idx = 8 * 16 + 8;
    g.rate_density[idx] = 2.0;  // bit/s per m^2
    const Vec2 c = g.cell_center(idx);
    const UavPose pose{c.x, c.y, 400};
    const double pl = mean_path_loss_linear(kChannel, pose, {c.x, c.y});
    const double expect = min_transmit_power(kChannel, 1e7, 5, 2.0, pl) * g.cell_area;
    CHECK(transmit_power_integral(kChannel, pose, 1e7, 5, g, {idx}) ==
          Catch::Approx(expect).epsilon(1e-12));
  }
  SECTION("moving away from the demand raises the power") {
    const int idx = 8 * 16 + 8;
    g.rate_density[idx] = 2.0;
    const Vec2 c = g.cell_center(idx);
    double prev = 0.0;
    for (double off : {0.0, 500.0, 1500.0, 4000.0}) {
      const double p = transmit_power_integral(kChannel, {c.x + off, c.y, 150}, 1e7, 5, g, {idx});
      CHECK(p > prev);
      prev = p;
    }
  }
}

TEST_CASE("partition_solve") {
  const Region region{0, 10000, 0, 10000};

  SECTION("single UAV serves the whole region") {
    auto g = make_grid(region, 16);
    add_blob(g, {5000, 5000}, 2000, 2e12, 100);
    const auto fleet = make_fleet({{5000, 5000, 100}});
    const auto part = partition_solve(fleet, g, kChannel);
    for (int a : part.assignment) CHECK(a == 0);
    CHECK(part.kappa == Catch::Approx(part.total_power_w / 1000.0));
    CHECK(part.shares[0] == Catch::Approx(part.kappa));
    CHECK(part.max_imbalance <= 1e-12);
  }
  SECTION("two identical UAVs split a uniform region in half") {
    auto g = make_grid(region, 16);
    for (int c = 0; c < g.size(); ++c) {
      g.rate_density[c] = 10.0;
      g.user_mass[c] = 100.0 / g.size();
    }
    const auto fleet = make_fleet({{2500, 5000, 100}, {7500, 5000, 100}});
    const auto part = partition_solve(fleet, g, kChannel);
    int left = 0;
    for (int c = 0; c < g.size(); ++c)
      if (part.assignment[c] == 0) ++left;
    CHECK(left == g.size() / 2);
    CHECK(part.shares[0] == Catch::Approx(part.shares[1]).epsilon(0.02));
    CHECK(part.kappa == Catch::Approx(part.total_power_w / 2000.0));
    CHECK(part.max_imbalance <= 0.01);
  }
  SECTION("fairness holds for unequal available power") {
    auto g = make_grid(region, 24);
    add_blob(g, {3000, 4000}, 1500, 2e12, 60);
    add_blob(g, {7000, 6500}, 1500, 1.5e12, 40);
    std::vector<UavState> fleet = make_fleet({{3000, 4000, 100}, {7000, 6500, 100}});
    fleet[0].available_energy_j = 3000.0;
    fleet[1].available_energy_j = 1000.0;
    const auto part = partition_solve(fleet, g, kChannel);
    CHECK(part.max_imbalance <= 0.01);
    const double total_pa = 4000.0;
    for (int i = 0; i < 2; ++i)
      CHECK(part.shares[i] / (part.total_power_w / total_pa) == Catch::Approx(1.0).margin(0.0101));
    // recompute the shares from the returned assignment
    std::vector<double> power(2, 0.0);
    for (int c = 0; c < g.size(); ++c) {
      if (g.rate_density[c] <= 0.0) continue;
      const int i = part.assignment[c];
      const Vec2 p = g.cell_center(c);
      power[i] += min_transmit_power(kChannel, fleet[i].bandwidth_hz, part.n_users[i],
                                     g.rate_density[c],
                                     mean_path_loss_linear(kChannel, fleet[i].pose, {p.x, p.y})) *
                  g.cell_area;
    }
    CHECK(power[0] == Catch::Approx(part.uav_power_w[0]).epsilon(1e-9));
    CHECK(power[1] == Catch::Approx(part.uav_power_w[1]).epsilon(1e-9));
  }
  SECTION("converged assignment is cell-move optimal under the multipliers") {
    auto g = make_grid(region, 16);
    add_blob(g, {3500, 3500}, 2000, 2.5e12, 80);
    const auto fleet = make_fleet({{3000, 3000, 100}, {6500, 6500, 100}});
    PartitionOptions popts;
    popts.tol = 0.05;  // cell granularity bounds the achievable balance here
    const auto part = partition_solve(fleet, g, kChannel, popts);

    // independent recompute of the multiplier-adjusted objective: per-UAV
    // user loads come from the assignment, power from the channel math
    auto objective_of = [&](const std::vector<int>& assignment) {
      double obj = 0.0;
      for (int i = 0; i < 2; ++i) {
        double umass = 0.0;
        for (int c = 0; c < g.size(); ++c)
          if (assignment[c] == i) umass += g.user_mass[c];
        const double n = std::max(1.0, umass);
        double power = 0.0;
        for (int c = 0; c < g.size(); ++c) {
          if (assignment[c] != i || g.rate_density[c] <= 0.0) continue;
          const Vec2 p = g.cell_center(c);
          power += min_transmit_power(kChannel, fleet[i].bandwidth_hz, n, g.rate_density[c],
                                      mean_path_loss_linear(kChannel, fleet[i].pose, {p.x, p.y})) *
                   g.cell_area;
        }
        obj += part.multipliers[i] * power;
      }
      return obj;
    };

    const double base = objective_of(part.assignment);
    for (int c = 0; c < g.size(); ++c) {
      if (g.rate_density[c] <= 0.0 && g.user_mass[c] <= 0.0) continue;
      std::vector<int> moved = part.assignment;
      moved[c] = 1 - moved[c];
      // no single-cell move reduces the objective beyond the solver's margin
      CHECK(objective_of(moved) >= base * (1.0 - 1e-6));
    }
  }
  SECTION("six-by-six instances match exhaustive enumeration") {
    Rng rng(2024);
    for (int instance = 0; instance < 2; ++instance) {
      const Region r6{0, 6000, 0, 6000};
      auto g = make_grid(r6, 6);
      for (int c = 0; c < g.size(); ++c) {
        g.rate_density[c] = rng.uniform(0.4, 2.2) * 1e7;
        g.user_mass[c] = 0.0;  // loads pin to the 1-user floor on both sides
      }
      const auto fleet = make_fleet({{1500, 3000, 100}, {4200, 2800, 100}});
      PartitionOptions opts;
      opts.tol = 0.10;
      const auto part = partition_solve(fleet, g, kChannel, opts);
      REQUIRE(part.n_users == std::vector<double>{1.0, 1.0});

      oracle::BruteForcePartition bf;
      bf.pa1 = fleet[0].available_energy_j;
      bf.pa2 = fleet[1].available_energy_j;
      bf.tol = opts.tol;
      for (int c = 0; c < g.size(); ++c) {
        const Vec2 p = g.cell_center(c);
        bf.cost1.push_back(min_transmit_power(kChannel, 1e7, 1, g.rate_density[c],
                                              mean_path_loss_linear(kChannel, fleet[0].pose,
                                                                    {p.x, p.y})) *
                           g.cell_area);
        bf.cost2.push_back(min_transmit_power(kChannel, 1e7, 1, g.rate_density[c],
                                              mean_path_loss_linear(kChannel, fleet[1].pose,
                                                                    {p.x, p.y})) *
                           g.cell_area);
      }
      const double oracle_best = bf.run();
      INFO("instance " << instance << " explored " << bf.nodes << " nodes");
      REQUIRE(oracle_best < std::numeric_limits<double>::infinity());
      CHECK(part.total_power_w >= oracle_best * (1.0 - 1e-9));
      CHECK(part.total_power_w <= oracle_best * 1.02);
    }
  }
  SECTION("errors") {
    auto g = make_grid(region, 16);
    CHECK_THROWS_AS(partition_solve(make_fleet({{0, 0, 100}}), g, kChannel),
                    std::invalid_argument);  // no demand
    add_blob(g, {5000, 5000}, 2000, 1e12, 10);
    CHECK_THROWS_AS(partition_solve({}, g, kChannel), std::invalid_argument);
  }
}

TEST_CASE("closed_form_location") {
  const Region region{0, 100, 0, 100};

  SECTION("uniform demand gives the region center") {
    auto g = make_grid(region, 20);
    std::vector<int> cells(g.size());
    std::iota(cells.begin(), cells.end(), 0);
    for (int c : cells) g.rate_density[c] = 5.0;
    const Vec2 loc = closed_form_location(g, cells, 1e7, 10);
    CHECK(loc.x == Catch::Approx(50.0));
    CHECK(loc.y == Catch::Approx(50.0));
  }
  SECTION("all demand in one cell gives that cell center") {
    auto g = make_grid(region, 20);
    g.rate_density[7 * 20 + 3] = 9.0;
    std::vector<int> cells(g.size());
    std::iota(cells.begin(), cells.end(), 0);
    const Vec2 loc = closed_form_location(g, cells, 1e7, 10);
    const Vec2 expect = g.cell_center(7 * 20 + 3);
    CHECK(loc.x == Catch::Approx(expect.x));
    CHECK(loc.y == Catch::Approx(expect.y));
  }
  SECTION("linear demand over a strip matches the moment ratio") {
    // in the small-demand regime Z ~ beta, so the optimum approaches the
    // analytic first-moment ratio 2L/3 of a linear density
    auto g = make_grid(region, 50);
    std::vector<int> cells;
    for (int iy = 0; iy < 50; ++iy)
      for (int ix = 0; ix < 50; ++ix) {
        const int c = iy * 50 + ix;
        g.rate_density[c] = 1e-4 * g.cell_center(c).x;
        cells.push_back(c);
      }
    const Vec2 loc = closed_form_location(g, cells, 1e7, 1);
    // discrete moment oracle with the exact exponent form
    double num = 0.0, den = 0.0;
    for (int c : cells) {
      const double z = std::exp2(g.rate_density[c] * 1 / 1e7) - 1.0;
      num += g.cell_center(c).x * z;
      den += z;
    }
    CHECK(loc.x == Catch::Approx(num / den).epsilon(1e-12));
    CHECK(loc.x == Catch::Approx(200.0 / 3.0).margin(0.5));
    CHECK(loc.y == Catch::Approx(50.0));
  }
  SECTION("zero demand falls back to the area centroid") {
    auto g = make_grid(region, 20);
    const std::vector<int> cells = {0, 1, 20, 21};  // 2x2 corner block
    const Vec2 loc = closed_form_location(g, cells, 1e7, 10);
    CHECK(loc.x == Catch::Approx(5.0));
    CHECK(loc.y == Catch::Approx(5.0));
  }
}

TEST_CASE("joint_location_optimize") {
  const Region region{0, 10000, 0, 10000};
  auto g = make_grid(region, 24);
  add_blob(g, {6500, 3500}, 900, 2.5e12, 50);
  std::vector<int> cells(g.size());
  std::iota(cells.begin(), cells.end(), 0);

  PlacementOptions high_alt;
  high_alt.mode = PlacementMode::high_alt;
  high_alt.h_min = high_alt.h_max = 1200.0;

  SECTION("gamma = 0 in high-altitude mode matches the closed form") {
    UavState uav{0, {1000, 9000, 1200}, 1000.0, 1e7, 1e-30};
    uav.mobility_rate_j_per_m = 1e-30;  // effectively zero, keeps validate() happy
    const auto res = joint_location_optimize(uav, 50, cells, g, kChannel, high_alt);
    const Vec2 cf = closed_form_location(g, cells, 1e7, 50);
    CHECK(std::hypot(res.pose.x_m - cf.x, res.pose.y_m - cf.y) < 1e-3 * region.diagonal());
  }
  SECTION("huge mobility cost keeps the UAV in place") {
    UavState uav{0, {1000, 9000, 1200}, 1000.0, 1e7, 1e9};
    const auto res = joint_location_optimize(uav, 50, cells, g, kChannel, high_alt);
    CHECK(res.pose.x_m == 1000.0);
    CHECK(res.pose.y_m == 9000.0);
    CHECK(res.mobility_j == 0.0);
  }
  SECTION("moderate mobility cost lands between the endpoints") {
    UavState uav{0, {1000, 9000, 1200}, 1000.0, 1e7, 0.0};
    uav.mobility_rate_j_per_m = 1e-30;
    const auto free_res = joint_location_optimize(uav, 50, cells, g, kChannel, high_alt);
    const Vec2 free_opt{free_res.pose.x_m, free_res.pose.y_m};
    const Vec2 start{1000, 9000};

    uav.mobility_rate_j_per_m = 0.02;
    const auto res = joint_location_optimize(uav, 50, cells, g, kChannel, high_alt);
    const Vec2 found{res.pose.x_m, res.pose.y_m};

    // 1-D oracle along the segment start -> free optimum
    const Vec2 dir = free_opt - start;
    double best_obj = std::numeric_limits<double>::infinity();
    Vec2 best_point = start;
    for (int i = 0; i <= 400; ++i) {
      const double t = i / 400.0;
      const Vec2 p = start + dir * t;
      const double obj = detail::placement_power(kChannel, {p.x, p.y, 1200}, 1e7, 50, g, cells,
                                                 PlacementMode::high_alt) +
                         0.02 * (dir * t).norm();
      if (obj < best_obj) {
        best_obj = obj;
        best_point = p;
      }
    }
    // optimizer should do at least as well as the segment oracle
    CHECK(res.objective <= best_obj * (1.0 + 1e-6));
    // and stay near the segment: projection residual below 5% of its length
    const double seg_len = dir.norm();
    const double t_proj = (found - start).dot(dir) / (seg_len * seg_len);
    const Vec2 residual = found - (start + dir * std::clamp(t_proj, 0.0, 1.0));
    CHECK(residual.norm() < 0.05 * seg_len);
    // strictly between the endpoints
    CHECK((found - start).norm() > 1.0);
    CHECK((found - free_opt).norm() > 1.0);
  }
  SECTION("exact mode with a free altitude stays within bounds") {
    PlacementOptions exact;
    exact.mode = PlacementMode::exact;
    exact.h_min = 100.0;
    exact.h_max = 2000.0;
    UavState uav{0, {5000, 5000, 500}, 1000.0, 1e7, 0.05};
    const auto res = joint_location_optimize(uav, 50, cells, g, kChannel, exact);
    CHECK(res.pose.h_m >= 100.0);
    CHECK(res.pose.h_m <= 2000.0);
    CHECK(std::isfinite(res.objective));
  }
}

TEST_CASE("plan_deployment") {
  const Region region{0, 10000, 0, 10000};

  SECTION("zero demand: stay put, spend nothing") {
    const auto g = make_grid(region, 16);
    const auto fleet = make_fleet({{2000, 2000, 100}, {8000, 8000, 100}});
    const auto plan = plan_deployment(fleet, g, kChannel);
    CHECK(plan.transmit_power_w == 0.0);
    CHECK(plan.mobility_energy_j == 0.0);
    CHECK_FALSE(plan.moved);
    CHECK(plan.placements[0].x_m == 2000.0);
    CHECK(plan.placements[1].x_m == 8000.0);
    // cover: every cell assigned to exactly one UAV
    for (int a : plan.partition.assignment) {
      CHECK(a >= 0);
      CHECK(a < 2);
    }
  }
  SECTION("four UAVs settle over four symmetric blobs") {
    auto g = make_grid(region, 24);
    const std::vector<Vec2> blobs = {{2500, 2500}, {7500, 2500}, {2500, 7500}, {7500, 7500}};
    for (const auto& b : blobs) add_blob(g, b, 700, 2e12, 50);
    // slight offsets so no UAV starts exactly on a blob
    const auto fleet = make_fleet(
        {{2000, 2100, 100}, {8200, 2000, 100}, {2100, 8100, 100}, {7800, 7900, 100}});
    DeployOptions opts;
    opts.partition.tol = 0.05;
    const auto plan = plan_deployment(fleet, g, kChannel, opts);
    // each UAV ends in the quadrant of its blob
    for (int i = 0; i < 4; ++i) {
      const Vec2 p{plan.placements[i].x_m, plan.placements[i].y_m};
      double nearest = std::numeric_limits<double>::infinity();
      int arg = -1;
      for (int b = 0; b < 4; ++b) {
        const double d = (p - blobs[b]).norm();
        if (d < nearest) {
          nearest = d;
          arg = b;
        }
      }
      CHECK(arg == i);
      CHECK(nearest < 1500.0);
    }
    // most of each quadrant's demand is served by its own UAV (the fairness
    // constraint legitimately spills faint boundary cells)
    std::vector<double> own(4, 0.0), quadrant_mass(4, 0.0);
    for (int c = 0; c < g.size(); ++c) {
      if (g.rate_density[c] <= 0.0) continue;
      const Vec2 p = g.cell_center(c);
      const int quadrant = (p.x > 5000 ? 1 : 0) + (p.y > 5000 ? 2 : 0);
      const double mass = g.rate_density[c] * g.cell_area;
      quadrant_mass[quadrant] += mass;
      if (plan.partition.assignment[c] == quadrant) own[quadrant] += mass;
    }
    for (int q = 0; q < 4; ++q) CHECK(own[q] / quadrant_mass[q] > 0.9);
    CHECK(plan.objective == Catch::Approx(plan.transmit_power_w + plan.mobility_energy_j));
    CHECK(plan.moved);
  }
  SECTION("alternation rounds never worsen the objective") {
    auto g = make_grid(region, 20);
    add_blob(g, {3000, 6000}, 1200, 3e12, 60);
    add_blob(g, {7000, 3000}, 900, 2e12, 40);
    const auto fleet = make_fleet({{5000, 5000, 100}, {5500, 5200, 100}});
    DeployOptions opts;
    opts.partition.tol = 0.05;
    opts.alternation_rounds = 4;
    const auto plan = plan_deployment(fleet, g, kChannel, opts);
    REQUIRE_FALSE(plan.round_objectives.empty());
    for (std::size_t r = 1; r < plan.round_objectives.size(); ++r)
      CHECK(plan.round_objectives[r] <= plan.round_objectives[r - 1] * (1.0 + 1e-12));
    CHECK(plan.objective == Catch::Approx(plan.round_objectives.back()));
  }
}
