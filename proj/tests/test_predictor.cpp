#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>

#include "oracles.hpp"
#include "uavnet/predictor.hpp"

using namespace uavnet;

namespace {

// two spatial components, constant-ish totals, 24 identical hours
SyntheticSpec recovery_spec(int days) {
  SyntheticSpec spec;
  spec.days = days;
  spec.samples_per_hour = 96;
  spec.region = {0, 100, 0, 100};
  for (int h = 0; h < 24; ++h) {
    HourSpec hs;
    hs.components = {
        {0.3, {25, 30}, Sym2::isotropic(4.0)},
        {0.7, {75, 60}, Sym2::isotropic(4.0)},
    };
    hs.total_bytes_mean = 800.0;
    hs.total_bytes_std = 40.0;
    hs.total_users_mean = 200.0;
    hs.total_users_std = 10.0;
    spec.hours[h] = hs;
  }
  return spec;
}

}  // namespace

TEST_CASE("fit_hour") {
  PredictorOptions opts;

  SECTION("single BS gives a one-component model at the BS") {
    AerialDataset data;
    data.days = 3;
    data.region = {0, 100, 0, 100};
    for (int d = 0; d < 3; ++d)
      data.records.push_back({d * 24 + 9, 40, 70, 10, 100.0 + d});
    const auto slices = hourly_slices(data);
    const auto models = fit_hour(slices[9], opts, 7);
    REQUIRE_FALSE(models.no_demand);
    REQUIRE(models.spatial.components.size() == 1);
    CHECK(models.spatial.components[0].mean.x == Catch::Approx(40.0));
    CHECK(models.spatial.components[0].mean.y == Catch::Approx(70.0));
  }
  SECTION("constant day totals invert to the constant") {
    AerialDataset data;
    data.days = 4;
    data.region = {0, 100, 0, 100};
    for (int d = 0; d < 4; ++d)
      data.records.push_back({d * 24 + 9, 40, 70, 10, 500.0});
    const auto slices = hourly_slices(data);
    const auto models = fit_hour(slices[9], opts, 7);
    CHECK(cdf_invert(models.temporal, 0.6) == Catch::Approx(500.0).margin(0.1));
  }
  SECTION("no-demand slices are flagged") {
    AerialDataset data;
    data.days = 2;
    data.region = {0, 100, 0, 100};
    data.records = {{9, 40, 70, 10, 100.0}, {33, 40, 70, 10, 100.0}};
    const auto slices = hourly_slices(data);
    CHECK(fit_hour(slices[3], opts, 7).no_demand);
  }
  SECTION("recovers the generating mixture from synthetic data") {
    const auto res = synthesize(recovery_spec(12), 1001);
    const auto slices = hourly_slices(res.data);
    const auto models = fit_hour(slices[10], opts, 55);
    REQUIRE(models.spatial.components.size() == 2);
    int a = models.spatial.components[0].mean.x < models.spatial.components[1].mean.x ? 0 : 1;
    const auto& c0 = models.spatial.components[a];
    const auto& c1 = models.spatial.components[1 - a];
    CHECK((c0.mean - Vec2{25, 30}).norm() < 1.0);
    CHECK((c1.mean - Vec2{75, 60}).norm() < 1.0);
    CHECK(c0.weight == Catch::Approx(0.3).margin(0.08));
    CHECK(c1.weight == Catch::Approx(0.7).margin(0.08));
  }
}

TEST_CASE("predict") {
  PredictorOptions opts;
  const auto res = synthesize(recovery_spec(12), 2002);
  const auto slices = hourly_slices(res.data);
  const auto models = fit_hour(slices[14], opts, 3);
  const Region region{0, 100, 0, 100};

  SECTION("density integrates to one over the region") {
    const auto f = predict(models, 0.6, region);
    const double mass = oracle::simpson_2d(
        [&](double x, double y) { return f.density_at({x, y}); }, region.xmin, region.xmax,
        region.ymin, region.ymax, 256);
    CHECK(mass == Catch::Approx(1.0).margin(1e-4));
    CHECK(f.density_at({-5, 50}) == 0.0);  // outside the region
  }
  SECTION("median threshold on a symmetric model gives the median") {
    GmmModel sym;
    sym.dim = 1;
    sym.components = {{0.5, {400, 0}, Sym2::isotropic(100.0)},
                      {0.5, {600, 0}, Sym2::isotropic(100.0)}};
    HourModels hm = models;
    hm.temporal = sym;
    const auto f = predict(hm, 0.5, region);
    CHECK(f.total_bytes == Catch::Approx(500.0).margin(1e-6));
  }
  SECTION("raising the threshold raises the predicted total") {
    const auto lo = predict(models, 0.5, region);
    const auto hi = predict(models, 0.9, region);
    CHECK(hi.total_bytes > lo.total_bytes);
  }
  SECTION("predicted totals sit near the generating totals") {
    const auto f = predict(models, 0.5, region);
    CHECK(f.total_bytes == Catch::Approx(800.0).margin(80.0));
    CHECK(f.total_users == Catch::Approx(200.0).margin(25.0));
  }
}

TEST_CASE("model serialization round trip") {
  PredictorOptions opts;
  opts.k_max = 4;
  const auto res = synthesize(recovery_spec(6), 31);
  const auto [train, test] = train_test_split(res.data, 0.5);
  const auto set = fit_models(train, opts, 17);
  REQUIRE(set.hours.size() == 24);

  const auto path = (std::filesystem::temp_directory_path() / "uavnet_models.json").string();
  save_models(set, path);
  const auto back = load_models(path);

  CHECK(back.seed == set.seed);
  CHECK(back.region.xmax == set.region.xmax);
  REQUIRE(back.hours.size() == set.hours.size());
  for (int h = 0; h < 24; ++h) {
    const auto& a = set.hours[h];
    const auto& b = back.hours[h];
    CHECK(a.no_demand == b.no_demand);
    if (a.no_demand) continue;
    REQUIRE(a.spatial.components.size() == b.spatial.components.size());
    for (std::size_t i = 0; i < a.spatial.components.size(); ++i) {
      CHECK(a.spatial.components[i].weight == b.spatial.components[i].weight);
      CHECK(a.spatial.components[i].mean.x == b.spatial.components[i].mean.x);
      CHECK(a.spatial.components[i].cov.xy == b.spatial.components[i].cov.xy);
    }
    CHECK(a.temporal_report.log_likelihood_trace == b.temporal_report.log_likelihood_trace);
    CHECK(a.spatial_report.chosen_k == b.spatial_report.chosen_k);
  }
  std::remove(path.c_str());
}
