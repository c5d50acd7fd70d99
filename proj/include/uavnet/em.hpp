#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "uavnet/gmm.hpp"
#include "uavnet/kmeans.hpp"

namespace uavnet {

struct FitOptions {
  int max_iter = 200;
  double tol = 1e-7;               // relative log-likelihood improvement
  double covariance_floor = 1e-12; // absolute eigenvalue floor
};

struct FitReport {
  int iterations = 0;
  std::vector<double> log_likelihood_trace;
  bool converged = false;
  int chosen_k = 0;
  std::vector<std::pair<int, double>> kmeans_ratio_trace;
};

namespace detail {

inline void floor_covariance(GmmComponent& c, int dim, double floor) {
  if (dim == 1) {
    c.cov.xx = std::max(c.cov.xx, floor);
    c.cov.xy = 0.0;
    c.cov.yy = 1.0;
  } else {
    c.cov = c.cov.with_eigen_floor(floor);
  }
}

}  // namespace detail

// Posterior responsibilities r[n][k] of each component for each sample,
// computed in log space.
inline std::vector<std::vector<double>> em_responsibilities(const GmmModel& model,
                                                            const std::vector<WeightedSample>& samples) {
  const std::size_t k = model.components.size();
  std::vector<std::vector<double>> r(samples.size(), std::vector<double>(k, 0.0));
  std::vector<double> logterm(k);
  for (std::size_t n = 0; n < samples.size(); ++n) {
    double maxlog = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < k; ++j) {
      const double lw = model.components[j].weight > 0.0
                            ? std::log(model.components[j].weight)
                            : -std::numeric_limits<double>::infinity();
      logterm[j] = lw + detail::log_component_density(model, model.components[j], samples[n].point);
      maxlog = std::max(maxlog, logterm[j]);
    }
    double denom = 0.0;
    for (std::size_t j = 0; j < k; ++j) denom += std::exp(logterm[j] - maxlog);
    for (std::size_t j = 0; j < k; ++j) r[n][j] = std::exp(logterm[j] - maxlog) / denom;
  }
  return r;
}

// Demand-weighted log likelihood: sum_n w_n log sum_k pi_k N(x_n).
inline double weighted_log_likelihood(const GmmModel& model,
                                      const std::vector<WeightedSample>& samples) {
  double ll = 0.0;
  std::vector<double> logterm(model.components.size());
  for (const auto& s : samples) {
    if (s.weight == 0.0) continue;
    double maxlog = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < model.components.size(); ++j) {
      const double lw = model.components[j].weight > 0.0
                            ? std::log(model.components[j].weight)
                            : -std::numeric_limits<double>::infinity();
      logterm[j] = lw + detail::log_component_density(model, model.components[j], s.point);
      maxlog = std::max(maxlog, logterm[j]);
    }
    double acc = 0.0;
    for (double lt : logterm) acc += std::exp(lt - maxlog);
    ll += s.weight * (maxlog + std::log(acc));
  }
  return ll;
}

// Weighted EM iteration. Means come from a weighted K-means run; covariances
// start at identity and mixing weights at 1/K. Sufficient statistics are
// scaled by the per-sample demand weights.
inline std::pair<GmmModel, FitReport> weighted_em_fit(const std::vector<WeightedSample>& samples,
                                                      const std::vector<Vec2>& init_means, int dim,
                                                      const FitOptions& opts = {}) {
  if (init_means.empty()) throw std::invalid_argument("weighted_em_fit: no initial means");
  double wtotal = 0.0;
  for (const auto& s : samples) {
    if (s.weight < 0.0) throw std::invalid_argument("weighted_em_fit: negative weight");
    wtotal += s.weight;
  }
  if (!(wtotal > 0.0)) throw std::runtime_error("weighted_em_fit: all sample weights are zero");

  const std::size_t k = init_means.size();
  GmmModel model;
  model.dim = dim;
  model.covariance_floor = opts.covariance_floor;
  model.components.resize(k);
  for (std::size_t j = 0; j < k; ++j) {
    model.components[j].weight = 1.0 / static_cast<double>(k);
    model.components[j].mean = init_means[j];
    model.components[j].cov = Sym2::identity();
    detail::floor_covariance(model.components[j], dim, opts.covariance_floor);
  }

  FitReport report;
  report.chosen_k = static_cast<int>(k);
  double prev_ll = -std::numeric_limits<double>::infinity();

  for (int iter = 0; iter < opts.max_iter; ++iter) {
    const auto resp = em_responsibilities(model, samples);
    const double ll = weighted_log_likelihood(model, samples);
    if (std::isnan(ll))
      throw std::runtime_error("weighted_em_fit: log likelihood is NaN at iteration " +
                               std::to_string(iter));
    report.log_likelihood_trace.push_back(ll);
    report.iterations = iter + 1;

    if (iter > 0 && ll - prev_ll < opts.tol * (1.0 + std::abs(ll))) {
      report.converged = true;
      break;
    }
    prev_ll = ll;

    // M step with demand-scaled statistics
    std::vector<double> nk(k, 0.0);
    std::vector<Vec2> mean_acc(k);
    for (std::size_t n = 0; n < samples.size(); ++n) {
      const double w = samples[n].weight;
      if (w == 0.0) continue;
      for (std::size_t j = 0; j < k; ++j) {
        const double wr = w * resp[n][j];
        nk[j] += wr;
        mean_acc[j] += samples[n].point * wr;
      }
    }
    double nk_total = 0.0;
    for (double v : nk) nk_total += v;

    std::vector<Vec2> new_means(k);
    for (std::size_t j = 0; j < k; ++j)
      new_means[j] = nk[j] > 0.0 ? Vec2{mean_acc[j].x / nk[j], mean_acc[j].y / nk[j]}
                                 : model.components[j].mean;

    std::vector<Sym2> cov_acc(k, Sym2{0.0, 0.0, 0.0});
    for (std::size_t n = 0; n < samples.size(); ++n) {
      const double w = samples[n].weight;
      if (w == 0.0) continue;
      for (std::size_t j = 0; j < k; ++j) {
        const Vec2 d = samples[n].point - new_means[j];
        cov_acc[j] += Sym2::outer(d) * (w * resp[n][j]);
      }
    }
    for (std::size_t j = 0; j < k; ++j) {
      auto& c = model.components[j];
      c.mean = new_means[j];
      if (nk[j] > 0.0) c.cov = cov_acc[j] * (1.0 / nk[j]);
      detail::floor_covariance(c, dim, opts.covariance_floor);
      c.weight = nk[j] / nk_total;
    }
    // exact renormalization of the mixing weights
    double wsum = 0.0;
    for (const auto& c : model.components) wsum += c.weight;
    for (auto& c : model.components) c.weight /= wsum;
  }
  return {model, report};
}

// K-means initialization plus weighted EM, with K chosen by the
// intra/inter-distance ratio scan.
inline std::pair<GmmModel, FitReport> fit_gmm_auto(const std::vector<WeightedSample>& samples,
                                                   int dim, int k_min, int k_max,
                                                   std::uint64_t seed, const FitOptions& opts = {},
                                                   const KmeansOptions& kopts = {}) {
  const SelectKResult sel = select_k(samples, k_min, k_max, seed, kopts);
  auto [model, report] = weighted_em_fit(samples, sel.clustering.means, dim, opts);
  report.chosen_k = sel.k;
  report.kmeans_ratio_trace = sel.ratio_trace;
  return {std::move(model), std::move(report)};
}

}  // namespace uavnet
