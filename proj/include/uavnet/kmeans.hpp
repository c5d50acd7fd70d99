#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "uavnet/geometry.hpp"
#include "uavnet/rng.hpp"

namespace uavnet {

// Data point with a demand weight. 1-D data keeps y at 0.
struct WeightedSample {
  Vec2 point;
  double weight = 1.0;
};

struct KmeansOptions {
  int max_iter = 100;
  double move_tol = 1e-9;  // absolute mean movement that counts as converged
  int restarts = 5;
};

struct KmeansResult {
  std::vector<Vec2> means;
  std::vector<int> assignment;   // per sample
  double weighted_cost = 0.0;    // sum of weight * distance to assigned mean
  int iterations = 0;
};

namespace detail {

inline std::vector<Vec2> distinct_points(const std::vector<WeightedSample>& samples) {
  std::vector<Vec2> pts;
  pts.reserve(samples.size());
  for (const auto& s : samples) pts.push_back(s.point);
  std::sort(pts.begin(), pts.end(), [](const Vec2& a, const Vec2& b) {
    return a.x != b.x ? a.x < b.x : a.y < b.y;
  });
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  return pts;
}

}  // namespace detail

// Weighted K-means: assignment by weighted distance, means by weighted
// average, repeated restarts keep the lowest weighted cost.
inline KmeansResult weighted_kmeans(const std::vector<WeightedSample>& samples, int k,
                                    std::uint64_t seed, const KmeansOptions& opts = {}) {
  if (k < 1) throw std::invalid_argument("weighted_kmeans: k must be >= 1");
  const auto distinct = detail::distinct_points(samples);
  if (static_cast<std::size_t>(k) > distinct.size())
    throw std::invalid_argument("weighted_kmeans: k exceeds the number of distinct points");
  int positive = 0;
  for (const auto& s : samples)
    if (s.weight > 0.0) ++positive;
  if (positive < k) throw std::invalid_argument("weighted_kmeans: fewer than k positive-weight samples");

  KmeansResult best;
  best.weighted_cost = std::numeric_limits<double>::infinity();

  for (int restart = 0; restart < opts.restarts; ++restart) {
    Rng rng = Rng(seed).derive(0x6b6d0000u + static_cast<std::uint64_t>(k) * 131 + restart);

    // initial means: k distinct sample points chosen without replacement
    std::vector<std::size_t> idx(distinct.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    for (int j = 0; j < k; ++j) {
      const std::size_t pick = j + rng.uniform_index(idx.size() - j);
      std::swap(idx[j], idx[pick]);
    }
    std::vector<Vec2> means(k);
    for (int j = 0; j < k; ++j) means[j] = distinct[idx[j]];

    std::vector<int> assignment(samples.size(), 0);
    int iter = 0;
    for (; iter < opts.max_iter; ++iter) {
      // assignment step: argmin_k weight * |x - mu_k| (ties to lowest k)
      for (std::size_t n = 0; n < samples.size(); ++n) {
        int arg = 0;
        double bestd = std::numeric_limits<double>::infinity();
        for (int j = 0; j < k; ++j) {
          const double d = samples[n].weight * (samples[n].point - means[j]).norm();
          if (d < bestd) {
            bestd = d;
            arg = j;
          }
        }
        assignment[n] = arg;
      }
      // update step: weighted averages; empty clusters keep their mean
      std::vector<Vec2> sums(k);
      std::vector<double> wsum(k, 0.0);
      for (std::size_t n = 0; n < samples.size(); ++n) {
        sums[assignment[n]] += samples[n].point * samples[n].weight;
        wsum[assignment[n]] += samples[n].weight;
      }
      double move = 0.0;
      for (int j = 0; j < k; ++j) {
        if (wsum[j] > 0.0) {
          const Vec2 next{sums[j].x / wsum[j], sums[j].y / wsum[j]};
          move = std::max(move, (next - means[j]).norm());
          means[j] = next;
        }
      }
      if (move < opts.move_tol) {
        ++iter;
        break;
      }
    }

    double cost = 0.0;
    for (std::size_t n = 0; n < samples.size(); ++n)
      cost += samples[n].weight * (samples[n].point - means[assignment[n]]).norm();

    if (cost < best.weighted_cost) {
      best.means = means;
      best.assignment = assignment;
      best.weighted_cost = cost;
      best.iterations = iter;
    }
  }
  return best;
}

struct SelectKResult {
  int k = 1;
  std::vector<std::pair<int, double>> ratio_trace;  // (K, intra/inter)
  KmeansResult clustering;                          // result at the chosen K
};

// Scans K and keeps the lowest intra/inter distance ratio. Intra is the
// weighted mean distance to the assigned centroid; inter is the smallest
// centroid separation (for K=1, half the bounding-box diagonal of the
// samples, the only separation scale available). Ties go to the smallest K.
inline SelectKResult select_k(const std::vector<WeightedSample>& samples, int k_min, int k_max,
                              std::uint64_t seed, const KmeansOptions& opts = {}) {
  if (k_min < 1 || k_min > k_max) throw std::invalid_argument("select_k: bad K range");
  const auto distinct = detail::distinct_points(samples);

  double xmin = 0, xmax = 0, ymin = 0, ymax = 0;
  bool first = true;
  for (const auto& s : samples) {
    if (first) {
      xmin = xmax = s.point.x;
      ymin = ymax = s.point.y;
      first = false;
    } else {
      xmin = std::min(xmin, s.point.x);
      xmax = std::max(xmax, s.point.x);
      ymin = std::min(ymin, s.point.y);
      ymax = std::max(ymax, s.point.y);
    }
  }
  const double bbox_diag = std::hypot(xmax - xmin, ymax - ymin);

  SelectKResult out;
  double best_ratio = std::numeric_limits<double>::infinity();
  bool found = false;

  for (int k = k_min; k <= k_max; ++k) {
    if (static_cast<std::size_t>(k) > distinct.size()) break;  // infeasible from here on
    KmeansResult res = weighted_kmeans(samples, k, seed, opts);

    double wsum = 0.0;
    for (const auto& s : samples) wsum += s.weight;
    const double intra = wsum > 0.0 ? res.weighted_cost / wsum : 0.0;

    double inter;
    if (k == 1) {
      inter = 0.5 * bbox_diag;  // the only separation scale a single cluster has
    } else {
      inter = std::numeric_limits<double>::infinity();
      for (int i = 0; i < k; ++i)
        for (int j = i + 1; j < k; ++j)
          inter = std::min(inter, (res.means[i] - res.means[j]).norm());
    }

    double ratio;
    if (intra == 0.0) {
      ratio = 0.0;  // perfectly tight clusters, regardless of separation
    } else if (inter == 0.0) {
      ratio = std::numeric_limits<double>::infinity();
    } else {
      ratio = intra / inter;
    }
    out.ratio_trace.emplace_back(k, ratio);

    if (!found || ratio < best_ratio) {
      found = true;
      best_ratio = ratio;
      out.k = k;
      out.clustering = std::move(res);
    }
  }
  if (!found) throw std::invalid_argument("select_k: no feasible K in range");
  return out;
}

}  // namespace uavnet
