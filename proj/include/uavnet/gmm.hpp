#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "uavnet/geometry.hpp"

namespace uavnet {

// One Gaussian of a mixture. For dim-1 models only mean.x / cov.xx are used.
struct GmmComponent {
  double weight = 1.0;
  Vec2 mean;
  Sym2 cov = Sym2::identity();
};

struct GmmModel {
  int dim = 2;  // 1 or 2
  std::vector<GmmComponent> components;
  double covariance_floor = 0.0;  // eigenvalue floor the fit enforced

  std::size_t size() const { return components.size(); }

  void validate() const {
    if (dim != 1 && dim != 2) throw std::invalid_argument("gmm: dim must be 1 or 2");
    if (components.empty()) throw std::invalid_argument("gmm: no components");
    double sum = 0.0;
    for (const auto& c : components) {
      if (c.weight < 0.0 || c.weight > 1.0 + 1e-12)
        throw std::invalid_argument("gmm: component weight outside [0,1]");
      if (dim == 1) {
        if (!(c.cov.xx > 0.0)) throw std::invalid_argument("gmm: nonpositive variance");
      } else {
        if (!(c.cov.det() > 0.0)) throw std::invalid_argument("gmm: covariance not positive definite");
      }
      sum += c.weight;
    }
    if (std::abs(sum - 1.0) > 1e-9)
      throw std::invalid_argument("gmm: weights sum to " + std::to_string(sum));
  }
};

namespace detail {

inline double log_gaussian_1d(double x, double mean, double var) {
  const double d = x - mean;
  return -0.5 * (std::log(2.0 * std::numbers::pi * var) + d * d / var);
}

inline double log_gaussian_2d(const Vec2& x, const Vec2& mean, const Sym2& cov) {
  const double det = cov.det();
  const Vec2 d = x - mean;
  const double maha = (d.x * (cov.yy * d.x - cov.xy * d.y) + d.y * (cov.xx * d.y - cov.xy * d.x)) / det;
  return -std::log(2.0 * std::numbers::pi) - 0.5 * std::log(det) - 0.5 * maha;
}

inline double log_component_density(const GmmModel& m, const GmmComponent& c, const Vec2& x) {
  return m.dim == 1 ? log_gaussian_1d(x.x, c.mean.x, c.cov.xx) : log_gaussian_2d(x, c.mean, c.cov);
}

}  // namespace detail

inline double gmm_pdf(const GmmModel& m, const Vec2& x) {
  double p = 0.0;
  for (const auto& c : m.components)
    p += c.weight * std::exp(detail::log_component_density(m, c, x));
  return p;
}

inline double gmm_pdf(const GmmModel& m, double x) {
  if (m.dim != 1) throw std::invalid_argument("gmm_pdf: scalar overload needs a 1-D model");
  return gmm_pdf(m, Vec2{x, 0.0});
}

// Mixture CDF of a 1-D model.
inline double gmm_cdf(const GmmModel& m, double x) {
  if (m.dim != 1) throw std::invalid_argument("gmm_cdf: model must be 1-D");
  double c = 0.0;
  for (const auto& comp : m.components) {
    const double sigma = std::sqrt(comp.cov.xx);
    c += comp.weight * 0.5 * (1.0 + std::erf((x - comp.mean.x) / (sigma * std::numbers::sqrt2)));
  }
  return c;
}

// Inverts the mixture CDF by bisection.
inline double cdf_invert(const GmmModel& m, double threshold) {
  if (m.dim != 1) throw std::invalid_argument("cdf_invert: model must be 1-D");
  if (!(threshold > 0.0 && threshold < 1.0))
    throw std::invalid_argument("cdf_invert: threshold must be in (0,1)");
  m.validate();

  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (const auto& c : m.components) {
    const double sigma = std::sqrt(c.cov.xx);
    lo = std::min(lo, c.mean.x - 12.0 * sigma - 1.0);
    hi = std::max(hi, c.mean.x + 12.0 * sigma + 1.0);
  }
  while (gmm_cdf(m, lo) > threshold) lo -= std::max(1.0, hi - lo);
  while (gmm_cdf(m, hi) < threshold) hi += std::max(1.0, hi - lo);

  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double c = gmm_cdf(m, mid);
    if (std::abs(c - threshold) <= 1e-12) return mid;
    (c < threshold ? lo : hi) = mid;
    if (hi - lo <= 1e-13 * std::max(1.0, std::abs(mid))) break;
  }
  return 0.5 * (lo + hi);
}

}  // namespace uavnet
