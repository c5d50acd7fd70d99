#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

namespace uavnet {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  Vec2& operator+=(const Vec2& o) {
    x += o.x;
    y += o.y;
    return *this;
  }
  double dot(const Vec2& o) const { return x * o.x + y * o.y; }
  double norm() const { return std::hypot(x, y); }
  double norm2() const { return x * x + y * y; }
  bool operator==(const Vec2& o) const { return x == o.x && y == o.y; }
};

// Symmetric 2x2 matrix; spatial covariances. 1-D models use xx only.
struct Sym2 {
  double xx = 1.0;
  double xy = 0.0;
  double yy = 1.0;

  static Sym2 identity() { return {1.0, 0.0, 1.0}; }
  static Sym2 isotropic(double v) { return {v, 0.0, v}; }
  static Sym2 outer(const Vec2& v) { return {v.x * v.x, v.x * v.y, v.y * v.y}; }

  Sym2 operator+(const Sym2& o) const { return {xx + o.xx, xy + o.xy, yy + o.yy}; }
  Sym2 operator*(double s) const { return {xx * s, xy * s, yy * s}; }
  Sym2& operator+=(const Sym2& o) {
    xx += o.xx;
    xy += o.xy;
    yy += o.yy;
    return *this;
  }

  double det() const { return xx * yy - xy * xy; }
  double trace() const { return xx + yy; }

  // ascending
  std::array<double, 2> eigenvalues() const {
    const double m = 0.5 * (xx + yy);
    const double r = std::hypot(0.5 * (xx - yy), xy);
    return {m - r, m + r};
  }

  // Clamps both eigenvalues from below, preserving eigenvectors.
  Sym2 with_eigen_floor(double floor) const {
    const auto ev = eigenvalues();
    if (ev[0] >= floor) return *this;
    const double lo = std::max(ev[0], floor);
    const double hi = std::max(ev[1], floor);
    const double r = std::hypot(0.5 * (xx - yy), xy);
    if (r <= 0.0) return isotropic(lo);
    // unit eigenvector for the larger eigenvalue
    Vec2 u;
    if (std::abs(xy) > 1e-300) {
      u = {ev[1] - yy, xy};
    } else {
      u = (xx >= yy) ? Vec2{1.0, 0.0} : Vec2{0.0, 1.0};
    }
    const double n = u.norm();
    u = {u.x / n, u.y / n};
    const Vec2 v{-u.y, u.x};  // eigenvector for the smaller eigenvalue
    Sym2 out = outer(u) * hi;
    out += outer(v) * lo;
    return out;
  }

  Sym2 inverse() const {
    const double d = det();
    if (!(d > 0.0)) throw std::runtime_error("Sym2::inverse: matrix not positive definite");
    return {yy / d, -xy / d, xx / d};
  }

  // x^T S^-1 x for the centered vector x
  double mahalanobis2(const Vec2& v) const {
    const Sym2 inv = inverse();
    return v.x * (inv.xx * v.x + inv.xy * v.y) + v.y * (inv.xy * v.x + inv.yy * v.y);
  }
};

struct Region {
  double xmin = 0.0;
  double xmax = 1.0;
  double ymin = 0.0;
  double ymax = 1.0;

  double width() const { return xmax - xmin; }
  double height() const { return ymax - ymin; }
  double area() const { return width() * height(); }
  double diagonal() const { return std::hypot(width(), height()); }
  Vec2 center() const { return {0.5 * (xmin + xmax), 0.5 * (ymin + ymax)}; }

  bool contains(const Vec2& p) const {
    return p.x >= xmin && p.x <= xmax && p.y >= ymin && p.y <= ymax;
  }
  Vec2 clamp(const Vec2& p) const {
    return {std::clamp(p.x, xmin, xmax), std::clamp(p.y, ymin, ymax)};
  }
  void validate() const {
    if (!(xmax > xmin) || !(ymax > ymin)) throw std::invalid_argument("Region: empty extent");
  }
};

}  // namespace uavnet
