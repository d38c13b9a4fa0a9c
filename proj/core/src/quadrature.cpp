#include "polyvem/errors.hpp"
#include "polyvem/polybasis.hpp"

#include <cmath>
#include <numbers>

namespace polyvem {

namespace {

// Legendre P_n and its derivative at x.
std::pair<double, double> legendre(int n, double x) {
  double p0 = 1.0;
  double p1 = x;
  if (n == 0) return {1.0, 0.0};
  for (int j = 2; j <= n; ++j) {
    const double p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
    p0 = p1;
    p1 = p2;
  }
  const double dp = n * (x * p1 - p0) / (x * x - 1.0);
  return {p1, dp};
}

double cross(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

bool inside_triangle(const Vec2& p, const Vec2& a, const Vec2& b, const Vec2& c) {
  return cross(b - a, p - a) >= 0.0 && cross(c - b, p - b) >= 0.0 && cross(a - c, p - c) >= 0.0;
}

}  // namespace

Rule1D gauss_legendre(int n) {
  if (n < 1) throw InvalidParameter("Gauss-Legendre rule needs at least one point");
  Rule1D r;
  r.points.resize(static_cast<std::size_t>(n));
  r.weights.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    for (int it = 0; it < 100; ++it) {
      const auto [p, dp] = legendre(n, x);
      const double dx = p / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    const auto [p, dp] = legendre(n, x);
    (void)p;
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    r.points[static_cast<std::size_t>(i)] = -x;
    r.points[static_cast<std::size_t>(n - 1 - i)] = x;
    r.weights[static_cast<std::size_t>(i)] = w;
    r.weights[static_cast<std::size_t>(n - 1 - i)] = w;
  }
  if (n % 2 == 1) r.points[static_cast<std::size_t>(n / 2)] = 0.0;
  return r;
}

Rule1D edge_rule_gauss_lobatto(int k) {
  if (k < 1) throw InvalidParameter("Gauss-Lobatto rule needs k >= 1");
  const int n = k + 1;
  Rule1D r;
  r.points.resize(static_cast<std::size_t>(n));
  r.weights.resize(static_cast<std::size_t>(n));
  r.points.front() = -1.0;
  r.points.back() = 1.0;
  // Interior nodes are the roots of P_k'. Newton on P_k' with
  // P_k'' = (2x P_k' - k(k+1) P_k) / (1 - x^2).
  for (int i = 1; i < k; ++i) {
    double x = -std::cos(std::numbers::pi * i / k);
    for (int it = 0; it < 100; ++it) {
      const auto [p, dp] = legendre(k, x);
      const double ddp = (2.0 * x * dp - k * (k + 1.0) * p) / (1.0 - x * x);
      const double dx = dp / ddp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    r.points[static_cast<std::size_t>(i)] = x;
  }
  for (int i = 0; i < n; ++i) {
    const double x = r.points[static_cast<std::size_t>(i)];
    const double p = legendre(k, x).first;
    r.weights[static_cast<std::size_t>(i)] = 2.0 / (k * (k + 1.0) * p * p);
  }
  // Symmetrize to remove round-off asymmetry.
  for (int i = 0; i < n / 2; ++i) {
    const double x = 0.5 * (r.points[static_cast<std::size_t>(n - 1 - i)] - r.points[static_cast<std::size_t>(i)]);
    r.points[static_cast<std::size_t>(i)] = -x;
    r.points[static_cast<std::size_t>(n - 1 - i)] = x;
  }
  if (n % 2 == 1) r.points[static_cast<std::size_t>(n / 2)] = 0.0;
  return r;
}

std::vector<std::array<int, 3>> ear_clip(std::span<const Vec2> polygon) {
  const int n = static_cast<int>(polygon.size());
  if (n < 3) throw GeometryError("cannot triangulate a polygon with fewer than 3 vertices");
  if (!is_simple(polygon)) throw GeometryError("cannot triangulate a self-intersecting polygon");
  if (!(signed_area(polygon) > 0.0)) throw GeometryError("polygon is not counterclockwise");
  std::vector<int> idx(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = i;
  std::vector<std::array<int, 3>> tris;
  tris.reserve(static_cast<std::size_t>(n - 2));
  auto P = [&](int i) -> const Vec2& { return polygon[static_cast<std::size_t>(i)]; };
  while (idx.size() > 3) {
    const int m = static_cast<int>(idx.size());
    bool clipped = false;
    for (int i = 0; i < m; ++i) {
      const int a = idx[static_cast<std::size_t>((i + m - 1) % m)];
      const int b = idx[static_cast<std::size_t>(i)];
      const int c = idx[static_cast<std::size_t>((i + 1) % m)];
      if (cross(P(b) - P(a), P(c) - P(b)) <= 0.0) continue;
      bool ear = true;
      for (int j = 0; j < m && ear; ++j) {
        const int v = idx[static_cast<std::size_t>(j)];
        if (v == a || v == b || v == c) continue;
        if (P(v) == P(a) || P(v) == P(b) || P(v) == P(c)) continue;
        if (inside_triangle(P(v), P(a), P(b), P(c))) ear = false;
      }
      if (!ear) continue;
      tris.push_back({a, b, c});
      idx.erase(idx.begin() + i);
      clipped = true;
      break;
    }
    if (!clipped) throw GeometryError("ear clipping failed; polygon is not simple");
  }
  tris.push_back({idx[0], idx[1], idx[2]});
  return tris;
}

QuadratureRule polygon_quadrature(std::span<const Vec2> polygon, int degree) {
  if (degree < 0) throw InvalidParameter("quadrature degree must be non-negative");
  const auto tris = ear_clip(polygon);
  const int n = (degree + 3) / 2;  // ceil((degree + 2) / 2)
  const Rule1D g = gauss_legendre(n);
  QuadratureRule rule;
  rule.degree = degree;
  rule.points.reserve(tris.size() * static_cast<std::size_t>(n * n));
  rule.weights.reserve(rule.points.capacity());
  for (const auto& t : tris) {
    const Vec2& a = polygon[static_cast<std::size_t>(t[0])];
    const Vec2& b = polygon[static_cast<std::size_t>(t[1])];
    const Vec2& c = polygon[static_cast<std::size_t>(t[2])];
    const double two_area = cross(b - a, c - a);
    // Collapsed square: x = a + u (b - a) + u v (c - b), dx = 2|T| u du dv.
    for (int i = 0; i < n; ++i) {
      const double u = 0.5 * (g.points[static_cast<std::size_t>(i)] + 1.0);
      const double wu = 0.5 * g.weights[static_cast<std::size_t>(i)];
      for (int j = 0; j < n; ++j) {
        const double v = 0.5 * (g.points[static_cast<std::size_t>(j)] + 1.0);
        const double wv = 0.5 * g.weights[static_cast<std::size_t>(j)];
        rule.points.push_back(a + u * (b - a) + u * v * (c - b));
        rule.weights.push_back(two_area * u * wu * wv);
      }
    }
  }
  return rule;
}

QuadratureRule polygon_quadrature(const ElementGeom& geom, int degree) {
  return polygon_quadrature(std::span<const Vec2>(geom.vertices), degree);
}

}  // namespace polyvem
