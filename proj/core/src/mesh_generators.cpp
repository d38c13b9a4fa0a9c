#include "polyvem/errors.hpp"
#include "polyvem/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <random>
#include <unordered_map>

namespace polyvem {
namespace {

int cells_per_side(double h) {
  const long n = std::lround(1.0 / h);
  return static_cast<int>(std::max(1L, n));
}

PolyMesh square_mesh(int n) {
  std::vector<Vec2> v;
  v.reserve(static_cast<std::size_t>((n + 1) * (n + 1)));
  for (int j = 0; j <= n; ++j)
    for (int i = 0; i <= n; ++i) v.emplace_back(static_cast<double>(i) / n, static_cast<double>(j) / n);
  auto id = [n](int i, int j) { return j * (n + 1) + i; };
  std::vector<std::vector<int>> cells;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) cells.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)});
  return PolyMesh(std::move(v), std::move(cells));
}

struct TriangleGrid {
  std::vector<Vec2> vertices;
  std::vector<std::array<int, 3>> triangles;
};

TriangleGrid triangle_grid(int n) {
  TriangleGrid g;
  for (int j = 0; j <= n; ++j)
    for (int i = 0; i <= n; ++i) g.vertices.emplace_back(static_cast<double>(i) / n, static_cast<double>(j) / n);
  auto id = [n](int i, int j) { return j * (n + 1) + i; };
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      g.triangles.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
      g.triangles.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
    }
  }
  return g;
}

PolyMesh triangle_mesh(int n) {
  TriangleGrid g = triangle_grid(n);
  std::vector<std::vector<int>> cells;
  for (const auto& t : g.triangles) cells.push_back({t[0], t[1], t[2]});
  return PolyMesh(std::move(g.vertices), std::move(cells));
}

// Every triangle edge gets a midpoint vertex; interior midpoints are pushed by a
// random vector of length <= fraction * edge length, so each triangle becomes a
// (generally non-convex) hexagon.
PolyMesh web_mesh(int n, std::uint64_t seed, double fraction) {
  TriangleGrid g = triangle_grid(n);
  std::vector<Vec2> vertices = g.vertices;
  std::map<std::pair<int, int>, int> midpoint;
  std::map<std::pair<int, int>, std::vector<int>> edge_cells;
  for (int t = 0; t < static_cast<int>(g.triangles.size()); ++t) {
    for (int i = 0; i < 3; ++i) {
      const auto key = std::minmax(g.triangles[static_cast<std::size_t>(t)][static_cast<std::size_t>(i)],
                                   g.triangles[static_cast<std::size_t>(t)][static_cast<std::size_t>((i + 1) % 3)]);
      edge_cells[{key.first, key.second}].push_back(t);
    }
  }
  for (const auto& [key, owners] : edge_cells) {
    midpoint[key] = static_cast<int>(vertices.size());
    vertices.push_back(0.5 * (vertices[static_cast<std::size_t>(key.first)] + vertices[static_cast<std::size_t>(key.second)]));
  }

  std::vector<std::vector<int>> cells;
  cells.reserve(g.triangles.size());
  for (const auto& t : g.triangles) {
    std::vector<int> cell;
    for (int i = 0; i < 3; ++i) {
      const int a = t[static_cast<std::size_t>(i)];
      const int b = t[static_cast<std::size_t>((i + 1) % 3)];
      cell.push_back(a);
      cell.push_back(midpoint.at({std::min(a, b), std::max(a, b)}));
    }
    cells.push_back(std::move(cell));
  }

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  auto cell_ok = [&](int c) {
    std::vector<Vec2> poly;
    for (int v : cells[static_cast<std::size_t>(c)]) poly.push_back(vertices[static_cast<std::size_t>(v)]);
    return signed_area(poly) > 0.0 && is_simple(poly);
  };
  for (const auto& [key, owners] : edge_cells) {
    if (owners.size() < 2) continue;  // boundary midpoints stay on the boundary
    const Vec2 base = vertices[static_cast<std::size_t>(midpoint.at(key))];
    const double len = (vertices[static_cast<std::size_t>(key.first)] - vertices[static_cast<std::size_t>(key.second)]).norm();
    Vec2& m = vertices[static_cast<std::size_t>(midpoint.at(key))];
    bool placed = false;
    for (int attempt = 0; attempt < 64 && !placed; ++attempt) {
      Vec2 d;
      do {
        d = Vec2(unit(rng), unit(rng));
      } while (d.squaredNorm() > 1.0);
      m = base + fraction * len * d;
      placed = cell_ok(owners[0]) && cell_ok(owners[1]);
    }
    if (!placed) m = base;
  }
  return PolyMesh(std::move(vertices), std::move(cells));
}

// --- Voronoi -----------------------------------------------------------------

using Polygon = std::vector<Vec2>;

// Keeps the part of `poly` where (x - p).dot(dir) <= 0.
Polygon clip_half_plane(const Polygon& poly, const Vec2& p, const Vec2& dir) {
  Polygon out;
  const std::size_t n = poly.size();
  out.reserve(n + 1);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& a = poly[i];
    const Vec2& b = poly[(i + 1) % n];
    const double da = (a - p).dot(dir);
    const double db = (b - p).dot(dir);
    if (da <= 0.0) out.push_back(a);
    if ((da < 0.0 && db > 0.0) || (da > 0.0 && db < 0.0)) {
      const double t = da / (da - db);
      out.push_back(a + t * (b - a));
    }
  }
  return out;
}

class SeedGrid {
public:
  SeedGrid(const std::vector<Vec2>& seeds) : seeds_(seeds) {
    n_ = std::max(1, static_cast<int>(std::sqrt(static_cast<double>(seeds.size()))));
    size_ = 1.0 / n_;
    buckets_.assign(static_cast<std::size_t>(n_ * n_), {});
    for (int s = 0; s < static_cast<int>(seeds.size()); ++s) {
      auto [i, j] = bucket(seeds[static_cast<std::size_t>(s)]);
      buckets_[static_cast<std::size_t>(j * n_ + i)].push_back(s);
    }
  }
  [[nodiscard]] std::pair<int, int> bucket(const Vec2& p) const {
    const int i = std::clamp(static_cast<int>(p.x() / size_), 0, n_ - 1);
    const int j = std::clamp(static_cast<int>(p.y() / size_), 0, n_ - 1);
    return {i, j};
  }
  /// Seeds in buckets at Chebyshev ring distance exactly r from (i, j).
  void ring(int i, int j, int r, std::vector<int>& out) const {
    for (int jj = j - r; jj <= j + r; ++jj) {
      for (int ii = i - r; ii <= i + r; ++ii) {
        if (std::max(std::abs(ii - i), std::abs(jj - j)) != r) continue;
        if (ii < 0 || jj < 0 || ii >= n_ || jj >= n_) continue;
        const auto& b = buckets_[static_cast<std::size_t>(jj * n_ + ii)];
        out.insert(out.end(), b.begin(), b.end());
      }
    }
  }
  [[nodiscard]] int cells() const { return n_; }
  [[nodiscard]] double bucket_size() const { return size_; }

private:
  const std::vector<Vec2>& seeds_;
  int n_ = 1;
  double size_ = 1.0;
  std::vector<std::vector<int>> buckets_;
};

std::vector<Polygon> voronoi_cells(const std::vector<Vec2>& seeds) {
  const SeedGrid grid(seeds);
  const Polygon square{{0.0, 0.0}, {1.0, 0.0}, {1.0, 1.0}, {0.0, 1.0}};
  std::vector<Polygon> cells(seeds.size());
  std::vector<int> candidates;
  for (int s = 0; s < static_cast<int>(seeds.size()); ++s) {
    const Vec2& x = seeds[static_cast<std::size_t>(s)];
    auto [bi, bj] = grid.bucket(x);
    Polygon poly = square;
    candidates.clear();
    grid.ring(bi, bj, 0, candidates);
    int r = 0;
    std::size_t processed = 0;
    while (true) {
      // Clip by the new candidates in order of distance.
      std::sort(candidates.begin() + static_cast<std::ptrdiff_t>(processed), candidates.end(), [&](int a, int b) {
        const double da = (seeds[static_cast<std::size_t>(a)] - x).squaredNorm();
        const double db = (seeds[static_cast<std::size_t>(b)] - x).squaredNorm();
        return da < db || (da == db && a < b);
      });
      for (std::size_t c = processed; c < candidates.size(); ++c) {
        const int o = candidates[c];
        if (o == s) continue;
        const Vec2& y = seeds[static_cast<std::size_t>(o)];
        poly = clip_half_plane(poly, 0.5 * (x + y), y - x);
      }
      processed = candidates.size();
      double rmax = 0.0;
      for (const Vec2& v : poly) rmax = std::max(rmax, (v - x).norm());
      // Every seed outside ring r is at least r bucket widths away.
      if (r * grid.bucket_size() >= 2.0 * rmax || r > grid.cells()) break;
      ++r;
      grid.ring(bi, bj, r, candidates);
    }
    cells[static_cast<std::size_t>(s)] = std::move(poly);
  }
  return cells;
}

Vec2 polygon_centroid(const Polygon& poly) {
  double a = 0.0;
  Vec2 c = Vec2::Zero();
  const Vec2 o = poly[0];
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Vec2 p = poly[i] - o;
    const Vec2 q = poly[(i + 1) % poly.size()] - o;
    const double w = p.x() * q.y() - p.y() * q.x();
    a += w;
    c += w * (p + q);
  }
  return o + c / (3.0 * a);
}

// Welds the independently clipped cells into a conforming mesh.
PolyMesh weld(const std::vector<Polygon>& polys) {
  constexpr double tol = 1e-10;
  constexpr double bucket = 1e-8;
  std::unordered_map<long long, std::vector<int>> hash;
  std::vector<Vec2> vertices;
  auto key = [](long long i, long long j) { return i * 4000000007LL + j; };
  auto find_or_add = [&](const Vec2& p) {
    const long long bi = static_cast<long long>(std::floor(p.x() / bucket));
    const long long bj = static_cast<long long>(std::floor(p.y() / bucket));
    for (long long di = -1; di <= 1; ++di)
      for (long long dj = -1; dj <= 1; ++dj) {
        auto it = hash.find(key(bi + di, bj + dj));
        if (it == hash.end()) continue;
        for (int v : it->second)
          if ((vertices[static_cast<std::size_t>(v)] - p).norm() <= tol) return v;
      }
    const int id = static_cast<int>(vertices.size());
    vertices.push_back(p);
    hash[key(bi, bj)].push_back(id);
    return id;
  };
  std::vector<std::vector<int>> cells;
  cells.reserve(polys.size());
  for (const auto& poly : polys) {
    std::vector<int> cell;
    for (const Vec2& p : poly) {
      const int v = find_or_add(p);
      if (cell.empty() || cell.back() != v) cell.push_back(v);
    }
    while (cell.size() > 1 && cell.front() == cell.back()) cell.pop_back();
    if (cell.size() >= 3) cells.push_back(std::move(cell));
  }
  return PolyMesh(std::move(vertices), std::move(cells));
}

}  // namespace

PolyMesh voronoi_mesh(std::vector<Vec2> seeds, int lloyd_iterations) {
  if (seeds.empty()) throw InvalidParameter("voronoi mesh needs at least one seed");
  std::vector<Polygon> cells = voronoi_cells(seeds);
  for (int it = 0; it < lloyd_iterations; ++it) {
    for (std::size_t s = 0; s < seeds.size(); ++s) seeds[s] = polygon_centroid(cells[s]);
    cells = voronoi_cells(seeds);
  }
  return weld(cells);
}

PolyMesh generate_mesh(MeshFamily family, double target_h, std::uint64_t seed, const MeshOptions& options) {
  if (!(target_h > 0.0) || !std::isfinite(target_h)) throw InvalidParameter("target_h must be positive");
  const int n = cells_per_side(target_h);
  switch (family) {
    case MeshFamily::square: return square_mesh(n);
    case MeshFamily::triangle: return triangle_mesh(n);
    case MeshFamily::web: return web_mesh(n, seed, options.web_displacement);
    case MeshFamily::voronoi: {
      std::mt19937_64 rng(seed);
      std::uniform_real_distribution<double> unit(0.0, 1.0);
      std::vector<Vec2> seeds(static_cast<std::size_t>(n) * static_cast<std::size_t>(n));
      for (auto& s : seeds) {
        const double x = unit(rng);
        const double y = unit(rng);
        s = Vec2(x, y);
      }
      return voronoi_mesh(std::move(seeds), options.lloyd_iterations);
    }
  }
  throw InvalidParameter("unknown mesh family");
}

}  // namespace polyvem
