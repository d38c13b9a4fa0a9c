#include "polyvem/mesh.hpp"

#include "polyvem/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>
#include <utility>

namespace polyvem {

std::string to_string(MeshFamily family) {
  switch (family) {
    case MeshFamily::voronoi: return "voronoi";
    case MeshFamily::triangle: return "triangle";
    case MeshFamily::square: return "square";
    case MeshFamily::web: return "web";
  }
  return "unknown";
}

MeshFamily parse_mesh_family(const std::string& name) {
  if (name == "voronoi") return MeshFamily::voronoi;
  if (name == "triangle") return MeshFamily::triangle;
  if (name == "square") return MeshFamily::square;
  if (name == "web") return MeshFamily::web;
  throw InvalidParameter("unknown mesh family '" + name + "'");
}

namespace {

double cross(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

bool segments_intersect(const Vec2& p1, const Vec2& p2, const Vec2& q1, const Vec2& q2) {
  const double d1 = cross(q2 - q1, p1 - q1);
  const double d2 = cross(q2 - q1, p2 - q1);
  const double d3 = cross(p2 - p1, q1 - p1);
  const double d4 = cross(p2 - p1, q2 - p1);
  return ((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0));
}

}  // namespace

double signed_area(std::span<const Vec2> polygon) {
  double a = 0.0;
  const std::size_t n = polygon.size();
  for (std::size_t i = 0; i < n; ++i) a += cross(polygon[i], polygon[(i + 1) % n]);
  return 0.5 * a;
}

bool is_convex(std::span<const Vec2> polygon, double tol) {
  const std::size_t n = polygon.size();
  double scale = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    scale = std::max(scale, (polygon[(i + 1) % n] - polygon[i]).squaredNorm());
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& a = polygon[(i + n - 1) % n];
    const Vec2& b = polygon[i];
    const Vec2& c = polygon[(i + 1) % n];
    if (cross(b - a, c - b) < -tol * scale) return false;
  }
  return true;
}

bool is_simple(std::span<const Vec2> polygon) {
  const std::size_t n = polygon.size();
  if (n < 3) return false;
  for (std::size_t i = 0; i < n; ++i) {
    if ((polygon[(i + 1) % n] - polygon[i]).norm() == 0.0) return false;
    for (std::size_t j = i + 1; j < n; ++j) {
      if (j == i + 1 || (i == 0 && j == n - 1)) continue;
      if (segments_intersect(polygon[i], polygon[(i + 1) % n], polygon[j], polygon[(j + 1) % n]))
        return false;
    }
  }
  // Repeated vertices make a pinched polygon.
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (polygon[i] == polygon[j]) return false;
  return true;
}

bool contains_point(std::span<const Vec2> polygon, const Vec2& p, double tol) {
  const std::size_t n = polygon.size();
  bool inside = false;
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const Vec2& a = polygon[j];
    const Vec2& b = polygon[i];
    // On-edge check.
    const Vec2 ab = b - a;
    const double len2 = ab.squaredNorm();
    if (len2 > 0.0) {
      const double t = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
      if ((a + t * ab - p).norm() <= tol * std::sqrt(len2)) return true;
    }
    if (((b.y() > p.y()) != (a.y() > p.y())) &&
        (p.x() < (a.x() - b.x()) * (p.y() - b.y()) / (a.y() - b.y()) + b.x()))
      inside = !inside;
  }
  return inside;
}

ElementGeom polygon_geometry(std::span<const Vec2> polygon) {
  const int n = static_cast<int>(polygon.size());
  if (n < 3) throw GeometryError("polygon needs at least 3 vertices");
  ElementGeom g;
  g.vertices.assign(polygon.begin(), polygon.end());
  g.area = signed_area(polygon);
  if (!(g.area > 0.0)) throw GeometryError("polygon is not counterclockwise (signed area <= 0)");

  // Centroid relative to the first vertex keeps cancellation small.
  const Vec2 o = polygon[0];
  Vec2 c = Vec2::Zero();
  for (int i = 0; i < n; ++i) {
    const Vec2 a = polygon[static_cast<std::size_t>(i)] - o;
    const Vec2 b = polygon[static_cast<std::size_t>((i + 1) % n)] - o;
    c += cross(a, b) * (a + b);
  }
  g.centroid = o + c / (6.0 * g.area);

  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      g.diameter = std::max(g.diameter, (polygon[static_cast<std::size_t>(i)] - polygon[static_cast<std::size_t>(j)]).norm());

  g.edges.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    EdgeGeom e;
    e.start = polygon[static_cast<std::size_t>(i)];
    e.end = polygon[static_cast<std::size_t>((i + 1) % n)];
    const Vec2 d = e.end - e.start;
    e.length = d.norm();
    if (e.length == 0.0) throw GeometryError("polygon has a zero-length edge");
    e.tangent = d / e.length;
    e.normal = Vec2(e.tangent.y(), -e.tangent.x());
    g.edges.push_back(e);
  }
  return g;
}

PolyMesh::PolyMesh(std::vector<Vec2> vertices, std::vector<std::vector<int>> cells)
    : vertices_(std::move(vertices)), cells_(std::move(cells)) {
  build_topology();
}

void PolyMesh::build_topology() {
  const int nv = num_vertices();
  std::vector<std::uint8_t> used(static_cast<std::size_t>(nv), 0);
  std::vector<Vec2> poly;
  for (int c = 0; c < num_cells(); ++c) {
    const auto& cell = cells_[static_cast<std::size_t>(c)];
    if (cell.size() < 3) {
      std::ostringstream msg;
      msg << "cell " << c << " has fewer than 3 vertices";
      throw TopologyError(msg.str());
    }
    poly.clear();
    for (int v : cell) {
      if (v < 0 || v >= nv) {
        std::ostringstream msg;
        msg << "cell " << c << " references vertex index " << v << " out of range [0, " << nv << ")";
        throw TopologyError(msg.str());
      }
      used[static_cast<std::size_t>(v)] = 1;
      poly.push_back(vertices_[static_cast<std::size_t>(v)]);
    }
    if (!(signed_area(poly) > 0.0)) {
      std::ostringstream msg;
      msg << "cell " << c << " is not counterclockwise (signed area " << signed_area(poly) << ")";
      throw GeometryError(msg.str());
    }
    if (!is_simple(poly)) {
      std::ostringstream msg;
      msg << "cell " << c << " is not a simple polygon";
      throw GeometryError(msg.str());
    }
  }
  for (int v = 0; v < nv; ++v) {
    if (!used[static_cast<std::size_t>(v)]) {
      std::ostringstream msg;
      msg << "vertex " << v << " is not referenced by any cell";
      throw TopologyError(msg.str());
    }
  }

  // Edge extraction; each undirected edge remembers the directed traversal of
  // its first cell so neighbours can be checked for opposite orientation.
  std::map<std::pair<int, int>, int> edge_index;
  cell_edges_.assign(cells_.size(), {});
  edges_.clear();
  for (int c = 0; c < num_cells(); ++c) {
    const auto& cell = cells_[static_cast<std::size_t>(c)];
    const int n = static_cast<int>(cell.size());
    auto& ce = cell_edges_[static_cast<std::size_t>(c)];
    ce.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      const int a = cell[static_cast<std::size_t>(i)];
      const int b = cell[static_cast<std::size_t>((i + 1) % n)];
      const auto key = std::minmax(a, b);
      auto [it, inserted] = edge_index.emplace(std::pair<int, int>(key.first, key.second), static_cast<int>(edges_.size()));
      if (inserted) {
        MeshEdge e;
        e.vertices = {key.first, key.second};
        e.cells = {c, -1};
        edges_.push_back(e);
      } else {
        MeshEdge& e = edges_[static_cast<std::size_t>(it->second)];
        if (e.cells[1] >= 0) {
          std::ostringstream msg;
          msg << "edge (" << key.first << ", " << key.second << ") is shared by more than two cells ("
              << e.cells[0] << ", " << e.cells[1] << ", " << c << ")";
          throw TopologyError(msg.str());
        }
        // The first owner walked the edge in some direction; this one must walk it backwards.
        const int first = e.cells[0];
        const auto& fc = cells_[static_cast<std::size_t>(first)];
        const int fn = static_cast<int>(fc.size());
        bool first_forward = false;
        for (int j = 0; j < fn; ++j)
          if (fc[static_cast<std::size_t>(j)] == a && fc[static_cast<std::size_t>((j + 1) % fn)] == b) first_forward = true;
        if (first_forward) {
          std::ostringstream msg;
          msg << "cells " << first << " and " << c << " traverse edge (" << a << ", " << b
              << ") in the same direction (inconsistent orientation)";
          throw TopologyError(msg.str());
        }
        e.cells[1] = c;
      }
      ce[static_cast<std::size_t>(i)] = it->second;
    }
  }

  vertex_boundary_.assign(static_cast<std::size_t>(nv), 0);
  for (const auto& e : edges_) {
    if (e.on_boundary()) {
      vertex_boundary_[static_cast<std::size_t>(e.vertices[0])] = 1;
      vertex_boundary_[static_cast<std::size_t>(e.vertices[1])] = 1;
    }
  }
}

bool PolyMesh::cell_edge_reversed(int c, int i) const {
  const auto& cell = cells_[static_cast<std::size_t>(c)];
  return cell[static_cast<std::size_t>(i)] > cell[static_cast<std::size_t>((static_cast<std::size_t>(i) + 1) % cell.size())];
}

int PolyMesh::num_boundary_vertices() const noexcept {
  return static_cast<int>(std::count(vertex_boundary_.begin(), vertex_boundary_.end(), std::uint8_t{1}));
}

int PolyMesh::num_boundary_edges() const noexcept {
  return static_cast<int>(std::count_if(edges_.begin(), edges_.end(), [](const MeshEdge& e) { return e.on_boundary(); }));
}

double PolyMesh::total_area() const {
  double a = 0.0;
  std::vector<Vec2> poly;
  for (const auto& cell : cells_) {
    poly.clear();
    for (int v : cell) poly.push_back(vertices_[static_cast<std::size_t>(v)]);
    a += signed_area(poly);
  }
  return a;
}

double PolyMesh::max_diameter() const {
  double h = 0.0;
  for (int c = 0; c < num_cells(); ++c) h = std::max(h, element_geometry(*this, c).diameter);
  return h;
}

ElementGeom element_geometry(const PolyMesh& mesh, int cell) {
  if (cell < 0 || cell >= mesh.num_cells()) throw InvalidParameter("cell index out of range");
  std::vector<Vec2> poly;
  for (int v : mesh.cell(cell)) poly.push_back(mesh.vertex(v));
  return polygon_geometry(poly);
}

MeshQualityReport validate_mesh(const PolyMesh& mesh) {
  MeshQualityReport r;
  r.min_edge_to_diameter = std::numeric_limits<double>::infinity();
  r.min_area_to_diameter_sq = std::numeric_limits<double>::infinity();
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const auto& cell = mesh.cell(c);
    std::vector<Vec2> poly;
    for (int v : cell) poly.push_back(mesh.vertex(v));
    if (!(signed_area(poly) > 0.0)) {
      ++r.orientation_violations;
      continue;
    }
    const ElementGeom g = polygon_geometry(poly);
    // (A2): smallest distance between any two vertices of the cell.
    double dmin = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < poly.size(); ++i)
      for (std::size_t j = i + 1; j < poly.size(); ++j) dmin = std::min(dmin, (poly[i] - poly[j]).norm());
    r.min_edge_to_diameter = std::min(r.min_edge_to_diameter, dmin / g.diameter);
    r.min_area_to_diameter_sq = std::min(r.min_area_to_diameter_sq, g.area / (g.diameter * g.diameter));
    if (!is_convex(poly)) {
      ++r.non_convex_cells;
      r.non_convex_cell_ids.push_back(c);
    }
    r.total_area += g.area;
    r.max_diameter = std::max(r.max_diameter, g.diameter);
  }
  if (r.orientation_violations > 0) throw TopologyError("mesh has cells with non-positive signed area");
  for (const auto& e : mesh.edges())
    if (e.cells[0] < 0) throw TopologyError("edge without adjacent cell");
  r.euler_characteristic = mesh.num_vertices() - mesh.num_edges() + mesh.num_cells();
  return r;
}

}  // namespace polyvem
