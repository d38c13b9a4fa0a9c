#pragma once

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace polyvem {

using Vec2 = Eigen::Vector2d;

enum class MeshFamily { voronoi, triangle, square, web };

[[nodiscard]] std::string to_string(MeshFamily family);
[[nodiscard]] MeshFamily parse_mesh_family(const std::string& name);

/// Unique edge of a mesh. `vertices[0] < vertices[1]`; `cells[1] == -1` on
/// the boundary.
struct MeshEdge {
  std::array<int, 2> vertices{};
  std::array<int, 2> cells{-1, -1};
  [[nodiscard]] bool on_boundary() const noexcept { return cells[1] < 0; }
};

/// Polygonal mesh of a planar domain. Cells are counterclockwise vertex
/// cycles. Immutable after construction; edges and boundary flags are derived
/// in the constructor, which throws TopologyError / GeometryError on invalid
/// input.
class PolyMesh {
public:
  PolyMesh() = default;
  PolyMesh(std::vector<Vec2> vertices, std::vector<std::vector<int>> cells);

  [[nodiscard]] std::span<const Vec2> vertices() const noexcept { return vertices_; }
  [[nodiscard]] const Vec2& vertex(int i) const { return vertices_.at(static_cast<std::size_t>(i)); }
  [[nodiscard]] std::span<const std::vector<int>> cells() const noexcept { return cells_; }
  [[nodiscard]] const std::vector<int>& cell(int c) const { return cells_.at(static_cast<std::size_t>(c)); }
  [[nodiscard]] std::span<const MeshEdge> edges() const noexcept { return edges_; }

  [[nodiscard]] int num_vertices() const noexcept { return static_cast<int>(vertices_.size()); }
  [[nodiscard]] int num_cells() const noexcept { return static_cast<int>(cells_.size()); }
  [[nodiscard]] int num_edges() const noexcept { return static_cast<int>(edges_.size()); }

  /// Global edge index of local edge `i` of cell `c` (from local vertex i to i+1).
  [[nodiscard]] int cell_edge(int c, int i) const { return cell_edges_[static_cast<std::size_t>(c)][static_cast<std::size_t>(i)]; }
  /// True when cell `c` walks local edge `i` opposite to the stored global orientation.
  [[nodiscard]] bool cell_edge_reversed(int c, int i) const;

  [[nodiscard]] bool vertex_on_boundary(int v) const { return vertex_boundary_[static_cast<std::size_t>(v)] != 0; }
  [[nodiscard]] int num_boundary_vertices() const noexcept;
  [[nodiscard]] int num_boundary_edges() const noexcept;

  /// Sum of cell areas.
  [[nodiscard]] double total_area() const;
  /// Largest cell diameter.
  [[nodiscard]] double max_diameter() const;

  friend bool operator==(const PolyMesh& a, const PolyMesh& b) {
    return a.vertices_ == b.vertices_ && a.cells_ == b.cells_;
  }

private:
  void build_topology();

  std::vector<Vec2> vertices_;
  std::vector<std::vector<int>> cells_;
  std::vector<MeshEdge> edges_;
  std::vector<std::vector<int>> cell_edges_;
  std::vector<std::uint8_t> vertex_boundary_;
};

struct EdgeGeom {
  Vec2 start;
  Vec2 end;
  double length = 0.0;
  Vec2 tangent;  ///< unit, start -> end
  Vec2 normal;   ///< unit, outward
  [[nodiscard]] Vec2 midpoint() const { return 0.5 * (start + end); }
};

/// Geometric data of one cell.
struct ElementGeom {
  std::vector<Vec2> vertices;  ///< counterclockwise
  std::vector<EdgeGeom> edges; ///< edge i joins vertex i and i+1
  double diameter = 0.0;       ///< h_K, max pairwise vertex distance
  double area = 0.0;
  Vec2 centroid;
  [[nodiscard]] int num_vertices() const noexcept { return static_cast<int>(vertices.size()); }
};

/// Geometry of an arbitrary polygon given as a CCW vertex list.
[[nodiscard]] ElementGeom polygon_geometry(std::span<const Vec2> polygon);
[[nodiscard]] ElementGeom element_geometry(const PolyMesh& mesh, int cell);

/// Signed shoelace area; positive for counterclockwise polygons.
[[nodiscard]] double signed_area(std::span<const Vec2> polygon);
[[nodiscard]] bool is_convex(std::span<const Vec2> polygon, double tol = 1e-12);
[[nodiscard]] bool is_simple(std::span<const Vec2> polygon);
/// Point-in-polygon test; points within `tol` of the boundary count as inside.
[[nodiscard]] bool contains_point(std::span<const Vec2> polygon, const Vec2& p, double tol = 1e-12);

struct MeshQualityReport {
  double min_edge_to_diameter = 0.0;
  double min_area_to_diameter_sq = 0.0;
  int non_convex_cells = 0;
  std::vector<int> non_convex_cell_ids;
  int orientation_violations = 0;
  int euler_characteristic = 0;  ///< V - E + F
  double total_area = 0.0;
  double max_diameter = 0.0;
};

/// Ratio diagnostics; throws TopologyError on non-manifold edges or
/// orientation problems (these are already rejected by the PolyMesh
/// constructor for meshes built through it).
[[nodiscard]] MeshQualityReport validate_mesh(const PolyMesh& mesh);

struct MeshOptions {
  int lloyd_iterations = 100;
  double web_displacement = 0.2;  ///< fraction of edge length
};

/// Mesh of the unit square. Deterministic for a fixed (family, h, seed).
[[nodiscard]] PolyMesh generate_mesh(MeshFamily family, double target_h, std::uint64_t seed,
                                     const MeshOptions& options = {});

/// Clipped Voronoi tessellation of the unit square from explicit seeds
/// after `lloyd_iterations` steps of Lloyd relaxation.
[[nodiscard]] PolyMesh voronoi_mesh(std::vector<Vec2> seeds, int lloyd_iterations);

// Mesh exchange format: {"vertices": [[x,y],...], "cells": [[i0,i1,...],...]}.
[[nodiscard]] std::string mesh_to_json(const PolyMesh& mesh);
[[nodiscard]] PolyMesh mesh_from_json(const std::string& text);
void save_mesh(const PolyMesh& mesh, const std::filesystem::path& path);
[[nodiscard]] PolyMesh load_mesh(const std::filesystem::path& path);

}  // namespace polyvem
