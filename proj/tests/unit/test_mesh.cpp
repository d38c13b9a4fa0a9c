#include "polyvem/errors.hpp"
#include "polyvem/mesh.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

namespace polyvem {
namespace {

PolyMesh unit_square_cell() { return PolyMesh({{0, 0}, {1, 0}, {1, 1}, {0, 1}}, {{0, 1, 2, 3}}); }

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("polyvem_test_" + name);
}

TEST(Mesh, SquareFamilyCounts) {
  const PolyMesh m = generate_mesh(MeshFamily::square, 0.25, 0);
  EXPECT_EQ(m.num_cells(), 16);
  EXPECT_EQ(m.num_vertices(), 25);
  EXPECT_EQ(m.num_edges(), 40);
  EXPECT_EQ(m.num_boundary_edges(), 16);
  EXPECT_EQ(m.num_boundary_vertices(), 16);
}

TEST(Mesh, TriangleFamilyCounts) {
  const PolyMesh m = generate_mesh(MeshFamily::triangle, 0.5, 0);
  EXPECT_EQ(m.num_cells(), 8);
  for (int c = 0; c < m.num_cells(); ++c) {
    const ElementGeom g = element_geometry(m, c);
    ASSERT_EQ(g.num_vertices(), 3);
    EXPECT_NEAR(g.area, 0.125, 1e-15);
    // right triangle: the two legs have length 1/2
    int legs = 0;
    for (const auto& e : g.edges) legs += std::abs(e.length - 0.5) < 1e-15;
    EXPECT_EQ(legs, 2);
  }
}

TEST(Mesh, WebCellsAreHexagons) {
  const PolyMesh m = generate_mesh(MeshFamily::web, 0.2, 1);
  double area = 0.0;
  for (int c = 0; c < m.num_cells(); ++c) {
    EXPECT_EQ(m.cell(c).size(), 6u);
    std::vector<Vec2> poly;
    for (int v : m.cell(c)) poly.push_back(m.vertex(v));
    area += signed_area(poly);
  }
  EXPECT_NEAR(area, 1.0, 1e-12);
  EXPECT_GT(validate_mesh(m).non_convex_cells, 0);
}

TEST(Mesh, RejectsNonPositiveH) {
  EXPECT_THROW((void)generate_mesh(MeshFamily::square, 0.0, 1), InvalidParameter);
  EXPECT_THROW((void)generate_mesh(MeshFamily::voronoi, -0.1, 1), InvalidParameter);
}

class FamilyTest : public ::testing::TestWithParam<MeshFamily> {};

TEST_P(FamilyTest, AreaEulerAndDeterminism) {
  const MeshFamily fam = GetParam();
  double prev_h = 1e300;
  for (double h : {0.25, 0.125}) {
    const PolyMesh m = generate_mesh(fam, h, 7);
    EXPECT_NEAR(m.total_area(), 1.0, 1e-12);
    EXPECT_EQ(m.num_vertices() - m.num_edges() + m.num_cells(), 1);
    const MeshQualityReport q = validate_mesh(m);
    EXPECT_GT(q.min_edge_to_diameter, 0.0);
    EXPECT_GT(q.min_area_to_diameter_sq, 0.0);
    EXPECT_EQ(q.orientation_violations, 0);
    EXPECT_TRUE(m == generate_mesh(fam, h, 7));
    EXPECT_LT(m.max_diameter(), prev_h);
    prev_h = m.max_diameter();
    for (const auto& e : m.edges()) {
      if (e.on_boundary()) continue;
      EXPECT_GE(e.cells[0], 0);
      EXPECT_GE(e.cells[1], 0);
    }
  }
}

INSTANTIATE_TEST_SUITE_P(AllFamilies, FamilyTest,
                         ::testing::Values(MeshFamily::voronoi, MeshFamily::triangle, MeshFamily::square,
                                           MeshFamily::web),
                         [](const auto& info) { return to_string(info.param); });

TEST(Mesh, VoronoiSeedChangesMesh) {
  EXPECT_FALSE(generate_mesh(MeshFamily::voronoi, 0.25, 1) == generate_mesh(MeshFamily::voronoi, 0.25, 2));
}

TEST(Mesh, ElementGeometryUnitSquare) {
  const ElementGeom g = element_geometry(unit_square_cell(), 0);
  EXPECT_NEAR(g.diameter, std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(g.area, 1.0, 1e-15);
  EXPECT_NEAR(g.centroid.x(), 0.5, 1e-15);
  EXPECT_NEAR(g.centroid.y(), 0.5, 1e-15);
  for (const auto& e : g.edges) {
    EXPECT_NEAR(e.normal.norm(), 1.0, 1e-14);
    EXPECT_GT(e.normal.dot(e.midpoint() - g.centroid), 0.0);
    EXPECT_NEAR(e.normal.dot(e.tangent), 0.0, 1e-15);
  }
}

TEST(Mesh, ElementGeometryTriangleAndHexagon) {
  const std::vector<Vec2> tri{{0, 0}, {1, 0}, {0, 1}};
  const ElementGeom t = polygon_geometry(tri);
  EXPECT_NEAR(t.area, 0.5, 1e-15);
  EXPECT_NEAR(t.diameter, std::sqrt(2.0), 1e-15);

  std::vector<Vec2> hex;
  for (int i = 0; i < 6; ++i) hex.emplace_back(std::cos(i * std::numbers::pi / 3), std::sin(i * std::numbers::pi / 3));
  const ElementGeom h = polygon_geometry(hex);
  EXPECT_NEAR(h.area, 3.0 * std::sqrt(3.0) / 2.0, 1e-14);
  EXPECT_NEAR(h.centroid.norm(), 0.0, 1e-15);
  EXPECT_NEAR(h.diameter, 2.0, 1e-15);
}

TEST(Mesh, SquareQualityReport) {
  const MeshQualityReport q = validate_mesh(generate_mesh(MeshFamily::square, 0.25, 0));
  EXPECT_NEAR(q.min_edge_to_diameter, 1.0 / std::sqrt(2.0), 1e-14);
  EXPECT_EQ(q.non_convex_cells, 0);
}

TEST(Mesh, DuplicatedCellIsTopologyError) {
  EXPECT_THROW(PolyMesh({{0, 0}, {1, 0}, {1, 1}, {0, 1}}, {{0, 1, 2, 3}, {0, 1, 2, 3}}), TopologyError);
}

TEST(Mesh, ClockwiseCellIsRejected) {
  try {
    PolyMesh m({{0, 0}, {1, 0}, {1, 1}, {0, 1}}, {{0, 3, 2, 1}});
    FAIL() << "clockwise cell accepted";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("cell 0"), std::string::npos) << e.what();
  }
}

TEST(Mesh, SaveLoadRoundTripIsBitExact) {
  const PolyMesh m = generate_mesh(MeshFamily::voronoi, 0.25, 3);
  const auto path = temp_file("roundtrip.json");
  save_mesh(m, path);
  const PolyMesh back = load_mesh(path);
  EXPECT_TRUE(back == m);
  std::filesystem::remove(path);

  const PolyMesh one = unit_square_cell();
  EXPECT_TRUE(mesh_from_json(mesh_to_json(one)) == one);
}

TEST(Mesh, OutOfRangeVertexIndex) {
  const std::string text = R"({"vertices": [[0,0],[1,0],[1,1],[0,1]], "cells": [[0,1,2,4]]})";
  try {
    (void)mesh_from_json(text);
    FAIL() << "out-of-range index accepted";
  } catch (const TopologyError& e) {
    EXPECT_NE(std::string(e.what()).find("cell 0"), std::string::npos) << e.what();
  }
}

TEST(Mesh, MalformedFileIsParseError) {
  EXPECT_THROW((void)mesh_from_json("{\"vertices\": [[0,0],"), ParseError);
  EXPECT_THROW((void)mesh_from_json(R"({"vertices": [[0,0]]})"), ParseError);
  EXPECT_THROW((void)load_mesh(temp_file("does_not_exist.json")), ParseError);
}

TEST(Mesh, ContainsPoint) {
  const std::vector<Vec2> sq{{0, 0}, {1, 0}, {1, 1}, {0, 1}};
  EXPECT_TRUE(contains_point(sq, {0.5, 0.5}));
  EXPECT_TRUE(contains_point(sq, {1.0, 0.5}));
  EXPECT_FALSE(contains_point(sq, {1.1, 0.5}));
}

}  // namespace
}  // namespace polyvem
