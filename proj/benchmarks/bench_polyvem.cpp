#include "polyvem/polyvem.hpp"

#include <benchmark/benchmark.h>

#include <memory>

namespace {

using namespace polyvem;

// Largest Voronoi cell of a coarse mesh; representative of the local work.
ElementGeom sample_cell() {
  const PolyMesh mesh = generate_mesh(MeshFamily::voronoi, 0.25, 1);
  int best = 0;
  for (int c = 0; c < mesh.num_cells(); ++c)
    if (mesh.cell(c).size() > mesh.cell(best).size()) best = c;
  return element_geometry(mesh, best);
}

void BM_LocalOperators(benchmark::State& state) {
  const ElementGeom g = sample_cell();
  const auto scheme = static_cast<Scheme>(state.range(0));
  const int k = static_cast<int>(state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(compute_local_operators(scheme, k, g));
}
BENCHMARK(BM_LocalOperators)
    ->ArgNames({"scheme", "k"})
    ->Args({static_cast<int>(Scheme::div_free), 2})
    ->Args({static_cast<int>(Scheme::div_free), 3})
    ->Args({static_cast<int>(Scheme::non_div_free), 2})
    ->Args({static_cast<int>(Scheme::reduced), 2});

void BM_PolygonQuadrature(benchmark::State& state) {
  const ElementGeom g = sample_cell();
  const int degree = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(polygon_quadrature(g, degree));
}
BENCHMARK(BM_PolygonQuadrature)->Arg(4)->Arg(8);

void BM_MeshGeneration(benchmark::State& state) {
  const double h = 1.0 / static_cast<double>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(generate_mesh(MeshFamily::voronoi, h, 1));
}
BENCHMARK(BM_MeshGeneration)->Arg(8)->Arg(16)->Unit(benchmark::kMillisecond);

void BM_Assembly(benchmark::State& state) {
  const PolyMesh mesh = generate_mesh(MeshFamily::voronoi, 1.0 / static_cast<double>(state.range(0)), 1);
  const ManufacturedCase c = test2_brinkman();
  const ProblemSpec spec = make_problem(c, Scheme::div_free, 2, 1e-4);
  const GlobalDofMap map = build_dof_map(mesh, 2, Scheme::div_free, BoundaryKind::dirichlet);
  const auto ops = compute_all_operators(mesh, Scheme::div_free, 2);
  for (auto _ : state) benchmark::DoNotOptimize(assemble_problem(mesh, spec, ops, map));
}
BENCHMARK(BM_Assembly)->Arg(8)->Arg(16)->Unit(benchmark::kMillisecond);

void BM_BrinkmanSolve(benchmark::State& state) {
  auto mesh = std::make_shared<const PolyMesh>(
      generate_mesh(MeshFamily::voronoi, 1.0 / static_cast<double>(state.range(0)), 1));
  const ManufacturedCase c = test2_brinkman();
  const ProblemSpec spec = make_problem(c, Scheme::div_free, 2, 1e-4);
  for (auto _ : state) benchmark::DoNotOptimize(solve_brinkman(mesh, spec));
  state.counters["unknowns"] = solve_brinkman(mesh, spec).total_unknowns();
}
BENCHMARK(BM_BrinkmanSolve)->Arg(8)->Arg(16)->Unit(benchmark::kMillisecond);

void BM_DarcySolve(benchmark::State& state) {
  auto mesh = std::make_shared<const PolyMesh>(
      generate_mesh(MeshFamily::square, 1.0 / static_cast<double>(state.range(0)), 0));
  const ManufacturedCase c = test1_darcy();
  const ProblemSpec spec = make_problem(c, Scheme::div_free, 2);
  for (auto _ : state) benchmark::DoNotOptimize(solve_darcy(mesh, spec));
}
BENCHMARK(BM_DarcySolve)->Arg(8)->Arg(16)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
