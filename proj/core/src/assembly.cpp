#include "polyvem/assembly.hpp"

#include "polyvem/errors.hpp"

#include <Eigen/SparseLU>

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace polyvem {

namespace {

double cross(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

}  // namespace

GlobalDofMap build_dof_map(const PolyMesh& mesh, int k, Scheme scheme, BoundaryKind bc) {
  if (k < 2) throw UnsupportedError("polynomial degree k must be at least 2 (got " + std::to_string(k) + ")");
  GlobalDofMap map;
  map.scheme = scheme;
  map.k = k;
  map.bc = bc;
  const int nv = mesh.num_vertices();
  const int ne = mesh.num_edges();
  map.n_points = nv + (k - 1) * ne;

  const Rule1D lob = edge_rule_gauss_lobatto(k);
  map.points.assign(mesh.vertices().begin(), mesh.vertices().end());
  for (const MeshEdge& e : mesh.edges()) {
    const Vec2& a = mesh.vertex(e.vertices[0]);
    const Vec2& b = mesh.vertex(e.vertices[1]);
    for (int j = 1; j < k; ++j) map.points.push_back(a + 0.5 * (lob.points[static_cast<std::size_t>(j)] + 1.0) * (b - a));
  }

  // Outward normals of boundary edges, from the owning cell's orientation.
  std::vector<Vec2> edge_normal(static_cast<std::size_t>(ne), Vec2::Zero());
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const auto& cell = mesh.cell(c);
    const int n = static_cast<int>(cell.size());
    for (int i = 0; i < n; ++i) {
      const int e = mesh.cell_edge(c, i);
      if (!mesh.edges()[static_cast<std::size_t>(e)].on_boundary()) continue;
      const Vec2 t = (mesh.vertex(cell[static_cast<std::size_t>((i + 1) % n)]) - mesh.vertex(cell[static_cast<std::size_t>(i)])).normalized();
      edge_normal[static_cast<std::size_t>(e)] = Vec2(t.y(), -t.x());
    }
  }

  map.point_status.assign(static_cast<std::size_t>(map.n_points), PointStatus::interior);
  map.point_normal.assign(static_cast<std::size_t>(map.n_points), Vec2::Zero());
  std::vector<std::vector<Vec2>> vertex_normals(static_cast<std::size_t>(nv));
  for (int e = 0; e < ne; ++e) {
    const MeshEdge& edge = mesh.edges()[static_cast<std::size_t>(e)];
    if (!edge.on_boundary()) continue;
    const Vec2 n = edge_normal[static_cast<std::size_t>(e)];
    for (int v : edge.vertices) vertex_normals[static_cast<std::size_t>(v)].push_back(n);
    for (int j = 0; j < k - 1; ++j) {
      const auto p = static_cast<std::size_t>(nv + (k - 1) * e + j);
      map.point_status[p] = bc == BoundaryKind::dirichlet ? PointStatus::fixed : PointStatus::normal;
      map.point_normal[p] = n;
    }
  }
  for (int v = 0; v < nv; ++v) {
    const auto& ns = vertex_normals[static_cast<std::size_t>(v)];
    if (ns.empty()) continue;
    bool parallel = true;
    for (const Vec2& n : ns) parallel = parallel && std::abs(cross(ns[0], n)) < 1e-10 && ns[0].dot(n) > 0.0;
    const auto p = static_cast<std::size_t>(v);
    if (bc == BoundaryKind::dirichlet || !parallel) {
      map.point_status[p] = PointStatus::fixed;
    } else {
      map.point_status[p] = PointStatus::normal;
      map.point_normal[p] = ns[0];
    }
  }

  // Local -> global velocity numbering.
  const int n_point_dofs = 2 * map.n_points;
  int next = n_point_dofs;
  map.cell_dofs.resize(static_cast<std::size_t>(mesh.num_cells()));
  map.pressure_offset.resize(static_cast<std::size_t>(mesh.num_cells()));
  map.pressure_size.resize(static_cast<std::size_t>(mesh.num_cells()));
  int next_p = 0;
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const auto& cell = mesh.cell(c);
    const int n = static_cast<int>(cell.size());
    const DofLayout L = build_dof_layout(scheme, k, n);
    auto& dofs = map.cell_dofs[static_cast<std::size_t>(c)];
    dofs.resize(static_cast<std::size_t>(L.size()));
    for (int i = 0; i < n; ++i)
      for (int comp = 0; comp < 2; ++comp)
        dofs[static_cast<std::size_t>(L.vertex_dof(i, comp))] = 2 * cell[static_cast<std::size_t>(i)] + comp;
    for (int i = 0; i < n; ++i) {
      const int e = mesh.cell_edge(c, i);
      const bool rev = mesh.cell_edge_reversed(c, i);
      for (int j = 0; j < k - 1; ++j) {
        const int gj = rev ? k - 2 - j : j;
        const int point = nv + (k - 1) * e + gj;
        for (int comp = 0; comp < 2; ++comp) dofs[static_cast<std::size_t>(L.edge_dof(i, j, comp))] = 2 * point + comp;
      }
    }
    for (int i = L.boundary_size(); i < L.size(); ++i) dofs[static_cast<std::size_t>(i)] = next++;
    const int np = poly_dim(scheme == Scheme::reduced ? 0 : k - 1);
    map.pressure_offset[static_cast<std::size_t>(c)] = next_p;
    map.pressure_size[static_cast<std::size_t>(c)] = np;
    next_p += np;
  }
  map.n_velocity = next;
  map.n_pressure = next_p;

  // Free unknowns and the homogeneous expansion.
  map.free_index.assign(static_cast<std::size_t>(map.n_velocity), -1);
  std::vector<Eigen::Triplet<double>> trip;
  int nfree = 0;
  for (int d = 0; d < map.n_velocity; ++d) {
    if (d >= n_point_dofs) {
      map.free_index[static_cast<std::size_t>(d)] = nfree;
      trip.emplace_back(d, nfree++, 1.0);
      continue;
    }
    const int p = d / 2;
    const int comp = d % 2;
    switch (map.point_status[static_cast<std::size_t>(p)]) {
      case PointStatus::interior:
        map.free_index[static_cast<std::size_t>(d)] = nfree;
        trip.emplace_back(d, nfree++, 1.0);
        break;
      case PointStatus::fixed: break;
      case PointStatus::normal: {
        // The component with the larger normal entry depends on the other one.
        const Vec2& n = map.point_normal[static_cast<std::size_t>(p)];
        const int dep = std::abs(n.x()) >= std::abs(n.y()) ? 0 : 1;
        if (comp == dep) break;
        map.free_index[static_cast<std::size_t>(d)] = nfree;
        trip.emplace_back(d, nfree, 1.0);
        trip.emplace_back(2 * p + dep, nfree, -n[comp] / n[dep]);
        ++nfree;
        break;
      }
    }
  }
  map.n_free = nfree;
  map.expansion.resize(map.n_velocity, nfree);
  map.expansion.setFromTriplets(trip.begin(), trip.end());
  return map;
}

Eigen::VectorXd GlobalDofMap::boundary_offset(const VectorField& data) const {
  Eigen::VectorXd r = Eigen::VectorXd::Zero(n_velocity);
  if (!data) return r;
  for (int p = 0; p < n_points; ++p) {
    const auto status = point_status[static_cast<std::size_t>(p)];
    if (status == PointStatus::interior) continue;
    const Vec2 u = data(points[static_cast<std::size_t>(p)]);
    if (status == PointStatus::fixed) {
      r[2 * p] = u.x();
      r[2 * p + 1] = u.y();
    } else {
      const Vec2& n = point_normal[static_cast<std::size_t>(p)];
      const int dep = std::abs(n.x()) >= std::abs(n.y()) ? 0 : 1;
      r[2 * p + dep] = u.dot(n) / n[dep];
    }
  }
  return r;
}

int GlobalDofMap::num_fixed_points() const {
  int n = 0;
  for (auto s : point_status) n += s == PointStatus::fixed;
  return n;
}

SaddleSystem assemble(const GlobalDofMap& map, std::span<const LocalContribution> cells, const Eigen::VectorXd& offset) {
  if (static_cast<int>(cells.size()) != static_cast<int>(map.cell_dofs.size()))
    throw InvalidParameter("one local contribution per cell is required");
  const int nu = map.n_velocity;
  const int np = map.n_pressure;

  std::vector<Eigen::Triplet<double>> ta;
  std::vector<Eigen::Triplet<double>> tb;
  Eigen::VectorXd F = Eigen::VectorXd::Zero(nu);
  Eigen::VectorXd G = Eigen::VectorXd::Zero(np);
  Eigen::VectorXd cvec = Eigen::VectorXd::Zero(np);
  for (std::size_t c = 0; c < cells.size(); ++c) {
    const LocalContribution& lc = cells[c];
    const auto& dofs = map.cell_dofs[c];
    const int n = static_cast<int>(dofs.size());
    const int po = map.pressure_offset[c];
    const int ps = map.pressure_size[c];
    if (lc.A.rows() != n || lc.A.cols() != n || lc.B.rows() != ps || lc.B.cols() != n)
      throw InvalidParameter("local contribution of cell " + std::to_string(c) + " has the wrong shape");
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i)
        if (lc.A(i, j) != 0.0) ta.emplace_back(dofs[static_cast<std::size_t>(i)], dofs[static_cast<std::size_t>(j)], lc.A(i, j));
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < ps; ++i)
        if (lc.B(i, j) != 0.0) tb.emplace_back(po + i, dofs[static_cast<std::size_t>(j)], -lc.B(i, j));
    if (lc.load_u.size() == n)
      for (int i = 0; i < n; ++i) F[dofs[static_cast<std::size_t>(i)]] += lc.load_u[i];
    if (lc.load_p.size() == ps) G.segment(po, ps) -= lc.load_p;
    if (lc.p_weights.size() == ps) cvec.segment(po, ps) = lc.p_weights;
  }
  Eigen::SparseMatrix<double> A(nu, nu);
  A.setFromTriplets(ta.begin(), ta.end());
  Eigen::SparseMatrix<double> Bs(np, nu);
  Bs.setFromTriplets(tb.begin(), tb.end());

  const Eigen::SparseMatrix<double>& P = map.expansion;
  const Eigen::SparseMatrix<double> Pt = P.transpose();
  Eigen::SparseMatrix<double> Aff = Pt * A * P;
  const Eigen::SparseMatrix<double> Bf = Bs * P;
  // Exact symmetry of the velocity block.
  Aff = 0.5 * (Aff + Eigen::SparseMatrix<double>(Aff.transpose()));

  SaddleSystem S;
  S.n_free_velocity = map.n_free;
  S.n_pressure = np;
  S.expansion = P;
  S.offset = offset.size() == nu ? offset : Eigen::VectorXd::Zero(nu);
  const int nf = map.n_free;
  const int total = nf + np + 1;

  std::vector<Eigen::Triplet<double>> t;
  t.reserve(static_cast<std::size_t>(Aff.nonZeros() + 2 * Bf.nonZeros() + 2 * np));
  for (int j = 0; j < Aff.outerSize(); ++j)
    for (Eigen::SparseMatrix<double>::InnerIterator it(Aff, j); it; ++it) t.emplace_back(it.row(), it.col(), it.value());
  for (int j = 0; j < Bf.outerSize(); ++j) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(Bf, j); it; ++it) {
      t.emplace_back(nf + it.row(), it.col(), it.value());
      t.emplace_back(it.col(), nf + it.row(), it.value());
    }
  }
  for (int i = 0; i < np; ++i) {
    if (cvec[i] == 0.0) continue;
    t.emplace_back(nf + i, nf + np, cvec[i]);
    t.emplace_back(nf + np, nf + i, cvec[i]);
  }
  S.matrix.resize(total, total);
  S.matrix.setFromTriplets(t.begin(), t.end());
  S.matrix.makeCompressed();

  S.rhs = Eigen::VectorXd::Zero(total);
  S.rhs.head(nf) = Pt * (F - A * S.offset);
  S.rhs.segment(nf, np) = G - Bs * S.offset;
  return S;
}

SaddleSolution solve(const SaddleSystem& system) {
  Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
  lu.analyzePattern(system.matrix);
  lu.factorize(system.matrix);
  if (lu.info() != Eigen::Success) {
    std::ostringstream msg;
    msg << "sparse LU factorization failed for the " << system.size() << "x" << system.size()
        << " saddle-point system (" << system.n_free_velocity << " velocity, " << system.n_pressure
        << " pressure, 1 multiplier): " << lu.lastErrorMessage();
    throw SingularSystemError(msg.str());
  }
  Eigen::VectorXd x = lu.solve(system.rhs);
  const double bnorm = system.rhs.norm();
  auto residual = [&](const Eigen::VectorXd& y) {
    const Eigen::VectorXd r = system.rhs - system.matrix * y;
    return bnorm > 0.0 ? r.norm() / bnorm : r.norm();
  };
  double res = residual(x);
  for (int it = 0; it < 3 && res > 1e-13; ++it) {
    const Eigen::VectorXd r = system.rhs - system.matrix * x;
    x += lu.solve(r);
    res = residual(x);
  }
  if (!std::isfinite(res) || res > 1e-10) {
    std::ostringstream msg;
    msg << "saddle-point solve did not reach the residual tolerance (relative residual " << res << ")";
    throw SingularSystemError(msg.str());
  }
  SaddleSolution sol;
  const int nf = system.n_free_velocity;
  sol.velocity = system.expansion * x.head(nf) + system.offset;
  sol.pressure = x.segment(nf, system.n_pressure);
  sol.multiplier = x[nf + system.n_pressure];
  sol.relative_residual = res;
  return sol;
}

void dump_system(const SaddleSystem& system, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot open '" + path.string() + "' for writing");
  out << "%%MatrixMarket matrix coordinate real general\n";
  out << system.matrix.rows() << " " << system.matrix.cols() << " " << system.matrix.nonZeros() << "\n";
  out << std::setprecision(17);
  for (int j = 0; j < system.matrix.outerSize(); ++j)
    for (Eigen::SparseMatrix<double>::InnerIterator it(system.matrix, j); it; ++it)
      out << it.row() + 1 << " " << it.col() + 1 << " " << it.value() << "\n";
  std::ofstream rhs(path.string() + ".rhs");
  if (!rhs) throw ParseError("cannot open '" + path.string() + ".rhs' for writing");
  rhs << "%%MatrixMarket matrix array real general\n" << system.rhs.size() << " 1\n" << std::setprecision(17);
  for (int i = 0; i < system.rhs.size(); ++i) rhs << system.rhs[i] << "\n";
}

int formula_velocity_dofs(const PolyMesh& mesh, int k, Scheme scheme) {
  const int interior = local_dof_count(scheme, k, 3) - 2 * 3 * k;
  const int nvb = mesh.num_boundary_vertices();
  const int neb = mesh.num_boundary_edges();
  const int nvi = mesh.num_vertices() - nvb;
  const int nei = mesh.num_edges() - neb;
  return mesh.num_cells() * interior + 2 * (nvi + (k - 1) * nei) + (nvb + (k - 1) * neb);
}

}  // namespace polyvem
