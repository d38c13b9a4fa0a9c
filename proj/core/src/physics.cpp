#include "polyvem/physics.hpp"

#include "polyvem/errors.hpp"

#include <json.hpp>

#include <Eigen/Cholesky>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

namespace polyvem {

std::string to_string(Equation eq) { return eq == Equation::darcy ? "darcy" : "brinkman"; }

Equation parse_equation(const std::string& name) {
  if (name == "darcy") return Equation::darcy;
  if (name == "brinkman") return Equation::brinkman;
  throw InvalidParameter("unknown equation '" + name + "' (expected darcy or brinkman)");
}

Eigen::VectorXd DiscreteSolution::cell_velocity(int cell) const {
  const auto& dofs = map.cell_dofs.at(static_cast<std::size_t>(cell));
  Eigen::VectorXd v(static_cast<int>(dofs.size()));
  for (std::size_t i = 0; i < dofs.size(); ++i) v[static_cast<int>(i)] = velocity[dofs[i]];
  return v;
}

Eigen::VectorXd DiscreteSolution::cell_pressure(int cell) const {
  const auto c = static_cast<std::size_t>(cell);
  return pressure.segment(map.pressure_offset.at(c), map.pressure_size.at(c));
}

namespace {

// Runs body(i) for i in [0, n) on up to `threads` workers; each index is
// handled exactly once, so results stored by index are deterministic.
template <class Body>
void parallel_for(int n, int threads, Body body) {
  threads = std::clamp(threads, 1, std::max(1, n));
  if (threads == 1) {
    for (int i = 0; i < n; ++i) body(i);
    return;
  }
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      for (int i = t; i < n; i += threads) {
        try {
          body(i);
        } catch (...) {
          const std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

// Cholesky factor of the pressure mass matrix of a cell. The assembled
// pressure unknowns are coefficients in the orthonormal basis L^{-1} m.
Eigen::LLT<Eigen::MatrixXd> pressure_factor(const LocalOperators& op) {
  const int np = op.pressure_size();
  Eigen::LLT<Eigen::MatrixXd> llt(op.mass_km1.topLeftCorner(np, np));
  if (llt.info() != Eigen::Success) throw ConditioningError("pressure mass matrix is not positive definite");
  return llt;
}

Eigen::Matrix2d cell_K(const ProblemSpec& spec, int cell) {
  if (spec.cell_permeability.empty()) return spec.permeability;
  return spec.cell_permeability.at(static_cast<std::size_t>(cell));
}

}  // namespace

Eigen::VectorXd project_load(const LocalOperators& ops, const VectorField& g, int degree) {
  const int k = ops.k;
  const int nk = poly_dim(k);
  Eigen::VectorXd mom = Eigen::VectorXd::Zero(2 * nk);
  if (g) {
    const QuadratureRule rule = polygon_quadrature(ops.geom, std::max(degree, 2 * k + 2));
    const ScaledMonomials mk(ops.geom, k);
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const Vec2 v = g(rule.points[q]);
      const Eigen::VectorXd m = mk.values(rule.points[q]);
      mom.head(nk) += rule.weights[q] * v.x() * m;
      mom.tail(nk) += rule.weights[q] * v.y() * m;
    }
  }
  return ops.pi_zero.transpose() * mom;
}

std::vector<LocalOperators> compute_all_operators(const PolyMesh& mesh, Scheme scheme, int k, int threads) {
  std::vector<LocalOperators> ops(static_cast<std::size_t>(mesh.num_cells()));
  parallel_for(mesh.num_cells(), threads, [&](int c) {
    ops[static_cast<std::size_t>(c)] = compute_local_operators(scheme, k, element_geometry(mesh, c));
  });
  return ops;
}

SaddleSystem assemble_problem(const PolyMesh& mesh, const ProblemSpec& spec, const std::vector<LocalOperators>& ops,
                              const GlobalDofMap& map, SolveDiagnostics* diag) {
  const int nc = mesh.num_cells();
  if (spec.equation == Equation::brinkman && !(spec.mu > 0.0))
    throw InvalidParameter("mu must be positive for the Brinkman problem (use the Darcy driver for mu = 0)");
  if (!spec.cell_permeability.empty() && static_cast<int>(spec.cell_permeability.size()) != nc)
    throw InvalidParameter("cell_permeability must have one tensor per cell");
  const int qdeg = 2 * spec.k + 4;
  const Eigen::VectorXd offset = map.boundary_offset(spec.boundary_data);

  std::vector<LocalContribution> contrib(static_cast<std::size_t>(nc));
  std::vector<double> abs_f(static_cast<std::size_t>(nc), 0.0);
  parallel_for(nc, spec.threads, [&](int c) {
    const LocalOperators& op = ops[static_cast<std::size_t>(c)];
    LocalContribution& lc = contrib[static_cast<std::size_t>(c)];
    const Eigen::Matrix2d K = cell_K(spec, c);
    lc.A = spec.equation == Equation::darcy ? local_darcy_form(op, K).A_darcy
                                            : local_brinkman_form(op, spec.mu, K).total();
    lc.B = op.b_loc;
    lc.load_u = project_load(op, spec.momentum_source, qdeg);
    const int np = op.pressure_size();
    lc.p_weights = op.mass_km1.row(0).head(np).transpose();
    lc.load_p = Eigen::VectorXd::Zero(np);
    if (spec.mass_source) {
      const QuadratureRule rule = polygon_quadrature(op.geom, qdeg);
      const ScaledMonomials pb(op.geom, op.pressure_degree());
      double a = 0.0;
      for (std::size_t q = 0; q < rule.size(); ++q) {
        const double f = spec.mass_source(rule.points[q]);
        lc.load_p += rule.weights[q] * f * pb.values(rule.points[q]);
        a += rule.weights[q] * std::abs(f);
      }
      abs_f[static_cast<std::size_t>(c)] = a;
    }
  });

  // Compatibility: int f must match the prescribed boundary flux.
  double total_f = 0.0;
  double flux = 0.0;
  double scale = 1.0;
  double area = 0.0;
  for (int c = 0; c < nc; ++c) {
    const auto& lc = contrib[static_cast<std::size_t>(c)];
    const auto& dofs = map.cell_dofs[static_cast<std::size_t>(c)];
    total_f += lc.load_p[0];
    scale += abs_f[static_cast<std::size_t>(c)];
    for (std::size_t i = 0; i < dofs.size(); ++i) flux += lc.B(0, static_cast<int>(i)) * offset[dofs[i]];
    area += lc.p_weights[0];
  }
  const double mismatch = total_f - flux;
  if (std::abs(mismatch) > spec.compatibility_tol * scale) {
    throw DataError("mass source is incompatible with the boundary data: int f - int u.n = " +
                    std::to_string(mismatch) + " (f must have zero mean for homogeneous data)");
  }
  for (auto& lc : contrib) lc.load_p -= (mismatch / area) * lc.p_weights;
  if (diag) diag->source_mean_removed = mismatch / area;

  parallel_for(nc, spec.threads, [&](int c) {
    LocalContribution& lc = contrib[static_cast<std::size_t>(c)];
    const auto llt = pressure_factor(ops[static_cast<std::size_t>(c)]);
    const auto L = llt.matrixL();
    L.solveInPlace(lc.B);
    L.solveInPlace(lc.load_p);
    L.solveInPlace(lc.p_weights);
  });

  return assemble(map, contrib, offset);
}

namespace {

DiscreteSolution run(std::shared_ptr<const PolyMesh> mesh, const ProblemSpec& spec) {
  if (!mesh) throw InvalidParameter("mesh is required");
  const auto t0 = std::chrono::steady_clock::now();
  DiscreteSolution sol;
  sol.mesh = mesh;
  sol.equation = spec.equation;
  sol.scheme = spec.scheme;
  sol.k = spec.k;
  sol.mu = spec.equation == Equation::brinkman ? spec.mu : 0.0;
  const BoundaryKind bc = spec.equation == Equation::darcy ? BoundaryKind::darcy_normal_trace : BoundaryKind::dirichlet;
  sol.map = build_dof_map(*mesh, spec.k, spec.scheme, bc);
  sol.ops = compute_all_operators(*mesh, spec.scheme, spec.k, spec.threads);

  SolveDiagnostics& d = sol.diagnostics;
  const SaddleSystem system = assemble_problem(*mesh, spec, sol.ops, sol.map, &d);
  const SaddleSolution x = solve(system);
  sol.velocity = x.velocity;
  sol.pressure = x.pressure;

  d.relative_residual = x.relative_residual;
  d.n_velocity = sol.map.n_velocity;
  d.n_free_velocity = sol.map.n_free;
  d.n_pressure = sol.map.n_pressure;

  double pmean = 0.0;
  double area = 0.0;
  const double umax = std::max(sol.velocity.cwiseAbs().maxCoeff(), 1e-300);
  for (int c = 0; c < mesh->num_cells(); ++c) {
    const LocalOperators& op = sol.ops[static_cast<std::size_t>(c)];
    const auto llt = pressure_factor(op);
    const auto L = llt.matrixL();
    auto pc = sol.pressure.segment(sol.map.pressure_offset[static_cast<std::size_t>(c)], op.pressure_size());
    llt.matrixU().solveInPlace(pc);
    pmean += op.mass_km1.row(0).head(pc.size()).dot(pc);
    area += op.geom.area;
    if (spec.scheme == Scheme::non_div_free) continue;
    // ||div u_h||_{L2(K)} from the moments int div(u_h) q, through the
    // orthonormal basis; going through the monomial coefficients of div u_h
    // would amplify round-off by cond(M_{k-1}).
    const double a = op.geom.area;
    Eigen::VectorXd dm = op.b_loc * sol.cell_velocity(c);
    L.solveInPlace(dm);
    d.max_divergence = std::max(d.max_divergence, dm.norm() / std::sqrt(a) / umax);
    if (spec.mass_source || spec.equation == Equation::darcy) {
      // moments of f with the same mean correction as the solve
      Eigen::VectorXd fm = Eigen::VectorXd::Zero(op.pressure_size());
      if (spec.mass_source) {
        const QuadratureRule rule = polygon_quadrature(op.geom, 2 * spec.k + 4);
        const ScaledMonomials mb(op.geom, op.pressure_degree());
        for (std::size_t q = 0; q < rule.size(); ++q)
          fm += rule.weights[q] * spec.mass_source(rule.points[q]) * mb.values(rule.points[q]);
      }
      fm -= d.source_mean_removed * op.mass_km1.row(0).head(fm.size()).transpose();
      L.solveInPlace(fm);
      const double scale = std::max(1.0, fm.norm() / std::sqrt(a));
      d.divergence_identity_error = std::max(d.divergence_identity_error, (dm - fm).norm() / std::sqrt(a) / scale);
    }
  }
  d.pressure_mean = pmean / area;
  d.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return sol;
}

}  // namespace

DiscreteSolution solve_darcy(std::shared_ptr<const PolyMesh> mesh, const ProblemSpec& spec) {
  if (spec.equation != Equation::darcy) throw InvalidParameter("solve_darcy requires equation = darcy");
  if (spec.scheme == Scheme::reduced)
    throw InvalidParameter("the reduced scheme is only available for the Brinkman problem");
  return run(std::move(mesh), spec);
}

DiscreteSolution solve_brinkman(std::shared_ptr<const PolyMesh> mesh, const ProblemSpec& spec) {
  if (spec.equation != Equation::brinkman) throw InvalidParameter("solve_brinkman requires equation = brinkman");
  if (!(spec.mu > 0.0)) throw InvalidParameter("mu must be positive for the Brinkman problem");
  return run(std::move(mesh), spec);
}

DiscreteSolution solve_brinkman_reduced(std::shared_ptr<const PolyMesh> mesh, ProblemSpec spec) {
  spec.scheme = Scheme::reduced;
  return solve_brinkman(std::move(mesh), spec);
}

DiscreteSolution solve_problem(std::shared_ptr<const PolyMesh> mesh, const ProblemSpec& spec) {
  return spec.equation == Equation::darcy ? solve_darcy(std::move(mesh), spec) : solve_brinkman(std::move(mesh), spec);
}

ReducedComparison compare_reduced_to_full(const DiscreteSolution& reduced, const DiscreteSolution& full) {
  if (reduced.scheme != Scheme::reduced || full.scheme != Scheme::div_free || reduced.mesh != full.mesh)
    throw InvalidParameter("comparison needs a reduced and a div_free solution on the same mesh");
  ReducedComparison r;
  r.reduced_unknowns = reduced.total_unknowns();
  r.full_unknowns = full.total_unknowns();
  const double scale = std::max(full.velocity.cwiseAbs().maxCoeff(), 1e-300);
  for (int c = 0; c < full.mesh->num_cells(); ++c) {
    const Eigen::VectorXd ur = reduced.cell_velocity(c);
    const Eigen::VectorXd uf = full.cell_velocity(c);
    r.velocity_rel_diff = std::max(r.velocity_rel_diff, (ur - uf.head(ur.size())).cwiseAbs().maxCoeff() / scale);
    const LocalOperators& op = full.ops[static_cast<std::size_t>(c)];
    const Eigen::VectorXd pf = full.cell_pressure(c);
    const double mean = op.mass_km1.row(0).dot(pf) / op.geom.area;
    r.pressure_mean_diff = std::max(r.pressure_mean_diff, std::abs(reduced.cell_pressure(c)[0] - mean));
  }
  return r;
}

Eigen::VectorXd cell_divergence(const DiscreteSolution& sol, int cell) {
  const LocalOperators& op = sol.ops.at(static_cast<std::size_t>(cell));
  const Eigen::VectorXd u = sol.cell_velocity(cell);
  if (sol.scheme != Scheme::non_div_free) return op.div * u;
  const int k = sol.k;
  const int nk = poly_dim(k);
  const Eigen::VectorXd c = op.pi_zero * u;
  return (derivative_matrix(k, 0) * c.head(nk) + derivative_matrix(k, 1) * c.tail(nk)) / op.geom.diameter;
}

std::vector<PointEvaluation> evaluate_solution(const DiscreteSolution& sol, int cell, std::span<const Vec2> points) {
  if (cell < 0 || cell >= sol.mesh->num_cells()) throw InvalidParameter("cell index out of range");
  const LocalOperators& op = sol.ops[static_cast<std::size_t>(cell)];
  const Eigen::VectorXd u = sol.cell_velocity(cell);
  const Eigen::VectorXd pi0 = op.pi_zero * u;
  const Eigen::VectorXd gp = op.grad_proj * u;
  const Eigen::VectorXd dv = cell_divergence(sol, cell);
  const Eigen::VectorXd pc = sol.cell_pressure(cell);
  const ScaledMonomials mk(op.geom, sol.k);
  const ScaledMonomials mk1(op.geom, sol.k - 1);
  const ScaledMonomials mp(op.geom, op.pressure_degree());
  const int nk1 = poly_dim(sol.k - 1);
  std::vector<PointEvaluation> out;
  out.reserve(points.size());
  for (const Vec2& x : points) {
    if (!contains_point(op.geom.vertices, x, 1e-10))
      throw DomainError("evaluation point (" + std::to_string(x.x()) + ", " + std::to_string(x.y()) +
                        ") lies outside cell " + std::to_string(cell));
    PointEvaluation e;
    e.velocity = eval_vector_poly(mk, pi0, x);
    const Eigen::VectorXd m1 = mk1.values(x);
    for (int b = 0; b < 4; ++b) e.grad(b / 2, b % 2) = gp.segment(b * nk1, nk1).dot(m1);
    e.divergence = dv.dot(m1);
    e.pressure = pc.dot(mp.values(x));
    out.push_back(e);
  }
  return out;
}

std::string solution_to_json(const DiscreteSolution& sol) {
  nlohmann::json j;
  j["equation"] = to_string(sol.equation);
  j["scheme"] = to_string(sol.scheme);
  j["k"] = sol.k;
  if (sol.equation == Equation::brinkman) j["mu"] = sol.mu;
  j["num_cells"] = sol.mesh->num_cells();
  j["velocity_dofs"] = std::vector<double>(sol.velocity.data(), sol.velocity.data() + sol.velocity.size());
  nlohmann::json pcells = nlohmann::json::array();
  for (int c = 0; c < sol.mesh->num_cells(); ++c) {
    const Eigen::VectorXd p = sol.cell_pressure(c);
    pcells.push_back(std::vector<double>(p.data(), p.data() + p.size()));
  }
  j["pressure_cells"] = pcells;
  const SolveDiagnostics& d = sol.diagnostics;
  j["diagnostics"] = {
      {"relative_residual", d.relative_residual},
      {"pressure_mean", d.pressure_mean},
      {"max_divergence", d.max_divergence},
      {"divergence_identity_error", d.divergence_identity_error},
      {"n_velocity", d.n_velocity},
      {"n_free_velocity", d.n_free_velocity},
      {"n_pressure", d.n_pressure},
  };
  return j.dump(1);
}

}  // namespace polyvem
