#pragma once

#include "polyvem/assembly.hpp"
#include "polyvem/mesh.hpp"
#include "polyvem/vem_local.hpp"

#include <Eigen/Core>

#include <memory>
#include <string>
#include <vector>

namespace polyvem {

enum class Equation { darcy, brinkman };

[[nodiscard]] std::string to_string(Equation eq);
[[nodiscard]] Equation parse_equation(const std::string& name);

/// Strong forms solved on the unit square:
///   darcy:     K^{-1} u + grad p = g,           div u = f,  u.n given on the boundary
///   brinkman:  -mu lap u + grad p + K^{-1} u = g, div u = f,  u given on the boundary
/// with zero-mean pressure.
struct ProblemSpec {
  Equation equation = Equation::darcy;
  Scheme scheme = Scheme::div_free;
  int k = 2;
  Eigen::Matrix2d permeability = Eigen::Matrix2d::Identity();  ///< K, constant
  std::vector<Eigen::Matrix2d> cell_permeability;              ///< optional per-cell K
  double mu = 1.0;
  ScalarField mass_source;        ///< f; empty means zero
  VectorField momentum_source;    ///< g; empty means zero
  VectorField boundary_data;      ///< boundary trace; empty means homogeneous
  int threads = 1;                ///< worker threads for the local computations
  double compatibility_tol = 1e-8;
};

struct SolveDiagnostics {
  double relative_residual = 0.0;
  double pressure_mean = 0.0;
  /// max over cells of ||Div u_h||_{L2(K)} / |K|^{1/2}, divided by max|u_h DoF|
  /// (div_free, reduced).
  double max_divergence = 0.0;
  /// max over cells of ||Div u_h - Pi_{k-1} f||_{L2(K)} / |K|^{1/2}, relative to
  /// max(1, same norm of Pi_{k-1} f) (div_free, reduced).
  double divergence_identity_error = 0.0;
  double source_mean_removed = 0.0;
  int n_velocity = 0;
  int n_free_velocity = 0;
  int n_pressure = 0;
  double seconds = 0.0;
};

struct DiscreteSolution {
  std::shared_ptr<const PolyMesh> mesh;
  Equation equation = Equation::darcy;
  Scheme scheme = Scheme::div_free;
  int k = 2;
  double mu = 0.0;
  GlobalDofMap map;
  Eigen::VectorXd velocity;
  Eigen::VectorXd pressure;
  std::vector<LocalOperators> ops;
  SolveDiagnostics diagnostics;

  [[nodiscard]] Eigen::VectorXd cell_velocity(int cell) const;
  [[nodiscard]] Eigen::VectorXd cell_pressure(int cell) const;
  /// Number of unknowns after eliminating the boundary constraints
  /// (free velocity + pressure).
  [[nodiscard]] int total_unknowns() const { return map.n_free + map.n_pressure; }
};

/// Local load (Pi0_k)^T [int g . q_j] for q_j in [P_k]^2, quadrature of
/// degree `degree` (at least 2k + 2).
[[nodiscard]] Eigen::VectorXd project_load(const LocalOperators& ops, const VectorField& g, int degree = 0);

/// Computes all local operators, in parallel when threads > 1.
[[nodiscard]] std::vector<LocalOperators> compute_all_operators(const PolyMesh& mesh, Scheme scheme, int k,
                                                                int threads = 1);

/// Assembles the saddle-point system of a problem. The pressure unknowns are
/// coefficients in the cell-wise orthonormal basis L^{-1} m, with L L^T the
/// pressure mass matrix; DiscreteSolution::pressure holds monomial coefficients.
[[nodiscard]] SaddleSystem assemble_problem(const PolyMesh& mesh, const ProblemSpec& spec,
                                            const std::vector<LocalOperators>& ops, const GlobalDofMap& map,
                                            SolveDiagnostics* diag = nullptr);

/// Throws DataError when f is incompatible with the boundary flux.
[[nodiscard]] DiscreteSolution solve_darcy(std::shared_ptr<const PolyMesh> mesh, const ProblemSpec& spec);
[[nodiscard]] DiscreteSolution solve_brinkman(std::shared_ptr<const PolyMesh> mesh, const ProblemSpec& spec);
/// Brinkman in the reduced spaces (constant divergence and pressure per cell).
[[nodiscard]] DiscreteSolution solve_brinkman_reduced(std::shared_ptr<const PolyMesh> mesh, ProblemSpec spec);
/// Dispatches on spec.equation.
[[nodiscard]] DiscreteSolution solve_problem(std::shared_ptr<const PolyMesh> mesh, const ProblemSpec& spec);

struct ReducedComparison {
  double velocity_rel_diff = 0.0;  ///< max |u_red - u_full| over shared DoFs / max |u_full|
  double pressure_mean_diff = 0.0; ///< max_K |p_red - mean_K(p_full)|
  int reduced_unknowns = 0;
  int full_unknowns = 0;
};
[[nodiscard]] ReducedComparison compare_reduced_to_full(const DiscreteSolution& reduced, const DiscreteSolution& full);

struct PointEvaluation {
  Vec2 velocity;          ///< Pi0_k u_h
  Eigen::Matrix2d grad;   ///< Pi0_{k-1} grad u_h, grad(i, j) = d u_i / d x_j
  double divergence = 0.0;
  double pressure = 0.0;
};

/// Projected values of the discrete solution; throws DomainError for points
/// outside the cell.
[[nodiscard]] std::vector<PointEvaluation> evaluate_solution(const DiscreteSolution& sol, int cell,
                                                             std::span<const Vec2> points);

/// Coefficients of div u_h on a cell in P_{k-1}: the exact reconstruction for
/// div_free/reduced, div(Pi0_k u_h) for non_div_free.
[[nodiscard]] Eigen::VectorXd cell_divergence(const DiscreteSolution& sol, int cell);

/// JSON with DoF vectors, per-cell pressure coefficients and diagnostics.
[[nodiscard]] std::string solution_to_json(const DiscreteSolution& sol);

}  // namespace polyvem
