#pragma once

#include "polyvem/mesh.hpp"
#include "polyvem/vem_local.hpp"

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace polyvem {

enum class BoundaryKind {
  darcy_normal_trace,  ///< u.n prescribed on the boundary
  dirichlet,           ///< full trace prescribed
};

enum class PointStatus : std::uint8_t {
  interior,  ///< both components free
  normal,    ///< normal component prescribed, tangential free
  fixed,     ///< both components prescribed
};

/// Global numbering of velocity and pressure unknowns.
///
/// Velocity DoFs: point nodes first (vertices, then the interior Lobatto
/// nodes of every global edge in the edge's own vertex[0] -> vertex[1]
/// direction), two components per node; then cell-private moment DoFs in cell
/// order. Pressure: one block of scaled monomials per cell.
struct GlobalDofMap {
  Scheme scheme = Scheme::div_free;
  int k = 2;
  BoundaryKind bc = BoundaryKind::darcy_normal_trace;

  int n_points = 0;
  int n_velocity = 0;
  int n_pressure = 0;
  int n_free = 0;

  std::vector<std::vector<int>> cell_dofs;  ///< local -> global velocity index
  std::vector<int> pressure_offset;         ///< first pressure coefficient of each cell
  std::vector<int> pressure_size;

  std::vector<Vec2> points;  ///< coordinates of the point nodes
  std::vector<PointStatus> point_status;
  std::vector<Vec2> point_normal;  ///< outward unit normal for `normal` points

  /// Free velocity unknowns to all velocity DoFs (homogeneous part).
  Eigen::SparseMatrix<double> expansion;
  /// Index among the free unknowns, -1 for dependent or fixed DoFs.
  std::vector<int> free_index;

  /// Constrained part of the velocity DoF vector for the given boundary data
  /// (zero data when `data` is empty).
  [[nodiscard]] Eigen::VectorXd boundary_offset(const VectorField& data) const;
  /// Number of fully constrained boundary points (corners for u.n data).
  [[nodiscard]] int num_fixed_points() const;
};

[[nodiscard]] GlobalDofMap build_dof_map(const PolyMesh& mesh, int k, Scheme scheme, BoundaryKind bc);

/// Per-cell contribution, in the cell's local DoF ordering.
struct LocalContribution {
  Eigen::MatrixXd A;          ///< velocity block
  Eigen::MatrixXd B;          ///< int div(phi_j) q_i, pressure x velocity
  Eigen::VectorXd load_u;     ///< velocity right-hand side
  Eigen::VectorXd load_p;     ///< int f q_i
  Eigen::VectorXd p_weights;  ///< int q_i, for the zero-mean constraint
};

/// Symmetric saddle-point system in the unknowns (free velocity, pressure,
/// multiplier):
///   [ A_ff    Bs_f^T  0 ] [u_f]   [F_f]
///   [ Bs_f    0       c ] [p  ] = [G  ]
///   [ 0       c^T     0 ] [lam]   [0  ]
/// with Bs = -B so that the velocity equation reads A u - int p div v = F.
struct SaddleSystem {
  Eigen::SparseMatrix<double> matrix;
  Eigen::VectorXd rhs;
  int n_free_velocity = 0;
  int n_pressure = 0;
  Eigen::SparseMatrix<double> expansion;  ///< u = expansion * u_f + offset
  Eigen::VectorXd offset;
  [[nodiscard]] int size() const noexcept { return n_free_velocity + n_pressure + 1; }
};

/// Scatters the contributions in cell order; `offset` holds the constrained
/// velocity values (lifting).
[[nodiscard]] SaddleSystem assemble(const GlobalDofMap& map, std::span<const LocalContribution> cells,
                                    const Eigen::VectorXd& offset);

struct SaddleSolution {
  Eigen::VectorXd velocity;  ///< all velocity DoFs, constraints included
  Eigen::VectorXd pressure;
  double multiplier = 0.0;
  double relative_residual = 0.0;
};

/// Sparse LU factorization with iterative refinement. Throws
/// SingularSystemError when the factorization fails or the relative residual
/// stays above 1e-10.
[[nodiscard]] SaddleSolution solve(const SaddleSystem& system);

/// Writes the matrix in MatrixMarket coordinate format (and the right-hand
/// side next to it as `<path>.rhs`).
void dump_system(const SaddleSystem& system, const std::filesystem::path& path);

/// Closed-form count of velocity DoFs for the u.n = 0 problem, counting one
/// unknown per boundary point:
/// n_P (dim interior) + 2 (interior vertices + (k-1) interior edges)
/// + boundary vertices + (k-1) boundary edges.
[[nodiscard]] int formula_velocity_dofs(const PolyMesh& mesh, int k, Scheme scheme);

}  // namespace polyvem
