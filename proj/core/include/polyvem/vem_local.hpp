#pragma once

#include "polyvem/mesh.hpp"
#include "polyvem/polybasis.hpp"

#include <Eigen/Core>

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace polyvem {

enum class Scheme { div_free, reduced, non_div_free };

[[nodiscard]] std::string to_string(Scheme scheme);
/// Accepts both "div-free" and "div_free" spellings.
[[nodiscard]] Scheme parse_scheme(const std::string& name);

using VectorField = std::function<Vec2(const Vec2&)>;
using ScalarField = std::function<double(const Vec2&)>;

enum class DofKind {
  vertex,       ///< point value at a vertex
  edge,         ///< point value at an interior Gauss-Lobatto node
  perp_moment,  ///< (1/|K|) int v . s^perp m_g, |g| <= k-3
  div_moment,   ///< (h/|K|) int div v m_a, 1 <= |a| <= k-1
  moment,       ///< (1/|K|) int v_c m_a, |a| <= k-2 (non_div_free)
};

struct DofDescriptor {
  DofKind kind = DofKind::vertex;
  int component = 0;  ///< 0/1 for point values and plain moments, -1 otherwise
  int entity = 0;     ///< local vertex or edge for point values, -1 otherwise
  int index = 0;      ///< Lobatto node (0-based interior) or monomial index
};

/// Local DoF ordering:
///   vertices CCW, (u_x, u_y) per vertex;
///   edges CCW, interior Lobatto nodes in the edge direction, (u_x, u_y) per node;
///   div_free / reduced: perp moments by monomial index, then (div_free only)
///   divergence moments by monomial index starting at 1;
///   non_div_free: x-component moments, then y-component moments.
struct DofLayout {
  Scheme scheme = Scheme::div_free;
  int k = 2;
  int n_vertices = 0;
  std::vector<DofDescriptor> dofs;

  [[nodiscard]] int size() const noexcept { return static_cast<int>(dofs.size()); }
  [[nodiscard]] int boundary_size() const noexcept { return 2 * n_vertices * k; }
  [[nodiscard]] int vertex_dof(int v, int c) const noexcept { return 2 * v + c; }
  [[nodiscard]] int edge_dof(int e, int node, int c) const noexcept {
    return 2 * n_vertices + 2 * (k - 1) * e + 2 * node + c;
  }
  /// DoF index of Lobatto node j (0 = edge start, k = edge end) on edge e.
  [[nodiscard]] int edge_node_dof(int e, int j, int c) const noexcept {
    if (j == 0) return vertex_dof(e, c);
    if (j == k) return vertex_dof((e + 1) % n_vertices, c);
    return edge_dof(e, j - 1, c);
  }
  [[nodiscard]] int perp_dof(int g) const noexcept { return boundary_size() + g; }
  [[nodiscard]] int div_dof(int a) const noexcept { return boundary_size() + poly_dim(k - 3) + a - 1; }
  [[nodiscard]] int moment_dof(int c, int a) const noexcept { return boundary_size() + c * poly_dim(k - 2) + a; }
};

/// Throws UnsupportedError for k < 2.
[[nodiscard]] DofLayout build_dof_layout(Scheme scheme, int k, int n_vertices);
[[nodiscard]] DofLayout build_dof_layout(Scheme scheme, int k, const ElementGeom& geom);

/// Closed-form local dimension.
[[nodiscard]] int local_dof_count(Scheme scheme, int k, int n_vertices);

/// Projector and reconstruction matrices of one element. All matrices act on
/// the DoF vector of `layout`; polynomial outputs are coefficients in the
/// scaled monomial basis of the element (vector fields component-blocked).
struct LocalOperators {
  DofLayout layout;
  ElementGeom geom;
  int k = 2;

  Eigen::MatrixXd pi_nabla;     ///< 2 n_k x N
  Eigen::MatrixXd pi_zero;      ///< 2 n_k x N
  Eigen::MatrixXd pi_zero_km2;  ///< 2 n_{k-2} x N
  Eigen::MatrixXd moments_km2;  ///< int v_c m_a, |a| <= k-2, 2 n_{k-2} x N
  Eigen::MatrixXd div;          ///< n_{k-1} x N; empty for non_div_free
  Eigen::MatrixXd grad_proj;    ///< L2 projection of grad v onto P_{k-1}: blocks dx v1, dy v1, dx v2, dy v2
  Eigen::MatrixXd b_loc;        ///< int div(phi_j) q_i against the pressure basis
  Eigen::MatrixXd flux_moments; ///< int_{dK} m_b v.n, |b| <= k+1

  /// DoF values of the [P_k]^2 basis, N_full x 2 n_k, where N_full is the
  /// size of the div_free layout for the reduced scheme.
  Eigen::MatrixXd dof_eval;
  /// Maps this layout's DoFs to the DoFs of the enclosing full space
  /// (identity except for the reduced scheme).
  Eigen::MatrixXd restriction;

  Eigen::MatrixXd mass_k;    ///< scalar M_k
  Eigen::MatrixXd mass_km1;  ///< scalar M_{k-1}

  /// Operators of the full div_free space (reduced scheme only).
  std::shared_ptr<const LocalOperators> full;

  [[nodiscard]] int size() const noexcept { return layout.size(); }
  [[nodiscard]] Scheme scheme() const noexcept { return layout.scheme; }
  /// Pressure polynomial degree on this element.
  [[nodiscard]] int pressure_degree() const noexcept { return layout.scheme == Scheme::reduced ? 0 : k - 1; }
  [[nodiscard]] int pressure_size() const noexcept { return poly_dim(pressure_degree()); }
};

/// Computes every local operator. Throws ConditioningError for degenerate
/// elements.
[[nodiscard]] LocalOperators compute_local_operators(Scheme scheme, int k, const ElementGeom& geom);

// Single-operator entry points; each recomputes what it needs.
[[nodiscard]] Eigen::MatrixXd compute_pi_nabla(const DofLayout& layout, const ElementGeom& geom);
[[nodiscard]] Eigen::MatrixXd compute_pi_zero(const DofLayout& layout, const ElementGeom& geom,
                                              const Eigen::MatrixXd& pi_nabla);
/// Throws UnsupportedError for non_div_free.
[[nodiscard]] Eigen::MatrixXd divergence_matrix(const DofLayout& layout, const ElementGeom& geom);
[[nodiscard]] Eigen::MatrixXd local_b_form(const DofLayout& layout, const ElementGeom& geom);

struct LocalForms {
  Eigen::MatrixXd A_darcy;
  Eigen::MatrixXd A_grad;
  double alpha = 0.0;  ///< Darcy stabilization scale
  [[nodiscard]] Eigen::MatrixXd total() const { return A_grad.size() ? Eigen::MatrixXd(A_darcy + A_grad) : A_darcy; }
};

/// Mass-type form Pi0^T (K^{-1} (x) M_k) Pi0 + alpha (I - D Pi0)^T (I - D Pi0)
/// with alpha the mean diagonal of the consistency part. Throws
/// InvalidParameter unless K is symmetric positive definite.
[[nodiscard]] LocalForms local_darcy_form(const LocalOperators& ops, const Eigen::Matrix2d& K);
/// Viscous part mu [PiN^T G PiN + (I - D PiN)^T (I - D PiN)] plus the Darcy part.
[[nodiscard]] LocalForms local_brinkman_form(const LocalOperators& ops, double mu, const Eigen::Matrix2d& K);

/// DoF vector of a field. Moments use quadrature of degree `quad_degree`
/// (at least 2k + 2 is used).
[[nodiscard]] Eigen::VectorXd interpolate_dofs(const DofLayout& layout, const ElementGeom& geom,
                                               const VectorField& field, int quad_degree = 0);

/// Coordinates of the point DoF nodes: vertex i, then the interior Lobatto
/// nodes of every edge in layout order.
[[nodiscard]] std::vector<Vec2> dof_points(const DofLayout& layout, const ElementGeom& geom);

/// Evaluates a polynomial vector field given by [P_k]^2 coefficients.
[[nodiscard]] Vec2 eval_vector_poly(const ScaledMonomials& basis, const Eigen::VectorXd& coeffs, const Vec2& x);

}  // namespace polyvem
