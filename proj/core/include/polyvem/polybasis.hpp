#pragma once

#include "polyvem/mesh.hpp"

#include <Eigen/Core>

#include <utility>
#include <vector>

namespace polyvem {

/// Number of monomials of total degree <= d in two variables; 0 for d < 0.
[[nodiscard]] constexpr int poly_dim(int d) noexcept { return d < 0 ? 0 : (d + 1) * (d + 2) / 2; }

/// Position of x^a y^b in the degree-graded ordering
/// 1, x, y, x^2, xy, y^2, ...
[[nodiscard]] constexpr int mono_index(int a, int b) noexcept {
  const int d = a + b;
  return d * (d + 1) / 2 + b;
}

/// Inverse of mono_index.
[[nodiscard]] std::pair<int, int> mono_exponents(int index);

// --- quadrature --------------------------------------------------------------

/// 1D rule on [-1, 1].
struct Rule1D {
  std::vector<double> points;
  std::vector<double> weights;
};

/// n-point Gauss-Legendre rule (exact to degree 2n-1).
[[nodiscard]] Rule1D gauss_legendre(int n);

/// (k+1)-point Gauss-Lobatto rule including both endpoints (exact to degree
/// 2k-1). Nodes ascend from -1 to 1.
[[nodiscard]] Rule1D edge_rule_gauss_lobatto(int k);

struct QuadratureRule {
  std::vector<Vec2> points;
  std::vector<double> weights;
  int degree = 0;
  [[nodiscard]] std::size_t size() const noexcept { return points.size(); }
};

/// Rule exact for polynomials of total degree <= `degree` on a simple
/// counterclockwise polygon (convex or not). Ear clipping followed by a
/// collapsed Gauss-Legendre rule on each triangle.
[[nodiscard]] QuadratureRule polygon_quadrature(std::span<const Vec2> polygon, int degree);
[[nodiscard]] QuadratureRule polygon_quadrature(const ElementGeom& geom, int degree);

/// Triangulates a simple CCW polygon; throws GeometryError when no ear is found.
[[nodiscard]] std::vector<std::array<int, 3>> ear_clip(std::span<const Vec2> polygon);

// --- scaled monomials --------------------------------------------------------

/// Monomials m_a(x) = ((x - c)/h)^a of degree <= k anchored at the cell
/// centroid c and scaled by the diameter h.
class ScaledMonomials {
public:
  ScaledMonomials(const Vec2& center, double scale, int degree) : center_(center), h_(scale), k_(degree) {}
  ScaledMonomials(const ElementGeom& geom, int degree) : ScaledMonomials(geom.centroid, geom.diameter, degree) {}

  [[nodiscard]] int degree() const noexcept { return k_; }
  [[nodiscard]] int size() const noexcept { return poly_dim(k_); }
  [[nodiscard]] const Vec2& center() const noexcept { return center_; }
  [[nodiscard]] double scale() const noexcept { return h_; }
  [[nodiscard]] Vec2 local(const Vec2& x) const { return (x - center_) / h_; }

  /// Values of all monomials at x.
  [[nodiscard]] Eigen::VectorXd values(const Vec2& x) const;
  /// Physical gradients, one row per monomial.
  [[nodiscard]] Eigen::MatrixX2d gradients(const Vec2& x) const;

private:
  Vec2 center_;
  double h_ = 1.0;
  int k_ = 0;
};

/// Values of all monomials of degree <= k at local coordinates (s, t).
[[nodiscard]] Eigen::VectorXd monomial_values(int k, double s, double t);

/// Exact integrals I(a, b) = int_K s^a t^b dx of the scaled monomials, with
/// (s, t) = (x - c)/h, computed from the boundary by Euler's identity for
/// homogeneous functions.
class MonomialIntegrals {
public:
  MonomialIntegrals(const ElementGeom& geom, int max_degree);
  MonomialIntegrals(const ElementGeom& geom, const Vec2& center, double scale, int max_degree);
  [[nodiscard]] double operator()(int a, int b) const;
  [[nodiscard]] int max_degree() const noexcept { return max_degree_; }

private:
  int max_degree_ = 0;
  std::vector<double> values_;  // indexed by mono_index
};

/// Mass matrix int_K m_i m_j for degrees <= ka (rows) and <= kb (columns).
[[nodiscard]] Eigen::MatrixXd monomial_mass(const MonomialIntegrals& I, int ka, int kb);
/// Physical gradient Gram int_K grad m_i . grad m_j, degree <= k.
[[nodiscard]] Eigen::MatrixXd monomial_grad_gram(const MonomialIntegrals& I, double h, int k);

// --- polynomial coefficient algebra (local coordinates) -----------------------

/// Coefficient vector of d/ds (dir = 0) or d/dt (dir = 1) of the degree-k
/// monomial basis as a matrix P_k -> P_{k-1}.
[[nodiscard]] Eigen::MatrixXd derivative_matrix(int k, int dir);
/// Multiplication by s (dir = 0) or t (dir = 1), P_k -> P_{k+1}.
[[nodiscard]] Eigen::MatrixXd shift_matrix(int k, int dir);
/// Embedding P_j -> P_k (j <= k).
[[nodiscard]] Eigen::MatrixXd embed_matrix(int j, int k);

// Vector polynomials [P_k]^2 are stored component-blocked: the first
// poly_dim(k) entries hold the first component.

/// Mass matrix of [P_ka]^2 x [P_kb]^2, block-diagonal.
[[nodiscard]] Eigen::MatrixXd vector_mass(const MonomialIntegrals& I, int ka, int kb);

/// Local gradients grad_s m_b for 1 <= |b| <= k+1, as columns in [P_k]^2.
[[nodiscard]] Eigen::MatrixXd grad_basis(int k);
/// s^perp m_g = (t, -s) m_g for |g| <= k-1, as columns in [P_k]^2.
[[nodiscard]] Eigen::MatrixXd perp_basis(int k);

/// Basis of the L2(K)-orthogonal complement of G_{k-2}^perp inside
/// G_k^perp, as 2k-1 columns in [P_k]^2, each normalized to int |c|^2 = |K|.
/// Throws ConditioningError on rank loss.
[[nodiscard]] Eigen::MatrixXd complement_basis(const ElementGeom& geom, int k);
[[nodiscard]] Eigen::MatrixXd complement_basis(const MonomialIntegrals& I, double area, int k);

/// Gram matrix A^T M B of two sets of [P_k]^2 coefficient columns.
[[nodiscard]] Eigen::MatrixXd poly_mass_matrix(const ElementGeom& geom, int k, const Eigen::MatrixXd& A,
                                               const Eigen::MatrixXd& B);

}  // namespace polyvem
