#pragma once

#include "polyvem/mesh.hpp"
#include "polyvem/physics.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace polyvem {

/// Scalar polynomial in global coordinates, sum c_ab x^a y^b, stored in the
/// degree-graded monomial order.
class Poly2 {
public:
  Poly2() = default;
  explicit Poly2(int degree) : coeffs_(Eigen::VectorXd::Zero(poly_dim(degree))), degree_(degree) {}
  static Poly2 monomial(int a, int b, double c = 1.0);
  static Poly2 constant(double c);

  [[nodiscard]] int degree() const noexcept { return degree_; }
  [[nodiscard]] double coeff(int a, int b) const;
  void set(int a, int b, double c);

  [[nodiscard]] double operator()(const Vec2& x) const;
  [[nodiscard]] Poly2 dx() const;
  [[nodiscard]] Poly2 dy() const;
  /// Exact integral over the unit square.
  [[nodiscard]] double integral_unit_square() const;

  friend Poly2 operator+(const Poly2& a, const Poly2& b);
  friend Poly2 operator-(const Poly2& a, const Poly2& b);
  friend Poly2 operator*(const Poly2& a, const Poly2& b);
  friend Poly2 operator*(double s, const Poly2& a);

  /// Random coefficients in [-1, 1] for every monomial of degree <= d.
  static Poly2 random(int degree, std::uint64_t seed);

private:
  Eigen::VectorXd coeffs_ = Eigen::VectorXd::Zero(1);
  int degree_ = 0;
};

using TensorField = std::function<Eigen::Matrix2d(const Vec2&)>;

/// Analytic solution pair with the data needed to drive a solve.
struct ManufacturedCase {
  std::string name;
  Equation equation = Equation::darcy;
  VectorField u;
  TensorField grad_u;  ///< (i, j) = d u_i / d x_j
  VectorField lap_u;
  ScalarField div_u;
  ScalarField p;
  VectorField grad_p;
  /// Polynomial degree of u when the case is polynomial.
  std::optional<int> poly_degree;
};

/// Problem data for a case: g = -mu lap u + grad p + K^{-1} u (mu = 0 for
/// Darcy), f = div u, boundary data = u.
[[nodiscard]] ProblemSpec make_problem(const ManufacturedCase& c, Scheme scheme, int k, double mu = 1.0);

[[nodiscard]] ManufacturedCase test1_darcy();          ///< u = -grad p, p = cos(pi x) cos(pi y)
[[nodiscard]] ManufacturedCase test1_printed_darcy();  ///< u = +grad p, same p
[[nodiscard]] ManufacturedCase test2_brinkman();
/// u = (x(1-x) a, y(1-y) b), a, b in P_{k-2}; p in P_{k-1} with zero mean.
[[nodiscard]] ManufacturedCase poly_patch_darcy(int k, std::uint64_t seed = 1);
/// u = curl psi, psi in P_{k+1}; p in P_{k-1} with zero mean.
[[nodiscard]] ManufacturedCase poly_patch_brinkman(int k, std::uint64_t seed = 1);

/// Names accepted by case_by_name: test1, test1_printed, test2,
/// poly_patch_darcy, poly_patch_brinkman.
[[nodiscard]] std::vector<std::string> builtin_case_names();
[[nodiscard]] ManufacturedCase case_by_name(const std::string& name, int k = 2, std::uint64_t seed = 1);

struct ErrorReport {
  double h = 0.0;
  double err_u_H1 = 0.0;
  double err_u_Hdiv = 0.0;
  double err_u_L2 = 0.0;
  double err_p_L2 = 0.0;
  double err_div = 0.0;       ///< || div u - div u_h ||
  double err_div_best = 0.0;  ///< || div u_h - Pi0_{k-1} div u ||
  int ndof_u = 0;
  int ndof_p = 0;
  double solve_seconds = 0.0;
};

/// Error quantities computed from projections of u_h, with quadrature of
/// degree 2k + 4.
[[nodiscard]] ErrorReport compute_errors(const DiscreteSolution& sol, const ManufacturedCase& c);

/// Max |u_h - I_h u| / max |I_h u| over velocity DoFs, with I_h u the DoF
/// interpolant of the exact velocity.
[[nodiscard]] double dof_relative_error(const DiscreteSolution& sol, const ManufacturedCase& c);

struct ConvergenceRow {
  ErrorReport errors;
  double rate_u_H1 = std::numeric_limits<double>::quiet_NaN();
  double rate_u_Hdiv = std::numeric_limits<double>::quiet_NaN();
  double rate_u_L2 = std::numeric_limits<double>::quiet_NaN();
  double rate_p_L2 = std::numeric_limits<double>::quiet_NaN();
  std::string error;  ///< non-empty when the solve failed
};

struct ConvergenceTable {
  Scheme scheme = Scheme::div_free;
  MeshFamily family = MeshFamily::square;
  int k = 2;
  double mu = 0.0;
  std::vector<ConvergenceRow> rows;
};

struct ConvergenceConfig {
  std::string case_name = "test1";
  MeshFamily family = MeshFamily::square;
  int k = 2;
  std::vector<Scheme> schemes{Scheme::div_free};
  std::vector<double> hs;
  std::vector<double> mus{1.0};
  std::uint64_t seed = 1;
  int threads = 1;
};

/// Rate between two levels: log(e0/e1) / log(h0/h1).
[[nodiscard]] double observed_rate(double e0, double e1, double h0, double h1);

/// One table per (scheme, mu). Failed solves are recorded in the row and the
/// study continues.
[[nodiscard]] std::vector<ConvergenceTable> run_convergence(const ConvergenceConfig& config);

/// CSV with a fixed column order and 12 significant digits. solve_seconds is
/// written as 0 unless `timing` is set, so that output is reproducible.
[[nodiscard]] std::string convergence_csv(const std::vector<ConvergenceTable>& tables, bool timing = false);

/// Smallest non-zero generalized singular value of the div_free pressure
/// coupling against the discrete H(div) velocity norm, for the u.n = 0
/// problem on `mesh`.
[[nodiscard]] double inf_sup_constant(const PolyMesh& mesh, int k);

}  // namespace polyvem
