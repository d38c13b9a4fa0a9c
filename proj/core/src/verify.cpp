#include "polyvem/verify.hpp"

#include "polyvem/errors.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/SparseCholesky>

#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>
#include <sstream>

namespace polyvem {

// --- Poly2 ---------------------------------------------------------------------

Poly2 Poly2::monomial(int a, int b, double c) {
  Poly2 p(a + b);
  p.set(a, b, c);
  return p;
}

Poly2 Poly2::constant(double c) { return monomial(0, 0, c); }

double Poly2::coeff(int a, int b) const {
  if (a < 0 || b < 0 || a + b > degree_) return 0.0;
  return coeffs_[mono_index(a, b)];
}

void Poly2::set(int a, int b, double c) {
  if (a + b > degree_) {
    Eigen::VectorXd grown = Eigen::VectorXd::Zero(poly_dim(a + b));
    grown.head(coeffs_.size()) = coeffs_;
    coeffs_ = grown;
    degree_ = a + b;
  }
  coeffs_[mono_index(a, b)] = c;
}

double Poly2::operator()(const Vec2& x) const { return coeffs_.dot(monomial_values(degree_, x.x(), x.y())); }

Poly2 Poly2::dx() const {
  Poly2 r(std::max(degree_ - 1, 0));
  for (int i = 0; i < coeffs_.size(); ++i) {
    const auto [a, b] = mono_exponents(i);
    if (a > 0) r.set(a - 1, b, r.coeff(a - 1, b) + a * coeffs_[i]);
  }
  return r;
}

Poly2 Poly2::dy() const {
  Poly2 r(std::max(degree_ - 1, 0));
  for (int i = 0; i < coeffs_.size(); ++i) {
    const auto [a, b] = mono_exponents(i);
    if (b > 0) r.set(a, b - 1, r.coeff(a, b - 1) + b * coeffs_[i]);
  }
  return r;
}

double Poly2::integral_unit_square() const {
  double s = 0.0;
  for (int i = 0; i < coeffs_.size(); ++i) {
    const auto [a, b] = mono_exponents(i);
    s += coeffs_[i] / ((a + 1.0) * (b + 1.0));
  }
  return s;
}

Poly2 operator+(const Poly2& a, const Poly2& b) {
  Poly2 r(std::max(a.degree_, b.degree_));
  r.coeffs_.head(a.coeffs_.size()) += a.coeffs_;
  r.coeffs_.head(b.coeffs_.size()) += b.coeffs_;
  return r;
}

Poly2 operator-(const Poly2& a, const Poly2& b) { return a + (-1.0) * b; }

Poly2 operator*(double s, const Poly2& a) {
  Poly2 r = a;
  r.coeffs_ *= s;
  return r;
}

Poly2 operator*(const Poly2& a, const Poly2& b) {
  Poly2 r(a.degree_ + b.degree_);
  for (int i = 0; i < a.coeffs_.size(); ++i) {
    const auto [ai, bi] = mono_exponents(i);
    for (int j = 0; j < b.coeffs_.size(); ++j) {
      const auto [aj, bj] = mono_exponents(j);
      r.coeffs_[mono_index(ai + aj, bi + bj)] += a.coeffs_[i] * b.coeffs_[j];
    }
  }
  return r;
}

Poly2 Poly2::random(int degree, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  Poly2 p(degree);
  for (int i = 0; i < p.coeffs_.size(); ++i) p.coeffs_[i] = unit(rng);
  return p;
}

// --- manufactured cases ------------------------------------------------------------

ProblemSpec make_problem(const ManufacturedCase& c, Scheme scheme, int k, double mu) {
  ProblemSpec spec;
  spec.equation = c.equation;
  spec.scheme = scheme;
  spec.k = k;
  spec.mu = mu;
  const bool brinkman = c.equation == Equation::brinkman;
  const VectorField u = c.u;
  const VectorField lap = c.lap_u;
  const VectorField gp = c.grad_p;
  spec.momentum_source = [u, lap, gp, brinkman, mu](const Vec2& x) {
    Vec2 g = gp(x) + u(x);
    if (brinkman) g -= mu * lap(x);
    return g;
  };
  spec.mass_source = c.div_u;
  spec.boundary_data = c.u;
  return spec;
}

namespace {

using std::numbers::pi;

ManufacturedCase test1_signed(double sign, const std::string& name) {
  ManufacturedCase c;
  c.name = name;
  c.equation = Equation::darcy;
  c.u = [sign](const Vec2& x) {
    return Vec2(sign * pi * std::sin(pi * x.x()) * std::cos(pi * x.y()),
                sign * pi * std::cos(pi * x.x()) * std::sin(pi * x.y()));
  };
  c.grad_u = [sign](const Vec2& x) {
    const double cc = std::cos(pi * x.x()) * std::cos(pi * x.y());
    const double ss = std::sin(pi * x.x()) * std::sin(pi * x.y());
    Eigen::Matrix2d g;
    g << cc, -ss, -ss, cc;
    return Eigen::Matrix2d(sign * pi * pi * g);
  };
  c.lap_u = [u = c.u](const Vec2& x) { return Vec2(-2.0 * pi * pi * u(x)); };
  c.div_u = [sign](const Vec2& x) { return sign * 2.0 * pi * pi * std::cos(pi * x.x()) * std::cos(pi * x.y()); };
  c.p = [](const Vec2& x) { return std::cos(pi * x.x()) * std::cos(pi * x.y()); };
  c.grad_p = [](const Vec2& x) {
    return Vec2(-pi * std::sin(pi * x.x()) * std::cos(pi * x.y()), -pi * std::cos(pi * x.x()) * std::sin(pi * x.y()));
  };
  return c;
}

ManufacturedCase from_polys(std::string name, Equation eq, const Poly2& ux, const Poly2& uy, const Poly2& p, int degree) {
  ManufacturedCase c;
  c.name = std::move(name);
  c.equation = eq;
  c.poly_degree = degree;
  const Poly2 uxx = ux.dx(), uxy = ux.dy(), uyx = uy.dx(), uyy = uy.dy();
  const Poly2 lx = uxx.dx() + uxy.dy();
  const Poly2 ly = uyx.dx() + uyy.dy();
  const Poly2 px = p.dx(), py = p.dy();
  c.u = [ux, uy](const Vec2& x) { return Vec2(ux(x), uy(x)); };
  c.grad_u = [uxx, uxy, uyx, uyy](const Vec2& x) {
    Eigen::Matrix2d g;
    g << uxx(x), uxy(x), uyx(x), uyy(x);
    return g;
  };
  c.lap_u = [lx, ly](const Vec2& x) { return Vec2(lx(x), ly(x)); };
  c.div_u = [uxx, uyy](const Vec2& x) { return uxx(x) + uyy(x); };
  c.p = [p](const Vec2& x) { return p(x); };
  c.grad_p = [px, py](const Vec2& x) { return Vec2(px(x), py(x)); };
  return c;
}

Poly2 zero_mean(const Poly2& p) { return p - Poly2::constant(p.integral_unit_square()); }

}  // namespace

ManufacturedCase test1_darcy() { return test1_signed(1.0, "test1"); }

ManufacturedCase test1_printed_darcy() { return test1_signed(-1.0, "test1_printed"); }

ManufacturedCase test2_brinkman() {
  ManufacturedCase c;
  c.name = "test2";
  c.equation = Equation::brinkman;
  c.u = [](const Vec2& x) {
    return Vec2(std::sin(pi * x.x()) * std::cos(pi * x.y()), -std::cos(pi * x.x()) * std::sin(pi * x.y()));
  };
  c.grad_u = [](const Vec2& x) {
    const double cc = std::cos(pi * x.x()) * std::cos(pi * x.y());
    const double ss = std::sin(pi * x.x()) * std::sin(pi * x.y());
    Eigen::Matrix2d g;
    g << pi * cc, -pi * ss, pi * ss, -pi * cc;
    return g;
  };
  c.lap_u = [u = c.u](const Vec2& x) { return Vec2(-2.0 * pi * pi * u(x)); };
  c.div_u = [](const Vec2&) { return 0.0; };
  c.p = [](const Vec2& x) { return x.x() * x.x() * x.y() * x.y() - 1.0 / 9.0; };
  c.grad_p = [](const Vec2& x) {
    return Vec2(2.0 * x.x() * x.y() * x.y(), 2.0 * x.x() * x.x() * x.y());
  };
  return c;
}

ManufacturedCase poly_patch_darcy(int k, std::uint64_t seed) {
  if (k < 2) throw UnsupportedError("polynomial patches need k >= 2");
  const Poly2 bx = Poly2::monomial(1, 0) - Poly2::monomial(2, 0);
  const Poly2 by = Poly2::monomial(0, 1) - Poly2::monomial(0, 2);
  const Poly2 ux = bx * Poly2::random(k - 2, seed);
  const Poly2 uy = by * Poly2::random(k - 2, seed + 1);
  const Poly2 p = zero_mean(Poly2::random(k - 1, seed + 2));
  return from_polys("poly_patch_darcy", Equation::darcy, ux, uy, p, k);
}

ManufacturedCase poly_patch_brinkman(int k, std::uint64_t seed) {
  if (k < 2) throw UnsupportedError("polynomial patches need k >= 2");
  const Poly2 psi = Poly2::random(k + 1, seed);
  const Poly2 p = zero_mean(Poly2::random(k - 1, seed + 2));
  return from_polys("poly_patch_brinkman", Equation::brinkman, psi.dy(), -1.0 * psi.dx(), p, k);
}

std::vector<std::string> builtin_case_names() {
  return {"test1", "test1_printed", "test2", "poly_patch_darcy", "poly_patch_brinkman"};
}

ManufacturedCase case_by_name(const std::string& name, int k, std::uint64_t seed) {
  if (name == "test1") return test1_darcy();
  if (name == "test1_printed") return test1_printed_darcy();
  if (name == "test2") return test2_brinkman();
  if (name == "poly_patch_darcy") return poly_patch_darcy(k, seed);
  if (name == "poly_patch_brinkman") return poly_patch_brinkman(k, seed);
  throw InvalidParameter("unknown case '" + name +
                         "' (expected test1, test1_printed, test2, poly_patch_darcy or poly_patch_brinkman)");
}

// --- errors ----------------------------------------------------------------------

ErrorReport compute_errors(const DiscreteSolution& sol, const ManufacturedCase& c) {
  const int k = sol.k;
  const int nk1 = poly_dim(k - 1);
  double e_l2 = 0.0, e_h1 = 0.0, e_div = 0.0, e_p = 0.0, e_best = 0.0;
  for (int cell = 0; cell < sol.mesh->num_cells(); ++cell) {
    const LocalOperators& op = sol.ops[static_cast<std::size_t>(cell)];
    const Eigen::VectorXd u = sol.cell_velocity(cell);
    const Eigen::VectorXd pi0 = op.pi_zero * u;
    const Eigen::VectorXd gp = op.grad_proj * u;
    const Eigen::VectorXd dv = cell_divergence(sol, cell);
    const Eigen::VectorXd pc = sol.cell_pressure(cell);
    const ScaledMonomials mk(op.geom, k);
    const ScaledMonomials mk1(op.geom, k - 1);
    const ScaledMonomials mp(op.geom, op.pressure_degree());
    const QuadratureRule rule = polygon_quadrature(op.geom, 2 * k + 4);
    Eigen::VectorXd div_mom = Eigen::VectorXd::Zero(nk1);
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const Vec2& x = rule.points[q];
      const double w = rule.weights[q];
      const Eigen::VectorXd m = mk.values(x);
      const Eigen::VectorXd m1 = mk1.values(x);
      const Vec2 uh(pi0.head(m.size()).dot(m), pi0.tail(m.size()).dot(m));
      e_l2 += w * (c.u(x) - uh).squaredNorm();
      const Eigen::Matrix2d gu = c.grad_u(x);
      for (int b = 0; b < 4; ++b) {
        const double d = gu(b / 2, b % 2) - gp.segment(b * nk1, nk1).dot(m1);
        e_h1 += w * d * d;
      }
      const double du = c.div_u(x);
      const double dd = du - dv.dot(m1);
      e_div += w * dd * dd;
      div_mom += w * du * m1;
      const double dp = c.p(x) - pc.dot(mp.values(x));
      e_p += w * dp * dp;
    }
    const Eigen::VectorXd best = op.mass_km1.llt().solve(div_mom);
    const Eigen::VectorXd diff = dv - best;
    e_best += std::max(0.0, diff.dot(op.mass_km1 * diff));
  }
  ErrorReport r;
  r.h = sol.mesh->max_diameter();
  r.err_u_L2 = std::sqrt(e_l2);
  r.err_u_H1 = std::sqrt(e_h1);
  r.err_div = std::sqrt(e_div);
  r.err_u_Hdiv = std::sqrt(e_div + e_l2);
  r.err_p_L2 = std::sqrt(e_p);
  r.err_div_best = std::sqrt(e_best);
  r.ndof_u = sol.map.n_velocity;
  r.ndof_p = sol.map.n_pressure;
  r.solve_seconds = sol.diagnostics.seconds;
  return r;
}

double dof_relative_error(const DiscreteSolution& sol, const ManufacturedCase& c) {
  double err = 0.0;
  double scale = 0.0;
  for (int cell = 0; cell < sol.mesh->num_cells(); ++cell) {
    const LocalOperators& op = sol.ops[static_cast<std::size_t>(cell)];
    const Eigen::VectorXd exact = interpolate_dofs(op.layout, op.geom, c.u);
    err = std::max(err, (sol.cell_velocity(cell) - exact).cwiseAbs().maxCoeff());
    scale = std::max(scale, exact.cwiseAbs().maxCoeff());
  }
  return scale > 0.0 ? err / scale : err;
}

// --- convergence -------------------------------------------------------------------

double observed_rate(double e0, double e1, double h0, double h1) {
  if (!(e0 > 0.0) || !(e1 > 0.0) || h0 == h1) return std::numeric_limits<double>::quiet_NaN();
  return std::log(e0 / e1) / std::log(h0 / h1);
}

std::vector<ConvergenceTable> run_convergence(const ConvergenceConfig& config) {
  if (config.hs.empty()) throw InvalidParameter("at least one mesh size h is required");
  if (config.schemes.empty()) throw InvalidParameter("at least one scheme is required");
  const ManufacturedCase mc = case_by_name(config.case_name, config.k, config.seed);
  std::vector<double> mus = mc.equation == Equation::darcy ? std::vector<double>{0.0} : config.mus;
  if (mus.empty()) throw InvalidParameter("at least one viscosity mu is required");
  for (Scheme s : config.schemes)
    if (s == Scheme::reduced && mc.equation == Equation::darcy)
      throw InvalidParameter("the reduced scheme is only available for the Brinkman problem");

  std::vector<std::shared_ptr<const PolyMesh>> meshes;
  for (double h : config.hs) meshes.push_back(std::make_shared<const PolyMesh>(generate_mesh(config.family, h, config.seed)));

  std::vector<ConvergenceTable> tables;
  for (Scheme scheme : config.schemes) {
    for (double mu : mus) {
      ConvergenceTable t;
      t.scheme = scheme;
      t.family = config.family;
      t.k = config.k;
      t.mu = mu;
      for (std::size_t i = 0; i < meshes.size(); ++i) {
        ConvergenceRow row;
        row.errors.h = config.hs[i];
        try {
          ProblemSpec spec = make_problem(mc, scheme, config.k, mu);
          spec.threads = config.threads;
          const DiscreteSolution sol = solve_problem(meshes[i], spec);
          row.errors = compute_errors(sol, mc);
          row.errors.h = config.hs[i];
        } catch (const Error& e) {
          row.error = e.what();
          const double nan = std::numeric_limits<double>::quiet_NaN();
          row.errors.err_u_H1 = row.errors.err_u_Hdiv = row.errors.err_u_L2 = row.errors.err_p_L2 = nan;
        }
        if (!t.rows.empty() && t.rows.back().error.empty() && row.error.empty()) {
          const ErrorReport& a = t.rows.back().errors;
          const ErrorReport& b = row.errors;
          row.rate_u_H1 = observed_rate(a.err_u_H1, b.err_u_H1, a.h, b.h);
          row.rate_u_Hdiv = observed_rate(a.err_u_Hdiv, b.err_u_Hdiv, a.h, b.h);
          row.rate_u_L2 = observed_rate(a.err_u_L2, b.err_u_L2, a.h, b.h);
          row.rate_p_L2 = observed_rate(a.err_p_L2, b.err_p_L2, a.h, b.h);
        }
        t.rows.push_back(std::move(row));
      }
      tables.push_back(std::move(t));
    }
  }
  return tables;
}

namespace {

std::string fmt(double v) {
  if (std::isnan(v)) return "";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

}  // namespace

std::string convergence_csv(const std::vector<ConvergenceTable>& tables, bool timing) {
  std::ostringstream out;
  out << "scheme,family,k,mu,h,ndof_u,ndof_p,err_u_H1,err_u_Hdiv,err_u_L2,err_p_L2,"
         "rate_u_H1,rate_u_Hdiv,rate_u_L2,rate_p_L2,solve_seconds\n";
  for (const auto& t : tables) {
    for (const auto& r : t.rows) {
      const ErrorReport& e = r.errors;
      out << to_string(t.scheme) << ',' << to_string(t.family) << ',' << t.k << ',' << fmt(t.mu) << ',' << fmt(e.h)
          << ',' << e.ndof_u << ',' << e.ndof_p << ',' << fmt(e.err_u_H1) << ',' << fmt(e.err_u_Hdiv) << ','
          << fmt(e.err_u_L2) << ',' << fmt(e.err_p_L2) << ',' << fmt(r.rate_u_H1) << ',' << fmt(r.rate_u_Hdiv) << ','
          << fmt(r.rate_u_L2) << ',' << fmt(r.rate_p_L2) << ',' << fmt(timing ? e.solve_seconds : 0.0) << '\n';
    }
  }
  return out.str();
}

// --- inf-sup surrogate ---------------------------------------------------------------

double inf_sup_constant(const PolyMesh& mesh, int k) {
  const GlobalDofMap map = build_dof_map(mesh, k, Scheme::div_free, BoundaryKind::darcy_normal_trace);
  const std::vector<LocalOperators> ops = compute_all_operators(mesh, Scheme::div_free, k);
  std::vector<Eigen::Triplet<double>> tx, tb;
  Eigen::MatrixXd Mp = Eigen::MatrixXd::Zero(map.n_pressure, map.n_pressure);
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const LocalOperators& op = ops[static_cast<std::size_t>(c)];
    const Eigen::MatrixXd X = local_darcy_form(op, Eigen::Matrix2d::Identity()).A_darcy +
                              op.div.transpose() * op.mass_km1 * op.div;
    const auto& dofs = map.cell_dofs[static_cast<std::size_t>(c)];
    const int po = map.pressure_offset[static_cast<std::size_t>(c)];
    for (int j = 0; j < X.cols(); ++j) {
      for (int i = 0; i < X.rows(); ++i) tx.emplace_back(dofs[static_cast<std::size_t>(i)], dofs[static_cast<std::size_t>(j)], X(i, j));
      for (int i = 0; i < op.b_loc.rows(); ++i) tb.emplace_back(po + i, dofs[static_cast<std::size_t>(j)], op.b_loc(i, j));
    }
    Mp.block(po, po, op.mass_km1.rows(), op.mass_km1.cols()) = op.mass_km1;
  }
  Eigen::SparseMatrix<double> X(map.n_velocity, map.n_velocity), B(map.n_pressure, map.n_velocity);
  X.setFromTriplets(tx.begin(), tx.end());
  B.setFromTriplets(tb.begin(), tb.end());
  const Eigen::SparseMatrix<double> P = map.expansion;
  const Eigen::SparseMatrix<double> Xf = P.transpose() * X * P;
  const Eigen::SparseMatrix<double> Bf = B * P;

  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(Xf);
  if (ldlt.info() != Eigen::Success) throw SingularSystemError("velocity norm matrix is not positive definite");
  const Eigen::MatrixXd Y = ldlt.solve(Eigen::MatrixXd(Bf.transpose()));
  Eigen::MatrixXd S = Bf * Y;
  S = 0.5 * (S + S.transpose()).eval();
  const Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> eig(S, Mp);
  if (eig.info() != Eigen::Success) throw ConditioningError("inf-sup eigenvalue problem failed");
  const Eigen::VectorXd lam = eig.eigenvalues();
  const double top = lam.cwiseAbs().maxCoeff();
  for (int i = 0; i < lam.size(); ++i)
    if (lam[i] > 1e-10 * top) return std::sqrt(lam[i]);
  throw ConditioningError("no non-zero inf-sup eigenvalue found");
}

}  // namespace polyvem
