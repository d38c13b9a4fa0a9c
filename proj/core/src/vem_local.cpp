#include "polyvem/vem_local.hpp"

#include "polyvem/errors.hpp"

#include <Eigen/Cholesky>
#include <Eigen/LU>

#include <cmath>

namespace polyvem {

std::string to_string(Scheme scheme) {
  switch (scheme) {
    case Scheme::div_free: return "div-free";
    case Scheme::reduced: return "reduced";
    case Scheme::non_div_free: return "non-div-free";
  }
  return "unknown";
}

Scheme parse_scheme(const std::string& name) {
  std::string s = name;
  for (char& ch : s)
    if (ch == '_') ch = '-';
  if (s == "div-free") return Scheme::div_free;
  if (s == "reduced") return Scheme::reduced;
  if (s == "non-div-free") return Scheme::non_div_free;
  throw InvalidParameter("unknown scheme '" + name + "' (expected div-free, reduced or non-div-free)");
}

int local_dof_count(Scheme scheme, int k, int n_vertices) {
  const int boundary = 2 * n_vertices * k;
  switch (scheme) {
    case Scheme::div_free: return boundary + (k - 1) * (k - 2) / 2 + (k + 1) * k / 2 - 1;
    case Scheme::reduced: return boundary + (k - 1) * (k - 2) / 2;
    case Scheme::non_div_free: return boundary + (k - 1) * k;
  }
  return 0;
}

DofLayout build_dof_layout(Scheme scheme, int k, int n_vertices) {
  if (k < 2) throw UnsupportedError("polynomial degree k must be at least 2 (got " + std::to_string(k) + ")");
  if (n_vertices < 3) throw GeometryError("element needs at least 3 vertices");
  DofLayout L;
  L.scheme = scheme;
  L.k = k;
  L.n_vertices = n_vertices;
  for (int v = 0; v < n_vertices; ++v)
    for (int c = 0; c < 2; ++c) L.dofs.push_back({DofKind::vertex, c, v, 0});
  for (int e = 0; e < n_vertices; ++e)
    for (int j = 0; j < k - 1; ++j)
      for (int c = 0; c < 2; ++c) L.dofs.push_back({DofKind::edge, c, e, j});
  if (scheme == Scheme::non_div_free) {
    for (int c = 0; c < 2; ++c)
      for (int a = 0; a < poly_dim(k - 2); ++a) L.dofs.push_back({DofKind::moment, c, -1, a});
  } else {
    for (int g = 0; g < poly_dim(k - 3); ++g) L.dofs.push_back({DofKind::perp_moment, -1, -1, g});
    if (scheme == Scheme::div_free)
      for (int a = 1; a < poly_dim(k - 1); ++a) L.dofs.push_back({DofKind::div_moment, -1, -1, a});
  }
  return L;
}

DofLayout build_dof_layout(Scheme scheme, int k, const ElementGeom& geom) {
  return build_dof_layout(scheme, k, geom.num_vertices());
}

std::vector<Vec2> dof_points(const DofLayout& layout, const ElementGeom& geom) {
  std::vector<Vec2> pts(geom.vertices);
  const Rule1D lob = edge_rule_gauss_lobatto(layout.k);
  for (const EdgeGeom& e : geom.edges)
    for (int j = 1; j < layout.k; ++j)
      pts.push_back(e.start + 0.5 * (lob.points[static_cast<std::size_t>(j)] + 1.0) * (e.end - e.start));
  return pts;
}

Vec2 eval_vector_poly(const ScaledMonomials& basis, const Eigen::VectorXd& coeffs, const Vec2& x) {
  const Eigen::VectorXd v = basis.values(x);
  const int n = basis.size();
  return {coeffs.head(n).dot(v), coeffs.segment(n, n).dot(v)};
}

namespace {

Eigen::MatrixXd solve_checked(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, const char* what) {
  const Eigen::PartialPivLU<Eigen::MatrixXd> lu(A);
  if (!(lu.rcond() > 1e-14)) throw ConditioningError(std::string(what) + " system is numerically singular");
  return lu.solve(B);
}

Eigen::MatrixXd solve_spd(const Eigen::MatrixXd& M, const Eigen::MatrixXd& B, const char* what) {
  const Eigen::LLT<Eigen::MatrixXd> llt(M);
  if (llt.info() != Eigen::Success) throw ConditioningError(std::string(what) + " mass matrix is not positive definite");
  return llt.solve(B);
}

Eigen::MatrixXd block_diag2(const Eigen::MatrixXd& M) {
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(2 * M.rows(), 2 * M.cols());
  B.topLeftCorner(M.rows(), M.cols()) = M;
  B.bottomRightCorner(M.rows(), M.cols()) = M;
  return B;
}

// [P_j]^2 -> [P_k]^2, component-blocked.
Eigen::MatrixXd embed_vector(int j, int k) {
  Eigen::MatrixXd E = Eigen::MatrixXd::Zero(2 * poly_dim(k), 2 * poly_dim(j));
  E.block(0, 0, poly_dim(k), poly_dim(j)) = embed_matrix(j, k);
  E.block(poly_dim(k), poly_dim(j), poly_dim(k), poly_dim(j)) = embed_matrix(j, k);
  return E;
}

double lagrange(const std::vector<double>& nodes, int j, double t) {
  double v = 1.0;
  for (std::size_t m = 0; m < nodes.size(); ++m)
    if (static_cast<int>(m) != j) v *= (t - nodes[m]) / (nodes[static_cast<std::size_t>(j)] - nodes[m]);
  return v;
}

// D: DoF values of the [P_k]^2 basis for a div_free or non_div_free layout.
Eigen::MatrixXd dof_evaluation(const DofLayout& L, const ElementGeom& geom, const MonomialIntegrals& I) {
  const int k = L.k;
  const int nk = poly_dim(k);
  const double area = geom.area;
  const ScaledMonomials mk(geom, k);
  const std::vector<Vec2> pts = dof_points(L, geom);
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(L.size(), 2 * nk);
  for (int i = 0; i < L.size(); ++i) {
    const DofDescriptor& d = L.dofs[static_cast<std::size_t>(i)];
    switch (d.kind) {
      case DofKind::vertex:
      case DofKind::edge: {
        const int p = d.kind == DofKind::vertex ? d.entity : L.n_vertices + d.entity * (k - 1) + d.index;
        D.block(i, d.component * nk, 1, nk) = mk.values(pts[static_cast<std::size_t>(p)]).transpose();
        break;
      }
      case DofKind::perp_moment: {
        const auto [ag, bg] = mono_exponents(d.index);
        for (int a = 0; a < nk; ++a) {
          const auto [aa, ba] = mono_exponents(a);
          D(i, a) = I(aa + ag, ba + bg + 1) / area;
          D(i, nk + a) = -I(aa + ag + 1, ba + bg) / area;
        }
        break;
      }
      case DofKind::div_moment: {
        const auto [ab, bb] = mono_exponents(d.index);
        for (int a = 0; a < nk; ++a) {
          const auto [aa, ba] = mono_exponents(a);
          if (aa > 0) D(i, a) = aa * I(aa - 1 + ab, ba + bb) / area;
          if (ba > 0) D(i, nk + a) = ba * I(aa + ab, ba - 1 + bb) / area;
        }
        break;
      }
      case DofKind::moment: {
        const auto [ab, bb] = mono_exponents(d.index);
        for (int a = 0; a < nk; ++a) {
          const auto [aa, ba] = mono_exponents(a);
          D(i, d.component * nk + a) = I(aa + ab, ba + bb) / area;
        }
        break;
      }
    }
  }
  return D;
}

LocalOperators compute_unreduced(Scheme scheme, int k, const ElementGeom& geom) {
  LocalOperators ops;
  ops.layout = build_dof_layout(scheme, k, geom);
  ops.geom = geom;
  ops.k = k;
  const DofLayout& L = ops.layout;
  const int N = L.size();
  const double h = geom.diameter;
  const double area = geom.area;
  const int nk = poly_dim(k);
  const int nk1 = poly_dim(k - 1);
  const int nk2 = poly_dim(k - 2);
  const int nkp1 = poly_dim(k + 1);
  const int nk3 = poly_dim(k - 3);

  const MonomialIntegrals I(geom, 2 * k + 2);
  const ScaledMonomials mkp1(geom, k + 1);
  const ScaledMonomials mk(geom, k);
  const Rule1D lob = edge_rule_gauss_lobatto(k);
  const Rule1D gl = gauss_legendre(k + 2);

  ops.mass_k = monomial_mass(I, k, k);
  ops.mass_km1 = monomial_mass(I, k - 1, k - 1);
  const Eigen::MatrixXd mass_vec = block_diag2(ops.mass_k);

  // Boundary integrals: bc[c][j] = int_{dK} m_b v_c n_j, bnd = int_{dK} (grad m_a . n) v_c.
  Eigen::MatrixXd bc[2][2];
  for (auto& row : bc)
    for (auto& m : row) m = Eigen::MatrixXd::Zero(nkp1, N);
  Eigen::MatrixXd bnd = Eigen::MatrixXd::Zero(2 * nk, N);
  for (int e = 0; e < geom.num_vertices(); ++e) {
    const EdgeGeom& E = geom.edges[static_cast<std::size_t>(e)];
    for (std::size_t q = 0; q < gl.points.size(); ++q) {
      const double t = gl.points[q];
      const double w = 0.5 * E.length * gl.weights[q];
      const Vec2 x = E.start + 0.5 * (t + 1.0) * (E.end - E.start);
      const Eigen::VectorXd mv = mkp1.values(x);
      const Eigen::VectorXd dn = mk.gradients(x) * E.normal;
      for (int j = 0; j <= k; ++j) {
        const double lj = w * lagrange(lob.points, j, t);
        for (int c = 0; c < 2; ++c) {
          const int col = L.edge_node_dof(e, j, c);
          bc[c][0].col(col) += (lj * E.normal.x()) * mv;
          bc[c][1].col(col) += (lj * E.normal.y()) * mv;
          bnd.block(c * nk, col, nk, 1) += lj * dn;
        }
      }
    }
  }
  ops.flux_moments = bc[0][0] + bc[1][1];
  const Eigen::MatrixXd& FM = ops.flux_moments;

  ops.dof_eval = dof_evaluation(L, geom, I);

  // Moments against [P_{k-2}]^2.
  ops.moments_km2 = Eigen::MatrixXd::Zero(2 * nk2, N);
  if (scheme == Scheme::non_div_free) {
    for (int c = 0; c < 2; ++c)
      for (int a = 0; a < nk2; ++a) ops.moments_km2(c * nk2 + a, L.moment_dof(c, a)) = area;
  } else {
    // [P_{k-2}]^2 = grad P_{k-1} + s^perp P_{k-3}; gradient moments by parts,
    // perp moments read from the DoFs.
    Eigen::MatrixXd gen = Eigen::MatrixXd::Zero(2 * nk2, N);
    for (int b = 1; b < nk1; ++b) {
      gen.row(b - 1) = h * FM.row(b);
      gen(b - 1, L.div_dof(b)) -= area;
    }
    for (int g = 0; g < nk3; ++g) gen(nk1 - 1 + g, L.perp_dof(g)) = area;
    Eigen::MatrixXd T(2 * nk2, 2 * nk2);
    T << grad_basis(k - 2), perp_basis(k - 2);
    ops.moments_km2 = solve_checked(T.transpose(), gen, "P_{k-2} moment decomposition");
  }
  const Eigen::MatrixXd& MOM = ops.moments_km2;

  // H1 projection.
  const Eigen::MatrixXd lap =
      (derivative_matrix(k - 1, 0) * derivative_matrix(k, 0) + derivative_matrix(k - 1, 1) * derivative_matrix(k, 1)) /
      (h * h);
  Eigen::MatrixXd rhs(2 * nk, N);
  for (int c = 0; c < 2; ++c)
    rhs.middleRows(c * nk, nk) = -lap.transpose() * MOM.middleRows(c * nk2, nk2) + bnd.middleRows(c * nk, nk);
  Eigen::MatrixXd G = block_diag2(monomial_grad_gram(I, h, k));
  for (int c = 0; c < 2; ++c) {
    G.row(c * nk).setZero();
    G.block(c * nk, c * nk, 1, nk) = ops.mass_k.row(0) / area;
    rhs.row(c * nk) = MOM.row(c * nk2) / area;
  }
  ops.pi_nabla = solve_checked(G, rhs, "H1 projection");

  // Divergence and pressure coupling.
  if (scheme == Scheme::div_free) {
    Eigen::MatrixXd divM = Eigen::MatrixXd::Zero(nk1, N);
    divM.row(0) = FM.row(0);
    for (int a = 1; a < nk1; ++a) divM(a, L.div_dof(a)) = area / h;
    ops.div = solve_spd(ops.mass_km1, divM, "P_{k-1}");
    ops.b_loc = divM;
  } else {
    ops.b_loc = FM.topRows(nk1);
    for (int c = 0; c < 2; ++c)
      ops.b_loc -= derivative_matrix(k - 1, c).transpose() * MOM.middleRows(c * nk2, nk2) / h;
  }

  // L2 projection onto [P_k]^2.
  Eigen::MatrixXd mom_k(2 * nk, N);
  if (scheme == Scheme::div_free) {
    const Eigen::MatrixXd C = complement_basis(I, area, k);
    const Eigen::MatrixXd div_mom = monomial_mass(I, k - 1, k + 1).transpose() * ops.div;
    Eigen::MatrixXd gen = Eigen::MatrixXd::Zero(2 * nk, N);
    for (int b = 1; b < nkp1; ++b) gen.row(b - 1) = h * (FM.row(b) - div_mom.row(b));
    for (int g = 0; g < nk3; ++g) gen(nkp1 - 1 + g, L.perp_dof(g)) = area;
    gen.bottomRows(C.cols()) = C.transpose() * mass_vec * ops.pi_nabla;
    Eigen::MatrixXd T(2 * nk, 2 * nk);
    T << grad_basis(k), embed_vector(k - 2, k) * perp_basis(k - 2), C;
    mom_k = solve_checked(T.transpose(), gen, "P_k moment decomposition");
  } else {
    // Moments beyond degree k-2 follow the enhancement: v and its H1
    // projection share moments against the L2-complement of P_{k-2}.
    const Eigen::MatrixXd m_low = monomial_mass(I, k - 2, k - 2);
    const Eigen::MatrixXd m_low_k = monomial_mass(I, k - 2, k);
    const Eigen::MatrixXd P = solve_spd(m_low, m_low_k, "P_{k-2}");
    const Eigen::MatrixXd R = ops.mass_k - m_low_k.transpose() * P;
    for (int c = 0; c < 2; ++c)
      mom_k.middleRows(c * nk, nk) =
          P.transpose() * MOM.middleRows(c * nk2, nk2) + R.transpose() * ops.pi_nabla.middleRows(c * nk, nk);
  }
  ops.pi_zero = solve_spd(mass_vec, mom_k, "P_k");
  ops.pi_zero_km2 = solve_spd(block_diag2(monomial_mass(I, k - 2, k - 2)), MOM, "P_{k-2}");

  // Gradient projection onto [P_{k-1}]^{2x2}.
  ops.grad_proj.resize(4 * nk1, N);
  for (int c = 0; c < 2; ++c) {
    for (int j = 0; j < 2; ++j) {
      const Eigen::MatrixXd m = bc[c][j].topRows(nk1) -
                                derivative_matrix(k - 1, j).transpose() * MOM.middleRows(c * nk2, nk2) / h;
      ops.grad_proj.middleRows((2 * c + j) * nk1, nk1) = solve_spd(ops.mass_km1, m, "P_{k-1}");
    }
  }
  ops.restriction = Eigen::MatrixXd::Identity(N, N);
  return ops;
}

LocalOperators compute_reduced(int k, const ElementGeom& geom) {
  auto full = std::make_shared<LocalOperators>(compute_unreduced(Scheme::div_free, k, geom));
  LocalOperators ops;
  ops.layout = build_dof_layout(Scheme::reduced, k, geom);
  ops.geom = geom;
  ops.k = k;
  const int n = ops.layout.size();
  const int nf = full->layout.size();
  const MonomialIntegrals I(geom, k);
  const double area = geom.area;

  // The reduced space keeps div v constant, so the divergence moments are
  // fixed by the total flux.
  Eigen::MatrixXd E = Eigen::MatrixXd::Zero(nf, n);
  E.topRows(n).setIdentity();
  const Eigen::RowVectorXd flux = full->flux_moments.row(0).head(n);
  for (int a = 1; a < poly_dim(k - 1); ++a) {
    const auto [ea, eb] = mono_exponents(a);
    E.row(full->layout.div_dof(a)) = (geom.diameter * I(ea, eb) / (area * area)) * flux;
  }

  ops.restriction = E;
  ops.pi_nabla = full->pi_nabla * E;
  ops.pi_zero = full->pi_zero * E;
  ops.pi_zero_km2 = full->pi_zero_km2 * E;
  ops.moments_km2 = full->moments_km2 * E;
  ops.div = full->div * E;
  ops.grad_proj = full->grad_proj * E;
  ops.flux_moments = full->flux_moments * E;
  ops.b_loc = full->b_loc.topRows(1) * E;
  ops.dof_eval = full->dof_eval;
  ops.mass_k = full->mass_k;
  ops.mass_km1 = full->mass_km1;
  ops.full = std::move(full);
  return ops;
}

void check_spd(const Eigen::Matrix2d& K) {
  const double scale = K.cwiseAbs().maxCoeff();
  if (!K.allFinite() || !(scale > 0.0) || std::abs(K(0, 1) - K(1, 0)) > 1e-12 * scale || !(K(0, 0) > 0.0) ||
      !(K.determinant() > 0.0))
    throw InvalidParameter("permeability tensor must be symmetric positive definite");
}

Eigen::MatrixXd symmetrized(const Eigen::MatrixXd& A) { return 0.5 * (A + A.transpose()); }

}  // namespace

LocalOperators compute_local_operators(Scheme scheme, int k, const ElementGeom& geom) {
  if (k < 2) throw UnsupportedError("polynomial degree k must be at least 2 (got " + std::to_string(k) + ")");
  if (scheme == Scheme::reduced) return compute_reduced(k, geom);
  return compute_unreduced(scheme, k, geom);
}

Eigen::MatrixXd compute_pi_nabla(const DofLayout& layout, const ElementGeom& geom) {
  return compute_local_operators(layout.scheme, layout.k, geom).pi_nabla;
}

Eigen::MatrixXd compute_pi_zero(const DofLayout& layout, const ElementGeom& geom, const Eigen::MatrixXd& pi_nabla) {
  const LocalOperators ops = compute_local_operators(layout.scheme, layout.k, geom);
  if (pi_nabla.rows() != ops.pi_nabla.rows() || pi_nabla.cols() != ops.pi_nabla.cols())
    throw InvalidParameter("pi_nabla has the wrong shape for this layout");
  return ops.pi_zero;
}

Eigen::MatrixXd divergence_matrix(const DofLayout& layout, const ElementGeom& geom) {
  if (layout.scheme == Scheme::non_div_free)
    throw UnsupportedError("divergence reconstruction is not available for the non-div-free space");
  return compute_local_operators(layout.scheme, layout.k, geom).div;
}

Eigen::MatrixXd local_b_form(const DofLayout& layout, const ElementGeom& geom) {
  return compute_local_operators(layout.scheme, layout.k, geom).b_loc;
}

LocalForms local_darcy_form(const LocalOperators& ops, const Eigen::Matrix2d& K) {
  check_spd(K);
  if (ops.scheme() == Scheme::reduced) {
    const LocalForms f = local_darcy_form(*ops.full, K);
    const Eigen::MatrixXd& E = ops.restriction;
    return {symmetrized(E.transpose() * f.A_darcy * E), {}, f.alpha};
  }
  const Eigen::Matrix2d Kinv = K.inverse();
  const int nk = static_cast<int>(ops.mass_k.rows());
  Eigen::MatrixXd W(2 * nk, 2 * nk);
  W << Kinv(0, 0) * ops.mass_k, Kinv(0, 1) * ops.mass_k, Kinv(1, 0) * ops.mass_k, Kinv(1, 1) * ops.mass_k;
  const Eigen::MatrixXd& P = ops.pi_zero;
  const Eigen::MatrixXd cons = P.transpose() * W * P;
  LocalForms f;
  f.alpha = cons.trace() / ops.size();
  const Eigen::MatrixXd R = ops.restriction - ops.dof_eval * P;
  f.A_darcy = symmetrized(cons + f.alpha * R.transpose() * R);
  return f;
}

LocalForms local_brinkman_form(const LocalOperators& ops, double mu, const Eigen::Matrix2d& K) {
  if (!(mu > 0.0) || !std::isfinite(mu)) throw InvalidParameter("viscosity mu must be positive");
  if (ops.scheme() == Scheme::reduced) {
    const LocalForms f = local_brinkman_form(*ops.full, mu, K);
    const Eigen::MatrixXd& E = ops.restriction;
    return {symmetrized(E.transpose() * f.A_darcy * E), symmetrized(E.transpose() * f.A_grad * E), f.alpha};
  }
  LocalForms f = local_darcy_form(ops, K);
  const MonomialIntegrals I(ops.geom, 2 * ops.k);
  const Eigen::MatrixXd G = block_diag2(monomial_grad_gram(I, ops.geom.diameter, ops.k));
  const Eigen::MatrixXd& P = ops.pi_nabla;
  const Eigen::MatrixXd R = ops.restriction - ops.dof_eval * P;
  f.A_grad = symmetrized(mu * (P.transpose() * G * P + R.transpose() * R));
  return f;
}

Eigen::VectorXd interpolate_dofs(const DofLayout& layout, const ElementGeom& geom, const VectorField& field,
                                 int quad_degree) {
  const int k = layout.k;
  const int degree = std::max(quad_degree, 2 * k + 4);
  const double area = geom.area;
  const double h = geom.diameter;
  Eigen::VectorXd dofs = Eigen::VectorXd::Zero(layout.size());

  const std::vector<Vec2> pts = dof_points(layout, geom);
  std::vector<Vec2> values(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) values[i] = field(pts[i]);

  const bool need_moments = layout.size() > layout.boundary_size();
  QuadratureRule rule;
  std::vector<Vec2> fq;
  if (need_moments) {
    rule = polygon_quadrature(geom, degree);
    fq.resize(rule.size());
    for (std::size_t q = 0; q < rule.size(); ++q) fq[q] = field(rule.points[q]);
  }
  const ScaledMonomials mk(geom, k);

  for (int i = 0; i < layout.size(); ++i) {
    const DofDescriptor& d = layout.dofs[static_cast<std::size_t>(i)];
    switch (d.kind) {
      case DofKind::vertex: dofs[i] = values[static_cast<std::size_t>(d.entity)][d.component]; break;
      case DofKind::edge: {
        const auto p = static_cast<std::size_t>(layout.n_vertices + d.entity * (k - 1) + d.index);
        dofs[i] = values[p][d.component];
        break;
      }
      case DofKind::perp_moment: {
        double s = 0.0;
        for (std::size_t q = 0; q < rule.size(); ++q) {
          const Vec2 xi = mk.local(rule.points[q]);
          const double m = mk.values(rule.points[q])[d.index];
          s += rule.weights[q] * m * (fq[q].x() * xi.y() - fq[q].y() * xi.x());
        }
        dofs[i] = s / area;
        break;
      }
      case DofKind::moment: {
        double s = 0.0;
        for (std::size_t q = 0; q < rule.size(); ++q)
          s += rule.weights[q] * mk.values(rule.points[q])[d.index] * fq[q][d.component];
        dofs[i] = s / area;
        break;
      }
      case DofKind::div_moment: {
        // int div v m = int_{dK} m v.n - int v . grad m
        double s = 0.0;
        for (std::size_t q = 0; q < rule.size(); ++q)
          s -= rule.weights[q] * fq[q].dot(mk.gradients(rule.points[q]).row(d.index).transpose());
        const Rule1D gl = gauss_legendre(degree / 2 + 1);
        for (const EdgeGeom& e : geom.edges) {
          for (std::size_t q = 0; q < gl.points.size(); ++q) {
            const Vec2 x = e.start + 0.5 * (gl.points[q] + 1.0) * (e.end - e.start);
            s += 0.5 * e.length * gl.weights[q] * mk.values(x)[d.index] * field(x).dot(e.normal);
          }
        }
        dofs[i] = s * h / area;
        break;
      }
    }
  }
  return dofs;
}

}  // namespace polyvem
