#include "polyvem/errors.hpp"
#include "polyvem/vem_local.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <Eigen/Dense>

#include <cmath>
#include <numbers>

namespace polyvem {
namespace {

using testing::poly_field;
using testing::random_coeffs;
using testing::rel_diff;
using testing::test_elements;

const Scheme kSchemes[] = {Scheme::div_free, Scheme::reduced, Scheme::non_div_free};

Eigen::Matrix2d anisotropic_K() {
  Eigen::Matrix2d K;
  K << 2.0, 0.3, 0.3, 0.5;
  return K;
}

// [P_k]^2 coefficients of a field with constant divergence: curl of a random
// psi in P_{k+1} plus c (x - x_K).
Eigen::VectorXd constant_div_coeffs(const ElementGeom& g, int k, std::uint64_t seed) {
  const int n1 = poly_dim(k + 1), n = poly_dim(k);
  Eigen::VectorXd psi = random_coeffs(k + 1, seed).head(n1);
  Eigen::VectorXd c(2 * n);
  c.head(n) = derivative_matrix(k + 1, 1) * psi;
  c.tail(n) = -derivative_matrix(k + 1, 0) * psi;
  c /= g.diameter;
  c[mono_index(1, 0)] += 0.7;
  c[n + mono_index(0, 1)] += 0.7;
  return c;
}

TEST(DofLayout, CountsOnSquare) {
  const DofLayout df = build_dof_layout(Scheme::div_free, 2, 4);
  EXPECT_EQ(df.size(), 18);
  int vert = 0, edge = 0, perp = 0, div = 0;
  for (const auto& d : df.dofs) {
    vert += d.kind == DofKind::vertex;
    edge += d.kind == DofKind::edge;
    perp += d.kind == DofKind::perp_moment;
    div += d.kind == DofKind::div_moment;
  }
  EXPECT_EQ(vert, 8);
  EXPECT_EQ(edge, 8);
  EXPECT_EQ(perp, 0);
  EXPECT_EQ(div, 2);
  EXPECT_EQ(build_dof_layout(Scheme::reduced, 2, 4).size(), 16);
  EXPECT_EQ(build_dof_layout(Scheme::non_div_free, 2, 4).size(), 18);
}

TEST(DofLayout, ClosedFormCounts) {
  for (int k = 2; k <= 6; ++k) {
    for (int n = 3; n <= 9; ++n) {
      const int df = 2 * n * k + (k - 1) * (k - 2) / 2 + (k + 1) * k / 2 - 1;
      const int red = 2 * n * k + (k - 1) * (k - 2) / 2;
      const int ndf = 2 * n * k + (k - 1) * k;
      EXPECT_EQ(build_dof_layout(Scheme::div_free, k, n).size(), df);
      EXPECT_EQ(build_dof_layout(Scheme::reduced, k, n).size(), red);
      EXPECT_EQ(build_dof_layout(Scheme::non_div_free, k, n).size(), ndf);
      EXPECT_EQ(df, ndf);
      for (Scheme s : kSchemes) EXPECT_EQ(local_dof_count(s, k, n), build_dof_layout(s, k, n).size());
    }
  }
}

TEST(DofLayout, RejectsLowDegree) {
  EXPECT_THROW((void)build_dof_layout(Scheme::div_free, 1, 4), UnsupportedError);
}

TEST(SchemeNames, RoundTrip) {
  for (Scheme s : kSchemes) EXPECT_EQ(parse_scheme(to_string(s)), s);
  EXPECT_EQ(parse_scheme("div_free"), Scheme::div_free);
  EXPECT_EQ(parse_scheme("non-div-free"), Scheme::non_div_free);
  EXPECT_THROW((void)parse_scheme("nope"), InvalidParameter);
}

class LocalOps : public ::testing::TestWithParam<std::tuple<Scheme, int>> {};

TEST_P(LocalOps, ProjectorsReproducePolynomials) {
  const auto [scheme, k] = GetParam();
  for (const auto& [name, g] : test_elements()) {
    SCOPED_TRACE(name);
    const LocalOperators op = compute_local_operators(scheme, k, g);
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
      const Eigen::VectorXd c =
          scheme == Scheme::reduced ? constant_div_coeffs(g, k, seed) : random_coeffs(k, seed);
      const Eigen::VectorXd v = interpolate_dofs(op.layout, g, poly_field(g, k, c));
      EXPECT_LT(rel_diff(op.pi_nabla * v, c), 1e-11);
      EXPECT_LT(rel_diff(op.pi_zero * v, c), 1e-11);
    }
  }
}

TEST_P(LocalOps, Idempotence) {
  const auto [scheme, k] = GetParam();
  // reduced: dof_eval maps into the full space, so Pi o D is not defined
  if (scheme == Scheme::reduced) GTEST_SKIP();
  for (const auto& [name, g] : test_elements()) {
    SCOPED_TRACE(name);
    const LocalOperators op = compute_local_operators(scheme, k, g);
    const Eigen::MatrixXd& D = op.dof_eval;
    EXPECT_LT(rel_diff(op.pi_nabla * D * op.pi_nabla, op.pi_nabla), 1e-11);
    EXPECT_LT(rel_diff(op.pi_zero * D * op.pi_zero, op.pi_zero), 1e-11);
    EXPECT_LT(rel_diff(op.pi_nabla * D, Eigen::MatrixXd::Identity(D.cols(), D.cols())), 1e-11);
    EXPECT_LT(rel_diff(op.pi_zero * D, Eigen::MatrixXd::Identity(D.cols(), D.cols())), 1e-11);
  }
}

TEST_P(LocalOps, LowOrderMomentsConsistent) {
  const auto [scheme, k] = GetParam();
  if (scheme == Scheme::reduced) GTEST_SKIP();
  for (const auto& [name, g] : test_elements()) {
    SCOPED_TRACE(name);
    const LocalOperators op = compute_local_operators(scheme, k, g);
    const MonomialIntegrals I(g, 2 * k);
    // moments of Pi0_k v against [P_{k-2}]^2 equal those of v
    EXPECT_LT(rel_diff(vector_mass(I, k - 2, k) * op.pi_zero, op.moments_km2), 1e-11);
    const Eigen::MatrixXd Mkm2 = vector_mass(I, k - 2, k - 2);
    EXPECT_LT(rel_diff(Mkm2 * op.pi_zero_km2, op.moments_km2), 1e-11);
  }
}

TEST_P(LocalOps, PiNablaSatisfiesDefiningRelations) {
  // Oracle: for q in [P_k]^2, int grad q : grad v = -int lap q . v + int_dK (grad q . n) . v
  // with the boundary trace rebuilt from the Lobatto point values and the
  // volume term from the degree k-2 moments.
  const auto [scheme, k] = GetParam();
  if (scheme == Scheme::reduced) GTEST_SKIP();
  const int n = poly_dim(k), n2 = poly_dim(k - 2);
  const Rule1D lob = edge_rule_gauss_lobatto(k);
  const Rule1D gl = gauss_legendre(k + 2);
  for (const auto& [name, g] : test_elements()) {
    SCOPED_TRACE(name);
    const LocalOperators op = compute_local_operators(scheme, k, g);
    const ScaledMonomials m(g, k);
    const double h = g.diameter;
    const Eigen::MatrixXd lap =
        (derivative_matrix(k - 1, 0) * derivative_matrix(k, 0) + derivative_matrix(k - 1, 1) * derivative_matrix(k, 1)) /
        (h * h);
    const Eigen::MatrixXd gram = monomial_grad_gram(MonomialIntegrals(g, 2 * k), h, k);
    for (int trial = 0; trial < 4; ++trial) {
      Eigen::VectorXd v = Eigen::VectorXd::Zero(op.size());
      if (trial < 3) v[trial * 5 % op.size()] = 1.0;
      else v = random_coeffs(k + 4, 99).head(op.size());
      const Eigen::VectorXd p = op.pi_nabla * v;
      const Eigen::VectorXd mom = op.moments_km2 * v;
      for (int c = 0; c < 2; ++c) {
        Eigen::VectorXd rhs = -lap.transpose() * mom.segment(c * n2, n2);
        for (int e = 0; e < g.num_vertices(); ++e) {
          const EdgeGeom& E = g.edges[static_cast<std::size_t>(e)];
          for (std::size_t q = 0; q < gl.points.size(); ++q) {
            const double t = gl.points[q];
            double val = 0.0;
            for (int j = 0; j <= k; ++j) {
              double lj = 1.0;
              for (int i = 0; i <= k; ++i)
                if (i != j) lj *= (t - lob.points[static_cast<std::size_t>(i)]) /
                                  (lob.points[static_cast<std::size_t>(j)] - lob.points[static_cast<std::size_t>(i)]);
              val += lj * v[op.layout.edge_node_dof(e, j, c)];
            }
            const Vec2 x = E.start + 0.5 * (1.0 + t) * (E.end - E.start);
            rhs += 0.5 * E.length * gl.weights[q] * val * (m.gradients(x) * E.normal);
          }
        }
        const Eigen::VectorXd lhs = gram * p.segment(c * n, n);
        const double scale = std::max(1.0, rhs.cwiseAbs().maxCoeff());
        EXPECT_LT((lhs - rhs).tail(n - 1).cwiseAbs().maxCoeff() / scale, 1e-11) << "c=" << c;
        // anchoring: int Pi v = int v
        const Eigen::MatrixXd M = monomial_mass(MonomialIntegrals(g, 2 * k), 0, k);
        EXPECT_NEAR((M * p.segment(c * n, n))[0], mom[c * n2], 1e-11 * std::max(1.0, std::abs(mom[c * n2])));
      }
    }
  }
}

TEST_P(LocalOps, DarcyFormConsistency) {
  const auto [scheme, k] = GetParam();
  const Eigen::Matrix2d K = anisotropic_K();
  const Eigen::Matrix2d Ki = K.inverse();
  for (const auto& [name, g] : test_elements()) {
    SCOPED_TRACE(name);
    const LocalOperators op = compute_local_operators(scheme, k, g);
    const LocalForms f = local_darcy_form(op, K);
    const Eigen::VectorXd c = scheme == Scheme::reduced ? constant_div_coeffs(g, k, 4) : random_coeffs(k, 4);
    const Eigen::VectorXd v = interpolate_dofs(op.layout, g, poly_field(g, k, c));
    // exact a(q, phi_i) = int K^{-1} q . Pi0 phi_i, by quadrature
    const QuadratureRule r = polygon_quadrature(g, 2 * k + 2);
    const ScaledMonomials m(g, k);
    Eigen::VectorXd exact = Eigen::VectorXd::Zero(op.size());
    for (std::size_t q = 0; q < r.size(); ++q) {
      const Vec2 kq = Ki * eval_vector_poly(m, c, r.points[q]);
      const Eigen::VectorXd mv = m.values(r.points[q]);
      const int n = m.size();
      exact += r.weights[q] * (op.pi_zero.topRows(n).transpose() * mv * kq.x() +
                               op.pi_zero.bottomRows(n).transpose() * mv * kq.y());
    }
    EXPECT_LT(rel_diff(f.A_darcy * v, exact), 1e-10);
    EXPECT_LT(rel_diff(f.A_darcy, f.A_darcy.transpose()), 1e-13);
  }
}

TEST_P(LocalOps, BrinkmanFormConsistencyAndSymmetry) {
  const auto [scheme, k] = GetParam();
  const double mu = 0.37;
  for (const auto& [name, g] : test_elements()) {
    SCOPED_TRACE(name);
    const LocalOperators op = compute_local_operators(scheme, k, g);
    const LocalForms f = local_brinkman_form(op, mu, Eigen::Matrix2d::Identity());
    const Eigen::VectorXd c = scheme == Scheme::reduced ? constant_div_coeffs(g, k, 6) : random_coeffs(k, 6);
    const Eigen::VectorXd v = interpolate_dofs(op.layout, g, poly_field(g, k, c));
    const QuadratureRule r = polygon_quadrature(g, 2 * k);
    const ScaledMonomials m(g, k);
    const int n = m.size();
    Eigen::VectorXd exact = Eigen::VectorXd::Zero(op.size());
    for (std::size_t q = 0; q < r.size(); ++q) {
      const Eigen::MatrixX2d G = m.gradients(r.points[q]);
      const Eigen::RowVector2d g1 = c.head(n).transpose() * G, g2 = c.tail(n).transpose() * G;
      exact += r.weights[q] * mu *
               (op.pi_nabla.topRows(n).transpose() * (G * g1.transpose()) +
                op.pi_nabla.bottomRows(n).transpose() * (G * g2.transpose()));
    }
    EXPECT_LT(rel_diff(f.A_grad * v, exact), 1e-10);
    const Eigen::MatrixXd A = f.total();
    EXPECT_LE((A - A.transpose()).cwiseAbs().maxCoeff(), 1e-13 * A.cwiseAbs().maxCoeff());
  }
}

TEST_P(LocalOps, StabilitySandwich) {
  const auto [scheme, k] = GetParam();
  std::mt19937_64 rng(11);
  std::normal_distribution<double> nd;
  for (const auto& [name, g] : test_elements()) {
    SCOPED_TRACE(name);
    const LocalOperators op = compute_local_operators(scheme, k, g);
    const LocalForms f = local_darcy_form(op, Eigen::Matrix2d::Identity());
    const MonomialIntegrals I(g, 2 * k);
    const Eigen::MatrixXd M = vector_mass(I, k, k);
    for (int t = 0; t < 200; ++t) {
      Eigen::VectorXd v(op.size());
      for (int i = 0; i < v.size(); ++i) v[i] = nd(rng);
      const Eigen::VectorXd p = op.pi_zero * v;
      const double cons = p.dot(M * p);
      const double ah = v.dot(f.A_darcy * v);
      EXPECT_GT(ah, 0.0);
      EXPECT_GE(ah, cons * (1.0 - 1e-12));
    }
  }
}

TEST_P(LocalOps, Unisolvence) {
  const auto [scheme, k] = GetParam();
  for (const auto& [name, g] : test_elements()) {
    SCOPED_TRACE(name);
    const LocalOperators op = compute_local_operators(scheme, k, g);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(op.dof_eval);
    EXPECT_EQ(svd.rank(), op.dof_eval.cols());
    EXPECT_GT(svd.singularValues().minCoeff(), 1e-10);
  }
}

INSTANTIATE_TEST_SUITE_P(SchemesAndDegrees, LocalOps,
                         ::testing::Combine(::testing::Values(Scheme::div_free, Scheme::reduced, Scheme::non_div_free),
                                            ::testing::Values(2, 3)),
                         [](const auto& info) {
                           std::string s = to_string(std::get<0>(info.param));
                           std::replace(s.begin(), s.end(), '-', '_');
                           return s + "_k" + std::to_string(std::get<1>(info.param));
                         });

TEST(Divergence, LinearAndRotation) {
  for (const auto& [name, g] : test_elements()) {
    SCOPED_TRACE(name);
    for (Scheme s : {Scheme::div_free, Scheme::reduced}) {
      const LocalOperators op = compute_local_operators(s, 2, g);
      const Eigen::VectorXd lin = interpolate_dofs(op.layout, g, [](const Vec2& x) { return x; });
      const Eigen::VectorXd rot = interpolate_dofs(op.layout, g, [](const Vec2& x) { return Vec2(-x.y(), x.x()); });
      const Eigen::VectorXd dl = op.div * lin;
      EXPECT_NEAR(dl[0], 2.0, 1e-12);
      EXPECT_LT(dl.tail(dl.size() - 1).cwiseAbs().maxCoeff(), 1e-12);
      EXPECT_LT((op.div * rot).cwiseAbs().maxCoeff(), 1e-12);
      EXPECT_NEAR((op.b_loc * lin)[0], 2.0 * g.area, 1e-12);
      EXPECT_LT((op.b_loc * rot).cwiseAbs().maxCoeff(), 1e-12);
    }
  }
}

TEST(Divergence, RandomQuadraticMatchesSymbolic) {
  for (const auto& [name, g] : test_elements()) {
    SCOPED_TRACE(name);
    for (int k : {2, 3}) {
      const LocalOperators op = compute_local_operators(Scheme::div_free, k, g);
      const int n = poly_dim(k);
      const Eigen::VectorXd c = random_coeffs(k, 21);
      const Eigen::VectorXd v = interpolate_dofs(op.layout, g, poly_field(g, k, c));
      const Eigen::VectorXd exact =
          (derivative_matrix(k, 0) * c.head(n) + derivative_matrix(k, 1) * c.tail(n)) / g.diameter;
      EXPECT_LT(rel_diff(op.div * v, exact), 1e-12);
      EXPECT_LT(rel_diff(divergence_matrix(op.layout, g), op.div), 1e-12);
    }
  }
}

TEST(Divergence, UnavailableForNonDivFree) {
  const auto els = test_elements();
  EXPECT_THROW((void)divergence_matrix(build_dof_layout(Scheme::non_div_free, 2, els[0].geom), els[0].geom),
               UnsupportedError);
}

TEST(BForm, TwoRoutesAgree) {
  // b via the divergence reconstruction (div_free) and via the Green formula
  // (non_div_free) both equal a quadrature of div q times the pressure basis.
  for (const auto& [name, g] : test_elements()) {
    SCOPED_TRACE(name);
    for (int k : {2, 3}) {
      const int n = poly_dim(k);
      const Eigen::VectorXd c = random_coeffs(k, 31);
      const QuadratureRule r = polygon_quadrature(g, 2 * k);
      const ScaledMonomials m(g, k), mp(g, k - 1);
      Eigen::VectorXd exact = Eigen::VectorXd::Zero(mp.size());
      for (std::size_t q = 0; q < r.size(); ++q) {
        const Eigen::MatrixX2d G = m.gradients(r.points[q]);
        const double div = c.head(n).dot(G.col(0)) + c.tail(n).dot(G.col(1));
        exact += r.weights[q] * div * mp.values(r.points[q]);
      }
      for (Scheme s : {Scheme::div_free, Scheme::non_div_free}) {
        const LocalOperators op = compute_local_operators(s, k, g);
        const Eigen::VectorXd v = interpolate_dofs(op.layout, g, poly_field(g, k, c));
        EXPECT_LT(rel_diff(op.b_loc * v, exact), 1e-12) << to_string(s);
        EXPECT_LT(rel_diff(local_b_form(op.layout, g), op.b_loc), 1e-12);
      }
    }
  }
}

TEST(DarcyForm, ConstantFieldOnUnitSquare) {
  const ElementGeom g = test_elements()[0].geom;
  const LocalOperators op = compute_local_operators(Scheme::div_free, 2, g);
  const Eigen::VectorXd v = interpolate_dofs(op.layout, g, [](const Vec2&) { return Vec2(1.0, 0.0); });
  EXPECT_NEAR(v.dot(local_darcy_form(op, Eigen::Matrix2d::Identity()).A_darcy * v), 1.0, 1e-13);
  const Eigen::VectorXd p0 = op.pi_zero * interpolate_dofs(op.layout, g, [](const Vec2&) { return Vec2(0.0, 1.0); });
  EXPECT_NEAR(p0[poly_dim(2)], 1.0, 1e-13);
  EXPECT_LT(p0.head(poly_dim(2)).cwiseAbs().maxCoeff(), 1e-13);
}

TEST(DarcyForm, StabilizationScalesWithArea) {
  const ElementGeom big = polygon_geometry(std::vector<Vec2>{{0, 0}, {1, 0}, {1, 1}, {0, 1}});
  const ElementGeom small = polygon_geometry(std::vector<Vec2>{{0, 0}, {0.5, 0}, {0.5, 0.5}, {0, 0.5}});
  const double a1 = local_darcy_form(compute_local_operators(Scheme::div_free, 2, big), Eigen::Matrix2d::Identity()).alpha;
  const double a2 = local_darcy_form(compute_local_operators(Scheme::div_free, 2, small), Eigen::Matrix2d::Identity()).alpha;
  EXPECT_NEAR(a2 / a1, 0.25, 0.25 * 0.05);
}

TEST(DarcyForm, RejectsNonSpdTensor) {
  const LocalOperators op = compute_local_operators(Scheme::div_free, 2, test_elements()[0].geom);
  Eigen::Matrix2d K;
  K << 1.0, 0.0, 0.0, -1.0;
  EXPECT_THROW((void)local_darcy_form(op, K), InvalidParameter);
  K << 1.0, 0.5, 0.0, 1.0;
  EXPECT_THROW((void)local_darcy_form(op, K), InvalidParameter);
}

TEST(BrinkmanForm, ViscosityLimit) {
  const LocalOperators op = compute_local_operators(Scheme::div_free, 2, test_elements()[2].geom);
  const Eigen::MatrixXd Ad = local_darcy_form(op, Eigen::Matrix2d::Identity()).A_darcy;
  const LocalForms f = local_brinkman_form(op, 1e-12, Eigen::Matrix2d::Identity());
  const LocalForms f1 = local_brinkman_form(op, 1.0, Eigen::Matrix2d::Identity());
  EXPECT_LE((f.total() - Ad).cwiseAbs().maxCoeff(), 1e-12 * f1.A_grad.cwiseAbs().maxCoeff() * 1.0001);
  EXPECT_THROW((void)local_brinkman_form(op, 0.0, Eigen::Matrix2d::Identity()), InvalidParameter);
  EXPECT_THROW((void)local_brinkman_form(op, -1.0, Eigen::Matrix2d::Identity()), InvalidParameter);
}

TEST(Interpolation, ConstantField) {
  for (const auto& [name, g] : test_elements()) {
    const LocalOperators op = compute_local_operators(Scheme::div_free, 3, g);
    const Eigen::VectorXd v = interpolate_dofs(op.layout, g, [](const Vec2&) { return Vec2(0.3, -1.2); });
    for (int i = 0; i < op.layout.boundary_size(); ++i) EXPECT_DOUBLE_EQ(v[i], i % 2 ? -1.2 : 0.3);
    const Eigen::VectorXd p = op.pi_zero * v;
    EXPECT_NEAR(p[0], 0.3, 1e-12);
    EXPECT_NEAR(p[poly_dim(3)], -1.2, 1e-12);
  }
}

TEST(Interpolation, DivergenceMomentsMatchQuadrature) {
  using std::numbers::pi;
  const PolyMesh mesh = generate_mesh(MeshFamily::square, 1.0 / 16, 0);
  const ElementGeom g = element_geometry(mesh, 37);
  const VectorField u = [](const Vec2& x) {
    return Vec2(pi * std::sin(pi * x.x()) * std::cos(pi * x.y()), pi * std::cos(pi * x.x()) * std::sin(pi * x.y()));
  };
  const auto divu = [](const Vec2& x) { return 2 * pi * pi * std::cos(pi * x.x()) * std::cos(pi * x.y()); };
  const int k = 2;
  const DofLayout layout = build_dof_layout(Scheme::div_free, k, g);
  const Eigen::VectorXd v = interpolate_dofs(layout, g, u);
  const QuadratureRule r = polygon_quadrature(g, 20);
  const ScaledMonomials m(g, k - 1);
  for (int a = 1; a < poly_dim(k - 1); ++a) {
    double s = 0.0;
    for (std::size_t q = 0; q < r.size(); ++q) s += r.weights[q] * divu(r.points[q]) * m.values(r.points[q])[a];
    EXPECT_NEAR(v[layout.div_dof(a)], g.diameter / g.area * s, 1e-12);
  }
}

TEST(Interpolation, DofPointsOnBoundary) {
  for (const auto& [name, g] : test_elements()) {
    const DofLayout layout = build_dof_layout(Scheme::div_free, 4, g);
    const auto pts = dof_points(layout, g);
    ASSERT_EQ(static_cast<int>(pts.size()), layout.boundary_size() / 2);
    for (const auto& p : pts) EXPECT_TRUE(contains_point(g.vertices, p, 1e-12));
  }
}

}  // namespace
}  // namespace polyvem
