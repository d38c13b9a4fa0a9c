#include "polyvem/errors.hpp"
#include "polyvem/verify.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <memory>
#include <numbers>
#include <random>
#include <sstream>

namespace polyvem {
namespace {

constexpr double pi = std::numbers::pi;

// Central differences of a field, used as an oracle for the analytic
// derivatives carried by each case.
Eigen::Matrix2d fd_grad(const VectorField& u, const Vec2& x, double d = 1e-5) {
  Eigen::Matrix2d g;
  for (int j = 0; j < 2; ++j) {
    Vec2 e = Vec2::Zero();
    e[j] = d;
    const Vec2 col = (u(x + e) - u(x - e)) / (2 * d);
    g(0, j) = col.x();
    g(1, j) = col.y();
  }
  return g;
}

Vec2 fd_lap(const VectorField& u, const Vec2& x, double d = 1e-3) {
  const Vec2 ex(d, 0), ey(0, d);
  return (u(x + ex) + u(x - ex) + u(x + ey) + u(x - ey) - 4.0 * u(x)) / (d * d);
}

class CaseConsistency : public ::testing::TestWithParam<std::string> {};

TEST_P(CaseConsistency, DerivativesMatchFiniteDifferences) {
  const ManufacturedCase c = case_by_name(GetParam(), 3, 2);
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> u01(0.05, 0.95);
  for (int i = 0; i < 100; ++i) {
    const Vec2 x(u01(rng), u01(rng));
    const Eigen::Matrix2d g = c.grad_u(x);
    EXPECT_LT((g - fd_grad(c.u, x)).norm(), 1e-6 * std::max(1.0, g.norm()));
    EXPECT_NEAR(c.div_u(x), g.trace(), 1e-12 * std::max(1.0, g.norm()));
    const Vec2 gp = c.grad_p(x);
    Vec2 fd_gp;
    for (int j = 0; j < 2; ++j) {
      Vec2 e = Vec2::Zero();
      e[j] = 1e-5;
      fd_gp[j] = (c.p(x + e) - c.p(x - e)) / 2e-5;
    }
    EXPECT_LT((gp - fd_gp).norm(), 1e-6 * std::max(1.0, gp.norm()));
    if (c.lap_u) {
      const Vec2 l = c.lap_u(x);
      EXPECT_LT((l - fd_lap(c.u, x)).norm(), 1e-4 * std::max(1.0, l.norm()));
    }
  }
}

INSTANTIATE_TEST_SUITE_P(Builtin, CaseConsistency, ::testing::ValuesIn(builtin_case_names()));

TEST(Cases, UnknownNameIsRejected) { EXPECT_THROW((void)case_by_name("nope"), InvalidParameter); }

TEST(Cases, Test2IsSolenoidalWithZeroMeanPressure) {
  const ManufacturedCase c = test2_brinkman();
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  for (int i = 0; i < 100; ++i) {
    const Vec2 x(u01(rng), u01(rng));
    EXPECT_NEAR(c.div_u(x), 0.0, 1e-12);
  }
  // tensor Gauss rule for the pressure mean
  const Rule1D r = gauss_legendre(12);
  double mean = 0.0;
  for (std::size_t i = 0; i < r.points.size(); ++i)
    for (std::size_t j = 0; j < r.points.size(); ++j)
      mean += 0.25 * r.weights[i] * r.weights[j] * c.p(Vec2(0.5 * (r.points[i] + 1), 0.5 * (r.points[j] + 1)));
  EXPECT_NEAR(mean, 0.0, 1e-12);
}

TEST(Cases, Test1HasZeroNormalTrace) {
  for (const ManufacturedCase& c : {test1_darcy(), test1_printed_darcy()}) {
    for (double t : {0.1, 0.37, 0.8}) {
      EXPECT_NEAR(c.u(Vec2(0.0, t)).x(), 0.0, 1e-14);
      EXPECT_NEAR(c.u(Vec2(1.0, t)).x(), 0.0, 1e-14);
      EXPECT_NEAR(c.u(Vec2(t, 0.0)).y(), 0.0, 1e-14);
      EXPECT_NEAR(c.u(Vec2(t, 1.0)).y(), 0.0, 1e-14);
    }
  }
  const Vec2 x(0.3, 0.6);
  EXPECT_LT((test1_darcy().u(x) + test1_darcy().grad_p(x)).norm(), 1e-14);
  EXPECT_LT((test1_printed_darcy().u(x) - test1_printed_darcy().grad_p(x)).norm(), 1e-14);
}

TEST(Poly2, AlgebraAndIntegral) {
  const Poly2 a = Poly2::monomial(2, 1, 3.0) + Poly2::constant(1.0);  // 3 x^2 y + 1
  const Poly2 b = Poly2::monomial(0, 1);                              // y
  const Poly2 p = a * b;
  EXPECT_DOUBLE_EQ(p(Vec2(2.0, 3.0)), (3 * 4 * 3 + 1) * 3.0);
  EXPECT_DOUBLE_EQ(p.integral_unit_square(), 3.0 / 3.0 / 3.0 + 0.5);
  EXPECT_DOUBLE_EQ(a.dx().coeff(1, 1), 6.0);
  EXPECT_DOUBLE_EQ(a.dy().coeff(2, 0), 3.0);
  EXPECT_DOUBLE_EQ((a - a)(Vec2(0.4, 0.2)), 0.0);
  EXPECT_EQ(Poly2::random(3, 9).degree(), 3);
}

TEST(Errors, ZeroSolutionReportsNormOfExact) {
  auto mesh = std::make_shared<const PolyMesh>(generate_mesh(MeshFamily::square, 1.0 / 16, 0));
  const ManufacturedCase c = test1_darcy();
  ProblemSpec spec;
  spec.equation = Equation::darcy;
  const DiscreteSolution zero = solve_darcy(mesh, spec);
  const ErrorReport r = compute_errors(zero, c);
  // |grad p|^2 integrates to pi^2 / 2, p^2 to 1 / 4, (div u)^2 to pi^4
  EXPECT_NEAR(r.err_u_L2, pi / std::sqrt(2.0), 1e-8);
  EXPECT_NEAR(r.err_p_L2, 0.5, 1e-8);
  EXPECT_NEAR(r.err_div, pi * pi, 1e-7);
  EXPECT_NEAR(r.err_u_Hdiv, std::sqrt(pi * pi / 2 + pi * pi * pi * pi), 1e-7);
  EXPECT_NEAR(r.err_u_H1, pi * pi, 1e-7);
}

TEST(Errors, HdivDominatesL2) {
  auto mesh = std::make_shared<const PolyMesh>(generate_mesh(MeshFamily::voronoi, 0.25, 1));
  const ManufacturedCase c = test1_darcy();
  for (Scheme s : {Scheme::div_free, Scheme::non_div_free}) {
    const ErrorReport r = compute_errors(solve_darcy(mesh, make_problem(c, s, 2)), c);
    EXPECT_GE(r.err_u_Hdiv, r.err_u_L2);
    EXPECT_GT(r.ndof_u, 0);
    EXPECT_GT(r.ndof_p, 0);
    if (s == Scheme::div_free) EXPECT_LT(r.err_div_best, 1e-10);
  }
}

TEST(Rates, ObservedRate) {
  EXPECT_NEAR(observed_rate(1.0, 0.125, 0.5, 0.25), 3.0, 1e-14);
  EXPECT_NEAR(observed_rate(4.0, 1.0, 1.0, 0.5), 2.0, 1e-14);
}

TEST(Convergence, CsvIsDeterministicAndOrdered) {
  ConvergenceConfig cfg;
  cfg.case_name = "test1";
  cfg.family = MeshFamily::square;
  cfg.schemes = {Scheme::div_free, Scheme::non_div_free};
  cfg.hs = {0.25, 0.125};
  const auto tables = run_convergence(cfg);
  ASSERT_EQ(tables.size(), 2u);
  const std::string a = convergence_csv(tables);
  EXPECT_EQ(a, convergence_csv(run_convergence(cfg)));
  std::istringstream in(a);
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header,
            "scheme,family,k,mu,h,ndof_u,ndof_p,err_u_H1,err_u_Hdiv,err_u_L2,err_p_L2,"
            "rate_u_H1,rate_u_Hdiv,rate_u_L2,rate_p_L2,solve_seconds");
  int rows = 0;
  for (std::string line; std::getline(in, line);) {
    ++rows;
    EXPECT_EQ(line.substr(line.rfind(',') + 1), "0");
  }
  EXPECT_EQ(rows, 4);
  EXPECT_FALSE(std::isnan(tables[0].rows[1].rate_u_L2));
  EXPECT_TRUE(std::isnan(tables[0].rows[0].rate_u_L2));
}

TEST(Convergence, FailedSolvesAreRecorded) {
  ConvergenceConfig cfg;
  cfg.case_name = "test2";
  cfg.family = MeshFamily::square;
  cfg.hs = {0.5, 0.25};
  cfg.mus = {0.0, 1.0};
  const auto tables = run_convergence(cfg);
  ASSERT_EQ(tables.size(), 2u);
  for (const auto& row : tables[0].rows) {
    EXPECT_FALSE(row.error.empty());
    EXPECT_TRUE(std::isnan(row.errors.err_u_H1));
  }
  for (const auto& row : tables[1].rows) EXPECT_TRUE(row.error.empty());
}

TEST(Convergence, ReducedDarcyIsRejected) {
  ConvergenceConfig cfg;
  cfg.schemes = {Scheme::reduced};
  cfg.hs = {0.5};
  EXPECT_THROW((void)run_convergence(cfg), InvalidParameter);
}

TEST(InfSup, StableUnderRefinement) {
  std::vector<double> beta;
  for (double h : {0.25, 0.125, 0.0625}) beta.push_back(inf_sup_constant(generate_mesh(MeshFamily::square, h, 0), 2));
  const auto [lo, hi] = std::minmax_element(beta.begin(), beta.end());
  EXPECT_GT(*lo, 0.0);
  EXPECT_LT((*hi - *lo) / *hi, 0.2);
}

}  // namespace
}  // namespace polyvem
