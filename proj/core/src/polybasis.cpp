#include "polyvem/polybasis.hpp"

#include "polyvem/errors.hpp"

#include <cmath>

namespace polyvem {

std::pair<int, int> mono_exponents(int index) {
  int d = 0;
  while (poly_dim(d) <= index) ++d;
  const int b = index - poly_dim(d - 1);
  return {d - b, b};
}

Eigen::VectorXd monomial_values(int k, double s, double t) {
  Eigen::VectorXd v(poly_dim(k));
  if (k < 0) return v;
  v[0] = 1.0;
  for (int d = 1; d <= k; ++d) {
    const int base = poly_dim(d - 1);
    const int prev = poly_dim(d - 2);
    // x^{d-b} y^b = s * x^{d-1-b} y^b for b < d, and t * y^{d-1} for b = d.
    for (int b = 0; b < d; ++b) v[base + b] = s * v[prev + b];
    v[base + d] = t * v[prev + d - 1];
  }
  return v;
}

Eigen::VectorXd ScaledMonomials::values(const Vec2& x) const {
  const Vec2 s = local(x);
  return monomial_values(k_, s.x(), s.y());
}

Eigen::MatrixX2d ScaledMonomials::gradients(const Vec2& x) const {
  const Vec2 s = local(x);
  const Eigen::VectorXd v = monomial_values(std::max(k_ - 1, 0), s.x(), s.y());
  Eigen::MatrixX2d g = Eigen::MatrixX2d::Zero(size(), 2);
  for (int i = 1; i < size(); ++i) {
    const auto [a, b] = mono_exponents(i);
    if (a > 0) g(i, 0) = a * v[mono_index(a - 1, b)] / h_;
    if (b > 0) g(i, 1) = b * v[mono_index(a, b - 1)] / h_;
  }
  return g;
}

MonomialIntegrals::MonomialIntegrals(const ElementGeom& geom, int max_degree)
    : MonomialIntegrals(geom, geom.centroid, geom.diameter, max_degree) {}

MonomialIntegrals::MonomialIntegrals(const ElementGeom& geom, const Vec2& center, double scale, int max_degree)
    : max_degree_(max_degree), values_(static_cast<std::size_t>(poly_dim(max_degree)), 0.0) {
  const Rule1D g = gauss_legendre(max_degree / 2 + 1);
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(poly_dim(max_degree));
  for (const EdgeGeom& e : geom.edges) {
    const double xn = (e.start - center).dot(e.normal);
    if (xn == 0.0) continue;
    for (std::size_t q = 0; q < g.points.size(); ++q) {
      const Vec2 x = e.start + 0.5 * (g.points[q] + 1.0) * (e.end - e.start);
      const Vec2 s = (x - center) / scale;
      acc += (0.5 * e.length * g.weights[q] * xn) * monomial_values(max_degree, s.x(), s.y());
    }
  }
  for (int i = 0; i < acc.size(); ++i) {
    const auto [a, b] = mono_exponents(i);
    values_[static_cast<std::size_t>(i)] = acc[i] / (2.0 + a + b);
  }
}

double MonomialIntegrals::operator()(int a, int b) const {
  if (a < 0 || b < 0) return 0.0;
  if (a + b > max_degree_) throw InvalidParameter("monomial integral degree exceeds precomputed range");
  return values_[static_cast<std::size_t>(mono_index(a, b))];
}

Eigen::MatrixXd monomial_mass(const MonomialIntegrals& I, int ka, int kb) {
  Eigen::MatrixXd M(poly_dim(ka), poly_dim(kb));
  for (int i = 0; i < M.rows(); ++i) {
    const auto [ai, bi] = mono_exponents(i);
    for (int j = 0; j < M.cols(); ++j) {
      const auto [aj, bj] = mono_exponents(j);
      M(i, j) = I(ai + aj, bi + bj);
    }
  }
  return M;
}

Eigen::MatrixXd monomial_grad_gram(const MonomialIntegrals& I, double h, int k) {
  const int n = poly_dim(k);
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(n, n);
  for (int i = 1; i < n; ++i) {
    const auto [ai, bi] = mono_exponents(i);
    for (int j = 1; j < n; ++j) {
      const auto [aj, bj] = mono_exponents(j);
      double v = 0.0;
      if (ai > 0 && aj > 0) v += ai * aj * I(ai + aj - 2, bi + bj);
      if (bi > 0 && bj > 0) v += bi * bj * I(ai + aj, bi + bj - 2);
      G(i, j) = v / (h * h);
    }
  }
  return G;
}

Eigen::MatrixXd derivative_matrix(int k, int dir) {
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(poly_dim(k - 1), poly_dim(k));
  for (int j = 1; j < poly_dim(k); ++j) {
    const auto [a, b] = mono_exponents(j);
    if (dir == 0 && a > 0) D(mono_index(a - 1, b), j) = a;
    if (dir == 1 && b > 0) D(mono_index(a, b - 1), j) = b;
  }
  return D;
}

Eigen::MatrixXd shift_matrix(int k, int dir) {
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(poly_dim(k + 1), poly_dim(k));
  for (int j = 0; j < poly_dim(k); ++j) {
    const auto [a, b] = mono_exponents(j);
    S(dir == 0 ? mono_index(a + 1, b) : mono_index(a, b + 1), j) = 1.0;
  }
  return S;
}

Eigen::MatrixXd embed_matrix(int j, int k) {
  return Eigen::MatrixXd::Identity(poly_dim(k), poly_dim(j));
}

Eigen::MatrixXd vector_mass(const MonomialIntegrals& I, int ka, int kb) {
  const Eigen::MatrixXd M = monomial_mass(I, ka, kb);
  Eigen::MatrixXd V = Eigen::MatrixXd::Zero(2 * M.rows(), 2 * M.cols());
  V.topLeftCorner(M.rows(), M.cols()) = M;
  V.bottomRightCorner(M.rows(), M.cols()) = M;
  return V;
}

Eigen::MatrixXd grad_basis(int k) {
  const int n = poly_dim(k);
  const int m = poly_dim(k + 1) - 1;
  Eigen::MatrixXd B(2 * n, m);
  const Eigen::MatrixXd Ds = derivative_matrix(k + 1, 0);
  const Eigen::MatrixXd Dt = derivative_matrix(k + 1, 1);
  B.topRows(n) = Ds.rightCols(m);
  B.bottomRows(n) = Dt.rightCols(m);
  return B;
}

Eigen::MatrixXd perp_basis(int k) {
  const int n = poly_dim(k);
  const int m = poly_dim(k - 1);
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(2 * n, m);
  if (m == 0) return B;
  B.topRows(n) = shift_matrix(k - 1, 1);
  B.bottomRows(n) = -shift_matrix(k - 1, 0);
  return B;
}

Eigen::MatrixXd complement_basis(const MonomialIntegrals& I, double area, int k) {
  if (k < 2) throw UnsupportedError("complement basis requires k >= 2");
  const Eigen::MatrixXd M = vector_mass(I, k, k);
  const Eigen::MatrixXd perp = perp_basis(k);
  const int n_low = poly_dim(k - 3);
  const int n_new = perp.cols() - n_low;

  auto dot = [&M](const Eigen::VectorXd& a, const Eigen::VectorXd& b) { return a.dot(M * b); };

  // Orthonormal basis of G_{k-2}^perp (the first n_low perp columns).
  std::vector<Eigen::VectorXd> ortho;
  for (int j = 0; j < n_low; ++j) {
    Eigen::VectorXd v = perp.col(j);
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& q : ortho) v -= dot(q, v) * q;
    ortho.push_back(v / std::sqrt(dot(v, v)));
  }

  Eigen::MatrixXd C(perp.rows(), n_new);
  for (int j = 0; j < n_new; ++j) {
    Eigen::VectorXd v = perp.col(n_low + j);
    const double norm0 = std::sqrt(dot(v, v));
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& q : ortho) v -= dot(q, v) * q;
    const double norm = std::sqrt(std::max(dot(v, v), 0.0));
    if (!(norm > 1e-10 * norm0))
      throw ConditioningError("complement basis lost rank during orthogonalization (element too degenerate)");
    v /= norm;
    ortho.push_back(v);
    C.col(j) = v * std::sqrt(area);
  }
  return C;
}

Eigen::MatrixXd complement_basis(const ElementGeom& geom, int k) {
  const MonomialIntegrals I(geom, 2 * k);
  return complement_basis(I, geom.area, k);
}

Eigen::MatrixXd poly_mass_matrix(const ElementGeom& geom, int k, const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
  const MonomialIntegrals I(geom, 2 * k);
  return A.transpose() * vector_mass(I, k, k) * B;
}

}  // namespace polyvem
