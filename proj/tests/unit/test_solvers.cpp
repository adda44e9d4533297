#include "doctest.h"
#include "fembench/solvers.hpp"
#include "oracles.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <stdexcept>

using namespace fembench;

namespace {

SparseMatrix laplace_1d(int n) {
  std::vector<Triplet> t;
  for (int i = 0; i < n; ++i) {
    t.push_back({i, i, 2.0});
    if (i > 0) t.push_back({i, i - 1, -1.0});
    if (i + 1 < n) t.push_back({i, i + 1, -1.0});
  }
  return SparseMatrix::from_triplets(n, n, t);
}

LinearOperator op_of(const SparseMatrix& a) {
  return [&a](std::span<const double> x, std::span<double> y) { a.multiply(x, y); };
}

Eigen::MatrixXd dense(const SparseMatrix& a) {
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(a.rows(), a.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (auto p = a.row_ptr()[i]; p < a.row_ptr()[i + 1]; ++p) d(i, a.col_idx()[p]) = a.values()[p];
  return d;
}

LinearOperator identity_op() {
  return [](std::span<const double> x, std::span<double> y) { std::copy(x.begin(), x.end(), y.begin()); };
}

// linear interpolation from n_c interior nodes to 2 n_c + 1 fine nodes
SparseMatrix interpolation_1d(int nc) {
  std::vector<Triplet> t;
  for (int j = 0; j < nc; ++j) {
    const int f = 2 * j + 1;
    t.push_back({f, j, 1.0});
    t.push_back({f - 1, j, 0.5});
    t.push_back({f + 1, j, 0.5});
  }
  return SparseMatrix::from_triplets(2 * nc + 1, nc, t);
}

}  // namespace

TEST_CASE("PCG") {
  const int n = 20;
  std::vector<Triplet> it;
  for (int i = 0; i < n; ++i) it.push_back({i, i, 1.0});
  const SparseMatrix id = SparseMatrix::from_triplets(n, n, it);
  auto b = oracle::random_vector(n, 1);
  std::vector<double> x(n, 0.0);
  auto rep = pcg(op_of(id), identity_op(), b, x, 1e-12, 10);
  CHECK(rep.converged);
  CHECK(rep.iterations == 1);
  for (int i = 0; i < n; ++i) CHECK(x[i] == doctest::Approx(b[i]).epsilon(1e-14));

  const SparseMatrix a = laplace_1d(60);
  b = oracle::random_vector(60, 2);
  x.assign(60, 0.0);
  rep = pcg(op_of(a), identity_op(), b, x, 1e-10, 200);
  CHECK(rep.converged);
  CHECK(rep.iterations <= 60);
  CHECK(rep.residuals.front() == 1.0);
  CHECK(rep.residuals.back() <= 1e-10);
  const auto ax = a * x;
  double r = 0.0;
  for (int i = 0; i < 60; ++i) r += (ax[i] - b[i]) * (ax[i] - b[i]);
  CHECK(std::sqrt(r) <= 1e-10 * oracle::norm(b) * 1.0001);

  // CG error decreases monotonically in the energy norm
  const Eigen::VectorXd xs = dense(a).llt().solve(oracle::to_eigen(b));
  double prev = 1e300;
  for (int m = 1; m <= 30; ++m) {
    std::vector<double> y(60, 0.0);
    pcg(op_of(a), identity_op(), b, y, 0.0, m);
    const Eigen::VectorXd e = oracle::to_eigen(y) - xs;
    const double energy = e.dot(dense(a) * e);
    CHECK(energy <= prev * (1.0 + 1e-12));
    prev = energy;
  }

  x.assign(60, 0.0);
  rep = pcg(op_of(a), identity_op(), b, x, 1e-14, 3);
  CHECK_FALSE(rep.converged);
  CHECK(rep.iterations == 3);

  const SparseMatrix neg = SparseMatrix::from_triplets(2, 2, {{0, 0, -1.0}, {1, 1, -2.0}});
  std::vector<double> b2{1.0, 1.0}, x2(2, 0.0);
  CHECK_THROWS_AS(pcg(op_of(neg), identity_op(), b2, x2, 1e-10, 5), std::runtime_error);
}

TEST_CASE("eigenvalue estimate") {
  const int n = 30;
  std::vector<Triplet> t;
  std::vector<double> diag(n);
  for (int i = 0; i < n; ++i) {
    diag[i] = 1.0 + i;
    t.push_back({i, i, diag[i]});
  }
  const SparseMatrix d = SparseMatrix::from_triplets(n, n, t);
  CHECK(std::abs(estimate_max_eigenvalue(op_of(d), diag) - 1.0) < 1e-10);

  const SparseMatrix a = laplace_1d(50);
  const auto ad = a.diagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dense(a) / 2.0);
  const double lmax = es.eigenvalues().maxCoeff();
  const double est = estimate_max_eigenvalue(op_of(a), ad);
  CHECK(est >= 0.9 * lmax);
  CHECK(est <= 1.0 * lmax * (1.0 + 1e-12));
  CHECK(estimate_max_eigenvalue(op_of(a), ad) == est);
  const auto both = estimate_eigenvalues(op_of(a), ad);
  CHECK(both.max == est);
  CHECK(both.min >= es.eigenvalues().minCoeff() * (1.0 - 1e-12));
}

TEST_CASE("Chebyshev smoother") {
  const int n = 50;
  const SparseMatrix a = laplace_1d(n);
  const auto diag = a.diagonal();
  const Eigen::MatrixXd ad = dense(a);

  // exact solution is a fixed point
  const auto xe = oracle::random_vector(n, 3);
  const auto b = a * xe;
  ChebyshevSmoother cheb(op_of(a), diag);
  CHECK(cheb.degree() == 5);
  CHECK(cheb.range_min() == doctest::Approx(0.06 * cheb.lambda_max_estimate()));
  CHECK(cheb.range_max() == doctest::Approx(1.2 * cheb.lambda_max_estimate()));
  auto x = xe;
  cheb.smooth(b, x, false);
  for (int i = 0; i < n; ++i) CHECK(std::abs(x[i] - xe[i]) < 1e-13);

  // error propagation in the eigenbasis of D^-1 A equals the Chebyshev
  // polynomial on [lo, hi]
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(ad / 2.0);
  const double lo = cheb.range_min(), hi = cheb.range_max();
  auto cheb_poly = [&](double lam, int p) {
    const double s = (hi + lo - 2.0 * lam) / (hi - lo), s0 = (hi + lo) / (hi - lo);
    const double tp = std::abs(s) <= 1.0 ? std::cos(p * std::acos(s)) : std::cosh(p * std::acosh(std::abs(s))) * (s < 0 && p % 2 ? -1 : 1);
    return tp / std::cosh(p * std::acosh(s0));
  };
  std::vector<double> zero(n, 0.0);
  double top_in = 0.0, top_out = 0.0;
  const double lmax = es.eigenvalues().maxCoeff();
  for (int j = 0; j < n; ++j) {
    const Eigen::VectorXd v = es.eigenvectors().col(j);
    std::vector<double> e = oracle::to_std(v);
    cheb.smooth(zero, e, false);
    const double damp = oracle::to_eigen(e).dot(v);
    CHECK(damp == doctest::Approx(cheb_poly(es.eigenvalues()(j), 5)).epsilon(1e-8));
    if (es.eigenvalues()(j) >= 0.5 * lmax) {
      top_in += 1.0;
      top_out += damp * damp;
    }
  }
  // degree 5 on a 20:1 interval damps by at most 1 / T_5(1.2/1.14), about 4.9
  CHECK(std::sqrt(top_out / top_in) <= 2.0 * std::pow(0.635, 5) / (1.0 + std::pow(0.635, 10)) + 1e-3);

  // degree 7 on the same interval: top half reduced at least 10x
  ChebyshevSmoother cheb7(op_of(a), diag, lo, hi, 7);
  std::vector<double> top(n, 0.0);
  for (int j = 0; j < n; ++j)
    if (es.eigenvalues()(j) >= 0.5 * lmax)
      for (int i = 0; i < n; ++i) top[i] += es.eigenvectors()(i, j);
  const double before = oracle::norm(top);
  cheb7.smooth(zero, top, false);
  CHECK(oracle::norm(top) * 10.0 <= before);

  // coarse-solver mode with a degree from the a-priori bound
  const double lmin_true = es.eigenvalues().minCoeff();
  const int degree = chebyshev_degree_for(lmin_true, lmax, 1e-3);
  CHECK(degree > 5);
  CHECK(chebyshev_degree_for(1.0, 1.0, 1e-3) == 1);
  ChebyshevSmoother coarse(op_of(a), diag, lmin_true, lmax, degree);
  auto err = oracle::random_vector(n, 4);
  const double e0 = oracle::norm(err);
  coarse.smooth(zero, err, false);
  CHECK(oracle::norm(err) * 1000.0 <= e0);

  // zero start ignores the input
  std::vector<double> junk(n, 7.0), clean(n, 0.0);
  cheb.smooth(b, junk, true);
  cheb.smooth(b, clean, false);
  for (int i = 0; i < n; ++i) CHECK(junk[i] == clean[i]);
}

TEST_CASE("two-level V-cycle on the 1D model problem") {
  const int nc = 15, nf = 2 * nc + 1;
  const SparseMatrix af = laplace_1d(nf);
  const SparseMatrix p = interpolation_1d(nc);
  const SparseMatrix ac = multiply(p.transpose(), multiply(af, p));
  const DenseLU lu(ac);

  std::vector<MGLevel> levels(2);
  levels[0].size = nc;
  levels[0].apply = op_of(ac);
  levels[1].size = nf;
  levels[1].apply = op_of(af);
  levels[1].smoother = std::make_unique<ChebyshevSmoother>(levels[1].apply, af.diagonal());
  levels[1].prolongation = p;
  const Multigrid mg(std::move(levels), [&lu](std::span<const double> b, std::span<double> x) { lu.solve(b, x); });
  CHECK(mg.n_levels() == 2);

  std::vector<double> zero(nf, 0.0), z(nf, 1.0);
  mg.vcycle(zero, z);
  for (double v : z) CHECK(v == 0.0);

  auto b1 = oracle::random_vector(nf, 5), b2 = oracle::random_vector(nf, 6);
  std::vector<double> z1(nf), z2(nf);
  mg.vcycle(b1, z1);
  mg.vcycle(b2, z2);
  CHECK(std::abs(oracle::dot(z1, b2) - oracle::dot(b1, z2)) < 1e-11 * oracle::norm(z1) * oracle::norm(b2));

  // error propagation E = I - V A; contraction in the energy norm
  const Eigen::MatrixXd a = dense(af);
  Eigen::MatrixXd v(nf, nf);
  for (int j = 0; j < nf; ++j) {
    std::vector<double> e(nf, 0.0), col(nf);
    e[j] = 1.0;
    mg.vcycle(e, col);
    v.col(j) = oracle::to_eigen(col);
  }
  const Eigen::MatrixXd e = Eigen::MatrixXd::Identity(nf, nf) - v * a;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
  const Eigen::MatrixXd half = es.operatorSqrt(), half_inv = es.operatorInverseSqrt();
  const Eigen::MatrixXd sym = half * e * half_inv;
  const double norm_a = Eigen::JacobiSVD<Eigen::MatrixXd>(sym).singularValues()(0);
  CHECK(norm_a <= 0.2);

  // single level degenerates to the coarse solve
  std::vector<MGLevel> one(1);
  one[0].size = nc;
  one[0].apply = op_of(ac);
  const Multigrid direct(std::move(one), [&lu](std::span<const double> b, std::span<double> x) { lu.solve(b, x); });
  auto bc = oracle::random_vector(nc, 7);
  std::vector<double> xc(nc);
  direct.vcycle(bc, xc);
  const auto check = ac * xc;
  for (int i = 0; i < nc; ++i) CHECK(check[i] == doctest::Approx(bc[i]).epsilon(1e-12));
}

TEST_CASE("ILU smoother") {
  auto a = std::make_shared<SparseMatrix>(laplace_1d(40));
  const ILUSmoother s(a);
  auto xe = oracle::random_vector(40, 8);
  const auto b = *a * xe;
  std::vector<double> x(40);
  s.smooth(b, x, true);
  for (int i = 0; i < 40; ++i) CHECK(x[i] == doctest::Approx(xe[i]).epsilon(1e-10));
}
