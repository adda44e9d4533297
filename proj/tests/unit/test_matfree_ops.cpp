#include "doctest.h"
#include "fembench/matfree_ops.hpp"
#include "fembench/sparse.hpp"
#include "oracles.hpp"

#include <cmath>

using namespace fembench;
using oracle::dot;
using oracle::norm;
using oracle::random_vector;

namespace {

template <typename Op>
std::vector<double> apply_op(const Op& op, const std::vector<double>& x) {
  std::vector<double> y(x.size());
  op.apply_serial(x, y);
  return y;
}

double max_rel_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double diff = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff = std::max(diff, std::abs(a[i] - b[i]));
    scale = std::max(scale, std::abs(b[i]));
  }
  return diff / std::max(scale, 1e-300);
}

Coefficient smooth_kappa() {
  return Coefficient::variable([](const Point& x) { return 1.0 + 0.5 * std::sin(x[0] + 2.0 * x[1]) * std::cos(x[2]); });
}

}  // namespace

TEST_CASE("penalty parameter") {
  CHECK(penalty_sigma(2, 3, 1.0 / 8.0) == doctest::Approx(216.0).epsilon(1e-15));
  CHECK(penalty_sigma(1, 2, 1.0) == doctest::Approx(8.0).epsilon(1e-15));

  Mesh shell = build_shell_mesh(1);
  Space dg = enumerate_dofs(shell, 1, SpaceKind::dg, 2);
  DGSIPOperator op(dg, Coefficient::uniform(1.0));
  double lo = 1e300, hi = 0.0;
  for (int f = 0; f < shell.level(1).n_faces(); ++f) {
    lo = std::min(lo, op.face_sigma(f));
    hi = std::max(hi, op.face_sigma(f));
  }
  CHECK(lo > 0.0);
  CHECK(hi > 1.2 * lo);
  for (int f : {0, 17, 101}) CHECK(op.face_sigma(f) == doctest::Approx(27.0 / oracle::face_h(dg, f)).epsilon(1e-10));
}

TEST_CASE("CG operator matches the dense oracle") {
  struct Case {
    int dim, n, k;
  };
  for (const Case& cs : {Case{2, 2, 1}, Case{2, 2, 2}, Case{2, 4, 3}, Case{3, 2, 1}, Case{3, 2, 2}, Case{3, 2, 3},
                         Case{3, 4, 2}}) {
    CAPTURE(cs.dim);
    CAPTURE(cs.k);
    Mesh m = build_cube_hierarchy(cs.dim, cs.n, 0, BoundaryAssignment::neumann_lower());
    for (const Coefficient& kappa : {Coefficient::uniform(1.0), smooth_kappa()}) {
      Space cg = enumerate_dofs(m, 0, SpaceKind::cg, cs.k);
      CGLaplaceOperator op(cg, kappa);
      const Eigen::MatrixXd A = oracle::assemble_cg(cg, kappa);
      const auto x = random_vector(cg.n_dofs(), 11);
      const auto want = oracle::to_std(A * oracle::to_eigen(x));
      CHECK(max_rel_diff(apply_op(op, x), want) < 1e-12);
      std::vector<double> yp(x.size());
      op.apply(x, yp);
      CHECK(max_rel_diff(yp, want) < 1e-12);

      const auto diag = op.diagonal();
      for (int i = 0; i < cg.n_dofs(); ++i) CHECK(diag[i] == doctest::Approx(A(i, i)).epsilon(1e-12));
    }
  }
}

TEST_CASE("CG operator on the curved shell") {
  Mesh shell = build_shell_mesh(1);
  for (int k = 1; k <= 2; ++k) {
    Space cg = enumerate_dofs(shell, 0, SpaceKind::cg, k);
    CGLaplaceOperator op(cg, smooth_kappa());
    const Eigen::MatrixXd A = oracle::assemble_cg(cg, smooth_kappa());
    const auto x = random_vector(cg.n_dofs(), 5);
    CHECK(max_rel_diff(apply_op(op, x), oracle::to_std(A * oracle::to_eigen(x))) < 1e-12);
    const auto diag = op.diagonal();
    for (int i = 0; i < cg.n_dofs(); ++i) CHECK(diag[i] == doctest::Approx(A(i, i)).epsilon(1e-12));

    // constants are in the kernel of the unconstrained operator
    std::vector<double> ones(cg.n_dofs(), 1.0), y(cg.n_dofs());
    op.apply_unconstrained(ones, y);
    CHECK(norm(y) < 1e-11);
  }
}

TEST_CASE("CG operator properties") {
  Mesh m = build_cube_hierarchy(3, 2, 0, BoundaryAssignment::all(BoundaryKind::neumann));
  for (int k = 1; k <= 4; ++k) {
    Space cg = enumerate_dofs(m, 0, SpaceKind::cg, k);
    CGLaplaceOperator op(cg, Coefficient::uniform(1.0));
    CHECK(norm(apply_op(op, std::vector<double>(cg.n_dofs(), 1.0))) < 1e-11);
  }
  Mesh m4 = build_cube_hierarchy(3, 4, 0, BoundaryAssignment::neumann_lower());
  Space cg = enumerate_dofs(m4, 0, SpaceKind::cg, 3);
  CGLaplaceOperator op(cg, smooth_kappa());
  const auto u = random_vector(cg.n_dofs(), 1);
  const auto v = random_vector(cg.n_dofs(), 2);
  const auto Au = apply_op(op, u), Av = apply_op(op, v);
  CHECK(dot(u, Au) > 0.0);
  const auto diag = op.diagonal();
  const double a_norm = *std::max_element(diag.begin(), diag.end());
  CHECK(std::abs(dot(Au, v) - dot(u, Av)) <= 1e-12 * a_norm * norm(u) * norm(v));
  for (int i = 0; i < cg.n_dofs(); ++i) {
    CHECK(diag[i] > 0.0);
    if (cg.is_constrained(i)) CHECK(diag[i] == 1.0);
  }

  std::vector<double> y(cg.n_dofs());
  CHECK_THROWS_AS(op.apply(std::vector<double>(3), y), std::invalid_argument);
}

TEST_CASE("DG-SIP operator matches the dense oracle") {
  struct Case {
    int dim, n, k;
    BoundaryAssignment bc;
  };
  const auto mixed = BoundaryAssignment::neumann_lower();
  const auto dir = BoundaryAssignment::all(BoundaryKind::dirichlet);
  for (const Case& cs : {Case{2, 2, 1, mixed}, Case{2, 2, 2, dir}, Case{2, 4, 3, mixed}, Case{3, 2, 1, mixed},
                         Case{3, 2, 2, dir}, Case{3, 2, 3, mixed}}) {
    CAPTURE(cs.dim);
    CAPTURE(cs.k);
    Mesh m = build_cube_hierarchy(cs.dim, cs.n, 0, cs.bc);
    for (const Coefficient& kappa : {Coefficient::uniform(1.0), smooth_kappa()}) {
      Space dg = enumerate_dofs(m, 0, SpaceKind::dg, cs.k);
      DGSIPOperator op(dg, kappa);
      const Eigen::MatrixXd A = oracle::assemble_dgsip(dg, kappa);
      const auto x = random_vector(dg.n_dofs(), 3);
      const auto want = oracle::to_std(A * oracle::to_eigen(x));
      CHECK(max_rel_diff(apply_op(op, x), want) < 1e-12);
      std::vector<double> yp(x.size());
      op.apply(x, yp);
      CHECK(max_rel_diff(yp, want) < 1e-12);
      const auto diag = op.diagonal();
      for (int i = 0; i < dg.n_dofs(); ++i) {
        CHECK(diag[i] == doctest::Approx(A(i, i)).epsilon(1e-12));
        CHECK(diag[i] > 0.0);
      }
    }
  }
}

TEST_CASE("DG-SIP operator on the curved shell") {
  Mesh shell = build_shell_mesh(1);
  for (int k = 1; k <= 2; ++k) {
    Space dg = enumerate_dofs(shell, 0, SpaceKind::dg, k);
    DGSIPOperator op(dg, smooth_kappa());
    const Eigen::MatrixXd A = oracle::assemble_dgsip(dg, smooth_kappa());
    const auto x = random_vector(dg.n_dofs(), 9);
    CHECK(max_rel_diff(apply_op(op, x), oracle::to_std(A * oracle::to_eigen(x))) < 1e-12);
    const auto diag = op.diagonal();
    for (int i = 0; i < dg.n_dofs(); ++i) CHECK(diag[i] == doctest::Approx(A(i, i)).epsilon(1e-12));
  }
}

TEST_CASE("DG-SIP operator properties") {
  Mesh m = build_cube_hierarchy(3, 2, 0, BoundaryAssignment::all(BoundaryKind::neumann));
  for (int k = 1; k <= 3; ++k) {
    Space dg = enumerate_dofs(m, 0, SpaceKind::dg, k);
    DGSIPOperator op(dg, Coefficient::uniform(1.0));
    CHECK(norm(apply_op(op, std::vector<double>(dg.n_dofs(), 1.0))) < 1e-11);
  }

  Mesh m4 = build_cube_hierarchy(3, 4, 0, BoundaryAssignment::neumann_lower());
  Space dg = enumerate_dofs(m4, 0, SpaceKind::dg, 2);
  DGSIPOperator op(dg, smooth_kappa());
  auto A = [&](const std::vector<double>& x, std::vector<double>& y) { op.apply_serial(x, y); };
  const auto u = random_vector(dg.n_dofs(), 1);
  const auto v = random_vector(dg.n_dofs(), 2);
  const auto Au = apply_op(op, u), Av = apply_op(op, v);
  const auto diag = op.diagonal();
  const double a_norm = *std::max_element(diag.begin(), diag.end());
  CHECK(std::abs(dot(Au, v) - dot(u, Av)) <= 1e-12 * a_norm * norm(u) * norm(v));
  CHECK(oracle::lanczos_min_ritz(A, dg.n_dofs(), 30) >= -1e-10 * a_norm);

  // energy of the interpolant approaches the exact energy under refinement
  Mesh mr = build_cube_hierarchy(3, 2, 2, BoundaryAssignment::all(BoundaryKind::neumann));
  auto u_fn = [](const Point& x) { return std::sin(x[0]) * std::cos(0.5 * x[1]) + x[2] * x[2]; };
  // integral over (-1,1)^3 of |grad u|^2 for the function above
  const double s1 = std::sin(1.0), s2 = std::sin(2.0);
  const double exact = 2.0 * (1.0 + s2 / 2.0) * (1.0 + s1) + 0.5 * (1.0 - s2 / 2.0) * (1.0 - s1) + 32.0 / 3.0;
  std::vector<double> err;
  for (int l = 0; l < 3; ++l) {
    Space s = enumerate_dofs(mr, l, SpaceKind::dg, 1);
    DGSIPOperator a(s, Coefficient::uniform(1.0));
    const auto x = s.interpolate(u_fn);
    err.push_back(std::abs(dot(x, apply_op(a, x)) - exact));
  }
  MESSAGE("energy errors " << err[0] << " " << err[1] << " " << err[2]);
  CHECK(err[1] < err[0] / 1.5);
  CHECK(err[2] < err[1] / 1.5);
}

TEST_CASE("right-hand sides vanish for zero data") {
  ManufacturedCase zero = gaussian_case(3);
  zero.u = [](const Point&) { return 0.0; };
  zero.grad_u = [](const Point&) { return Point{0, 0, 0}; };
  zero.f = [](const Point&) { return 0.0; };
  Mesh m = build_cube_hierarchy(3, 2, 0, BoundaryAssignment::neumann_lower());
  Space cg = enumerate_dofs(m, 0, SpaceKind::cg, 2);
  Space dg = enumerate_dofs(m, 0, SpaceKind::dg, 2);
  CHECK(norm(CGLaplaceOperator(cg, Coefficient::uniform(1.0)).rhs(zero)) == 0.0);
  CHECK(norm(DGSIPOperator(dg, Coefficient::uniform(1.0)).rhs(zero)) == 0.0);
}

TEST_CASE("right-hand sides reproduce A u for discrete solutions") {
  // For u in the discrete space with matching data, the consistent RHS equals A times its interpolant.
  Mesh m = build_cube_hierarchy(2, 2, 0, BoundaryAssignment::neumann_lower());
  ManufacturedCase lin = gaussian_case(2);
  lin.u = [](const Point& x) { return 1.0 + 2.0 * x[0] - x[1]; };
  lin.grad_u = [](const Point&) { return Point{2.0, -1.0, 0.0}; };
  lin.f = [](const Point&) { return 0.0; };
  for (int k = 1; k <= 2; ++k) {
    Space cg = enumerate_dofs(m, 0, SpaceKind::cg, k);
    CGLaplaceOperator a(cg, Coefficient::uniform(1.0));
    const auto x = cg.interpolate(lin.u);
    CHECK(max_rel_diff(apply_op(a, x), a.rhs(lin)) < 1e-12);
    Space dg = enumerate_dofs(m, 0, SpaceKind::dg, k);
    DGSIPOperator b(dg, Coefficient::uniform(1.0));
    const auto xd = dg.interpolate(lin.u);
    CHECK(max_rel_diff(apply_op(b, xd), b.rhs(lin)) < 1e-12);
  }
}

TEST_CASE("cell kernel arithmetic follows the sum-factorization count") {
  for (int dim = 2; dim <= 3; ++dim) {
    Mesh m = build_cube_hierarchy(dim, 1, 0, BoundaryAssignment::neumann_lower());
    for (int k = 1; k <= 8; ++k) {
      Space cg = enumerate_dofs(m, 0, SpaceKind::cg, k);
      const auto ops = CGLaplaceOperator(cg, Coefficient::uniform(1.0)).count_cell_ops().total();
      // 4d one-dimensional contractions of n^(d-1) lines, each a dense n x n product
      const int n = k + 1;
      const double reference = 4.0 * dim * std::pow(n, dim) * (2 * n - 1);
      const double ratio = ops / reference;
      CAPTURE(dim);
      CAPTURE(k);
      CAPTURE(ratio);
      CHECK(ratio > 0.5);
      CHECK(ratio < 2.0);
    }
  }
}
