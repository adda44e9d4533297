#include "doctest.h"
#include "fembench/hdg.hpp"
#include "fembench/multigrid.hpp"
#include "fembench/static_condensation.hpp"
#include "oracles.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>

using namespace fembench;

namespace {

LinearOperator identity_op() {
  return [](std::span<const double> x, std::span<double> y) { std::copy(x.begin(), x.end(), y.begin()); };
}

Eigen::MatrixXd dense(const SparseMatrix& a) {
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(a.rows(), a.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (auto p = a.row_ptr()[i]; p < a.row_ptr()[i + 1]; ++p) d(i, a.col_idx()[p]) = a.values()[p];
  return d;
}

void check_symmetric_preconditioner(const LinearOperator& m, int n) {
  const auto b1 = oracle::random_vector(n, 21), b2 = oracle::random_vector(n, 22);
  std::vector<double> z1(n), z2(n);
  m(b1, z1);
  m(b2, z2);
  CHECK(std::abs(oracle::dot(z1, b2) - oracle::dot(b1, z2)) <= 1e-11 * oracle::norm(z1) * oracle::norm(b2));
  std::vector<double> zero(n, 0.0), z(n, 3.0);
  m(zero, z);
  CHECK(oracle::norm(z) == 0.0);
}

int primal_iterations(const Mesh& mesh, int level, PrimalMethod method, int k) {
  const auto pb = gaussian_case(mesh.dim());
  PrimalMultigrid pm(mesh, level, method, k, pb.kappa);
  const auto b = method == PrimalMethod::cg ? pm.cg_operator().rhs(pb) : pm.dg_operator().rhs(pb);
  std::vector<double> x(b.size(), 0.0);
  const auto rep = pcg(pm.fine_operator(), pm.preconditioner(), b, x, 1e-9, 200);
  CHECK(rep.converged);
  return rep.iterations;
}

struct TraceSetup {
  explicit TraceSetup(const Mesh& mesh, int level, int k)
      : trace(enumerate_dofs(mesh, level, SpaceKind::trace, k)), op(trace, Coefficient::uniform(1.0)) {
    k_mat = std::make_shared<SparseMatrix>(op.assemble());
    b = op.rhs(gaussian_case(mesh.dim()));
  }
  Space trace;
  HDGOperator op;
  std::shared_ptr<SparseMatrix> k_mat;
  std::vector<double> b;
};

std::unique_ptr<TraceSetup> trace_setup(const Mesh& mesh, int level, int k) {
  return std::make_unique<TraceSetup>(mesh, level, k);
}

}  // namespace

TEST_CASE("galerkin product and leading rows") {
  const SparseMatrix p = SparseMatrix::from_triplets(4, 3, {{0, 0, 1.0}, {1, 0, 0.5}, {1, 1, 0.5}, {2, 1, 1.0}, {3, 2, 2.0}});
  const SparseMatrix k = SparseMatrix::from_triplets(
      4, 4, {{0, 0, 2.0}, {0, 1, -1.0}, {1, 0, -1.0}, {1, 1, 2.0}, {1, 2, -1.0}, {2, 1, -1.0}, {2, 2, 2.0}, {3, 3, 1.0}});
  const Eigen::MatrixXd ref = dense(p).transpose() * dense(k) * dense(p);
  const SparseMatrix c = galerkin_product(p, k, {0, 0, 0});
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) CHECK(c(i, j) == doctest::Approx(ref(i, j)).epsilon(1e-14));

  // constrained rows map to zero under P and become identity
  const SparseMatrix p0 = SparseMatrix::from_triplets(4, 3, {{0, 0, 1.0}, {1, 0, 0.5}, {2, 1, 1.0}});
  const SparseMatrix c0 = galerkin_product(p0, k, {0, 0, 1});
  CHECK(c0(2, 2) == 1.0);
  CHECK(c0(2, 0) == 0.0);
  CHECK_THROWS_AS(galerkin_product(p, k, {0, 0}), std::invalid_argument);

  const SparseMatrix top = leading_rows(k, 2);
  CHECK(top.rows() == 2);
  CHECK(top.cols() == 4);
  CHECK(top.nnz() == 5);
  CHECK(top(1, 2) == -1.0);
}

TEST_CASE("geometric multigrid for CG and DG-SIP") {
  const Mesh mesh = build_cube_hierarchy(3, 2, 2, BoundaryAssignment::neumann_lower());
  PrimalMultigrid cg(mesh, 2, PrimalMethod::cg, 2, Coefficient::uniform(1.0));
  CHECK(cg.multigrid().n_levels() == 3);
  CHECK(cg.direct_coarse());
  check_symmetric_preconditioner(cg.preconditioner(), cg.size());
  PrimalMultigrid dg(mesh, 2, PrimalMethod::dgsip, 2, Coefficient::uniform(1.0));
  check_symmetric_preconditioner(dg.preconditioner(), dg.size());

  const int c1 = primal_iterations(mesh, 1, PrimalMethod::cg, 2), c2 = primal_iterations(mesh, 2, PrimalMethod::cg, 2);
  CHECK(c2 <= 7);
  CHECK(std::abs(c1 - c2) <= 2);
  const int d1 = primal_iterations(mesh, 1, PrimalMethod::dgsip, 2),
            d2 = primal_iterations(mesh, 2, PrimalMethod::dgsip, 2);
  CHECK(d2 <= 16);
  CHECK(std::abs(d1 - d2) <= 2);

  // single level: the coarse solver alone
  PrimalMultigrid one(mesh, 0, PrimalMethod::cg, 3, Coefficient::uniform(1.0));
  CHECK(one.multigrid().n_levels() == 1);
  const auto b = one.cg_operator().rhs(gaussian_case(3));
  std::vector<double> x(b.size(), 0.0);
  CHECK(pcg(one.fine_operator(), one.preconditioner(), b, x, 1e-9, 10).iterations == 1);

  // large coarse level: Chebyshev coarse solve
  PrimalMultigrid cheb(mesh, 1, PrimalMethod::dgsip, 3, Coefficient::uniform(1.0), {}, 500);
  CHECK_FALSE(cheb.direct_coarse());
  check_symmetric_preconditioner(cheb.preconditioner(), cheb.size());
}

TEST_CASE("p-multigrid for the HDG trace system") {
  const Mesh mesh = build_cube_hierarchy(3, 2, 3, BoundaryAssignment::neumann_lower());
  const auto s = trace_setup(mesh, 1, 2);
  const auto pmg = build_trace_pmg(s->k_mat, s->trace);
  CHECK(pmg->n_levels() >= 2);

  // K_1 = P^T K P is symmetric positive definite
  const SparseMatrix& k1 = pmg->level_matrix(1);
  const Eigen::MatrixXd d1 = dense(k1);
  CHECK((d1 - d1.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * d1.cwiseAbs().maxCoeff());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(d1);
  CHECK(es.eigenvalues().minCoeff() > 0.0);
  for (int l = 1; l < pmg->n_levels(); ++l) CHECK(pmg->level_matrix(l).rows() < pmg->level_matrix(l - 1).rows());

  check_symmetric_preconditioner(pmg->preconditioner(), s->op.size());

  // ILU-preconditioned CG beats plain CG
  const LinearOperator a = [&](std::span<const double> x, std::span<double> y) { s->k_mat->multiply(x, y); };
  ILUSmoother ilu(s->k_mat);
  const LinearOperator m_ilu = [&](std::span<const double> r, std::span<double> z) { ilu.smooth(r, z, true); };
  std::vector<double> x(s->b.size(), 0.0);
  const int plain = pcg(a, identity_op(), s->b, x, 1e-9, 2000).iterations;
  x.assign(x.size(), 0.0);
  const int with_ilu = pcg(a, m_ilu, s->b, x, 1e-9, 2000).iterations;
  CHECK(with_ilu < plain);

  x.assign(x.size(), 0.0);
  const auto r4 = pcg(a, pmg->preconditioner(), s->b, x, 1e-9, 200);
  CHECK(r4.converged);
  CHECK(r4.iterations <= 25);

  const auto s8 = trace_setup(mesh, 2, 2);
  const auto pmg8 = build_trace_pmg(s8->k_mat, s8->trace);
  std::vector<double> x8(s8->b.size(), 0.0);
  const auto r8 = pcg([&](std::span<const double> v, std::span<double> y) { s8->k_mat->multiply(v, y); },
                      pmg8->preconditioner(), s8->b, x8, 1e-9, 200);
  CHECK(r8.iterations <= 25);

  const auto s16 = trace_setup(mesh, 3, 2);
  const auto pmg16 = build_trace_pmg(s16->k_mat, s16->trace);
  std::vector<double> x16(s16->b.size(), 0.0);
  const auto r16 = pcg([&](std::span<const double> v, std::span<double> y) { s16->k_mat->multiply_parallel(v, y); },
                       pmg16->preconditioner(), s16->b, x16, 1e-9, 200);
  CHECK(r16.iterations - r4.iterations <= 5);
}

TEST_CASE("p-multigrid for the condensed CG skeleton") {
  const Mesh mesh = build_cube_hierarchy(3, 2, 2, BoundaryAssignment::neumann_lower());
  const Space s = enumerate_dofs(mesh, 2, SpaceKind::cg, 3);
  const CGLaplaceOperator op(s, Coefficient::uniform(1.0));
  const CondensedCG cond(op);
  const auto pmg = build_skeleton_pmg(cond.shared_matrix(), s);
  check_symmetric_preconditioner(pmg->preconditioner(), cond.size());
  const auto b = cond.condense_rhs(op.rhs(gaussian_case(3)));
  std::vector<double> x(b.size(), 0.0);
  const auto rep = pcg([&](std::span<const double> v, std::span<double> y) { cond.matrix().multiply(v, y); },
                       pmg->preconditioner(), b, x, 1e-9, 200);
  CHECK(rep.converged);
  CHECK(rep.iterations <= 40);
}
