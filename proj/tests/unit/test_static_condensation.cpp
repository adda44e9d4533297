#include "doctest.h"
#include "fembench/static_condensation.hpp"
#include "oracles.hpp"

#include <cmath>

using namespace fembench;

namespace {

std::vector<double> full_solve(const CGLaplaceOperator& op, const std::vector<double>& rhs) {
  const DenseLU lu(probe_assemble([&](std::span<const double> x, std::span<double> y) { op.apply(x, y); }, op.size()));
  return lu.solve(rhs);
}

void check_equivalence(const Mesh& mesh, int k, const ManufacturedCase& pb, double tol) {
  const Space s = enumerate_dofs(mesh, mesh.n_levels() - 1, SpaceKind::cg, k);
  const CGLaplaceOperator op(s, pb.kappa);
  const auto rhs = op.rhs(pb);
  const CondensedCG cond(op);
  const auto xs = DenseLU(cond.matrix()).solve(cond.condense_rhs(rhs));
  const auto x = cond.recover(xs, rhs);
  const auto ref = full_solve(op, rhs);
  double diff = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) diff = std::max(diff, std::abs(x[i] - ref[i]));
  double scale = 0.0;
  for (double v : ref) scale = std::max(scale, std::abs(v));
  CHECK(diff <= tol * scale);
}

}  // namespace

TEST_CASE("condensed dof count") {
  const Mesh mesh = build_cube_hierarchy(3, 2, 1, BoundaryAssignment::neumann_lower());
  for (int k = 1; k <= 4; ++k) {
    const Space s = enumerate_dofs(mesh, 1, SpaceKind::cg, k);
    const CGLaplaceOperator op(s, Coefficient::uniform(1.0));
    const CondensedCG cond(op);
    CHECK(cond.full_size() == s.n_dofs());
    CHECK(cond.size() == s.n_dofs() - 64 * (k - 1) * (k - 1) * (k - 1));
    CHECK(cond.n_classes() == 1);
  }
}

TEST_CASE("k=1 leaves the matrix unchanged") {
  const Mesh mesh = build_cube_hierarchy(3, 2, 0, BoundaryAssignment::neumann_lower());
  const Space s = enumerate_dofs(mesh, 0, SpaceKind::cg, 1);
  const CGLaplaceOperator op(s, Coefficient::uniform(1.0));
  const CondensedCG cond(op);
  const SparseMatrix full =
      probe_assemble([&](std::span<const double> x, std::span<double> y) { op.apply(x, y); }, op.size());
  REQUIRE(cond.size() == full.rows());
  for (int i = 0; i < full.rows(); ++i)
    for (int j = 0; j < full.cols(); ++j) CHECK(std::abs(cond.matrix()(i, j) - full(i, j)) < 1e-13);
}

TEST_CASE("condensed solve matches the full solve") {
  const Mesh cube = build_cube_hierarchy(3, 2, 0, BoundaryAssignment::neumann_lower());
  check_equivalence(cube, 2, gaussian_case(3), 1e-9);
  check_equivalence(cube, 3, gaussian_case(3), 1e-9);
  const Mesh square = build_cube_hierarchy(2, 3, 0, BoundaryAssignment::neumann_lower());
  check_equivalence(square, 4, gaussian_case(2), 1e-9);
  const Mesh shell = build_shell_mesh(0);
  check_equivalence(shell, 2, shell_variable_case(ShellCoefficient::squared_product, 3.0), 1e-9);
}

TEST_CASE("condensed matrix is symmetric") {
  const Mesh shell = build_shell_mesh(0);
  const Space s = enumerate_dofs(shell, 0, SpaceKind::cg, 3);
  const CGLaplaceOperator op(s, Coefficient::uniform(1.0));
  const CondensedCG cond(op);
  CHECK(cond.n_classes() == 6);
  const SparseMatrix& a = cond.matrix();
  const double scale = a.max_abs();
  for (int i = 0; i < a.rows(); ++i)
    for (auto p = a.row_ptr()[i]; p < a.row_ptr()[i + 1]; ++p)
      CHECK(std::abs(a.values()[p] - a(a.col_idx()[p], i)) < 1e-12 * scale);
  CHECK(cond.memory_bytes() > a.memory_bytes());
}
