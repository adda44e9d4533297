#include "doctest.h"
#include "fembench/geometry.hpp"
#include "fembench/spaces.hpp"
#include "fembench/tensor_basis.hpp"

#include <algorithm>
#include <cmath>
#include <random>

using namespace fembench;

namespace {

std::vector<double> random_vector(std::size_t n, unsigned seed) {
  std::mt19937 gen(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = dist(gen);
  return v;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Every cell-local node maps to the stored position of its global dof.
double max_node_mismatch(const Space& s) {
  const Mesh& mesh = s.mesh();
  const int dim = mesh.dim();
  const auto nodes = gauss_lobatto_nodes(s.degree());
  const std::array<std::vector<double>, 3> axes{nodes, nodes, dim == 3 ? nodes : std::vector<double>{0.0}};
  double worst = 0.0;
  for (int c = 0; c < mesh.level(s.level()).n_cells; ++c) {
    const auto mp = map_cell(mesh, s.level(), c, axes);
    const auto d = s.entity_dofs(c);
    for (std::size_t i = 0; i < d.size(); ++i)
      for (int e = 0; e < 3; ++e) worst = std::max(worst, std::abs(mp.points[i][e] - s.dof_points()[d[i]][e]));
  }
  return worst;
}

int count_distinct_points(const std::vector<Point>& pts) {
  auto sorted = pts;
  for (auto& p : sorted)
    for (auto& x : p) x = std::round(x * 1e9) / 1e9;
  std::sort(sorted.begin(), sorted.end());
  return static_cast<int>(std::unique(sorted.begin(), sorted.end()) - sorted.begin());
}

}  // namespace

TEST_CASE("dof counts") {
  Mesh m2 = build_cartesian_mesh(2, {2, 2, 1}, {0, 0, 0}, {1, 1, 0}, BoundaryAssignment::all(BoundaryKind::dirichlet));
  CHECK(enumerate_dofs(m2, 0, SpaceKind::cg, 1).n_dofs() == 9);
  for (int dim = 2; dim <= 3; ++dim)
    for (int n = 1; n <= 3; ++n) {
      Mesh m = build_cube_hierarchy(dim, n, 0, BoundaryAssignment::neumann_lower());
      const int n_cells = m.level(0).n_cells;
      for (int k = 1; k <= 4; ++k) {
        Space cg = enumerate_dofs(m, 0, SpaceKind::cg, k);
        CHECK(cg.n_dofs() == static_cast<int>(std::pow(k * n + 1, dim)));
        CHECK(count_distinct_points(cg.dof_points()) == cg.n_dofs());
        CHECK(max_node_mismatch(cg) < 1e-14);
        CHECK(cg.n_skeleton() == cg.n_dofs() - n_cells * static_cast<int>(std::pow(k - 1, dim)));
        Space dg = enumerate_dofs(m, 0, SpaceKind::dg, k);
        CHECK(dg.n_dofs() == n_cells * static_cast<int>(std::pow(k + 1, dim)));
        Space tr = enumerate_dofs(m, 0, SpaceKind::trace, k);
        CHECK(tr.n_dofs() == m.level(0).n_faces() * static_cast<int>(std::pow(k + 1, dim - 1)));
      }
    }
  Mesh m3 = build_cube_hierarchy(3, 2, 0, BoundaryAssignment::all(BoundaryKind::dirichlet));
  CHECK(enumerate_dofs(m3, 0, SpaceKind::dg, 2).n_dofs() == 27 * 8);
  CHECK(enumerate_dofs(m3, 0, SpaceKind::cg_linear, 3).degree() == 1);
}

TEST_CASE("trace dof count for 64^3 cells at k=3") {
  Mesh m = build_cube_hierarchy(3, 64, 0, BoundaryAssignment::neumann_lower());
  CHECK(m.level(0).n_cells == 262144);
  CHECK(m.level(0).n_faces() == 3 * 64 * 64 * 65);
  Space tr = enumerate_dofs(m, 0, SpaceKind::trace, 3);
  CHECK(tr.n_dofs() == 12779520);
}

TEST_CASE("CG numbering on the shell is conforming") {
  Mesh m = build_shell_mesh(1);
  for (int k = 1; k <= 3; ++k) {
    Space cg = enumerate_dofs(m, 1, SpaceKind::cg, k);
    CHECK(max_node_mismatch(cg) < 1e-12);
    CHECK(count_distinct_points(cg.dof_points()) == cg.n_dofs());
    // boundary dofs sit on the inner or outer sphere; all are constrained
    for (int i = 0; i < cg.n_dofs(); ++i) {
      const auto& p = cg.dof_points()[i];
      const double r = std::sqrt(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]);
      const bool on_boundary = std::abs(r - 0.5) < 1e-5 || std::abs(r - 1.0) < 1e-5;
      CHECK(cg.is_constrained(i) == on_boundary);
    }
  }
}

TEST_CASE("Dirichlet sets follow the boundary assignment") {
  Mesh m = build_cube_hierarchy(3, 2, 0, BoundaryAssignment::neumann_lower());
  for (int k = 1; k <= 3; ++k) {
    Space cg = enumerate_dofs(m, 0, SpaceKind::cg, k);
    for (int i = 0; i < cg.n_dofs(); ++i) {
      const auto& p = cg.dof_points()[i];
      const bool upper = std::abs(p[0] - 1) < 1e-14 || std::abs(p[1] - 1) < 1e-14 || std::abs(p[2] - 1) < 1e-14;
      CHECK(cg.is_constrained(i) == upper);
    }
    Space tr = enumerate_dofs(m, 0, SpaceKind::trace, k);
    for (int i = 0; i < tr.n_dofs(); ++i) {
      const auto& p = tr.dof_points()[i];
      const bool upper = std::abs(p[0] - 1) < 1e-14 || std::abs(p[1] - 1) < 1e-14 || std::abs(p[2] - 1) < 1e-14;
      // edge nodes of a Neumann face may touch the Dirichlet boundary without being constrained
      if (tr.is_constrained(i)) CHECK(upper);
      if (!upper) CHECK(!tr.is_constrained(i));
    }
    CHECK(enumerate_dofs(m, 0, SpaceKind::dg, k).n_constrained() == 0);
  }
}

TEST_CASE("prolongation reproduces polynomials") {
  for (int dim = 2; dim <= 3; ++dim) {
    Mesh m = build_cube_hierarchy(dim, 1, 2, BoundaryAssignment::neumann_lower());
    for (SpaceKind kind : {SpaceKind::cg, SpaceKind::dg})
      for (int k = 1; k <= 3; ++k) {
        Space coarse = enumerate_dofs(m, 1, kind, k);
        Space fine = enumerate_dofs(m, 2, kind, k);
        SparseMatrix p = build_prolongation(coarse, fine);
        auto ones = p * std::vector<double>(coarse.n_dofs(), 1.0);
        for (double v : ones) CHECK(std::abs(v - 1.0) < 1e-13);
        auto poly = [k](const Point& x) {
          double v = x[0] + x[1];
          if (k >= 2) v += x[0] * x[1] - 0.5 * x[1] * x[1];
          if (k >= 3) v += x[0] * x[0] * x[0] + x[2] * x[1];
          return v;
        };
        auto fine_from_coarse = p * coarse.interpolate(poly);
        auto fine_direct = fine.interpolate(poly);
        double err = 0.0;
        for (int i = 0; i < fine.n_dofs(); ++i) err = std::max(err, std::abs(fine_from_coarse[i] - fine_direct[i]));
        CHECK(err < 1e-12);

        auto xc = random_vector(coarse.n_dofs(), 3);
        auto yf = random_vector(fine.n_dofs(), 4);
        const double lhs = dot(p * xc, yf);
        const double rhs = dot(xc, p.transpose() * yf);
        CHECK(std::abs(lhs - rhs) < 1e-13 * std::max(1.0, std::abs(lhs)));
      }
  }
}

TEST_CASE("same-level embedding of linear into higher degree") {
  Mesh m = build_cube_hierarchy(3, 2, 0, BoundaryAssignment::neumann_lower());
  Space lin = enumerate_dofs(m, 0, SpaceKind::cg_linear, 1);
  Space cg = enumerate_dofs(m, 0, SpaceKind::cg, 3);
  SparseMatrix e = build_interpolation(lin, cg);
  auto f = [](const Point& x) { return 1.0 + 2.0 * x[0] - x[1] + 0.5 * x[2]; };
  auto got = e * lin.interpolate(f);
  auto want = cg.interpolate(f);
  for (int i = 0; i < cg.n_dofs(); ++i) CHECK(std::abs(got[i] - want[i]) < 1e-13);
  CHECK_THROWS_AS(build_interpolation(cg, lin), std::invalid_argument);
}

TEST_CASE("trace to linear transfer") {
  for (int dim = 2; dim <= 3; ++dim) {
    Mesh m = build_cube_hierarchy(dim, 2, 0, BoundaryAssignment::neumann_lower());
    Space lin = enumerate_dofs(m, 0, SpaceKind::cg_linear, 1);
    for (int k = 1; k <= 3; ++k) {
      Space tr = enumerate_dofs(m, 0, SpaceKind::trace, k);
      SparseMatrix p = build_trace_to_linear(tr, lin);
      auto ones = p * std::vector<double>(lin.n_dofs(), 1.0);
      for (double v : ones) CHECK(std::abs(v - 1.0) < 1e-14);
      auto xs = p * lin.interpolate([](const Point& x) { return x[0]; });
      for (int i = 0; i < tr.n_dofs(); ++i) CHECK(std::abs(xs[i] - tr.dof_points()[i][0]) < 1e-14);
    }
  }
}
