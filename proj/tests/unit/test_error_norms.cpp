#include "doctest.h"
#include "fembench/drivers.hpp"
#include "fembench/error_norms.hpp"
#include "fembench/geometry.hpp"

#include <cmath>
#include <stdexcept>

using namespace fembench;

namespace {

double smooth_u(const Point& x) { return std::sin(x[0] + 0.3) * std::cos(0.7 * x[1]) * std::exp(0.5 * x[2]); }

// u = x^2 + y z - 0.5 z^2 + x, kappa = 1, so f = -2 + 1 = -1
ManufacturedCase quadratic_case() {
  ManufacturedCase c;
  c.name = "quadratic";
  c.dim = 3;
  c.kappa = Coefficient::uniform(1.0);
  c.u = [](const Point& x) { return x[0] * x[0] + x[1] * x[2] - 0.5 * x[2] * x[2] + x[0]; };
  c.grad_u = [](const Point& x) { return Point{2.0 * x[0] + 1.0, x[2], x[1] - x[2]}; };
  c.grad_kappa = [](const Point&) { return Point{0, 0, 0}; };
  c.f = [](const Point&) { return -1.0; };
  return c;
}

}  // namespace

TEST_CASE("observed order") {
  CHECK(observed_order(4.0, 1.0) == doctest::Approx(2.0));
  CHECK(observed_order(1e-3, 1e-3 / 32.0) == doctest::Approx(5.0));
}

TEST_CASE("relative L2 error") {
  const Mesh mesh = build_cube_hierarchy(3, 1, 3, BoundaryAssignment::neumann_lower());
  const Space s = enumerate_dofs(mesh, 1, SpaceKind::dg, 2);
  const auto exact = s.interpolate(smooth_u);
  CHECK(relative_l2_error(s, exact, [](const Point& x) { return 2.0 * smooth_u(x); }) == doctest::Approx(0.5).epsilon(0.01));
  std::vector<double> zero(s.n_dofs(), 0.0);
  CHECK(relative_l2_error(s, zero, smooth_u) == doctest::Approx(1.0));
  CHECK_THROWS_AS(relative_l2_error(s, zero, [](const Point&) { return 0.0; }), std::domain_error);

  // a polynomial in the space is represented exactly
  const auto poly = [](const Point& x) { return 1.0 + x[0] * x[1] - x[2] * x[2]; };
  CHECK(relative_l2_error(s, s.interpolate(poly), poly) < 1e-13);

  // vector form: each component
  std::array<std::vector<double>, 3> q{s.interpolate(poly), s.interpolate(poly), zero};
  CHECK(relative_l2_error(s, q, [&](const Point& x) { return Point{poly(x), poly(x), 0.0}; }) < 1e-13);
}

TEST_CASE("absolute error and exact norm") {
  // three nearly disjoint Gaussians: ||u||^2 = 3 c^2 (pi a^2 / 2)^(3/2), c = (a sqrt(2 pi))^-3
  const Mesh mesh = build_cube_hierarchy(3, 2, 3, BoundaryAssignment::neumann_lower());
  const Space s = enumerate_dofs(mesh, 3, SpaceKind::dg, 2);
  const auto pb = gaussian_case(3);
  const double a = gaussian_width, c = std::pow(a * std::sqrt(2.0 * M_PI), -3.0);
  const double norm = std::sqrt(3.0 * c * c * std::pow(M_PI * a * a / 2.0, 1.5));
  CHECK(norm == doctest::Approx(1.727).epsilon(1e-3));
  std::vector<double> zero(s.n_dofs(), 0.0);
  const L2Error e = l2_error(s, zero, pb.u);
  CHECK(e.norm == doctest::Approx(norm).epsilon(1e-5));
  CHECK(e.error == e.norm);
  const auto ui = s.interpolate(pb.u);
  const L2Error ei = l2_error(s, ui, pb.u);
  CHECK(ei.relative() == doctest::Approx(relative_l2_error(s, ui, pb.u)).epsilon(1e-14));
  CHECK(ei.error == doctest::Approx(ei.relative() * norm).epsilon(1e-5));
}

TEST_CASE("interpolation error converges at order k+1") {
  const int k = 4;
  const Mesh mesh = build_cube_hierarchy(3, 1, 3, BoundaryAssignment::neumann_lower());
  double prev = -1.0;
  for (int l = 0; l <= 3; ++l) {
    const Space s = enumerate_dofs(mesh, l, SpaceKind::cg, k);
    const double e = relative_l2_error(s, s.interpolate(smooth_u), smooth_u);
    if (prev > 0.0) {
      CHECK(e < prev);
      if (l == 3) CHECK(observed_order(prev, e) >= k + 1);
    }
    prev = e;
  }

  // shell: curved cells with a degree-5 mapping
  const Mesh shell = build_shell_mesh(1);
  const Space s0 = enumerate_dofs(shell, 0, SpaceKind::dg, 3), s1 = enumerate_dofs(shell, 1, SpaceKind::dg, 3);
  const double e0 = relative_l2_error(s0, s0.interpolate(smooth_u), smooth_u);
  const double e1 = relative_l2_error(s1, s1.interpolate(smooth_u), smooth_u);
  CHECK(e1 * 8.0 < e0);
}

TEST_CASE("a CG solve reproduces a quadratic exactly") {
  const Mesh mesh = build_cube_hierarchy(3, 2, 0, BoundaryAssignment::neumann_lower());
  const auto c = quadratic_case();
  const SolveResult r = solve_on_mesh(Method::cg_mf, mesh, 0, 2, c, {1e-12, 100});
  CHECK(r.converged);
  CHECK(r.l2_error <= 1e-9);
  const SolveResult dg = solve_on_mesh(Method::dgsip_mf, mesh, 0, 2, c, {1e-12, 200});
  CHECK(dg.converged);
  CHECK(dg.l2_error <= 1e-9);
}
