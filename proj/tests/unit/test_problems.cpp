#include "doctest.h"
#include "fembench/geometry.hpp"
#include "fembench/problems.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

using namespace fembench;

namespace {

// -div(kappa grad u) by nested central differences of u and kappa only
double fd_forcing(const ManufacturedCase& c, const Point& x, double h) {
  double s = 0.0;
  for (int i = 0; i < c.dim; ++i) {
    Point xp = x, xm = x, hp = x, hm = x;
    xp[i] += h;
    xm[i] -= h;
    hp[i] += 0.5 * h;
    hm[i] -= 0.5 * h;
    const double u0 = c.u(x);
    s += (c.kappa(hp) * (c.u(xp) - u0) - c.kappa(hm) * (u0 - c.u(xm))) / (h * h);
  }
  return -s;
}

std::vector<Point> sample(MeshKind domain, int dim, unsigned seed) {
  std::mt19937 gen(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<Point> pts;
  while (pts.size() < 100) {
    Point p{u(gen), u(gen), dim == 3 ? u(gen) : 0.0};
    if (domain == MeshKind::shell) {
      const double r = std::sqrt(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]);
      if (r < 0.5 || r > 1.0) continue;
    }
    pts.push_back(p);
  }
  return pts;
}

void check_forcing(const ManufacturedCase& c, unsigned seed) {
  const auto pts = sample(c.domain, c.dim, seed);
  double fmax = 0.0, diff = 0.0;
  for (const auto& x : pts) {
    const double f = c.f(x);
    fmax = std::max(fmax, std::abs(f));
    diff = std::max(diff, std::abs(f - fd_forcing(c, x, 1e-4)));
  }
  CHECK(fmax > 0.0);
  CHECK(diff <= 1e-6 * fmax);
}

}  // namespace

TEST_CASE("Gaussian case") {
  const auto c = gaussian_case(3);
  CHECK(c.kappa.is_constant);
  CHECK(c.kappa({0.3, 0.1, 0.2}) == 1.0);
  const double peak = std::pow(1.0 / (0.2 * std::sqrt(2.0 * std::numbers::pi)), 3);
  CHECK(c.u({-0.5, 0.5, 0.25}) == doctest::Approx(7.937).epsilon(1e-4));
  CHECK(std::abs(c.u({-0.5, 0.5, 0.25}) - peak) < 1e-12 * peak);
  for (const Point& center : {Point{-0.5, 0.5, 0.25}, Point{-0.6, -0.5, -0.125}, Point{0.5, -0.5, 0.5}}) {
    const Point g = c.grad_u(center);
    for (int i = 0; i < 3; ++i) CHECK(std::abs(g[i]) < 1e-9);
  }
  check_forcing(c, 1);
  check_forcing(gaussian_case(2), 2);
  CHECK_THROWS_AS(gaussian_case(1), std::invalid_argument);

  // Neumann data is -kappa grad u . n
  const double n[3] = {0.0, -1.0, 0.0};
  const Point x{0.2, -1.0, 0.1};
  CHECK(c.g_neumann(x, n) == doctest::Approx(c.grad_u(x)[1]));
  CHECK(c.g_dirichlet(x) == c.u(x));
}

TEST_CASE("shell variable-coefficient case") {
  const auto c = shell_variable_case();
  CHECK_FALSE(c.kappa.is_constant);
  CHECK(c.kappa({0, 0, 0}) == doctest::Approx(1.0 + 1e6 * std::cos(0.1) * std::cos(0.2) * std::cos(0.3)).epsilon(1e-14));
  CHECK(c.kappa({0, 0, 0}) == doctest::Approx(9.3162e5).epsilon(1e-4));
  check_forcing(c, 3);
  check_forcing(shell_variable_case(ShellCoefficient::squared_product), 4);

  // grad kappa against central differences
  for (const auto variant : {ShellCoefficient::product, ShellCoefficient::squared_product}) {
    const auto s = shell_variable_case(variant);
    const auto pts = sample(MeshKind::shell, 3, 5);
    double gmax = 0.0, diff = 0.0;
    const double h = 1e-5;
    for (const auto& x : pts) {
      const Point g = s.grad_kappa(x);
      for (int i = 0; i < 3; ++i) {
        Point xp = x, xm = x;
        xp[i] += h;
        xm[i] -= h;
        gmax = std::max(gmax, std::abs(g[i]));
        diff = std::max(diff, std::abs(g[i] - (s.kappa(xp) - s.kappa(xm)) / (2.0 * h)));
      }
    }
    CHECK(diff <= 1e-6 * gmax);
  }

  // the published product takes negative values on the shell
  const Mesh shell = build_shell_mesh(0);
  const GeometryCache geo(shell, 0, 3, false);
  CHECK(min_kappa(c.kappa, geo) < 0.0);
  CHECK_THROWS_AS(validate_coefficient(c.kappa, geo), std::domain_error);
  const auto sq = shell_variable_case(ShellCoefficient::squared_product);
  CHECK(min_kappa(sq.kappa, geo) >= 1.0);
  CHECK_NOTHROW(validate_coefficient(sq.kappa, geo));
  CHECK_THROWS_AS(validate_coefficient(Coefficient::uniform(0.0), geo), std::domain_error);
}
