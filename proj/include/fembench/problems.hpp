#pragma once

#include "fembench/mesh.hpp"

#include <functional>
#include <string>

namespace fembench {

class GeometryCache;

/// Diffusion coefficient: either a constant or a pointwise callback.
struct Coefficient {
  bool is_constant = true;
  double constant = 1.0;
  std::function<double(const Point&)> field;

  static Coefficient uniform(double c) { return {true, c, {}}; }
  static Coefficient variable(std::function<double(const Point&)> f) { return {false, 0.0, std::move(f)}; }
  double operator()(const Point& x) const { return is_constant ? constant : field(x); }
};

enum class ShellCoefficient {
  product,          // 1 + A prod cos(2 pi x_e + 0.1 e)
  squared_product,  // 1 + A prod cos^2(...), positive substitute, informational only
};

/// Exact solution and data of a manufactured Poisson problem -div(kappa grad u) = f.
struct ManufacturedCase {
  std::string name;
  int dim = 3;
  MeshKind domain = MeshKind::cartesian;
  Coefficient kappa;
  std::function<double(const Point&)> u;
  std::function<Point(const Point&)> grad_u;
  std::function<Point(const Point&)> grad_kappa;
  std::function<double(const Point&)> f;

  double g_dirichlet(const Point& x) const { return u(x); }
  /// Neumann data g_N = -kappa grad u . n for outward normal n.
  double g_neumann(const Point& x, const double* normal) const;
};

constexpr double gaussian_width = 0.2;

/// Sum of three Gaussians with kappa = 1 on the cube.
ManufacturedCase gaussian_case(int dim);

/// Same Gaussians on the shell with the oscillating coefficient.
ManufacturedCase shell_variable_case(ShellCoefficient variant = ShellCoefficient::product, double amplitude = 1e6);

/// Smallest kappa over the cell quadrature points of a geometry cache.
double min_kappa(const Coefficient& kappa, const GeometryCache& geo);

/// Throws std::domain_error naming the point if kappa <= 0 at any quadrature point.
void validate_coefficient(const Coefficient& kappa, const GeometryCache& geo);

}  // namespace fembench
