#include "fembench/problems.hpp"

#include "fembench/geometry.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace fembench {

namespace {

constexpr double centers[3][3] = {{-0.5, 0.5, 0.25}, {-0.6, -0.5, -0.125}, {0.5, -0.5, 0.5}};

struct Gaussians {
  int dim;
  double scale;

  explicit Gaussians(int d) : dim(d), scale(std::pow(1.0 / (gaussian_width * std::sqrt(2.0 * std::numbers::pi)), d)) {}

  double value(const Point& x) const {
    double s = 0.0;
    for (const auto& c : centers) s += std::exp(-dist2(x, c) / (gaussian_width * gaussian_width));
    return scale * s;
  }

  Point gradient(const Point& x) const {
    Point g{0, 0, 0};
    const double a2 = gaussian_width * gaussian_width;
    for (const auto& c : centers) {
      const double e = scale * std::exp(-dist2(x, c) / a2);
      for (int i = 0; i < dim; ++i) g[i] += -2.0 * (x[i] - c[i]) / a2 * e;
    }
    return g;
  }

  double laplacian(const Point& x) const {
    double s = 0.0;
    const double a2 = gaussian_width * gaussian_width;
    for (const auto& c : centers) {
      const double r2 = dist2(x, c);
      s += scale * std::exp(-r2 / a2) * (4.0 * r2 / (a2 * a2) - 2.0 * dim / a2);
    }
    return s;
  }

  double dist2(const Point& x, const double* c) const {
    double r2 = 0.0;
    for (int i = 0; i < dim; ++i) r2 += (x[i] - c[i]) * (x[i] - c[i]);
    return r2;
  }
};

}  // namespace

double ManufacturedCase::g_neumann(const Point& x, const double* normal) const {
  const Point g = grad_u(x);
  double s = 0.0;
  for (int i = 0; i < dim; ++i) s += g[i] * normal[i];
  return -kappa(x) * s;
}

ManufacturedCase gaussian_case(int dim) {
  if (dim != 2 && dim != 3) throw std::invalid_argument("gaussian_case: dim must be 2 or 3");
  const Gaussians g(dim);
  ManufacturedCase c;
  c.name = "gaussian";
  c.dim = dim;
  c.domain = MeshKind::cartesian;
  c.kappa = Coefficient::uniform(1.0);
  c.u = [g](const Point& x) { return g.value(x); };
  c.grad_u = [g](const Point& x) { return g.gradient(x); };
  c.grad_kappa = [](const Point&) { return Point{0, 0, 0}; };
  c.f = [g](const Point& x) { return -g.laplacian(x); };
  return c;
}

ManufacturedCase shell_variable_case(ShellCoefficient variant, double amplitude) {
  const Gaussians g(3);
  const bool squared = variant == ShellCoefficient::squared_product;
  constexpr double two_pi = 2.0 * std::numbers::pi;
  auto arg = [](const Point& x, int e) { return two_pi * x[e] + 0.1 * (e + 1); };
  auto kappa = [=](const Point& x) {
    double p = 1.0;
    for (int e = 0; e < 3; ++e) {
      const double c = std::cos(arg(x, e));
      p *= squared ? c * c : c;
    }
    return 1.0 + amplitude * p;
  };
  auto grad_kappa = [=](const Point& x) {
    Point gk{0, 0, 0};
    for (int i = 0; i < 3; ++i) {
      double p = amplitude;
      for (int e = 0; e < 3; ++e) {
        const double c = std::cos(arg(x, e));
        const double s = std::sin(arg(x, e));
        if (e == i)
          p *= squared ? -2.0 * two_pi * c * s : -two_pi * s;
        else
          p *= squared ? c * c : c;
      }
      gk[i] = p;
    }
    return gk;
  };

  ManufacturedCase c;
  c.name = squared ? "shell-squared" : "shell";
  c.dim = 3;
  c.domain = MeshKind::shell;
  c.kappa = Coefficient::variable(kappa);
  c.u = [g](const Point& x) { return g.value(x); };
  c.grad_u = [g](const Point& x) { return g.gradient(x); };
  c.grad_kappa = grad_kappa;
  c.f = [g, kappa, grad_kappa](const Point& x) {
    const Point gu = g.gradient(x);
    const Point gk = grad_kappa(x);
    return -kappa(x) * g.laplacian(x) - (gk[0] * gu[0] + gk[1] * gu[1] + gk[2] * gu[2]);
  };
  return c;
}

double min_kappa(const Coefficient& kappa, const GeometryCache& geo) {
  if (kappa.is_constant) return kappa.constant;
  double m = INFINITY;
  for (int c = 0; c < geo.n_cells(); ++c)
    for (int q = 0; q < geo.n_q(); ++q) m = std::min(m, kappa(geo.point(c, q)));
  return m;
}

void validate_coefficient(const Coefficient& kappa, const GeometryCache& geo) {
  auto fail = [](const Point& x, double k) {
    std::ostringstream os;
    os << "coefficient is not positive: kappa(" << x[0] << ", " << x[1] << ", " << x[2] << ") = " << k;
    throw std::domain_error(os.str());
  };
  if (kappa.is_constant) {
    if (!(kappa.constant > 0.0)) fail({0, 0, 0}, kappa.constant);
    return;
  }
  for (int c = 0; c < geo.n_cells(); ++c)
    for (int q = 0; q < geo.n_q(); ++q) {
      const double k = kappa(geo.point(c, q));
      if (!(k > 0.0)) fail(geo.point(c, q), k);
    }
}

}  // namespace fembench
