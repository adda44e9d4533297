#include "fembench/error_norms.hpp"

#include "fembench/geometry.hpp"
#include "fembench/tensor_basis.hpp"

#include <cmath>
#include <stdexcept>

namespace fembench {

namespace {

// Accumulates sum (u_h - u)^2 JxW and sum u^2 JxW over components.
template <typename Exact>
std::pair<double, double> accumulate(const Space& space, int n_comp, const std::vector<std::span<const double>>& comps,
                                     const Exact& exact) {
  if (space.kind() == SpaceKind::trace) throw std::invalid_argument("relative_l2_error: needs a cell-based space");
  for (const auto& c : comps)
    if (static_cast<int>(c.size()) != space.n_dofs()) throw std::invalid_argument("relative_l2_error: size mismatch");
  const int d = space.dim(), k = space.degree(), n = k + 1, nq = k + 2;
  GeometryCache geo(space.mesh(), space.level(), nq, false, true);
  const Matrix1D v = lagrange_values(gauss_lobatto_nodes(k), geo.rule().points);
  const int m = d == 3 ? n * n * n : n * n;
  double err = 0.0, ref = 0.0;
#pragma omp parallel for reduction(+ : err, ref) schedule(static)
  for (int c = 0; c < space.n_entities(); ++c) {
    const auto dofs = space.entity_dofs(c);
    std::array<double, 3> uh{};
    for (int q = 0; q < geo.n_q(); ++q) {
      const int q0 = q % nq, q1 = (q / nq) % nq, q2 = q / (nq * nq);
      uh = {0.0, 0.0, 0.0};
      for (int j = 0; j < m; ++j) {
        const int j0 = j % n, j1 = (j / n) % n, j2 = j / (n * n);
        const double phi = v(q0, j0) * v(q1, j1) * (d == 3 ? v(q2, j2) : 1.0);
        for (int a = 0; a < n_comp; ++a) uh[a] += phi * comps[a][dofs[j]];
      }
      const auto ex = exact(geo.point(c, q));
      const double w = geo.jxw(c, q);
      for (int a = 0; a < n_comp; ++a) {
        err += (uh[a] - ex[a]) * (uh[a] - ex[a]) * w;
        ref += ex[a] * ex[a] * w;
      }
    }
  }
  return {err, ref};
}

L2Error finish(std::pair<double, double> sums) { return {std::sqrt(sums.first), std::sqrt(sums.second)}; }

}  // namespace

double L2Error::relative() const {
  if (!(norm > 0.0)) throw std::domain_error("relative_l2_error: exact solution has zero norm");
  return error / norm;
}

L2Error l2_error(const Space& space, std::span<const double> u, const std::function<double(const Point&)>& exact) {
  return finish(accumulate(space, 1, {u}, [&](const Point& x) { return Point{exact(x), 0.0, 0.0}; }));
}

L2Error l2_error(const Space& space, const std::array<std::vector<double>, 3>& q,
                 const std::function<Point(const Point&)>& exact) {
  std::vector<std::span<const double>> comps;
  for (int a = 0; a < space.dim(); ++a) comps.emplace_back(q[a]);
  return finish(accumulate(space, space.dim(), comps, exact));
}

double relative_l2_error(const Space& space, std::span<const double> u,
                         const std::function<double(const Point&)>& exact) {
  return l2_error(space, u, exact).relative();
}

double relative_l2_error(const Space& space, const std::array<std::vector<double>, 3>& q,
                         const std::function<Point(const Point&)>& exact) {
  return l2_error(space, q, exact).relative();
}

double observed_order(double e_coarse, double e_fine) { return std::log2(e_coarse / e_fine); }

}  // namespace fembench
