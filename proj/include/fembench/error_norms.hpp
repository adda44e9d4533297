#pragma once

#include "fembench/spaces.hpp"

#include <array>
#include <functional>
#include <span>
#include <vector>

namespace fembench {

struct L2Error {
  double error = 0.0;  // ||u_h - u||
  double norm = 0.0;   // ||u||
  /// Throws std::domain_error if the exact solution has zero norm.
  double relative() const;
};

/// Absolute error and exact-solution norm, integrated as below.
L2Error l2_error(const Space& space, std::span<const double> u, const std::function<double(const Point&)>& exact);
L2Error l2_error(const Space& space, const std::array<std::vector<double>, 3>& q,
                 const std::function<Point(const Point&)>& exact);

/// Relative L2 error of a CG or DG function against an exact solution,
/// integrated with k+2 Gauss points per direction on the mapped cells.
/// Throws std::domain_error if the exact solution has zero norm.
double relative_l2_error(const Space& space, std::span<const double> u,
                         const std::function<double(const Point&)>& exact);

/// Same for a vector field given as d component vectors on one space.
double relative_l2_error(const Space& space, const std::array<std::vector<double>, 3>& q,
                         const std::function<Point(const Point&)>& exact);

/// log2(e_coarse / e_fine) for a 2:1 refinement.
double observed_order(double e_coarse, double e_fine);

}  // namespace fembench
