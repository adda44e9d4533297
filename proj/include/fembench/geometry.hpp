#pragma once

#include "fembench/mesh.hpp"
#include "fembench/tensor_basis.hpp"

#include <array>
#include <vector>

namespace fembench {

/// Reference-to-physical mapping of one cell evaluated on a tensor grid of
/// reference points (one 1D point list per axis).
struct MappedPoints {
  std::vector<Point> points;
  std::vector<std::array<double, 9>> jacobian;  // J[i*3+a] = dx_i / dxi_a
};

MappedPoints map_cell(const Mesh& mesh, int level, int cell, const std::array<std::vector<double>, 3>& axis_points);

/// Per-quadrature-point geometry of one mesh level. Cartesian meshes store a
/// single inverse Jacobian and determinant per cell; curved meshes store one
/// per quadrature point. Face data is kept in each face's canonical point order.
class GeometryCache {
 public:
  GeometryCache(const Mesh& mesh, int level, int n_q, bool with_faces, bool with_points = true);

  int dim() const { return dim_; }
  int level() const { return level_; }
  int n_q_1d() const { return n_q_; }
  int n_q() const { return n_q_cell_; }
  int n_q_face() const { return n_q_face_; }
  int n_cells() const { return n_cells_; }
  bool affine() const { return affine_; }
  bool has_faces() const { return with_faces_; }
  const QuadratureRule1D& rule() const { return rule_; }
  const std::vector<double>& cell_weights() const { return cell_weights_; }
  const std::vector<double>& face_weights() const { return face_weights_; }

  /// Inverse Jacobian, row-major d x d with entry [a*d+i] = dxi_a/dx_i.
  const double* jinv(int cell, int q) const {
    return affine_ ? &jinv_[static_cast<std::size_t>(cell) * dim_ * dim_]
                   : &jinv_[(static_cast<std::size_t>(cell) * n_q_cell_ + q) * dim_ * dim_];
  }
  double jxw(int cell, int q) const {
    return affine_ ? cell_weights_[q] * det_[cell] : jxw_[static_cast<std::size_t>(cell) * n_q_cell_ + q];
  }
  const Point& point(int cell, int q) const { return points_[static_cast<std::size_t>(cell) * n_q_cell_ + q]; }
  double cell_volume(int cell) const { return volume_[cell]; }

  const double* face_normal(int face, int qf) const {
    return affine_ ? &normal_[static_cast<std::size_t>(face) * 3]
                   : &normal_[(static_cast<std::size_t>(face) * n_q_face_ + qf) * 3];
  }
  double face_jxw(int face, int qf) const {
    return affine_ ? face_weights_[qf] * face_factor_[face]
                   : face_jxw_[static_cast<std::size_t>(face) * n_q_face_ + qf];
  }
  const double* face_jinv(int face, int side, int qf) const;
  const Point& face_point(int face, int qf) const {
    return face_points_[static_cast<std::size_t>(face) * n_q_face_ + qf];
  }
  double face_area(int face) const { return area_[face]; }

  /// Cell-local face point index of canonical face point qf as seen from
  /// the given side, and its inverse.
  int local_of_canonical(int orientation, int qf) const { return local_of_canonical_[orientation][qf]; }
  int canonical_of_local(int orientation, int ql) const { return canonical_of_local_[orientation][ql]; }

  std::size_t memory_bytes() const;

 private:
  int dim_ = 3;
  int level_ = 0;
  int n_q_ = 0;
  int n_q_cell_ = 0;
  int n_q_face_ = 0;
  int n_cells_ = 0;
  bool affine_ = true;
  bool with_faces_ = false;
  QuadratureRule1D rule_;
  std::vector<double> cell_weights_;
  std::vector<double> face_weights_;
  std::vector<double> jinv_;
  std::vector<double> det_;
  std::vector<double> jxw_;
  std::vector<Point> points_;
  std::vector<double> volume_;
  std::vector<double> normal_;
  std::vector<double> face_factor_;
  std::vector<double> face_jxw_;
  std::vector<double> face_jinv_;  // curved: [face][side][qf][d*d]
  std::vector<int> face_cells_;    // affine: cell per side, for face_jinv
  std::vector<Point> face_points_;
  std::vector<double> area_;
  std::array<std::vector<int>, 8> local_of_canonical_;
  std::array<std::vector<int>, 8> canonical_of_local_;
};

/// Key identifying an affine cell's inverse Jacobian and volume, rounded so
/// that cells equal up to round-off share it.
std::vector<double> affine_signature(const GeometryCache& geo, int cell);

/// Inverse of a d x d matrix given as 3x3 storage J[i*3+a]; returns the
/// determinant and fills jinv[a*d+i].
double invert_jacobian(int dim, const std::array<double, 9>& jac, double* jinv);

}  // namespace fembench
