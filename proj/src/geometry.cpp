#include "fembench/geometry.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace fembench {

MappedPoints map_cell(const Mesh& mesh, int level, int cell, const std::array<std::vector<double>, 3>& axis_points) {
  const int dim = mesh.dim();
  const auto support = mesh.support_points(level, cell);
  const auto& nodes = mesh.mapping_nodes();
  const int m = static_cast<int>(nodes.size());
  std::array<Matrix1D, 3> val, der;
  std::array<int, 3> np{1, 1, 1};
  for (int a = 0; a < dim; ++a) {
    val[a] = lagrange_values(nodes, axis_points[a]);
    der[a] = lagrange_derivatives(nodes, axis_points[a]);
    np[a] = static_cast<int>(axis_points[a].size());
  }
  const int m2 = dim == 3 ? m : 1;
  MappedPoints out;
  const int total = np[0] * np[1] * np[2];
  out.points.assign(total, Point{0.0, 0.0, 0.0});
  out.jacobian.assign(total, std::array<double, 9>{});
  for (int p2 = 0; p2 < np[2]; ++p2)
    for (int p1 = 0; p1 < np[1]; ++p1)
      for (int p0 = 0; p0 < np[0]; ++p0) {
        const int p = p0 + np[0] * (p1 + np[1] * p2);
        Point& x = out.points[p];
        auto& J = out.jacobian[p];
        for (int s2 = 0; s2 < m2; ++s2)
          for (int s1 = 0; s1 < m; ++s1)
            for (int s0 = 0; s0 < m; ++s0) {
              const Point& X = support[s0 + m * (s1 + m * s2)];
              const double v0 = val[0](p0, s0), v1 = val[1](p1, s1);
              const double v2 = dim == 3 ? val[2](p2, s2) : 1.0;
              const double w = v0 * v1 * v2;
              const double d0 = der[0](p0, s0) * v1 * v2;
              const double d1 = v0 * der[1](p1, s1) * v2;
              const double d2 = dim == 3 ? v0 * v1 * der[2](p2, s2) : 0.0;
              for (int i = 0; i < 3; ++i) {
                x[i] += w * X[i];
                J[i * 3 + 0] += d0 * X[i];
                J[i * 3 + 1] += d1 * X[i];
                J[i * 3 + 2] += d2 * X[i];
              }
            }
      }
  return out;
}

double invert_jacobian(int dim, const std::array<double, 9>& J, double* jinv) {
  if (dim == 2) {
    const double det = J[0] * J[4] - J[1] * J[3];
    // jinv[a*2+i] = (J^{-1})_{a i}
    jinv[0] = J[4] / det;
    jinv[1] = -J[1] / det;
    jinv[2] = -J[3] / det;
    jinv[3] = J[0] / det;
    return det;
  }
  const double det = J[0] * (J[4] * J[8] - J[5] * J[7]) - J[1] * (J[3] * J[8] - J[5] * J[6]) +
                     J[2] * (J[3] * J[7] - J[4] * J[6]);
  jinv[0] = (J[4] * J[8] - J[5] * J[7]) / det;
  jinv[1] = (J[2] * J[7] - J[1] * J[8]) / det;
  jinv[2] = (J[1] * J[5] - J[2] * J[4]) / det;
  jinv[3] = (J[5] * J[6] - J[3] * J[8]) / det;
  jinv[4] = (J[0] * J[8] - J[2] * J[6]) / det;
  jinv[5] = (J[2] * J[3] - J[0] * J[5]) / det;
  jinv[6] = (J[3] * J[7] - J[4] * J[6]) / det;
  jinv[7] = (J[1] * J[6] - J[0] * J[7]) / det;
  jinv[8] = (J[0] * J[4] - J[1] * J[3]) / det;
  return det;
}

namespace {

// Reference point lists (per axis) of local face f sampled at the face rule.
std::array<std::vector<double>, 3> face_axis_points(int dim, int local_face, const std::vector<double>& pts) {
  std::array<std::vector<double>, 3> ap{std::vector<double>{0.0}, std::vector<double>{0.0}, std::vector<double>{0.0}};
  const int axis = local_face / 2;
  for (int e = 0; e < dim; ++e) ap[e] = e == axis ? std::vector<double>{local_face % 2 ? 1.0 : -1.0} : pts;
  return ap;
}

// The face grid from face_axis_points has extent 1 along the face axis, so
// face-local (a, b) lands at a + n*b in x-fastest order.
int face_grid_index(int dim, int n, int ql) { return dim == 2 ? ql % n : ql; }

}  // namespace

GeometryCache::GeometryCache(const Mesh& mesh, int level, int n_q, bool with_faces, bool with_points)
    : dim_(mesh.dim()), level_(level), n_q_(n_q), affine_(mesh.affine()), with_faces_(with_faces) {
  const MeshLevel& L = mesh.level(level);
  n_cells_ = L.n_cells;
  rule_ = gauss_legendre_rule(n_q);
  n_q_cell_ = dim_ == 3 ? n_q * n_q * n_q : n_q * n_q;
  n_q_face_ = dim_ == 3 ? n_q * n_q : n_q;
  cell_weights_.resize(n_q_cell_);
  for (int q = 0; q < n_q_cell_; ++q) {
    double w = rule_.weights[q % n_q] * rule_.weights[(q / n_q) % n_q];
    if (dim_ == 3) w *= rule_.weights[q / (n_q * n_q)];
    cell_weights_[q] = w;
  }
  face_weights_.resize(n_q_face_);
  for (int q = 0; q < n_q_face_; ++q)
    face_weights_[q] = dim_ == 3 ? rule_.weights[q % n_q] * rule_.weights[q / n_q] : rule_.weights[q];

  const int n_orient = dim_ == 3 ? 8 : 2;
  for (int o = 0; o < n_orient; ++o) {
    local_of_canonical_[o].resize(n_q_face_);
    canonical_of_local_[o].resize(n_q_face_);
    for (int ql = 0; ql < n_q_face_; ++ql) {
      const int c = canonical_face_index(dim_, o, n_q, ql % n_q, ql / n_q);
      canonical_of_local_[o][ql] = c;
      local_of_canonical_[o][c] = ql;
    }
  }

  const int dd = dim_ * dim_;
  const std::array<std::vector<double>, 3> cell_axes{rule_.points, rule_.points,
                                                     dim_ == 3 ? rule_.points : std::vector<double>{0.0}};
  if (affine_) {
    jinv_.resize(static_cast<std::size_t>(n_cells_) * dd);
    det_.resize(n_cells_);
  } else {
    jinv_.resize(static_cast<std::size_t>(n_cells_) * n_q_cell_ * dd);
    jxw_.resize(static_cast<std::size_t>(n_cells_) * n_q_cell_);
  }
  if (with_points) points_.resize(static_cast<std::size_t>(n_cells_) * n_q_cell_);
  volume_.assign(n_cells_, 0.0);

  for (int c = 0; c < n_cells_; ++c) {
    if (affine_) {
      const Point lo = mesh.map_exact(level, c, {-1.0, -1.0, -1.0});
      const Point hi = mesh.map_exact(level, c, {1.0, 1.0, 1.0});
      std::array<double, 9> J{};
      for (int e = 0; e < dim_; ++e) J[e * 3 + e] = 0.5 * (hi[e] - lo[e]);
      const double det = invert_jacobian(dim_, J, &jinv_[static_cast<std::size_t>(c) * dd]);
      if (!(det > 0.0)) throw std::runtime_error("geometry: nonpositive Jacobian determinant in cell " + std::to_string(c));
      det_[c] = det;
      double vol = 0.0;
      for (int q = 0; q < n_q_cell_; ++q) vol += cell_weights_[q] * det;
      volume_[c] = vol;
      if (with_points)
        for (int q = 0; q < n_q_cell_; ++q) {
          Point& x = points_[static_cast<std::size_t>(c) * n_q_cell_ + q];
          const int idx[3] = {q % n_q, (q / n_q) % n_q, q / (n_q * n_q)};
          x = {0.0, 0.0, 0.0};
          for (int e = 0; e < dim_; ++e)
            x[e] = lo[e] + 0.5 * (rule_.points[idx[e]] + 1.0) * (hi[e] - lo[e]);
        }
      continue;
    }
    const MappedPoints mp = map_cell(mesh, level, c, cell_axes);
    double vol = 0.0;
    for (int q = 0; q < n_q_cell_; ++q) {
      const double det =
          invert_jacobian(dim_, mp.jacobian[q], &jinv_[(static_cast<std::size_t>(c) * n_q_cell_ + q) * dd]);
      if (!(det > 0.0)) throw std::runtime_error("geometry: nonpositive Jacobian determinant in cell " + std::to_string(c));
      jxw_[static_cast<std::size_t>(c) * n_q_cell_ + q] = cell_weights_[q] * det;
      vol += cell_weights_[q] * det;
      if (with_points) points_[static_cast<std::size_t>(c) * n_q_cell_ + q] = mp.points[q];
    }
    volume_[c] = vol;
  }

  if (!with_faces) return;
  const int n_faces = L.n_faces();
  area_.assign(n_faces, 0.0);
  if (with_points) face_points_.resize(static_cast<std::size_t>(n_faces) * n_q_face_);
  if (affine_) {
    normal_.assign(static_cast<std::size_t>(n_faces) * 3, 0.0);
    face_factor_.resize(n_faces);
    face_cells_.resize(static_cast<std::size_t>(n_faces) * 2);
  } else {
    normal_.assign(static_cast<std::size_t>(n_faces) * n_q_face_ * 3, 0.0);
    face_jxw_.resize(static_cast<std::size_t>(n_faces) * n_q_face_);
    face_jinv_.resize(static_cast<std::size_t>(n_faces) * 2 * n_q_face_ * dd, 0.0);
  }
  double jinv_buf[9];
  for (int f = 0; f < n_faces; ++f) {
    const Face& face = L.faces[f];
    if (affine_) {
      face_cells_[2 * f] = face.cell[0];
      face_cells_[2 * f + 1] = face.cell[1] < 0 ? face.cell[0] : face.cell[1];
    }
    for (int side = 0; side < (face.at_boundary() ? 1 : 2); ++side) {
      const int c = face.cell[side];
      const int lf = face.local_face[side];
      const int axis = lf / 2;
      const double sign = lf % 2 ? 1.0 : -1.0;
      if (affine_) {
        if (side == 1) continue;
        const double* ji = jinv(c, 0);
        double len2 = 0.0;
        for (int i = 0; i < dim_; ++i) len2 += ji[axis * dim_ + i] * ji[axis * dim_ + i];
        const double len = std::sqrt(len2);
        for (int i = 0; i < dim_; ++i) normal_[3 * f + i] = sign * ji[axis * dim_ + i] / len;
        face_factor_[f] = det_[c] * len;
        for (int q = 0; q < n_q_face_; ++q) area_[f] += face_weights_[q] * face_factor_[f];
        if (with_points) {
          const MappedPoints mp = map_cell(mesh, level, c, face_axis_points(dim_, lf, rule_.points));
          for (int qf = 0; qf < n_q_face_; ++qf) {
            const int ql = local_of_canonical(face.orientation[0], qf);
            face_points_[static_cast<std::size_t>(f) * n_q_face_ + qf] = mp.points[face_grid_index(dim_, n_q, ql)];
          }
        }
        continue;
      }
      const MappedPoints mp = map_cell(mesh, level, c, face_axis_points(dim_, lf, rule_.points));
      for (int qf = 0; qf < n_q_face_; ++qf) {
        const int ql = local_of_canonical(face.orientation[side], qf);
        const int g = face_grid_index(dim_, n_q, ql);
        const double det = invert_jacobian(dim_, mp.jacobian[g], jinv_buf);
        if (!(det > 0.0))
          throw std::runtime_error("geometry: nonpositive Jacobian determinant on face of cell " + std::to_string(c));
        double* dst = &face_jinv_[((static_cast<std::size_t>(f) * 2 + side) * n_q_face_ + qf) * dd];
        for (int i = 0; i < dd; ++i) dst[i] = jinv_buf[i];
        if (side == 1) continue;
        double len2 = 0.0;
        for (int i = 0; i < dim_; ++i) len2 += jinv_buf[axis * dim_ + i] * jinv_buf[axis * dim_ + i];
        const double len = std::sqrt(len2);
        for (int i = 0; i < dim_; ++i)
          normal_[(static_cast<std::size_t>(f) * n_q_face_ + qf) * 3 + i] = sign * jinv_buf[axis * dim_ + i] / len;
        const double jxw = face_weights_[qf] * det * len;
        face_jxw_[static_cast<std::size_t>(f) * n_q_face_ + qf] = jxw;
        area_[f] += jxw;
        if (with_points) face_points_[static_cast<std::size_t>(f) * n_q_face_ + qf] = mp.points[g];
      }
    }
  }
}

const double* GeometryCache::face_jinv(int face, int side, int qf) const {
  if (affine_) return jinv(face_cells_[2 * face + side], 0);
  return &face_jinv_[((static_cast<std::size_t>(face) * 2 + side) * n_q_face_ + qf) * dim_ * dim_];
}

std::size_t GeometryCache::memory_bytes() const {
  return 8 * (jinv_.size() + det_.size() + jxw_.size() + normal_.size() + face_factor_.size() + face_jxw_.size() +
              face_jinv_.size() + volume_.size() + area_.size()) +
         24 * (points_.size() + face_points_.size()) + 4 * face_cells_.size();
}

namespace {

double snap(double v) {
  int e = 0;
  const double m = std::frexp(v, &e);
  return std::ldexp(std::round(std::ldexp(m, 40)), e - 40);
}

}  // namespace

std::vector<double> affine_signature(const GeometryCache& geo, int cell) {
  const int d = geo.dim();
  std::vector<double> key;
  for (int i = 0; i < d * d; ++i) key.push_back(snap(geo.jinv(cell, 0)[i]));
  key.push_back(snap(geo.jxw(cell, 0) / geo.cell_weights()[0]));
  return key;
}

}  // namespace fembench
