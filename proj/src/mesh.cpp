#include "fembench/mesh.hpp"

#include "fembench/tensor_basis.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <stdexcept>
#include <string>

namespace fembench {

BoundaryAssignment BoundaryAssignment::all(BoundaryKind k) {
  BoundaryAssignment b;
  for (auto& axis : b.kind) axis = {k, k};
  return b;
}

BoundaryAssignment BoundaryAssignment::neumann_lower() {
  BoundaryAssignment b;
  for (auto& axis : b.kind) axis = {BoundaryKind::neumann, BoundaryKind::dirichlet};
  return b;
}

std::array<int, 2> face_tangent_axes(int dim, int local_face) {
  const int axis = local_face / 2;
  std::array<int, 2> t{-1, -1};
  int m = 0;
  for (int e = 0; e < dim; ++e)
    if (e != axis) t[m++] = e;
  return t;
}

std::array<int, 4> face_corners(int dim, int local_face) {
  const int axis = local_face / 2;
  const int side = local_face % 2;
  const auto t = face_tangent_axes(dim, local_face);
  std::array<int, 4> c{-1, -1, -1, -1};
  const int n_corners = 1 << (dim - 1);
  for (int q = 0; q < n_corners; ++q) {
    int v = side << axis;
    if (q & 1) v |= 1 << t[0];
    if (q & 2) v |= 1 << t[1];
    c[q] = v;
  }
  return c;
}

int face_orientation(int dim, const std::array<int, 4>& v) {
  if (dim == 2) return v[0] > v[1] ? 1 : 0;
  int o = 0;
  for (int q = 1; q < 4; ++q)
    if (v[q] < v[o]) o = q;
  const bool transposed = !(v[o ^ 1] < v[o ^ 2]);
  return o | (transposed ? 4 : 0);
}

int canonical_face_index(int dim, int orientation, int n, int a, int b) {
  if (dim == 2) return (orientation & 1) ? n - 1 - a : a;
  const int ap = (orientation & 1) ? n - 1 - a : a;
  const int bp = (orientation & 2) ? n - 1 - b : b;
  return (orientation & 4) ? bp + n * ap : ap + n * bp;
}

namespace {

double equiangular(double a) {
  if (a == 1.0 || a == -1.0) return a;
  return std::tan(std::numbers::pi * a / 4.0);
}

struct ShellPatch {
  int axis;
  int sign;
  int t1;
  int t2;
};

ShellPatch shell_patch(int p) {
  ShellPatch s;
  s.axis = p / 2;
  s.sign = p % 2 ? 1 : -1;
  const int u = (s.axis + 1) % 3, w = (s.axis + 2) % 3;
  // tangent order chosen so that e_t1 x e_t2 points outward
  s.t1 = s.sign > 0 ? u : w;
  s.t2 = s.sign > 0 ? w : u;
  return s;
}

}  // namespace

int Mesh::n_cells_per_patch(int level) const {
  const auto& s = levels_.at(level).subdivisions;
  return s[0] * s[1] * (dim_ == 3 ? s[2] : 1);
}

std::array<int, 3> Mesh::cell_index(int level, int cell, int& patch) const {
  const auto& s = levels_.at(level).subdivisions;
  const int per_patch = n_cells_per_patch(level);
  patch = cell / per_patch;
  int r = cell % per_patch;
  std::array<int, 3> idx{0, 0, 0};
  idx[0] = r % s[0];
  r /= s[0];
  idx[1] = r % s[1];
  idx[2] = r / s[1];
  return idx;
}

Point Mesh::map_exact(int level, int cell, const Point& xi) const {
  int patch = 0;
  const auto idx = cell_index(level, cell, patch);
  const auto& s = levels_.at(level).subdivisions;
  Point x{0.0, 0.0, 0.0};
  if (kind_ == MeshKind::cartesian) {
    for (int e = 0; e < dim_; ++e) {
      const double t = (idx[e] + 0.5 * (xi[e] + 1.0)) / s[e];
      x[e] = lower_[e] + (upper_[e] - lower_[e]) * t;
    }
    return x;
  }
  const ShellPatch sp = shell_patch(patch);
  const int n = s[0];
  const double a = -1.0 + 2.0 * (idx[0] + 0.5 * (xi[0] + 1.0)) / n;
  const double b = -1.0 + 2.0 * (idx[1] + 0.5 * (xi[1] + 1.0)) / n;
  const double c = (idx[2] + 0.5 * (xi[2] + 1.0)) / n;
  Point p{};
  p[sp.axis] = sp.sign;
  p[sp.t1] = equiangular(a);
  p[sp.t2] = equiangular(b);
  const double norm = std::sqrt(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]);
  const double r = shell_inner_radius + (shell_outer_radius - shell_inner_radius) * c;
  for (int e = 0; e < 3; ++e) x[e] = r * p[e] / norm;
  return x;
}

std::vector<Point> Mesh::support_points(int level, int cell) const {
  const int m = mapping_degree_ + 1;
  const int n_pts = dim_ == 3 ? m * m * m : m * m;
  std::vector<Point> pts(n_pts);
  for (int q = 0; q < n_pts; ++q) {
    Point xi{0.0, 0.0, 0.0};
    xi[0] = mapping_nodes_[q % m];
    xi[1] = mapping_nodes_[(q / m) % m];
    if (dim_ == 3) xi[2] = mapping_nodes_[q / (m * m)];
    pts[q] = map_exact(level, cell, xi);
  }
  return pts;
}

void Mesh::add_level(int refinement) {
  MeshLevel lv;
  for (int e = 0; e < 3; ++e) lv.subdivisions[e] = e < dim_ ? base_subdivisions_[e] << refinement : 1;
  const auto& s = lv.subdivisions;
  const int per_patch = s[0] * s[1] * s[2];
  lv.n_cells = per_patch * n_patches_;
  const int n_corners = 1 << dim_;
  const int n_local_faces = 2 * dim_;
  levels_.push_back(std::move(lv));
  MeshLevel& L = levels_.back();
  const int level_id = n_levels() - 1;

  std::map<std::array<long, 4>, int> vertex_ids;
  std::map<std::array<int, 4>, int> face_ids;
  L.cell_vertices.resize(L.n_cells);
  L.cell_faces.resize(L.n_cells);

  for (int cell = 0; cell < L.n_cells; ++cell) {
    int patch = 0;
    const auto idx = cell_index(level_id, cell, patch);
    auto& cv = L.cell_vertices[cell];
    cv.fill(-1);
    for (int c = 0; c < n_corners; ++c) {
      std::array<long, 3> lattice{idx[0] + (c & 1), idx[1] + ((c >> 1) & 1), idx[2] + ((c >> 2) & 1)};
      std::array<long, 4> key{0, 0, 0, 0};
      if (kind_ == MeshKind::cartesian) {
        key = {lattice[0], lattice[1], lattice[2], 0};
      } else {
        const ShellPatch sp = shell_patch(patch);
        const long n = s[0];
        key[sp.axis] = sp.sign * n;
        key[sp.t1] = 2 * lattice[0] - n;
        key[sp.t2] = 2 * lattice[1] - n;
        key[3] = lattice[2];
      }
      auto [it, inserted] = vertex_ids.emplace(key, L.n_vertices());
      if (inserted) {
        Point xi{-1.0, -1.0, -1.0};
        for (int e = 0; e < dim_; ++e) xi[e] = ((c >> e) & 1) ? 1.0 : -1.0;
        L.vertices.push_back(map_exact(level_id, cell, xi));
      }
      cv[c] = it->second;
    }
    auto& cf = L.cell_faces[cell];
    cf.fill(-1);
    for (int f = 0; f < n_local_faces; ++f) {
      const auto corners = face_corners(dim_, f);
      std::array<int, 4> ids{-1, -1, -1, -1};
      for (int q = 0; q < n_corners / 2; ++q) ids[q] = cv[corners[q]];
      const int orientation = face_orientation(dim_, ids);
      std::array<int, 4> key = ids;
      std::sort(key.begin(), key.begin() + n_corners / 2);
      auto [it, inserted] = face_ids.emplace(key, L.n_faces());
      if (inserted) {
        Face face;
        face.cell[0] = cell;
        face.local_face[0] = f;
        face.orientation[0] = orientation;
        L.faces.push_back(face);
      } else {
        Face& face = L.faces[it->second];
        if (face.cell[1] >= 0) throw std::logic_error("mesh: face shared by more than two cells");
        face.cell[1] = cell;
        face.local_face[1] = f;
        face.orientation[1] = orientation;
      }
      cf[f] = it->second;
    }
  }

  for (auto& face : L.faces) {
    if (!face.at_boundary()) continue;
    if (kind_ == MeshKind::shell) {
      face.boundary = BoundaryKind::dirichlet;
    } else {
      const int f = face.local_face[0];
      face.boundary = boundary_.kind[f / 2][f % 2];
    }
  }

  if (level_id > 0) {
    MeshLevel& C = levels_[level_id - 1];
    C.children.assign(C.n_cells, std::array<int, 8>{-1, -1, -1, -1, -1, -1, -1, -1});
    L.parent.resize(L.n_cells);
    const auto& cs = C.subdivisions;
    const int coarse_per_patch = cs[0] * cs[1] * cs[2];
    for (int cell = 0; cell < L.n_cells; ++cell) {
      int patch = 0;
      const auto idx = cell_index(level_id, cell, patch);
      const int parent = patch * coarse_per_patch + idx[0] / 2 + cs[0] * (idx[1] / 2 + cs[1] * (idx[2] / 2));
      const int bits = (idx[0] % 2) | ((idx[1] % 2) << 1) | ((idx[2] % 2) << 2);
      L.parent[cell] = parent;
      C.children[parent][bits] = cell;
    }
  }
}

Mesh build_cartesian_mesh(int dim, std::array<int, 3> subdivisions, Point lower, Point upper,
                          const BoundaryAssignment& boundary) {
  if (dim != 2 && dim != 3) throw std::invalid_argument("build_cartesian_mesh: dim must be 2 or 3");
  for (int e = 0; e < dim; ++e) {
    if (subdivisions[e] < 1) throw std::invalid_argument("build_cartesian_mesh: subdivisions must be >= 1");
    if (!(upper[e] > lower[e])) throw std::invalid_argument("build_cartesian_mesh: degenerate bounds");
  }
  Mesh m;
  m.dim_ = dim;
  m.kind_ = MeshKind::cartesian;
  m.mapping_degree_ = 1;
  m.mapping_nodes_ = {-1.0, 1.0};
  m.base_subdivisions_ = {subdivisions[0], subdivisions[1], dim == 3 ? subdivisions[2] : 1};
  m.lower_ = lower;
  m.upper_ = upper;
  m.boundary_ = boundary;
  m.n_patches_ = 1;
  m.add_level(0);
  return m;
}

Mesh build_cube_hierarchy(int dim, int coarse_subdivisions, int n_refinements, const BoundaryAssignment& boundary) {
  Mesh m = build_cartesian_mesh(dim, {coarse_subdivisions, coarse_subdivisions, coarse_subdivisions},
                                {-1.0, -1.0, -1.0}, {1.0, 1.0, 1.0}, boundary);
  for (int r = 0; r < n_refinements; ++r) refine_uniform(m);
  return m;
}

Mesh build_shell_mesh(int n_refinements) {
  if (n_refinements < 0) throw std::invalid_argument("build_shell_mesh: n_refinements must be >= 0");
  Mesh m;
  m.dim_ = 3;
  m.kind_ = MeshKind::shell;
  m.mapping_degree_ = 5;
  m.mapping_nodes_ = gauss_lobatto_nodes(5);
  m.base_subdivisions_ = {1, 1, 1};
  m.boundary_ = BoundaryAssignment::all(BoundaryKind::dirichlet);
  m.n_patches_ = 6;
  m.add_level(0);
  for (int r = 0; r < n_refinements; ++r) refine_uniform(m);
  return m;
}

void refine_uniform(Mesh& mesh) { mesh.add_level(mesh.n_levels()); }

}  // namespace fembench
