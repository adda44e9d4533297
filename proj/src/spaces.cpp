#include "fembench/spaces.hpp"

#include "fembench/geometry.hpp"
#include "fembench/tensor_basis.hpp"

#include <cmath>
#include <map>
#include <stdexcept>

namespace fembench {

const char* to_string(SpaceKind kind) {
  switch (kind) {
    case SpaceKind::cg: return "CG";
    case SpaceKind::dg: return "DG";
    case SpaceKind::trace: return "Trace";
    case SpaceKind::cg_linear: return "CG-linear";
  }
  return "?";
}

int Space::n_constrained() const {
  int n = 0;
  for (char c : constrained_) n += c != 0;
  return n;
}

std::vector<double> Space::interpolate(const std::function<double(const Point&)>& f) const {
  std::vector<double> v(n_dofs_);
  for (int i = 0; i < n_dofs_; ++i) v[i] = f(points_[i]);
  return v;
}

namespace {

int ipow(int b, int e) {
  int r = 1;
  for (int i = 0; i < e; ++i) r *= b;
  return r;
}

std::array<std::vector<double>, 3> cell_node_axes(int dim, const std::vector<double>& nodes) {
  return {nodes, nodes, dim == 3 ? nodes : std::vector<double>{0.0}};
}

std::array<std::vector<double>, 3> face_node_axes(int dim, int local_face, const std::vector<double>& nodes) {
  std::array<std::vector<double>, 3> ap{std::vector<double>{0.0}, std::vector<double>{0.0}, std::vector<double>{0.0}};
  const int axis = local_face / 2;
  for (int e = 0; e < dim; ++e) ap[e] = e == axis ? std::vector<double>{local_face % 2 ? 1.0 : -1.0} : nodes;
  return ap;
}

// Side of `face` on which `cell` sits with local face `lf`.
int side_of(const Face& face, int cell, int lf) { return (face.cell[0] == cell && face.local_face[0] == lf) ? 0 : 1; }

void enumerate_cg(const Mesh& mesh, int level, int k, std::vector<int>& dofs, std::vector<Point>& points,
                  int& n_dofs, int& n_skeleton) {
  const MeshLevel& L = mesh.level(level);
  const int dim = mesh.dim();
  const int n = k + 1;
  const int per_cell = ipow(n, dim);
  const int nv = L.n_vertices();

  std::map<std::pair<int, int>, int> edges;
  for (int c = 0; c < L.n_cells; ++c)
    for (int e = 0; e < dim; ++e)
      for (int corner = 0; corner < (1 << dim); ++corner) {
        if (corner & (1 << e)) continue;
        const int a = L.cell_vertices[c][corner], b = L.cell_vertices[c][corner | (1 << e)];
        edges.emplace(std::minmax(a, b), static_cast<int>(edges.size()));
      }
  const int ne = static_cast<int>(edges.size());
  const int edge_offset = nv;
  const int face_offset = edge_offset + ne * (k - 1);
  const int n_face_interior = dim == 3 ? (k - 1) * (k - 1) : 0;
  const int interior_offset = face_offset + (dim == 3 ? L.n_faces() * n_face_interior : 0);
  const int n_interior = ipow(k - 1, dim);
  n_skeleton = interior_offset;
  n_dofs = interior_offset + L.n_cells * n_interior;
  dofs.assign(static_cast<std::size_t>(L.n_cells) * per_cell, -1);
  points.assign(n_dofs, Point{0.0, 0.0, 0.0});
  std::vector<char> placed(n_dofs, 0);

  const auto nodes = gauss_lobatto_nodes(k);
  for (int c = 0; c < L.n_cells; ++c) {
    const MappedPoints mp = map_cell(mesh, level, c, cell_node_axes(dim, nodes));
    const auto& cv = L.cell_vertices[c];
    for (int loc = 0; loc < per_cell; ++loc) {
      const int idx[3] = {loc % n, (loc / n) % n, dim == 3 ? loc / (n * n) : 0};
      bool on[3] = {false, false, false};
      int n_on = 0;
      for (int e = 0; e < dim; ++e) {
        on[e] = idx[e] == 0 || idx[e] == k;
        n_on += on[e];
      }
      int dof = -1;
      if (n_on == dim) {
        int bits = 0;
        for (int e = 0; e < dim; ++e) bits |= (idx[e] == k) << e;
        dof = cv[bits];
      } else if (n_on == dim - 1) {
        int free = 0, bits = 0;
        for (int e = 0; e < dim; ++e) {
          if (!on[e])
            free = e;
          else
            bits |= (idx[e] == k) << e;
        }
        const int va = cv[bits], vb = cv[bits | (1 << free)];
        const int t = idx[free];
        const int pos = va < vb ? t - 1 : k - 1 - t;
        dof = edge_offset + edges.at(std::minmax(va, vb)) * (k - 1) + pos;
      } else if (dim == 3 && n_on == 1) {
        int axis = 0;
        for (int e = 0; e < 3; ++e)
          if (on[e]) axis = e;
        const int lf = 2 * axis + (idx[axis] == k);
        const int F = L.cell_faces[c][lf];
        const Face& face = L.faces[F];
        const int side = side_of(face, c, lf);
        const auto t = face_tangent_axes(3, lf);
        const int q = canonical_face_index(3, face.orientation[side], n, idx[t[0]], idx[t[1]]);
        const int A = q % n, B = q / n;
        dof = face_offset + F * n_face_interior + (A - 1) + (k - 1) * (B - 1);
      } else {
        int inner = 0, stride = 1;
        for (int e = 0; e < dim; ++e) {
          inner += (idx[e] - 1) * stride;
          stride *= k - 1;
        }
        dof = interior_offset + c * n_interior + inner;
      }
      dofs[static_cast<std::size_t>(c) * per_cell + loc] = dof;
      if (!placed[dof]) {
        placed[dof] = 1;
        points[dof] = mp.points[loc];
      }
    }
  }
}

}  // namespace

Space enumerate_dofs(const Mesh& mesh, int level, SpaceKind kind, int k) {
  if (kind == SpaceKind::cg_linear) k = 1;
  if (k < 1) throw std::invalid_argument("enumerate_dofs: degree must be >= 1");
  Space s;
  s.kind_ = kind;
  s.degree_ = k;
  s.dim_ = mesh.dim();
  s.level_ = level;
  s.mesh_ = &mesh;
  const MeshLevel& L = mesh.level(level);
  const int dim = mesh.dim();
  const int n = k + 1;
  const auto nodes = gauss_lobatto_nodes(k);

  if (kind == SpaceKind::trace) {
    s.per_entity_ = ipow(n, dim - 1);
    s.n_dofs_ = L.n_faces() * s.per_entity_;
    s.dofs_.resize(s.n_dofs_);
    for (int i = 0; i < s.n_dofs_; ++i) s.dofs_[i] = i;
    s.constrained_.assign(s.n_dofs_, 0);
    s.points_.resize(s.n_dofs_);
    for (int f = 0; f < L.n_faces(); ++f) {
      const Face& face = L.faces[f];
      const MappedPoints mp = map_cell(mesh, level, face.cell[0], face_node_axes(dim, face.local_face[0], nodes));
      for (int ql = 0; ql < s.per_entity_; ++ql) {
        const int q = canonical_face_index(dim, face.orientation[0], n, ql % n, ql / n);
        s.points_[f * s.per_entity_ + q] = mp.points[dim == 2 ? ql % n : ql];
        if (face.boundary == BoundaryKind::dirichlet) s.constrained_[f * s.per_entity_ + q] = 1;
      }
    }
    return s;
  }

  s.per_entity_ = ipow(n, dim);
  if (kind == SpaceKind::dg) {
    s.n_dofs_ = L.n_cells * s.per_entity_;
    s.dofs_.resize(s.n_dofs_);
    for (int i = 0; i < s.n_dofs_; ++i) s.dofs_[i] = i;
    s.constrained_.assign(s.n_dofs_, 0);
    s.points_.resize(s.n_dofs_);
    s.n_skeleton_ = 0;
    for (int c = 0; c < L.n_cells; ++c) {
      const MappedPoints mp = map_cell(mesh, level, c, cell_node_axes(dim, nodes));
      for (int loc = 0; loc < s.per_entity_; ++loc) s.points_[c * s.per_entity_ + loc] = mp.points[loc];
    }
    return s;
  }

  enumerate_cg(mesh, level, k, s.dofs_, s.points_, s.n_dofs_, s.n_skeleton_);
  s.constrained_.assign(s.n_dofs_, 0);
  for (const Face& face : L.faces) {
    if (face.boundary != BoundaryKind::dirichlet) continue;
    const int c = face.cell[0];
    const int axis = face.local_face[0] / 2;
    const int layer = face.local_face[0] % 2 ? k : 0;
    for (int loc = 0; loc < s.per_entity_; ++loc) {
      const int idx[3] = {loc % n, (loc / n) % n, loc / (n * n)};
      if (idx[axis] == layer) s.constrained_[s.dofs_[static_cast<std::size_t>(c) * s.per_entity_ + loc]] = 1;
    }
  }
  return s;
}

SparseMatrix build_interpolation(const Space& from, const Space& to) {
  if (from.kind() == SpaceKind::trace || to.kind() == SpaceKind::trace)
    throw std::invalid_argument("build_interpolation: trace spaces are not cell based");
  if (&from.mesh() != &to.mesh()) throw std::invalid_argument("build_interpolation: spaces live on different meshes");
  const bool same_level = from.level() == to.level();
  if (!same_level && to.level() != from.level() + 1)
    throw std::invalid_argument("build_interpolation: spaces are not on the same or adjacent levels");
  if (from.degree() > to.degree()) throw std::invalid_argument("build_interpolation: source degree exceeds target");
  const bool from_dg = from.kind() == SpaceKind::dg, to_dg = to.kind() == SpaceKind::dg;
  if (from_dg != to_dg) throw std::invalid_argument("build_interpolation: cannot mix continuous and discontinuous spaces");

  const Mesh& mesh = from.mesh();
  const int dim = mesh.dim();
  const MeshLevel& L = mesh.level(to.level());
  const auto from_nodes = gauss_lobatto_nodes(from.degree());
  const auto to_nodes = gauss_lobatto_nodes(to.degree());
  const int nf = from.degree() + 1, nt = to.degree() + 1;

  // 1D tables for both child positions (or the identity position on the same level)
  std::array<Matrix1D, 2> table;
  for (int b = 0; b < 2; ++b) {
    std::vector<double> pts(nt);
    for (int i = 0; i < nt; ++i) pts[i] = same_level ? to_nodes[i] : 0.5 * (to_nodes[i] + (2 * b - 1));
    table[b] = lagrange_values(from_nodes, pts);
  }

  std::vector<Triplet> entries;
  std::vector<char> done(to.n_dofs(), 0);
  const int per_to = to.dofs_per_entity(), per_from = from.dofs_per_entity();
  for (int c = 0; c < L.n_cells; ++c) {
    int src = c, bits = 0;
    if (!same_level) {
      src = L.parent[c];
      const auto& ch = mesh.level(from.level()).children[src];
      for (int b = 0; b < 8; ++b)
        if (ch[b] == c) bits = b;
    }
    const auto td = to.entity_dofs(c);
    const auto fd = from.entity_dofs(src);
    for (int it = 0; it < per_to; ++it) {
      const int row = td[it];
      if (done[row]) continue;
      done[row] = 1;
      const int ti[3] = {it % nt, (it / nt) % nt, it / (nt * nt)};
      for (int jf = 0; jf < per_from; ++jf) {
        const int fi[3] = {jf % nf, (jf / nf) % nf, jf / (nf * nf)};
        double v = 1.0;
        for (int e = 0; e < dim; ++e) v *= table[(bits >> e) & 1](ti[e], fi[e]);
        if (std::abs(v) > 1e-15) entries.push_back({row, fd[jf], v});
      }
    }
  }
  return SparseMatrix::from_triplets(to.n_dofs(), from.n_dofs(), std::move(entries));
}

SparseMatrix build_prolongation(const Space& coarse, const Space& fine) {
  if (coarse.kind() != fine.kind() || coarse.degree() != fine.degree())
    throw std::invalid_argument("build_prolongation: spaces differ in kind or degree");
  if (fine.level() != coarse.level() + 1) throw std::invalid_argument("build_prolongation: spaces are not nested");
  return build_interpolation(coarse, fine);
}

SparseMatrix build_trace_to_linear(const Space& trace, const Space& linear) {
  if (trace.kind() != SpaceKind::trace || linear.kind() != SpaceKind::cg_linear)
    throw std::invalid_argument("build_trace_to_linear: expects a trace and a CG-linear space");
  if (trace.level() != linear.level() || &trace.mesh() != &linear.mesh())
    throw std::invalid_argument("build_trace_to_linear: spaces must live on the same mesh level");
  const Mesh& mesh = trace.mesh();
  const MeshLevel& L = mesh.level(trace.level());
  const int dim = mesh.dim();
  const int n = trace.degree() + 1;
  const auto nodes = gauss_lobatto_nodes(trace.degree());
  const int per_face = trace.dofs_per_entity();
  std::vector<Triplet> entries;
  for (int f = 0; f < L.n_faces(); ++f) {
    const Face& face = L.faces[f];
    const int c = face.cell[0];
    const int lf = face.local_face[0];
    const int axis = lf / 2;
    const auto t = face_tangent_axes(dim, lf);
    for (int ql = 0; ql < per_face; ++ql) {
      const int q = canonical_face_index(dim, face.orientation[0], n, ql % n, ql / n);
      Point xi{0.0, 0.0, 0.0};
      xi[axis] = lf % 2 ? 1.0 : -1.0;
      xi[t[0]] = nodes[ql % n];
      if (dim == 3) xi[t[1]] = nodes[ql / n];
      for (int corner = 0; corner < (1 << dim); ++corner) {
        double v = 1.0;
        for (int e = 0; e < dim; ++e) v *= (corner >> e) & 1 ? 0.5 * (1.0 + xi[e]) : 0.5 * (1.0 - xi[e]);
        if (std::abs(v) > 1e-15) entries.push_back({f * per_face + q, L.cell_vertices[c][corner], v});
      }
    }
  }
  return SparseMatrix::from_triplets(trace.n_dofs(), linear.n_dofs(), std::move(entries));
}

SparseMatrix constrain_transfer(const SparseMatrix& p, const Space& from, const Space& to) {
  std::vector<Triplet> entries;
  entries.reserve(p.nnz());
  for (int i = 0; i < p.rows(); ++i) {
    if (to.is_constrained(i)) continue;
    for (std::int64_t q = p.row_ptr()[i]; q < p.row_ptr()[i + 1]; ++q)
      if (!from.is_constrained(p.col_idx()[q])) entries.push_back({i, p.col_idx()[q], p.values()[q]});
  }
  return SparseMatrix::from_triplets(p.rows(), p.cols(), std::move(entries));
}

}  // namespace fembench
