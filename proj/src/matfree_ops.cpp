#include "fembench/matfree_ops.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace fembench {

namespace {

int ipow(int b, int e) {
  int r = 1;
  for (int i = 0; i < e; ++i) r *= b;
  return r;
}

void check_size(std::size_t got, int want, const char* who) {
  if (static_cast<int>(got) != want)
    throw std::invalid_argument(std::string(who) + ": vector size " + std::to_string(got) + " does not match " +
                                std::to_string(want) + " dofs");
}

}  // namespace

KernelTables make_kernel_tables(int dim, int k) {
  KernelTables t;
  t.dim = dim;
  t.k = k;
  t.n = k + 1;
  t.basis = build_basis(k);
  t.values = make_even_odd(t.basis.shape_values, Parity::even);
  t.values_t = make_even_odd(t.basis.shape_values.transposed(), Parity::even);
  t.gradients = make_even_odd(t.basis.collocation_gradients, Parity::odd);
  t.gradients_t = make_even_odd(t.basis.collocation_gradients.transposed(), Parity::odd);
  return t;
}

void tensor_apply_axis(const EvenOddTables& m, int d, int axis, const double* in, double* out, bool add,
                       OpCount* count) {
  const int n = m.n;
  contract_axis_even_odd(m, in, out, ipow(n, axis), ipow(n, d - 1 - axis), add, count);
}

void tensor_apply_all(const EvenOddTables& m, int d, const double* in, double* out, double* scratch,
                      OpCount* count) {
  if (d == 1) {
    tensor_apply_axis(m, 1, 0, in, out, false, count);
  } else if (d == 2) {
    tensor_apply_axis(m, 2, 0, in, scratch, false, count);
    tensor_apply_axis(m, 2, 1, scratch, out, false, count);
  } else {
    tensor_apply_axis(m, 3, 0, in, out, false, count);
    tensor_apply_axis(m, 3, 1, out, scratch, false, count);
    tensor_apply_axis(m, 3, 2, scratch, out, false, count);
  }
}

FaceNodeMap face_node_map(int dim, int n, int local_face) {
  FaceNodeMap map;
  const int axis = local_face / 2;
  map.side = local_face % 2;
  map.layer = map.side ? n - 1 : 0;
  map.stride = ipow(n, axis);
  const auto t = face_tangent_axes(dim, local_face);
  const int nb = dim == 3 ? n : 1;
  map.base.resize(static_cast<std::size_t>(n) * nb);
  for (int b = 0; b < nb; ++b)
    for (int a = 0; a < n; ++a) map.base[a + n * b] = a * ipow(n, t[0]) + (dim == 3 ? b * ipow(n, t[1]) : 0);
  return map;
}

double penalty_sigma(int k, int dim, double h) { return (k + 1) * (k + 1) * dim / h; }

// ---------------------------------------------------------------------------

LaplaceCellKernel::Workspace::Workspace(int size)
    : loc(size), out(size), val(size), tmp(size), tmp2(size), grad{std::vector<double>(size), std::vector<double>(size),
                                                                      std::vector<double>(size)} {}

LaplaceCellKernel::LaplaceCellKernel(const Mesh& mesh, int level, int k, const Coefficient& kappa, bool with_faces)
    : tables_(make_kernel_tables(mesh.dim(), k)) {
  geo_ = std::make_unique<GeometryCache>(mesh, level, k + 1, with_faces, !kappa.is_constant);
  const int d = mesh.dim();
  if (kappa.is_constant) {
    kappa_const_ = kappa.constant;
  } else {
    kappa_q_.resize(static_cast<std::size_t>(geo_->n_cells()) * geo_->n_q());
    for (int c = 0; c < geo_->n_cells(); ++c)
      for (int q = 0; q < geo_->n_q(); ++q) kappa_q_[static_cast<std::size_t>(c) * geo_->n_q() + q] = kappa(geo_->point(c, q));
    if (with_faces) {
      const int nf = mesh.level(level).n_faces();
      kappa_f_.resize(static_cast<std::size_t>(nf) * geo_->n_q_face());
      for (int f = 0; f < nf; ++f)
        for (int q = 0; q < geo_->n_q_face(); ++q)
          kappa_f_[static_cast<std::size_t>(f) * geo_->n_q_face() + q] = kappa(geo_->face_point(f, q));
    }
  }
  if (geo_->affine()) {
    metric_.resize(static_cast<std::size_t>(geo_->n_cells()) * d * d);
    for (int c = 0; c < geo_->n_cells(); ++c) {
      const double* ji = geo_->jinv(c, 0);
      const double det = geo_->jxw(c, 0) / geo_->cell_weights()[0];
      double* g = &metric_[static_cast<std::size_t>(c) * d * d];
      for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b) {
          double s = 0.0;
          for (int i = 0; i < d; ++i) s += ji[a * d + i] * ji[b * d + i];
          g[a * d + b] = det * s;
        }
    }
  }
}

void LaplaceCellKernel::apply(int cell, const double* loc, double* out, Workspace& ws, OpCount* count) const {
  const KernelTables& t = tables_;
  const int d = t.dim;
  const int nq = geo_->n_q();
  tensor_apply_all(t.values, d, loc, ws.val.data(), ws.tmp.data(), count);
  for (int a = 0; a < d; ++a) tensor_apply_axis(t.gradients, d, a, ws.val.data(), ws.grad[a].data(), false, count);

  double* g0 = ws.grad[0].data();
  double* g1 = ws.grad[1].data();
  double* g2 = ws.grad[2].data();
  if (geo_->affine()) {
    const double* G = &metric_[static_cast<std::size_t>(cell) * d * d];
    const double* w = geo_->cell_weights().data();
    if (d == 3) {
      for (int q = 0; q < nq; ++q) {
        const double s = kappa_cell(cell, q) * w[q];
        const double a0 = g0[q], a1 = g1[q], a2 = g2[q];
        g0[q] = s * (G[0] * a0 + G[1] * a1 + G[2] * a2);
        g1[q] = s * (G[3] * a0 + G[4] * a1 + G[5] * a2);
        g2[q] = s * (G[6] * a0 + G[7] * a1 + G[8] * a2);
      }
    } else {
      for (int q = 0; q < nq; ++q) {
        const double s = kappa_cell(cell, q) * w[q];
        const double a0 = g0[q], a1 = g1[q];
        g0[q] = s * (G[0] * a0 + G[1] * a1);
        g1[q] = s * (G[2] * a0 + G[3] * a1);
      }
    }
    if (count) {
      count->mults += static_cast<std::uint64_t>(nq) * (1 + d * (d + 1));
      count->adds += static_cast<std::uint64_t>(nq) * d * (d - 1);
    }
  } else {
    double* g[3] = {g0, g1, g2};
    for (int q = 0; q < nq; ++q) {
      const double* ji = geo_->jinv(cell, q);
      const double s = kappa_cell(cell, q) * geo_->jxw(cell, q);
      double ref[3], phys[3];
      for (int a = 0; a < d; ++a) ref[a] = g[a][q];
      for (int i = 0; i < d; ++i) {
        double v = 0.0;
        for (int a = 0; a < d; ++a) v += ji[a * d + i] * ref[a];
        phys[i] = s * v;
      }
      for (int a = 0; a < d; ++a) {
        double v = 0.0;
        for (int i = 0; i < d; ++i) v += ji[a * d + i] * phys[i];
        g[a][q] = v;
      }
    }
    if (count) {
      count->mults += static_cast<std::uint64_t>(nq) * (1 + 2 * d * d + d);
      count->adds += static_cast<std::uint64_t>(nq) * 2 * d * d;
    }
  }

  tensor_apply_axis(t.gradients_t, d, 0, g0, ws.tmp2.data(), false, count);
  for (int a = 1; a < d; ++a) tensor_apply_axis(t.gradients_t, d, a, ws.grad[a].data(), ws.tmp2.data(), true, count);
  tensor_apply_all(t.values_t, d, ws.tmp2.data(), out, ws.tmp.data(), count);
}

void LaplaceCellKernel::add_diagonal(int cell, double* out) const {
  const KernelTables& t = tables_;
  const int d = t.dim;
  const int n = t.n;
  const Matrix1D& N = t.basis.shape_values;
  const Matrix1D& D = t.basis.shape_gradients;
  const int nc = t.n_cell();
  const int nq = geo_->n_q();
  for (int i = 0; i < nc; ++i) {
    const int i0 = i % n, i1 = (i / n) % n, i2 = d == 3 ? i / (n * n) : 0;
    double sum = 0.0;
    for (int q = 0; q < nq; ++q) {
      const int q0 = q % n, q1 = (q / n) % n, q2 = d == 3 ? q / (n * n) : 0;
      const double v2 = d == 3 ? N(q2, i2) : 1.0;
      double ref[3] = {D(q0, i0) * N(q1, i1) * v2, N(q0, i0) * D(q1, i1) * v2, 0.0};
      if (d == 3) ref[2] = N(q0, i0) * N(q1, i1) * D(q2, i2);
      const double* ji = geo_->jinv(cell, q);
      double grad2 = 0.0;
      for (int x = 0; x < d; ++x) {
        double v = 0.0;
        for (int a = 0; a < d; ++a) v += ji[a * d + x] * ref[a];
        grad2 += v * v;
      }
      sum += kappa_cell(cell, q) * geo_->jxw(cell, q) * grad2;
    }
    out[i] += sum;
  }
}

void LaplaceCellKernel::load(int cell, const std::function<double(const Point&)>& f, double* out,
                             Workspace& ws) const {
  for (int q = 0; q < geo_->n_q(); ++q) ws.tmp2[q] = f(geo_->point(cell, q)) * geo_->jxw(cell, q);
  tensor_apply_all(tables_.values_t, tables_.dim, ws.tmp2.data(), out, ws.tmp.data());
}

std::size_t LaplaceCellKernel::memory_bytes() const {
  return geo_->memory_bytes() + 8 * (kappa_q_.size() + kappa_f_.size() + metric_.size());
}

// ---------------------------------------------------------------------------

CGLaplaceOperator::CGLaplaceOperator(const Space& space, const Coefficient& kappa)
    : space_(&space), kernel_(space.mesh(), space.level(), space.degree(), kappa, false) {
  if (space.kind() != SpaceKind::cg && space.kind() != SpaceKind::cg_linear)
    throw std::invalid_argument("CGLaplaceOperator: needs a continuous space");
  const MeshLevel& L = space.mesh().level(space.level());
  const int nv = 1 << space.dim();
  coloring_ = greedy_coloring(L.n_cells, L.n_vertices(), [&](int c, std::vector<int>& r) {
    r.assign(L.cell_vertices[c].begin(), L.cell_vertices[c].begin() + nv);
  });
}

void CGLaplaceOperator::cell_loop(std::span<const double> x, std::span<double> y, bool parallel,
                                  bool constrained) const {
  check_size(x.size(), size(), "CGLaplaceOperator");
  check_size(y.size(), size(), "CGLaplaceOperator");
  const int nc = kernel_.tables().n_cell();
  const auto& mask = space_->constrained();
  std::fill(y.begin(), y.end(), 0.0);
  auto body = [&](int c, LaplaceCellKernel::Workspace& ws) {
    const auto dofs = space_->entity_dofs(c);
    for (int i = 0; i < nc; ++i) ws.loc[i] = constrained && mask[dofs[i]] ? 0.0 : x[dofs[i]];
    kernel_.apply(c, ws.loc.data(), ws.out.data(), ws);
    for (int i = 0; i < nc; ++i)
      if (!(constrained && mask[dofs[i]])) y[dofs[i]] += ws.out[i];
  };
  if (parallel) {
#pragma omp parallel
    {
      LaplaceCellKernel::Workspace ws(nc);
      for (const auto& color : coloring_.colors) {
        const int m = static_cast<int>(color.size());
#pragma omp for schedule(static)
        for (int i = 0; i < m; ++i) body(color[i], ws);
      }
    }
  } else {
    LaplaceCellKernel::Workspace ws(nc);
    for (int c = 0; c < space_->n_entities(); ++c) body(c, ws);
  }
  if (constrained)
    for (int i = 0; i < size(); ++i)
      if (mask[i]) y[i] = x[i];
}

void CGLaplaceOperator::apply(std::span<const double> x, std::span<double> y) const { cell_loop(x, y, true, true); }

void CGLaplaceOperator::apply_serial(std::span<const double> x, std::span<double> y) const {
  cell_loop(x, y, false, true);
}

void CGLaplaceOperator::apply_unconstrained(std::span<const double> x, std::span<double> y) const {
  cell_loop(x, y, false, false);
}

std::vector<double> CGLaplaceOperator::diagonal() const {
  const int nc = kernel_.tables().n_cell();
  std::vector<double> diag(size(), 0.0), local(nc);
  for (int c = 0; c < space_->n_entities(); ++c) {
    std::fill(local.begin(), local.end(), 0.0);
    kernel_.add_diagonal(c, local.data());
    const auto dofs = space_->entity_dofs(c);
    for (int i = 0; i < nc; ++i) diag[dofs[i]] += local[i];
  }
  for (int i = 0; i < size(); ++i)
    if (space_->is_constrained(i)) diag[i] = 1.0;
  return diag;
}

std::vector<double> CGLaplaceOperator::dirichlet_values(const ManufacturedCase& problem) const {
  std::vector<double> g(size(), 0.0);
  for (int i = 0; i < size(); ++i)
    if (space_->is_constrained(i)) g[i] = problem.g_dirichlet(space_->dof_points()[i]);
  return g;
}

std::vector<double> CGLaplaceOperator::rhs(const ManufacturedCase& problem) const {
  const Mesh& mesh = space_->mesh();
  const int lvl = space_->level();
  const MeshLevel& L = mesh.level(lvl);
  const KernelTables& t = kernel_.tables();
  const int nc = t.n_cell(), nf = t.n_face(), d = t.dim;
  GeometryCache geo(mesh, lvl, t.n, true, true);
  LaplaceCellKernel::Workspace ws(nc);
  std::vector<double> b(size(), 0.0);
  std::vector<double> out(nc), fq(nf), fl(nf), scratch(nf);

  for (int c = 0; c < L.n_cells; ++c) {
    for (int q = 0; q < geo.n_q(); ++q) ws.tmp2[q] = problem.f(geo.point(c, q)) * geo.jxw(c, q);
    tensor_apply_all(t.values_t, d, ws.tmp2.data(), out.data(), ws.tmp.data());
    const auto dofs = space_->entity_dofs(c);
    for (int i = 0; i < nc; ++i) b[dofs[i]] += out[i];
  }
  for (int f = 0; f < L.n_faces(); ++f) {
    const Face& face = L.faces[f];
    if (face.boundary != BoundaryKind::neumann) continue;
    const int c = face.cell[0];
    const FaceNodeMap map = face_node_map(d, t.n, face.local_face[0]);
    for (int ql = 0; ql < nf; ++ql) {
      const int qf = geo.canonical_of_local(face.orientation[0], ql);
      fq[ql] = -problem.g_neumann(geo.face_point(f, qf), geo.face_normal(f, qf)) * geo.face_jxw(f, qf);
    }
    tensor_apply_all(t.values_t, d - 1, fq.data(), fl.data(), scratch.data());
    const auto dofs = space_->entity_dofs(c);
    for (int j = 0; j < nf; ++j) b[dofs[map.base[j] + map.layer * map.stride]] += fl[j];
  }

  const auto gd = dirichlet_values(problem);
  std::vector<double> lift(size());
  apply_unconstrained(gd, lift);
  for (int i = 0; i < size(); ++i) b[i] = space_->is_constrained(i) ? gd[i] : b[i] - lift[i];
  return b;
}

OpCount CGLaplaceOperator::count_cell_ops() const {
  const int nc = kernel_.tables().n_cell();
  LaplaceCellKernel::Workspace ws(nc);
  for (int i = 0; i < nc; ++i) ws.loc[i] = 1.0 + 0.1 * i;
  OpCount count;
  kernel_.apply(0, ws.loc.data(), ws.out.data(), ws, &count);
  return count;
}

// ---------------------------------------------------------------------------

struct DGSIPOperator::FaceWorkspace {
  std::vector<double> lv, ld, uq, dq, scratch, cv, ra;
  std::array<std::vector<double>, 2> tq, rt;
  std::array<std::vector<double>, 2> u, dn;  // canonical order per side
  std::array<std::vector<double>, 2> m;      // per side, canonical qf * 3
  std::vector<double> cval0, cval1, cgrad;

  explicit FaceWorkspace(int nf)
      : lv(nf), ld(nf), uq(nf), dq(nf), scratch(nf), cv(nf), ra(nf), tq{std::vector<double>(nf), std::vector<double>(nf)},
        rt{std::vector<double>(nf), std::vector<double>(nf)}, u{std::vector<double>(nf), std::vector<double>(nf)},
        dn{std::vector<double>(nf), std::vector<double>(nf)}, m{std::vector<double>(3 * nf), std::vector<double>(3 * nf)},
        cval0(nf), cval1(nf), cgrad(nf) {}
};

DGSIPOperator::DGSIPOperator(const Space& space, const Coefficient& kappa)
    : space_(&space), kernel_(space.mesh(), space.level(), space.degree(), kappa, true) {
  if (space.kind() != SpaceKind::dg) throw std::invalid_argument("DGSIPOperator: needs a DG space");
  const MeshLevel& L = space.mesh().level(space.level());
  const GeometryCache& geo = kernel_.geometry();
  const int d = space.dim();
  sigma_.resize(L.n_faces());
  for (int f = 0; f < L.n_faces(); ++f) {
    const Face& face = L.faces[f];
    const double area = geo.face_area(f);
    double h = geo.cell_volume(face.cell[0]) / area;
    if (!face.at_boundary()) {
      const double h1 = geo.cell_volume(face.cell[1]) / area;
      h = 2.0 * h * h1 / (h + h1);
    }
    sigma_[f] = penalty_sigma(space.degree(), d, h);
  }
  for (int lf = 0; lf < 2 * d; ++lf) face_maps_[lf] = face_node_map(d, space.degree() + 1, lf);
  face_coloring_ = greedy_coloring(L.n_faces(), L.n_cells, [&](int f, std::vector<int>& r) {
    r.clear();
    r.push_back(L.faces[f].cell[0]);
    if (!L.faces[f].at_boundary()) r.push_back(L.faces[f].cell[1]);
  });
}

void DGSIPOperator::face_apply(int f, const double* x, double* y, FaceWorkspace& ws, OpCount* count) const {
  const MeshLevel& L = space_->mesh().level(space_->level());
  const Face& face = L.faces[f];
  if (face.boundary == BoundaryKind::neumann) return;
  const GeometryCache& geo = kernel_.geometry();
  const KernelTables& t = kernel_.tables();
  const int d = t.dim, n = t.n, nc = t.n_cell(), nf = t.n_face();
  const bool curved = !geo.affine();
  const int n_sides = face.at_boundary() ? 1 : 2;
  const auto& bg = t.basis.boundary_gradients;

  for (int s = 0; s < n_sides; ++s) {
    const int lf = face.local_face[s];
    const int a = lf / 2;
    const auto ta = face_tangent_axes(d, lf);
    const FaceNodeMap& map = face_maps_[lf];
    const double* xc = x + static_cast<std::size_t>(face.cell[s]) * nc;
    const auto& g = bg[map.side];
    for (int j = 0; j < nf; ++j) {
      const double* p = xc + map.base[j];
      ws.lv[j] = p[map.layer * map.stride];
      double v = 0.0;
      for (int i = 0; i < n; ++i) v += g[i] * p[i * map.stride];
      ws.ld[j] = v;
    }
    if (count) {
      count->mults += static_cast<std::uint64_t>(nf) * n;
      count->adds += static_cast<std::uint64_t>(nf) * (n - 1);
    }
    tensor_apply_all(t.values, d - 1, ws.lv.data(), ws.uq.data(), ws.scratch.data(), count);
    tensor_apply_all(t.values, d - 1, ws.ld.data(), ws.dq.data(), ws.scratch.data(), count);
    if (curved)
      for (int j = 0; j < d - 1; ++j) tensor_apply_axis(t.gradients, d - 1, j, ws.uq.data(), ws.tq[j].data(), false, count);

    for (int ql = 0; ql < nf; ++ql) {
      const int qf = geo.canonical_of_local(face.orientation[s], ql);
      const double* nrm = geo.face_normal(f, qf);
      const double* ji = geo.face_jinv(f, s, qf);
      double* m = &ws.m[s][3 * qf];
      for (int b = 0; b < d; ++b) {
        double v = 0.0;
        for (int i = 0; i < d; ++i) v += ji[b * d + i] * nrm[i];
        m[b] = v;
      }
      double dn = m[a] * ws.dq[ql];
      if (curved)
        for (int j = 0; j < d - 1; ++j) dn += m[ta[j]] * ws.tq[j][ql];
      ws.u[s][qf] = ws.uq[ql];
      ws.dn[s][qf] = dn;
    }
    if (count) {
      const std::uint64_t per = curved ? d * d + d : d * d + 1;
      count->mults += nf * per;
      count->adds += nf * (static_cast<std::uint64_t>(d) * (d - 1) + (curved ? d - 1 : 0));
    }
  }

  const double sigma = sigma_[f];
  if (n_sides == 2) {
    for (int qf = 0; qf < nf; ++qf) {
      const double kap = kernel_.kappa_face(f, qf);
      const double jxw = geo.face_jxw(f, qf);
      const double jump = ws.u[0][qf] - ws.u[1][qf];
      const double avg = 0.5 * kap * (ws.dn[0][qf] + ws.dn[1][qf]);
      const double cv = (-avg + sigma * kap * jump) * jxw;
      ws.cval0[qf] = cv;
      ws.cval1[qf] = -cv;
      ws.cgrad[qf] = -0.5 * kap * jump * jxw;
    }
    if (count) {
      count->mults += static_cast<std::uint64_t>(nf) * 8;
      count->adds += static_cast<std::uint64_t>(nf) * 3;
    }
  } else {
    for (int qf = 0; qf < nf; ++qf) {
      const double kap = kernel_.kappa_face(f, qf);
      const double jxw = geo.face_jxw(f, qf);
      const double u = ws.u[0][qf];
      ws.cval0[qf] = (-kap * ws.dn[0][qf] + 2.0 * sigma * kap * u) * jxw;
      ws.cgrad[qf] = -kap * u * jxw;
    }
    if (count) {
      count->mults += static_cast<std::uint64_t>(nf) * 8;
      count->adds += nf;
    }
  }

  for (int s = 0; s < n_sides; ++s) {
    const int lf = face.local_face[s];
    const int a = lf / 2;
    const auto ta = face_tangent_axes(d, lf);
    const FaceNodeMap& map = face_maps_[lf];
    const std::vector<double>& cval = s == 0 ? ws.cval0 : ws.cval1;
    for (int ql = 0; ql < nf; ++ql) {
      const int qf = geo.canonical_of_local(face.orientation[s], ql);
      const double* m = &ws.m[s][3 * qf];
      ws.cv[ql] = cval[qf];
      ws.ra[ql] = ws.cgrad[qf] * m[a];
      if (curved)
        for (int j = 0; j < d - 1; ++j) ws.rt[j][ql] = ws.cgrad[qf] * m[ta[j]];
    }
    if (count) count->mults += static_cast<std::uint64_t>(nf) * (curved ? d : 1);
    if (curved)
      for (int j = 0; j < d - 1; ++j) tensor_apply_axis(t.gradients_t, d - 1, j, ws.rt[j].data(), ws.cv.data(), true, count);
    tensor_apply_all(t.values_t, d - 1, ws.cv.data(), ws.lv.data(), ws.scratch.data(), count);
    tensor_apply_all(t.values_t, d - 1, ws.ra.data(), ws.ld.data(), ws.scratch.data(), count);
    double* yc = y + static_cast<std::size_t>(face.cell[s]) * nc;
    const auto& g = bg[map.side];
    for (int j = 0; j < nf; ++j) {
      double* p = yc + map.base[j];
      p[map.layer * map.stride] += ws.lv[j];
      for (int i = 0; i < n; ++i) p[i * map.stride] += g[i] * ws.ld[j];
    }
    if (count) {
      count->mults += static_cast<std::uint64_t>(nf) * n;
      count->adds += static_cast<std::uint64_t>(nf) * (n + 1);
    }
  }
}

void DGSIPOperator::run(std::span<const double> x, std::span<double> y, bool parallel) const {
  check_size(x.size(), size(), "DGSIPOperator");
  check_size(y.size(), size(), "DGSIPOperator");
  const int nc = kernel_.tables().n_cell();
  const int nf = kernel_.tables().n_face();
  const int n_cells = space_->n_entities();
  if (parallel) {
#pragma omp parallel
    {
      LaplaceCellKernel::Workspace ws(nc);
      FaceWorkspace fws(nf);
#pragma omp for schedule(static)
      for (int c = 0; c < n_cells; ++c)
        kernel_.apply(c, x.data() + static_cast<std::size_t>(c) * nc, y.data() + static_cast<std::size_t>(c) * nc, ws);
      for (const auto& color : face_coloring_.colors) {
        const int m = static_cast<int>(color.size());
#pragma omp for schedule(static)
        for (int i = 0; i < m; ++i) face_apply(color[i], x.data(), y.data(), fws, nullptr);
      }
    }
  } else {
    LaplaceCellKernel::Workspace ws(nc);
    FaceWorkspace fws(nf);
    for (int c = 0; c < n_cells; ++c)
      kernel_.apply(c, x.data() + static_cast<std::size_t>(c) * nc, y.data() + static_cast<std::size_t>(c) * nc, ws);
    const int n_faces = space_->mesh().level(space_->level()).n_faces();
    for (int f = 0; f < n_faces; ++f) face_apply(f, x.data(), y.data(), fws, nullptr);
  }
}

void DGSIPOperator::apply(std::span<const double> x, std::span<double> y) const { run(x, y, true); }

void DGSIPOperator::apply_serial(std::span<const double> x, std::span<double> y) const { run(x, y, false); }

std::vector<double> DGSIPOperator::diagonal() const {
  const MeshLevel& L = space_->mesh().level(space_->level());
  const GeometryCache& geo = kernel_.geometry();
  const KernelTables& t = kernel_.tables();
  const int d = t.dim, n = t.n, nc = t.n_cell(), nf = t.n_face();
  const Matrix1D& N = t.basis.shape_values;
  const Matrix1D& D = t.basis.shape_gradients;
  std::vector<double> diag(size(), 0.0);
  for (int c = 0; c < L.n_cells; ++c) kernel_.add_diagonal(c, diag.data() + static_cast<std::size_t>(c) * nc);

  // face terms restricted to the own side: JxW (-c kappa phi dn_own phi + c sigma kappa phi^2), c = 2 on Dirichlet faces
  for (int f = 0; f < L.n_faces(); ++f) {
    const Face& face = L.faces[f];
    if (face.boundary == BoundaryKind::neumann) continue;
    const double factor = face.at_boundary() ? 2.0 : 1.0;
    for (int s = 0; s < (face.at_boundary() ? 1 : 2); ++s) {
      const int lf = face.local_face[s];
      const int a = lf / 2;
      const auto ta = face_tangent_axes(d, lf);
      const FaceNodeMap& map = face_maps_[lf];
      const auto& g = t.basis.boundary_gradients[map.side];
      const double sign = s == 0 ? 1.0 : -1.0;
      double* dc = diag.data() + static_cast<std::size_t>(face.cell[s]) * nc;
      for (int j = 0; j < nf; ++j) {
        const int ja = j % n, jb = d == 3 ? j / n : 0;
        for (int i = 0; i < n; ++i) {
          const int node = map.base[j] + i * map.stride;
          const bool on_face = i == map.layer;
          double sum = 0.0;
          for (int ql = 0; ql < nf; ++ql) {
            const int qa = ql % n, qb = d == 3 ? ql / n : 0;
            const double na = N(qa, ja), nb = d == 3 ? N(qb, jb) : 1.0;
            double ref[3] = {0, 0, 0};
            ref[a] = g[i] * na * nb;
            double phi = 0.0;
            if (on_face) {
              phi = na * nb;
              ref[ta[0]] = D(qa, ja) * nb;
              if (d == 3) ref[ta[1]] = na * D(qb, jb);
            }
            const int qf = geo.canonical_of_local(face.orientation[s], ql);
            const double* nrm = geo.face_normal(f, qf);
            const double* ji = geo.face_jinv(f, s, qf);
            double dn = 0.0;
            for (int b = 0; b < d; ++b)
              for (int x = 0; x < d; ++x) dn += ji[b * d + x] * nrm[x] * ref[b];
            const double kap = kernel_.kappa_face(f, qf);
            sum += geo.face_jxw(f, qf) * factor * kap * (-sign * phi * dn + sigma_[f] * phi * phi);
          }
          dc[node] += sum;
        }
      }
    }
  }
  return diag;
}

std::vector<double> DGSIPOperator::rhs(const ManufacturedCase& problem) const {
  const Mesh& mesh = space_->mesh();
  const int lvl = space_->level();
  const MeshLevel& L = mesh.level(lvl);
  const KernelTables& t = kernel_.tables();
  const int d = t.dim, n = t.n, nc = t.n_cell(), nf = t.n_face();
  GeometryCache geo(mesh, lvl, n, true, true);
  LaplaceCellKernel::Workspace ws(nc);
  std::vector<double> b(size(), 0.0);
  for (int c = 0; c < L.n_cells; ++c) {
    for (int q = 0; q < geo.n_q(); ++q) ws.tmp2[q] = problem.f(geo.point(c, q)) * geo.jxw(c, q);
    tensor_apply_all(t.values_t, d, ws.tmp2.data(), b.data() + static_cast<std::size_t>(c) * nc, ws.tmp.data());
  }

  const Matrix1D& N = t.basis.shape_values;
  const Matrix1D& D = t.basis.shape_gradients;
  for (int f = 0; f < L.n_faces(); ++f) {
    const Face& face = L.faces[f];
    if (!face.at_boundary()) continue;
    const int lf = face.local_face[0];
    const int a = lf / 2;
    const auto ta = face_tangent_axes(d, lf);
    const FaceNodeMap& map = face_maps_[lf];
    const auto& g = t.basis.boundary_gradients[map.side];
    double* bc = b.data() + static_cast<std::size_t>(face.cell[0]) * nc;
    for (int ql = 0; ql < nf; ++ql) {
      const int qf = geo.canonical_of_local(face.orientation[0], ql);
      const Point& x = geo.face_point(f, qf);
      const double* nrm = geo.face_normal(f, qf);
      const double jxw = geo.face_jxw(f, qf);
      const int qa = ql % n, qb = d == 3 ? ql / n : 0;
      if (face.boundary == BoundaryKind::neumann) {
        const double gn = problem.g_neumann(x, nrm);
        for (int j = 0; j < nf; ++j) {
          const int ja = j % n, jb = d == 3 ? j / n : 0;
          const double phi = N(qa, ja) * (d == 3 ? N(qb, jb) : 1.0);
          bc[map.base[j] + map.layer * map.stride] -= gn * phi * jxw;
        }
        continue;
      }
      const double gd = problem.g_dirichlet(x);
      const double kap = kernel_.kappa_face(f, qf);
      const double* ji = geo.face_jinv(f, 0, qf);
      double m[3];
      for (int bb = 0; bb < d; ++bb) {
        m[bb] = 0.0;
        for (int i = 0; i < d; ++i) m[bb] += ji[bb * d + i] * nrm[i];
      }
      for (int j = 0; j < nf; ++j) {
        const int ja = j % n, jb = d == 3 ? j / n : 0;
        const double na = N(qa, ja), nb = d == 3 ? N(qb, jb) : 1.0;
        for (int i = 0; i < n; ++i) {
          const bool on_face = i == map.layer;
          double dn = m[a] * g[i] * na * nb;
          if (on_face) {
            dn += m[ta[0]] * D(qa, ja) * nb;
            if (d == 3) dn += m[ta[1]] * na * D(qb, jb);
          }
          const double phi = on_face ? na * nb : 0.0;
          bc[map.base[j] + i * map.stride] += (2.0 * sigma_[f] * kap * gd * phi - kap * gd * dn) * jxw;
        }
      }
    }
  }
  return b;
}

OpCount DGSIPOperator::count_cell_ops() const {
  const int nc = kernel_.tables().n_cell();
  LaplaceCellKernel::Workspace ws(nc);
  for (int i = 0; i < nc; ++i) ws.loc[i] = 1.0 + 0.1 * i;
  OpCount count;
  kernel_.apply(0, ws.loc.data(), ws.out.data(), ws, &count);
  return count;
}

OpCount DGSIPOperator::count_face_ops() const {
  const MeshLevel& L = space_->mesh().level(space_->level());
  OpCount count;
  for (int f = 0; f < L.n_faces(); ++f) {
    if (L.faces[f].at_boundary()) continue;
    std::vector<double> x(size(), 1.0), y(size(), 0.0);
    FaceWorkspace ws(kernel_.tables().n_face());
    face_apply(f, x.data(), y.data(), ws, &count);
    break;
  }
  return count;
}

}  // namespace fembench
