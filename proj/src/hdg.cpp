#include "fembench/hdg.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace fembench {

namespace {

int side_of(const Face& face, int cell, int lf) { return (face.cell[0] == cell && face.local_face[0] == lf) ? 0 : 1; }

void check_size(std::size_t got, int want, const char* who) {
  if (static_cast<int>(got) != want)
    throw std::invalid_argument(std::string(who) + ": vector size " + std::to_string(got) + " does not match " +
                                std::to_string(want));
}

// Tensor basis values (rows: points, cols: nodes) from 1D tables.
Eigen::MatrixXd tensor_table(int d, const Matrix1D& m0, const Matrix1D& m1, const Matrix1D& m2) {
  const int np = m0.rows(), nn = m0.cols();
  const int rows = d == 3 ? np * np * np : np * np;
  const int cols = d == 3 ? nn * nn * nn : nn * nn;
  Eigen::MatrixXd t(rows, cols);
  for (int q = 0; q < rows; ++q) {
    const int q0 = q % np, q1 = (q / np) % np, q2 = q / (np * np);
    for (int j = 0; j < cols; ++j) {
      const int j0 = j % nn, j1 = (j / nn) % nn, j2 = j / (nn * nn);
      t(q, j) = m0(q0, j0) * m1(q1, j1) * (d == 3 ? m2(q2, j2) : 1.0);
    }
  }
  return t;
}

}  // namespace

double stabilization_tau(const LaplaceCellKernel& kernel, int face) {
  const GeometryCache& geo = kernel.geometry();
  double k_max = -INFINITY;
  for (int q = 0; q < geo.n_q_face(); ++q) {
    const double k = kernel.kappa_face(face, q);
    if (!(k > 0.0)) {
      std::ostringstream os;
      os << "stabilization_tau: coefficient " << k << " is not positive on face " << face;
      throw std::domain_error(os.str());
    }
    k_max = std::max(k_max, k);
  }
  return 5.0 * k_max;
}

struct HDGOperator::Workspace {
  std::vector<double> lam, out, rq, ru, q, u, t, r, s, val, tmp, tmp2, fa, fb, fc, fd;
  std::array<std::vector<double>, 3> g;

  Workspace(int d, int m, int nf, int nt)
      : lam(nt), out(nt), rq(d * m), ru(m), q(d * m), u(m), t(d * m), r(m), s(m), val(m), tmp(m), tmp2(m), fa(nf),
        fb(nf), fc(nf), fd(nf), g{std::vector<double>(m), std::vector<double>(m), std::vector<double>(m)} {}
};

HDGOperator::HDGOperator(const Space& trace, const Coefficient& kappa)
    : trace_(&trace), kappa_(kappa), kernel_(trace.mesh(), trace.level(), trace.degree(), kappa, true) {
  if (trace.kind() != SpaceKind::trace) throw std::invalid_argument("HDGOperator: needs a trace space");
  const Mesh& mesh = trace.mesh();
  const MeshLevel& L = mesh.level(trace.level());
  const int d = mesh.dim();
  const int nf = kernel_.tables().n_face();
  const int nt = cell_trace_dofs();
  n_cells_ = L.n_cells;
  if (!kappa.is_constant) validate_coefficient(kappa, kernel_.geometry());

  tau_.resize(L.n_faces());
  for (int f = 0; f < L.n_faces(); ++f) tau_[f] = stabilization_tau(kernel_, f);
  for (int lf = 0; lf < 2 * d; ++lf) face_maps_[lf] = face_node_map(d, trace.degree() + 1, lf);

  cell_trace_.resize(static_cast<std::size_t>(n_cells_) * nt);
  const int n = kernel_.tables().n;
  for (int c = 0; c < n_cells_; ++c)
    for (int lf = 0; lf < 2 * d; ++lf) {
      const int f = L.cell_faces[c][lf];
      const Face& face = L.faces[f];
      const int o = face.orientation[side_of(face, c, lf)];
      const auto dofs = trace.entity_dofs(f);
      for (int j = 0; j < nf; ++j)
        cell_trace_[static_cast<std::size_t>(c) * nt + lf * nf + j] = dofs[canonical_face_index(d, o, n, j % n, j / n)];
    }

  coloring_ = greedy_coloring(n_cells_, L.n_faces(), [&](int c, std::vector<int>& r) {
    r.assign(L.cell_faces[c].begin(), L.cell_faces[c].begin() + 2 * d);
  });

  // cells with identical geometry and coefficients share their local inverses
  const GeometryCache& geo = kernel_.geometry();
  const bool shareable = geo.affine() && kappa.is_constant;
  std::map<std::vector<double>, int> signature;
  cell_class_.resize(n_cells_);
  for (int c = 0; c < n_cells_; ++c) {
    int id = -1;
    if (shareable) {
      std::vector<double> key = affine_signature(geo, c);
      for (int lf = 0; lf < 2 * d; ++lf) key.push_back(tau_[L.cell_faces[c][lf]]);
      auto [it, fresh] = signature.emplace(key, static_cast<int>(classes_.size()));
      id = it->second;
      if (!fresh) {
        cell_class_[c] = id;
        continue;
      }
    } else {
      id = static_cast<int>(classes_.size());
    }
    cell_class_[c] = id;
    const HDGCellBlocks b = cell_blocks(c);
    const int m = cell_dofs();
    CellClass cl;
    Eigen::LLT<Eigen::MatrixXd> a_chol(b.A.topLeftCorner(m, m));
    if (a_chol.info() != Eigen::Success)
      throw std::runtime_error("HDGOperator: flux mass matrix not positive definite in cell " + std::to_string(c));
    cl.a_inv = a_chol.solve(Eigen::MatrixXd::Identity(m, m));
    Eigen::MatrixXd a_inv_bt(d * m, m);
    for (int a = 0; a < d; ++a) a_inv_bt.middleRows(a * m, m) = cl.a_inv * b.B.middleCols(a * m, m).transpose();
    const Eigen::MatrixXd s = b.B * a_inv_bt - b.D;
    Eigen::LLT<Eigen::MatrixXd> s_chol(s);
    if (s_chol.info() != Eigen::Success)
      throw std::runtime_error("HDGOperator: inner Schur complement not positive definite in cell " + std::to_string(c));
    cl.s_inv = s_chol.solve(Eigen::MatrixXd::Identity(m, m));
    classes_.push_back(std::move(cl));
  }

  // face blocks of H for the mixed form, in the canonical frame
  const auto& N = kernel_.tables().basis.shape_values;
  face_h_inv_.resize(L.n_faces());
  for (int f = 0; f < L.n_faces(); ++f) {
    const Face& face = L.faces[f];
    if (face.boundary == BoundaryKind::dirichlet) continue;
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(nf, nf);
    const int o = face.orientation[0];
    const double scale = (face.at_boundary() ? 1.0 : 2.0) * tau_[f];
    for (int ql = 0; ql < nf; ++ql) {
      const double w = geo.face_jxw(f, geo.canonical_of_local(o, ql)) * scale;
      for (int i = 0; i < nf; ++i) {
        const double pi = N(ql % n, i % n) * (d == 3 ? N(ql / n, i / n) : 1.0);
        const int ci = canonical_face_index(d, o, n, i % n, i / n);
        for (int j = 0; j < nf; ++j) {
          const double pj = N(ql % n, j % n) * (d == 3 ? N(ql / n, j / n) : 1.0);
          h(ci, canonical_face_index(d, o, n, j % n, j / n)) += w * pi * pj;
        }
      }
    }
    face_h_inv_[f] = h.inverse();
  }
}

HDGCellBlocks HDGOperator::cell_blocks(int c) const {
  const KernelTables& t = kernel_.tables();
  const GeometryCache& geo = kernel_.geometry();
  const MeshLevel& L = trace_->mesh().level(trace_->level());
  const int d = t.dim, n = t.n, m = t.n_cell(), nf = t.n_face(), nt = cell_trace_dofs();
  const Matrix1D& N = t.basis.shape_values;
  const Matrix1D& Dg = t.basis.shape_gradients;
  const Eigen::MatrixXd phi = tensor_table(d, N, N, N);
  std::array<Eigen::MatrixXd, 3> dphi;
  dphi[0] = tensor_table(d, Dg, N, N);
  dphi[1] = tensor_table(d, N, Dg, N);
  if (d == 3) dphi[2] = tensor_table(d, N, N, Dg);

  HDGCellBlocks b;
  b.A = Eigen::MatrixXd::Zero(d * m, d * m);
  b.B = Eigen::MatrixXd::Zero(m, d * m);
  b.D = Eigen::MatrixXd::Zero(m, m);
  b.C = Eigen::MatrixXd::Zero(nt, d * m);
  b.G = Eigen::MatrixXd::Zero(nt, m);
  b.H = Eigen::MatrixXd::Zero(nt, nt);

  Eigen::MatrixXd as = Eigen::MatrixXd::Zero(m, m);
  for (int q = 0; q < geo.n_q(); ++q) {
    const double w = geo.jxw(c, q);
    as += (w / kernel_.kappa_cell(c, q)) * phi.row(q).transpose() * phi.row(q);
    const double* ji = geo.jinv(c, q);
    for (int a = 0; a < d; ++a) {
      Eigen::RowVectorXd dx = Eigen::RowVectorXd::Zero(m);
      for (int r = 0; r < d; ++r) dx += ji[r * d + a] * dphi[r].row(q);
      b.B.middleCols(a * m, m) -= w * phi.row(q).transpose() * dx;
    }
  }
  for (int a = 0; a < d; ++a) b.A.block(a * m, a * m, m, m) = as;

  for (int lf = 0; lf < 2 * d; ++lf) {
    const int f = L.cell_faces[c][lf];
    const Face& face = L.faces[f];
    const int s = side_of(face, c, lf);
    const double sign = s == 0 ? 1.0 : -1.0;
    const FaceNodeMap& map = face_maps_[lf];
    const double tau = tau_[f];
    for (int ql = 0; ql < nf; ++ql) {
      const int qf = geo.canonical_of_local(face.orientation[s], ql);
      const double w = geo.face_jxw(f, qf);
      const double* nrm = geo.face_normal(f, qf);
      Eigen::VectorXd psi(nf);
      for (int j = 0; j < nf; ++j) psi[j] = N(ql % n, j % n) * (d == 3 ? N(ql / n, j / n) : 1.0);
      // cell basis restricted to the face is the layer basis
      Eigen::VectorXd cell_vals = Eigen::VectorXd::Zero(m);
      for (int j = 0; j < nf; ++j) cell_vals[map.base[j] + map.layer * map.stride] = psi[j];
      b.D -= tau * w * cell_vals * cell_vals.transpose();
      for (int a = 0; a < d; ++a)
        b.C.block(lf * nf, a * m, nf, m) += sign * nrm[a] * w * psi * cell_vals.transpose();
      b.G.middleRows(lf * nf, nf) += tau * w * psi * cell_vals.transpose();
      b.H.block(lf * nf, lf * nf, nf, nf) += tau * w * psi * psi.transpose();
    }
  }
  return b;
}

void HDGOperator::divergence(int c, const double* tv, double* out, Workspace& ws) const {
  const KernelTables& t = kernel_.tables();
  const GeometryCache& geo = kernel_.geometry();
  const int d = t.dim, m = t.n_cell();
  std::fill(ws.s.begin(), ws.s.end(), 0.0);
  for (int a = 0; a < d; ++a) {
    tensor_apply_all(t.values, d, tv + a * m, ws.val.data(), ws.tmp.data());
    for (int b = 0; b < d; ++b) {
      if (geo.affine() && geo.jinv(c, 0)[b * d + a] == 0.0) continue;
      tensor_apply_axis(t.gradients, d, b, ws.val.data(), ws.tmp2.data(), false);
      for (int q = 0; q < m; ++q) ws.s[q] += geo.jinv(c, q)[b * d + a] * ws.tmp2[q];
    }
  }
  for (int q = 0; q < m; ++q) ws.s[q] *= geo.jxw(c, q);
  tensor_apply_all(t.values_t, d, ws.s.data(), out, ws.tmp.data());
}

void HDGOperator::gradient_transpose(int c, const double* uv, double* out, Workspace& ws) const {
  const KernelTables& t = kernel_.tables();
  const GeometryCache& geo = kernel_.geometry();
  const int d = t.dim, m = t.n_cell();
  tensor_apply_all(t.values, d, uv, ws.val.data(), ws.tmp.data());
  for (int q = 0; q < m; ++q) ws.val[q] *= geo.jxw(c, q);
  for (int a = 0; a < d; ++a) {
    bool first = true;
    for (int b = 0; b < d; ++b) {
      if (geo.affine() && geo.jinv(c, 0)[b * d + a] == 0.0) continue;
      for (int q = 0; q < m; ++q) ws.tmp2[q] = geo.jinv(c, q)[b * d + a] * ws.val[q];
      tensor_apply_axis(t.gradients_t, d, b, ws.tmp2.data(), ws.s.data(), !first);
      first = false;
    }
    if (first) std::fill(ws.s.begin(), ws.s.end(), 0.0);
    tensor_apply_all(t.values_t, d, ws.s.data(), out + a * m, ws.tmp.data());
  }
}

void HDGOperator::lift(int c, const double* lam, double* rq, double* ru, Workspace& ws, bool add) const {
  const KernelTables& t = kernel_.tables();
  const GeometryCache& geo = kernel_.geometry();
  const MeshLevel& L = trace_->mesh().level(trace_->level());
  const int d = t.dim, m = t.n_cell(), nf = t.n_face();
  if (!add) {
    std::fill(rq, rq + d * m, 0.0);
    std::fill(ru, ru + m, 0.0);
  }
  for (int lf = 0; lf < 2 * d; ++lf) {
    const int f = L.cell_faces[c][lf];
    const Face& face = L.faces[f];
    const int s = side_of(face, c, lf);
    const double sign = s == 0 ? 1.0 : -1.0;
    const int o = face.orientation[s];
    const FaceNodeMap& map = face_maps_[lf];
    tensor_apply_all(t.values, d - 1, lam + lf * nf, ws.fa.data(), ws.fd.data());
    for (int ql = 0; ql < nf; ++ql) ws.fa[ql] *= geo.face_jxw(f, geo.canonical_of_local(o, ql));
    for (int a = 0; a < d; ++a) {
      if (geo.affine() && geo.face_normal(f, 0)[a] == 0.0) continue;
      for (int ql = 0; ql < nf; ++ql)
        ws.fb[ql] = sign * geo.face_normal(f, geo.canonical_of_local(o, ql))[a] * ws.fa[ql];
      tensor_apply_all(t.values_t, d - 1, ws.fb.data(), ws.fc.data(), ws.fd.data());
      double* dst = rq + a * m;
      for (int j = 0; j < nf; ++j) dst[map.base[j] + map.layer * map.stride] += ws.fc[j];
    }
    for (int ql = 0; ql < nf; ++ql) ws.fb[ql] = tau_[f] * ws.fa[ql];
    tensor_apply_all(t.values_t, d - 1, ws.fb.data(), ws.fc.data(), ws.fd.data());
    for (int j = 0; j < nf; ++j) ru[map.base[j] + map.layer * map.stride] += ws.fc[j];
  }
}

void HDGOperator::restrict_faces(int c, const double* qv, const double* uv, const double* lam, double* out,
                                 Workspace& ws) const {
  const KernelTables& t = kernel_.tables();
  const GeometryCache& geo = kernel_.geometry();
  const MeshLevel& L = trace_->mesh().level(trace_->level());
  const int d = t.dim, m = t.n_cell(), nf = t.n_face();
  for (int lf = 0; lf < 2 * d; ++lf) {
    const int f = L.cell_faces[c][lf];
    const Face& face = L.faces[f];
    const int s = side_of(face, c, lf);
    const double sign = s == 0 ? 1.0 : -1.0;
    const int o = face.orientation[s];
    const FaceNodeMap& map = face_maps_[lf];
    const double tau = tau_[f];
    // tau (u + lambda)
    for (int j = 0; j < nf; ++j) ws.fa[j] = uv[map.base[j] + map.layer * map.stride] + (lam ? lam[lf * nf + j] : 0.0);
    tensor_apply_all(t.values, d - 1, ws.fa.data(), ws.fb.data(), ws.fd.data());
    for (int ql = 0; ql < nf; ++ql) ws.fb[ql] *= tau;
    for (int a = 0; a < d; ++a) {
      if (geo.affine() && geo.face_normal(f, 0)[a] == 0.0) continue;
      const double* src = qv + a * m;
      for (int j = 0; j < nf; ++j) ws.fa[j] = src[map.base[j] + map.layer * map.stride];
      tensor_apply_all(t.values, d - 1, ws.fa.data(), ws.fc.data(), ws.fd.data());
      for (int ql = 0; ql < nf; ++ql)
        ws.fb[ql] += sign * geo.face_normal(f, geo.canonical_of_local(o, ql))[a] * ws.fc[ql];
    }
    for (int ql = 0; ql < nf; ++ql) ws.fb[ql] *= geo.face_jxw(f, geo.canonical_of_local(o, ql));
    tensor_apply_all(t.values_t, d - 1, ws.fb.data(), out + lf * nf, ws.fd.data());
  }
}

void HDGOperator::solve_local(int c, const double* rq, const double* ru, double* q, double* u) const {
  const int d = dim(), m = cell_dofs();
  thread_local std::unique_ptr<Workspace> tl;
  if (!tl || static_cast<int>(tl->ru.size()) != m || static_cast<int>(tl->rq.size()) != d * m)
    tl = std::make_unique<Workspace>(d, m, kernel_.tables().n_face(), cell_trace_dofs());
  Workspace& ws = *tl;
  const CellClass& cl = classes_[cell_class_[c]];
  using Vec = Eigen::Map<Eigen::VectorXd>;
  using CVec = Eigen::Map<const Eigen::VectorXd>;
  // t = A^-1 rq, r = ru - B t = ru + div t
  for (int a = 0; a < d; ++a) Vec(ws.t.data() + a * m, m).noalias() = cl.a_inv * CVec(rq + a * m, m);
  divergence(c, ws.t.data(), ws.r.data(), ws);
  for (int i = 0; i < m; ++i) ws.r[i] += ru[i];
  // (D - B A^-1 B^T) U = r
  Vec(u, m).noalias() = -(cl.s_inv * Vec(ws.r.data(), m));
  // Q = A^-1 (rq - B^T U) = A^-1 (rq + grad^T U)
  gradient_transpose(c, u, ws.q.data(), ws);
  for (int i = 0; i < d * m; ++i) ws.q[i] += rq[i];
  for (int a = 0; a < d; ++a) Vec(q + a * m, m).noalias() = cl.a_inv * Vec(ws.q.data() + a * m, m);
}

void HDGOperator::cell_loop(std::span<const double> x, std::span<double> y, bool parallel, bool constrained) const {
  check_size(x.size(), size(), "HDGOperator");
  check_size(y.size(), size(), "HDGOperator");
  const int d = dim(), m = cell_dofs(), nf = kernel_.tables().n_face(), nt = cell_trace_dofs();
  const auto& mask = trace_->constrained();
  std::fill(y.begin(), y.end(), 0.0);
  auto body = [&](int c, Workspace& ws) {
    const auto dofs = trace_dofs(c);
    for (int i = 0; i < nt; ++i) ws.lam[i] = constrained && mask[dofs[i]] ? 0.0 : x[dofs[i]];
    lift(c, ws.lam.data(), ws.rq.data(), ws.ru.data(), ws, false);
    solve_local(c, ws.rq.data(), ws.ru.data(), ws.q.data(), ws.u.data());
    restrict_faces(c, ws.q.data(), ws.u.data(), ws.lam.data(), ws.out.data(), ws);
    for (int i = 0; i < nt; ++i)
      if (!(constrained && mask[dofs[i]])) y[dofs[i]] += ws.out[i];
  };
  if (parallel) {
#pragma omp parallel
    {
      Workspace ws(d, m, nf, nt);
      for (const auto& color : coloring_.colors) {
        const int count = static_cast<int>(color.size());
#pragma omp for schedule(static)
        for (int i = 0; i < count; ++i) body(color[i], ws);
      }
    }
  } else {
    Workspace ws(d, m, nf, nt);
    for (int c = 0; c < n_cells_; ++c) body(c, ws);
  }
  if (constrained)
    for (int i = 0; i < size(); ++i)
      if (mask[i]) y[i] = x[i];
}

void HDGOperator::apply(std::span<const double> x, std::span<double> y) const { cell_loop(x, y, true, true); }
void HDGOperator::apply_serial(std::span<const double> x, std::span<double> y) const { cell_loop(x, y, false, true); }
void HDGOperator::apply_unconstrained(std::span<const double> x, std::span<double> y) const {
  cell_loop(x, y, false, false);
}

SparseMatrix HDGOperator::assemble() const {
  const int d = dim(), m = cell_dofs(), nt = cell_trace_dofs();
  const auto& mask = trace_->constrained();
  std::vector<std::vector<int>> rows(size());
  for (int c = 0; c < n_cells_; ++c) {
    const auto dofs = trace_dofs(c);
    for (int i : dofs)
      if (!mask[i])
        for (int j : dofs)
          if (!mask[j]) rows[i].push_back(j);
  }
  for (int i = 0; i < size(); ++i) {
    if (mask[i]) rows[i].push_back(i);
    std::sort(rows[i].begin(), rows[i].end());
    rows[i].erase(std::unique(rows[i].begin(), rows[i].end()), rows[i].end());
  }
  SparseMatrix k = SparseMatrix::from_pattern(size(), rows);
  rows.clear();
  rows.shrink_to_fit();

  std::map<int, Eigen::MatrixXd> by_class;
  const bool shared = n_classes() < n_cells_;
  for (int c = 0; c < n_cells_; ++c) {
    auto it = by_class.find(cell_class_[c]);
    if (it == by_class.end()) {
      const HDGCellBlocks b = cell_blocks(c);
      const CellClass& cl = classes_[cell_class_[c]];
      // Z = [A B^T; B D]^-1 (C G)^T by block elimination
      Eigen::MatrixXd t1(d * m, nt);
      for (int a = 0; a < d; ++a) t1.middleRows(a * m, m) = cl.a_inv * b.C.middleCols(a * m, m).transpose();
      const Eigen::MatrixXd r = b.G.transpose() - b.B * t1;
      const Eigen::MatrixXd u = -(cl.s_inv * r);
      const Eigen::MatrixXd bt_u = b.B.transpose() * u;
      Eigen::MatrixXd q(d * m, nt);
      for (int a = 0; a < d; ++a) q.middleRows(a * m, m) = t1.middleRows(a * m, m) - cl.a_inv * bt_u.middleRows(a * m, m);
      Eigen::MatrixXd ke = b.H + b.C * q + b.G * u;
      it = by_class.emplace(cell_class_[c], std::move(ke)).first;
    }
    const Eigen::MatrixXd& ke = it->second;
    const auto dofs = trace_dofs(c);
    for (int i = 0; i < nt; ++i) {
      if (mask[dofs[i]]) continue;
      for (int j = 0; j < nt; ++j)
        if (!mask[dofs[j]]) k.add(dofs[i], dofs[j], ke(i, j));
    }
    if (!shared) by_class.erase(it);
  }
  for (int i = 0; i < size(); ++i)
    if (mask[i]) k.add(i, i, 1.0);
  return k;
}

std::vector<double> HDGOperator::dirichlet_values(const ManufacturedCase& problem) const {
  std::vector<double> g(size(), 0.0);
  for (int i = 0; i < size(); ++i)
    if (trace_->is_constrained(i)) g[i] = problem.g_dirichlet(trace_->dof_points()[i]);
  return g;
}

std::vector<double> HDGOperator::rhs(const ManufacturedCase& problem) const {
  const Mesh& mesh = trace_->mesh();
  const MeshLevel& L = mesh.level(trace_->level());
  const KernelTables& t = kernel_.tables();
  const int d = t.dim, n = t.n, m = t.n_cell(), nf = t.n_face(), nt = cell_trace_dofs();
  GeometryCache geo(mesh, trace_->level(), n, true, true);
  Workspace ws(d, m, nf, nt);
  std::vector<double> r(size(), 0.0), zero(static_cast<std::size_t>(d) * m, 0.0), f(m), qv(static_cast<std::size_t>(d) * m), uv(m);
  for (int c = 0; c < n_cells_; ++c) {
    for (int q = 0; q < m; ++q) ws.tmp2[q] = -problem.f(geo.point(c, q)) * geo.jxw(c, q);
    tensor_apply_all(t.values_t, d, ws.tmp2.data(), f.data(), ws.tmp.data());
    solve_local(c, zero.data(), f.data(), qv.data(), uv.data());
    restrict_faces(c, qv.data(), uv.data(), nullptr, ws.out.data(), ws);
    const auto dofs = trace_dofs(c);
    for (int i = 0; i < nt; ++i) r[dofs[i]] += ws.out[i];
  }
  const auto& N = t.basis.shape_values;
  for (int fc = 0; fc < L.n_faces(); ++fc) {
    const Face& face = L.faces[fc];
    if (face.boundary != BoundaryKind::neumann) continue;
    const int c = face.cell[0], lf = face.local_face[0];
    const auto dofs = trace_dofs(c);
    for (int ql = 0; ql < nf; ++ql) {
      const int qf = geo.canonical_of_local(face.orientation[0], ql);
      const double g = problem.g_neumann(geo.face_point(fc, qf), geo.face_normal(fc, qf)) * geo.face_jxw(fc, qf);
      for (int j = 0; j < nf; ++j)
        r[dofs[lf * nf + j]] -= g * N(ql % n, j % n) * (d == 3 ? N(ql / n, j / n) : 1.0);
    }
  }
  const auto gd = dirichlet_values(problem);
  std::vector<double> lift_d(size());
  apply_unconstrained(gd, lift_d);
  for (int i = 0; i < size(); ++i) r[i] = trace_->is_constrained(i) ? gd[i] : r[i] - lift_d[i];
  return r;
}

HDGSolution HDGOperator::recover(std::span<const double> trace, const ManufacturedCase& problem) const {
  check_size(trace.size(), size(), "HDGOperator::recover");
  const Mesh& mesh = trace_->mesh();
  const KernelTables& t = kernel_.tables();
  const int d = t.dim, m = t.n_cell(), nf = t.n_face(), nt = cell_trace_dofs();
  GeometryCache geo(mesh, trace_->level(), t.n, false, true);
  Workspace ws(d, m, nf, nt);
  HDGSolution sol;
  sol.u.assign(static_cast<std::size_t>(n_cells_) * m, 0.0);
  for (int a = 0; a < d; ++a) sol.q[a].assign(static_cast<std::size_t>(n_cells_) * m, 0.0);
  std::vector<double> f(m), qv(static_cast<std::size_t>(d) * m);
  for (int c = 0; c < n_cells_; ++c) {
    const auto dofs = trace_dofs(c);
    for (int i = 0; i < nt; ++i) ws.lam[i] = trace[dofs[i]];
    lift(c, ws.lam.data(), ws.rq.data(), ws.ru.data(), ws, false);
    for (int q = 0; q < m; ++q) ws.tmp2[q] = problem.f(geo.point(c, q)) * geo.jxw(c, q);
    tensor_apply_all(t.values_t, d, ws.tmp2.data(), f.data(), ws.tmp.data());
    for (int i = 0; i < d * m; ++i) ws.rq[i] = -ws.rq[i];
    for (int i = 0; i < m; ++i) ws.ru[i] = -ws.ru[i] - f[i];
    solve_local(c, ws.rq.data(), ws.ru.data(), qv.data(), sol.u.data() + static_cast<std::size_t>(c) * m);
    for (int a = 0; a < d; ++a)
      std::copy(qv.begin() + a * m, qv.begin() + (a + 1) * m, sol.q[a].begin() + static_cast<std::size_t>(c) * m);
  }
  return sol;
}

void HDGOperator::apply_mixed(std::span<const double> x, std::span<double> y) const {
  check_size(x.size(), mixed_size(), "HDGOperator::apply_mixed");
  check_size(y.size(), mixed_size(), "HDGOperator::apply_mixed");
  const Mesh& mesh = trace_->mesh();
  const MeshLevel& L = mesh.level(trace_->level());
  const KernelTables& t = kernel_.tables();
  const GeometryCache& geo = kernel_.geometry();
  const int d = t.dim, m = t.n_cell(), nf = t.n_face(), nt = cell_trace_dofs();
  const int block = (d + 1) * m;
  std::vector<double> z(static_cast<std::size_t>(L.n_faces()) * nf, 0.0);
  Workspace ws(d, m, nf, nt);
  std::vector<double> tmp_q(static_cast<std::size_t>(d) * m);

  for (int c = 0; c < n_cells_; ++c) {
    const double* xq = x.data() + static_cast<std::size_t>(c) * block;
    const double* xu = xq + d * m;
    double* yq = y.data() + static_cast<std::size_t>(c) * block;
    double* yu = yq + d * m;
    // A Q with the kappa^-1 mass
    for (int a = 0; a < d; ++a) {
      tensor_apply_all(t.values, d, xq + a * m, ws.val.data(), ws.tmp.data());
      for (int q = 0; q < m; ++q) ws.val[q] *= geo.jxw(c, q) / kernel_.kappa_cell(c, q);
      tensor_apply_all(t.values_t, d, ws.val.data(), yq + a * m, ws.tmp.data());
    }
    // B^T U = -grad^T U, B Q = -div Q
    gradient_transpose(c, xu, tmp_q.data(), ws);
    for (int i = 0; i < d * m; ++i) yq[i] -= tmp_q[i];
    divergence(c, xq, yu, ws);
    for (int i = 0; i < m; ++i) yu[i] = -yu[i];
    // D U = -<tau u, v>: lift of the cell's own trace values
    std::fill(tmp_q.begin(), tmp_q.end(), 0.0);
    for (int lf = 0; lf < 2 * d; ++lf) {
      const FaceNodeMap& map = face_maps_[lf];
      for (int j = 0; j < nf; ++j) ws.lam[lf * nf + j] = xu[map.base[j] + map.layer * map.stride];
    }
    lift(c, ws.lam.data(), ws.rq.data(), ws.ru.data(), ws, false);
    for (int i = 0; i < m; ++i) yu[i] -= ws.ru[i];
    // (C G) X collected per face in the canonical frame
    restrict_faces(c, xq, xu, nullptr, ws.out.data(), ws);
    const auto dofs = trace_dofs(c);
    for (int i = 0; i < nt; ++i) z[dofs[i]] += ws.out[i];
  }
  std::vector<double> w(z.size(), 0.0);
  for (int f = 0; f < L.n_faces(); ++f) {
    if (face_h_inv_[f].size() == 0) continue;
    Eigen::Map<Eigen::VectorXd>(w.data() + static_cast<std::size_t>(f) * nf, nf) =
        face_h_inv_[f] * Eigen::Map<const Eigen::VectorXd>(z.data() + static_cast<std::size_t>(f) * nf, nf);
  }
  for (int c = 0; c < n_cells_; ++c) {
    const auto dofs = trace_dofs(c);
    for (int i = 0; i < nt; ++i) ws.lam[i] = w[dofs[i]];
    lift(c, ws.lam.data(), ws.rq.data(), ws.ru.data(), ws, false);
    double* yq = y.data() + static_cast<std::size_t>(c) * block;
    for (int i = 0; i < d * m; ++i) yq[i] += ws.rq[i];
    for (int i = 0; i < m; ++i) yq[d * m + i] += ws.ru[i];
  }
}

std::vector<double> HDGOperator::postprocess(const HDGSolution& sol, const Space& post) const {
  const int d = dim(), k = degree();
  if (post.kind() != SpaceKind::dg || post.degree() != k + 1 || post.level() != trace_->level())
    throw std::invalid_argument("HDGOperator::postprocess: needs the DG space of degree k+1 on the same level");
  const Mesh& mesh = trace_->mesh();
  const int nq1 = k + 2;
  GeometryCache geo(mesh, trace_->level(), nq1, false, true);
  const auto pts = geo.rule().points;
  const auto nodes_k = gauss_lobatto_nodes(k);
  const auto nodes_p = gauss_lobatto_nodes(k + 1);
  const Matrix1D vk = lagrange_values(nodes_k, pts);
  const Matrix1D vp = lagrange_values(nodes_p, pts);
  const Matrix1D dp = lagrange_derivatives(nodes_p, pts);
  const Eigen::MatrixXd phik = tensor_table(d, vk, vk, vk);
  const Eigen::MatrixXd phip = tensor_table(d, vp, vp, vp);
  std::array<Eigen::MatrixXd, 3> dphi;
  dphi[0] = tensor_table(d, dp, vp, vp);
  dphi[1] = tensor_table(d, vp, dp, vp);
  if (d == 3) dphi[2] = tensor_table(d, vp, vp, dp);
  const int m = cell_dofs(), mp = post.dofs_per_entity(), nq = geo.n_q();

  std::map<std::vector<double>, Eigen::PartialPivLU<Eigen::MatrixXd>> cache;
  std::vector<double> out(post.n_dofs(), 0.0);
  for (int c = 0; c < n_cells_; ++c) {
    std::vector<Eigen::MatrixXd> grad(d, Eigen::MatrixXd(nq, mp));
    for (int q = 0; q < nq; ++q) {
      const double* ji = geo.jinv(c, q);
      for (int a = 0; a < d; ++a) {
        grad[a].row(q).setZero();
        for (int r = 0; r < d; ++r) grad[a].row(q) += ji[r * d + a] * dphi[r].row(q);
      }
    }
    Eigen::VectorXd jxw(nq);
    for (int q = 0; q < nq; ++q) jxw[q] = geo.jxw(c, q);

    auto build = [&]() {
      Eigen::MatrixXd sys = Eigen::MatrixXd::Zero(mp + 1, mp + 1);
      for (int a = 0; a < d; ++a) sys.topLeftCorner(mp, mp) += grad[a].transpose() * jxw.asDiagonal() * grad[a];
      const Eigen::VectorXd mean = phip.transpose() * jxw;
      sys.block(0, mp, mp, 1) = mean;
      sys.block(mp, 0, 1, mp) = mean.transpose();
      return Eigen::PartialPivLU<Eigen::MatrixXd>(sys);
    };
    const Eigen::PartialPivLU<Eigen::MatrixXd>* lu = nullptr;
    Eigen::PartialPivLU<Eigen::MatrixXd> own;
    if (geo.affine()) {
      auto it = cache.find(affine_signature(geo, c));
      if (it == cache.end()) it = cache.emplace(affine_signature(geo, c), build()).first;
      lu = &it->second;
    } else {
      own = build();
      lu = &own;
    }

    const std::size_t off = static_cast<std::size_t>(c) * m;
    const Eigen::VectorXd uq = phik * Eigen::Map<const Eigen::VectorXd>(sol.u.data() + off, m);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(mp + 1);
    for (int a = 0; a < d; ++a) {
      Eigen::VectorXd qa = phik * Eigen::Map<const Eigen::VectorXd>(sol.q[a].data() + off, m);
      for (int q = 0; q < nq; ++q) qa[q] *= jxw[q] / kappa_(geo.point(c, q));
      b.head(mp) -= grad[a].transpose() * qa;
    }
    b[mp] = uq.dot(jxw);
    const Eigen::VectorXd x = lu->solve(b);
    std::copy(x.data(), x.data() + mp, out.begin() + static_cast<std::size_t>(c) * mp);
  }
  return out;
}

std::size_t HDGOperator::memory_bytes() const {
  std::size_t b = kernel_.memory_bytes() + 8 * tau_.size() + 4 * (cell_trace_.size() + cell_class_.size());
  for (const auto& cl : classes_) b += 8 * (cl.a_inv.size() + cl.s_inv.size());
  for (const auto& h : face_h_inv_) b += 8 * h.size();
  return b;
}

}  // namespace fembench
