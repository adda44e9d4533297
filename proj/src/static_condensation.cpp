#include "fembench/static_condensation.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>

namespace fembench {

CondensedCG::CondensedCG(const CGLaplaceOperator& op) : op_(&op) {
  const Space& space = op.space();
  const LaplaceCellKernel& kernel = op.kernel();
  const GeometryCache& geo = kernel.geometry();
  const int d = space.dim(), n = space.degree() + 1, m = kernel.tables().n_cell();
  const int n_cells = space.n_entities();
  const auto& mask = space.constrained();
  n_skeleton_ = space.n_skeleton();

  for (int i = 0; i < m; ++i) {
    const int idx[3] = {i % n, (i / n) % n, d == 3 ? i / (n * n) : 1};
    bool inside = true;
    for (int a = 0; a < d; ++a) inside = inside && idx[a] > 0 && idx[a] < n - 1;
    (inside ? interior_ : boundary_).push_back(i);
  }
  const int ni = static_cast<int>(interior_.size()), nb = static_cast<int>(boundary_.size());

  std::vector<std::vector<int>> rows(n_skeleton_);
  for (int c = 0; c < n_cells; ++c) {
    const auto dofs = space.entity_dofs(c);
    for (int i : boundary_) {
      const int gi = dofs[i];
      if (mask[gi]) continue;
      for (int j : boundary_)
        if (!mask[dofs[j]]) rows[gi].push_back(dofs[j]);
    }
  }
  for (int i = 0; i < n_skeleton_; ++i) {
    if (mask[i]) rows[i].push_back(i);
    std::sort(rows[i].begin(), rows[i].end());
    rows[i].erase(std::unique(rows[i].begin(), rows[i].end()), rows[i].end());
  }
  matrix_ = std::make_shared<SparseMatrix>(SparseMatrix::from_pattern(n_skeleton_, rows));
  rows.clear();
  rows.shrink_to_fit();

  const bool shareable = geo.affine() && kernel.constant_coefficient();
  std::map<std::vector<double>, int> signature;
  std::vector<Eigen::MatrixXd> shared_schur;
  LaplaceCellKernel::Workspace ws(m);
  std::vector<double> unit(m, 0.0), col(m);
  Eigen::MatrixXd ke(m, m), local_schur;
  cell_class_.resize(n_cells);
  for (int c = 0; c < n_cells; ++c) {
    bool fresh = true;
    if (shareable) {
      auto [it, inserted] = signature.emplace(affine_signature(geo, c), static_cast<int>(classes_.size()));
      cell_class_[c] = it->second;
      fresh = inserted;
    } else {
      cell_class_[c] = static_cast<int>(classes_.size());
    }
    if (fresh) {
      for (int j = 0; j < m; ++j) {
        unit[j] = 1.0;
        kernel.apply(c, unit.data(), col.data(), ws);
        unit[j] = 0.0;
        for (int i = 0; i < m; ++i) ke(i, j) = col[i];
      }
      CellClass cl;
      Eigen::MatrixXd kii(ni, ni), kbi(nb, ni), kbb(nb, nb);
      cl.kib.resize(ni, nb);
      for (int a = 0; a < ni; ++a) {
        for (int b = 0; b < ni; ++b) kii(a, b) = ke(interior_[a], interior_[b]);
        for (int b = 0; b < nb; ++b) cl.kib(a, b) = ke(interior_[a], boundary_[b]);
      }
      for (int a = 0; a < nb; ++a) {
        for (int b = 0; b < nb; ++b) kbb(a, b) = ke(boundary_[a], boundary_[b]);
        for (int b = 0; b < ni; ++b) kbi(a, b) = ke(boundary_[a], interior_[b]);
      }
      if (ni > 0) {
        cl.kii_inv = kii.llt().solve(Eigen::MatrixXd::Identity(ni, ni));
        local_schur = kbb - kbi * cl.kii_inv * cl.kib;
      } else {
        local_schur = kbb;
      }
      if (shareable) shared_schur.push_back(local_schur);
      classes_.push_back(std::move(cl));
    }
    const Eigen::MatrixXd& schur = shareable ? shared_schur[cell_class_[c]] : local_schur;
    const auto dofs = space.entity_dofs(c);
    for (int a = 0; a < nb; ++a) {
      const int gi = dofs[boundary_[a]];
      if (mask[gi]) continue;
      for (int b = 0; b < nb; ++b) {
        const int gj = dofs[boundary_[b]];
        if (!mask[gj]) matrix_->add(gi, gj, schur(a, b));
      }
    }
  }
  for (int i = 0; i < n_skeleton_; ++i)
    if (mask[i]) matrix_->add(i, i, 1.0);
}

std::vector<double> CondensedCG::condense_rhs(std::span<const double> full_rhs) const {
  const Space& space = op_->space();
  if (static_cast<int>(full_rhs.size()) != space.n_dofs())
    throw std::invalid_argument("CondensedCG::condense_rhs: size mismatch");
  const auto& mask = space.constrained();
  std::vector<double> r(full_rhs.begin(), full_rhs.begin() + n_skeleton_);
  const int ni = static_cast<int>(interior_.size()), nb = static_cast<int>(boundary_.size());
  if (ni == 0) return r;
  Eigen::VectorXd ri(ni);
  for (int c = 0; c < space.n_entities(); ++c) {
    const auto dofs = space.entity_dofs(c);
    const CellClass& cl = classes_[cell_class_[c]];
    for (int a = 0; a < ni; ++a) ri[a] = full_rhs[dofs[interior_[a]]];
    const Eigen::VectorXd t = cl.kib.transpose() * (cl.kii_inv * ri);
    for (int b = 0; b < nb; ++b) {
      const int g = dofs[boundary_[b]];
      if (!mask[g]) r[g] -= t[b];
    }
  }
  return r;
}

std::vector<double> CondensedCG::recover(std::span<const double> skeleton, std::span<const double> full_rhs) const {
  const Space& space = op_->space();
  if (static_cast<int>(skeleton.size()) != n_skeleton_ || static_cast<int>(full_rhs.size()) != space.n_dofs())
    throw std::invalid_argument("CondensedCG::recover: size mismatch");
  const auto& mask = space.constrained();
  std::vector<double> x(space.n_dofs(), 0.0);
  std::copy(skeleton.begin(), skeleton.end(), x.begin());
  const int ni = static_cast<int>(interior_.size()), nb = static_cast<int>(boundary_.size());
  Eigen::VectorXd rhs(ni), xb(nb);
  for (int c = 0; c < space.n_entities() && ni > 0; ++c) {
    const auto dofs = space.entity_dofs(c);
    const CellClass& cl = classes_[cell_class_[c]];
    for (int a = 0; a < ni; ++a) rhs[a] = full_rhs[dofs[interior_[a]]];
    for (int b = 0; b < nb; ++b) xb[b] = mask[dofs[boundary_[b]]] ? 0.0 : skeleton[dofs[boundary_[b]]];
    const Eigen::VectorXd xi = cl.kii_inv * (rhs - cl.kib * xb);
    for (int a = 0; a < ni; ++a) x[dofs[interior_[a]]] = xi[a];
  }
  return x;
}

std::size_t CondensedCG::memory_bytes() const {
  std::size_t b = matrix_->memory_bytes() + 4 * cell_class_.size();
  for (const auto& cl : classes_) b += 8 * (cl.kii_inv.size() + cl.kib.size());
  return b;
}

}  // namespace fembench
