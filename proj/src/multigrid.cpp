#include "fembench/multigrid.hpp"

#include <stdexcept>

namespace fembench {

PrimalMultigrid::PrimalMultigrid(const Mesh& mesh, int finest_level, PrimalMethod method, int k,
                                 const Coefficient& kappa, const ChebyshevConfig& config, int direct_limit)
    : method_(method) {
  if (finest_level < 0 || finest_level >= mesh.n_levels())
    throw std::out_of_range("PrimalMultigrid: level " + std::to_string(finest_level) + " not in mesh");
  const SpaceKind kind = method == PrimalMethod::cg ? SpaceKind::cg : SpaceKind::dg;
  for (int l = 0; l <= finest_level; ++l) {
    spaces_.push_back(std::make_unique<Space>(enumerate_dofs(mesh, l, kind, k)));
    if (method == PrimalMethod::cg)
      cg_.push_back(std::make_unique<CGLaplaceOperator>(*spaces_.back(), kappa));
    else
      dg_.push_back(std::make_unique<DGSIPOperator>(*spaces_.back(), kappa));
  }

  std::vector<MGLevel> levels(finest_level + 1);
  for (int l = 0; l <= finest_level; ++l) {
    MGLevel& lv = levels[l];
    lv.size = spaces_[l]->n_dofs();
    lv.apply = level_operator(l);
    if (l > 0) {
      lv.smoother = std::make_unique<ChebyshevSmoother>(lv.apply, level_diagonal(l), config);
      SparseMatrix p = build_prolongation(*spaces_[l - 1], *spaces_[l]);
      lv.prolongation = method == PrimalMethod::cg ? constrain_transfer(p, *spaces_[l - 1], *spaces_[l]) : std::move(p);
    }
  }

  LinearOperator coarse;
  const int n0 = spaces_[0]->n_dofs();
  if (n0 < direct_limit) {
    coarse_lu_ = std::make_unique<DenseLU>(probe_assemble(levels[0].apply, n0));
    coarse = [lu = coarse_lu_.get()](std::span<const double> b, std::span<double> x) { lu->solve(b, x); };
  } else {
    direct_coarse_ = false;
    const auto diag = level_diagonal(0);
    const EigenEstimate est = estimate_eigenvalues(levels[0].apply, diag, 40);
    const double hi = config.upper * est.max;
    coarse_cheb_ = std::make_unique<ChebyshevSmoother>(levels[0].apply, diag, est.min, hi,
                                                       chebyshev_degree_for(est.min, hi, 1e-3));
    coarse = [ch = coarse_cheb_.get()](std::span<const double> b, std::span<double> x) { ch->smooth(b, x, true); };
  }
  mg_ = std::make_unique<Multigrid>(std::move(levels), std::move(coarse));
}

LinearOperator PrimalMultigrid::level_operator(int l) const {
  if (method_ == PrimalMethod::cg)
    return [op = cg_[l].get()](std::span<const double> x, std::span<double> y) { op->apply(x, y); };
  return [op = dg_[l].get()](std::span<const double> x, std::span<double> y) { op->apply(x, y); };
}

std::vector<double> PrimalMultigrid::level_diagonal(int l) const {
  return method_ == PrimalMethod::cg ? cg_[l]->diagonal() : dg_[l]->diagonal();
}

LinearOperator PrimalMultigrid::fine_operator() const { return level_operator(static_cast<int>(spaces_.size()) - 1); }

SparseMatrix galerkin_product(const SparseMatrix& p, const SparseMatrix& k, const std::vector<char>& constrained) {
  const SparseMatrix kp = multiply(k, p);
  SparseMatrix c = multiply(p.transpose(), kp);
  if (static_cast<int>(constrained.size()) != c.rows())
    throw std::invalid_argument("galerkin_product: constraint mask size mismatch");
  std::vector<Triplet> entries;
  entries.reserve(c.nnz() + constrained.size());
  for (int i = 0; i < c.rows(); ++i) {
    if (constrained[i]) {
      entries.push_back({i, i, 1.0});
      continue;
    }
    for (auto q = c.row_ptr()[i]; q < c.row_ptr()[i + 1]; ++q)
      if (!constrained[c.col_idx()[q]]) entries.push_back({i, c.col_idx()[q], c.values()[q]});
  }
  return SparseMatrix::from_triplets(c.rows(), c.cols(), std::move(entries));
}

SparseMatrix leading_rows(const SparseMatrix& m, int n) {
  if (n > m.rows()) throw std::invalid_argument("leading_rows: too many rows");
  SparseMatrix r(n, m.cols());
  const auto end = m.row_ptr()[n];
  std::copy(m.row_ptr().begin(), m.row_ptr().begin() + n + 1, r.row_ptr().begin());
  r.col_idx().assign(m.col_idx().begin(), m.col_idx().begin() + end);
  r.values().assign(m.values().begin(), m.values().begin() + end);
  return r;
}

LinearCoarseMultigrid::LinearCoarseMultigrid(std::shared_ptr<const SparseMatrix> fine, const SparseMatrix& to_linear,
                                             const Mesh& mesh, int level, int ilu_sweeps, int direct_limit) {
  if (to_linear.rows() != fine->rows()) throw std::invalid_argument("LinearCoarseMultigrid: transfer size mismatch");
  matrices_.push_back(fine);
  std::vector<SparseMatrix> transfers;  // transfers[i] maps matrices_[i+1] to matrices_[i]
  Space linear = enumerate_dofs(mesh, level, SpaceKind::cg_linear, 1);
  // transfer from `linear` to the last matrix; empty once that matrix lives on `linear`
  SparseMatrix pending = to_linear;
  if (linear.n_dofs() < fine->rows()) {
    matrices_.push_back(std::make_shared<SparseMatrix>(galerkin_product(pending, *fine, linear.constrained())));
    transfers.push_back(std::move(pending));
    pending = SparseMatrix();
  }
  for (int l = level - 1; l >= 0 && matrices_.back()->rows() >= direct_limit; --l) {
    Space coarse = enumerate_dofs(mesh, l, SpaceKind::cg_linear, 1);
    SparseMatrix p = constrain_transfer(build_prolongation(coarse, linear), coarse, linear);
    if (pending.rows() > 0) {
      p = multiply(pending, p);
      pending = SparseMatrix();
    }
    matrices_.push_back(std::make_shared<SparseMatrix>(galerkin_product(p, *matrices_.back(), coarse.constrained())));
    transfers.push_back(std::move(p));
    linear = std::move(coarse);
  }

  const int n_levels = static_cast<int>(matrices_.size());
  std::vector<MGLevel> levels(n_levels);
  for (int l = 0; l < n_levels; ++l) {
    const int idx = n_levels - 1 - l;  // index into matrices_ (fine first)
    const auto& m = matrices_[idx];
    MGLevel& lv = levels[l];
    lv.size = m->rows();
    lv.apply = [m](std::span<const double> x, std::span<double> y) { m->multiply(x, y); };
    if (l > 0) {
      lv.smoother = std::make_unique<ILUSmoother>(m, ilu_sweeps);
      lv.prolongation = transfers[idx];
    }
  }
  coarse_lu_ = std::make_unique<DenseLU>(*matrices_.back());
  LinearOperator coarse = [lu = coarse_lu_.get()](std::span<const double> b, std::span<double> x) { lu->solve(b, x); };
  mg_ = std::make_unique<Multigrid>(std::move(levels), std::move(coarse));
}

std::unique_ptr<LinearCoarseMultigrid> build_trace_pmg(std::shared_ptr<const SparseMatrix> trace_matrix,
                                                       const Space& trace, int ilu_sweeps, int direct_limit) {
  Space linear = enumerate_dofs(trace.mesh(), trace.level(), SpaceKind::cg_linear, 1);
  const SparseMatrix p = constrain_transfer(build_trace_to_linear(trace, linear), linear, trace);
  return std::make_unique<LinearCoarseMultigrid>(std::move(trace_matrix), p, trace.mesh(), trace.level(), ilu_sweeps,
                                                 direct_limit);
}

std::unique_ptr<LinearCoarseMultigrid> build_skeleton_pmg(std::shared_ptr<const SparseMatrix> skeleton_matrix,
                                                          const Space& cg, int ilu_sweeps, int direct_limit) {
  Space linear = enumerate_dofs(cg.mesh(), cg.level(), SpaceKind::cg_linear, 1);
  const SparseMatrix p = constrain_transfer(build_interpolation(linear, cg), linear, cg);
  return std::make_unique<LinearCoarseMultigrid>(std::move(skeleton_matrix), leading_rows(p, cg.n_skeleton()),
                                                 cg.mesh(), cg.level(), ilu_sweeps, direct_limit);
}

}  // namespace fembench
