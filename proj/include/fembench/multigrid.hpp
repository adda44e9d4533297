#pragma once

#include "fembench/matfree_ops.hpp"
#include "fembench/solvers.hpp"

#include <memory>
#include <vector>

namespace fembench {

enum class PrimalMethod { cg, dgsip };

/// Matrix-free operators on every level of a mesh hierarchy plus the
/// geometric V-cycle built from them: Chebyshev-Jacobi smoothing, embedding
/// transfers, and a direct coarse solve (or Chebyshev to 1e-3 when the
/// coarse level is large).
class PrimalMultigrid {
 public:
  PrimalMultigrid(const Mesh& mesh, int finest_level, PrimalMethod method, int k, const Coefficient& kappa,
                  const ChebyshevConfig& config = {}, int direct_limit = 2000);

  PrimalMethod method() const { return method_; }
  const Space& space() const { return *spaces_.back(); }
  int size() const { return space().n_dofs(); }
  LinearOperator fine_operator() const;
  const CGLaplaceOperator& cg_operator() const { return *cg_.back(); }
  const DGSIPOperator& dg_operator() const { return *dg_.back(); }
  const Multigrid& multigrid() const { return *mg_; }
  LinearOperator preconditioner() const { return mg_->as_preconditioner(); }
  bool direct_coarse() const { return direct_coarse_; }

 private:
  LinearOperator level_operator(int l) const;
  std::vector<double> level_diagonal(int l) const;

  PrimalMethod method_;
  std::vector<std::unique_ptr<Space>> spaces_;
  std::vector<std::unique_ptr<CGLaplaceOperator>> cg_;
  std::vector<std::unique_ptr<DGSIPOperator>> dg_;
  std::unique_ptr<DenseLU> coarse_lu_;
  std::unique_ptr<ChebyshevSmoother> coarse_cheb_;
  bool direct_coarse_ = true;
  std::unique_ptr<Multigrid> mg_;
};

/// Sparse triple product P^T K P with unit diagonal on rows listed in
/// `constrained` (which P maps to zero).
SparseMatrix galerkin_product(const SparseMatrix& p, const SparseMatrix& k, const std::vector<char>& constrained);

/// The first n rows of a matrix.
SparseMatrix leading_rows(const SparseMatrix& m, int n);

/// Multigrid for an assembled high-order system (HDG trace or condensed CG
/// skeleton): ILU(0) smoothing on the fine matrix, a Galerkin operator on
/// linear continuous elements of the same mesh, then Galerkin-coarsened
/// linear levels down to a direct solve. The linear level on the fine mesh
/// is skipped when it is not smaller than the fine system.
class LinearCoarseMultigrid {
 public:
  /// `to_linear` maps linear dofs on `level` to fine dofs (constrained rows
  /// and columns already removed).
  LinearCoarseMultigrid(std::shared_ptr<const SparseMatrix> fine, const SparseMatrix& to_linear, const Mesh& mesh,
                        int level, int ilu_sweeps = 1, int direct_limit = 2000);

  const Multigrid& multigrid() const { return *mg_; }
  LinearOperator preconditioner() const { return mg_->as_preconditioner(); }
  /// Level matrices, finest first.
  const SparseMatrix& level_matrix(int i) const { return *matrices_[i]; }
  int n_levels() const { return mg_->n_levels(); }

 private:
  std::vector<std::shared_ptr<const SparseMatrix>> matrices_;  // fine first
  std::unique_ptr<DenseLU> coarse_lu_;
  std::unique_ptr<Multigrid> mg_;
};

/// p-multigrid for the HDG trace system.
std::unique_ptr<LinearCoarseMultigrid> build_trace_pmg(std::shared_ptr<const SparseMatrix> trace_matrix,
                                                       const Space& trace, int ilu_sweeps = 1, int direct_limit = 2000);

/// Same stack for the condensed CG skeleton system.
std::unique_ptr<LinearCoarseMultigrid> build_skeleton_pmg(std::shared_ptr<const SparseMatrix> skeleton_matrix,
                                                          const Space& cg, int ilu_sweeps = 1,
                                                          int direct_limit = 2000);

}  // namespace fembench
