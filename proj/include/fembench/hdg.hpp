#pragma once

#include "fembench/matfree_ops.hpp"

#include <Eigen/Dense>

#include <map>
#include <memory>
#include <span>
#include <vector>

namespace fembench {

/// Dense element blocks of the HDG system
///
///   [ A   B^T  C^T ] [Q]   [ 0   ]
///   [ B   D    G^T ] [U] = [ R_f ]
///   [-C  -G    H   ] [L]   [ R_N ]
///
/// for one cell. Q holds d flux components of m = (k+1)^d nodal values each;
/// trace rows are ordered by local face, nodes in the cell-local face frame.
/// With q = -kappa grad u these signs give B = -(v, div w) and D = -<tau v, u>,
/// so the inner Schur complement D - B A^-1 B^T is negative definite.
struct HDGCellBlocks {
  Eigen::MatrixXd A;  // d m x d m, (w, kappa^-1 q)
  Eigen::MatrixXd B;  // m x d m
  Eigen::MatrixXd D;  // m x m
  Eigen::MatrixXd C;  // n_t x d m, <mu, w.n>
  Eigen::MatrixXd G;  // n_t x m, <mu, tau v>
  Eigen::MatrixXd H;  // n_t x n_t, this cell's part of <mu, tau lambda>
};

/// DG fields recovered from a trace solution; q approximates -kappa grad u.
struct HDGSolution {
  std::vector<double> u;
  std::array<std::vector<double>, 3> q;
};

/// tau = 5 max kappa over the face quadrature points; throws std::domain_error
/// if kappa is not positive there.
double stabilization_tau(const LaplaceCellKernel& kernel, int face);

/// HDG discretization on a trace space: element blocks, local solvers,
/// trace system (assembled and matrix-free) and the mixed-form operator.
class HDGOperator {
 public:
  HDGOperator(const Space& trace, const Coefficient& kappa);

  const Space& trace_space() const { return *trace_; }
  int size() const { return trace_->n_dofs(); }
  int dim() const { return kernel_.tables().dim; }
  int degree() const { return kernel_.tables().k; }
  int cell_dofs() const { return kernel_.tables().n_cell(); }
  int n_cells() const { return n_cells_; }
  /// Trace dofs per cell (2d faces).
  int cell_trace_dofs() const { return 2 * dim() * kernel_.tables().n_face(); }
  std::span<const int> trace_dofs(int cell) const {
    return {&cell_trace_[static_cast<std::size_t>(cell) * cell_trace_dofs()], static_cast<std::size_t>(cell_trace_dofs())};
  }
  double tau(int face) const { return tau_[face]; }
  const LaplaceCellKernel& kernel() const { return kernel_; }
  int n_classes() const { return static_cast<int>(classes_.size()); }

  HDGCellBlocks cell_blocks(int cell) const;

  /// (Q, U) = [A B^T; B D]^-1 (rq, ru) on one cell.
  void solve_local(int cell, const double* rq, const double* ru, double* q, double* u) const;

  /// Matrix-free K = H + (C G) [A B^T; B D]^-1 (C G)^T with zero input and
  /// identity output on Dirichlet trace dofs.
  void apply(std::span<const double> x, std::span<double> y) const;
  void apply_serial(std::span<const double> x, std::span<double> y) const;
  void apply_unconstrained(std::span<const double> x, std::span<double> y) const;

  /// Assembled trace matrix with identity rows/columns on Dirichlet dofs.
  SparseMatrix assemble() const;

  /// Trace right-hand side with Dirichlet lifting; constrained rows hold g_D.
  std::vector<double> rhs(const ManufacturedCase& problem) const;
  std::vector<double> dirichlet_values(const ManufacturedCase& problem) const;

  /// Interior fields from a trace vector (first two block rows).
  HDGSolution recover(std::span<const double> trace, const ManufacturedCase& problem) const;

  /// Mixed form: [A B^T; B D] + (C G)^T H^-1 (C G) over non-Dirichlet faces,
  /// acting on cell blocks [Q_0 .. Q_{d-1}, U].
  int mixed_size() const { return n_cells_ * (dim() + 1) * cell_dofs(); }
  void apply_mixed(std::span<const double> x, std::span<double> y) const;

  /// Element-wise post-processing into the DG space of degree k+1.
  std::vector<double> postprocess(const HDGSolution& sol, const Space& post_space) const;

  std::size_t memory_bytes() const;

 private:
  struct Workspace;
  struct CellClass {
    Eigen::MatrixXd a_inv;  // inverse of the scalar block (v, kappa^-1 w)
    Eigen::MatrixXd s_inv;  // inverse of B A^-1 B^T - D
  };

  void lift(int cell, const double* lam, double* rq, double* ru, Workspace& ws, bool add) const;
  void restrict_faces(int cell, const double* q, const double* u, const double* lam, double* out, Workspace& ws) const;
  void divergence(int cell, const double* t, double* out, Workspace& ws) const;
  void gradient_transpose(int cell, const double* u, double* out, Workspace& ws) const;
  void cell_loop(std::span<const double> x, std::span<double> y, bool parallel, bool constrained) const;

  const Space* trace_;
  Coefficient kappa_;
  LaplaceCellKernel kernel_;
  int n_cells_ = 0;
  std::vector<double> tau_;
  std::vector<int> cell_trace_;
  std::vector<int> cell_class_;
  std::vector<CellClass> classes_;
  std::array<FaceNodeMap, 6> face_maps_;
  Coloring coloring_;
  std::vector<Eigen::MatrixXd> face_h_inv_;  // mixed form, canonical frame, empty on Dirichlet faces
};

}  // namespace fembench
