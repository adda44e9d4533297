#pragma once

#include "fembench/geometry.hpp"
#include "fembench/parallel.hpp"
#include "fembench/problems.hpp"
#include "fembench/spaces.hpp"
#include "fembench/tensor_basis.hpp"

#include <memory>
#include <span>
#include <vector>

namespace fembench {

/// 1D factors of the sum-factorized kernels at k+1 Gauss points.
struct KernelTables {
  int dim = 3;
  int k = 1;
  int n = 2;
  Basis1D basis;
  EvenOddTables values;       // N
  EvenOddTables values_t;     // N^T
  EvenOddTables gradients;    // collocation derivative Dq
  EvenOddTables gradients_t;  // Dq^T

  int n_cell() const { return dim == 3 ? n * n * n : n * n; }
  int n_face() const { return dim == 3 ? n * n : n; }
};

KernelTables make_kernel_tables(int dim, int k);

/// out = M x M (x M) in, the same 1D matrix along every axis of an n^d tensor.
/// `scratch` holds n^d values; in and out must differ.
void tensor_apply_all(const EvenOddTables& m, int d, const double* in, double* out, double* scratch,
                      OpCount* count = nullptr);

/// out (+)= M along one axis of an n^d tensor.
void tensor_apply_axis(const EvenOddTables& m, int d, int axis, const double* in, double* out, bool add,
                       OpCount* count = nullptr);

/// Cell-lexicographic indices of the nodes of local face f with the normal
/// index set to zero, listed in face-local order; add layer * stride to reach
/// other node layers along the face normal.
struct FaceNodeMap {
  std::vector<int> base;
  int stride = 1;
  int layer = 0;  // 0 or n-1
  int side = 0;   // 0 lower, 1 upper reference face
};

FaceNodeMap face_node_map(int dim, int n, int local_face);

double penalty_sigma(int k, int dim, double h);

/// Shared volume part: sum-factorized (grad v, kappa grad u) on one cell.
class LaplaceCellKernel {
 public:
  LaplaceCellKernel(const Mesh& mesh, int level, int k, const Coefficient& kappa, bool with_faces);

  const KernelTables& tables() const { return tables_; }
  const GeometryCache& geometry() const { return *geo_; }
  bool constant_coefficient() const { return kappa_q_.empty(); }
  double kappa_cell(int cell, int q) const {
    return kappa_q_.empty() ? kappa_const_ : kappa_q_[static_cast<std::size_t>(cell) * geo_->n_q() + q];
  }
  double kappa_face(int face, int qf) const {
    return kappa_f_.empty() ? kappa_const_ : kappa_f_[static_cast<std::size_t>(face) * geo_->n_q_face() + qf];
  }

  struct Workspace {
    std::vector<double> loc, out, val, tmp, tmp2;
    std::array<std::vector<double>, 3> grad;
    explicit Workspace(int size);
  };

  /// out = element operator times loc (both n^d, cell-lexicographic).
  void apply(int cell, const double* loc, double* out, Workspace& ws, OpCount* count = nullptr) const;

  /// Adds the diagonal of the element operator to out.
  void add_diagonal(int cell, double* out) const;

  /// out = integral of f * phi_i over the cell.
  void load(int cell, const std::function<double(const Point&)>& f, double* out, Workspace& ws) const;

  std::size_t memory_bytes() const;

 private:
  KernelTables tables_;
  std::unique_ptr<GeometryCache> geo_;
  double kappa_const_ = 1.0;
  std::vector<double> kappa_q_;
  std::vector<double> kappa_f_;
  std::vector<double> metric_;  // affine: det * Jinv Jinv^T per cell
};

/// Matrix-free continuous Galerkin Laplacian with strongly imposed Dirichlet
/// conditions (zero input and identity output on constrained dofs).
class CGLaplaceOperator {
 public:
  CGLaplaceOperator(const Space& space, const Coefficient& kappa);

  int size() const { return space_->n_dofs(); }
  const Space& space() const { return *space_; }
  const LaplaceCellKernel& kernel() const { return kernel_; }

  /// Colored OpenMP cell loop.
  void apply(std::span<const double> x, std::span<double> y) const;
  /// Reference single-threaded cell loop.
  void apply_serial(std::span<const double> x, std::span<double> y) const;
  /// Full stiffness matrix without constraint treatment.
  void apply_unconstrained(std::span<const double> x, std::span<double> y) const;

  std::vector<double> diagonal() const;

  /// Load and Neumann terms minus A times the Dirichlet interpolant; constrained rows hold g_D.
  std::vector<double> rhs(const ManufacturedCase& problem) const;
  /// Dirichlet interpolant (zero on free dofs).
  std::vector<double> dirichlet_values(const ManufacturedCase& problem) const;

  /// Arithmetic of one cell kernel evaluation, counted while running it.
  OpCount count_cell_ops() const;

  const Coloring& coloring() const { return coloring_; }

 private:
  void cell_loop(std::span<const double> x, std::span<double> y, bool parallel, bool constrained) const;

  const Space* space_;
  LaplaceCellKernel kernel_;
  Coloring coloring_;
};

/// Matrix-free symmetric interior penalty DG operator.
class DGSIPOperator {
 public:
  DGSIPOperator(const Space& space, const Coefficient& kappa);

  int size() const { return space_->n_dofs(); }
  const Space& space() const { return *space_; }
  const LaplaceCellKernel& kernel() const { return kernel_; }
  double face_sigma(int face) const { return sigma_[face]; }

  void apply(std::span<const double> x, std::span<double> y) const;
  void apply_serial(std::span<const double> x, std::span<double> y) const;

  std::vector<double> diagonal() const;
  std::vector<double> rhs(const ManufacturedCase& problem) const;

  OpCount count_cell_ops() const;
  /// Arithmetic of one interior face kernel evaluation.
  OpCount count_face_ops() const;

 private:
  struct FaceWorkspace;
  void face_apply(int face, const double* x, double* y, FaceWorkspace& ws, OpCount* count) const;
  void run(std::span<const double> x, std::span<double> y, bool parallel) const;

  const Space* space_;
  LaplaceCellKernel kernel_;
  std::vector<double> sigma_;
  std::array<FaceNodeMap, 6> face_maps_;
  Coloring face_coloring_;
};

}  // namespace fembench
