#pragma once

#include "fembench/matfree_ops.hpp"

#include <Eigen/Dense>

#include <memory>
#include <span>
#include <vector>

namespace fembench {

/// CG stiffness matrix with the cell-interior dofs eliminated element by
/// element. The reduced system lives on the skeleton dofs [0, n_skeleton);
/// Dirichlet rows and columns are identity as in the full operator.
class CondensedCG {
 public:
  explicit CondensedCG(const CGLaplaceOperator& op);

  int size() const { return n_skeleton_; }
  int full_size() const { return op_->size(); }
  const SparseMatrix& matrix() const { return *matrix_; }
  std::shared_ptr<const SparseMatrix> shared_matrix() const { return matrix_; }

  /// Reduced right-hand side from the full one (CGLaplaceOperator::rhs).
  std::vector<double> condense_rhs(std::span<const double> full_rhs) const;
  /// Full solution from skeleton values and the full right-hand side.
  std::vector<double> recover(std::span<const double> skeleton, std::span<const double> full_rhs) const;

  int n_classes() const { return static_cast<int>(classes_.size()); }
  std::size_t memory_bytes() const;

 private:
  struct CellClass {
    Eigen::MatrixXd kii_inv;  // interior block inverse
    Eigen::MatrixXd kib;      // interior x boundary, all boundary columns
  };

  const CGLaplaceOperator* op_;
  int n_skeleton_ = 0;
  std::vector<int> interior_;  // local indices of interior nodes
  std::vector<int> boundary_;  // remaining local indices
  std::vector<int> cell_class_;
  std::vector<CellClass> classes_;
  std::shared_ptr<SparseMatrix> matrix_;
};

}  // namespace fembench
