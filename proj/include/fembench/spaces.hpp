#pragma once

#include "fembench/mesh.hpp"
#include "fembench/sparse.hpp"

#include <functional>
#include <span>
#include <vector>

namespace fembench {

enum class SpaceKind { cg, dg, trace, cg_linear };

const char* to_string(SpaceKind kind);

/// Degrees of freedom of one discretization on one mesh level. Cell-based
/// spaces (CG, DG) list (k+1)^dim dofs per cell in lexicographic node order;
/// the trace space lists (k+1)^(dim-1) dofs per face in canonical face order.
class Space {
 public:
  SpaceKind kind() const { return kind_; }
  int degree() const { return degree_; }
  int dim() const { return dim_; }
  int level() const { return level_; }
  int n_dofs() const { return n_dofs_; }
  const Mesh& mesh() const { return *mesh_; }
  int dofs_per_entity() const { return per_entity_; }
  int n_entities() const { return static_cast<int>(dofs_.size() / per_entity_); }

  /// Dofs of cell c (CG/DG) or face f (trace).
  std::span<const int> entity_dofs(int e) const {
    return {dofs_.data() + static_cast<std::size_t>(e) * per_entity_, static_cast<std::size_t>(per_entity_)};
  }

  /// Dirichlet-constrained dofs (strongly imposed; empty set for DG).
  const std::vector<char>& constrained() const { return constrained_; }
  bool is_constrained(int i) const { return constrained_[i] != 0; }
  int n_constrained() const;

  /// Physical position of each dof's node (discrete mapping).
  const std::vector<Point>& dof_points() const { return points_; }

  /// CG: dofs [0, n_skeleton) live on vertices, edges and faces; the rest are cell interiors.
  int n_skeleton() const { return n_skeleton_; }

  /// Nodal interpolation of a function.
  std::vector<double> interpolate(const std::function<double(const Point&)>& f) const;

  friend Space enumerate_dofs(const Mesh& mesh, int level, SpaceKind kind, int k);

 private:
  SpaceKind kind_ = SpaceKind::cg;
  int degree_ = 1;
  int dim_ = 3;
  int level_ = 0;
  int n_dofs_ = 0;
  int per_entity_ = 1;
  int n_skeleton_ = 0;
  const Mesh* mesh_ = nullptr;
  std::vector<int> dofs_;
  std::vector<char> constrained_;
  std::vector<Point> points_;
};

/// `mesh` must outlive the space.
Space enumerate_dofs(const Mesh& mesh, int level, SpaceKind kind, int k);

/// Nodal interpolation between cell-based spaces (CG, CG-linear, DG): either
/// the same level with source degree <= target degree, or from level L to
/// level L+1 (geometric embedding). Rows are target dofs, columns source dofs.
SparseMatrix build_interpolation(const Space& from, const Space& to);

/// Coarse-to-fine embedding between adjacent levels of the same kind and degree.
SparseMatrix build_prolongation(const Space& coarse, const Space& fine);

/// Evaluates linear hat functions at the trace nodes of the same level.
SparseMatrix build_trace_to_linear(const Space& trace, const Space& linear);

/// Zeroes rows of constrained target dofs and columns of constrained source dofs.
SparseMatrix constrain_transfer(const SparseMatrix& p, const Space& from, const Space& to);

}  // namespace fembench
