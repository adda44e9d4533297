#pragma once

#include <array>
#include <vector>

namespace fembench {

using Point = std::array<double, 3>;

enum class BoundaryKind : signed char { interior = -1, dirichlet = 0, neumann = 1 };

enum class MeshKind { cartesian, shell };

/// Boundary kind per axis and side (x_e = lower / upper bound) of a box.
struct BoundaryAssignment {
  std::array<std::array<BoundaryKind, 2>, 3> kind{};

  static BoundaryAssignment all(BoundaryKind k);
  /// Neumann at x_e = lower, Dirichlet at x_e = upper for every e.
  static BoundaryAssignment neumann_lower();
};

/// A face between cell[0] (minus side, normal points away from it) and
/// cell[1] (-1 on the boundary). `orientation` encodes how each side's
/// face-local node grid maps to the face's canonical grid.
struct Face {
  std::array<int, 2> cell{-1, -1};
  std::array<int, 2> local_face{-1, -1};
  std::array<int, 2> orientation{0, 0};
  BoundaryKind boundary = BoundaryKind::interior;

  bool at_boundary() const { return cell[1] < 0; }
};

struct MeshLevel {
  int n_cells = 0;
  std::array<int, 3> subdivisions{1, 1, 1};  // per patch and axis
  std::vector<Point> vertices;
  std::vector<std::array<int, 8>> cell_vertices;  // 2^dim corners, lexicographic
  std::vector<std::array<int, 6>> cell_faces;     // global face per local face 2*axis+side
  std::vector<Face> faces;
  std::vector<int> parent;                        // empty on level 0
  std::vector<std::array<int, 8>> children;       // filled on all but the finest level

  int n_faces() const { return static_cast<int>(faces.size()); }
  int n_vertices() const { return static_cast<int>(vertices.size()); }
};

/// Hierarchy of uniformly refined hex/quad meshes generated from a box or
/// from the six-patch spherical shell.
class Mesh {
 public:
  int dim() const { return dim_; }
  MeshKind kind() const { return kind_; }
  int mapping_degree() const { return mapping_degree_; }
  int n_levels() const { return static_cast<int>(levels_.size()); }
  const MeshLevel& level(int l) const { return levels_.at(l); }
  const MeshLevel& finest() const { return levels_.back(); }
  int n_cells_per_patch(int level) const;
  bool affine() const { return kind_ == MeshKind::cartesian; }

  /// Exact geometry: maps reference coordinates xi in [-1,1]^dim of a cell to physical space.
  Point map_exact(int level, int cell, const Point& xi) const;

  /// Support points of the degree-l mapping: the exact map sampled on the
  /// (l+1)^dim Gauss-Lobatto grid of the cell, x-fastest.
  std::vector<Point> support_points(int level, int cell) const;

  /// Support nodes on [-1,1] of the mapping polynomial.
  const std::vector<double>& mapping_nodes() const { return mapping_nodes_; }

  friend Mesh build_cartesian_mesh(int dim, std::array<int, 3> subdivisions, Point lower, Point upper,
                                   const BoundaryAssignment& boundary);
  friend Mesh build_shell_mesh(int n_refinements);
  friend void refine_uniform(Mesh& mesh);

 private:
  void add_level(int refinement);
  std::array<int, 3> cell_index(int level, int cell, int& patch) const;

  int dim_ = 3;
  MeshKind kind_ = MeshKind::cartesian;
  int mapping_degree_ = 1;
  std::array<int, 3> base_subdivisions_{1, 1, 1};
  Point lower_{};
  Point upper_{};
  BoundaryAssignment boundary_;
  int n_patches_ = 1;
  std::vector<double> mapping_nodes_;
  std::vector<MeshLevel> levels_;
};

Mesh build_cartesian_mesh(int dim, std::array<int, 3> subdivisions, Point lower, Point upper,
                          const BoundaryAssignment& boundary);

/// Cube (-1,1)^dim with n^dim cells and the given number of extra refinement levels below.
Mesh build_cube_hierarchy(int dim, int coarse_subdivisions, int n_refinements, const BoundaryAssignment& boundary);

/// Shell 0.5 <= |x| <= 1 from six cube-sphere patches; levels 0..n_refinements.
Mesh build_shell_mesh(int n_refinements);

void refine_uniform(Mesh& mesh);

constexpr double shell_inner_radius = 0.5;
constexpr double shell_outer_radius = 1.0;

/// Maps a face-local node index (a, b) on an n-point grid to the canonical
/// face index for the given orientation code. In 2D b is ignored.
int canonical_face_index(int dim, int orientation, int n, int a, int b);

/// Orientation code from the face corner vertex ids listed in face-local lexicographic order.
int face_orientation(int dim, const std::array<int, 4>& corner_ids);

/// Cell-local corner ids (bits = axes) of local face f, in face-local lexicographic order.
std::array<int, 4> face_corners(int dim, int local_face);

/// Axes spanning local face f in ascending order (face-local a, b directions).
std::array<int, 2> face_tangent_axes(int dim, int local_face);

}  // namespace fembench
