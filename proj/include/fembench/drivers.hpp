#pragma once

#include "fembench/mesh.hpp"
#include "fembench/problems.hpp"

#include <string>
#include <vector>

namespace fembench {

enum class Method { cg_mf, cg_cond, dgsip_mf, hdg_trace, hdg_trace_mf, hdg_mixed };

const char* method_tag(Method m);
/// Throws std::invalid_argument for an unknown tag.
Method parse_method(const std::string& tag);
std::vector<Method> all_methods();
/// Methods with a solver (hdg-mixed is matvec only).
bool has_solver(Method m);

/// Cube (-1,1)^d with coarse^d cells refined `level` times, or the shell
/// with 6 * 8^level cells. Mesh levels 0..level are generated.
struct MeshSpec {
  int dim = 3;
  MeshKind kind = MeshKind::cartesian;
  int coarse = 2;
  int level = 0;
};

Mesh build_mesh(const MeshSpec& spec);
const char* mesh_tag(MeshKind kind);

/// Gaussian case on the cube, oscillating-coefficient case on the shell.
ManufacturedCase default_case(const MeshSpec& spec, ShellCoefficient variant = ShellCoefficient::product);

struct SolveOptions {
  double tol = 1e-9;
  int max_iter = 1000;
};

struct SolveResult {
  Method method = Method::cg_mf;
  int dim = 3;
  int degree = 1;
  std::string mesh;
  int level = 0;
  long n_cells = 0;
  long n_dofs = 0;
  double t_setup = 0.0;
  double t_solve = 0.0;
  int iterations = 0;
  bool converged = false;
  std::string failure;   // empty on success
  double l2_error = -1.0;       // u_h (negative: not computed)
  double l2_error_flux = -1.0;  // HDG q_h
  double l2_error_post = -1.0;  // HDG u*
  double l2_norm_exact = -1.0;  // ||u||, so that absolute error = relative * norm
};

/// Solves the problem on `level` of an existing hierarchy; errors are
/// reported in the result rather than thrown.
SolveResult solve_on_mesh(Method method, const Mesh& mesh, int level, int k, const ManufacturedCase& problem,
                          const SolveOptions& options = {});

}  // namespace fembench
