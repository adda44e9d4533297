#include "fembench/drivers.hpp"

#include "fembench/error_norms.hpp"
#include "fembench/hdg.hpp"
#include "fembench/multigrid.hpp"
#include "fembench/static_condensation.hpp"

#include <chrono>
#include <stdexcept>

namespace fembench {

namespace {

constexpr Method kMethods[] = {Method::cg_mf,     Method::cg_cond,      Method::dgsip_mf,
                               Method::hdg_trace, Method::hdg_trace_mf, Method::hdg_mixed};

double seconds_since(std::chrono::steady_clock::time_point t) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t).count();
}

Point exact_flux(const ManufacturedCase& p, const Point& x) {
  const Point g = p.grad_u(x);
  const double k = p.kappa(x);
  return {-k * g[0], -k * g[1], -k * g[2]};
}

void run_primal(Method method, const Mesh& mesh, int level, int k, const ManufacturedCase& problem,
                const SolveOptions& options, SolveResult& r) {
  const auto t0 = std::chrono::steady_clock::now();
  PrimalMultigrid pm(mesh, level, method == Method::cg_mf ? PrimalMethod::cg : PrimalMethod::dgsip, k,
                     problem.kappa);
  const auto b = method == Method::cg_mf ? pm.cg_operator().rhs(problem) : pm.dg_operator().rhs(problem);
  r.n_dofs = pm.size();
  r.t_setup = seconds_since(t0);
  std::vector<double> x(b.size(), 0.0);
  const SolverReport rep = pcg(pm.fine_operator(), pm.preconditioner(), b, x, options.tol, options.max_iter);
  r.t_solve = rep.seconds;
  r.iterations = rep.iterations;
  r.converged = rep.converged;
  const L2Error e = l2_error(pm.space(), x, problem.u);
  r.l2_error = e.relative();
  r.l2_norm_exact = e.norm;
}

void run_condensed(const Mesh& mesh, int level, int k, const ManufacturedCase& problem, const SolveOptions& options,
                   SolveResult& r) {
  const auto t0 = std::chrono::steady_clock::now();
  const Space space = enumerate_dofs(mesh, level, SpaceKind::cg, k);
  const CGLaplaceOperator op(space, problem.kappa);
  const auto full_rhs = op.rhs(problem);
  const CondensedCG cond(op);
  const auto b = cond.condense_rhs(full_rhs);
  const auto pmg = build_skeleton_pmg(cond.shared_matrix(), space);
  r.n_dofs = cond.size();
  r.t_setup = seconds_since(t0);
  std::vector<double> x(b.size(), 0.0);
  const SparseMatrix& a = cond.matrix();
  const SolverReport rep =
      pcg([&](std::span<const double> in, std::span<double> out) { a.multiply_parallel(in, out); },
          pmg->preconditioner(), b, x, options.tol, options.max_iter);
  r.t_solve = rep.seconds;
  r.iterations = rep.iterations;
  r.converged = rep.converged;
  const L2Error e = l2_error(space, cond.recover(x, full_rhs), problem.u);
  r.l2_error = e.relative();
  r.l2_norm_exact = e.norm;
}

void run_hdg(bool matrix_free, const Mesh& mesh, int level, int k, const ManufacturedCase& problem,
             const SolveOptions& options, SolveResult& r) {
  const auto t0 = std::chrono::steady_clock::now();
  const Space trace = enumerate_dofs(mesh, level, SpaceKind::trace, k);
  const HDGOperator op(trace, problem.kappa);
  auto k_mat = std::make_shared<SparseMatrix>(op.assemble());
  const auto pmg = build_trace_pmg(k_mat, trace);
  const auto b = op.rhs(problem);
  r.n_dofs = op.size();
  r.t_setup = seconds_since(t0);
  std::vector<double> x(b.size(), 0.0);
  LinearOperator a;
  if (matrix_free)
    a = [&](std::span<const double> in, std::span<double> out) { op.apply(in, out); };
  else
    a = [&](std::span<const double> in, std::span<double> out) { k_mat->multiply_parallel(in, out); };
  const SolverReport rep = pcg(a, pmg->preconditioner(), b, x, options.tol, options.max_iter);
  r.t_solve = rep.seconds;
  r.iterations = rep.iterations;
  r.converged = rep.converged;

  const HDGSolution sol = op.recover(x, problem);
  const Space dg = enumerate_dofs(mesh, level, SpaceKind::dg, k);
  const Space post = enumerate_dofs(mesh, level, SpaceKind::dg, k + 1);
  const L2Error e = l2_error(dg, sol.u, problem.u);
  r.l2_error = e.relative();
  r.l2_norm_exact = e.norm;
  r.l2_error_flux = relative_l2_error(dg, sol.q, [&](const Point& p) { return exact_flux(problem, p); });
  r.l2_error_post = relative_l2_error(post, op.postprocess(sol, post), problem.u);
}

}  // namespace

const char* method_tag(Method m) {
  switch (m) {
    case Method::cg_mf: return "cg-mf";
    case Method::cg_cond: return "cg-cond";
    case Method::dgsip_mf: return "dgsip-mf";
    case Method::hdg_trace: return "hdg-trace";
    case Method::hdg_trace_mf: return "hdg-trace-mf";
    case Method::hdg_mixed: return "hdg-mixed";
  }
  return "?";
}

Method parse_method(const std::string& tag) {
  for (Method m : kMethods)
    if (tag == method_tag(m)) return m;
  throw std::invalid_argument("unknown method '" + tag + "'");
}

std::vector<Method> all_methods() { return {std::begin(kMethods), std::end(kMethods)}; }

bool has_solver(Method m) { return m != Method::hdg_mixed; }

Mesh build_mesh(const MeshSpec& spec) {
  if (spec.kind == MeshKind::shell) {
    if (spec.dim != 3) throw std::invalid_argument("the shell mesh is three-dimensional");
    return build_shell_mesh(spec.level);
  }
  return build_cube_hierarchy(spec.dim, spec.coarse, spec.level, BoundaryAssignment::neumann_lower());
}

const char* mesh_tag(MeshKind kind) { return kind == MeshKind::shell ? "shell" : "cartesian"; }

ManufacturedCase default_case(const MeshSpec& spec, ShellCoefficient variant) {
  return spec.kind == MeshKind::shell ? shell_variable_case(variant) : gaussian_case(spec.dim);
}

SolveResult solve_on_mesh(Method method, const Mesh& mesh, int level, int k, const ManufacturedCase& problem,
                          const SolveOptions& options) {
  SolveResult r;
  r.method = method;
  r.dim = mesh.dim();
  r.degree = k;
  r.mesh = mesh_tag(mesh.kind());
  r.level = level;
  r.n_cells = mesh.level(level).n_cells;
  try {
    if (!has_solver(method)) throw std::invalid_argument("hdg-mixed has no solver (matvec only)");
    if (!problem.kappa.is_constant) validate_coefficient(problem.kappa, GeometryCache(mesh, level, k + 1, false));
    switch (method) {
      case Method::cg_mf:
      case Method::dgsip_mf: run_primal(method, mesh, level, k, problem, options, r); break;
      case Method::cg_cond: run_condensed(mesh, level, k, problem, options, r); break;
      case Method::hdg_trace: run_hdg(false, mesh, level, k, problem, options, r); break;
      case Method::hdg_trace_mf: run_hdg(true, mesh, level, k, problem, options, r); break;
      case Method::hdg_mixed: break;
    }
    if (!r.converged) r.failure = "no convergence in " + std::to_string(options.max_iter) + " iterations";
  } catch (const std::exception& e) {
    r.converged = false;
    r.failure = e.what();
  }
  return r;
}

}  // namespace fembench
