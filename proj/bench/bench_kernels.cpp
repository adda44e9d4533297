// Serial reference loops against the OpenMP kernels for every operator.

#include "fembench/bench.hpp"
#include "fembench/parallel.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <omp.h>

using namespace fembench;

int main(int argc, char** argv) {
  CLI::App app{"Serial vs OpenMP operator application timings"};
  int level = 3, k = 3, threads = omp_get_max_threads(), repeats = 5;
  app.add_option("--levels", level, "Cube level (2*2^level cells per direction)");
  app.add_option("--degree", k, "Polynomial degree");
  app.add_option("--threads", threads, "OpenMP threads for the parallel run")->check(CLI::PositiveNumber);
  app.add_option("--repeats", repeats, "Timed repeats")->check(CLI::PositiveNumber);
  CLI11_PARSE(app, argc, argv);

  const MeshSpec spec{3, MeshKind::cartesian, 2, level};
  const Mesh mesh = build_mesh(spec);
  const auto problem = default_case(spec);
  set_threads(threads);
  std::printf("3D cube, %d cells, k=%d, %d threads\n", mesh.level(level).n_cells, k, threads);
  std::printf("%-13s %10s %12s %12s %8s\n", "method", "n_dofs", "serial [s]", "openmp [s]", "speedup");
  for (Method m : all_methods()) {
    const MatvecResult s = run_matvec(m, mesh, level, k, problem, true, repeats);
    const MatvecResult p = run_matvec(m, mesh, level, k, problem, false, repeats);
    std::printf("%-13s %10ld %12.4e %12.4e %8.2f\n", method_tag(m), s.n_dofs, s.t_mv, p.t_mv, s.t_mv / p.t_mv);
  }
  return 0;
}
