#pragma once

#include "fembench/drivers.hpp"

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace fembench {

struct TimingStats {
  double min = 0.0;
  double mean = 0.0;
};

/// Wall times of `repeats` calls after one warm-up call.
TimingStats time_repeats(const std::function<void()>& apply, int repeats = 5);
/// Minimum of time_repeats.
double time_matvec(const std::function<void()>& apply, int repeats = 5);

/// Equivalent DoFs/s: n_cells * k^dim / t_mv.
double equivalent_throughput(long n_cells, int k, int dim, double t_mv);

struct MachineBalance {
  double bandwidth = 130.0;  // GB/s
  double peak = 940.0;       // GFLOP/s
};

/// Parses "bw=<GB/s>,peak=<GFLOP/s>"; throws std::invalid_argument.
MachineBalance parse_machine(const std::string& text);

struct RooflineEstimate {
  double flops = 0.0;
  double bytes = 0.0;
  double flop_byte = 0.0;
  double cap = 0.0;  // GFLOP/s
};

/// min(peak, flop_byte * bandwidth) in GFLOP/s.
double roofline_cap(double flop_byte, const MachineBalance& machine);

/// Analytic operation and memory-traffic model of one operator application
/// on `level` of the mesh. Sparse matrices: 2 nnz flops; 12 nnz bytes for
/// values and column indices plus 8 (2n + n + 1) for the two vectors and row
/// offsets. Matrix-free: the counted sum-factorization arithmetic; source and
/// destination vectors, 4-byte cell index data for CG, and on curved meshes
/// the inverse Jacobian and JxW per quadrature point. Throws
/// std::invalid_argument for methods without a model (hdg-trace-mf, hdg-mixed).
RooflineEstimate roofline_estimate(Method method, const Mesh& mesh, int level, int k, const MachineBalance& machine);

/// Stored entries of the condensed sparse matrix of a method, from its
/// sparsity pattern alone.
long sparse_pattern_nnz(Method method, const Mesh& mesh, int level, int k);

struct MatvecResult {
  Method method = Method::cg_mf;
  long n_cells = 0;
  long n_dofs = 0;
  double t_setup = 0.0;
  double t_mv = 0.0;
  double eq_dofs_per_s = 0.0;
};

/// Builds the operator of a method on `level`, applies it to a seeded random
/// vector, and times the application (parallel kernels unless `serial`).
MatvecResult run_matvec(Method method, const Mesh& mesh, int level, int k, const ManufacturedCase& problem,
                        bool serial = false, int repeats = 5);

/// One CSV row; unknown values are left empty.
struct CsvRow {
  std::string method;
  int dim = 3;
  int degree = 1;
  std::string mesh;
  int level = 0;
  long n_cells = 0;
  long n_dofs = 0;
  double t_setup = -1.0;
  double t_solve = -1.0;
  int iterations = -1;
  double l2_error = -1.0;
  double observed_order = -1e300;
  double t_mv = -1.0;
  double eq_dofs_per_s = -1.0;
  double flops = -1.0;
  double bytes = -1.0;
  double flop_byte = -1.0;
};

extern const char* const csv_header;
void write_csv_row(std::ostream& os, const CsvRow& row);

}  // namespace fembench
