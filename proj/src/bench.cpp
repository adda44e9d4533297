#include "fembench/bench.hpp"

#include "fembench/hdg.hpp"
#include "fembench/matfree_ops.hpp"
#include "fembench/solvers.hpp"
#include "fembench/static_condensation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <memory>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>

namespace fembench {

TimingStats time_repeats(const std::function<void()>& apply, int repeats) {
  if (repeats < 1) throw std::invalid_argument("time_repeats: need at least one repeat");
  apply();
  TimingStats s{std::numeric_limits<double>::infinity(), 0.0};
  for (int r = 0; r < repeats; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    apply();
    const double t = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    s.min = std::min(s.min, t);
    s.mean += t;
  }
  s.mean /= repeats;
  return s;
}

double time_matvec(const std::function<void()>& apply, int repeats) { return time_repeats(apply, repeats).min; }

double equivalent_throughput(long n_cells, int k, int dim, double t_mv) {
  if (!(t_mv > 0.0)) throw std::invalid_argument("equivalent_throughput: t_mv must be positive");
  return static_cast<double>(n_cells) * std::pow(static_cast<double>(k), dim) / t_mv;
}

MachineBalance parse_machine(const std::string& text) {
  MachineBalance m;
  bool bw = false, peak = false;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("machine balance: expected key=value, got '" + item + "'");
    const std::string key = item.substr(0, eq);
    double value = 0.0;
    try {
      std::size_t used = 0;
      value = std::stod(item.substr(eq + 1), &used);
      if (used != item.size() - eq - 1) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw std::invalid_argument("machine balance: bad number in '" + item + "'");
    }
    if (!(value > 0.0)) throw std::invalid_argument("machine balance: values must be positive");
    if (key == "bw") {
      m.bandwidth = value;
      bw = true;
    } else if (key == "peak") {
      m.peak = value;
      peak = true;
    } else {
      throw std::invalid_argument("machine balance: unknown key '" + key + "'");
    }
  }
  if (!bw || !peak) throw std::invalid_argument("machine balance: need bw=<GB/s>,peak=<GFLOP/s>");
  return m;
}

double roofline_cap(double flop_byte, const MachineBalance& machine) {
  return std::min(machine.peak, flop_byte * machine.bandwidth);
}

long sparse_pattern_nnz(Method method, const Mesh& mesh, int level, int k) {
  const MeshLevel& L = mesh.level(level);
  const int d = mesh.dim();
  if (method == Method::hdg_trace || method == Method::hdg_trace_mf) {
    const long nf = d == 3 ? (k + 1) * (k + 1) : k + 1;
    long nnz = 0;
    std::vector<int> seen(L.n_faces(), -1);
    for (int f = 0; f < L.n_faces(); ++f) {
      const Face& face = L.faces[f];
      if (face.boundary == BoundaryKind::dirichlet) {
        nnz += nf;
        continue;
      }
      long coupled = 0;
      for (int s = 0; s < 2; ++s) {
        if (face.cell[s] < 0) continue;
        for (int lf = 0; lf < 2 * d; ++lf) {
          const int g = L.cell_faces[face.cell[s]][lf];
          if (seen[g] == f || L.faces[g].boundary == BoundaryKind::dirichlet) continue;
          seen[g] = f;
          ++coupled;
        }
      }
      nnz += nf * nf * coupled;
    }
    return nnz;
  }
  if (method == Method::cg_cond) {
    const Space space = enumerate_dofs(mesh, level, SpaceKind::cg, k);
    const int n = k + 1, m = d == 3 ? n * n * n : n * n, ns = space.n_skeleton();
    std::vector<int> boundary;
    for (int i = 0; i < m; ++i) {
      const int idx[3] = {i % n, (i / n) % n, d == 3 ? i / (n * n) : 1};
      bool inside = true;
      for (int a = 0; a < d; ++a) inside = inside && idx[a] > 0 && idx[a] < n - 1;
      if (!inside) boundary.push_back(i);
    }
    // dof -> cells
    std::vector<int> start(ns + 1, 0);
    for (int c = 0; c < space.n_entities(); ++c)
      for (int i : boundary) ++start[space.entity_dofs(c)[i] + 1];
    for (int i = 0; i < ns; ++i) start[i + 1] += start[i];
    std::vector<int> cells(start.back()), fill(start.begin(), start.end() - 1);
    for (int c = 0; c < space.n_entities(); ++c)
      for (int i : boundary) cells[fill[space.entity_dofs(c)[i]]++] = c;
    const auto& mask = space.constrained();
    std::vector<int> mark(ns, -1);
    long nnz = 0;
    for (int r = 0; r < ns; ++r) {
      if (mask[r]) {
        ++nnz;
        continue;
      }
      for (int p = start[r]; p < start[r + 1]; ++p)
        for (int i : boundary) {
          const int g = space.entity_dofs(cells[p])[i];
          if (mask[g] || mark[g] == r) continue;
          mark[g] = r;
          ++nnz;
        }
    }
    return nnz;
  }
  throw std::invalid_argument(std::string("sparse_pattern_nnz: ") + method_tag(method) + " is not a sparse method");
}

RooflineEstimate roofline_estimate(Method method, const Mesh& mesh, int level, int k, const MachineBalance& machine) {
  RooflineEstimate e;
  const int d = mesh.dim();
  const long n_cells = mesh.level(level).n_cells;
  switch (method) {
    case Method::hdg_trace:
    case Method::cg_cond: {
      const double nnz = static_cast<double>(sparse_pattern_nnz(method, mesh, level, k));
      double n = 0.0;
      if (method == Method::hdg_trace) {
        n = enumerate_dofs(mesh, level, SpaceKind::trace, k).n_dofs();
      } else {
        n = enumerate_dofs(mesh, level, SpaceKind::cg, k).n_skeleton();
      }
      e.flops = 2.0 * nnz;
      e.bytes = 12.0 * nnz + 8.0 * (2.0 * n + n + 1.0);
      break;
    }
    case Method::cg_mf:
    case Method::dgsip_mf: {
      const bool cg = method == Method::cg_mf;
      const Space counting = enumerate_dofs(mesh, 0, cg ? SpaceKind::cg : SpaceKind::dg, k);
      const Coefficient one = Coefficient::uniform(1.0);
      const double n = enumerate_dofs(mesh, level, cg ? SpaceKind::cg : SpaceKind::dg, k).n_dofs();
      const double nq = std::pow(k + 1.0, d);
      if (cg) {
        const CGLaplaceOperator op(counting, one);
        e.flops = static_cast<double>(op.count_cell_ops().total()) * n_cells;
        e.bytes = 16.0 * n + 4.0 * n_cells * nq;
      } else {
        const DGSIPOperator op(counting, one);
        long interior = 0;
        for (const Face& f : mesh.level(level).faces) interior += f.at_boundary() ? 0 : 1;
        e.flops = static_cast<double>(op.count_cell_ops().total()) * n_cells +
                  static_cast<double>(op.count_face_ops().total()) * interior;
        e.bytes = 16.0 * n;
      }
      if (!mesh.affine()) e.bytes += 8.0 * n_cells * nq * (d * d + 1);
      break;
    }
    default:
      throw std::invalid_argument(std::string("roofline_estimate: no model for ") + method_tag(method));
  }
  e.flop_byte = e.flops / e.bytes;
  e.cap = roofline_cap(e.flop_byte, machine);
  return e;
}

MatvecResult run_matvec(Method method, const Mesh& mesh, int level, int k, const ManufacturedCase& problem,
                        bool serial, int repeats) {
  MatvecResult r;
  r.method = method;
  r.n_cells = mesh.level(level).n_cells;
  const auto t0 = std::chrono::steady_clock::now();
  std::function<void(std::span<const double>, std::span<double>)> apply;
  int n = 0;

  // keep-alive storage for whichever operator is built
  std::unique_ptr<Space> space;
  std::unique_ptr<CGLaplaceOperator> cg;
  std::unique_ptr<CondensedCG> cond;
  std::unique_ptr<DGSIPOperator> dg;
  std::unique_ptr<HDGOperator> hdg;
  std::shared_ptr<const SparseMatrix> matrix;

  auto sparse_apply = [&](std::shared_ptr<const SparseMatrix> m) {
    matrix = std::move(m);
    n = matrix->rows();
    if (serial)
      apply = [a = matrix.get()](std::span<const double> x, std::span<double> y) { a->multiply(x, y); };
    else
      apply = [a = matrix.get()](std::span<const double> x, std::span<double> y) { a->multiply_parallel(x, y); };
  };
  switch (method) {
    case Method::cg_mf:
    case Method::cg_cond:
      space = std::make_unique<Space>(enumerate_dofs(mesh, level, SpaceKind::cg, k));
      cg = std::make_unique<CGLaplaceOperator>(*space, problem.kappa);
      if (method == Method::cg_cond) {
        cond = std::make_unique<CondensedCG>(*cg);
        sparse_apply(cond->shared_matrix());
      } else {
        n = cg->size();
        apply = [op = cg.get(), serial](std::span<const double> x, std::span<double> y) {
          serial ? op->apply_serial(x, y) : op->apply(x, y);
        };
      }
      break;
    case Method::dgsip_mf:
      space = std::make_unique<Space>(enumerate_dofs(mesh, level, SpaceKind::dg, k));
      dg = std::make_unique<DGSIPOperator>(*space, problem.kappa);
      n = dg->size();
      apply = [op = dg.get(), serial](std::span<const double> x, std::span<double> y) {
        serial ? op->apply_serial(x, y) : op->apply(x, y);
      };
      break;
    case Method::hdg_trace:
    case Method::hdg_trace_mf:
    case Method::hdg_mixed:
      space = std::make_unique<Space>(enumerate_dofs(mesh, level, SpaceKind::trace, k));
      hdg = std::make_unique<HDGOperator>(*space, problem.kappa);
      if (method == Method::hdg_trace) {
        sparse_apply(std::make_shared<SparseMatrix>(hdg->assemble()));
      } else if (method == Method::hdg_trace_mf) {
        n = hdg->size();
        apply = [op = hdg.get(), serial](std::span<const double> x, std::span<double> y) {
          serial ? op->apply_serial(x, y) : op->apply(x, y);
        };
      } else {
        n = hdg->mixed_size();
        apply = [op = hdg.get()](std::span<const double> x, std::span<double> y) { op->apply_mixed(x, y); };
      }
      break;
  }
  r.n_dofs = n;
  r.t_setup = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  std::mt19937 rng(eigen_seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  std::vector<double> x(n), y(n);
  for (auto& v : x) v = dist(rng);
  r.t_mv = time_matvec([&] { apply(x, y); }, repeats);
  r.eq_dofs_per_s = equivalent_throughput(r.n_cells, k, mesh.dim(), r.t_mv);
  return r;
}

const char* const csv_header =
    "method,dim,degree,mesh,level,n_cells,n_dofs,t_setup,t_solve,iterations,l2_error,observed_order,t_mv,"
    "eq_dofs_per_s,flops,bytes,flop_byte";

namespace {

std::string fmt(double v, bool present) {
  if (!present) return "";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6e", v);
  return buf;
}

}  // namespace

void write_csv_row(std::ostream& os, const CsvRow& r) {
  os << r.method << ',' << r.dim << ',' << r.degree << ',' << r.mesh << ',' << r.level << ',' << r.n_cells << ','
     << r.n_dofs << ',' << fmt(r.t_setup, r.t_setup >= 0.0) << ',' << fmt(r.t_solve, r.t_solve >= 0.0) << ','
     << (r.iterations >= 0 ? std::to_string(r.iterations) : "") << ',' << fmt(r.l2_error, r.l2_error >= 0.0) << ','
     << fmt(r.observed_order, r.observed_order > -1e299) << ',' << fmt(r.t_mv, r.t_mv >= 0.0) << ','
     << fmt(r.eq_dofs_per_s, r.eq_dofs_per_s >= 0.0) << ',' << fmt(r.flops, r.flops >= 0.0) << ','
     << fmt(r.bytes, r.bytes >= 0.0) << ',' << fmt(r.flop_byte, r.flop_byte >= 0.0) << '\n';
}

}  // namespace fembench
