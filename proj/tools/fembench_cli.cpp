// fembench: matvec timing, solver runs, convergence studies and the roofline
// model, written as CSV.

#include "fembench/bench.hpp"
#include "fembench/error_norms.hpp"
#include "fembench/parallel.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <stdexcept>

using namespace fembench;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Options {
  int dim = 3;
  std::string degree = "1..3";
  std::string mesh = "cartesian";
  std::string test_case;
  int levels = -1;
  int coarse = 2;
  int start_level = 1;
  std::string methods = "all";
  double tol = 1e-9;
  int max_iter = 1000;
  std::string output;
  std::string machine = "bw=130,peak=940";
  int threads = 1;
  int repeats = 5;
  bool serial = false;
  bool hdg_post = false;
  bool no_timing = false;
};

std::pair<int, int> parse_degrees(const std::string& text) {
  try {
    const auto dots = text.find("..");
    std::size_t used = 0;
    if (dots == std::string::npos) {
      const int k = std::stoi(text, &used);
      if (used != text.size()) throw std::invalid_argument(text);
      return {k, k};
    }
    const std::string a = text.substr(0, dots), b = text.substr(dots + 2);
    const int lo = std::stoi(a, &used);
    if (used != a.size()) throw std::invalid_argument(text);
    const int hi = std::stoi(b, &used);
    if (used != b.size()) throw std::invalid_argument(text);
    return {lo, hi};
  } catch (const std::exception&) {
    throw UsageError("--degree: expected an integer or a range a..b, got '" + text + "'");
  }
}

std::vector<int> degree_list(const Options& o) {
  const auto [lo, hi] = parse_degrees(o.degree);
  if (lo < 1 || hi < lo || hi > 12) throw UsageError("--degree: need 1 <= a <= b <= 12");
  std::vector<int> ks;
  for (int k = lo; k <= hi; ++k) ks.push_back(k);
  return ks;
}

std::vector<Method> method_list(const Options& o, bool solving, bool modelled) {
  std::vector<Method> ms;
  if (o.methods == "all") {
    for (Method m : all_methods()) {
      if (solving && !has_solver(m)) continue;
      if (modelled && (m == Method::hdg_trace_mf || m == Method::hdg_mixed)) continue;
      ms.push_back(m);
    }
    return ms;
  }
  std::stringstream ss(o.methods);
  std::string tag;
  while (std::getline(ss, tag, ',')) {
    try {
      ms.push_back(parse_method(tag));
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
    if (solving && !has_solver(ms.back()))
      throw UsageError(std::string(method_tag(ms.back())) + " is an operator application only (use matvec)");
    if (modelled && (ms.back() == Method::hdg_trace_mf || ms.back() == Method::hdg_mixed))
      throw UsageError(std::string("no roofline model for ") + method_tag(ms.back()));
  }
  if (ms.empty()) throw UsageError("--methods: empty list");
  return ms;
}

struct Setup {
  MeshSpec spec;
  ShellCoefficient variant = ShellCoefficient::product;
};

Setup resolve_setup(const Options& o, int finest) {
  Setup s;
  s.spec.dim = o.dim;
  s.spec.coarse = o.coarse;
  s.spec.level = finest;
  if (o.dim != 2 && o.dim != 3) throw UsageError("--dim must be 2 or 3");
  if (o.coarse < 1) throw UsageError("--coarse must be positive");
  if (o.mesh == "cartesian") {
    s.spec.kind = MeshKind::cartesian;
  } else if (o.mesh == "shell") {
    s.spec.kind = MeshKind::shell;
  } else {
    throw UsageError("--mesh must be cartesian or shell");
  }
  if (!o.test_case.empty()) {
    if (o.test_case == "gaussian-cube") {
      s.spec.kind = MeshKind::cartesian;
    } else if (o.test_case == "shell-variable" || o.test_case == "shell-squared") {
      s.spec.kind = MeshKind::shell;
      if (o.test_case == "shell-squared") s.variant = ShellCoefficient::squared_product;
    } else {
      throw UsageError("--case must be gaussian-cube, shell-variable or shell-squared");
    }
  }
  if (s.spec.kind == MeshKind::shell && o.dim != 3) throw UsageError("the shell mesh needs --dim 3");
  if (finest < 0 || finest > 8) throw UsageError("mesh level out of range");
  return s;
}

std::ostream& open_output(const Options& o, std::ofstream& file) {
  if (o.output.empty()) return std::cout;
  file.open(o.output);
  if (!file) throw UsageError("cannot open --output file '" + o.output + "'");
  return file;
}

CsvRow base_row(Method m, const Mesh& mesh, int level, int k) {
  CsvRow r;
  r.method = method_tag(m);
  r.dim = mesh.dim();
  r.degree = k;
  r.mesh = mesh_tag(mesh.kind());
  r.level = level;
  r.n_cells = mesh.level(level).n_cells;
  return r;
}

bool is_hdg(Method m) { return m == Method::hdg_trace || m == Method::hdg_trace_mf || m == Method::hdg_mixed; }

int run_matvec_cmd(const Options& o) {
  const int level = o.levels < 0 ? 2 : o.levels;
  const Setup s = resolve_setup(o, level);
  const auto ks = degree_list(o);
  const auto methods = method_list(o, false, false);
  const MachineBalance machine = parse_machine(o.machine);
  const Mesh mesh = build_mesh(s.spec);
  const auto problem = default_case(s.spec, s.variant);
  std::ofstream file;
  std::ostream& out = open_output(o, file);
  out << csv_header << '\n';
  for (Method m : methods)
    for (int k : ks) {
      // post-processed HDG: run at k-1, report against k^dim equivalent dofs
      const bool post = o.hdg_post && is_hdg(m);
      if (post && k < 2) continue;
      const int run_k = post ? k - 1 : k;
      CsvRow row = base_row(m, mesh, level, k);
      const MatvecResult r = run_matvec(m, mesh, level, run_k, problem, o.serial, o.repeats);
      row.n_dofs = r.n_dofs;
      row.t_setup = r.t_setup;
      row.t_mv = r.t_mv;
      row.eq_dofs_per_s = equivalent_throughput(r.n_cells, k, mesh.dim(), r.t_mv);
      if (m != Method::hdg_trace_mf && m != Method::hdg_mixed) {
        const RooflineEstimate e = roofline_estimate(m, mesh, level, run_k, machine);
        row.flops = e.flops;
        row.bytes = e.bytes;
        row.flop_byte = e.flop_byte;
      }
      write_csv_row(out, row);
      std::fprintf(stderr, "%-13s k=%d%s n_dofs=%-9ld t_mv=%.3e s  %.3e eq. DoFs/s\n", method_tag(m), k,
                   post ? " (post, run at k-1)" : "", r.n_dofs, r.t_mv, row.eq_dofs_per_s);
    }
  return 0;
}

int report_solve(const SolveResult& r, CsvRow& row) {
  row.n_dofs = r.n_dofs;
  if (r.n_dofs > 0) {
    row.t_setup = r.t_setup;
    row.t_solve = r.t_solve;
    row.iterations = r.iterations;
  }
  if (r.converged) row.l2_error = r.l2_error;
  if (!r.failure.empty()) {
    std::fprintf(stderr, "%-13s k=%d level=%d FAILED: %s\n", method_tag(r.method), r.degree, r.level, r.failure.c_str());
    return 1;
  }
  std::fprintf(stderr, "%-13s k=%d level=%d n_dofs=%-9ld its=%-3d err(u)=%.3e", method_tag(r.method), r.degree,
               r.level, r.n_dofs, r.iterations, r.l2_error);
  if (r.l2_error_flux >= 0.0) std::fprintf(stderr, " err(q)=%.3e err(u*)=%.3e", r.l2_error_flux, r.l2_error_post);
  std::fprintf(stderr, " (relative; |u|=%.4f)\n", r.l2_norm_exact);
  return 0;
}

int run_solve_cmd(const Options& o) {
  const int level = o.levels < 0 ? 2 : o.levels;
  const Setup s = resolve_setup(o, level);
  const auto ks = degree_list(o);
  const auto methods = method_list(o, true, false);
  const Mesh mesh = build_mesh(s.spec);
  const auto problem = default_case(s.spec, s.variant);
  std::ofstream file;
  std::ostream& out = open_output(o, file);
  out << csv_header << '\n';
  int status = 0;
  for (Method m : methods)
    for (int k : ks) {
      const SolveResult r = solve_on_mesh(m, mesh, level, k, problem, {o.tol, o.max_iter});
      CsvRow row = base_row(m, mesh, level, k);
      status = std::max(status, report_solve(r, row));
      write_csv_row(out, row);
    }
  return status;
}

int run_convergence_cmd(const Options& o) {
  const int n_levels = o.levels < 0 ? 3 : o.levels;
  if (n_levels < 2) throw UsageError("convergence needs --levels >= 2");
  const int first = o.test_case.rfind("shell", 0) == 0 || o.mesh == "shell" ? 0 : o.start_level;
  const Setup s = resolve_setup(o, first + n_levels - 1);
  const auto ks = degree_list(o);
  const auto methods = method_list(o, true, false);
  const Mesh mesh = build_mesh(s.spec);
  const auto problem = default_case(s.spec, s.variant);
  std::ofstream file;
  std::ostream& out = open_output(o, file);
  out << csv_header << '\n';
  int status = 0;
  for (Method m : methods)
    for (int k : ks) {
      double prev = -1.0, prev_q = -1.0, prev_post = -1.0;
      for (int level = first; level < first + n_levels; ++level) {
        const SolveResult r = solve_on_mesh(m, mesh, level, k, problem, {o.tol, o.max_iter});
        CsvRow row = base_row(m, mesh, level, k);
        const int st = report_solve(r, row);
        status = std::max(status, st);
        if (st == 0 && prev > 0.0) {
          row.observed_order = observed_order(prev, r.l2_error);
          std::fprintf(stderr, "%13s order(u)=%.2f", "", row.observed_order);
          if (prev_q > 0.0)
            std::fprintf(stderr, " order(q)=%.2f order(u*)=%.2f", observed_order(prev_q, r.l2_error_flux),
                         observed_order(prev_post, r.l2_error_post));
          std::fprintf(stderr, "\n");
        }
        prev = st == 0 ? r.l2_error : -1.0;
        prev_q = st == 0 ? r.l2_error_flux : -1.0;
        prev_post = st == 0 ? r.l2_error_post : -1.0;
        write_csv_row(out, row);
      }
    }
  return status;
}

int run_roofline_cmd(const Options& o) {
  const int level = o.levels < 0 ? 2 : o.levels;
  const Setup s = resolve_setup(o, level);
  const auto ks = degree_list(o);
  const auto methods = method_list(o, false, true);
  const MachineBalance machine = parse_machine(o.machine);
  const Mesh mesh = build_mesh(s.spec);
  const auto problem = default_case(s.spec, s.variant);
  std::ofstream file;
  std::ostream& out = open_output(o, file);
  out << csv_header << '\n';
  std::fprintf(stderr, "machine: %.1f GB/s, %.1f GFLOP/s peak\n", machine.bandwidth, machine.peak);
  for (Method m : methods)
    for (int k : ks) {
      const RooflineEstimate e = roofline_estimate(m, mesh, level, k, machine);
      CsvRow row = base_row(m, mesh, level, k);
      row.flops = e.flops;
      row.bytes = e.bytes;
      row.flop_byte = e.flop_byte;
      std::fprintf(stderr, "%-13s k=%d flop/byte=%.3f cap=%.1f GFLOP/s", method_tag(m), k, e.flop_byte, e.cap);
      if (!o.no_timing) {
        const MatvecResult r = run_matvec(m, mesh, level, k, problem, o.serial, o.repeats);
        row.n_dofs = r.n_dofs;
        row.t_setup = r.t_setup;
        row.t_mv = r.t_mv;
        row.eq_dofs_per_s = r.eq_dofs_per_s;
        std::fprintf(stderr, " achieved=%.2f GFLOP/s", e.flops / r.t_mv * 1e-9);
      }
      std::fprintf(stderr, "\n");
      write_csv_row(out, row);
    }
  return 0;
}

void add_common(CLI::App* cmd, Options& o, bool timing) {
  cmd->add_option("--dim", o.dim, "Spatial dimension (2 or 3)");
  cmd->add_option("--degree", o.degree, "Polynomial degree k, or a range a..b");
  cmd->add_option("--mesh", o.mesh, "cartesian or shell");
  cmd->add_option("--case", o.test_case, "gaussian-cube, shell-variable or shell-squared");
  cmd->add_option("--coarse", o.coarse, "Cells per direction of cube level 0");
  cmd->add_option("--methods,--method", o.methods,
                  "Comma list of cg-mf, cg-cond, dgsip-mf, hdg-trace, hdg-trace-mf, hdg-mixed, or all");
  cmd->add_option("--output", o.output, "CSV file (default: standard output)");
  cmd->add_option("--threads", o.threads, "OpenMP threads for the kernels")->check(CLI::PositiveNumber);
  if (timing) {
    cmd->add_option("--repeats", o.repeats, "Timed repeats after one warm-up (minimum is reported)")
        ->check(CLI::PositiveNumber);
    cmd->add_flag("--serial", o.serial, "Time the serial reference kernels");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"High-order Poisson discretization benchmarks (CG, DG-SIP, HDG)"};
  app.require_subcommand(1);
  Options o;

  auto* matvec = app.add_subcommand("matvec", "Time operator applications");
  add_common(matvec, o, true);
  matvec->add_option("--levels", o.levels, "Mesh level (cube: coarse*2^level cells per direction; shell: 6*8^level)");
  matvec->add_option("--machine", o.machine, "bw=<GB/s>,peak=<GFLOP/s> for the flop and byte columns");
  matvec->add_flag("--hdg-post", o.hdg_post, "Run HDG methods at k-1 and report against k^dim equivalent dofs");

  auto* solve = app.add_subcommand("solve", "Solve the manufactured problem once per method and degree");
  add_common(solve, o, false);
  solve->add_option("--levels", o.levels, "Mesh level");
  solve->add_option("--tol", o.tol, "Relative residual tolerance");
  solve->add_option("--max-iter", o.max_iter, "Iteration limit")->check(CLI::PositiveNumber);

  auto* conv = app.add_subcommand("convergence", "Errors and observed orders under uniform refinement");
  add_common(conv, o, false);
  conv->add_option("--levels", o.levels, "Number of refinement levels (rows per method and degree)");
  conv->add_option("--start-level", o.start_level, "First cube level of the study");
  conv->add_option("--tol", o.tol, "Relative residual tolerance");
  conv->add_option("--max-iter", o.max_iter, "Iteration limit")->check(CLI::PositiveNumber);

  auto* roof = app.add_subcommand("roofline", "Analytic flop and byte model, plus measured matvec time");
  add_common(roof, o, true);
  roof->add_option("--levels", o.levels, "Mesh level");
  roof->add_option("--machine", o.machine, "bw=<GB/s>,peak=<GFLOP/s>");
  roof->add_flag("--no-timing", o.no_timing, "Model only; skip the matvec measurement");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  set_threads(o.threads);
  try {
    if (*matvec) return run_matvec_cmd(o);
    if (*solve) return run_solve_cmd(o);
    if (*conv) return run_convergence_cmd(o);
    return run_roofline_cmd(o);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n" << app.help();
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
