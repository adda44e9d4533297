#include "doctest.h"
#include "fembench/bench.hpp"
#include "fembench/hdg.hpp"
#include "fembench/static_condensation.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

using namespace fembench;

TEST_CASE("equivalent throughput") {
  CHECK(equivalent_throughput(1000, 3, 3, 0.01) == doctest::Approx(2.7e6).epsilon(1e-14));
  CHECK(equivalent_throughput(262144, 3, 3, 2.0730e-2) == doctest::Approx(3.414e8).epsilon(1e-3));
  CHECK(equivalent_throughput(262144, 3, 3, 2.3427e-1) == doctest::Approx(3.02e7).epsilon(1e-3));
  CHECK(equivalent_throughput(64, 4, 2, 2.0) == 64.0 * 16.0 / 2.0);
  CHECK_THROWS_AS(equivalent_throughput(10, 2, 3, 0.0), std::invalid_argument);
}

TEST_CASE("machine balance and cap") {
  const MachineBalance m = parse_machine("bw=130,peak=940");
  CHECK(m.bandwidth == 130.0);
  CHECK(m.peak == 940.0);
  CHECK(roofline_cap(1.0 / 6.0, m) == doctest::Approx(21.7).epsilon(2e-3));
  CHECK(roofline_cap(100.0, m) == 940.0);
  CHECK(parse_machine("peak=1,bw=2").bandwidth == 2.0);
  CHECK_THROWS_AS(parse_machine("bw=130"), std::invalid_argument);
  CHECK_THROWS_AS(parse_machine("bw=x,peak=1"), std::invalid_argument);
  CHECK_THROWS_AS(parse_machine("bw=1,peak=1,foo=2"), std::invalid_argument);
  CHECK_THROWS_AS(parse_machine("bw=-1,peak=1"), std::invalid_argument);
}

TEST_CASE("timing") {
  volatile double sink = 0.0;
  const auto s = time_repeats([&] { sink = sink + 1.0; }, 5);
  CHECK(std::isfinite(s.min));
  CHECK(s.min > 0.0);
  CHECK(s.min <= s.mean);
  CHECK(sink == 6.0);

  const Mesh mesh = build_cube_hierarchy(3, 2, 3, BoundaryAssignment::neumann_lower());
  const auto pb = gaussian_case(3);
  const auto r8 = run_matvec(Method::cg_mf, mesh, 2, 2, pb, true);
  const auto r16 = run_matvec(Method::cg_mf, mesh, 3, 2, pb, true);
  CHECK(r8.n_cells == 512);
  CHECK(r16.n_cells == 4096);
  CHECK(r16.n_dofs == 33 * 33 * 33);
  CHECK(r16.t_mv > r8.t_mv);
  CHECK(r16.eq_dofs_per_s == equivalent_throughput(4096, 2, 3, r16.t_mv));
}

TEST_CASE("matvec runner sizes") {
  const Mesh mesh = build_cube_hierarchy(2, 2, 1, BoundaryAssignment::neumann_lower());
  const auto pb = gaussian_case(2);
  const int k = 2;
  const Space t = enumerate_dofs(mesh, 1, SpaceKind::trace, k);
  const HDGOperator hdg(t, pb.kappa);
  CHECK(run_matvec(Method::cg_mf, mesh, 1, k, pb).n_dofs == 81);
  CHECK(run_matvec(Method::cg_cond, mesh, 1, k, pb).n_dofs == 81 - 16);
  CHECK(run_matvec(Method::dgsip_mf, mesh, 1, k, pb).n_dofs == 16 * 9);
  CHECK(run_matvec(Method::hdg_trace, mesh, 1, k, pb).n_dofs == t.n_dofs());
  CHECK(run_matvec(Method::hdg_trace_mf, mesh, 1, k, pb, true).n_dofs == t.n_dofs());
  CHECK(run_matvec(Method::hdg_mixed, mesh, 1, k, pb).n_dofs == hdg.mixed_size());
}

TEST_CASE("sparse pattern counts match assembled matrices") {
  const Mesh mesh = build_cube_hierarchy(3, 2, 1, BoundaryAssignment::neumann_lower());
  for (int k : {1, 2}) {
    const Space t = enumerate_dofs(mesh, 1, SpaceKind::trace, k);
    const HDGOperator op(t, Coefficient::uniform(1.0));
    CHECK(sparse_pattern_nnz(Method::hdg_trace, mesh, 1, k) == op.assemble().nnz());
  }
  for (int k : {2, 3}) {
    const Space s = enumerate_dofs(mesh, 1, SpaceKind::cg, k);
    const CGLaplaceOperator op(s, Coefficient::uniform(1.0));
    CHECK(sparse_pattern_nnz(Method::cg_cond, mesh, 1, k) == CondensedCG(op).matrix().nnz());
  }
  CHECK_THROWS_AS(sparse_pattern_nnz(Method::cg_mf, mesh, 1, 2), std::invalid_argument);
}

TEST_CASE("roofline model") {
  const MachineBalance m;
  const Mesh mesh = build_cube_hierarchy(3, 2, 2, BoundaryAssignment::neumann_lower());
  for (int k : {1, 2, 4, 8}) {
    const auto e = roofline_estimate(Method::hdg_trace, mesh, 2, k, m);
    CHECK(e.flop_byte >= 0.15);
    CHECK(e.flop_byte <= 0.18);
    CHECK(e.flop_byte < 1.0 / 6.0);
    CHECK(e.cap == roofline_cap(e.flop_byte, m));
  }
  for (int k = 2; k <= 6; ++k) CHECK(roofline_estimate(Method::cg_mf, mesh, 2, k, m).flop_byte >= 5.0);

  // sparse model arithmetic
  const long nnz = sparse_pattern_nnz(Method::hdg_trace, mesh, 1, 2);
  const double n = enumerate_dofs(mesh, 1, SpaceKind::trace, 2).n_dofs();
  const auto e = roofline_estimate(Method::hdg_trace, mesh, 1, 2, m);
  CHECK(e.flops == 2.0 * nnz);
  CHECK(e.bytes == 12.0 * nnz + 8.0 * (3.0 * n + 1.0));

  // matrix-free flops scale with the cell count; curved meshes add the Jacobian cache
  const auto c1 = roofline_estimate(Method::cg_mf, mesh, 1, 3, m), c2 = roofline_estimate(Method::cg_mf, mesh, 2, 3, m);
  CHECK(c2.flops == doctest::Approx(8.0 * c1.flops));
  const Mesh shell = build_shell_mesh(1);
  const auto curved = roofline_estimate(Method::cg_mf, shell, 1, 3, m);
  CHECK(curved.flop_byte < c2.flop_byte);
  CHECK(roofline_estimate(Method::dgsip_mf, mesh, 2, 3, m).flops > 0.0);
  CHECK(roofline_estimate(Method::cg_cond, mesh, 2, 3, m).flop_byte < 1.0 / 6.0);
  CHECK_THROWS_AS(roofline_estimate(Method::hdg_mixed, mesh, 1, 2, m), std::invalid_argument);
  CHECK_THROWS_AS(roofline_estimate(Method::hdg_trace_mf, mesh, 1, 2, m), std::invalid_argument);
}

TEST_CASE("CSV rows") {
  std::ostringstream os;
  CsvRow r;
  r.method = "cg-mf";
  r.degree = 2;
  r.mesh = "cartesian";
  r.level = 1;
  r.n_cells = 64;
  r.n_dofs = 729;
  r.iterations = 5;
  r.l2_error = 0.0125;
  write_csv_row(os, r);
  CHECK(os.str() == "cg-mf,3,2,cartesian,1,64,729,,,5,1.250000e-02,,,,,,\n");
  std::string header(csv_header);
  CHECK(std::count(header.begin(), header.end(), ',') == 16);
  CHECK(header.rfind("method,dim,degree,mesh,level", 0) == 0);
}
