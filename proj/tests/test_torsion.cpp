#include <doctest.h>

#include <cmath>
#include <sstream>

#include "heis/torsion.hpp"
#include "test_support.hpp"

using namespace heis;

namespace {

const ReducedDomain kBall = ReducedDomain::ball(1.0);

double max_error(const GridSolution& s) {
  double e = 0.0;
  for (std::size_t p = 0; p < s.grid.size(); ++p) {
    const auto& nd = s.grid.nodes()[p];
    e = std::max(e, std::abs(s.W[p] - analytic_W(s.alpha, s.grid.domain().R, nd.sigma, nd.t)));
  }
  return e;
}

}  // namespace

TEST_CASE("grid: node count matches the half-disc area") {
  const double h = 1.0 / 32;
  const Grid g = build_grid(kBall, h);
  const double estimate = (M_PI / 2.0) / (h * h);
  CHECK(g.size() >= 0.95 * estimate);
  CHECK(g.size() <= 1.05 * estimate);

  const ReducedDomain pert = ReducedDomain::perturbed(1.0, 0.2);
  const Grid gp = build_grid(pert, h);
  const double ep = estimate / pert.k();
  CHECK(gp.size() >= 0.95 * ep);
  CHECK(gp.size() <= 1.05 * ep);
}

TEST_CASE("grid: arms, boundary flags and axis nodes") {
  const double h = 1.0 / 32;
  const Grid g = build_grid(kBall, h);
  for (const GridNode& nd : g.nodes()) {
    CHECK(kBall.contains(nd.sigma, nd.t));
    for (double a : {nd.arm_east, nd.arm_north, nd.arm_south}) {
      CHECK(a > 0.0);
      CHECK(a <= h);
    }
    if (nd.arm_east < h) CHECK(nd.east_boundary);
    if (nd.east_boundary) CHECK(kBall.level(nd.sigma + nd.arm_east, nd.t) == doctest::Approx(1.0).epsilon(1e-12));
    if (nd.north_boundary) CHECK(kBall.level(nd.sigma, nd.t + nd.arm_north) == doctest::Approx(1.0).epsilon(1e-12));
    if (nd.south_boundary) CHECK(kBall.level(nd.sigma, nd.t - nd.arm_south) == doctest::Approx(1.0).epsilon(1e-12));
  }
  for (int j = -40; j <= 40; ++j) CHECK((g.find(0, j) >= 0) == (std::abs(j * h) < 1.0));
  CHECK(g.find(-1, 0) < 0);
}

TEST_CASE("grid: spacing must not exceed R^2/8") {
  CHECK_THROWS_AS(build_grid(kBall, 0.2), InvalidInput);
  CHECK_THROWS_AS(build_grid(kBall, 0.0), InvalidInput);
  CHECK_NOTHROW(build_grid(ReducedDomain::ball(2.0), 0.5));
  CHECK_THROWS_AS(build_grid(ReducedDomain::ball(0.5), 1.0 / 16), InvalidInput);
}

TEST_CASE("analytic W solves the divided reduced equation") {
  testing::Rng rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = rng.integer(1, 4);
    const double alpha = rng.uniform(2.0, 4.0);
    const double s = rng.uniform(0.2, 0.8), t = rng.uniform(-0.8, 0.8);
    const double e = 1e-3;
    const auto W = [&](double a, double b) { return analytic_W(alpha, 1.0, a, b); };
    const double Wss = (-W(s + 2 * e, t) + 16 * W(s + e, t) - 30 * W(s, t) + 16 * W(s - e, t) - W(s - 2 * e, t)) / (12 * e * e);
    const double Wtt = (-W(s, t + 2 * e) + 16 * W(s, t + e) - 30 * W(s, t) + 16 * W(s, t - e) - W(s, t - 2 * e)) / (12 * e * e);
    const double Ws = (-W(s + 2 * e, t) + 8 * W(s + e, t) - 8 * W(s - e, t) + W(s - 2 * e, t)) / (12 * e);
    const double rhs = (2.0 * n + alpha) / 4.0 * std::pow(s * s + t * t, (alpha - 4.0) / 4.0);
    CHECK(Wss + Wtt + n / s * Ws == doctest::Approx(rhs).epsilon(1e-7));
  }
}

TEST_CASE("solve: alpha = 4 is reproduced to roundoff") {
  // W_4 is quadratic, for which every stencil in the scheme is exact.
  for (int n : {1, 2, 3}) {
    const GridSolution s = assemble_and_solve(build_grid(kBall, 1.0 / 32), 4.0, n);
    CHECK(max_error(s) <= 1e-12);
    CHECK(s.residual <= 1e-10);
  }
  const GridSolution sp = assemble_and_solve(build_grid(ReducedDomain::ball(1.5), 1.0 / 16), 4.0, 1);
  CHECK(max_error(sp) <= 1e-12);
}

TEST_CASE("solve: alpha = 2 ball, sign, origin value, symmetry") {
  const GridSolution s = assemble_and_solve(build_grid(kBall, 1.0 / 64), 2.0, 1);
  CHECK(s.residual <= 1e-10);
  for (Eigen::Index p = 0; p < s.W.size(); ++p) CHECK(s.W[p] < 0.0);
  CHECK(s.at(0, 0) == doctest::Approx(-0.5).epsilon(1e-3));
  CHECK(max_error(s) <= 2e-3);
  for (const GridNode& nd : s.grid.nodes()) {
    REQUIRE(s.grid.find(nd.i, -nd.j) >= 0);
    CHECK(std::abs(s.at(nd.i, nd.j) - s.at(nd.i, -nd.j)) <= 1e-12);
  }
  for (int n : {2, 3}) {
    const GridSolution sn = assemble_and_solve(build_grid(kBall, 1.0 / 64), 2.0, n);
    CHECK(max_error(sn) <= 2e-3);
  }
  const GridSolution s3 = assemble_and_solve(build_grid(kBall, 1.0 / 64), 3.0, 1);
  CHECK(max_error(s3) <= 1e-3);
}

TEST_CASE("solve: perturbed domain symmetric in t, eps = 0 identical to ball") {
  const GridSolution s = assemble_and_solve(build_grid(ReducedDomain::perturbed(1.0, 0.2), 1.0 / 64), 2.0, 1);
  for (const GridNode& nd : s.grid.nodes()) {
    CHECK(std::abs(s.at(nd.i, nd.j) - s.at(nd.i, -nd.j)) <= 1e-12);
    CHECK(s.at(nd.i, nd.j) < 0.0);
  }
  const GridSolution a = assemble_and_solve(build_grid(kBall, 1.0 / 32), 2.0, 1);
  const GridSolution b = assemble_and_solve(build_grid(ReducedDomain::perturbed(1.0, 0.0), 1.0 / 32), 2.0, 1);
  REQUIRE(a.W.size() == b.W.size());
  CHECK((a.W.array() == b.W.array()).all());
  const GridSolution c = assemble_and_solve(build_grid(kBall, 1.0 / 32), 2.0, 1);
  CHECK((a.W.array() == c.W.array()).all());
}

TEST_CASE("solve: contract errors") {
  const Grid g = build_grid(kBall, 1.0 / 16);
  CHECK_THROWS_AS(assemble_and_solve(g, 1.5, 1), InvalidInput);
  CHECK_THROWS_AS(assemble_and_solve(g, 4.5, 1), InvalidInput);
  CHECK_THROWS_AS(assemble_and_solve(g, 2.0, 0), InvalidInput);
}

TEST_CASE("trace: quadratic data is differentiated exactly") {
  // W = level - R^4 vanishes on the boundary and is quadratic along grid
  // lines, so the one-sided formula is exact: |grad W| = 2 |(s, (1+eps) t)|.
  for (double eps : {0.0, 0.15}) {
    const ReducedDomain d = ReducedDomain::perturbed(1.0, eps);
    const Grid g = build_grid(d, 1.0 / 32);
    const GridSolution s = inject(g, 3.0, 1, [&](double a, double b) { return d.level(a, b) - 1.0; });
    const NeumannTrace tr = neumann_trace(s);
    REQUIRE(tr.samples.size() > 50);
    for (const auto& smp : tr.samples) {
      const double grad = 2.0 * std::hypot(smp.sigma, (1.0 + eps) * smp.t);
      const double expect = 2.0 * grad * std::pow(smp.sigma * smp.sigma + smp.t * smp.t, 1.0 / 8.0);
      CHECK(smp.q == doctest::Approx(expect).epsilon(1e-9));
    }
  }
}

TEST_CASE("trace: sample invariants and injected analytic solution") {
  const Grid g = build_grid(kBall, 1.0 / 128);
  const GridSolution inj = inject(g, 2.0, 1, [](double s, double t) { return analytic_W(2.0, 1.0, s, t); });
  const NeumannTrace tr = neumann_trace(inj);
  CHECK(tr.cv <= 1e-3);
  CHECK(tr.mean == doctest::Approx(1.0).epsilon(1e-4));
  for (std::size_t k = 0; k < tr.samples.size(); ++k) {
    const auto& smp = tr.samples[k];
    CHECK(smp.q >= 0.0);
    CHECK(smp.arc >= 0.02);
    CHECK(smp.arc <= 0.98);
    CHECK(kBall.level(smp.sigma, smp.t) == doctest::Approx(1.0).epsilon(1e-12));
    if (k > 0) CHECK(tr.samples[k - 1].arc <= smp.arc);
  }
  // R = 2, alpha = 3: q = R^{alpha/2}.
  const ReducedDomain big = ReducedDomain::ball(2.0);
  const GridSolution inj2 = inject(build_grid(big, 1.0 / 32), 3.0, 2,
                                   [](double s, double t) { return analytic_W(3.0, 2.0, s, t); });
  CHECK(neumann_trace(inj2).mean == doctest::Approx(std::pow(2.0, 1.5)).epsilon(1e-3));
}

TEST_CASE("trace: solved ball gives the Neumann constant; CV grows with eps") {
  const double h = 1.0 / 128;
  const NeumannTrace ball = neumann_trace(assemble_and_solve(build_grid(kBall, h), 2.0, 1));
  CHECK(ball.mean == doctest::Approx(1.0).epsilon(1e-2));
  CHECK(ball.cv <= 1e-3);
  double previous = ball.cv;
  for (double eps : {0.05, 0.1, 0.2}) {
    const NeumannTrace tr = neumann_trace(assemble_and_solve(build_grid(ReducedDomain::perturbed(1.0, eps), h), 2.0, 1));
    CHECK(tr.cv > previous);
    previous = tr.cv;
  }
  CHECK(previous >= 5.0 * ball.cv);
}

TEST_CASE("pfunction on the grid") {
  std::vector<double> dev;
  for (double h : {1.0 / 32, 1.0 / 64, 1.0 / 128}) {
    const GridSolution s = assemble_and_solve(build_grid(kBall, h), 2.0, 1);
    const NeumannTrace tr = neumann_trace(s);
    const PFunctionGrid pf = pfunction_on_grid(s, tr);
    CHECK(pf.reference == doctest::Approx(1.0).epsilon(1e-2));
    CHECK(pf.v.size() == pf.node.size());
    for (int p : pf.node) CHECK(s.grid.nodes()[p].sigma >= 2.0 * h - 1e-15);
    CHECK(pf.max_boundary_deviation <= 5.0 * max_error(s));
    dev.push_back(pf.max_deviation);
  }
  // At least first order.
  CHECK(dev[0] / dev[1] >= 1.8);
  CHECK(dev[1] / dev[2] >= 1.8);

  for (double h : {1.0 / 64, 1.0 / 128}) {
    const GridSolution s = assemble_and_solve(build_grid(ReducedDomain::perturbed(1.0, 0.2), h), 2.0, 1);
    CHECK(pfunction_on_grid(s, neumann_trace(s)).max_deviation >= 0.05);
  }
}

TEST_CASE("convergence study") {
  const ConvergenceStudy s4 = convergence_study(kBall, 4.0, 1, {1.0 / 32, 1.0 / 64, 1.0 / 128});
  REQUIRE(s4.rows.size() == 3);
  CHECK(std::isnan(s4.rows[0].order_max));
  for (std::size_t k = 1; k < 3; ++k) CHECK(std::isinf(s4.rows[k].order_max));

  const ConvergenceStudy s2 = convergence_study(kBall, 2.0, 1, {1.0 / 128, 1.0 / 32, 1.0 / 64});
  REQUIRE(s2.rows.size() == 3);
  CHECK(s2.rows[0].h == 1.0 / 32);
  for (std::size_t k = 1; k < 3; ++k) {
    CHECK(s2.rows[k].err_max <= 1.1 * s2.rows[k - 1].err_max);
    CHECK(s2.rows[k].err_l2 <= 1.1 * s2.rows[k - 1].err_l2);
    CHECK(s2.rows[k].order_max >= 0.9);
    CHECK(s2.rows[k].order_l2 >= 1.5);
  }

  const ConvergenceStudy sp = convergence_study(ReducedDomain::perturbed(1.0, 0.1), 2.0, 1, {1.0 / 16, 1.0 / 32, 1.0 / 128});
  CHECK_FALSE(sp.analytic_reference);
  REQUIRE(sp.rows.size() == 2);
  CHECK(sp.rows[1].err_max < sp.rows[0].err_max);

  CHECK_THROWS_AS(convergence_study(ReducedDomain::perturbed(1.0, 0.1), 2.0, 1, {1.0 / 24, 1.0 / 64}), InvalidInput);
  CHECK_THROWS_AS(convergence_study(kBall, 2.0, 1, {}), InvalidInput);
}

TEST_CASE("grid-mode integral identities") {
  const GridSolution fine = assemble_and_solve(build_grid(kBall, 1.0 / 64), 2.0, 1);
  const GridSolution coarse = assemble_and_solve(build_grid(kBall, 1.0 / 32), 2.0, 1);
  const GridIdentityResult avg = average_identity_check(fine, coarse);
  CHECK(avg.residual <= 5.0 * avg.error_estimate);
  CHECK(avg.lhs > 0.0);
  const GridIdentityResult poh = pohozaev_check(fine, coarse);
  CHECK(poh.residual <= 5.0 * poh.error_estimate);
  CHECK(poh.lhs < 0.0);
  CHECK(poh.rhs < 0.0);
  CHECK_THROWS_AS(average_identity_check(fine, fine), InvalidInput);
  const GridSolution other = assemble_and_solve(build_grid(kBall, 1.0 / 32), 3.0, 1);
  CHECK_THROWS_AS(pohozaev_check(fine, other), InvalidInput);
}

TEST_CASE("export") {
  const GridSolution s = assemble_and_solve(build_grid(kBall, 1.0 / 16), 2.0, 1);
  const NeumannTrace tr = neumann_trace(s);
  std::ostringstream csv, tcsv;
  write_solution_csv(csv, s);
  write_trace_csv(tcsv, tr);
  std::istringstream in(csv.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "sigma,t,W");
  std::size_t rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == s.grid.size());
  CHECK(tcsv.str().rfind("arc_param,q\n", 0) == 0);
  const auto meta = solution_metadata(s, tr);
  CHECK(meta["unknowns"] == s.grid.size());
  CHECK(meta["domain"]["kind"] == "gauge_ball");
  CHECK(meta["trace"]["mean_q"].get<double>() == tr.mean);
}
