#include "heis/torsion.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <ostream>

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include "heis/errors.hpp"
#include "heis/json_io.hpp"
#include "heis/parallel.hpp"

namespace heis {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kNearBoundary = 1e-6;  // in units of h
constexpr double kSolveTol = 1e-10;

double r4(const ReducedDomain& d) { return d.R * d.R * d.R * d.R; }

double source(double alpha, int n, double sigma, double t) {
  const double c = (2.0 * n + alpha) / 4.0;
  if (alpha == 4.0) return c;
  return c * std::pow(sigma * sigma + t * t, (alpha - 4.0) / 4.0);
}

// sigma^n-weighted mean of the source over [0, h/2] x [-h/2, h/2], the
// control cell of the origin node; in polar coordinates the radial integral
// is exact and the angular one is smooth on each half of the quarter.
double origin_source(double alpha, int n, double h) {
  if (alpha == 4.0) return source(alpha, n, 0.0, 0.0);
  const double c = (2.0 * n + alpha) / 4.0;
  const double half = h / 2.0;
  const double p = n + 1.0 + (alpha - 4.0) / 2.0;
  const auto& [x, w] = gauss_legendre(24);
  double integral = 0.0;
  for (int part = 0; part < 2; ++part) {
    const double a = part * kPi / 4.0, b = a + kPi / 4.0;
    for (std::size_t q = 0; q < x.size(); ++q) {
      const double psi = 0.5 * (a + b) + 0.5 * (b - a) * x[q];
      const double rm = half / std::max(std::cos(psi), std::sin(psi));
      integral += 0.5 * (b - a) * w[q] * std::pow(std::cos(psi), n) * std::pow(rm, p + 1.0) / (p + 1.0);
    }
  }
  const double cell = std::pow(half, n + 1) / (n + 1) * half;  // t >= 0 half
  return c * integral / cell;
}

// Gradient (W_s, W_t) at node p from three-point formulas on the actual arms;
// W_s = 0 on the axis.
std::array<double, 2> node_gradient(const GridSolution& sol, std::size_t p) {
  const GridNode& nd = sol.grid.nodes()[p];
  const double h = sol.grid.h();
  const auto three_point = [](double fm, double f0, double fp, double am, double ap) {
    return (am * am * fp - ap * ap * fm + (ap * ap - am * am) * f0) / (ap * am * (ap + am));
  };
  const double w0 = sol.W[static_cast<Eigen::Index>(p)];
  const double we = sol.at(nd.i + 1, nd.j);
  const double wn = sol.at(nd.i, nd.j + 1);
  const double ws = sol.at(nd.i, nd.j - 1);
  const double gs = nd.i == 0 ? 0.0 : three_point(sol.at(nd.i - 1, nd.j), w0, we, h, nd.arm_east);
  const double gt = three_point(ws, w0, wn, nd.arm_south, nd.arm_north);
  return {gs, gt};
}

double node_v(const GridSolution& sol, std::size_t p) {
  const GridNode& nd = sol.grid.nodes()[p];
  const auto g = node_gradient(sol, p);
  const double r2 = nd.sigma * nd.sigma + nd.t * nd.t;
  const double weight = sol.alpha == 4.0 ? 1.0 : std::pow(r2, (4.0 - sol.alpha) / 4.0);
  return 4.0 * weight * (g[0] * g[0] + g[1] * g[1]) - sol.alpha * sol.W[static_cast<Eigen::Index>(p)];
}

double F_reduced(double alpha, double sigma, double t) {
  if (alpha == 4.0) return sigma;
  const double r2 = sigma * sigma + t * t;
  return r2 > 0.0 ? sigma * std::pow(r2, (alpha - 4.0) / 4.0) : 0.0;
}

// Node weight of the reduced volume element (|S^{2n-1}|/2) sigma^{n-1} dsigma dt;
// axis nodes own half a cell.
double node_weight(const GridSolution& sol, const GridNode& nd) {
  const double h = sol.grid.h();
  const double omega = sphere_area(sol.n);
  if (nd.i == 0) {
    const double half = h / 2.0;
    return 0.5 * omega * std::pow(half, sol.n) / sol.n * h;  // exact cell integral of sigma^{n-1}
  }
  return 0.5 * omega * std::pow(nd.sigma, sol.n - 1) * h * h;
}

}  // namespace

Grid::Grid(const ReducedDomain& domain, double h) : domain_(domain), h_(h) {
  if (!(h > 0.0)) throw InvalidInput("grid spacing must be positive");
  if (h > domain.R * domain.R / 8.0) throw InvalidInput("grid spacing must not exceed R^2/8");
  const double R4 = r4(domain);
  const double stretch = 1.0 + domain.epsilon;
  imax_ = static_cast<int>(std::floor(domain.R * domain.R / h)) + 1;
  jmax_ = static_cast<int>(std::floor(domain.R * domain.R / (domain.k() * h))) + 1;
  const int width = 2 * jmax_ + 1;
  lookup_.assign(static_cast<std::size_t>(imax_ + 1) * width, -1);

  for (int i = 0; i <= imax_; ++i) {
    for (int j = -jmax_; j <= jmax_; ++j) {
      const double sigma = i * h, t = j * h;
      if (!domain.contains(sigma, t)) continue;
      const double east = std::sqrt(R4 - stretch * t * t) - sigma;
      const double tb = std::sqrt(std::max(0.0, (R4 - sigma * sigma) / stretch));
      const double north = tb - t, south = tb + t;
      if (std::min({east, north, south}) < kNearBoundary * h) continue;
      GridNode nd;
      nd.i = i;
      nd.j = j;
      nd.sigma = sigma;
      nd.t = t;
      nd.arm_east = std::min(east, h);
      nd.arm_north = std::min(north, h);
      nd.arm_south = std::min(south, h);
      lookup_[static_cast<std::size_t>(i) * width + (j + jmax_)] = static_cast<int>(nodes_.size());
      nodes_.push_back(nd);
    }
  }
  // An arm of length h can still end on the boundary when the neighbour sat
  // within the near-boundary band and was dropped.
  for (GridNode& nd : nodes_) {
    nd.east_boundary = find(nd.i + 1, nd.j) < 0;
    nd.north_boundary = find(nd.i, nd.j + 1) < 0;
    nd.south_boundary = find(nd.i, nd.j - 1) < 0;
  }
}

int Grid::find(int i, int j) const noexcept {
  if (i < 0 || i > imax_ || j < -jmax_ || j > jmax_) return -1;
  return lookup_[static_cast<std::size_t>(i) * (2 * jmax_ + 1) + (j + jmax_)];
}

Grid build_grid(const ReducedDomain& domain, double h) { return Grid(domain, h); }

double GridSolution::at(int i, int j) const noexcept {
  const int p = grid.find(i, j);
  return p < 0 ? 0.0 : W[p];
}

double analytic_W(double alpha, double R, double sigma, double t) {
  return (std::pow(sigma * sigma + t * t, alpha / 4.0) - std::pow(R, alpha)) / alpha;
}

GridSolution assemble_and_solve(const Grid& grid, double alpha, int n) {
  if (!(alpha >= 2.0 && alpha <= 4.0)) throw InvalidInput("solver requires alpha in [2, 4]");
  if (n < 1) throw InvalidInput("n must be at least 1");
  const std::size_t N = grid.size();
  if (N == 0) throw InvalidInput("grid has no unknowns");
  const double h = grid.h();

  struct Row {
    std::array<int, 5> col{-1, -1, -1, -1, -1};
    std::array<double, 5> val{};
    double rhs = 0.0;
  };
  std::vector<Row> rows(N);
  const double origin_rhs = origin_source(alpha, n, h);

  parallel_for(N, [&](std::size_t p) {
    const GridNode& nd = grid.nodes()[p];
    Row& row = rows[p];
    const double ae = nd.arm_east, an = nd.arm_north, as = nd.arm_south;
    double c0 = 0.0, cE = 0.0, cW = 0.0;
    if (nd.i == 0) {
      cE = 2.0 * (n + 1) / (ae * ae);
      c0 = -cE;
    } else {
      const double aw = h, ns = n / nd.sigma;
      cE = 2.0 / (ae * (ae + aw)) + ns * aw / (ae * (ae + aw));
      cW = 2.0 / (aw * (ae + aw)) - ns * ae / (aw * (ae + aw));
      c0 = -2.0 / (ae * aw) + ns * (ae - aw) / (ae * aw);
    }
    const double cN = 2.0 / (an * (an + as)), cS = 2.0 / (as * (an + as));
    c0 -= 2.0 / (an * as);

    row.col[0] = static_cast<int>(p);
    row.val[0] = c0;
    const auto couple = [&](int slot, int i, int j, double c) {
      const int q = grid.find(i, j);
      if (q >= 0) {
        row.col[slot] = q;
        row.val[slot] = c;
      }
    };
    couple(1, nd.i + 1, nd.j, cE);
    if (nd.i > 0) couple(2, nd.i - 1, nd.j, cW);
    couple(3, nd.i, nd.j + 1, cN);
    couple(4, nd.i, nd.j - 1, cS);
    row.rhs = (nd.i == 0 && nd.j == 0) ? origin_rhs : source(alpha, n, nd.sigma, nd.t);
  });

  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(5 * N);
  Eigen::VectorXd b(static_cast<Eigen::Index>(N));
  for (std::size_t p = 0; p < N; ++p) {
    for (int s = 0; s < 5; ++s)
      if (rows[p].col[s] >= 0) triplets.emplace_back(static_cast<int>(p), rows[p].col[s], rows[p].val[s]);
    b[static_cast<Eigen::Index>(p)] = rows[p].rhs;
  }
  Eigen::SparseMatrix<double> A(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(N));
  A.setFromTriplets(triplets.begin(), triplets.end());
  A.makeCompressed();

  Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
  lu.analyzePattern(A);
  lu.factorize(A);
  if (lu.info() != Eigen::Success) throw SolverError("sparse LU factorization failed: " + lu.lastErrorMessage(), 1.0);
  Eigen::VectorXd W = lu.solve(b);
  const double bnorm = b.norm();
  double residual = (A * W - b).norm() / bnorm;
  for (int refine = 0; refine < 3 && residual > kSolveTol; ++refine) {
    W += lu.solve(b - A * W);
    residual = (A * W - b).norm() / bnorm;
  }
  if (!(residual <= kSolveTol)) throw SolverError("linear solve did not reach the residual target", residual);
  return GridSolution{grid, n, alpha, std::move(W), residual};
}

GridSolution inject(const Grid& grid, double alpha, int n, const std::function<double(double, double)>& W) {
  Eigen::VectorXd values(static_cast<Eigen::Index>(grid.size()));
  for (std::size_t p = 0; p < grid.size(); ++p)
    values[static_cast<Eigen::Index>(p)] = W(grid.nodes()[p].sigma, grid.nodes()[p].t);
  return GridSolution{grid, n, alpha, std::move(values), 0.0};
}

NeumannTrace neumann_trace(const GridSolution& sol) {
  const Grid& grid = sol.grid;
  const ReducedDomain& dom = grid.domain();
  const double h = grid.h();
  const double stretch = 1.0 + dom.epsilon;
  const double diag = 1.0 / std::sqrt(2.0);
  NeumannTrace out;

  // Boundary crossing at distance a from node (i, j) along direction (di, dj);
  // the next node inward is (i - di, j - dj).
  const auto sample = [&](const GridNode& nd, int di, int dj, double a) {
    const double sb = nd.sigma + di * a, tb = nd.t + dj * a;
    const double gs = sb, gt = stretch * tb;
    const double gn = std::hypot(gs, gt);
    if (gn == 0.0) return;
    const double ns = gs / gn, nt = gt / gn;
    const bool use_rows = std::abs(ns) >= diag;
    if (use_rows != (di != 0)) return;
    const double arc = (std::atan2(dom.k() * tb, sb) + kPi / 2.0) / kPi;
    if (arc < 0.02 || arc > 0.98) return;
    const int q2 = grid.find(nd.i - di, nd.j - dj);
    if (q2 < 0) return;
    const double w1 = sol.at(nd.i, nd.j), w2 = sol.W[q2];
    const double dW = -w1 * (a + h) / (a * h) + w2 * a / ((a + h) * h);
    const double ndot = di != 0 ? ns * di : nt * dj;
    const double grad = std::abs(dW / ndot);
    const double r2 = sb * sb + tb * tb;
    const double q = 2.0 * grad * (sol.alpha == 4.0 ? 1.0 : std::pow(r2, (4.0 - sol.alpha) / 8.0));
    out.samples.push_back({arc, sb, tb, q});
  };

  for (const GridNode& nd : grid.nodes()) {
    if (nd.east_boundary) sample(nd, 1, 0, nd.arm_east);
    if (nd.north_boundary) sample(nd, 0, 1, nd.arm_north);
    if (nd.south_boundary) sample(nd, 0, -1, nd.arm_south);
  }
  std::sort(out.samples.begin(), out.samples.end(), [](const NeumannSample& a, const NeumannSample& b) {
    return a.arc < b.arc || (a.arc == b.arc && a.sigma < b.sigma);
  });
  if (out.samples.empty()) return out;
  double sum = 0.0;
  for (const auto& s : out.samples) sum += s.q;
  out.mean = sum / static_cast<double>(out.samples.size());
  double var = 0.0;
  for (const auto& s : out.samples) var += (s.q - out.mean) * (s.q - out.mean);
  out.stddev = std::sqrt(var / static_cast<double>(out.samples.size()));
  out.cv = out.mean > 0.0 ? out.stddev / out.mean : std::numeric_limits<double>::infinity();
  return out;
}

PFunctionGrid pfunction_on_grid(const GridSolution& sol, const NeumannTrace& trace) {
  if (!(sol.alpha >= 2.0 && sol.alpha <= 4.0)) throw InvalidInput("pfunction_on_grid requires alpha in [2, 4]");
  PFunctionGrid out;
  out.reference = trace.mean * trace.mean;
  for (std::size_t p = 0; p < sol.grid.size(); ++p) {
    const GridNode& nd = sol.grid.nodes()[p];
    if (nd.i < 2) continue;
    const double v = node_v(sol, p);
    out.node.push_back(static_cast<int>(p));
    out.v.push_back(v);
    const double dev = std::abs(v - out.reference);
    out.max_deviation = std::max(out.max_deviation, dev);
    if (nd.boundary_adjacent()) out.max_boundary_deviation = std::max(out.max_boundary_deviation, dev);
  }
  return out;
}

ConvergenceStudy convergence_study(const ReducedDomain& domain, double alpha, int n, std::vector<double> h_list) {
  if (h_list.empty()) throw InvalidInput("convergence study needs at least one h");
  std::sort(h_list.begin(), h_list.end(), std::greater<>());
  ConvergenceStudy study;
  study.analytic_reference = domain.is_ball();

  std::optional<GridSolution> reference;
  double h_ref = 0.0;
  if (!study.analytic_reference) {
    if (h_list.size() < 2) throw InvalidInput("perturbed convergence study needs a reference and a coarser h");
    h_ref = h_list.back();
    h_list.pop_back();
    for (double h : h_list) {
      const double m = h / h_ref;
      const double pow2 = std::exp2(std::round(std::log2(m)));
      if (std::abs(m - pow2) > 1e-9 * m) throw InvalidInput("every h must be a power-of-two multiple of the finest h");
    }
    reference.emplace(assemble_and_solve(build_grid(domain, h_ref), alpha, n));
  }

  double scale = 0.0;
  for (std::size_t k = 0; k < h_list.size(); ++k) {
    const double h = h_list[k];
    const GridSolution sol = assemble_and_solve(build_grid(domain, h), alpha, n);
    const NeumannTrace trace = neumann_trace(sol);
    ConvergenceRow row;
    row.h = h;
    row.unknowns = sol.grid.size();
    double sum2 = 0.0;
    const int m = reference ? static_cast<int>(std::lround(h / h_ref)) : 1;
    for (std::size_t p = 0; p < sol.grid.size(); ++p) {
      const GridNode& nd = sol.grid.nodes()[p];
      double exact;
      if (reference) {
        const int q = reference->grid.find(nd.i * m, nd.j * m);
        if (q < 0) continue;
        exact = reference->W[q];
      } else {
        exact = analytic_W(alpha, domain.R, nd.sigma, nd.t);
      }
      const double e = std::abs(sol.W[static_cast<Eigen::Index>(p)] - exact);
      row.err_max = std::max(row.err_max, e);
      sum2 += e * e * h * h;
      scale = std::max(scale, std::abs(exact));
    }
    row.err_l2 = std::sqrt(sum2);
    row.mean_q = trace.mean;
    row.cv_q = trace.cv;
    row.order_max = row.order_l2 = std::numeric_limits<double>::quiet_NaN();
    study.rows.push_back(row);
  }
  study.roundoff_floor = 1e-12 * std::max(scale, 1.0);
  for (std::size_t k = 1; k < study.rows.size(); ++k) {
    auto& cur = study.rows[k];
    const auto& prev = study.rows[k - 1];
    const double ratio = std::log2(prev.h / cur.h);
    const auto order = [&](double ep, double ec) {
      if (ep <= study.roundoff_floor && ec <= study.roundoff_floor) return std::numeric_limits<double>::infinity();
      return std::log2(ep / ec) / ratio;
    };
    cur.order_max = order(prev.err_max, cur.err_max);
    cur.order_l2 = order(prev.err_l2, cur.err_l2);
  }
  return study;
}

void write_solution_csv(std::ostream& os, const GridSolution& sol) {
  os << "sigma,t,W\n";
  for (std::size_t p = 0; p < sol.grid.size(); ++p) {
    const GridNode& nd = sol.grid.nodes()[p];
    os << format_double(nd.sigma) << ',' << format_double(nd.t) << ','
       << format_double(sol.W[static_cast<Eigen::Index>(p)]) << '\n';
  }
}

void write_trace_csv(std::ostream& os, const NeumannTrace& trace) {
  os << "arc_param,q\n";
  for (const auto& s : trace.samples) os << format_double(s.arc) << ',' << format_double(s.q) << '\n';
}

nlohmann::ordered_json solution_metadata(const GridSolution& sol, const NeumannTrace& trace) {
  nlohmann::ordered_json j;
  const ReducedDomain& d = sol.grid.domain();
  j["domain"] = {{"kind", d.is_ball() ? "gauge_ball" : "perturbed"}, {"R", d.R}, {"epsilon", d.epsilon}};
  j["n"] = sol.n;
  j["alpha"] = sol.alpha;
  j["h_sigma"] = sol.grid.h();
  j["h_t"] = sol.grid.h();
  j["unknowns"] = sol.grid.size();
  j["linear_residual"] = sol.residual;
  j["trace"] = {{"samples", trace.samples.size()}, {"mean_q", trace.mean}, {"std_q", trace.stddev}, {"cv_q", trace.cv}};
  return j;
}

namespace {

struct GridSums {
  double WF = 0.0, F = 0.0, vF = 0.0;
};

GridSums grid_sums(const GridSolution& sol) {
  GridSums s;
  for (std::size_t p = 0; p < sol.grid.size(); ++p) {
    const GridNode& nd = sol.grid.nodes()[p];
    const double w = node_weight(sol, nd);
    const double F = F_reduced(sol.alpha, nd.sigma, nd.t);
    s.WF += w * sol.W[static_cast<Eigen::Index>(p)] * F;
    s.F += w * F;
    s.vF += w * node_v(sol, p) * F;
  }
  return s;
}

void check_pair(const GridSolution& fine, const GridSolution& coarse) {
  if (fine.n != coarse.n || fine.alpha != coarse.alpha || fine.grid.domain().R != coarse.grid.domain().R ||
      fine.grid.domain().epsilon != coarse.grid.domain().epsilon)
    throw InvalidInput("grid pair must solve the same problem");
  if (std::abs(coarse.grid.h() - 2.0 * fine.grid.h()) > 1e-12 * coarse.grid.h())
    throw InvalidInput("coarse grid must have twice the fine spacing");
}

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(a), std::abs(b)); }

}  // namespace

GridIdentityResult pohozaev_check(const GridSolution& fine, const GridSolution& coarse, const QuadratureSpec& spec) {
  check_pair(fine, coarse);
  const int n = fine.n;
  const double alpha = fine.alpha;
  const double Q = 2.0 * n + 2.0;
  const auto F = [alpha](double r, double t) {
    const double r2 = r * r;
    return F_reduced(alpha, r2, t);
  };
  const double intF = volume_integral_sym(F, n, fine.grid.domain(), spec).value;
  const auto eval = [&](const GridSolution& sol, double& lhs, double& rhs) {
    const double c2 = std::pow(neumann_trace(sol).mean, 2);
    lhs = (Q + 2.0 * alpha - 2.0) * grid_sums(sol).WF;
    rhs = -c2 * intF;
  };
  GridIdentityResult r;
  double lc, rc;
  eval(fine, r.lhs, r.rhs);
  eval(coarse, lc, rc);
  r.residual = rel(r.lhs, r.rhs);
  r.residual_coarse = rel(lc, rc);
  r.error_estimate = std::abs(r.residual - r.residual_coarse);
  return r;
}

GridIdentityResult average_identity_check(const GridSolution& fine, const GridSolution& coarse) {
  check_pair(fine, coarse);
  const auto eval = [](const GridSolution& sol, double& lhs, double& rhs) {
    const double c2 = std::pow(neumann_trace(sol).mean, 2);
    const GridSums s = grid_sums(sol);
    lhs = s.vF;
    rhs = c2 * s.F;
  };
  GridIdentityResult r;
  double lc, rc;
  eval(fine, r.lhs, r.rhs);
  eval(coarse, lc, rc);
  r.residual = rel(r.lhs, r.rhs);
  r.residual_coarse = rel(lc, rc);
  r.error_estimate = std::abs(r.residual - r.residual_coarse);
  return r;
}

}  // namespace heis
