#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "heis/domain.hpp"
#include "heis/quadrature.hpp"

namespace heis {

/// Unknown node (sigma, t) = (i h, j h) of the reduced grid. Arms are the
/// distances to the east/north/south neighbour or to the boundary when the
/// boundary cuts the grid line first (Shortley-Weller); the west arm is
/// always h, and axis nodes (i = 0) use the reflection W(-h) = W(h).
struct GridNode {
  int i = 0;
  int j = 0;
  double sigma = 0.0;
  double t = 0.0;
  double arm_east = 0.0;
  double arm_north = 0.0;
  double arm_south = 0.0;
  /// The arm ends on the boundary (W = 0) rather than at an unknown.
  bool east_boundary = false;
  bool north_boundary = false;
  bool south_boundary = false;
  bool boundary_adjacent() const noexcept { return east_boundary || north_boundary || south_boundary; }
};

class Grid {
 public:
  Grid(const ReducedDomain& domain, double h);

  const ReducedDomain& domain() const noexcept { return domain_; }
  double h() const noexcept { return h_; }
  const std::vector<GridNode>& nodes() const noexcept { return nodes_; }
  std::size_t size() const noexcept { return nodes_.size(); }
  /// Index of node (i, j), or -1 when (i, j) is not an unknown.
  int find(int i, int j) const noexcept;

 private:
  ReducedDomain domain_;
  double h_;
  int imax_, jmax_;
  std::vector<GridNode> nodes_;
  std::vector<int> lookup_;
};

/// Builds the grid; h must not exceed R^2 / 8.
Grid build_grid(const ReducedDomain& domain, double h);

struct GridSolution {
  Grid grid;
  int n = 1;
  double alpha = 2.0;
  Eigen::VectorXd W;
  /// ||A W - b|| / ||b|| of the linear solve (0 for injected data).
  double residual = 0.0;

  /// W at (i, j); 0 for points outside the unknown set.
  double at(int i, int j) const noexcept;
};

/// Analytic reduced solution ((sigma^2 + t^2)^{alpha/4} - R^alpha) / alpha.
double analytic_W(double alpha, double R, double sigma, double t);

/// Solves W_ss + W_tt + (n/sigma) W_s = ((2n+alpha)/4)(sigma^2+t^2)^{(alpha-4)/4}
/// (the reduced equation divided by sigma), W = 0 on the boundary, with the
/// axis row (n+1) W_ss + W_tt = source. Requires alpha in [2, 4].
GridSolution assemble_and_solve(const Grid& grid, double alpha, int n);

/// Grid values of a known function, no solve; isolates post-processing error.
GridSolution inject(const Grid& grid, double alpha, int n, const std::function<double(double, double)>& W);

struct NeumannSample {
  double arc = 0.0;  // (atan2(sqrt(1+eps) t, sigma) + pi/2) / pi in [0, 1]
  double sigma = 0.0;
  double t = 0.0;
  double q = 0.0;
};

struct NeumannTrace {
  std::vector<NeumannSample> samples;  // sorted by arc
  double mean = 0.0;
  double stddev = 0.0;  // population
  double cv = 0.0;
};

/// q = |D_H u| / F^{1/2} = 2 |grad W| (sigma^2+t^2)^{(4-alpha)/8} at the
/// crossings of grid lines with the boundary, from one-sided quadratic
/// differences along the grid line divided by the normal component; samples
/// within 2% of arc from the characteristic points are dropped.
NeumannTrace neumann_trace(const GridSolution& sol);

struct PFunctionGrid {
  std::vector<int> node;  // indices into grid().nodes()
  std::vector<double> v;
  double reference = 0.0;           // mean(q)^2
  double max_deviation = 0.0;       // max |v - reference| over all evaluated nodes
  double max_boundary_deviation = 0.0;  // same, boundary-adjacent nodes only
};

/// v = 4 (sigma^2+t^2)^{(4-alpha)/4} (W_s^2 + W_t^2) - alpha W at nodes with
/// sigma >= 2h, derivatives by (Shortley-Weller) centered differences.
PFunctionGrid pfunction_on_grid(const GridSolution& sol, const NeumannTrace& trace);

struct ConvergenceRow {
  double h = 0.0;
  std::size_t unknowns = 0;
  double err_max = 0.0;
  double err_l2 = 0.0;
  double order_max = 0.0;  // vs previous row; NaN for the first row
  double order_l2 = 0.0;
  double mean_q = 0.0;
  double cv_q = 0.0;
};

struct ConvergenceStudy {
  std::vector<ConvergenceRow> rows;
  bool analytic_reference = true;
  /// Errors below this are roundoff; a pair of such errors gets order +inf.
  double roundoff_floor = 0.0;
};

/// Ball: errors against the analytic solution. Otherwise the finest h is the
/// reference (it must divide every coarser h by a power of two) and is not
/// itself reported.
ConvergenceStudy convergence_study(const ReducedDomain& domain, double alpha, int n, std::vector<double> h_list);

/// sigma,t,W rows with %.17g values.
void write_solution_csv(std::ostream& os, const GridSolution& sol);
/// arc_param,q rows.
void write_trace_csv(std::ostream& os, const NeumannTrace& trace);
nlohmann::ordered_json solution_metadata(const GridSolution& sol, const NeumannTrace& trace);

struct GridIdentityResult {
  double lhs = 0.0;
  double rhs = 0.0;
  double residual = 0.0;
  double residual_coarse = 0.0;
  /// |residual(h) - residual(2h)|.
  double error_estimate = 0.0;
};

// Grid-mode integral identities. `coarse` must be the same problem at twice
// the spacing; volume integrals of grid data are node-weighted sums with the
// reduced measure (|S^{2n-1}|/2) sigma^{n-1} d sigma dt, c^2 = mean(q)^2.

/// (Q + 2 alpha - 2) int W F = -c^2 int F, with int F by quadrature.
GridIdentityResult pohozaev_check(const GridSolution& fine, const GridSolution& coarse,
                                  const QuadratureSpec& spec = {});
/// int v F = c^2 int F, both sides as node sums over the same nodes.
GridIdentityResult average_identity_check(const GridSolution& fine, const GridSolution& coarse);

}  // namespace heis
