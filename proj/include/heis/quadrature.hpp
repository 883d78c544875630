#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "heis/domain.hpp"
#include "heis/heisenberg.hpp"

namespace heis {

/// Gauss-Legendre nodes and weights on [-1, 1].
const std::pair<std::vector<double>, std::vector<double>>& gauss_legendre(int q);

enum class QuadratureRule { tensor, adaptive };

struct QuadratureSpec {
  QuadratureRule rule = QuadratureRule::tensor;
  /// Tensor rule: node-doubling levels (6, 12, 24, ... nodes per panel).
  /// Adaptive rule: maximum bisection depth.
  int levels = 6;
  double target_rel_tol = 1e-12;

  void validate() const;
};

struct QuadratureResult {
  double value = 0.0;
  /// |I_fine - I_coarse| for the accepted pair of levels.
  double error_estimate = 0.0;
  /// Integral of |f| at the accepted level; the floor for odd integrands.
  double abs_value = 0.0;
  long evaluations = 0;
};

/// f(r, t) with r = |x|.
using RadialFunction = std::function<double(double r, double t)>;

/// |S^{2n-1}| = 2 pi^n / (n-1)!.
double sphere_area(int n);

/// Integral over the domain of f(|x|, t) d xi in H^n, in gauge-polar
/// coordinates sigma = rho^2 sin(phi), sqrt(1+eps) t = -rho^2 cos(phi).
QuadratureResult volume_integral_sym(const RadialFunction& f, int n, const ReducedDomain& domain,
                                     const QuadratureSpec& spec = {});

enum class SurfaceMeasure {
  euclidean,   // d sigma
  horizontal,  // |D_H rho| / |D rho| d sigma
  weighted,    // |D_H rho|^2 / |D rho| d sigma
};

/// Integral of g(|x|, t) over the boundary of the domain, parametrised by
/// t = (R^2/k) cos(phi), |x| = R sqrt(sin(phi)); rho is the domain's level
/// function to the power 1/4.
QuadratureResult surface_integral_gauge_sphere(const RadialFunction& g, int n, const ReducedDomain& domain,
                                               SurfaceMeasure measure, const QuadratureSpec& spec = {});

struct MeanValueCalibration {
  int n = 1;
  double R = 1.0;
  double beta_hat = 0.0;
  /// |beta(2R) - beta(R)| / beta(R).
  double residual = 0.0;
};

/// beta = R^Q / (Q (Q-2) int_{B_R} |D_H rho|^2).
MeanValueCalibration calibrate_beta(int n, double R, const QuadratureSpec& spec = {});

struct MeanValueResult {
  double pointwise = 0.0;
  double solid_avg = 0.0;
  double surface_avg = 0.0;
  double beta = 0.0;
};

/// Solid and surface weighted averages of a Delta_H-harmonic, cylindrically
/// symmetric h over B_R, next to h(0). Harmonicity and symmetry are checked at
/// 100 interior points first (InvalidInput / SymmetryViolation).
MeanValueResult mean_value_check(const ScalarField& h, int n, double R, const QuadratureSpec& spec = {});

struct IntegralIdentity {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  /// |lhs - rhs| / max(|lhs|, |rhs|, sum of |terms|).
  double residual = 0.0;
};

struct PohozaevResult {
  double lhs = 0.0;
  double rhs = 0.0;
  double residual = 0.0;
  std::vector<IntegralIdentity> sub_identities;
};

/// (Q + 2 alpha - 2) int u F = -c^2 int F for the analytic u_alpha on B_R,
/// with the three intermediate identities of its proof.
PohozaevResult pohozaev_check(double alpha, int n, double R, const QuadratureSpec& spec = {});

struct AverageResult {
  double lhs = 0.0;
  double rhs = 0.0;
  double residual = 0.0;
  /// Grid mode only: |residual(h) - residual(2h)|.
  double error_estimate = 0.0;
};

/// int v F = c^2 int F for the analytic u_alpha on B_R.
AverageResult average_identity_check(double alpha, int n, double R, const QuadratureSpec& spec = {});

}  // namespace heis
