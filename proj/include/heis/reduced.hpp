#pragma once

#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "heis/heisenberg.hpp"
#include "heis/jet.hpp"

namespace heis {

/// Toric coordinates (s_1..s_n, t), s_j = x_j^2 + x_{n+j}^2, sigma = sum s_j.
class ReducedPoint {
 public:
  ReducedPoint(Eigen::VectorXd s, double t);

  int n() const noexcept { return static_cast<int>(s_.size()); }
  const Eigen::VectorXd& s() const noexcept { return s_; }
  double t() const noexcept { return t_; }
  double sigma() const noexcept { return sigma_; }
  /// sigma^2 + t^2, i.e. rho^4 in reduced form.
  double rho4() const noexcept { return sigma_ * sigma_ + t_ * t_; }

  /// Representative full-space point x_j = sqrt(s_j) cos(theta_j),
  /// x_{n+j} = sqrt(s_j) sin(theta_j).
  Point lift(std::span<const double> angles = {}) const;

 private:
  Eigen::VectorXd s_;
  double t_;
  double sigma_;
};

/// U(s, t) evaluated on n + 1 seed jets ordered s_1..s_n, t.
struct ReducedField {
  std::string name;
  std::function<Jetd(std::span<const Jetd>)> eval;

  Jetd operator()(std::span<const Jetd> vars) const { return eval(vars); }
};

std::vector<Jetd> seed_reduced(const ReducedPoint& p, int order);
Jetd evaluate(const ReducedField& U, const ReducedPoint& p, int order);

/// u(x, t) = U(s(x), t) as a field on H^n.
ScalarField to_full_space(const ReducedField& U, int n);

/// Jet of U with u(x, t) = U(s, t), obtained by composing `f` with the
/// representative lift x_j = sqrt(s_j); a second, rotated representative is
/// evaluated too and a mismatch beyond 1e-10 raises SymmetryViolation.
Jetd lift_to_reduced(const ScalarField& f, const ReducedPoint& p, int order);

/// L U = sigma U_tt + sum_j (s_j U_jj + U_j); equals Delta_H u / 4.
double reduced_operator(const Jetd& U, const ReducedPoint& p);

/// F_alpha = sigma (sigma^2 + t^2)^{(alpha-4)/4} in reduced form.
double reduced_weight(double alpha, const ReducedPoint& p);

struct MatrixBundle {
  int n = 0;
  Eigen::MatrixXd D2, E1, E2, D1, M;
  double trace_M_direct = 0.0;
  /// Trace from the closed expansion in L U and first derivatives.
  double trace_M_formula = 0.0;
};

MatrixBundle build_matrix_bundle(const Jetd& U, const ReducedPoint& p, double alpha);

/// ||M||_F^2 - (tr M)^2 / size; non-negative for symmetric M, zero exactly on
/// multiples of the identity.
double frobenius_deficit(const Eigen::MatrixXd& M);

/// v = 4 (sigma^2+t^2)^{(4-alpha)/4} (U_t^2 + sum (s_j/sigma) U_j^2) - alpha U.
double pfunction(const Jetd& U, const ReducedPoint& p, double alpha);
/// g = (v + alpha U) / 4, the auxiliary quotient |D_H u|^2 / (4 F_alpha).
double pfunction_g(const Jetd& U, const ReducedPoint& p, double alpha);
/// Jet of v one order below the jet of U.
Jetd pfunction_jet(const Jetd& U, const ReducedPoint& p, double alpha);

/// (F_alpha / 16) Delta_H v = (F_alpha / 4) L v from an order-3 jet of U.
double lhs_via_jets(const Jetd& U, const ReducedPoint& p, double alpha);

enum class SumOfSquaresVariant { toric_general, toric_n1, toric_n2, cylindrical };

std::string to_string(SumOfSquaresVariant v);

struct SumOfSquares {
  double total = 0.0;
  std::vector<std::pair<std::string, double>> terms;
  MatrixBundle bundle;

  double term(const std::string& name) const;
};

/// Right-hand side of the sub-Laplacian identity for v as a named list of
/// non-negative contributions (for alpha in (0, 4]).
SumOfSquares rhs_sum_of_squares(SumOfSquaresVariant variant, const Jetd& U, const ReducedPoint& p, double alpha);

/// Comparison scale for LHS vs RHS: max(|lhs|, |rhs|, ||M||^2, F^2 (1 + rho^4)).
double identity_scale(double lhs, double rhs, const MatrixBundle& bundle, double alpha, const ReducedPoint& p);

/// u_alpha in reduced form: ((sigma^2+t^2)^{alpha/4} - R^alpha) / alpha.
ReducedField reduced_candidate(int n, double alpha, double R);

/// Polynomials H(s, t) with L H = 0 up to the given degree (<= 2).
std::vector<ReducedField> harmonic_basis(int n, int degree_cap);

/// L-harmonic polynomials depending on (sigma, t) only: 1, t, t^2 - sigma^2/(n+1).
std::vector<ReducedField> cylindrical_harmonic_basis(int n);

/// base + sum_k coeffs[k] * terms[k].
ReducedField combination(const ReducedField& base, std::vector<ReducedField> terms, std::vector<double> coeffs);

}  // namespace heis
