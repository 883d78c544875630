#pragma once

#include <cmath>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "heis/errors.hpp"
#include "heis/jet.hpp"

namespace heis {

/// A point (x, t) of the Heisenberg group H^n, x in R^{2n}.
template <typename Scalar>
class GroupPoint {
 public:
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  GroupPoint(Vector x, Scalar t) : x_(std::move(x)), t_(t) {
    if (x_.size() < 2 || x_.size() % 2 != 0) {
      throw InvalidInput("group point needs x of even positive length, got " + std::to_string(x_.size()));
    }
  }

  static GroupPoint origin(int n) { return GroupPoint(Vector::Zero(2 * n), Scalar(0)); }

  int n() const noexcept { return static_cast<int>(x_.size() / 2); }
  /// Homogeneous dimension 2n + 2.
  int Q() const noexcept { return 2 * n() + 2; }
  const Vector& x() const noexcept { return x_; }
  Scalar t() const noexcept { return t_; }

 private:
  Vector x_;
  Scalar t_;
};

using Point = GroupPoint<double>;

/// (Jx)_j for the standard symplectic J: (Jx)_j = -x_{n+j}, (Jx)_{n+j} = x_j.
template <typename Derived>
auto symplectic(const Eigen::MatrixBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index n = x.size() / 2;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> jx(x.size());
  jx.head(n) = -x.tail(n);
  jx.tail(n) = x.head(n);
  return jx;
}

template <typename Scalar>
GroupPoint<Scalar> group_mul(const GroupPoint<Scalar>& a, const GroupPoint<Scalar>& b) {
  if (a.n() != b.n()) throw InvalidInput("group_mul: dimension mismatch");
  const Scalar omega = symplectic(a.x()).dot(b.x());
  return GroupPoint<Scalar>(a.x() + b.x(), a.t() + b.t() + Scalar(2) * omega);
}

template <typename Scalar>
GroupPoint<Scalar> group_inv(const GroupPoint<Scalar>& a) {
  return GroupPoint<Scalar>(-a.x(), -a.t());
}

/// Homogeneous dilation (x, t) -> (lambda x, lambda^2 t).
template <typename Scalar>
GroupPoint<Scalar> dilate(Scalar lambda, const GroupPoint<Scalar>& a) {
  if (!(lambda > Scalar(0))) throw InvalidInput("dilate: lambda must be positive");
  return GroupPoint<Scalar>(lambda * a.x(), lambda * lambda * a.t());
}

/// Gauge (Koranyi) norm (|x|^4 + t^2)^{1/4}.
template <typename Scalar>
Scalar gauge(const GroupPoint<Scalar>& a) {
  using std::sqrt;
  const Scalar x2 = a.x().squaredNorm();
  return sqrt(sqrt(x2 * x2 + a.t() * a.t()));
}

// ---------------------------------------------------------------------------
// Scalar fields evaluated on coordinate jets.
//
// Coordinates are ordered x_1..x_{2n}, t; a field receives 2n + 1 jets (in any
// number of underlying variables) and returns the jet of its value.
// ---------------------------------------------------------------------------

struct ScalarField {
  std::string name;
  std::function<Jetd(std::span<const Jetd>)> eval;

  Jetd operator()(std::span<const Jetd> coords) const { return eval(coords); }
};

/// Seed jets of x_1..x_{2n}, t at `p`.
std::vector<Jetd> seed_coordinates(const Point& p, int order);

/// Jet of `f` at `p` with respect to the ambient coordinates.
Jetd evaluate(const ScalarField& f, const Point& p, int order);

/// Gauge jet from coordinate jets; throws SingularPoint at the origin.
Jetd gauge(std::span<const Jetd> coords);

/// |x|^2 from coordinate jets.
Jetd x_norm_squared(std::span<const Jetd> coords);

namespace fields {

ScalarField coordinate_x(int k);
ScalarField coordinate_t();
ScalarField gauge();
/// rho^p; p = 2 - Q gives the fundamental-solution profile.
ScalarField gauge_power(double p);
/// F_alpha = |x|^2 rho^{alpha - 4}; exactly |x|^2 for alpha = 4.
ScalarField weight(double alpha);
/// u_alpha = (rho^alpha - R^alpha) / alpha.
ScalarField candidate(double alpha, double R);
/// xi -> f(delta_lambda xi).
ScalarField dilated(const ScalarField& f, double lambda);
/// xi -> f(xi0^{-1} o xi).
ScalarField left_translated(const ScalarField& f, const Point& xi0);
/// xi -> rho(xi0^{-1} o xi)^{2-Q}; Delta_H-harmonic away from xi0.
ScalarField fundamental_solution(const Point& pole);

}  // namespace fields

// ---------------------------------------------------------------------------
// Sub-Riemannian operators.
// ---------------------------------------------------------------------------

/// (X_1 f, ..., X_{2n} f) with X_j = d/dx_j + 2 (Jx)_j d/dt.
Eigen::VectorXd horizontal_gradient(const ScalarField& f, const Point& p);

/// T f = df/dt.
double vertical_derivative(const ScalarField& f, const Point& p);

/// Delta_x f + 4|x|^2 f_tt + 4 <Jx, grad_x f_t> from the order-2 jet.
double sublaplacian(const ScalarField& f, const Point& p);

/// Same operator computed as sum_j X_j (X_j f) by applying the vector
/// fields to jets; an independent route for cross-checks.
double sublaplacian_by_vector_fields(const ScalarField& f, const Point& p);

/// Sum of absolute values of the terms of the explicit sublaplacian; the
/// natural magnitude against which a vanishing sublaplacian is judged.
double sublaplacian_scale(const ScalarField& f, const Point& p);

/// Z f with Z = sum_j x_j X_j + 2 t T, the generator of the dilations.
double z_field(const ScalarField& f, const Point& p);

/// F_alpha at a point; alpha must lie in (0, 4].
double weight_F(double alpha, const Point& p);

struct WeightDerivatives {
  Eigen::VectorXd gradH;
  double gradH_norm_sq = 0.0;
  double T_F = 0.0;
  double lap_F = 0.0;
};

/// Closed-form horizontal gradient, its squared norm, T F and Delta_H F.
WeightDerivatives weight_F_closed_derivatives(double alpha, const Point& p);

/// |A - B| / max(|A|, |B|, floor).
double relative_error(double a, double b, double floor = 1e-300);

}  // namespace heis
