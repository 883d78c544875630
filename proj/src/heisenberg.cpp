#include "heis/heisenberg.hpp"

#include <algorithm>
#include <cmath>

namespace heis {

std::vector<Jetd> seed_coordinates(const Point& p, int order) {
  const int d = 2 * p.n() + 1;
  std::vector<Jetd> coords;
  coords.reserve(d);
  for (int j = 0; j < 2 * p.n(); ++j) coords.push_back(Jetd::variable(p.x()[j], j, d, order));
  coords.push_back(Jetd::variable(p.t(), 2 * p.n(), d, order));
  return coords;
}

Jetd evaluate(const ScalarField& f, const Point& p, int order) {
  const auto coords = seed_coordinates(p, order);
  return f(coords);
}

Jetd x_norm_squared(std::span<const Jetd> coords) {
  Jetd s = coords[0] * coords[0];
  for (std::size_t j = 1; j + 1 < coords.size(); ++j) s += coords[j] * coords[j];
  return s;
}

Jetd gauge(std::span<const Jetd> coords) {
  const Jetd x2 = x_norm_squared(coords);
  const Jetd& t = coords.back();
  const Jetd quartic = x2 * x2 + t * t;
  if (quartic.value() == 0.0) throw SingularPoint("gauge is not differentiable at the group origin");
  return pow(quartic, 0.25);
}

namespace fields {

namespace {

void check_arity(std::span<const Jetd> coords) {
  if (coords.size() < 3 || coords.size() % 2 == 0) {
    throw InvalidInput("field expects 2n + 1 coordinate jets");
  }
}

// rho^4 = |x|^4 + t^2 as a jet, raising SingularPoint at the origin.
Jetd gauge_quartic(std::span<const Jetd> coords) {
  const Jetd x2 = x_norm_squared(coords);
  const Jetd quartic = x2 * x2 + coords.back() * coords.back();
  if (quartic.value() == 0.0) throw SingularPoint("field is singular at the group origin");
  return quartic;
}

}  // namespace

ScalarField coordinate_x(int k) {
  return {"x" + std::to_string(k + 1), [k](std::span<const Jetd> c) {
            check_arity(c);
            if (k < 0 || k + 1 >= static_cast<int>(c.size())) throw InvalidInput("coordinate index out of range");
            return c[k];
          }};
}

ScalarField coordinate_t() {
  return {"t", [](std::span<const Jetd> c) {
            check_arity(c);
            return c.back();
          }};
}

ScalarField gauge() {
  return {"rho", [](std::span<const Jetd> c) {
            check_arity(c);
            return heis::gauge(c);
          }};
}

ScalarField gauge_power(double p) {
  return {"rho^" + std::to_string(p), [p](std::span<const Jetd> c) {
            check_arity(c);
            return pow(gauge_quartic(c), p / 4.0);
          }};
}

ScalarField weight(double alpha) {
  return {"F_" + std::to_string(alpha), [alpha](std::span<const Jetd> c) {
            check_arity(c);
            const Jetd x2 = x_norm_squared(c);
            if (alpha == 4.0) return x2;
            return x2 * pow(gauge_quartic(c), (alpha - 4.0) / 4.0);
          }};
}

ScalarField candidate(double alpha, double R) {
  if (!(alpha > 0.0) || !(R > 0.0)) throw InvalidInput("candidate: alpha and R must be positive");
  return {"u_" + std::to_string(alpha), [alpha, R](std::span<const Jetd> c) {
            check_arity(c);
            const Jetd x2 = x_norm_squared(c);
            const Jetd quartic = x2 * x2 + c.back() * c.back();
            Jetd rho_alpha;
            if (alpha == 4.0) {
              rho_alpha = quartic;
            } else if (quartic.order() == 0 && quartic.value() == 0.0) {
              rho_alpha = Jetd::constant(0.0, quartic.num_vars(), 0);
            } else {
              if (quartic.value() == 0.0) throw SingularPoint("u_alpha is not differentiable at the origin");
              rho_alpha = pow(quartic, alpha / 4.0);
            }
            return (rho_alpha - std::pow(R, alpha)) / alpha;
          }};
}

ScalarField dilated(const ScalarField& f, double lambda) {
  if (!(lambda > 0.0)) throw InvalidInput("dilated: lambda must be positive");
  return {f.name + "∘δ", [f, lambda](std::span<const Jetd> c) {
            std::vector<Jetd> scaled(c.begin(), c.end());
            for (std::size_t j = 0; j + 1 < scaled.size(); ++j) scaled[j] *= lambda;
            scaled.back() *= lambda * lambda;
            return f(scaled);
          }};
}

ScalarField left_translated(const ScalarField& f, const Point& xi0) {
  return {f.name + "∘τ", [f, xi0](std::span<const Jetd> c) {
            const int n = xi0.n();
            if (static_cast<int>(c.size()) != 2 * n + 1) throw InvalidInput("left_translated: dimension mismatch");
            // xi0^{-1} o xi = (x - x0, t - t0 + 2 <J(-x0), x>)
            const Eigen::VectorXd jx0 = symplectic(xi0.x());
            std::vector<Jetd> moved(c.begin(), c.end());
            Jetd t = c.back() - xi0.t();
            for (int j = 0; j < 2 * n; ++j) {
              moved[j] -= xi0.x()[j];
              t -= 2.0 * jx0[j] * c[j];
            }
            moved.back() = t;
            return f(moved);
          }};
}

ScalarField fundamental_solution(const Point& pole) {
  ScalarField g = left_translated(gauge_power(2.0 - pole.Q()), pole);
  g.name = "Gamma";
  return g;
}

}  // namespace fields

Eigen::VectorXd horizontal_gradient(const ScalarField& f, const Point& p) {
  const Jetd j = evaluate(f, p, 1);
  const int n = p.n();
  const Eigen::VectorXd jx = symplectic(p.x());
  const double ft = j.d(2 * n);
  Eigen::VectorXd g(2 * n);
  for (int k = 0; k < 2 * n; ++k) g[k] = j.d(k) + 2.0 * jx[k] * ft;
  return g;
}

double vertical_derivative(const ScalarField& f, const Point& p) {
  return evaluate(f, p, 1).d(2 * p.n());
}

double sublaplacian(const ScalarField& f, const Point& p) {
  const Jetd j = evaluate(f, p, 2);
  const int n = p.n();
  const int tv = 2 * n;
  const Eigen::VectorXd jx = symplectic(p.x());
  double lap_x = 0.0;
  double mixed = 0.0;
  for (int k = 0; k < 2 * n; ++k) {
    lap_x += j.d(k, k);
    mixed += jx[k] * j.d(k, tv);
  }
  return lap_x + 4.0 * p.x().squaredNorm() * j.d(tv, tv) + 4.0 * mixed;
}

double sublaplacian_scale(const ScalarField& f, const Point& p) {
  const Jetd j = evaluate(f, p, 2);
  const int n = p.n();
  const int tv = 2 * n;
  const Eigen::VectorXd jx = symplectic(p.x());
  double s = 4.0 * p.x().squaredNorm() * std::abs(j.d(tv, tv));
  for (int k = 0; k < 2 * n; ++k) s += std::abs(j.d(k, k)) + 4.0 * std::abs(jx[k] * j.d(k, tv));
  return s;
}

double sublaplacian_by_vector_fields(const ScalarField& f, const Point& p) {
  const auto coords = seed_coordinates(p, 2);
  const Jetd j = f(coords);
  const int n = p.n();
  const int tv = 2 * n;
  const Jetd ft = j.derivative(tv);
  double total = 0.0;
  for (int k = 0; k < 2 * n; ++k) {
    // (Jx)_k as an order-1 jet of the coordinates.
    const Jetd jx_k = k < n ? -coords[k + n].truncated(1) : coords[k - n].truncated(1);
    const Jetd xk_f = j.derivative(k) + 2.0 * jx_k * ft;
    // X_k applied to the order-1 jet of X_k f, read off at the point.
    total += xk_f.d(k) + 2.0 * jx_k.value() * xk_f.d(tv);
  }
  return total;
}

double z_field(const ScalarField& f, const Point& p) {
  const Jetd j = evaluate(f, p, 1);
  const int n = p.n();
  double z = 2.0 * p.t() * j.d(2 * n);
  for (int k = 0; k < 2 * n; ++k) z += p.x()[k] * j.d(k);
  return z;
}

namespace {

void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha <= 4.0)) throw InvalidInput("alpha must lie in (0, 4]");
}

}  // namespace

double weight_F(double alpha, const Point& p) {
  check_alpha(alpha);
  const double x2 = p.x().squaredNorm();
  if (alpha == 4.0) return x2;
  const double rho = gauge(p);
  if (rho == 0.0) throw SingularPoint("F_alpha is singular at the origin for alpha < 4");
  return x2 * std::pow(rho, alpha - 4.0);
}

WeightDerivatives weight_F_closed_derivatives(double alpha, const Point& p) {
  check_alpha(alpha);
  const int Q = p.Q();
  WeightDerivatives out;
  if (alpha == 4.0) {
    out.gradH = 2.0 * p.x();
    out.gradH_norm_sq = 4.0 * p.x().squaredNorm();
    out.T_F = 0.0;
    out.lap_F = 2.0 * (Q - 2);
    return out;
  }
  const double rho = gauge(p);
  if (rho == 0.0) throw SingularPoint("F_alpha derivatives are singular at the origin");
  const double x2 = p.x().squaredNorm();
  const double x4 = x2 * x2;
  const double t = p.t();
  const double r8 = std::pow(rho, alpha - 8.0);
  // Grouped over rho^{alpha-8} using rho^4 = |x|^4 + t^2:
  //   2 rho^4 + (alpha-4)|x|^4 = 2 t^2 + (alpha-2)|x|^4
  //   4 rho^4 + alpha(alpha-4)|x|^4 = 4 t^2 + (alpha-2)^2 |x|^4
  // which keeps the alpha = 2, t -> 0 regime free of cancellation.
  out.gradH = r8 * ((2.0 * t * t + (alpha - 2.0) * x4) * p.x() + (alpha - 4.0) * x2 * t * symplectic(p.x()));
  out.gradH_norm_sq = x2 * std::pow(rho, 2.0 * alpha - 12.0) * (4.0 * t * t + (alpha - 2.0) * (alpha - 2.0) * x4);
  out.T_F = 0.5 * (alpha - 4.0) * x2 * r8 * t;
  out.lap_F = 2.0 * (Q - 2) * std::pow(rho, alpha - 4.0) + (alpha - 4.0) * (Q + alpha - 2.0) * x4 * r8;
  return out;
}

double relative_error(double a, double b, double floor) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

}  // namespace heis
