#include <doctest.h>

#include <cmath>

#include "heis/quadrature.hpp"
#include "test_support.hpp"

using namespace heis;

namespace {

// Exact volume of the gauge ball: (omega/2) * int cos^{n-1} * 2 R^{2n+2}/(2n+2).
double ball_volume(int n, double R) {
  const double angular = std::sqrt(M_PI) * std::tgamma(0.5 * n) / std::tgamma(0.5 * n + 0.5);
  return 0.5 * sphere_area(n) * angular * 2.0 * std::pow(R, 2 * n + 2) / (2 * n + 2);
}

double monte_carlo_volume(int n, double R, long samples, std::uint64_t seed) {
  testing::Rng rng(seed);
  long inside = 0;
  for (long s = 0; s < samples; ++s) {
    double x2 = 0.0;
    for (int j = 0; j < 2 * n; ++j) {
      const double x = rng.uniform(-R, R);
      x2 += x * x;
    }
    const double t = rng.uniform(-R * R, R * R);
    inside += x2 * x2 + t * t < R * R * R * R;
  }
  return std::pow(2.0 * R, 2 * n) * 2.0 * R * R * static_cast<double>(inside) / samples;
}

// |D rho_eps| for rho_eps^4 = |x|^4 + (1+eps) t^2.
RadialFunction euclidean_gradient(double eps) {
  return [eps](double r, double t) {
    const double rho4 = r * r * r * r + (1.0 + eps) * t * t;
    if (rho4 == 0.0) return 0.0;
    return std::sqrt(std::pow(r, 6) + 0.25 * (1 + eps) * (1 + eps) * t * t) / std::pow(rho4, 0.75);
  };
}

}  // namespace

TEST_CASE("Gauss-Legendre rules") {
  for (int q : {1, 2, 5, 8, 24, 96}) {
    const auto& [x, w] = gauss_legendre(q);
    double sw = 0.0;
    for (double v : w) sw += v;
    CHECK(sw == doctest::Approx(2.0).epsilon(1e-14));
    for (int d = 0; d <= 2 * q - 1; ++d) {
      double s = 0.0;
      for (int i = 0; i < q; ++i) s += w[i] * std::pow(x[i], d);
      const double exact = d % 2 ? 0.0 : 2.0 / (d + 1);
      CHECK(std::abs(s - exact) <= 1e-14 * (1 + q));
    }
  }
  CHECK_THROWS_AS(gauss_legendre(0), InvalidInput);
}

TEST_CASE("QuadratureSpec validation") {
  QuadratureSpec s;
  s.target_rel_tol = 1e-15;
  CHECK_THROWS_AS(s.validate(), InvalidInput);
  s.target_rel_tol = 0.1;
  CHECK_THROWS_AS(s.validate(), InvalidInput);
  s.target_rel_tol = 1e-8;
  s.levels = 0;
  CHECK_THROWS_AS(s.validate(), InvalidInput);
  CHECK(sphere_area(1) == doctest::Approx(2 * M_PI));
  CHECK(sphere_area(2) == doctest::Approx(2 * M_PI * M_PI));
}

TEST_CASE("volume of gauge balls") {
  auto one = [](double, double) { return 1.0; };
  for (int n = 1; n <= 3; ++n) {
    for (double R : {0.5, 1.0, 2.0}) {
      const double exact = ball_volume(n, R);
      const auto tensor = volume_integral_sym(one, n, ReducedDomain::ball(R));
      CHECK(relative_error(tensor.value, exact) < 1e-12);
      QuadratureSpec adaptive;
      adaptive.rule = QuadratureRule::adaptive;
      adaptive.target_rel_tol = 1e-10;
      CHECK(relative_error(volume_integral_sym(one, n, ReducedDomain::ball(R), adaptive).value, exact) < 1e-9);
    }
  }
  const double mc = monte_carlo_volume(1, 1.0, 2000000, 5);
  CHECK(relative_error(volume_integral_sym(one, 1, ReducedDomain::ball(1.0)).value, mc) < 3e-3);
  const double mc2 = monte_carlo_volume(2, 1.0, 2000000, 6);
  CHECK(relative_error(volume_integral_sym(one, 2, ReducedDomain::ball(1.0)).value, mc2) < 5e-3);
  // Perturbed domain: t is stretched by 1/sqrt(1+eps).
  const double eps = 0.3;
  CHECK(relative_error(volume_integral_sym(one, 2, ReducedDomain::perturbed(1.0, eps)).value,
                       ball_volume(2, 1.0) / std::sqrt(1 + eps)) < 1e-12);
}

TEST_CASE("volume integrals: self-consistency and symmetry") {
  auto F4 = [](double r, double) { return r * r; };
  QuadratureSpec coarse;
  coarse.target_rel_tol = 1e-10;
  const auto a = volume_integral_sym(F4, 1, ReducedDomain::ball(1.0), coarse);
  QuadratureSpec fine;
  fine.target_rel_tol = 1e-13;
  const auto b = volume_integral_sym(F4, 1, ReducedDomain::ball(1.0), fine);
  CHECK(a.value > 0.0);
  CHECK(std::abs(a.value - b.value) <= 1e-10 * b.value);
  CHECK(a.error_estimate <= 1e-10 * a.abs_value);

  auto odd = [](double r, double t) { return t * (1.0 + r * r) * std::exp(t); };
  auto oddsym = [&](double r, double t) { return odd(r, t) - odd(r, -t); };
  for (int n = 1; n <= 3; ++n) {
    const auto o = volume_integral_sym(oddsym, n, ReducedDomain::perturbed(1.2, 0.2));
    CHECK(std::abs(o.value) <= 1e-12 * o.abs_value);
  }

  // F_alpha for alpha < 2 is singular at the origin; graded mesh keeps it exact.
  const double alpha = 0.5;
  auto Fa = [alpha](double r, double t) {
    const double rho = std::pow(r * r * r * r + t * t, 0.25);
    return r * r * std::pow(rho, alpha - 4.0);
  };
  // int_{B_R} F_alpha = C R^{Q + alpha - 2}: compare R = 1 and R = 2.
  const double i1 = volume_integral_sym(Fa, 1, ReducedDomain::ball(1.0)).value;
  const double i2 = volume_integral_sym(Fa, 1, ReducedDomain::ball(2.0)).value;
  CHECK(relative_error(i2 / i1, std::pow(2.0, 4 + alpha - 2)) < 1e-12);
}

TEST_CASE("surface integrals against the coarea formula") {
  for (int n = 1; n <= 3; ++n) {
    const int Q = 2 * n + 2;
    const double R = 1.3;
    const ReducedDomain ball = ReducedDomain::ball(R);
    auto one = [](double, double) { return 1.0; };
    auto dh = [](double r, double t) {
      const double rho2 = std::sqrt(r * r * r * r + t * t);
      return rho2 > 0 ? r / std::sqrt(rho2) : 0.0;
    };
    auto dh2 = [](double r, double t) {
      const double rho2 = std::sqrt(r * r * r * r + t * t);
      return rho2 > 0 ? r * r / rho2 : 0.0;
    };
    // |D_H rho| and |D_H rho|^2 are 0-homogeneous: d/dR int_{B_R} = (Q/R) int_{B_R}.
    const double horiz = surface_integral_gauge_sphere(one, n, ball, SurfaceMeasure::horizontal).value;
    CHECK(relative_error(horiz, Q / R * volume_integral_sym(dh, n, ball).value) < 1e-11);
    const double weighted = surface_integral_gauge_sphere(one, n, ball, SurfaceMeasure::weighted).value;
    CHECK(relative_error(weighted, Q / R * volume_integral_sym(dh2, n, ball).value) < 1e-11);

    for (double eps : {0.0, 0.3}) {
      // Fourth-order central difference of R -> int_{rho_eps < R} |D rho_eps|.
      auto V = [&](double radius) {
        return volume_integral_sym(euclidean_gradient(eps), n, ReducedDomain::perturbed(radius, eps)).value;
      };
      const double h = 1e-2;
      const double derivative = (8.0 * (V(R + h) - V(R - h)) - (V(R + 2 * h) - V(R - 2 * h))) / (12.0 * h);
      const double area =
          surface_integral_gauge_sphere(one, n, ReducedDomain::perturbed(R, eps), SurfaceMeasure::euclidean).value;
      CHECK(relative_error(area, derivative) < 1e-7);
    }
  }
  auto odd = [](double r, double t) { return t * std::cos(r); };
  for (auto m : {SurfaceMeasure::euclidean, SurfaceMeasure::horizontal, SurfaceMeasure::weighted}) {
    const auto o = surface_integral_gauge_sphere(odd, 2, ReducedDomain::ball(1.0), m);
    CHECK(std::abs(o.value) <= 1e-13 * o.abs_value);
  }
  QuadratureSpec adaptive;
  adaptive.rule = QuadratureRule::adaptive;
  adaptive.target_rel_tol = 1e-11;
  auto g = [](double r, double t) { return 1.0 + r * t + t * t; };
  for (auto m : {SurfaceMeasure::euclidean, SurfaceMeasure::horizontal, SurfaceMeasure::weighted}) {
    const double a = surface_integral_gauge_sphere(g, 1, ReducedDomain::ball(0.8), m).value;
    const double b = surface_integral_gauge_sphere(g, 1, ReducedDomain::ball(0.8), m, adaptive).value;
    CHECK(relative_error(a, b) < 1e-10);
  }
}

TEST_CASE("beta calibration") {
  for (int n = 1; n <= 3; ++n) {
    const auto c = calibrate_beta(n, 1.0);
    CHECK(c.beta_hat > 0.0);
    CHECK(c.residual <= 1e-8);
    const auto c2 = calibrate_beta(n, 0.37);
    CHECK(relative_error(c.beta_hat, c2.beta_hat) <= 1e-8);
  }
}

TEST_CASE("mean value formulas") {
  const ScalarField one{"1", [](std::span<const Jetd> c) { return Jetd::constant(1.0, c[0].num_vars(), c[0].order()); }};
  for (int n = 1; n <= 2; ++n) {
    const auto m = mean_value_check(one, n, 1.0);
    CHECK(m.pointwise == 1.0);
    CHECK(std::abs(m.solid_avg - 1.0) <= 1e-6);
    CHECK(std::abs(m.surface_avg - 1.0) <= 1e-6);

    const int Q = 2 * n + 2;
    for (double t0 : {2.0, -1.5}) {
      Eigen::VectorXd zero = Eigen::VectorXd::Zero(2 * n);
      const ScalarField gamma = fields::fundamental_solution(Point(zero, t0));
      const auto r = mean_value_check(gamma, n, 1.0);
      CHECK(relative_error(r.pointwise, std::pow(std::abs(t0), (2.0 - Q) / 2.0)) < 1e-14);
      CHECK(relative_error(r.solid_avg, r.pointwise) <= 1e-5);
      CHECK(relative_error(r.surface_avg, r.pointwise) <= 1e-5);
    }
    const auto t = mean_value_check(fields::coordinate_t(), n, 1.0);
    CHECK(std::abs(t.pointwise) <= 1e-6);
    CHECK(std::abs(t.solid_avg) <= 1e-6);
    CHECK(std::abs(t.surface_avg) <= 1e-6);

    const ScalarField t2{"t^2", [](std::span<const Jetd> c) { return c.back() * c.back(); }};
    CHECK_THROWS_AS(mean_value_check(t2, n, 1.0), InvalidInput);
    CHECK_THROWS_AS(mean_value_check(fields::coordinate_x(0), n, 1.0), SymmetryViolation);
  }
}

TEST_CASE("Pohozaev identity for u_alpha") {
  for (int n : {1, 2}) {
    for (double alpha : {0.5, 2.0, 3.0, 4.0}) {
      const auto p = pohozaev_check(alpha, n, 1.0);
      INFO("n=", n, " alpha=", alpha);
      CHECK(p.residual <= 1e-8);
      REQUIRE(p.sub_identities.size() == 3);
      for (const auto& s : p.sub_identities) {
        INFO(s.name);
        CHECK(s.residual <= 1e-8);
      }
      const auto p2 = pohozaev_check(alpha, n, 2.0);
      const double scale = std::pow(2.0, 2 * n + 2 + 2 * alpha - 2);
      CHECK(relative_error(p2.lhs, scale * p.lhs) < 1e-10);
      CHECK(relative_error(p2.rhs, scale * p.rhs) < 1e-10);
    }
  }
  CHECK_THROWS_AS(pohozaev_check(0.0, 1, 1.0), InvalidInput);
  CHECK_THROWS_AS(pohozaev_check(2.0, 1, -1.0), InvalidInput);
}

TEST_CASE("weighted-average identity for u_alpha") {
  for (int n : {1, 2, 3}) {
    for (double alpha : {1.0, 2.0, 4.0}) {
      const auto a = average_identity_check(alpha, n, 1.0);
      CHECK(a.residual <= 1e-10);
      const auto b = average_identity_check(alpha, n, 2.0);
      CHECK(b.residual <= 1e-10);
      CHECK(relative_error(b.rhs / a.rhs, std::pow(2.0, 2 * n + 2 + 2 * alpha - 2)) < 1e-10);
    }
  }
}

TEST_CASE("accuracy error carries the best estimate") {
  QuadratureSpec s;
  s.levels = 1;
  s.target_rel_tol = 1e-13;
  auto spiky = [](double r, double t) { return 1.0 / (1e-4 + (r - 0.5) * (r - 0.5) + t * t); };
  try {
    volume_integral_sym(spiky, 1, ReducedDomain::ball(1.0), s);
    FAIL("expected AccuracyError");
  } catch (const AccuracyError& e) {
    CHECK(std::isfinite(e.best_estimate()));
    CHECK(e.best_estimate() > 0.0);
  }
}
