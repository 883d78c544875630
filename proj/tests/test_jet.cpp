#include <cmath>

#include "doctest.h"
#include "heis/jet.hpp"
#include "test_support.hpp"

using heis::Jetd;

namespace {

std::vector<Jetd> seeds(const std::vector<double>& at, int order) {
  std::vector<Jetd> v;
  const int d = static_cast<int>(at.size());
  for (int i = 0; i < d; ++i) v.push_back(Jetd::variable(at[i], i, d, order));
  return v;
}

}  // namespace

TEST_CASE("layout sizes follow binomial counts") {
  const auto& l = heis::JetLayout::get(9);
  CHECK(l.size(0) == 1);
  CHECK(l.size(1) == 10);
  CHECK(l.size(2) == 55);
  CHECK(l.size(3) == 220);
  CHECK(l.index(2, 5) == l.index(5, 2));
  CHECK(l.index(1, 4, 2) == l.index(4, 2, 1));
  CHECK_THROWS_AS(heis::JetLayout::get(10), heis::InvalidInput);
}

TEST_CASE("integer polynomials of degree <= 3 differentiate bitwise exactly") {
  heis::testing::Rng rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const double a = rng.integer(-5, 5), b = rng.integer(-5, 5), c = rng.integer(-5, 5);
    const std::vector<double> at{static_cast<double>(rng.integer(-4, 4)), static_cast<double>(rng.integer(-4, 4)),
                                 static_cast<double>(rng.integer(-4, 4))};
    const auto s = seeds(at, 3);
    // f = a x^3 + b x y z + c y^2 z + x - 7
    const Jetd f = a * s[0] * s[0] * s[0] + b * s[0] * s[1] * s[2] + c * s[1] * s[1] * s[2] + s[0] - 7.0;
    const double x = at[0], y = at[1], z = at[2];
    CHECK(f.value() == a * x * x * x + b * x * y * z + c * y * y * z + x - 7.0);
    CHECK(f.d(0) == 3 * a * x * x + b * y * z + 1);
    CHECK(f.d(1) == b * x * z + 2 * c * y * z);
    CHECK(f.d(2) == b * x * y + c * y * y);
    CHECK(f.d(0, 0) == 6 * a * x);
    CHECK(f.d(0, 1) == b * z);
    CHECK(f.d(1, 1) == 2 * c * z);
    CHECK(f.d(1, 2) == b * x + 2 * c * y);
    CHECK(f.d(0, 0, 0) == 6 * a);
    CHECK(f.d(0, 1, 2) == b);
    CHECK(f.d(1, 1, 2) == 2 * c);
    CHECK(f.d(2, 2, 2) == 0);
  }
}

TEST_CASE("transcendental compositions agree with finite differences") {
  // g(x, y) = (1 + x^2 + y^2)^{-0.3} * exp(x y) + log(2 + x) ; central
  // differences of the analytic first derivatives give the second/third ones.
  auto g = [](const std::vector<Jetd>& s) {
    return pow(1.0 + s[0] * s[0] + s[1] * s[1], -0.3) * exp(s[0] * s[1]) + log(2.0 + s[0]);
  };
  const std::vector<double> at{0.4, -0.7};
  const Jetd j = g(seeds(at, 3));
  const double h = 1e-4;
  auto d_of = [&](std::vector<double> p, int i, int j2) {
    return g(seeds(p, 2)).d(i, j2);
  };
  for (int i = 0; i < 2; ++i) {
    std::vector<double> plus = at, minus = at;
    plus[i] += h;
    minus[i] -= h;
    for (int a = 0; a < 2; ++a) {
      for (int b = 0; b < 2; ++b) {
        const double fd = (d_of(plus, a, b) - d_of(minus, a, b)) / (2 * h);
        CHECK(j.d(i, a, b) == doctest::Approx(fd).epsilon(1e-6));
      }
      const double fd1 = (g(seeds(plus, 1)).d(a) - g(seeds(minus, 1)).d(a)) / (2 * h);
      CHECK(j.d(i, a) == doctest::Approx(fd1).epsilon(1e-7));
    }
  }
}

TEST_CASE("order-1 evaluation agrees with truncated order-3 evaluation") {
  const std::vector<double> at{0.3, 1.2, -0.4};
  auto f = [](const std::vector<Jetd>& s) { return sqrt(s[0] * s[0] + s[1] * s[1] + s[2] * s[2]) / (1.0 + s[2]); };
  const Jetd j3 = f(seeds(at, 3));
  const Jetd j1 = f(seeds(at, 1));
  const Jetd cut = j3.truncated(1);
  for (int c = 0; c < j1.taylor().size(); ++c) CHECK(cut.taylor()[c] == doctest::Approx(j1.taylor()[c]).epsilon(1e-15));
}

TEST_CASE("derivative jets lower the order consistently") {
  const std::vector<double> at{0.5, -1.5};
  const auto s = seeds(at, 3);
  const Jetd f = pow(s[0] * s[0] + 2.0, 1.5) * s[1];
  const Jetd fx = f.derivative(0);
  CHECK(fx.order() == 2);
  CHECK(fx.value() == doctest::Approx(f.d(0)));
  CHECK(fx.d(0) == doctest::Approx(f.d(0, 0)));
  CHECK(fx.d(1) == doctest::Approx(f.d(0, 1)));
  CHECK(fx.d(0, 1) == doctest::Approx(f.d(0, 0, 1)));
  CHECK(fx.d(0, 0) == doctest::Approx(f.d(0, 0, 0)));
}

TEST_CASE("singular and mismatched operations raise") {
  const auto s = seeds({0.0, 1.0}, 2);
  CHECK_THROWS_AS(pow(s[0], 0.5), heis::SingularPoint);
  CHECK_THROWS_AS(reciprocal(s[0]), heis::SingularPoint);
  CHECK_THROWS_AS(log(-1.0 * s[1]), heis::SingularPoint);
  CHECK_THROWS_AS(s[0] + Jetd::variable(0.0, 0, 3, 2), heis::InvalidInput);
  CHECK_THROWS_AS(Jetd(2, 4), heis::InvalidInput);
  // integer powers accept any sign
  CHECK(ipow(-1.0 * s[1], 3).value() == -1.0);
}
