#include "heis/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <random>

namespace heis {

const std::pair<std::vector<double>, std::vector<double>>& gauss_legendre(int q) {
  if (q < 1 || q > 4096) throw InvalidInput("gauss_legendre: node count out of range");
  static std::mutex mutex;
  static std::map<int, std::pair<std::vector<double>, std::vector<double>>> cache;
  std::lock_guard<std::mutex> lock(mutex);
  auto it = cache.find(q);
  if (it != cache.end()) return it->second;

  std::vector<double> x(q), w(q);
  for (int i = 0; i < (q + 1) / 2; ++i) {
    double z = std::cos(M_PI * (i + 0.75) / (q + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = z;
      for (int k = 2; k <= q; ++k) {
        const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      if (q == 1) p0 = 1.0;
      dp = q * (z * p1 - p0) / (z * z - 1.0);
      const double dz = p1 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    x[i] = -z;
    x[q - 1 - i] = z;
    w[i] = w[q - 1 - i] = 2.0 / ((1.0 - z * z) * dp * dp);
  }
  if (q % 2 == 1) x[q / 2] = 0.0;
  return cache.emplace(q, std::make_pair(std::move(x), std::move(w))).first->second;
}

void QuadratureSpec::validate() const {
  if (!(target_rel_tol > 1e-14 && target_rel_tol < 1e-2)) {
    throw InvalidInput("target_rel_tol must lie in (1e-14, 1e-2)");
  }
  if (levels < 1 || levels > 10) throw InvalidInput("quadrature levels must lie in 1..10");
}

double sphere_area(int n) {
  if (n < 1) throw InvalidInput("sphere_area needs n >= 1");
  return 2.0 * std::pow(M_PI, n) / std::tgamma(static_cast<double>(n));
}

namespace {

constexpr int kGradedLevels = 40;

// Smoothstep map u in [0,1] -> [0,1] with vanishing derivative at both ends;
// removes square-root behaviour at the endpoints of the angular variable.
inline double smoothstep(double u) { return u * u * (3.0 - 2.0 * u); }
inline double smoothstep_jac(double u) { return 6.0 * u * (1.0 - u); }

// Radial panels [0, R 2^-40], ..., [R/4, R/2], [R/2, R].
std::vector<std::pair<double, double>> graded_panels(double R) {
  std::vector<std::pair<double, double>> p;
  p.emplace_back(0.0, std::ldexp(R, -kGradedLevels));
  for (int k = kGradedLevels - 1; k >= 0; --k) p.emplace_back(std::ldexp(R, -(k + 1)), std::ldexp(R, -k));
  return p;
}

struct Sum {
  double value = 0.0;
  double abs = 0.0;
  long evals = 0;
};

// Tensor rule for h(rho, phi) over [0,R] x [0,pi], phi = pi * smoothstep(u),
// two u-panels, q nodes per panel in both directions.
template <typename H>
Sum tensor_2d(const H& h, double R, int q) {
  const auto& [x, w] = gauss_legendre(q);
  Sum s;
  std::vector<double> phi, wphi;
  for (double lo : {0.0, 0.5}) {
    for (int j = 0; j < q; ++j) {
      const double u = lo + 0.25 * (x[j] + 1.0);
      phi.push_back(M_PI * smoothstep(u));
      wphi.push_back(0.25 * w[j] * M_PI * smoothstep_jac(u));
    }
  }
  for (const auto& [a, b] : graded_panels(R)) {
    const double half = 0.5 * (b - a);
    for (int i = 0; i < q; ++i) {
      const double rho = a + half * (x[i] + 1.0);
      const double wr = half * w[i];
      for (std::size_t j = 0; j < phi.size(); ++j) {
        const double v = h(rho, phi[j]) * wr * wphi[j];
        s.value += v;
        s.abs += std::abs(v);
      }
    }
  }
  s.evals = static_cast<long>(q) * q * 2 * (kGradedLevels + 1);
  return s;
}

template <typename G>
Sum tensor_1d(const G& g, int q) {
  const auto& [x, w] = gauss_legendre(q);
  Sum s;
  for (double lo : {0.0, 0.5}) {
    for (int j = 0; j < q; ++j) {
      const double u = lo + 0.25 * (x[j] + 1.0);
      const double v = g(M_PI * smoothstep(u)) * 0.25 * w[j] * M_PI * smoothstep_jac(u);
      s.value += v;
      s.abs += std::abs(v);
    }
  }
  s.evals = 2L * q;
  return s;
}

template <typename Rule>
QuadratureResult tensor_levels(const Rule& rule, const QuadratureSpec& spec, const char* what) {
  Sum prev = rule(6);
  long evals = prev.evals;
  for (int level = 1; level <= spec.levels; ++level) {
    const Sum cur = rule(6 << level);
    evals += cur.evals;
    const double diff = std::abs(cur.value - prev.value);
    if (diff <= spec.target_rel_tol * std::max(std::abs(cur.value), cur.abs)) {
      return {cur.value, diff, cur.abs, evals};
    }
    prev = cur;
  }
  throw AccuracyError(std::string(what) + ": tensor rule did not converge", prev.value);
}

// Adaptive Gauss-Legendre bisection on [a, b].
struct Adaptive {
  double value = 0.0;
  double error = 0.0;
  double abs = 0.0;
  long evals = 0;
  bool ok = true;
};

template <typename F>
double gl8(const F& f, double a, double b, double* abs_out) {
  const auto& [x, w] = gauss_legendre(8);
  const double half = 0.5 * (b - a);
  double s = 0.0, sa = 0.0;
  for (int i = 0; i < 8; ++i) {
    const double v = w[i] * f(a + half * (x[i] + 1.0));
    s += v;
    sa += std::abs(v);
  }
  if (abs_out) *abs_out = sa * half;
  return s * half;
}

template <typename F>
void adapt(const F& f, double a, double b, double whole, double tol, int depth, Adaptive& out) {
  const double m = 0.5 * (a + b);
  double al = 0.0, ar = 0.0;
  const double left = gl8(f, a, m, &al);
  const double right = gl8(f, m, b, &ar);
  out.evals += 16;
  const double diff = std::abs(left + right - whole);
  if (diff <= tol || depth == 0) {
    if (diff > tol) out.ok = false;
    out.value += left + right;
    out.error += diff;
    out.abs += al + ar;
    return;
  }
  adapt(f, a, m, left, 0.5 * tol, depth - 1, out);
  adapt(f, m, b, right, 0.5 * tol, depth - 1, out);
}

template <typename F>
Adaptive adaptive_1d(const F& f, double a, double b, double abs_tol, int depth) {
  Adaptive out;
  const double whole = gl8(f, a, b, nullptr);
  out.evals = 8;
  adapt(f, a, b, whole, abs_tol, depth, out);
  return out;
}

int adaptive_depth(const QuadratureSpec& spec) { return 5 * spec.levels; }

template <typename H>
QuadratureResult adaptive_2d(const H& h, double R, const QuadratureSpec& spec, const char* what) {
  // Scale for the absolute tolerance from a coarse tensor pass.
  const Sum coarse = tensor_2d(h, R, 12);
  const double abs_tol = spec.target_rel_tol * std::max(coarse.abs, 1e-300);
  const int depth = adaptive_depth(spec);
  bool ok = true;
  long evals = coarse.evals;
  auto inner = [&](double rho) {
    auto g = [&](double u) { return h(rho, M_PI * smoothstep(u)) * M_PI * smoothstep_jac(u); };
    const Adaptive r = adaptive_1d(g, 0.0, 1.0, 1e-2 * abs_tol / R, depth);
    ok = ok && r.ok;
    evals += r.evals;
    return r.value;
  };
  QuadratureResult res;
  for (const auto& [a, b] : graded_panels(R)) {
    const Adaptive r = adaptive_1d(inner, a, b, abs_tol * (b - a) / R, depth);
    ok = ok && r.ok;
    res.value += r.value;
    res.error_estimate += r.error;
    res.abs_value += r.abs;
  }
  res.evaluations = evals;
  if (!ok) throw AccuracyError(std::string(what) + ": adaptive rule hit its depth cap", res.value);
  return res;
}

template <typename G>
QuadratureResult adaptive_surface(const G& g, const QuadratureSpec& spec, const char* what) {
  auto f = [&](double u) { return g(M_PI * smoothstep(u)) * M_PI * smoothstep_jac(u); };
  const Sum coarse = tensor_1d(g, 24);
  const Adaptive r = adaptive_1d(f, 0.0, 1.0, spec.target_rel_tol * std::max(coarse.abs, 1e-300), adaptive_depth(spec));
  if (!r.ok) throw AccuracyError(std::string(what) + ": adaptive rule hit its depth cap", r.value);
  return {r.value, r.error, r.abs, r.evals + coarse.evals};
}

void check_n(int n) {
  if (n < 1) throw InvalidInput("n must be >= 1");
}

}  // namespace

QuadratureResult volume_integral_sym(const RadialFunction& f, int n, const ReducedDomain& domain,
                                     const QuadratureSpec& spec) {
  check_n(n);
  spec.validate();
  const double half_omega = 0.5 * sphere_area(n);
  const double k = domain.k();
  // d xi = (omega/2) sigma^{n-1} d sigma dt and d sigma dt = (2 rho^3 / k) d rho d phi.
  auto h = [&](double rho, double phi) {
    const double rho2 = rho * rho;
    const double sigma = rho2 * std::sin(phi);
    const double t = -rho2 * std::cos(phi) / k;
    return f(std::sqrt(sigma), t) * std::pow(sigma, n - 1) * (2.0 * rho2 * rho / k) * half_omega;
  };
  if (spec.rule == QuadratureRule::adaptive) return adaptive_2d(h, domain.R, spec, "volume integral");
  return tensor_levels([&](int q) { return tensor_2d(h, domain.R, q); }, spec, "volume integral");
}

QuadratureResult surface_integral_gauge_sphere(const RadialFunction& g, int n, const ReducedDomain& domain,
                                               SurfaceMeasure measure, const QuadratureSpec& spec) {
  check_n(n);
  spec.validate();
  const double omega = sphere_area(n);
  const double R = domain.R;
  const double k = domain.k();
  const double e1 = 1.0 + domain.epsilon;
  const double R3 = R * R * R;
  auto element = [&](double phi) {
    const double sphi = std::sin(phi);
    const double r = R * std::sqrt(sphi);
    const double t = R * R / k * std::cos(phi);
    const double r2 = r * r;
    // omega R^{2n-4} sin^{n-1}(phi) (R^2/k) is common to all three measures.
    const double base = omega * std::pow(R, 2 * n - 4) * std::pow(sphi, n - 1) * (R * R / k);
    double m = 0.0;
    switch (measure) {
      case SurfaceMeasure::euclidean:
        m = std::sqrt(r2 * r2 * r2 + 0.25 * e1 * e1 * t * t);
        break;
      case SurfaceMeasure::horizontal:
        m = r * std::sqrt(r2 * r2 + e1 * e1 * t * t);
        break;
      case SurfaceMeasure::weighted:
        m = r2 * (r2 * r2 + e1 * e1 * t * t) / R3;
        break;
    }
    return g(r, t) * base * m;
  };
  if (spec.rule == QuadratureRule::adaptive) return adaptive_surface(element, spec, "surface integral");
  return tensor_levels([&](int q) { return tensor_1d(element, q); }, spec, "surface integral");
}

namespace {

double gauge_of(double r, double t) { return std::pow(r * r * r * r + t * t, 0.25); }

// |D_H rho|^2 = |x|^2 / rho^2.
double dh_rho_sq(double r, double t) {
  const double rho2 = std::sqrt(r * r * r * r + t * t);
  return rho2 > 0.0 ? r * r / rho2 : 0.0;
}

double beta_at(int n, double R, const QuadratureSpec& spec) {
  const int Q = 2 * n + 2;
  const double I = volume_integral_sym(dh_rho_sq, n, ReducedDomain::ball(R), spec).value;
  return std::pow(R, Q) / (Q * (Q - 2.0) * I);
}

double identity_residual(double lhs, double rhs, double terms) {
  return std::abs(lhs - rhs) / std::max({std::abs(lhs), std::abs(rhs), terms, 1e-300});
}

}  // namespace

MeanValueCalibration calibrate_beta(int n, double R, const QuadratureSpec& spec) {
  check_n(n);
  if (!(R > 0.0)) throw InvalidInput("calibrate_beta: R must be positive");
  MeanValueCalibration c;
  c.n = n;
  c.R = R;
  c.beta_hat = beta_at(n, R, spec);
  c.residual = std::abs(beta_at(n, 2.0 * R, spec) - c.beta_hat) / c.beta_hat;
  return c;
}

MeanValueResult mean_value_check(const ScalarField& h, int n, double R, const QuadratureSpec& spec) {
  check_n(n);
  if (!(R > 0.0)) throw InvalidInput("mean_value_check: R must be positive");
  const int Q = 2 * n + 2;

  std::mt19937_64 rng(20240917);
  auto uni = [&](double lo, double hi) { return lo + (hi - lo) * static_cast<double>(rng() >> 11) * 0x1.0p-53; };
  for (int i = 0; i < 100; ++i) {
    Eigen::VectorXd x(2 * n);
    for (int j = 0; j < 2 * n; ++j) x[j] = uni(-1.0, 1.0);
    Point p(x, uni(-1.0, 1.0));
    p = dilate(R * uni(0.05, 0.95) / gauge(p), p);
    const double lap = sublaplacian(h, p);
    if (std::abs(lap) > 1e-9 * sublaplacian_scale(h, p)) {
      throw InvalidInput("mean_value_check: '" + h.name + "' is not Delta_H-harmonic in the ball");
    }
    Eigen::VectorXd axis = Eigen::VectorXd::Zero(2 * n);
    axis[0] = std::sqrt(p.x().squaredNorm());
    const double a = evaluate(h, p, 0).value();
    const double b = evaluate(h, Point(axis, p.t()), 0).value();
    if (relative_error(a, b, 1e-300) > 1e-12 && std::abs(a - b) > 1e-14) {
      throw SymmetryViolation("mean_value_check: '" + h.name + "' is not cylindrically symmetric");
    }
  }

  Eigen::VectorXd x = Eigen::VectorXd::Zero(2 * n);
  auto hbar = [&](double r, double t) {
    x[0] = r;
    return evaluate(h, Point(x, t), 0).value();
  };
  MeanValueResult out;
  out.beta = calibrate_beta(n, R, spec).beta_hat;
  out.pointwise = evaluate(h, Point::origin(n), 0).value();
  const ReducedDomain ball = ReducedDomain::ball(R);
  const double solid =
      volume_integral_sym([&](double r, double t) { return hbar(r, t) * dh_rho_sq(r, t); }, n, ball, spec).value;
  out.solid_avg = Q * (Q - 2.0) * out.beta / std::pow(R, Q) * solid;
  const double surf = surface_integral_gauge_sphere(hbar, n, ball, SurfaceMeasure::weighted, spec).value;
  out.surface_avg = (Q - 2.0) * out.beta / std::pow(R, Q - 1) * surf;
  return out;
}

PohozaevResult pohozaev_check(double alpha, int n, double R, const QuadratureSpec& spec) {
  check_n(n);
  if (!(alpha > 0.0)) throw InvalidInput("pohozaev_check: alpha must be positive");
  if (!(R > 0.0)) throw InvalidInput("pohozaev_check: R must be positive");
  const double Q = 2.0 * n + 2.0;
  const double Ra = std::pow(R, alpha);
  const ReducedDomain ball = ReducedDomain::ball(R);
  auto F = [alpha](double r, double t) {
    const double rho = gauge_of(r, t);
    return rho > 0.0 ? r * r * std::pow(rho, alpha - 4.0) : 0.0;
  };
  auto u = [alpha, Ra](double r, double t) { return (std::pow(gauge_of(r, t), alpha) - Ra) / alpha; };
  // Z u_alpha = rho^alpha.
  auto Zu = [alpha](double r, double t) { return std::pow(gauge_of(r, t), alpha); };

  const double I_F = volume_integral_sym(F, n, ball, spec).value;
  const double I_uF = volume_integral_sym([&](double r, double t) { return u(r, t) * F(r, t); }, n, ball, spec).value;
  const double I_ZuF =
      volume_integral_sym([&](double r, double t) { return Zu(r, t) * F(r, t); }, n, ball, spec).value;
  // On the sphere Z u = R^alpha and |D_H u| = rho^{alpha-1} |x| / rho = R^{alpha-2} |x|.
  const double B = surface_integral_gauge_sphere(
                       [&](double r, double) { return Ra * std::pow(R, alpha - 2.0) * r; }, n, ball,
                       SurfaceMeasure::horizontal, spec)
                       .value;

  PohozaevResult out;
  out.lhs = (Q + 2.0 * alpha - 2.0) * I_uF;
  out.rhs = -Ra * I_F;
  out.residual = identity_residual(out.lhs, out.rhs, 0.0);

  const double q1 = Q + alpha - 2.0;
  IntegralIdentity prima{"prima", alpha * q1 * I_uF - q1 * I_ZuF, -B, 0.0};
  prima.residual = identity_residual(prima.lhs, prima.rhs, std::abs(alpha * q1 * I_uF) + std::abs(q1 * I_ZuF));
  IntegralIdentity seconda{"seconda", B, Ra * q1 * I_F, 0.0};
  seconda.residual = identity_residual(seconda.lhs, seconda.rhs, 0.0);
  IntegralIdentity terza{"terza", (alpha - 2.0) * I_uF, -Q * I_uF - I_ZuF, 0.0};
  terza.residual = identity_residual(terza.lhs, terza.rhs, std::abs(Q * I_uF) + std::abs(I_ZuF));
  out.sub_identities = {prima, seconda, terza};
  return out;
}

AverageResult average_identity_check(double alpha, int n, double R, const QuadratureSpec& spec) {
  check_n(n);
  if (!(alpha > 0.0)) throw InvalidInput("average_identity_check: alpha must be positive");
  if (!(R > 0.0)) throw InvalidInput("average_identity_check: R must be positive");
  const double Ra = std::pow(R, alpha);
  const ReducedDomain ball = ReducedDomain::ball(R);
  auto F = [alpha](double r, double t) {
    const double rho = gauge_of(r, t);
    return rho > 0.0 ? r * r * std::pow(rho, alpha - 4.0) : 0.0;
  };
  // v = |D_H u|^2 / F - alpha u with |D_H u|^2 = rho^{2 alpha - 4} |x|^2.
  auto vF = [&](double r, double t) {
    const double rho = gauge_of(r, t);
    if (!(rho > 0.0)) return 0.0;
    const double f = F(r, t);
    const double grad2 = std::pow(rho, 2.0 * alpha - 4.0) * r * r;
    const double u = (std::pow(rho, alpha) - Ra) / alpha;
    return f > 0.0 ? grad2 - alpha * u * f : 0.0;
  };
  AverageResult out;
  out.lhs = volume_integral_sym(vF, n, ball, spec).value;
  out.rhs = Ra * volume_integral_sym(F, n, ball, spec).value;
  out.residual = identity_residual(out.lhs, out.rhs, 0.0);
  return out;
}

}  // namespace heis
