#include "heis/reduced.hpp"

#include <algorithm>
#include <cmath>

namespace heis {

ReducedPoint::ReducedPoint(Eigen::VectorXd s, double t) : s_(std::move(s)), t_(t) {
  if (s_.size() < 1) throw InvalidInput("reduced point needs n >= 1");
  for (Eigen::Index j = 0; j < s_.size(); ++j) {
    if (!(s_[j] >= 0.0)) throw InvalidInput("reduced point needs s_j >= 0");
  }
  sigma_ = s_.sum();
}

Point ReducedPoint::lift(std::span<const double> angles) const {
  const int m = n();
  Eigen::VectorXd x(2 * m);
  for (int j = 0; j < m; ++j) {
    const double r = std::sqrt(s_[j]);
    const double th = angles.empty() ? 0.0 : angles[j];
    x[j] = r * std::cos(th);
    x[m + j] = r * std::sin(th);
  }
  return Point(x, t_);
}

std::vector<Jetd> seed_reduced(const ReducedPoint& p, int order) {
  const int d = p.n() + 1;
  std::vector<Jetd> v;
  v.reserve(d);
  for (int j = 0; j < p.n(); ++j) v.push_back(Jetd::variable(p.s()[j], j, d, order));
  v.push_back(Jetd::variable(p.t(), p.n(), d, order));
  return v;
}

Jetd evaluate(const ReducedField& U, const ReducedPoint& p, int order) {
  const auto vars = seed_reduced(p, order);
  return U(vars);
}

ScalarField to_full_space(const ReducedField& U, int n) {
  return {U.name, [U, n](std::span<const Jetd> c) {
            if (static_cast<int>(c.size()) != 2 * n + 1) throw InvalidInput("to_full_space: dimension mismatch");
            std::vector<Jetd> vars;
            vars.reserve(n + 1);
            for (int j = 0; j < n; ++j) vars.push_back(c[j] * c[j] + c[n + j] * c[n + j]);
            vars.push_back(c[2 * n]);
            return U(vars);
          }};
}

namespace {

Jetd lift_with_angles(const ScalarField& f, const std::vector<Jetd>& vars, int n, std::span<const double> angles) {
  std::vector<Jetd> coords;
  coords.reserve(2 * n + 1);
  std::vector<Jetd> roots;
  for (int j = 0; j < n; ++j) roots.push_back(sqrt(vars[j]));
  for (int j = 0; j < n; ++j) coords.push_back(roots[j] * std::cos(angles[j]));
  for (int j = 0; j < n; ++j) coords.push_back(roots[j] * std::sin(angles[j]));
  coords.push_back(vars[n]);
  return f(coords);
}

}  // namespace

Jetd lift_to_reduced(const ScalarField& f, const ReducedPoint& p, int order) {
  const int n = p.n();
  for (int j = 0; j < n; ++j) {
    if (!(p.s()[j] > 0.0)) throw SingularPoint("lift_to_reduced needs every s_j > 0 (sqrt chart)");
  }
  const auto vars = seed_reduced(p, order);
  const std::vector<double> zero(n, 0.0);
  std::vector<double> rotated(n);
  for (int j = 0; j < n; ++j) rotated[j] = 0.9 + 0.37 * j;
  const Jetd a = lift_with_angles(f, vars, n, zero);
  const Jetd b = lift_with_angles(f, vars, n, rotated);
  const double scale = std::max(a.taylor().cwiseAbs().maxCoeff(), 1e-300);
  if ((a.taylor() - b.taylor()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
    throw SymmetryViolation("field '" + f.name + "' is not toric symmetric at the sampled point");
  }
  return a;
}

double reduced_operator(const Jetd& U, const ReducedPoint& p) {
  const int n = p.n();
  double out = p.sigma() * U.d(n, n);
  for (int j = 0; j < n; ++j) out += p.s()[j] * U.d(j, j) + U.d(j);
  return out;
}

double reduced_weight(double alpha, const ReducedPoint& p) {
  if (alpha == 4.0) return p.sigma();
  return p.sigma() * std::pow(p.rho4(), (alpha - 4.0) / 4.0);
}

namespace {

void require_off_axis(const ReducedPoint& p, const char* what) {
  if (!(p.sigma() > 0.0)) throw SingularPoint(std::string(what) + " is singular on the t-axis (sigma == 0)");
}

}  // namespace

MatrixBundle build_matrix_bundle(const Jetd& U, const ReducedPoint& p, double alpha) {
  require_off_axis(p, "matrix bundle");
  if (U.order() < 2) throw InvalidInput("matrix bundle needs an order >= 2 jet");
  const int n = p.n();
  const int N = n + 1;
  const auto& s = p.s();
  const double sigma = p.sigma();
  const double t = p.t();
  const double Ut = U.d(n);

  MatrixBundle b;
  b.n = n;
  b.D2 = Eigen::MatrixXd::Zero(N, N);
  b.E1 = Eigen::MatrixXd::Zero(N, N);
  b.E2 = Eigen::MatrixXd::Zero(N, N);
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      const double rs = std::sqrt(s[i] * s[j]);
      const double avg = 0.5 * (U.d(i) + U.d(j));
      b.D2(i, j) = b.D2(j, i) = rs * U.d(i, j);
      b.E1(i, j) = b.E1(j, i) = rs / sigma * avg - (i == j ? 0.5 * U.d(i) : 0.0);
      b.E2(i, j) = b.E2(j, i) = rs * avg;
    }
    b.D2(i, n) = b.D2(n, i) = std::sqrt(s[i] * sigma) * U.d(i, n);
    b.E2(i, n) = b.E2(n, i) = std::sqrt(s[i] / sigma) * 0.5 * (sigma * Ut + t * U.d(i));
  }
  double weighted = 0.0;
  for (int j = 0; j < n; ++j) weighted += s[j] * U.d(j);
  b.D2(n, n) = sigma * U.d(n, n);
  b.E1(n, n) = weighted / (2.0 * sigma);
  b.E2(n, n) = t * Ut;

  const double kappa = (2.0 * sigma / p.rho4()) * (alpha - 4.0) / 4.0;
  b.D1 = b.E1 + kappa * b.E2;
  b.M = b.D2 - b.D1;
  b.trace_M_direct = b.M.trace();

  double formula = reduced_operator(U, p) - kappa * t * Ut;
  for (int j = 0; j < n; ++j) formula += U.d(j) * (-0.5 - 1.5 * s[j] / sigma - kappa * s[j]);
  b.trace_M_formula = formula;
  return b;
}

double frobenius_deficit(const Eigen::MatrixXd& M) {
  // ||M - (tr M / N) I||^2: equal to ||M||^2 - tr^2 / N, without the cancellation.
  const double mean = M.trace() / static_cast<double>(M.rows());
  return (M - mean * Eigen::MatrixXd::Identity(M.rows(), M.cols())).squaredNorm();
}

double pfunction_g(const Jetd& U, const ReducedPoint& p, double alpha) {
  require_off_axis(p, "P-function");
  const int n = p.n();
  double q = U.d(n) * U.d(n);
  for (int j = 0; j < n; ++j) q += p.s()[j] / p.sigma() * U.d(j) * U.d(j);
  return std::pow(p.rho4(), (4.0 - alpha) / 4.0) * q;
}

double pfunction(const Jetd& U, const ReducedPoint& p, double alpha) {
  return 4.0 * pfunction_g(U, p, alpha) - alpha * U.value();
}

Jetd pfunction_jet(const Jetd& U, const ReducedPoint& p, double alpha) {
  require_off_axis(p, "P-function");
  if (U.order() < 1) throw InvalidInput("P-function jet needs an order >= 1 jet of U");
  const int n = p.n();
  const int order = U.order() - 1;
  const auto vars = seed_reduced(p, order);
  Jetd sigma = vars[0];
  for (int j = 1; j < n; ++j) sigma += vars[j];
  const Jetd& t = vars[n];
  const Jetd Ut = U.derivative(n);
  Jetd q = Ut * Ut;
  const Jetd inv_sigma = reciprocal(sigma);
  for (int j = 0; j < n; ++j) {
    const Jetd Uj = U.derivative(j);
    q += vars[j] * inv_sigma * Uj * Uj;
  }
  const Jetd rho4 = sigma * sigma + t * t;
  const Jetd factor = alpha == 4.0 ? Jetd::constant(1.0, n + 1, order) : pow(rho4, (4.0 - alpha) / 4.0);
  return 4.0 * factor * q - alpha * U.truncated(order);
}

double lhs_via_jets(const Jetd& U, const ReducedPoint& p, double alpha) {
  if (U.order() != 3) throw InvalidInput("lhs_via_jets needs an order-3 jet of U");
  const Jetd v = pfunction_jet(U, p, alpha);
  return reduced_weight(alpha, p) / 4.0 * reduced_operator(v, p);
}

std::string to_string(SumOfSquaresVariant v) {
  switch (v) {
    case SumOfSquaresVariant::toric_general: return "toric_general";
    case SumOfSquaresVariant::toric_n1: return "toric_n1";
    case SumOfSquaresVariant::toric_n2: return "toric_n2";
    case SumOfSquaresVariant::cylindrical: return "cylindrical";
  }
  return "unknown";
}

double SumOfSquares::term(const std::string& name) const {
  for (const auto& [k, v] : terms)
    if (k == name) return v;
  throw InvalidInput("no sum-of-squares term named '" + name + "'");
}

namespace {

// Quantities shared by every transcription.
struct Common {
  int n;
  double a;       // alpha
  double sigma;   // |x|^2
  double t;
  double rho4;    // sigma^2 + t^2
  double rho8;
  double F;       // F_alpha
  double rho_a;   // rho^alpha
  Eigen::VectorXd s;
  Eigen::VectorXd Uj;
  double Ut;
};

Common common(const Jetd& U, const ReducedPoint& p, double alpha) {
  Common c;
  c.n = p.n();
  c.a = alpha;
  c.sigma = p.sigma();
  c.t = p.t();
  c.rho4 = p.rho4();
  c.rho8 = c.rho4 * c.rho4;
  c.F = reduced_weight(alpha, p);
  c.rho_a = std::pow(c.rho4, alpha / 4.0);
  c.s = p.s();
  c.Uj.resize(c.n);
  for (int j = 0; j < c.n; ++j) c.Uj[j] = U.d(j);
  c.Ut = U.d(c.n);
  return c;
}

double sq(double x) { return x * x; }

SumOfSquares toric_general(const Common& c, const MatrixBundle& b) {
  const int n = c.n;
  const double a = c.a;
  const double n1 = n + 1.0;
  SumOfSquares out;
  out.terms.emplace_back("matrix_deficit", 2.0 * frobenius_deficit(b.M));
  out.terms.emplace_back("mean_gradient",
                         (2.0 * n + a) / (n * n * n1) * sq(c.Uj.sum() - 0.5 * n * c.F));
  out.terms.emplace_back("pohozaev_square", (4.0 - a) * (2.0 * n + a) * (n - 1.0) / (4.0 * n + 4.0) *
                                                sq(c.sigma) / c.rho8 *
                                                sq(c.s.dot(c.Uj) + c.t * c.Ut - 0.5 * c.rho_a));
  double simplex = 0.0;
  for (int j = 0; j < n; ++j) simplex += (1.0 - n * c.s[j] / c.sigma) * sq(c.Uj[j] - 0.5 * c.F);
  out.terms.emplace_back("simplex_weighted", (2.0 * n + a) * (n - 2.0) / (2.0 * n * n1) * simplex);
  double mixed = 0.0;
  for (int j = 0; j < n; ++j) {
    const double w = (n - 1.0) * (2.0 * n + 4.0) / n1 * c.sigma * c.s[j] / c.rho8 +
                     (4.0 - 2.0 * n) / n1 * c.s[j] / (c.sigma * c.rho4);
    mixed += w * sq(c.sigma * c.Ut - c.t * c.Uj[j]);
  }
  out.terms.emplace_back("mixed_gradient", (4.0 - a) / 4.0 * mixed);
  double pair = 0.0;
  double bracket = 0.0;
  const double nn = static_cast<double>(n) * n;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      pair += sq(c.t * c.Uj[i] + c.t * c.Uj[j] - 2.0 * c.sigma * c.Ut);
      const double si = c.s[i], sj = c.s[j];
      const double coeff = (4.0 - a) * sq(n - 2.0) / (8.0 * nn * (nn - 1.0)) +
                           (8.0 + 4.0 * n - nn) / (4.0 * nn * n1) +
                           (3.0 * n - 6.0) / (4.0 * n + 4.0) * si * sj / sq(c.sigma) -
                           3.0 / (4.0 * n + 4.0) * (si + sj) / c.sigma +
                           (4.0 - a) / (4.0 * n + 4.0) * c.sigma * (si + sj) / c.rho4 +
                           (4.0 - a) * (4.0 - 2.0 * n) / (4.0 * n + 4.0) * si * sj / c.rho4 -
                           (4.0 - a) / (8.0 * (nn - 1.0)) * sq(c.sigma) / c.rho4 +
                           (4.0 - a) * (n - 1.0) * (n + 2.0) / (4.0 * n + 4.0) * sq(c.sigma) * si * sj / c.rho8;
      bracket += sq(c.Uj[i] - c.Uj[j]) * coeff;
    }
  }
  out.terms.emplace_back("pair_gradient", (4.0 - a) / (8.0 * (nn - 1.0)) / c.rho4 * pair);
  out.terms.emplace_back("difference_bracket", bracket);
  return out;
}

SumOfSquares toric_n1(const Common& c, const MatrixBundle& b) {
  const double a = c.a;
  SumOfSquares out;
  out.terms.emplace_back("matrix_deficit", 2.0 * frobenius_deficit(b.M));
  out.terms.emplace_back("mean_gradient", (2.0 + a) / 2.0 * sq(c.Uj[0] - 0.5 * c.F));
  out.terms.emplace_back("mixed_gradient", (4.0 - a) / 2.0 / c.rho4 * sq(c.sigma * c.Ut - c.t * c.Uj[0]));
  return out;
}

SumOfSquares toric_n2(const Common& c, const MatrixBundle& b) {
  const double a = c.a;
  const double U1 = c.Uj[0], U2 = c.Uj[1];
  const double x4 = sq(c.sigma);
  SumOfSquares out;
  out.terms.emplace_back("matrix_deficit", 2.0 * frobenius_deficit(b.M));
  out.terms.emplace_back("mean_gradient", (4.0 + a) / 12.0 * sq(U1 + U2 - c.F));
  out.terms.emplace_back("pohozaev_square", (4.0 - a) * (4.0 + a) / 12.0 * x4 / c.rho8 *
                                                sq(c.s[0] * U1 + c.s[1] * U2 + c.t * c.Ut - 0.5 * c.rho_a));
  double mixed = 0.0;
  for (int j = 0; j < 2; ++j) {
    mixed += 8.0 * c.sigma * c.s[j] / (3.0 * c.rho8) * sq(c.sigma * c.Ut - c.t * c.Uj[j]);
  }
  out.terms.emplace_back("mixed_gradient", (4.0 - a) / 4.0 * mixed);
  out.terms.emplace_back("pair_gradient", (4.0 - a) / (12.0 * c.rho4) * sq(c.t * U1 + c.t * U2 - 2.0 * c.sigma * c.Ut));
  out.terms.emplace_back("difference_bracket",
                         2.0 * sq(U1 - U2) *
                             ((4.0 - a) / 24.0 * x4 / c.rho4 + (4.0 - a) / 3.0 * x4 * c.s[0] * c.s[1] / c.rho8));
  return out;
}

SumOfSquares cylindrical(const Common& c, const MatrixBundle& b) {
  const int n = c.n;
  const double a = c.a;
  const double n1 = n + 1.0;
  const double Ws = c.Uj.mean();
  const double Wt = c.Ut;
  const double x4 = sq(c.sigma);
  SumOfSquares out;
  out.terms.emplace_back("matrix_deficit", 2.0 * frobenius_deficit(b.M));
  out.terms.emplace_back("mean_gradient", (2.0 * n + a) / n1 * sq(Ws - 0.5 * c.F));
  out.terms.emplace_back("pohozaev_square", (4.0 - a) * (2.0 * n + a) * (n - 1.0) / (4.0 * n + 4.0) * x4 / c.rho8 *
                                                sq(c.sigma * Ws + c.t * Wt - 0.5 * c.rho_a));
  out.terms.emplace_back("mixed_gradient", (4.0 - a) / (4.0 * c.rho4) * sq(c.sigma * Wt - c.t * Ws) *
                                               ((n - 1.0) * (2.0 * n + 4.0) / n1 * x4 / c.rho4 + 4.0 / n1));
  return out;
}

void check_cylindrical_structure(const Jetd& U, int n) {
  double scale1 = 0.0, scale2 = 0.0;
  for (int j = 0; j < n; ++j) {
    scale1 = std::max(scale1, std::abs(U.d(j)));
    scale2 = std::max(scale2, std::abs(U.d(j, j)));
  }
  for (int j = 1; j < n; ++j) {
    if (std::abs(U.d(j) - U.d(0)) > 1e-12 * scale1 || std::abs(U.d(j, j) - U.d(0, 0)) > 1e-12 * scale2) {
      throw InvalidInput("cylindrical variant needs U_j and U_jj independent of j");
    }
  }
}

}  // namespace

SumOfSquares rhs_sum_of_squares(SumOfSquaresVariant variant, const Jetd& U, const ReducedPoint& p, double alpha) {
  const int n = p.n();
  switch (variant) {
    case SumOfSquaresVariant::toric_general:
      if (n < 2) throw InvalidInput("toric_general sum of squares needs n >= 2");
      break;
    case SumOfSquaresVariant::toric_n1:
      if (n != 1) throw InvalidInput("toric_n1 sum of squares needs n == 1");
      break;
    case SumOfSquaresVariant::toric_n2:
      if (n != 2) throw InvalidInput("toric_n2 sum of squares needs n == 2");
      break;
    case SumOfSquaresVariant::cylindrical:
      check_cylindrical_structure(U, n);
      break;
  }
  if (U.order() < 2) throw InvalidInput("sum of squares needs an order >= 2 jet");
  const MatrixBundle bundle = build_matrix_bundle(U, p, alpha);
  const Common c = common(U, p, alpha);
  SumOfSquares out;
  switch (variant) {
    case SumOfSquaresVariant::toric_general: out = toric_general(c, bundle); break;
    case SumOfSquaresVariant::toric_n1: out = toric_n1(c, bundle); break;
    case SumOfSquaresVariant::toric_n2: out = toric_n2(c, bundle); break;
    case SumOfSquaresVariant::cylindrical: out = cylindrical(c, bundle); break;
  }
  out.total = 0.0;
  for (const auto& term : out.terms) out.total += term.second;
  out.bundle = bundle;
  return out;
}

double identity_scale(double lhs, double rhs, const MatrixBundle& bundle, double alpha, const ReducedPoint& p) {
  const double F = reduced_weight(alpha, p);
  return std::max({std::abs(lhs), std::abs(rhs), bundle.M.squaredNorm(), F * F * (1.0 + p.rho4()), 1e-300});
}

ReducedField reduced_candidate(int n, double alpha, double R) {
  if (n < 1 || !(alpha > 0.0) || !(R > 0.0)) throw InvalidInput("reduced_candidate: bad parameters");
  return {"u_alpha", [n, alpha, R](std::span<const Jetd> v) {
            Jetd sigma = v[0];
            for (int j = 1; j < n; ++j) sigma += v[j];
            const Jetd rho4 = sigma * sigma + v[n] * v[n];
            const Jetd rho_a = alpha == 4.0 ? rho4 : pow(rho4, alpha / 4.0);
            return (rho_a - std::pow(R, alpha)) / alpha;
          }};
}

std::vector<ReducedField> harmonic_basis(int n, int degree_cap) {
  if (n < 1) throw InvalidInput("harmonic_basis needs n >= 1");
  if (degree_cap < 0 || degree_cap > 2) throw InvalidInput("harmonic_basis degree_cap must be in 0..2");
  std::vector<ReducedField> basis;
  basis.push_back({"1", [n](std::span<const Jetd> v) {
                     return Jetd::constant(1.0, v[0].num_vars(), v[0].order());
                   }});
  if (degree_cap >= 1) {
    basis.push_back({"t", [n](std::span<const Jetd> v) { return v[n]; }});
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        basis.push_back({"s" + std::to_string(i + 1) + "-s" + std::to_string(j + 1),
                         [i, j](std::span<const Jetd> v) { return v[i] - v[j]; }});
  }
  if (degree_cap >= 2) {
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) {
        basis.push_back({"t(s" + std::to_string(i + 1) + "-s" + std::to_string(j + 1) + ")",
                         [i, j, n](std::span<const Jetd> v) { return v[n] * (v[i] - v[j]); }});
        basis.push_back({"s" + std::to_string(i + 1) + "^2+s" + std::to_string(j + 1) + "^2-4s" +
                             std::to_string(i + 1) + "s" + std::to_string(j + 1),
                         [i, j](std::span<const Jetd> v) { return v[i] * v[i] + v[j] * v[j] - 4.0 * v[i] * v[j]; }});
      }
    basis.push_back({"t^2-sum(s^2)/2", [n](std::span<const Jetd> v) {
                       Jetd q = v[n] * v[n];
                       for (int k = 0; k < n; ++k) q -= 0.5 * v[k] * v[k];
                       return q;
                     }});
  }
  return basis;
}

std::vector<ReducedField> cylindrical_harmonic_basis(int n) {
  if (n < 1) throw InvalidInput("cylindrical_harmonic_basis needs n >= 1");
  auto sigma_of = [n](std::span<const Jetd> v) {
    Jetd s = v[0];
    for (int j = 1; j < n; ++j) s += v[j];
    return s;
  };
  std::vector<ReducedField> basis;
  basis.push_back({"1", [n](std::span<const Jetd> v) { return Jetd::constant(1.0, v[0].num_vars(), v[0].order()); }});
  basis.push_back({"t", [n](std::span<const Jetd> v) { return v[n]; }});
  basis.push_back({"t^2-sigma^2/(n+1)", [n, sigma_of](std::span<const Jetd> v) {
                     const Jetd s = sigma_of(v);
                     return v[n] * v[n] - s * s / (n + 1.0);
                   }});
  return basis;
}

ReducedField combination(const ReducedField& base, std::vector<ReducedField> terms, std::vector<double> coeffs) {
  if (terms.size() != coeffs.size()) throw InvalidInput("combination: terms and coefficients differ in length");
  return {base.name + "+H", [base, terms = std::move(terms), coeffs = std::move(coeffs)](std::span<const Jetd> v) {
            Jetd out = base(v);
            for (std::size_t k = 0; k < terms.size(); ++k) out += coeffs[k] * terms[k](v);
            return out;
          }};
}

}  // namespace heis
