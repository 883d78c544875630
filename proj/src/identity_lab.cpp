#include "heis/identity_lab.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <random>

#include "heis/errors.hpp"
#include "heis/parallel.hpp"

namespace heis {

namespace {

struct IdentityInfo {
  IdentityId id;
  const char* name;
  double tolerance;
  bool alpha_free;
  bool full_space;
};

constexpr std::array<IdentityInfo, 14> kIdentities{{
    {IdentityId::dhrho, "dhrho", 1e-13, true, true},
    {IdentityId::derfa_all, "derfa_all", 1e-10, false, true},
    {IdentityId::ualpha_pde, "ualpha_pde", 1e-10, false, true},
    {IdentityId::z_homogeneity, "z_homogeneity", 1e-12, false, true},
    {IdentityId::fundamental, "fundamental", 1e-10, true, true},
    {IdentityId::magik, "magik", 1e-9, false, false},
    {IdentityId::magikuno, "magikuno", 1e-9, false, false},
    {IdentityId::tordue, "tordue", 1e-9, false, false},
    {IdentityId::cyln, "cyln", 1e-9, false, false},
    {IdentityId::trace_formula, "trace_formula", 1e-11, false, false},
    {IdentityId::matrix_deficit, "matrix_deficit", 1e-12, false, false},
    {IdentityId::equality_case, "equality_case", 1e-11, false, false},
    {IdentityId::pfunction_constant, "pfunction_constant", 1e-12, false, false},
    {IdentityId::forced_failure, "forced_failure", 1e-9, false, false},
}};

const IdentityInfo& info(IdentityId id) {
  for (const auto& i : kIdentities)
    if (i.id == id) return i;
  throw InvalidInput("unknown identity id");
}

// Per-point generator: depends only on (seed, index).
std::mt19937_64 point_engine(std::uint64_t seed, std::int64_t index) {
  const auto idx = static_cast<std::uint64_t>(index);
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(idx), static_cast<std::uint32_t>(idx >> 32)};
  return std::mt19937_64(seq);
}

double uniform(std::mt19937_64& g, double lo, double hi) {
  return lo + (hi - lo) * static_cast<double>(g() >> 11) * 0x1.0p-53;
}

ReducedPoint draw_reduced(std::mt19937_64& g, const SampleConfig& cfg, int n) {
  const double rho = std::exp(uniform(g, std::log(cfg.rho_range.first), std::log(cfg.rho_range.second)));
  const double tau = uniform(g, cfg.t_over_sigma_range.first, cfg.t_over_sigma_range.second);
  const double sigma = rho * rho / std::sqrt(1.0 + tau * tau);
  Eigen::VectorXd w(n);
  for (int j = 0; j < n; ++j) w[j] = -std::log1p(-uniform(g, 0.0, 1.0));
  const double total = w.sum();
  for (int j = 0; j < n; ++j) w[j] = cfg.simplex_floor + (1.0 - n * cfg.simplex_floor) * w[j] / total;
  return ReducedPoint(sigma * w, tau * sigma);
}

Point draw_full(std::mt19937_64& g, const SampleConfig& cfg, int n) {
  const ReducedPoint p = draw_reduced(g, cfg, n);
  std::vector<double> angles(n);
  for (int j = 0; j < n; ++j) angles[j] = uniform(g, 0.0, 2.0 * M_PI);
  return p.lift(angles);
}

double ratio(double err, double scale) { return err / std::max(scale, std::numeric_limits<double>::min()); }

// Worst relative error among the four closed-form derivatives of F_alpha.
double derfa_error(double alpha, const Point& p) {
  const ScalarField F = fields::weight(alpha);
  const WeightDerivatives w = weight_F_closed_derivatives(alpha, p);
  const Eigen::VectorXd g = horizontal_gradient(F, p);
  const double rho = gauge(p);
  // Natural magnitudes from homogeneity: F has degree alpha - 2.
  const double s1 = std::pow(rho, alpha - 3.0);
  const double s2 = s1 * s1;
  const double s0 = std::pow(rho, alpha - 4.0);
  double err = ratio((w.gradH - g).norm(), std::max({w.gradH.norm(), g.norm(), s1}));
  err = std::max(err, relative_error(w.gradH_norm_sq, g.squaredNorm(), s2));
  err = std::max(err, relative_error(w.T_F, vertical_derivative(F, p), s0));
  err = std::max(err, relative_error(w.lap_F, sublaplacian(F, p), s0));
  return err;
}

class Evaluator {
 public:
  Evaluator(IdentityId id, int n, double alpha, const SampleConfig& cfg) : id_(id), n_(n), alpha_(alpha), cfg_(cfg) {
    switch (id) {
      case IdentityId::cyln:
      case IdentityId::forced_failure:
        basis_ = cylindrical_harmonic_basis(n);
        break;
      case IdentityId::magik:
      case IdentityId::magikuno:
      case IdentityId::tordue:
      case IdentityId::trace_formula:
        basis_ = harmonic_basis(n, 2);
        break;
      default:
        break;
    }
    if (!info(id).alpha_free) candidate_ = reduced_candidate(n, alpha, cfg.R);
  }

  double operator()(std::int64_t index) const {
    auto g = point_engine(cfg_.seed, index);
    if (info(id_).full_space) return full(draw_full(g, cfg_, n_));
    const ReducedPoint p = draw_reduced(g, cfg_, n_);
    return reduced(p, g);
  }

 private:
  double full(const Point& p) const {
    const double rho = gauge(p);
    const int Q = p.Q();
    switch (id_) {
      case IdentityId::dhrho:
        return relative_error(horizontal_gradient(fields::gauge(), p).norm(), std::sqrt(p.x().squaredNorm()) / rho);
      case IdentityId::derfa_all:
        return derfa_error(alpha_, p);
      case IdentityId::ualpha_pde:
        return relative_error(sublaplacian(fields::candidate(alpha_, cfg_.R), p),
                              (Q + alpha_ - 2.0) * weight_F(alpha_, p), std::pow(rho, alpha_ - 2.0));
      case IdentityId::z_homogeneity: {
        const double F = weight_F(alpha_, p);
        return relative_error(z_field(fields::weight(alpha_), p), (alpha_ - 2.0) * F, std::abs(F));
      }
      case IdentityId::fundamental:
        return ratio(std::abs(sublaplacian(fields::gauge_power(2.0 - Q), p)), std::pow(rho, -Q));
      default:
        throw InvalidInput("identity is not a full-space identity");
    }
  }

  ReducedField random_solution(std::mt19937_64& g) const {
    std::vector<double> c(basis_.size());
    for (auto& x : c) x = uniform(g, -1.0, 1.0);
    return combination(candidate_, basis_, c);
  }

  double sum_of_squares(SumOfSquaresVariant variant, const ReducedPoint& p, std::mt19937_64& g,
                        double shift = 0.0) const {
    const Jetd U = evaluate(random_solution(g), p, 3);
    const double lhs = lhs_via_jets(U, p, alpha_);
    const SumOfSquares r = rhs_sum_of_squares(variant, U, p, alpha_);
    const double scale = identity_scale(lhs, r.total, r.bundle, alpha_, p);
    const double rhs = r.total + shift * scale;
    return ratio(std::abs(lhs - rhs), std::max(scale, std::abs(rhs)));
  }

  double reduced(const ReducedPoint& p, std::mt19937_64& g) const {
    switch (id_) {
      case IdentityId::magik:
        return sum_of_squares(SumOfSquaresVariant::toric_general, p, g);
      case IdentityId::magikuno:
        return sum_of_squares(SumOfSquaresVariant::toric_n1, p, g);
      case IdentityId::tordue:
        return sum_of_squares(SumOfSquaresVariant::toric_n2, p, g);
      case IdentityId::cyln:
        return sum_of_squares(SumOfSquaresVariant::cylindrical, p, g);
      case IdentityId::forced_failure:
        return sum_of_squares(SumOfSquaresVariant::cylindrical, p, g, 1e-3);
      case IdentityId::trace_formula: {
        const MatrixBundle b = build_matrix_bundle(evaluate(random_solution(g), p, 2), p, alpha_);
        const double scale = b.D2.diagonal().cwiseAbs().sum() + b.D1.diagonal().cwiseAbs().sum();
        return relative_error(b.trace_M_direct, b.trace_M_formula, scale);
      }
      case IdentityId::matrix_deficit: {
        const MatrixBundle b = build_matrix_bundle(evaluate(candidate_, p, 2), p, alpha_);
        return ratio(std::abs(frobenius_deficit(b.M)), b.M.squaredNorm());
      }
      case IdentityId::equality_case: {
        const Jetd U = evaluate(candidate_, p, 3);
        std::vector<SumOfSquaresVariant> variants{SumOfSquaresVariant::cylindrical};
        if (n_ == 1) variants.push_back(SumOfSquaresVariant::toric_n1);
        if (n_ == 2) variants.push_back(SumOfSquaresVariant::toric_n2);
        if (n_ >= 2) variants.push_back(SumOfSquaresVariant::toric_general);
        const double lhs = lhs_via_jets(U, p, alpha_);
        double err = 0.0;
        for (auto variant : variants) {
          const SumOfSquares r = rhs_sum_of_squares(variant, U, p, alpha_);
          const double scale = identity_scale(lhs, r.total, r.bundle, alpha_, p);
          for (const auto& term : r.terms) err = std::max(err, ratio(std::abs(term.second), scale));
          err = std::max(err, ratio(std::abs(lhs), scale));
        }
        return err;
      }
      case IdentityId::pfunction_constant: {
        // v = |D_H u|^2 / F - alpha u; both terms are ~ rho^alpha, so the
        // error is measured against the larger of them and R^alpha.
        const double Ra = std::pow(cfg_.R, alpha_);
        const Jetd U = evaluate(candidate_, p, 1);
        const double v = pfunction(U, p, alpha_);
        const double au = std::abs(alpha_ * U.value());
        const double scale = std::max({Ra, au, std::abs(v) + au});
        return std::abs(v - Ra) / scale;
      }
      default:
        throw InvalidInput("identity is not a reduced identity");
    }
  }

  IdentityId id_;
  int n_;
  double alpha_;
  const SampleConfig& cfg_;
  std::vector<ReducedField> basis_;
  ReducedField candidate_;
};

nlohmann::ordered_json serialize_point(IdentityId id, int n, const SampleConfig& cfg, std::int64_t index) {
  nlohmann::ordered_json j;
  j["index"] = index;
  auto g = point_engine(cfg.seed, index);
  if (info(id).full_space) {
    const Point p = draw_full(g, cfg, n);
    j["x"] = std::vector<double>(p.x().data(), p.x().data() + p.x().size());
    j["t"] = p.t();
  } else {
    const ReducedPoint p = draw_reduced(g, cfg, n);
    j["s"] = std::vector<double>(p.s().data(), p.s().data() + p.s().size());
    j["t"] = p.t();
  }
  return j;
}

}  // namespace

std::string to_string(IdentityId id) { return info(id).name; }

IdentityId identity_from_string(const std::string& name) {
  for (const auto& i : kIdentities)
    if (name == i.name) return i.id;
  throw InvalidInput("unknown identity '" + name + "'");
}

std::vector<IdentityId> all_identities() {
  std::vector<IdentityId> out;
  for (const auto& i : kIdentities)
    if (i.id != IdentityId::forced_failure) out.push_back(i.id);
  return out;
}

bool alpha_independent(IdentityId id) { return info(id).alpha_free; }
double default_tolerance(IdentityId id) { return info(id).tolerance; }

void check_compatible(IdentityId id, int n, double alpha) {
  const IdentityInfo& i = info(id);
  const int max_n = i.full_space ? 4 : 8;
  if (n < 1 || n > max_n) {
    throw InvalidInput("identity '" + std::string(i.name) + "' supports n in 1.." + std::to_string(max_n));
  }
  if (id == IdentityId::magikuno && n != 1) throw InvalidInput("magikuno requires n = 1");
  if (id == IdentityId::tordue && n != 2) throw InvalidInput("tordue requires n = 2");
  if (id == IdentityId::magik && n < 2) throw InvalidInput("magik requires n >= 2");
  if (!i.alpha_free && !(alpha > 0.0 && alpha <= 4.0)) {
    throw InvalidInput("identity '" + std::string(i.name) + "' requires alpha in (0, 4]");
  }
}

void SampleConfig::validate(int n) const {
  if (num_points < 1) throw InvalidInput("num_points must be positive");
  if (!(rho_range.first > 0.0 && rho_range.second >= rho_range.first)) throw InvalidInput("bad rho_range");
  if (!(simplex_floor > 0.0 && simplex_floor < 1.0 && simplex_floor * n < 1.0)) {
    throw InvalidInput("simplex_floor must lie in (0, 1/n)");
  }
  if (!(t_over_sigma_range.second >= t_over_sigma_range.first)) throw InvalidInput("bad t_over_sigma_range");
  if (!(R > 0.0)) throw InvalidInput("R must be positive");
}

ReducedPoint sample_reduced_point(const SampleConfig& cfg, int n, std::int64_t index) {
  auto g = point_engine(cfg.seed, index);
  return draw_reduced(g, cfg, n);
}

Point sample_full_point(const SampleConfig& cfg, int n, std::int64_t index) {
  auto g = point_engine(cfg.seed, index);
  return draw_full(g, cfg, n);
}

IdentityReport run_identity(IdentityId id, int n, double alpha, const SampleConfig& cfg,
                            std::optional<double> tolerance) {
  check_compatible(id, n, alpha);
  cfg.validate(n);
  if (alpha_independent(id)) alpha = 0.0;

  const Evaluator eval(id, n, alpha, cfg);
  std::vector<double> errors(cfg.num_points);
  parallel_for(cfg.num_points, [&](int i) {
    const double e = eval(i);
    errors[i] = std::isnan(e) ? std::numeric_limits<double>::infinity() : e;
  });

  IdentityReport r;
  r.identity_id = id;
  r.n = n;
  r.alpha = alpha;
  r.num_points = cfg.num_points;
  r.tolerance = tolerance.value_or(default_tolerance(id));
  r.max_rel_err = -1.0;
  for (int i = 0; i < cfg.num_points; ++i) {
    if (errors[i] > r.max_rel_err) {
      r.max_rel_err = errors[i];
      r.argmax_index = i;
    }
  }
  r.argmax_point = serialize_point(id, n, cfg, r.argmax_index);
  r.pass = r.max_rel_err <= r.tolerance;
  return r;
}

SuiteResult run_suite(const std::vector<GridEntry>& grid, const SampleConfig& cfg) {
  for (const auto& e : grid) check_compatible(e.id, e.n, e.alpha);
  SuiteResult s;
  for (const auto& e : grid) {
    s.reports.push_back(run_identity(e.id, e.n, e.alpha, cfg));
    const auto& r = s.reports.back();
    s.pass = s.pass && r.pass;
    s.worst_ratio = std::max(s.worst_ratio, r.max_rel_err / r.tolerance);
  }
  return s;
}

std::vector<GridEntry> default_grid() {
  const double alphas[] = {0.5, 1.0, 2.0, 3.0, 3.9, 4.0};
  std::vector<GridEntry> grid;
  for (IdentityId id : all_identities()) {
    for (int n = 1; n <= 4; ++n) {
      if (alpha_independent(id)) {
        grid.push_back({id, n, 0.0});
        continue;
      }
      for (double a : alphas) {
        try {
          check_compatible(id, n, a);
        } catch (const InvalidInput&) {
          continue;
        }
        grid.push_back({id, n, a});
      }
    }
  }
  return grid;
}

nlohmann::ordered_json to_json(const IdentityReport& r) {
  nlohmann::ordered_json j;
  j["identity_id"] = to_string(r.identity_id);
  j["n"] = r.n;
  j["alpha"] = r.alpha;
  j["num_points"] = r.num_points;
  j["max_rel_err"] = r.max_rel_err;
  j["argmax_point"] = r.argmax_point;
  j["pass"] = r.pass;
  j["tolerance"] = r.tolerance;
  return j;
}

nlohmann::ordered_json to_json(const SuiteResult& s, const SampleConfig& cfg) {
  nlohmann::ordered_json j;
  j["seed"] = cfg.seed;
  j["num_points"] = cfg.num_points;
  j["rho_range"] = {cfg.rho_range.first, cfg.rho_range.second};
  j["simplex_floor"] = cfg.simplex_floor;
  j["t_over_sigma_range"] = {cfg.t_over_sigma_range.first, cfg.t_over_sigma_range.second};
  j["R"] = cfg.R;
  j["pass"] = s.pass;
  j["worst_ratio"] = s.worst_ratio;
  auto& reports = j["reports"] = nlohmann::ordered_json::array();
  for (const auto& r : s.reports) reports.push_back(to_json(r));
  return j;
}

}  // namespace heis
