#include "heis/cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "heis/errors.hpp"
#include "heis/identity_lab.hpp"
#include "heis/json_io.hpp"
#include "heis/quadrature.hpp"
#include "heis/torsion.hpp"

namespace heis::cli {

using json = nlohmann::ordered_json;

double parse_number(const std::string& text) {
  const auto one = [&](const std::string& s) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(s, &used);
    } catch (const std::exception&) {
      throw InvalidInput("not a number: '" + text + "'");
    }
    if (used != s.size() || !std::isfinite(v)) throw InvalidInput("not a number: '" + text + "'");
    return v;
  };
  const auto slash = text.find('/');
  if (slash == std::string::npos) return one(text);
  const double den = one(text.substr(slash + 1));
  if (den == 0.0) throw InvalidInput("zero denominator: '" + text + "'");
  return one(text.substr(0, slash)) / den;
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    const auto item = text.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    if (item.empty()) throw InvalidInput("empty entry in list '" + text + "'");
    out.push_back(parse_number(item));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

namespace {

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  f << text;
  if (!f) throw Error("cannot write '" + path + "'");
}

json to_json(const IntegralIdentity& s) {
  return {{"name", s.name}, {"lhs", s.lhs}, {"rhs", s.rhs}, {"residual", s.residual}};
}

json to_json(const GridIdentityResult& r) {
  return {{"lhs", r.lhs},
          {"rhs", r.rhs},
          {"residual", r.residual},
          {"residual_coarse", r.residual_coarse},
          {"error_estimate", r.error_estimate}};
}

// ---------------------------------------------------------------- verify

struct VerifyOptions {
  std::string suite = "default";
  std::string identity;
  int n = 1;
  double alpha = 2.0;
  std::uint64_t seed = 42;
  int num_points = 1000;
  std::optional<double> tol;
  std::string out;
};

std::vector<GridEntry> suite_grid(const std::string& name) {
  std::set<IdentityId> keep;
  if (name == "default") return default_grid();
  if (name == "master")
    keep = {IdentityId::magik, IdentityId::magikuno, IdentityId::tordue, IdentityId::cyln};
  else if (name == "closed_form")
    keep = {IdentityId::dhrho, IdentityId::derfa_all, IdentityId::ualpha_pde, IdentityId::z_homogeneity,
            IdentityId::fundamental};
  else if (name == "rigidity")
    keep = {IdentityId::equality_case, IdentityId::matrix_deficit, IdentityId::pfunction_constant};
  else
    throw InvalidInput("unknown suite '" + name + "' (default|master|closed_form|rigidity)");
  std::vector<GridEntry> grid;
  for (const auto& e : default_grid())
    if (keep.count(e.id)) grid.push_back(e);
  return grid;
}

int cmd_verify(const VerifyOptions& o, bool identity_given, std::ostream& out) {
  SampleConfig cfg;
  cfg.seed = o.seed;
  cfg.num_points = o.num_points;
  std::vector<GridEntry> grid;
  if (identity_given) {
    const IdentityId id = identity_from_string(o.identity);
    const double alpha = alpha_independent(id) ? 0.0 : o.alpha;
    check_compatible(id, o.n, alpha);
    grid.push_back({id, o.n, alpha});
  } else {
    grid = suite_grid(o.suite);
  }
  cfg.validate(std::max_element(grid.begin(), grid.end(), [](auto& a, auto& b) { return a.n < b.n; })->n);

  SuiteResult suite;
  if (o.tol) {
    for (const auto& e : grid) check_compatible(e.id, e.n, e.alpha);
    for (const auto& e : grid) {
      suite.reports.push_back(run_identity(e.id, e.n, e.alpha, cfg, o.tol));
      suite.pass = suite.pass && suite.reports.back().pass;
      suite.worst_ratio = std::max(suite.worst_ratio, suite.reports.back().max_rel_err / *o.tol);
    }
  } else {
    suite = run_suite(grid, cfg);
  }
  for (const auto& r : suite.reports)
    out << (r.pass ? "PASS " : "FAIL ") << to_string(r.identity_id) << " n=" << r.n << " alpha=" << format_double(r.alpha)
        << " max_rel_err=" << format_double(r.max_rel_err) << " tol=" << format_double(r.tolerance) << '\n';
  out << "identities: " << suite.reports.size() << ", worst err/tol: " << format_double(suite.worst_ratio) << ", "
      << (suite.pass ? "all pass" : "FAILED") << '\n';
  if (!o.out.empty()) write_json_file(o.out, heis::to_json(suite, cfg));
  return suite.pass ? exit_ok : exit_tolerance;
}

// ----------------------------------------------------------------- check

struct CheckOptions {
  std::string kind;
  int n = 1;
  double alpha = 2.0;
  double radius = 1.0;
  std::optional<double> pole_t;
  std::string source = "analytic";
  std::string h = "1/64";
  std::optional<double> tol;
  std::string rule = "tensor";
  int levels = 6;
  double quad_tol = 1e-12;
  std::string out;
};

int cmd_check(const CheckOptions& o, std::ostream& out) {
  QuadratureSpec spec;
  spec.rule = o.rule == "adaptive" ? QuadratureRule::adaptive : QuadratureRule::tensor;
  spec.levels = o.levels;
  spec.target_rel_tol = o.quad_tol;
  spec.validate();
  if (!(o.radius > 0.0)) throw InvalidInput("--radius must be positive");
  const bool grid = o.source == "grid";
  if (o.kind != "meanvalue") {
    if (!(o.alpha > 0.0 && o.alpha <= 4.0)) throw InvalidInput("--alpha must lie in (0, 4]");
    if (grid && !(o.alpha >= 2.0)) throw InvalidInput("grid source requires --alpha in [2, 4]");
  } else if (grid) {
    throw InvalidInput("meanvalue has no grid source");
  }

  json j;
  j["check"] = o.kind;
  j["n"] = o.n;
  j["radius"] = o.radius;
  bool pass = false;

  if (o.kind == "meanvalue") {
    const double tol = o.tol.value_or(1e-5);
    ScalarField h{"1", [](std::span<const Jetd> c) { return Jetd::constant(1.0, c[0].num_vars(), c[0].order()); }};
    if (o.pole_t) {
      if (!(std::abs(*o.pole_t) > o.radius * o.radius)) throw InvalidInput("--pole-t must lie outside the ball");
      h = fields::fundamental_solution(Point(Eigen::VectorXd::Zero(2 * o.n), *o.pole_t));
    }
    const MeanValueCalibration cal = calibrate_beta(o.n, o.radius, spec);
    const MeanValueResult m = mean_value_check(h, o.n, o.radius, spec);
    const auto rel = [&](double a) { return std::abs(a - m.pointwise) / std::max(std::abs(m.pointwise), 1e-300); };
    j["field"] = h.name;
    if (o.pole_t) j["pole_t"] = *o.pole_t;
    j["beta_hat"] = cal.beta_hat;
    j["beta_radius_residual"] = cal.residual;
    j["pointwise"] = m.pointwise;
    j["solid_avg"] = m.solid_avg;
    j["surface_avg"] = m.surface_avg;
    j["solid_rel_err"] = rel(m.solid_avg);
    j["surface_rel_err"] = rel(m.surface_avg);
    j["tolerance"] = tol;
    pass = rel(m.solid_avg) <= tol && rel(m.surface_avg) <= tol && cal.residual <= 1e-8;
    out << "meanvalue n=" << o.n << ": h(0)=" << format_double(m.pointwise) << " solid=" << format_double(m.solid_avg)
        << " surface=" << format_double(m.surface_avg) << '\n';
  } else if (!grid) {
    const double tol = o.tol.value_or(1e-8);
    j["alpha"] = o.alpha;
    j["source"] = "analytic";
    j["tolerance"] = tol;
    if (o.kind == "pohozaev") {
      const PohozaevResult r = pohozaev_check(o.alpha, o.n, o.radius, spec);
      j["lhs"] = r.lhs;
      j["rhs"] = r.rhs;
      j["residual"] = r.residual;
      j["sub_identities"] = json::array();
      pass = r.residual <= tol;
      for (const auto& s : r.sub_identities) {
        j["sub_identities"].push_back(to_json(s));
        pass = pass && s.residual <= tol;
      }
      out << "pohozaev residual=" << format_double(r.residual) << '\n';
    } else if (o.kind == "average") {
      const AverageResult r = average_identity_check(o.alpha, o.n, o.radius, spec);
      j["lhs"] = r.lhs;
      j["rhs"] = r.rhs;
      j["residual"] = r.residual;
      pass = r.residual <= tol;
      out << "average residual=" << format_double(r.residual) << '\n';
    } else {
      throw InvalidInput("unknown check '" + o.kind + "'");
    }
  } else {
    const double h = parse_number(o.h);
    const ReducedDomain ball = ReducedDomain::ball(o.radius);
    const GridSolution fine = assemble_and_solve(build_grid(ball, h), o.alpha, o.n);
    const GridSolution coarse = assemble_and_solve(build_grid(ball, 2.0 * h), o.alpha, o.n);
    GridIdentityResult r;
    if (o.kind == "pohozaev")
      r = pohozaev_check(fine, coarse, spec);
    else if (o.kind == "average")
      r = average_identity_check(fine, coarse);
    else
      throw InvalidInput("unknown check '" + o.kind + "'");
    j["alpha"] = o.alpha;
    j["source"] = "grid";
    j["h"] = h;
    j["result"] = to_json(r);
    const double factor = o.tol.value_or(5.0);
    j["error_factor"] = factor;
    pass = r.residual <= factor * r.error_estimate;
    out << o.kind << " (grid h=" << format_double(h) << ") residual=" << format_double(r.residual)
        << " estimate=" << format_double(r.error_estimate) << '\n';
  }
  j["pass"] = pass;
  if (!o.out.empty()) write_json_file(o.out, j);
  return pass ? exit_ok : exit_tolerance;
}

// ----------------------------------------------------------------- solve

struct SolveOptions {
  int n = 1;
  double alpha = 2.0;
  double radius = 1.0;
  double epsilon = 0.0;
  std::string h = "1/64";
  std::string out;
};

int cmd_solve(const SolveOptions& o, std::ostream& out) {
  const double h = parse_number(o.h);
  const ReducedDomain dom = ReducedDomain::perturbed(o.radius, o.epsilon);
  const GridSolution sol = assemble_and_solve(build_grid(dom, h), o.alpha, o.n);
  const NeumannTrace tr = neumann_trace(sol);
  const PFunctionGrid pf = pfunction_on_grid(sol, tr);
  json meta = solution_metadata(sol, tr);
  meta["pfunction"] = {{"reference", pf.reference},
                       {"max_deviation", pf.max_deviation},
                       {"max_boundary_deviation", pf.max_boundary_deviation}};
  bool pass = true;
  if (dom.is_ball()) {
    const double c = std::pow(o.radius, o.alpha / 2.0);
    const double rel = std::abs(tr.mean - c) / c;
    meta["expected_mean_q"] = c;
    meta["mean_q_rel_err"] = rel;
    pass = rel <= 1e-2;
  }
  meta["pass"] = pass;
  out << "unknowns=" << sol.grid.size() << " residual=" << format_double(sol.residual) << " mean_q=" << format_double(tr.mean)
      << " cv_q=" << format_double(tr.cv) << '\n';
  if (!o.out.empty()) {
    std::ostringstream a, b;
    write_solution_csv(a, sol);
    write_trace_csv(b, tr);
    write_text(o.out + ".csv", a.str());
    write_text(o.out + "_trace.csv", b.str());
    write_json_file(o.out + ".json", meta);
  }
  return pass ? exit_ok : exit_tolerance;
}

// ------------------------------------------------------------ experiment

struct ExperimentOptions {
  std::string kind;
  int n = 1;
  double alpha = 2.0;
  double radius = 1.0;
  double epsilon = 0.0;
  std::string h = "1/128";
  std::string epsilons = "0.05,0.1,0.2";
  std::string alphas = "2,4";
  std::string hs = "1/32,1/64,1/128";
  std::string out;
};

int cmd_perturbation(const ExperimentOptions& o, std::ostream& out) {
  const double h = parse_number(o.h);
  std::vector<double> eps = parse_list(o.epsilons);
  if (std::find(eps.begin(), eps.end(), 0.0) == eps.end()) eps.push_back(0.0);
  std::sort(eps.begin(), eps.end());
  eps.erase(std::unique(eps.begin(), eps.end()), eps.end());

  std::ostringstream csv;
  csv << "epsilon,cv,mean_q,std_q,pfunction_max_deviation,unknowns\n";
  json rows = json::array();
  bool monotone = true;
  double prev_cv = -1.0;
  for (double e : eps) {
    const GridSolution sol = assemble_and_solve(build_grid(ReducedDomain::perturbed(o.radius, e), h), o.alpha, o.n);
    const NeumannTrace tr = neumann_trace(sol);
    const PFunctionGrid pf = pfunction_on_grid(sol, tr);
    // Judged on eps >= 0 only.
    if (e >= 0.0) {
      monotone = monotone && tr.cv > prev_cv;
      prev_cv = tr.cv;
    }
    csv << format_double(e) << ',' << format_double(tr.cv) << ',' << format_double(tr.mean) << ','
        << format_double(tr.stddev) << ',' << format_double(pf.max_deviation) << ',' << sol.grid.size() << '\n';
    rows.push_back({{"epsilon", e},
                    {"cv", tr.cv},
                    {"mean_q", tr.mean},
                    {"std_q", tr.stddev},
                    {"pfunction_max_deviation", pf.max_deviation},
                    {"unknowns", sol.grid.size()}});
    out << "epsilon=" << format_double(e) << " cv=" << format_double(tr.cv) << '\n';
  }
  const json j = {{"experiment", "perturbation"}, {"n", o.n},         {"alpha", o.alpha}, {"radius", o.radius},
                  {"h", h},                       {"rows", rows}, {"cv_monotone", monotone}};
  if (!o.out.empty()) {
    write_text(o.out + ".csv", csv.str());
    write_json_file(o.out + ".json", j);
  } else {
    out << csv.str();
  }
  return monotone ? exit_ok : exit_tolerance;
}

int cmd_convergence(const ExperimentOptions& o, std::ostream& out) {
  const std::vector<double> alphas = parse_list(o.alphas);
  const std::vector<double> hs = parse_list(o.hs);
  const ReducedDomain dom = ReducedDomain::perturbed(o.radius, o.epsilon);
  std::ostringstream csv;
  csv << "alpha,h,unknowns,err_max,err_l2,order_max,order_l2,mean_q,cv_q\n";
  json studies = json::array();
  bool monotone = true;
  for (double a : alphas) {
    const ConvergenceStudy s = convergence_study(dom, a, o.n, hs);
    json rows = json::array();
    for (std::size_t k = 0; k < s.rows.size(); ++k) {
      const auto& r = s.rows[k];
      if (k > 0) {
        const auto& p = s.rows[k - 1];
        // Errors already at roundoff may wobble.
        const bool floor = r.err_max <= s.roundoff_floor && p.err_max <= s.roundoff_floor;
        monotone = monotone && (floor || (r.err_max <= 1.1 * p.err_max && r.err_l2 <= 1.1 * p.err_l2));
      }
      csv << format_double(a) << ',' << format_double(r.h) << ',' << r.unknowns << ',' << format_double(r.err_max)
          << ',' << format_double(r.err_l2) << ',' << format_double(r.order_max) << ',' << format_double(r.order_l2)
          << ',' << format_double(r.mean_q) << ',' << format_double(r.cv_q) << '\n';
      rows.push_back({{"h", r.h},
                      {"unknowns", r.unknowns},
                      {"err_max", r.err_max},
                      {"err_l2", r.err_l2},
                      {"order_max", std::isinf(r.order_max) ? json("inf") : json(r.order_max)},
                      {"order_l2", std::isinf(r.order_l2) ? json("inf") : json(r.order_l2)},
                      {"mean_q", r.mean_q},
                      {"cv_q", r.cv_q}});
    }
    studies.push_back({{"alpha", a},
                       {"reference", s.analytic_reference ? "analytic" : "finest_grid"},
                       {"roundoff_floor", s.roundoff_floor},
                       {"rows", rows}});
  }
  out << csv.str();
  const json j = {{"experiment", "convergence"}, {"n", o.n},       {"radius", o.radius},
                  {"epsilon", o.epsilon},         {"studies", studies}, {"monotone", monotone}};
  if (!o.out.empty()) {
    write_text(o.out + ".csv", csv.str());
    write_json_file(o.out + ".json", j);
  }
  return monotone ? exit_ok : exit_tolerance;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Numerical companion for the overdetermined torsion problem on the Heisenberg group.", "heis-overdet"};
  app.set_help_flag("--help", "Print this help message and exit");  // frees --h for the grid spacing
  app.require_subcommand(1);
  app.set_config("--config", "", "key = value file; [verify], [check], [solve], [experiment] sections; flags win");
  app.config_formatter(std::make_shared<CLI::ConfigINI>());
  app.footer("Exit codes: 0 success, 1 tolerance failure, 2 usage error, 3 internal error.\n"
             "HEIS_OVERDET_THREADS caps the number of worker threads.");

  VerifyOptions vo;
  auto* verify = app.add_subcommand("verify", "Run pointwise identity suites; JSON report via --out.");
  verify->add_option("--suite", vo.suite, "default | master | closed_form | rigidity")->capture_default_str();
  auto* identity_opt = verify->add_option("--identity", vo.identity, "single identity id (overrides --suite)");
  verify->add_option("--n", vo.n, "Heisenberg dimension for --identity")->capture_default_str();
  verify->add_option("--alpha", vo.alpha, "alpha for --identity")->capture_default_str();
  verify->add_option("--seed", vo.seed)->capture_default_str();
  verify->add_option("--num-points", vo.num_points)->capture_default_str();
  verify->add_option("--tol", vo.tol, "override every identity's tolerance");
  verify->add_option("--out", vo.out, "JSON report path");

  CheckOptions co;
  auto* check = app.add_subcommand("check", "Integral identities: pohozaev | meanvalue | average; JSON via --out.");
  check->add_option("kind", co.kind)->required()->check(CLI::IsMember({"pohozaev", "meanvalue", "average"}));
  check->add_option("--n", co.n)->capture_default_str();
  check->add_option("--alpha", co.alpha)->capture_default_str();
  check->add_option("--radius", co.radius)->capture_default_str();
  check->add_option("--pole-t", co.pole_t, "meanvalue: pole (0, t) of the fundamental solution; default h = 1");
  check->add_option("--source", co.source, "analytic | grid (solver pair h, 2h)")
      ->check(CLI::IsMember({"analytic", "grid"}))
      ->capture_default_str();
  check->add_option("--h", co.h, "grid spacing for --source grid")->capture_default_str();
  check->add_option("--tol", co.tol, "residual tolerance (grid: multiple of the error estimate, default 5)");
  check->add_option("--rule", co.rule)->check(CLI::IsMember({"tensor", "adaptive"}))->capture_default_str();
  check->add_option("--levels", co.levels)->capture_default_str();
  check->add_option("--quad-tol", co.quad_tol)->capture_default_str();
  check->add_option("--out", co.out, "JSON report path");

  SolveOptions so;
  auto* solve = app.add_subcommand(
      "solve",
      "Finite-difference torsion solve. --out P writes P.csv (sigma,t,W), P_trace.csv (arc_param,q), P.json.");
  solve->add_option("--n", so.n)->capture_default_str();
  solve->add_option("--alpha", so.alpha, "in [2, 4]")->capture_default_str();
  solve->add_option("--radius", so.radius)->capture_default_str();
  solve->add_option("--epsilon", so.epsilon, "domain sigma^2 + (1+eps) t^2 < R^4")->capture_default_str();
  solve->add_option("--h", so.h, "grid spacing, decimal or a/b")->capture_default_str();
  solve->add_option("--out", so.out, "output path prefix");

  ExperimentOptions eo;
  auto* experiment = app.add_subcommand(
      "experiment",
      "perturbation: P.csv (epsilon,cv,mean_q,std_q,pfunction_max_deviation,unknowns);\n"
      "convergence: P.csv (alpha,h,unknowns,err_max,err_l2,order_max,order_l2,mean_q,cv_q); both write P.json.");
  experiment->add_option("kind", eo.kind)->required()->check(CLI::IsMember({"perturbation", "convergence"}));
  experiment->add_option("--n", eo.n)->capture_default_str();
  experiment->add_option("--alpha", eo.alpha, "perturbation")->capture_default_str();
  experiment->add_option("--radius", eo.radius)->capture_default_str();
  experiment->add_option("--epsilon", eo.epsilon, "convergence domain")->capture_default_str();
  experiment->add_option("--h", eo.h, "perturbation grid spacing")->capture_default_str();
  experiment->add_option("--epsilons", eo.epsilons, "perturbation sweep; 0 is always added")->capture_default_str();
  experiment->add_option("--alphas", eo.alphas, "convergence")->capture_default_str();
  experiment->add_option("--hs", eo.hs, "convergence spacings")->capture_default_str();
  experiment->add_option("--out", eo.out, "output path prefix");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? exit_ok : exit_usage;
  }

  try {
    if (*verify) return cmd_verify(vo, identity_opt->count() > 0 || !vo.identity.empty(), out);
    if (*check) return cmd_check(co, out);
    if (*solve) return cmd_solve(so, out);
    if (*experiment) return eo.kind == "perturbation" ? cmd_perturbation(eo, out) : cmd_convergence(eo, out);
  } catch (const InvalidInput& e) {
    err << "error: " << e.what() << '\n';
    return exit_usage;
  } catch (const SolverError& e) {
    err << "solver error: " << e.what() << " (residual " << format_double(e.residual()) << ")\n";
    return exit_internal;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return exit_internal;
  }
  return exit_usage;
}

}  // namespace heis::cli
