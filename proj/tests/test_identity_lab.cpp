#include <doctest.h>

#include <cstdlib>

#include "heis/identity_lab.hpp"
#include "heis/json_io.hpp"

using namespace heis;

TEST_CASE("identity names round-trip") {
  for (IdentityId id : all_identities()) CHECK(identity_from_string(to_string(id)) == id);
  CHECK(identity_from_string("forced_failure") == IdentityId::forced_failure);
  CHECK_THROWS_AS(identity_from_string("nope"), InvalidInput);
}

TEST_CASE("compatibility contract") {
  SampleConfig cfg;
  cfg.num_points = 5;
  CHECK_THROWS_AS(run_identity(IdentityId::magikuno, 2, 2.0, cfg), InvalidInput);
  CHECK_THROWS_AS(run_identity(IdentityId::tordue, 3, 2.0, cfg), InvalidInput);
  CHECK_THROWS_AS(run_identity(IdentityId::magik, 1, 2.0, cfg), InvalidInput);
  CHECK_THROWS_AS(run_identity(IdentityId::cyln, 2, 0.0, cfg), InvalidInput);
  CHECK_THROWS_AS(run_identity(IdentityId::ualpha_pde, 5, 2.0, cfg), InvalidInput);
  CHECK_NOTHROW(run_identity(IdentityId::dhrho, 1, 0.0, cfg));
  cfg.simplex_floor = 0.3;
  CHECK_THROWS_AS(run_identity(IdentityId::cyln, 4, 2.0, cfg), InvalidInput);
}

TEST_CASE("spot examples") {
  SampleConfig cfg;
  cfg.num_points = 1000;
  const auto d = run_identity(IdentityId::dhrho, 1, 3.0, cfg);
  CHECK(d.pass);
  CHECK(d.alpha == 0.0);
  CHECK(d.max_rel_err <= 1e-13);
  const auto c = run_identity(IdentityId::cyln, 3, 2.0, cfg);
  CHECK(c.pass);
  CHECK(c.max_rel_err <= 1e-9);
  CHECK(c.max_rel_err > 0.0);
}

TEST_CASE("sampling is prefix stable and respects the configuration") {
  SampleConfig cfg;
  for (int i = 0; i < 50; ++i) {
    const ReducedPoint p = sample_reduced_point(cfg, 3, i);
    const double rho = std::pow(p.rho4(), 0.25);
    CHECK(rho >= 0.1 * (1 - 1e-12));
    CHECK(rho <= 10.0 * (1 + 1e-12));
    CHECK(p.t() / p.sigma() >= -5.0);
    CHECK(p.t() / p.sigma() <= 5.0);
    for (int j = 0; j < 3; ++j) CHECK(p.s()[j] / p.sigma() >= 0.01 * (1 - 1e-12));
    const Point q = sample_full_point(cfg, 3, i);
    CHECK(q.t() == p.t());
  }
  cfg.num_points = 100;
  const auto small = run_identity(IdentityId::magik, 3, 3.0, cfg);
  cfg.num_points = 200;
  const auto large = run_identity(IdentityId::magik, 3, 3.0, cfg);
  CHECK(large.max_rel_err >= small.max_rel_err);
  if (large.argmax_index < 100) CHECK(large.max_rel_err == small.max_rel_err);
}

TEST_CASE("reports are deterministic and independent of the thread cap") {
  SampleConfig cfg;
  cfg.num_points = 64;
  cfg.seed = 7;
  const std::vector<GridEntry> grid{{IdentityId::tordue, 2, 3.9}, {IdentityId::derfa_all, 2, 1.0}};
  const std::string a = dump_json(to_json(run_suite(grid, cfg), cfg));
  setenv("HEIS_OVERDET_THREADS", "3", 1);
  const std::string b = dump_json(to_json(run_suite(grid, cfg), cfg));
  unsetenv("HEIS_OVERDET_THREADS");
  CHECK(a == b);
  cfg.seed = 8;
  CHECK(dump_json(to_json(run_suite(grid, cfg), cfg)) != a);
}

TEST_CASE("suite summary") {
  SampleConfig cfg;
  cfg.num_points = 40;
  const auto empty = run_suite({}, cfg);
  CHECK(empty.reports.empty());
  CHECK(empty.pass);

  const auto forced = run_suite({{IdentityId::cyln, 1, 2.0}, {IdentityId::forced_failure, 1, 2.0}}, cfg);
  REQUIRE(forced.reports.size() == 2);
  CHECK(forced.reports[0].pass);
  CHECK_FALSE(forced.reports[1].pass);
  CHECK(forced.reports[1].max_rel_err > 1e-4);
  CHECK_FALSE(forced.pass);

  CHECK_THROWS_AS(run_suite({{IdentityId::magikuno, 3, 2.0}}, cfg), InvalidInput);
}

TEST_CASE("default grid passes on a reduced sample") {
  SampleConfig cfg;
  cfg.num_points = 60;
  const auto grid = default_grid();
  int magik = 0, alpha_free = 0;
  for (const auto& e : grid) {
    magik += e.id == IdentityId::magik;
    alpha_free += e.id == IdentityId::dhrho;
  }
  CHECK(magik == 18);
  CHECK(alpha_free == 4);
  const auto s = run_suite(grid, cfg);
  for (const auto& r : s.reports) {
    INFO(to_string(r.identity_id), " n=", r.n, " alpha=", r.alpha, " err=", r.max_rel_err);
    CHECK(r.pass);
  }
  CHECK(s.pass);
}

TEST_CASE("json output uses 17 significant digits") {
  nlohmann::ordered_json j;
  j["a"] = 0.1;
  j["b"] = 3.0;
  j["c"] = std::vector<double>{1e-300, -2.5};
  j["d"] = std::numeric_limits<double>::infinity();
  j["e"] = 5;
  const std::string s = dump_json(j, -1);
  CHECK(s == "{\"a\":0.10000000000000001,\"b\":3.0,\"c\":[1e-300,-2.5],\"d\":null,\"e\":5}");
  CHECK(nlohmann::json::parse(s)["a"].get<double>() == 0.1);
}
