#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "heis/heisenberg.hpp"
#include "heis/reduced.hpp"

namespace heis {

enum class IdentityId {
  dhrho,               // |D_H rho| = |x| / rho
  derfa_all,           // closed-form D_H F, |D_H F|^2, T F, Delta_H F against jets
  ualpha_pde,          // Delta_H u_alpha = (Q + alpha - 2) F_alpha
  z_homogeneity,       // Z F_alpha = (alpha - 2) F_alpha
  fundamental,         // Delta_H rho^{2-Q} = 0
  magik,               // toric sum of squares, n >= 2
  magikuno,            // toric sum of squares, n = 1
  tordue,              // toric sum of squares, n = 2
  cyln,                // cylindrical sum of squares
  trace_formula,       // tr M direct vs the closed expansion
  matrix_deficit,      // ||M||^2 - tr^2/(n+1) = 0 for u_alpha
  equality_case,       // every square term vanishes for u_alpha
  pfunction_constant,  // v = R^alpha for u_alpha, error relative to the size of the terms of v
  forced_failure,      // cylindrical identity with the RHS shifted by 1e-3; must fail
};

std::string to_string(IdentityId id);
IdentityId identity_from_string(const std::string& name);
std::vector<IdentityId> all_identities();

/// True when the identity does not depend on alpha.
bool alpha_independent(IdentityId id);
double default_tolerance(IdentityId id);

/// Throws InvalidInput when (id, n, alpha) is not a valid combination.
void check_compatible(IdentityId id, int n, double alpha);

struct SampleConfig {
  std::uint64_t seed = 42;
  int num_points = 1000;
  std::pair<double, double> rho_range{0.1, 10.0};
  double simplex_floor = 0.01;
  std::pair<double, double> t_over_sigma_range{-5.0, 5.0};
  /// Radius in u_alpha.
  double R = 1.0;

  void validate(int n) const;
};

/// Point i of the stream; depends only on (seed, i).
ReducedPoint sample_reduced_point(const SampleConfig& cfg, int n, std::int64_t index);
/// Full-space point over sample_reduced_point(cfg, n, index) with random block angles.
Point sample_full_point(const SampleConfig& cfg, int n, std::int64_t index);

struct IdentityReport {
  IdentityId identity_id = IdentityId::dhrho;
  int n = 1;
  double alpha = 0.0;
  int num_points = 0;
  double max_rel_err = 0.0;
  std::int64_t argmax_index = 0;
  nlohmann::ordered_json argmax_point;
  double tolerance = 0.0;
  bool pass = false;
};

/// Worst relative error of one identity over cfg.num_points seeded points.
/// alpha is ignored (and recorded as 0) for alpha-independent identities.
IdentityReport run_identity(IdentityId id, int n, double alpha, const SampleConfig& cfg,
                            std::optional<double> tolerance = std::nullopt);

struct GridEntry {
  IdentityId id;
  int n;
  double alpha;
};

struct SuiteResult {
  std::vector<IdentityReport> reports;
  bool pass = true;
  double worst_ratio = 0.0;  // max over reports of max_rel_err / tolerance
};

SuiteResult run_suite(const std::vector<GridEntry>& grid, const SampleConfig& cfg);

/// Every compatible (identity, n, alpha) with n in 1..4 and
/// alpha in {0.5, 1, 2, 3, 3.9, 4}; alpha-independent identities appear once per n.
std::vector<GridEntry> default_grid();

nlohmann::ordered_json to_json(const IdentityReport& r);
nlohmann::ordered_json to_json(const SuiteResult& s, const SampleConfig& cfg);

}  // namespace heis
