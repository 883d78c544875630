#pragma once

#include <cmath>

#include "heis/errors.hpp"

namespace heis {

/// Cylindrically symmetric gauge-type domain sigma^2 + (1+eps) t^2 < R^4 in
/// reduced coordinates (sigma = |x|^2, t); eps = 0 is the gauge ball B_R.
struct ReducedDomain {
  double R = 1.0;
  double epsilon = 0.0;

  static ReducedDomain ball(double R) { return checked(R, 0.0); }
  static ReducedDomain perturbed(double R, double epsilon) { return checked(R, epsilon); }

  bool is_ball() const noexcept { return epsilon == 0.0; }
  /// sqrt(1 + eps), the t-stretch of the boundary.
  double k() const noexcept { return std::sqrt(1.0 + epsilon); }
  /// Level function sigma^2 + (1+eps) t^2; the domain is where it is below R^4.
  double level(double sigma, double t) const noexcept { return sigma * sigma + (1.0 + epsilon) * t * t; }
  bool contains(double sigma, double t) const noexcept { return level(sigma, t) < R * R * R * R; }

 private:
  static ReducedDomain checked(double R, double epsilon) {
    if (!(R > 0.0)) throw InvalidInput("domain radius must be positive");
    if (!(1.0 + epsilon > 0.0)) throw InvalidInput("domain needs 1 + epsilon > 0");
    return ReducedDomain{R, epsilon};
  }
};

}  // namespace heis
