#pragma once

#include <cmath>
#include <string>

#include <Eigen/Core>

#include "heis/errors.hpp"
#include "heis/jet_layout.hpp"

namespace heis {

/// Truncated multivariate Taylor expansion of a scalar quantity.
///
/// A jet of order k in d variables carries every mixed partial derivative up
/// to total order k at one point.  Arithmetic is exact truncated-Taylor
/// arithmetic, so evaluating an expression on seed jets of the coordinates
/// yields the derivatives of the expression to rounding.
template <typename Scalar>
class Jet {
 public:
  using Coefficients = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  Jet() = default;

  /// The zero jet.
  Jet(int num_vars, int order) : layout_(&JetLayout::get(num_vars)), order_(order) {
    if (order < 0 || order > JetLayout::kMaxOrder) {
      throw InvalidInput("jet order must be in 0..3, got " + std::to_string(order));
    }
    coeffs_ = Coefficients::Zero(layout_->size(order));
  }

  static Jet constant(Scalar c, int num_vars, int order) {
    Jet j(num_vars, order);
    j.coeffs_[0] = c;
    return j;
  }

  /// Seed jet of coordinate `var` evaluated at `value`.
  static Jet variable(Scalar value, int var, int num_vars, int order) {
    Jet j = constant(value, num_vars, order);
    if (var < 0 || var >= num_vars) throw InvalidInput("seed variable out of range");
    if (order >= 1) j.coeffs_[j.layout_->index(var)] = Scalar(1);
    return j;
  }

  int num_vars() const noexcept { return layout_->num_vars(); }
  int order() const noexcept { return order_; }
  const JetLayout& layout() const noexcept { return *layout_; }
  const Coefficients& taylor() const noexcept { return coeffs_; }
  Coefficients& taylor() noexcept { return coeffs_; }

  Scalar value() const { return coeffs_[0]; }
  Scalar d(int i) const { return coeffs_[layout_->index(i)]; }
  Scalar d(int i, int j) const {
    const int c = layout_->index(i, j);
    return coeffs_[c] * Scalar(layout_->factorial_weight(c));
  }
  Scalar d(int i, int j, int k) const {
    const int c = layout_->index(i, j, k);
    return coeffs_[c] * Scalar(layout_->factorial_weight(c));
  }

  /// Jet of the partial derivative along `var`, one order lower.
  Jet derivative(int var) const {
    if (order_ == 0) throw InvalidInput("cannot differentiate an order-0 jet");
    Jet out(num_vars(), order_ - 1);
    for (int c = 0; c < out.coeffs_.size(); ++c) {
      const int up = layout_->raised(c, var);
      out.coeffs_[c] = coeffs_[up] * Scalar(layout_->multiplicity(up, var));
    }
    return out;
  }

  Jet truncated(int order) const {
    if (order > order_) throw InvalidInput("cannot raise jet order by truncation");
    Jet out(num_vars(), order);
    out.coeffs_ = coeffs_.head(layout_->size(order));
    return out;
  }

  Jet operator-() const {
    Jet out = *this;
    out.coeffs_ = -coeffs_;
    return out;
  }

  Jet& operator+=(const Jet& o) {
    check_compatible(o);
    coeffs_ += o.coeffs_;
    return *this;
  }
  Jet& operator-=(const Jet& o) {
    check_compatible(o);
    coeffs_ -= o.coeffs_;
    return *this;
  }
  Jet& operator*=(const Jet& o) {
    *this = *this * o;
    return *this;
  }
  Jet& operator/=(const Jet& o) {
    *this = *this / o;
    return *this;
  }
  Jet& operator+=(Scalar s) {
    coeffs_[0] += s;
    return *this;
  }
  Jet& operator-=(Scalar s) {
    coeffs_[0] -= s;
    return *this;
  }
  Jet& operator*=(Scalar s) {
    coeffs_ *= s;
    return *this;
  }
  Jet& operator/=(Scalar s) {
    coeffs_ /= s;
    return *this;
  }

  friend Jet operator+(Jet a, const Jet& b) { return a += b; }
  friend Jet operator-(Jet a, const Jet& b) { return a -= b; }
  friend Jet operator+(Jet a, Scalar s) { return a += s; }
  friend Jet operator+(Scalar s, Jet a) { return a += s; }
  friend Jet operator-(Jet a, Scalar s) { return a -= s; }
  friend Jet operator-(Scalar s, const Jet& a) { return (-a) += s; }
  friend Jet operator*(Jet a, Scalar s) { return a *= s; }
  friend Jet operator*(Scalar s, Jet a) { return a *= s; }
  friend Jet operator/(Jet a, Scalar s) { return a /= s; }
  friend Jet operator/(Scalar s, const Jet& a) { return reciprocal(a) * s; }

  friend Jet operator*(const Jet& a, const Jet& b) {
    a.check_compatible(b);
    Jet out(a.num_vars(), a.order_);
    const auto* end = a.layout_->products_end(a.order_);
    for (const auto* p = a.layout_->products_begin(); p != end; ++p) {
      out.coeffs_[p->c] += a.coeffs_[p->a] * b.coeffs_[p->b];
    }
    return out;
  }
  friend Jet operator/(const Jet& a, const Jet& b) { return a * reciprocal(b); }

  /// phi(a) given phi and its first three derivatives at a.value().
  friend Jet compose(const Jet& a, Scalar f0, Scalar f1, Scalar f2, Scalar f3) {
    Jet h = a;
    h.coeffs_[0] = Scalar(0);
    Jet out = constant(f0, a.num_vars(), a.order_);
    if (a.order_ == 0) return out;
    out.coeffs_ += f1 * h.coeffs_;
    if (a.order_ == 1) return out;
    const Jet h2 = h * h;
    out.coeffs_ += (f2 / Scalar(2)) * h2.coeffs_;
    if (a.order_ == 2) return out;
    const Jet h3 = h2 * h;
    out.coeffs_ += (f3 / Scalar(6)) * h3.coeffs_;
    return out;
  }

  friend Jet reciprocal(const Jet& a) {
    using std::pow;
    const Scalar x = a.value();
    if (x == Scalar(0)) throw SingularPoint("reciprocal of a jet with zero value");
    const Scalar r = Scalar(1) / x;
    return compose(a, r, -r * r, Scalar(2) * r * r * r, Scalar(-6) * r * r * r * r);
  }

  /// Real power; the base value must be positive.
  friend Jet pow(const Jet& a, Scalar p) {
    using std::pow;
    const Scalar x = a.value();
    if (!(x > Scalar(0))) throw SingularPoint("real power of a jet with non-positive base");
    const Scalar v = pow(x, p);
    const Scalar r = Scalar(1) / x;
    return compose(a, v, p * v * r, p * (p - 1) * v * r * r, p * (p - 1) * (p - 2) * v * r * r * r);
  }

  friend Jet sqrt(const Jet& a) { return pow(a, Scalar(0.5)); }

  friend Jet exp(const Jet& a) {
    using std::exp;
    const Scalar e = exp(a.value());
    return compose(a, e, e, e, e);
  }

  friend Jet log(const Jet& a) {
    using std::log;
    const Scalar x = a.value();
    if (!(x > Scalar(0))) throw SingularPoint("log of a jet with non-positive value");
    const Scalar r = Scalar(1) / x;
    return compose(a, log(x), r, -r * r, Scalar(2) * r * r * r);
  }

  /// Non-negative integer power by repeated multiplication (any base sign).
  friend Jet ipow(const Jet& a, int k) {
    if (k < 0) return reciprocal(ipow(a, -k));
    Jet out = constant(Scalar(1), a.num_vars(), a.order_);
    for (int i = 0; i < k; ++i) out = out * a;
    return out;
  }

 private:
  void check_compatible(const Jet& o) const {
    if (layout_ != o.layout_ || order_ != o.order_) {
      throw InvalidInput("jet arithmetic on mismatched variable count or order");
    }
  }

  const JetLayout* layout_ = nullptr;
  int order_ = 0;
  Coefficients coeffs_;
};

using Jetd = Jet<double>;

}  // namespace heis
