#pragma once

#include <array>
#include <cstdint>
#include <vector>

namespace heis {

/// Graded-lexicographic storage plan for truncated Taylor coefficients in
/// `num_vars` variables up to order 3.
///
/// Coefficients are grouped by degree (constant, linear, quadratic, cubic),
/// each unordered multi-index stored once.  Because the grouping is graded,
/// the layout for order `k` is a prefix of the layout for order `k + 1`, so a
/// single table per variable count serves every order.
class JetLayout {
 public:
  static constexpr int kMaxVars = 9;
  static constexpr int kMaxOrder = 3;

  /// (a, b, c): coefficient c of a product receives a[a] * b[b].
  struct Product {
    std::uint16_t a;
    std::uint16_t b;
    std::uint16_t c;
  };

  /// Shared immutable layout; thread-safe lazy construction.
  static const JetLayout& get(int num_vars);

  int num_vars() const noexcept { return num_vars_; }
  /// Number of coefficients needed to store a jet of the given order.
  int size(int order) const noexcept { return size_by_order_[order]; }

  int index() const noexcept { return 0; }
  int index(int i) const noexcept { return lookup(i, num_vars_, num_vars_); }
  int index(int i, int j) const noexcept;
  int index(int i, int j, int k) const noexcept;

  int degree(int coeff) const noexcept { return degree_[coeff]; }
  /// Product of factorials of the multi-index; converts Taylor coefficients
  /// to partial derivatives.
  double factorial_weight(int coeff) const noexcept { return factorial_weight_[coeff]; }
  /// Multiplicity of `var` in the multi-index of `coeff`.
  int multiplicity(int coeff, int var) const noexcept { return counts_[coeff * num_vars_ + var]; }
  /// Index of multi-index(coeff) + e_var, or -1 when that exceeds order 3.
  int raised(int coeff, int var) const noexcept { return raised_[coeff * num_vars_ + var]; }

  /// Products whose target degree is <= order, as a contiguous prefix.
  const Product* products_begin() const noexcept { return products_.data(); }
  const Product* products_end(int order) const noexcept {
    return products_.data() + product_count_by_order_[order];
  }

 private:
  explicit JetLayout(int num_vars);
  int lookup(int a, int b, int c) const noexcept {
    const int m = num_vars_ + 1;
    return table_[(a * m + b) * m + c];
  }

  int num_vars_;
  std::array<int, kMaxOrder + 1> size_by_order_{};
  std::array<int, kMaxOrder + 1> product_count_by_order_{};
  std::vector<int> table_;
  std::vector<int> degree_;
  std::vector<double> factorial_weight_;
  std::vector<int> counts_;
  std::vector<int> raised_;
  std::vector<Product> products_;
};

}  // namespace heis
