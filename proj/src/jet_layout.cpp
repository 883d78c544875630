#include "heis/jet_layout.hpp"

#include <algorithm>
#include <memory>
#include <mutex>

#include "heis/errors.hpp"

namespace heis {

namespace {

// Sorted multi-index padded with `pad` (= num_vars) for absent slots.
using Key = std::array<int, 3>;

Key merge(const Key& a, const Key& b) {
  std::array<int, 6> all{a[0], a[1], a[2], b[0], b[1], b[2]};
  std::sort(all.begin(), all.end());
  return {all[0], all[1], all[2]};
}

int key_degree(const Key& k, int pad) {
  return static_cast<int>(std::count_if(k.begin(), k.end(), [pad](int v) { return v != pad; }));
}

}  // namespace

const JetLayout& JetLayout::get(int num_vars) {
  if (num_vars < 1 || num_vars > kMaxVars) {
    throw InvalidInput("jet layout supports 1.." + std::to_string(kMaxVars) + " variables");
  }
  static std::array<std::unique_ptr<JetLayout>, kMaxVars + 1> cache;
  static std::array<std::once_flag, kMaxVars + 1> flags;
  std::call_once(flags[num_vars], [num_vars] { cache[num_vars].reset(new JetLayout(num_vars)); });
  return *cache[num_vars];
}

int JetLayout::index(int i, int j) const noexcept {
  if (i > j) std::swap(i, j);
  return lookup(i, j, num_vars_);
}

int JetLayout::index(int i, int j, int k) const noexcept {
  std::array<int, 3> v{i, j, k};
  std::sort(v.begin(), v.end());
  return lookup(v[0], v[1], v[2]);
}

JetLayout::JetLayout(int num_vars) : num_vars_(num_vars) {
  const int d = num_vars;
  const int pad = d;
  const int m = d + 1;
  table_.assign(static_cast<std::size_t>(m * m * m), -1);

  std::vector<Key> keys;
  keys.push_back({pad, pad, pad});
  for (int i = 0; i < d; ++i) keys.push_back({i, pad, pad});
  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j) keys.push_back({i, j, pad});
  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j)
      for (int k = j; k < d; ++k) keys.push_back({i, j, k});

  size_by_order_ = {1, 1 + d, 1 + d + d * (d + 1) / 2, static_cast<int>(keys.size())};

  const int n_coeff = static_cast<int>(keys.size());
  degree_.resize(n_coeff);
  factorial_weight_.resize(n_coeff);
  counts_.assign(static_cast<std::size_t>(n_coeff * d), 0);
  for (int c = 0; c < n_coeff; ++c) {
    const Key& k = keys[c];
    table_[(k[0] * m + k[1]) * m + k[2]] = c;
    degree_[c] = key_degree(k, pad);
    for (int v : k)
      if (v != pad) ++counts_[c * d + v];
    double w = 1.0;
    for (int v = 0; v < d; ++v) {
      for (int f = 2; f <= counts_[c * d + v]; ++f) w *= f;
    }
    factorial_weight_[c] = w;
  }

  raised_.assign(static_cast<std::size_t>(n_coeff * d), -1);
  for (int c = 0; c < n_coeff; ++c) {
    if (degree_[c] == kMaxOrder) continue;
    for (int v = 0; v < d; ++v) {
      const Key r = merge(keys[c], {v, pad, pad});
      raised_[c * d + v] = table_[(r[0] * m + r[1]) * m + r[2]];
    }
  }

  for (int a = 0; a < n_coeff; ++a) {
    for (int b = 0; b < n_coeff; ++b) {
      if (degree_[a] + degree_[b] > kMaxOrder) continue;
      const Key r = merge(keys[a], keys[b]);
      const int c = table_[(r[0] * m + r[1]) * m + r[2]];
      products_.push_back({static_cast<std::uint16_t>(a), static_cast<std::uint16_t>(b),
                           static_cast<std::uint16_t>(c)});
    }
  }
  std::stable_sort(products_.begin(), products_.end(),
                   [this](const Product& x, const Product& y) { return degree_[x.c] < degree_[y.c]; });
  for (int o = 0; o <= kMaxOrder; ++o) {
    product_count_by_order_[o] = static_cast<int>(std::count_if(
        products_.begin(), products_.end(), [this, o](const Product& p) { return degree_[p.c] <= o; }));
  }
}

}  // namespace heis
