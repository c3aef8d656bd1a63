#pragma once
// Finite groups by multiplication table, and convolution on them.

#include <algorithm>
#include <array>
#include <complex>
#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "umix/error.hpp"

namespace umix {

/// Group given by its full multiplication table. Product groups keep their factors
/// and index elements in mixed radix with the first factor most significant.
class FiniteGroup {
 public:
  FiniteGroup() = default;

  int order() const { return n_; }
  int id() const { return id_; }
  int mul(int a, int b) const { return mul_[static_cast<size_t>(a) * n_ + b]; }
  int inv(int a) const { return inv_[a]; }
  const std::string& kind() const { return kind_; }
  /// Level q of the congruence quotient: the modulus for cyclic and sl2, the product for products.
  int level() const { return level_; }
  const std::string& label(int g) const { return labels_[g]; }
  const std::vector<std::string>& labels() const { return labels_; }
  const std::vector<FiniteGroup>& factors() const { return factors_; }
  bool is_product() const { return !factors_.empty(); }

  int find_label(const std::string& s) const {
    auto it = by_label_.find(s);
    return it == by_label_.end() ? -1 : it->second;
  }

  /// Components of g in the factors (product groups only).
  std::vector<int> split(int g) const {
    std::vector<int> c(factors_.size());
    for (size_t i = factors_.size(); i-- > 0;) {
      int m = factors_[i].order();
      c[i] = g % m;
      g /= m;
    }
    return c;
  }
  int join(const std::vector<int>& c) const {
    int g = 0;
    for (size_t i = 0; i < factors_.size(); ++i) g = g * factors_[i].order() + c[i];
    return g;
  }

  /// Table from raw parts; fills inverses and the identity, checks closure.
  static FiniteGroup from_table(std::string kind, int level, std::vector<int> mul, std::vector<std::string> labels) {
    FiniteGroup g;
    g.kind_ = std::move(kind);
    g.level_ = level;
    g.n_ = static_cast<int>(labels.size());
    g.mul_ = std::move(mul);
    g.labels_ = std::move(labels);
    if (g.mul_.size() != static_cast<size_t>(g.n_) * g.n_)
      throw Error(Errc::DimensionMismatch, "multiplication table has the wrong size");
    g.id_ = -1;
    for (int e = 0; e < g.n_ && g.id_ < 0; ++e) {
      bool ok = true;
      for (int a = 0; a < g.n_ && ok; ++a) ok = g.mul(e, a) == a && g.mul(a, e) == a;
      if (ok) g.id_ = e;
    }
    if (g.id_ < 0) throw Error(Errc::ValidationError, "table has no identity");
    g.inv_.assign(g.n_, -1);
    for (int a = 0; a < g.n_; ++a)
      for (int b = 0; b < g.n_; ++b)
        if (g.mul(a, b) == g.id_) {
          g.inv_[a] = b;
          break;
        }
    for (int a = 0; a < g.n_; ++a)
      if (g.inv_[a] < 0) throw Error(Errc::ValidationError, "element without inverse");
    for (int i = 0; i < g.n_; ++i) g.by_label_[g.labels_[i]] = i;
    return g;
  }

  static FiniteGroup product(const std::vector<FiniteGroup>& fs, int cap) {
    if (fs.empty()) throw Error(Errc::ValidationError, "empty product");
    long n = 1;
    int level = 1;
    for (const auto& f : fs) {
      n *= f.order();
      level *= f.level();
      if (n > cap) throw Error(Errc::OrderTooLarge, "product order exceeds cap " + std::to_string(cap));
    }
    FiniteGroup g;
    g.factors_ = fs;
    g.n_ = static_cast<int>(n);
    std::vector<std::string> labels(n);
    for (int a = 0; a < n; ++a) {
      auto c = g.split(a);
      std::string s = "(";
      for (size_t i = 0; i < c.size(); ++i) s += (i ? "," : "") + fs[i].label(c[i]);
      labels[a] = s + ")";
    }
    std::vector<int> mul(static_cast<size_t>(n) * n);
    for (int a = 0; a < n; ++a) {
      auto ca = g.split(a);
      for (int b = 0; b < n; ++b) {
        auto cb = g.split(b);
        std::vector<int> cc(fs.size());
        for (size_t i = 0; i < fs.size(); ++i) cc[i] = fs[i].mul(ca[i], cb[i]);
        mul[static_cast<size_t>(a) * n + b] = g.join(cc);
      }
    }
    FiniteGroup out = from_table("product", level, std::move(mul), std::move(labels));
    out.factors_ = fs;
    return out;
  }

 private:
  int n_ = 0;
  int id_ = 0;
  int level_ = 1;
  std::string kind_;
  std::vector<int> mul_, inv_;
  std::vector<std::string> labels_;
  std::map<std::string, int> by_label_;
  std::vector<FiniteGroup> factors_;
};

inline constexpr int kDefaultOrderCap = 3000;

inline FiniteGroup cyclic_group(int q, int cap = kDefaultOrderCap) {
  if (q < 1) throw Error(Errc::ValidationError, "cyclic order must be positive");
  if (q > cap) throw Error(Errc::OrderTooLarge, "cyclic order exceeds cap");
  std::vector<int> mul(static_cast<size_t>(q) * q);
  std::vector<std::string> labels(q);
  for (int a = 0; a < q; ++a) {
    labels[a] = std::to_string(a);
    for (int b = 0; b < q; ++b) mul[static_cast<size_t>(a) * q + b] = (a + b) % q;
  }
  return FiniteGroup::from_table("cyclic", q, std::move(mul), std::move(labels));
}

inline bool is_prime(int p) {
  if (p < 2) return false;
  for (int d = 2; d * d <= p; ++d)
    if (p % d == 0) return false;
  return true;
}

inline std::string sl2_label(int a, int b, int c, int d) {
  return "[" + std::to_string(a) + "," + std::to_string(b) + ";" + std::to_string(c) + "," + std::to_string(d) + "]";
}

/// SL_2(F_p), elements [a,b;c,d] in lexicographic order of (a,b,c,d).
inline FiniteGroup sl2_group(int p, int cap = kDefaultOrderCap) {
  if (!is_prime(p) || p == 2) throw Error(Errc::NotPrime, std::to_string(p) + " is not an odd prime");
  if (p > 13) throw Error(Errc::OrderTooLarge, "sl2 is limited to p <= 13");
  long order = static_cast<long>(p) * (static_cast<long>(p) * p - 1);
  if (order > cap) throw Error(Errc::OrderTooLarge, "sl2 order exceeds cap");
  std::vector<std::array<int, 4>> els;
  for (int a = 0; a < p; ++a)
    for (int b = 0; b < p; ++b)
      for (int c = 0; c < p; ++c)
        for (int d = 0; d < p; ++d)
          if (((a * d - b * c) % p + p) % p == 1) els.push_back({a, b, c, d});
  const int n = static_cast<int>(els.size());
  auto code = [p](const std::array<int, 4>& m) { return ((m[0] * p + m[1]) * p + m[2]) * p + m[3]; };
  std::vector<int> lookup(static_cast<size_t>(p) * p * p * p, -1);
  std::vector<std::string> labels(n);
  for (int i = 0; i < n; ++i) {
    lookup[code(els[i])] = i;
    labels[i] = sl2_label(els[i][0], els[i][1], els[i][2], els[i][3]);
  }
  std::vector<int> mul(static_cast<size_t>(n) * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const auto& x = els[i];
      const auto& y = els[j];
      std::array<int, 4> z{(x[0] * y[0] + x[1] * y[2]) % p, (x[0] * y[1] + x[1] * y[3]) % p,
                           (x[2] * y[0] + x[3] * y[2]) % p, (x[2] * y[1] + x[3] * y[3]) % p};
      mul[static_cast<size_t>(i) * n + j] = lookup[code(z)];
    }
  return FiniteGroup::from_table("sl2", p, std::move(mul), std::move(labels));
}

inline FiniteGroup product_group(const std::vector<FiniteGroup>& fs, int cap = kDefaultOrderCap) {
  return FiniteGroup::product(fs, cap);
}

/// Associativity and inverse check; exhaustive up to order 64, sampled above.
inline bool verify_group(const FiniteGroup& g, std::uint64_t seed = 1, int samples = 20000) {
  const int n = g.order();
  for (int a = 0; a < n; ++a)
    if (g.mul(a, g.inv(a)) != g.id() || g.mul(g.inv(a), a) != g.id()) return false;
  auto check = [&](int a, int b, int c) { return g.mul(g.mul(a, b), c) == g.mul(a, g.mul(b, c)); };
  if (n <= 64) {
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b)
        for (int c = 0; c < n; ++c)
          if (!check(a, b, c)) return false;
    return true;
  }
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> u(0, n - 1);
  for (int i = 0; i < samples; ++i)
    if (!check(u(rng), u(rng), u(rng))) return false;
  return true;
}

/// Subgroup generated by a set, as a membership mask.
inline std::vector<char> generated_subgroup(const FiniteGroup& g, const std::vector<int>& gens) {
  std::vector<char> in(g.order(), 0);
  std::vector<int> stack{g.id()};
  in[g.id()] = 1;
  while (!stack.empty()) {
    int x = stack.back();
    stack.pop_back();
    for (int s : gens)
      for (int y : {g.mul(x, s), g.mul(x, g.inv(s))})
        if (!in[y]) {
          in[y] = 1;
          stack.push_back(y);
        }
  }
  return in;
}

inline bool generates(const FiniteGroup& g, const std::vector<int>& gens) {
  auto in = generated_subgroup(g, gens);
  return std::count(in.begin(), in.end(), 1) == g.order();
}

/// (mu * phi)(g) = sum_h mu(h) phi(g h^{-1}).
template <class M, class V>
std::vector<V> convolve(const std::vector<M>& mu, const std::vector<V>& phi, const FiniteGroup& g) {
  const int n = g.order();
  if (static_cast<int>(mu.size()) != n || static_cast<int>(phi.size()) != n)
    throw Error(Errc::DimensionMismatch, "convolution operands do not match the group order");
  std::vector<V> out(n, V(0));
  for (int h = 0; h < n; ++h) {
    if (mu[h] == M(0)) continue;
    int hi = g.inv(h);
    for (int x = 0; x < n; ++x) out[x] += mu[h] * phi[g.mul(x, hi)];
  }
  return out;
}

/// Adjoint measure mu*(g) = conj(mu(g^{-1})).
inline std::vector<std::complex<double>> adjoint_measure(const std::vector<std::complex<double>>& mu,
                                                         const FiniteGroup& g) {
  std::vector<std::complex<double>> out(mu.size());
  for (int x = 0; x < g.order(); ++x) out[x] = std::conj(mu[g.inv(x)]);
  return out;
}

/// Right translation (delta_c * phi)(g) = phi(g c^{-1}).
template <class V>
std::vector<V> translate(const std::vector<V>& phi, int c, const FiniteGroup& g) {
  std::vector<V> out(phi.size());
  int ci = g.inv(c);
  for (int x = 0; x < g.order(); ++x) out[x] = phi[g.mul(x, ci)];
  return out;
}

}  // namespace umix
