#pragma once
// Edge cocycles, fibered functions and congruence transfer operators.

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <numbers>
#include <set>
#include <utility>
#include <vector>

#include "umix/fit.hpp"
#include "umix/group.hpp"
#include "umix/thermo.hpp"

namespace umix {

/// Locally constant cocycle: one group element per admissible edge (j, k).
class Cocycle {
 public:
  Cocycle() = default;
  Cocycle(const Subshift& s, const FiniteGroup& g, const std::map<std::pair<int, int>, int>& edges)
      : n_(s.size()), edge_(static_cast<size_t>(s.size()) * s.size(), -1) {
    for (const auto& [jk, val] : edges) {
      auto [j, k] = jk;
      if (j < 0 || k < 0 || j >= n_ || k >= n_ || !s.allowed(j, k))
        throw Error(Errc::ValidationError, "cocycle given on inadmissible edge (" + std::to_string(j) + "," +
                                               std::to_string(k) + ")");
      if (val < 0 || val >= g.order()) throw Error(Errc::BadIndex, "cocycle value outside the group");
      edge_[static_cast<size_t>(j) * n_ + k] = val;
    }
    for (int j = 0; j < n_; ++j)
      for (int k = 0; k < n_; ++k)
        if (s.allowed(j, k) && at(j, k) < 0)
          throw Error(Errc::ValidationError, "cocycle missing on edge (" + std::to_string(j) + "," +
                                                 std::to_string(k) + ")");
  }

  int at(int j, int k) const { return edge_[static_cast<size_t>(j) * n_ + k]; }
  int alphabet() const { return n_; }

  /// Same edges with every value mapped through f.
  template <class F>
  Cocycle mapped(F f) const {
    Cocycle c = *this;
    for (int& v : c.edge_)
      if (v >= 0) v = f(v);
    return c;
  }

 private:
  int n_ = 0;
  std::vector<int> edge_;
};

inline Cocycle constant_cocycle(const Subshift& s, const FiniteGroup& g, int value) {
  std::map<std::pair<int, int>, int> m;
  for (int j = 0; j < s.size(); ++j)
    for (int k = 0; k < s.size(); ++k)
      if (s.allowed(j, k)) m[{j, k}] = value;
  return Cocycle(s, g, m);
}

/// c(w0,w1) c(w1,w2) ... c(w_{k-1},w_k), identity for a single symbol.
inline int cocycle_product(const Cocycle& c, const FiniteGroup& g, const int* w, int len) {
  int acc = g.id();
  for (int i = 0; i + 1 < len; ++i) {
    int v = c.at(w[i], w[i + 1]);
    if (v < 0) throw Error(Errc::InadmissibleWord, "inadmissible edge in cocycle product");
    acc = g.mul(acc, v);
  }
  return acc;
}

inline int cocycle_product(const Cocycle& c, const FiniteGroup& g, const Word& w) {
  if (w.empty()) return g.id();
  for (int s : w)
    if (s < 0 || s >= c.alphabet()) throw Error(Errc::InadmissibleWord, "symbol outside the alphabet");
  return cocycle_product(c, g, w.data(), static_cast<int>(w.size()));
}

/// Map from depth-K cylinders to complex vectors over the group.
struct FiberedFunction {
  int depth = 0;
  int order = 0;
  std::vector<cd> v;
  bool zero_sum = false;

  FiberedFunction() = default;
  FiberedFunction(int depth_, int order_, size_t cylinders)
      : depth(depth_), order(order_), v(cylinders * static_cast<size_t>(order_), cd(0)) {}

  size_t cylinders() const { return order ? v.size() / static_cast<size_t>(order) : 0; }
  cd* fiber(size_t i) { return v.data() + i * order; }
  const cd* fiber(size_t i) const { return v.data() + i * order; }
  std::vector<cd> fiber_vec(size_t i) const { return {fiber(i), fiber(i) + order}; }
};

inline double fiber_norm(const cd* f, int n) {
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += std::norm(f[i]);
  return std::sqrt(s);
}

/// Largest absolute fiber sum.
inline double max_fiber_sum(const FiberedFunction& H) {
  double m = 0.0;
  for (size_t i = 0; i < H.cylinders(); ++i) {
    cd s(0);
    for (int g = 0; g < H.order; ++g) s += H.fiber(i)[g];
    m = std::max(m, std::abs(s));
  }
  return m;
}

/// ||H||_2 with nu_U weights on cylinders.
inline double norm2(const FiberedFunction& H, const std::vector<double>& nu) {
  double s = 0.0;
  for (size_t i = 0; i < H.cylinders(); ++i) {
    double f = 0.0;
    for (int g = 0; g < H.order; ++g) f += std::norm(H.fiber(i)[g]);
    s += nu[i] * f;
  }
  return std::sqrt(s);
}

/// <A, B> = sum_u nu(u) sum_g A(u)(g) conj(B(u)(g)).
inline cd inner(const FiberedFunction& A, const FiberedFunction& B, const std::vector<double>& nu) {
  if (A.v.size() != B.v.size()) throw Error(Errc::DimensionMismatch, "inner product of mismatched functions");
  cd s(0);
  for (size_t i = 0; i < A.cylinders(); ++i) {
    cd f(0);
    for (int g = 0; g < A.order; ++g) f += A.fiber(i)[g] * std::conj(B.fiber(i)[g]);
    s += nu[i] * f;
  }
  return s;
}

/// Congruence transfer operator M_{xi,q} on depth-K fibered functions:
/// (MH)(x)(g) = sum over x' = a x of w(x') H(x')(g c(a, x_0)^{-1}).
class CongruenceOperator {
 public:
  CongruenceOperator() = default;

  /// Weights e^{f^(a) + i b tau} from the thermodynamic context.
  CongruenceOperator(const Thermo& th, const FiniteGroup& g, const Cocycle& c, cd xi)
      : CongruenceOperator(th.op(), g, c, weights(th, xi)) {}

  /// Arbitrary complex weights per extension word.
  CongruenceOperator(const Transfer& op, const FiniteGroup& g, const Cocycle& c, std::vector<cd> w)
      : op_(&op), g_(&g), w_(std::move(w)) {
    if (w_.size() != op.ext().size()) throw Error(Errc::DimensionMismatch, "one weight per extension word");
    cinv_.resize(op.ext().size());
    for (size_t e = 0; e < op.ext().size(); ++e) {
      const int* x = op.ext().word(e);
      cinv_[e] = g.inv(c.at(x[0], x[1]));
    }
    // Row k of the translation table: g -> g c^{-1} for each distinct c^{-1}.
    std::set<int> used(cinv_.begin(), cinv_.end());
    perm_.assign(static_cast<size_t>(g.order()), {});
    for (int ci : used) {
      auto& p = perm_[ci];
      p.resize(g.order());
      for (int x = 0; x < g.order(); ++x) p[x] = g.mul(x, ci);
    }
  }

  static std::vector<cd> weights(const Thermo& th, cd xi) {
    Normalized n = th.normalized(xi.real());
    std::vector<cd> w(n.f_ext.size());
    for (size_t e = 0; e < w.size(); ++e) w[e] = std::exp(cd(n.f_ext[e], xi.imag() * th.tau_ext()[e]));
    return w;
  }

  const Transfer& op() const { return *op_; }
  const FiniteGroup& group() const { return *g_; }
  const std::vector<cd>& w() const { return w_; }

  FiberedFunction apply(const FiberedFunction& H) const {
    const int n = g_->order();
    if (H.order != n || H.cylinders() != op_->size())
      throw Error(Errc::DimensionMismatch, "fibered function does not match operator");
    FiberedFunction out(H.depth, n, op_->size());
    out.zero_sum = H.zero_sum;
    for (size_t x = 0; x < op_->size(); ++x) {
      auto [b, e] = op_->preds(x);
      cd* o = out.fiber(x);
      for (int gi = 0; gi < n; ++gi) {
        cd acc(0);
        for (auto p = b; p != e; ++p) acc += w_[*p] * H.fiber(op_->src(*p))[perm_[cinv_[*p]][gi]];
        o[gi] = acc;
      }
    }
    return out;
  }

  FiberedFunction power(const FiberedFunction& H, int k) const {
    FiberedFunction out = H;
    for (int i = 0; i < k; ++i) out = apply(out);
    return out;
  }

 private:
  const Transfer* op_ = nullptr;
  const FiniteGroup* g_ = nullptr;
  std::vector<cd> w_;
  std::vector<int> cinv_;
  std::vector<std::vector<int>> perm_;
};

struct NormReport {
  double sup = 0.0;
  double lip_d = 0.0;
  double lip_dtheta = 0.0;
  double one_b = 0.0;
};

/// Sup and Lipschitz seminorms of a fibered function over all cylinder pairs.
inline NormReport norms(const FiberedFunction& H, double b, const Cylinders& cyl) {
  const Subshift& s = cyl.shift();
  NormReport r;
  const size_t n = H.cylinders();
  for (size_t i = 0; i < n; ++i) r.sup = std::max(r.sup, fiber_norm(H.fiber(i), H.order));
  std::vector<cd> diff(H.order);
  for (size_t i = 0; i < n; ++i)
    for (size_t j = i + 1; j < n; ++j) {
      for (int g = 0; g < H.order; ++g) diff[g] = H.fiber(i)[g] - H.fiber(j)[g];
      double dn = fiber_norm(diff.data(), H.order);
      if (dn == 0.0) continue;
      int k = first_disagreement(cyl.word(i), cyl.word(j), cyl.depth());
      double dth = std::pow(s.theta(), k);
      double dD = cyl.word(i)[0] != cyl.word(j)[0] ? 1.0 : s.diameter(cyl.word(i), k);
      r.lip_dtheta = std::max(r.lip_dtheta, dn / dth);
      r.lip_d = std::max(r.lip_d, dn / dD);
    }
  r.one_b = r.sup + r.lip_d / std::max(1.0, std::fabs(b));
  return r;
}

struct GapReport {
  int level = 0;
  std::vector<double> norms;
  double eta_hat = 0.0;
  double C = 0.0;
  double residual = 0.0;  // standard error of the fitted rate
  double rms = 0.0;
  bool fitted = false;
  int fit_from = 0;
  int fit_to = 0;
};

/// Fit log-norms against k over the tail half, stopping before any norm below 1e-300.
inline GapReport fit_decay(const std::vector<double>& norms) {
  GapReport r;
  r.norms = norms;
  const int kmax = static_cast<int>(norms.size()) - 1;
  if (kmax < 1) return r;
  int last = kmax;
  for (int k = 0; k <= kmax; ++k)
    if (!(norms[k] > 1e-300)) {
      last = k - 1;
      break;
    }
  int first = (last + 1) / 2;
  if (last - first < 1) first = std::max(0, last - 1);
  if (last - first < 1) return r;
  std::vector<double> x, y;
  for (int k = first; k <= last; ++k) {
    x.push_back(k);
    y.push_back(std::log(norms[k]));
  }
  LinearFit f = linear_fit(x, y);
  r.eta_hat = -f.slope;
  r.C = std::exp(f.intercept);
  r.residual = f.slope_se;
  r.rms = f.rms;
  r.fitted = true;
  r.fit_from = first;
  r.fit_to = last;
  return r;
}

/// Norms ||M^k H||_2 for k = 0..kmax and the fitted exponential rate.
inline GapReport twisted_decay(const CongruenceOperator& M, const FiberedFunction& H, int kmax,
                               const std::vector<double>& nu, double zero_tol = 1e-10) {
  if (kmax < 0) throw Error(Errc::BadRange, "kmax must be nonnegative");
  double scale = 0.0;
  for (const auto& z : H.v) scale = std::max(scale, std::abs(z));
  if (max_fiber_sum(H) > zero_tol * std::max(1.0, scale) * H.order)
    throw Error(Errc::NotZeroSum, "twisted_decay needs fibers summing to zero");
  std::vector<double> out{norm2(H, nu)};
  FiberedFunction cur = H;
  for (int k = 1; k <= kmax; ++k) {
    cur = M.apply(cur);
    out.push_back(norm2(cur, nu));
  }
  GapReport r = fit_decay(out);
  r.level = M.group().level();
  return r;
}

/// Fiber equal to the character g -> exp(2 pi i m g / q) of a cyclic group.
inline std::vector<cd> cyclic_character(int q, int m) {
  std::vector<cd> v(q);
  for (int g = 0; g < q; ++g) v[g] = std::polar(1.0, 2.0 * std::numbers::pi * m * g / q);
  return v;
}

// ---------------------------------------------------------------------------
// Levels of a product group.

/// Sub-product of factors and the maps between the two levels.
struct NewSpace {
  const FiniteGroup* G = nullptr;
  std::vector<int> keep;   // retained factor indices, increasing
  FiniteGroup quotient;    // product of the retained factors
  long spade = 1;          // order(G) / order(quotient)

  /// Image of g in the quotient.
  int project_element(int g) const {
    auto c = G->split(g);
    if (keep.size() == G->factors().size()) return g;
    std::vector<int> d;
    for (int i : keep) d.push_back(c[i]);
    return quotient.is_product() ? quotient.join(d) : d[0];
  }

  /// Projector e: zero-sum along retained factors, average along dropped ones.
  std::vector<cd> apply_e(const std::vector<cd>& f) const {
    std::vector<cd> v = f;
    const auto& fs = G->factors();
    size_t stride = 1;
    std::vector<size_t> strides(fs.size());
    for (size_t i = fs.size(); i-- > 0;) {
      strides[i] = stride;
      stride *= fs[i].order();
    }
    for (size_t i = 0; i < fs.size(); ++i) {
      bool kept = std::find(keep.begin(), keep.end(), static_cast<int>(i)) != keep.end();
      const size_t m = fs[i].order(), st = strides[i];
      for (size_t base = 0; base < v.size(); ++base) {
        if ((base / st) % m != 0) continue;
        cd mean(0);
        for (size_t t = 0; t < m; ++t) mean += v[base + t * st];
        mean /= static_cast<double>(m);
        for (size_t t = 0; t < m; ++t) v[base + t * st] = kept ? v[base + t * st] - mean : mean;
      }
    }
    return v;
  }

  /// Push a fiber constant along dropped factors down to the quotient.
  std::vector<cd> proj(const std::vector<cd>& f) const {
    std::vector<cd> out(quotient.order());
    const auto& fs = G->factors();
    for (int g = 0; g < G->order(); ++g) {
      auto c = G->split(g);
      bool lift = true;
      for (size_t i = 0; i < fs.size(); ++i)
        if (std::find(keep.begin(), keep.end(), static_cast<int>(i)) == keep.end() && c[i] != 0) lift = false;
      if (lift) out[project_element(g)] = f[g];
    }
    return out;
  }

  FiberedFunction apply_e(const FiberedFunction& H) const {
    FiberedFunction out = H;
    for (size_t i = 0; i < H.cylinders(); ++i) {
      auto v = apply_e(H.fiber_vec(i));
      std::copy(v.begin(), v.end(), out.fiber(i));
    }
    out.zero_sum = !keep.empty() || H.zero_sum;
    return out;
  }

  FiberedFunction proj(const FiberedFunction& H) const {
    FiberedFunction out(H.depth, quotient.order(), H.cylinders());
    for (size_t i = 0; i < H.cylinders(); ++i) {
      auto v = proj(H.fiber_vec(i));
      std::copy(v.begin(), v.end(), out.fiber(i));
    }
    return out;
  }

  Cocycle project(const Cocycle& c) const {
    return c.mapped([this](int g) { return project_element(g); });
  }
};

inline NewSpace new_subspace(const FiniteGroup& G, std::vector<int> keep) {
  if (!G.is_product()) throw Error(Errc::NotAProductGroup, "new subspaces need a product group");
  std::sort(keep.begin(), keep.end());
  const int nf = static_cast<int>(G.factors().size());
  for (size_t i = 0; i < keep.size(); ++i)
    if (keep[i] < 0 || keep[i] >= nf || (i && keep[i] == keep[i - 1]))
      throw Error(Errc::BadFactorSelection, "invalid factor selection");
  NewSpace ns;
  ns.G = &G;
  ns.keep = keep;
  if (keep.empty()) {
    ns.quotient = cyclic_group(1);
  } else if (static_cast<int>(keep.size()) == nf) {
    ns.quotient = G;
  } else {
    std::vector<FiniteGroup> fs;
    for (int i : keep) fs.push_back(G.factors()[i]);
    ns.quotient = fs.size() == 1 ? fs[0] : product_group(fs);
  }
  ns.spade = G.order() / ns.quotient.order();
  return ns;
}

// ---------------------------------------------------------------------------

/// All admissible words of len symbols from y to z.
inline std::vector<Word> paths(const Subshift& s, int y, int z, int len) {
  std::vector<Word> out;
  Word w(len);
  w[0] = y;
  std::function<void(int)> rec = [&](int pos) {
    if (pos == len) {
      if (w[len - 1] == z) out.push_back(w);
      return;
    }
    for (int a = 0; a < s.size(); ++a)
      if (s.allowed(w[pos - 1], a)) {
        w[pos] = a;
        rec(pos + 1);
      }
  };
  if (len == 1) {
    if (y == z) out.push_back(w);
  } else {
    rec(1);
  }
  return out;
}

/// S^p(y,z): products c^{p+1}(alpha) c^{p+1}(alpha')^{-1} over paths y -> z of p+2 symbols.
inline std::vector<int> generating_set(const Cocycle& c, const FiniteGroup& g, const Subshift& s, int p, int y,
                                       int z) {
  if (p < 0) throw Error(Errc::BadRange, "p must be nonnegative");
  auto ps = paths(s, y, z, p + 2);
  if (ps.empty()) throw Error(Errc::NoAdmissiblePath, "no admissible path between the symbols");
  std::set<int> prods;
  for (const auto& w : ps) prods.insert(cocycle_product(c, g, w));
  std::set<int> out;
  for (int a : prods)
    for (int b : prods) out.insert(g.mul(a, g.inv(b)));
  return {out.begin(), out.end()};
}

}  // namespace umix
