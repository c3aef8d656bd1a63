#pragma once
// Path measures on the group, Cayley-graph gaps, nearly flat decompositions
// and the level-by-level flattening experiment.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "umix/congruence.hpp"
#include "umix/error.hpp"
#include "umix/fit.hpp"
#include "umix/group.hpp"
#include "umix/sft.hpp"
#include "umix/thermo.hpp"

namespace umix {

using RealMeasure = std::vector<double>;
using ComplexMeasure = std::vector<cd>;

template <class T>
double l1_norm(const std::vector<T>& v) {
  double s = 0.0;
  for (const auto& x : v) s += std::abs(x);
  return s;
}
template <class T>
double l2_norm(const std::vector<T>& v) {
  double s = 0.0;
  for (const auto& x : v) s += std::norm(x);
  return std::sqrt(s);
}
template <class T>
double linf_norm(const std::vector<T>& v) {
  double s = 0.0;
  for (const auto& x : v) s = std::max(s, static_cast<double>(std::abs(x)));
  return s;
}

inline ComplexMeasure to_complex(const RealMeasure& m) { return {m.begin(), m.end()}; }

inline ComplexMeasure delta_measure(const FiniteGroup& g, int at) {
  ComplexMeasure m(g.order(), cd(0));
  m[at] = 1.0;
  return m;
}

inline ComplexMeasure uniform_measure(const FiniteGroup& g) {
  return ComplexMeasure(g.order(), cd(1.0 / g.order()));
}

/// Random unit vector of the fiber with zero sum.
inline std::vector<cd> random_zero_sum_unit(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> z(0.0, 1.0);
  std::vector<cd> v(n);
  cd mean(0);
  for (auto& x : v) {
    x = cd(z(rng), z(rng));
    mean += x;
  }
  mean /= static_cast<double>(n);
  for (auto& x : v) x -= mean;
  double nv = l2_norm(v);
  for (auto& x : v) x /= nv;
  return v;
}

// ---------------------------------------------------------------------------
// Cayley graphs.

class CayleyGraph {
 public:
  /// Generators are deduplicated and closed under inversion.
  CayleyGraph(const FiniteGroup& g, const std::vector<int>& gens) : g_(&g) {
    if (gens.empty()) throw Error(Errc::EmptyGeneratingSet, "Cayley graph needs generators");
    std::set<int> s;
    for (int x : gens) {
      if (x < 0 || x >= g.order()) throw Error(Errc::BadIndex, "generator outside the group");
      s.insert(x);
      s.insert(g.inv(x));
    }
    gens_.assign(s.begin(), s.end());
  }

  const FiniteGroup& group() const { return *g_; }
  const std::vector<int>& gens() const { return gens_; }
  int degree() const { return static_cast<int>(gens_.size()); }

  /// (A phi)(x) = sum over s in S of phi(x s).
  std::vector<cd> adjacency(const std::vector<cd>& phi) const {
    std::vector<cd> out(g_->order(), cd(0));
    for (int x = 0; x < g_->order(); ++x)
      for (int s : gens_) out[x] += phi[g_->mul(x, s)];
    return out;
  }

 private:
  const FiniteGroup* g_;
  std::vector<int> gens_;
};

struct CayleyGap {
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  double eps = 0.0;
  double constant_residual = 0.0;  // ||A 1 - |S| 1||_inf
  bool connected = false;
};

inline constexpr int kDenseEigCap = 3000;

inline CayleyGap cayley_gap(const CayleyGraph& cg) {
  const FiniteGroup& g = cg.group();
  const int n = g.order();
  if (n > kDenseEigCap) throw Error(Errc::OrderTooLarge, "dense eigensolve capped at order 3000");
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
  for (int x = 0; x < n; ++x)
    for (int s : cg.gens()) A(x, g.mul(x, s)) += 1.0;
  CayleyGap r;
  r.constant_residual = (A * Eigen::VectorXd::Ones(n) - cg.degree() * Eigen::VectorXd::Ones(n)).cwiseAbs().maxCoeff();
  if (n == 1) {
    r.lambda1 = r.lambda2 = cg.degree();
    return r;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A, Eigen::EigenvaluesOnly);
  const auto& ev = es.eigenvalues();  // ascending
  r.lambda1 = ev(n - 1);
  if (std::fabs(r.lambda1 - cg.degree()) > 1e-9 * cg.degree())
    throw Error(Errc::ValidationError, "top adjacency eigenvalue differs from the degree");
  r.lambda1 = cg.degree();
  r.lambda2 = ev(n - 2);
  if (r.lambda2 > r.lambda1 - 1e-9 * r.lambda1) r.lambda2 = r.lambda1;
  r.eps = 1.0 - r.lambda2 / r.lambda1;
  r.connected = r.eps > 0.0;
  return r;
}

/// max over generators s of ||delta_s * phi - phi||_2.
inline double max_generator_displacement(const CayleyGraph& cg, const std::vector<cd>& phi) {
  double best = 0.0;
  std::vector<cd> d(phi.size());
  for (int s : cg.gens()) {
    auto t = translate(phi, s, cg.group());
    for (size_t i = 0; i < d.size(); ++i) d[i] = t[i] - phi[i];
    best = std::max(best, l2_norm(d));
  }
  return best;
}

/// Dense matrix of phi -> mu * phi.
inline Eigen::MatrixXcd convolution_matrix(const ComplexMeasure& mu, const FiniteGroup& g) {
  const int n = g.order();
  if (static_cast<int>(mu.size()) != n) throw Error(Errc::DimensionMismatch, "measure does not match the group");
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(n, n);
  for (int h = 0; h < n; ++h) {
    if (mu[h] == cd(0)) continue;
    int hi = g.inv(h);
    for (int x = 0; x < n; ++x) m(x, g.mul(x, hi)) += mu[h];
  }
  return m;
}

/// Largest singular value of a matrix via the Hermitian square.
inline double operator_norm(const Eigen::MatrixXcd& m) {
  if (m.size() == 0) return 0.0;
  Eigen::MatrixXcd h = m.adjoint() * m;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h, Eigen::EigenvaluesOnly);
  return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
}

struct NewspaceNorm {
  double norm = 0.0;
  double bound_side = 0.0;  // N(q)^{-1/2} (#G)^{1/2} ||mu||_2, i.e. the bound with C = 1
};

/// Operator norm of convolution by mu on the new subspace of the full level.
/// A group that is not a product counts as a single factor; the new subspace
/// is then the zero-sum fibers.
inline NewspaceNorm newspace_operator_norm(const ComplexMeasure& mu, const FiniteGroup& g) {
  const int n = g.order();
  if (n < 2) throw Error(Errc::NotAProductGroup, "the trivial group has no new subspace");
  if (n > kDenseEigCap) throw Error(Errc::OrderTooLarge, "dense eigensolve capped at order 3000");
  Eigen::MatrixXcd P(n, n);
  if (g.is_product()) {
    std::vector<int> all(g.factors().size());
    for (size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
    NewSpace ns = new_subspace(g, all);
    for (int y = 0; y < n; ++y) {
      std::vector<cd> e(n, cd(0));
      e[y] = 1.0;
      auto col = ns.apply_e(e);
      for (int x = 0; x < n; ++x) P(x, y) = col[x];
    }
  } else {
    P.setConstant(cd(-1.0 / n));
    for (int i = 0; i < n; ++i) P(i, i) += 1.0;
  }
  NewspaceNorm r;
  r.norm = operator_norm(convolution_matrix(mu, g) * P);
  r.bound_side = std::sqrt(static_cast<double>(n) / g.level()) * l2_norm(mu);
  return r;
}

// ---------------------------------------------------------------------------
// Path measures.

namespace detail {

/// Sum of vals over the windows of W starting at positions [from, to).
inline double window_sum(const Cylinders& ext, const std::vector<double>& vals, const int* W, int from, int to) {
  double acc = 0.0;
  for (int j = from; j < to; ++j) acc += vals[ext.index(W + j)];
  return acc;
}

/// Every admissible word of length len with allowed(prev, w0) (prev < 0 means free)
/// and allowed(w_last, next) (next < 0 means free), in lexicographic order.
inline void for_each_word(const Subshift& s, int prev, int len, int next, const std::function<void(const Word&)>& fn) {
  Word w(len);
  std::function<void(int)> rec = [&](int pos) {
    if (pos == len) {
      if (len > 0 && next >= 0 && !s.allowed(w[len - 1], next)) return;
      if (len == 0 && prev >= 0 && next >= 0 && !s.allowed(prev, next)) return;
      fn(w);
      return;
    }
    for (int a = 0; a < s.size(); ++a) {
      int before = pos == 0 ? prev : w[pos - 1];
      if (before >= 0 && !s.allowed(before, a)) continue;
      w[pos] = a;
      rec(pos + 1);
    }
  };
  rec(0);
}

inline Word concat(std::initializer_list<const Word*> parts) {
  Word out;
  for (const Word* p : parts) out.insert(out.end(), p->begin(), p->end());
  return out;
}

}  // namespace detail

/// T0 large enough for the normalized potential at this particular a.
inline double effective_T0(const Thermo& th, const Normalized& n) {
  const Cylinders& ext = th.op().ext();
  return std::max({th.constants().T0, sup_abs(n.f_ext), lip_table(n.f_ext, ext), lip_table(n.f_ext, ext, 1)});
}

struct FlatteningMeasures {
  ComplexMeasure mu;
  RealMeasure mu_hat, nu, nu0;
  double C = 1.0;                 // e^{T0 theta / (1 - theta)}
  double T0 = 0.0;
  double abs_excess = 0.0;        // max over g of |mu(g)| - mu_hat(g)
  double hat_over_nu = 0.0;       // max mu_hat / nu
  double nu_over_hat = 0.0;       // max nu / mu_hat
  long paths = 0;
  bool ok() const {
    const double slack = 1.0 + 1e-12;
    return abs_excess <= 1e-12 * std::max(1.0, linf_norm(mu_hat)) && hat_over_nu <= C * slack && nu_over_hat <= C * slack;
  }
};

namespace detail {

inline void check_tail(const Thermo& th, const Word& x) {
  if (static_cast<int>(x.size()) != th.depth()) throw Error(Errc::LengthMismatch, "tail must have K symbols");
  if (!th.shift().admissible(x)) throw Error(Errc::InadmissibleWord, "tail is not admissible");
}

inline void check_head(const Thermo& th, const Word& head, int r, int s) {
  if (r < 1 || r >= s) throw Error(Errc::BadRange, "need 0 < r < s");
  if (static_cast<int>(head.size()) != s - r) throw Error(Errc::InadmissibleHead, "head must have s - r symbols");
  if (!th.shift().admissible(head)) throw Error(Errc::InadmissibleHead, "head is not admissible");
}

}  // namespace detail

/// mu, mu_hat, nu0 and nu for one head alpha_s .. alpha_{r+1} over the tail x.
inline FlatteningMeasures build_flattening_measures(const Thermo& th, const FiniteGroup& g, const Cocycle& c, cd xi,
                                                    const Word& x, int r, int s, const Word& head) {
  detail::check_head(th, head, r, s);
  detail::check_tail(th, x);
  const Subshift& sh = th.shift();
  const Cylinders& ext = th.op().ext();
  const int K = th.depth();
  const Normalized n = th.normalized(xi.real());
  const double b = xi.imag();
  const int hl = s - r;

  FlatteningMeasures m;
  m.mu.assign(g.order(), cd(0));
  m.mu_hat.assign(g.order(), 0.0);
  m.nu0.assign(g.order(), 0.0);
  m.T0 = effective_T0(th, n);
  m.C = std::exp(m.T0 * sh.theta() / (1.0 - sh.theta()));

  Word om = sh.continuation(head.back(), K);
  Word hw = detail::concat({&head, &om});
  const double head_f = detail::window_sum(ext, n.f_ext, hw.data(), 0, hl);

  Word W(s + K);
  std::copy(head.begin(), head.end(), W.begin());
  std::copy(x.begin(), x.end(), W.begin() + s);
  detail::for_each_word(sh, head.back(), r, x[0], [&](const Word& a) {
    std::copy(a.begin(), a.end(), W.begin() + hl);
    double fs = detail::window_sum(ext, n.f_ext, W.data(), 0, s);
    double ts = detail::window_sum(ext, th.tau_ext(), W.data(), 0, s);
    double fr = detail::window_sum(ext, n.f_ext, W.data(), hl, s);
    int gi = cocycle_product(c, g, W.data() + hl - 1, r + 2);
    m.mu[gi] += std::exp(cd(fs, b * ts));
    m.mu_hat[gi] += std::exp(fs);
    m.nu0[gi] += std::exp(fr);
    ++m.paths;
  });
  m.nu.resize(g.order());
  const double e = std::exp(head_f);
  for (int i = 0; i < g.order(); ++i) m.nu[i] = e * m.nu0[i];
  for (int i = 0; i < g.order(); ++i) {
    m.abs_excess = std::max(m.abs_excess, std::abs(m.mu[i]) - m.mu_hat[i]);
    if (m.nu[i] > 0.0) m.hat_over_nu = std::max(m.hat_over_nu, m.mu_hat[i] / m.nu[i]);
    if (m.mu_hat[i] > 0.0) m.nu_over_hat = std::max(m.nu_over_hat, m.nu[i] / m.mu_hat[i]);
    if ((m.nu[i] > 0.0) != (m.mu_hat[i] > 0.0)) m.hat_over_nu = std::numeric_limits<double>::infinity();
  }
  return m;
}

struct DefectReport {
  double defect = 0.0;
  double bound = 0.0;
  double C_f = 1.0;
  double lip = 0.0;
  int heads = 0;
  bool ok() const { return defect <= bound * (1.0 + 1e-9) + 1e-13; }
};

/// || M^s H(x) - sum over heads of mu_head * phi_head ||_2 against C_f Lip(H) theta^{s-r}.
inline DefectReport approximation_defect(const Thermo& th, const FiniteGroup& g, const Cocycle& c, cd xi,
                                         const FiberedFunction& H, int r, int s, const Word& x) {
  if (r < 1 || r >= s) throw Error(Errc::BadRange, "need 0 < r < s");
  detail::check_tail(th, x);
  if (H.order != g.order() || H.cylinders() != th.size())
    throw Error(Errc::DimensionMismatch, "fibered function does not match the operator");
  const Subshift& sh = th.shift();
  const int K = th.depth();
  CongruenceOperator M(th, g, c, xi);
  FiberedFunction MsH = M.power(H, s);
  const size_t xi_idx = th.cyl().index(x);

  std::vector<cd> approx(g.order(), cd(0));
  DefectReport rep;
  detail::for_each_word(sh, -1, s - r, -1, [&](const Word& head) {
    FlatteningMeasures m = build_flattening_measures(th, g, c, xi, x, r, s, head);
    if (m.paths == 0) return;
    ++rep.heads;
    Word om = sh.continuation(head.back(), K);
    Word hw = detail::concat({&head, &om});
    std::vector<cd> fib = H.fiber_vec(th.cyl().index(hw.data()));
    int ch = cocycle_product(c, g, head);
    auto phi = translate(fib, ch, g);
    auto conv = convolve(m.mu, phi, g);
    for (int i = 0; i < g.order(); ++i) approx[i] += conv[i];
  });
  std::vector<cd> diff(g.order());
  for (int i = 0; i < g.order(); ++i) diff[i] = MsH.fiber(xi_idx)[i] - approx[i];
  rep.defect = l2_norm(diff);
  rep.C_f = th.normalized(xi.real()).C_f;
  rep.lip = norms(H, xi.imag(), th.cyl()).lip_dtheta;
  rep.bound = rep.C_f * rep.lip * std::pow(sh.theta(), s - r);
  return rep;
}

// ---------------------------------------------------------------------------
// Nearly flat decomposition.

struct NearlyFlatReport {
  RealMeasure nu0, nu1_direct, nu1_dp;
  int blocks = 0;               // r'
  double flatness = 1.0;        // max over blocks of max E / min E with fixed (l-p)_2 parts
  double flat_bound = 1.0;      // e^{T0 (theta/(1-theta) + p)}
  double sandwich_factor = 1.0; // e^{r' C theta^l}
  double sandwich_worst = 1.0;  // max over g of max(nu0/nu1, nu1/nu0)
  double coeff_sum = 0.0;       // sum over words of the E products
  double T0 = 0.0;
  // Operators phi -> eta^* * (eta * phi) on the blocks checked.
  int eta_checked = 0;
  double eta_min_eig = 0.0;     // smallest eigenvalue relative to the largest
  double eta_asym = 0.0;        // ||A - A^*||_max relative to ||A||_max
  double eta_contraction = 0.0; // max ||eta * phi|| / ||eta||_1 over zero-sum unit phi
  bool sandwich_ok() const { return sandwich_worst <= sandwich_factor * (1.0 + 1e-12); }
  bool flat_ok() const { return flatness <= flat_bound * (1.0 + 1e-12); }
  bool psd_ok() const { return eta_min_eig >= -1e-10 && eta_asym <= 1e-10; }
};

struct NearlyFlatParams {
  double a = 0.0;
  int r = 4;
  int l = 2;
  int p = 1;
  int alpha_top = 0;        // alpha_{r+1}
  int eta_check_cap = 64;   // blocks whose eta operator is diagonalized
  int eta_order_cap = 400;
};

inline NearlyFlatReport nearly_flat_decompose(const Thermo& th, const FiniteGroup& g, const Cocycle& c, const Word& x,
                                              const NearlyFlatParams& prm) {
  const int r = prm.r, l = prm.l, p = prm.p;
  if (p < 1) throw Error(Errc::BadRange, "window p must be positive");
  if (l <= p || r % l != 0 || r / l < 2)
    throw Error(Errc::BadFactorization, "need r = r' l with r' >= 2 and l > p");
  detail::check_tail(th, x);
  const Subshift& sh = th.shift();
  if (prm.alpha_top < 0 || prm.alpha_top >= sh.size()) throw Error(Errc::BadIndex, "alpha_{r+1} is not a symbol");
  const Cylinders& ext = th.op().ext();
  const int K = th.depth();
  const int rp = r / l;
  const Normalized n = th.normalized(prm.a);
  const int G = g.order();

  NearlyFlatReport rep;
  rep.blocks = rp;
  rep.T0 = effective_T0(th, n);
  const double theta = sh.theta();
  rep.flat_bound = std::exp(rep.T0 * (theta / (1.0 - theta) + p));
  const double Cs = rep.T0 * std::pow(theta, 1 - p) / (1.0 - theta);
  rep.sandwich_factor = std::exp(rp * Cs * std::pow(theta, l));

  // log E_j from the (l-p)_2 part of block j+1 (empty for j = r') and block j itself.
  auto logE = [&](int j, const Word& pre, const Word& blk) {
    if (j == 1) {
      Word w = detail::concat({&pre, &blk, &x});
      return detail::window_sum(ext, n.f_ext, w.data(), 0, 2 * l - p);
    }
    Word om = sh.continuation(blk.back(), K);
    Word w = detail::concat({&pre, &blk, &om});
    return detail::window_sum(ext, n.f_ext, w.data(), 0, j == rp ? p : l);
  };

  // Direct: every alpha^r with the products of block coefficients.
  rep.nu0.assign(G, 0.0);
  rep.nu1_direct.assign(G, 0.0);
  std::map<std::pair<int, Word>, std::pair<double, double>> spread;  // (j, fixed parts) -> (min, max) log E
  Word V(r + 1 + K);
  V[0] = prm.alpha_top;
  std::copy(x.begin(), x.end(), V.begin() + r + 1);
  detail::for_each_word(sh, prm.alpha_top, r, x[0], [&](const Word& a) {
    std::copy(a.begin(), a.end(), V.begin() + 1);
    double fr = detail::window_sum(ext, n.f_ext, V.data(), 1, r + 1);
    double le = 0.0;
    for (int j = 1; j <= rp; ++j) {
      const int bs = r + 1 - j * l;
      Word blk(V.begin() + bs, V.begin() + bs + l);
      Word pre = j == rp ? Word{} : Word(V.begin() + bs - (l - p), V.begin() + bs);
      double e = logE(j, pre, blk);
      le += e;
      Word key = pre;
      key.insert(key.end(), blk.begin() + p, blk.end());
      auto [it, fresh] = spread.try_emplace({j, key}, e, e);
      if (!fresh) {
        it->second.first = std::min(it->second.first, e);
        it->second.second = std::max(it->second.second, e);
      }
    }
    int gi = cocycle_product(c, g, V.data(), r + 2);
    rep.nu0[gi] += std::exp(fr);
    rep.nu1_direct[gi] += std::exp(le);
    rep.coeff_sum += std::exp(le);
  });
  double worst_log = 0.0;
  for (const auto& [k, mm] : spread) worst_log = std::max(worst_log, mm.second - mm.first);
  rep.flatness = std::exp(worst_log);

  // Convolution of block measures, state = (l-p)_2 part of the next block up.
  const int q = l - p;
  std::vector<Word> states;
  detail::for_each_word(sh, -1, q, -1, [&](const Word& w) { states.push_back(w); });
  std::map<Word, ComplexMeasure> m;
  for (const auto& s1 : states)
    if (sh.allowed(s1.back(), x[0])) m[s1] = delta_measure(g, c.at(s1.back(), x[0]));

  std::mt19937_64 rng(12345);
  auto check_eta = [&](const ComplexMeasure& eta) {
    if (rep.eta_checked >= prm.eta_check_cap || G > prm.eta_order_cap) return;
    ++rep.eta_checked;
    Eigen::MatrixXcd Ce = convolution_matrix(eta, g);
    Eigen::MatrixXcd Ca = convolution_matrix(adjoint_measure(eta, g), g);
    Eigen::MatrixXcd A = Ca * Ce;
    double scale = std::max(1e-300, A.cwiseAbs().maxCoeff());
    rep.eta_asym = std::max(rep.eta_asym, (A - A.adjoint()).cwiseAbs().maxCoeff() / scale);
    Eigen::MatrixXcd Ah = 0.5 * (A + A.adjoint());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(Ah, Eigen::EigenvaluesOnly);
    double top = std::max(1e-300, es.eigenvalues().maxCoeff());
    rep.eta_min_eig = std::min(rep.eta_min_eig, es.eigenvalues().minCoeff() / top);
    if (G > 1) {
      double e1 = l1_norm(eta);
      for (int t = 0; t < 4; ++t) {
        auto phi = random_zero_sum_unit(G, rng);
        rep.eta_contraction = std::max(rep.eta_contraction, l2_norm(convolve(eta, phi, g)) / e1);
      }
    }
  };

  for (int j = 1; j <= rp; ++j) {
    std::vector<Word> nexts = j == rp ? std::vector<Word>{Word{prm.alpha_top}} : states;
    std::map<Word, ComplexMeasure> nm;
    for (const auto& up : nexts) {
      ComplexMeasure acc(G, cd(0));
      bool any = false;
      for (const auto& [sj, mj] : m) {
        ComplexMeasure eta(G, cd(0));
        bool hit = false;
        detail::for_each_word(sh, up.back(), p, sj[0], [&](const Word& u) {
          Word blk = detail::concat({&u, &sj});
          double e = std::exp(logE(j, j == rp ? Word{} : up, blk));
          Word path{up.back()};
          path.insert(path.end(), blk.begin(), blk.end());
          eta[cocycle_product(c, g, path)] += e;
          hit = true;
        });
        if (!hit) continue;
        check_eta(eta);
        auto conv = convolve(mj, eta, g);
        for (int i = 0; i < G; ++i) acc[i] += conv[i];
        any = true;
      }
      if (any) nm[up] = std::move(acc);
    }
    m = std::move(nm);
  }
  rep.nu1_dp.assign(G, 0.0);
  auto it = m.find(Word{prm.alpha_top});
  if (it != m.end())
    for (int i = 0; i < G; ++i) rep.nu1_dp[i] = it->second[i].real();

  for (int i = 0; i < G; ++i) {
    double a0 = rep.nu0[i], a1 = rep.nu1_direct[i];
    if (a0 == 0.0 && a1 == 0.0) continue;
    if (a0 == 0.0 || a1 == 0.0) {
      rep.sandwich_worst = std::numeric_limits<double>::infinity();
      continue;
    }
    rep.sandwich_worst = std::max({rep.sandwich_worst, a0 / a1, a1 / a0});
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Flattening across levels.

struct FlattenParams {
  std::vector<int> levels{3, 5, 7, 11};
  std::string group_kind = "sl2";     // sl2 | cyclic
  std::string cocycle = "generating"; // generating | constant
  int trials = 10;
  int r_fixed = 0;                    // 0 selects r from the group order
  int r_extra = 2;
  int p = 2;                          // window of the generating set S^p(y, z)
  int head = 0;                       // alpha_{r+1}
  double b = 0.0;
  int cayley_cap = 1500;              // skip the dense Cayley solve above this order
};

struct FlattenRow {
  int q = 0;
  int order = 0;
  int r = 0;
  int trial = 0;
  double ratio = 0.0;
  double lambda2 = 0.0;
  double eps = 0.0;
};

struct FlattenLevel {
  int q = 0;
  int order = 0;
  int r = 0;
  long paths = 0;
  double max_ratio = 0.0;
  double lambda2 = 0.0;
  double eps = 0.0;
  bool generates = false;
  std::string warning;
};

struct FlattenResult {
  std::vector<FlattenRow> rows;
  std::vector<FlattenLevel> levels;
  double slope = 0.0;
  double slope_se = 0.0;
};

inline FiniteGroup level_group(const std::string& kind, int q) {
  if (kind == "sl2") return sl2_group(q);
  if (kind == "cyclic") return cyclic_group(q);
  throw Error(Errc::ValidationError, "unknown group kind '" + kind + "'");
}

/// Standard generators: [1,1;0,1] and [1,0;1,1] for sl2, 1 and 2 for cyclic.
inline std::pair<int, int> standard_generators(const FiniteGroup& g) {
  if (g.kind() == "sl2") return {g.find_label(sl2_label(1, 1, 0, 1)), g.find_label(sl2_label(1, 0, 1, 1))};
  if (g.kind() == "cyclic") return {g.order() > 1 ? 1 : 0, g.order() > 2 ? 2 : 0};
  throw Error(Errc::ValidationError, "no standard generators for this group");
}

/// Edges in lexicographic order alternate between the two standard generators.
inline Cocycle generating_cocycle(const Subshift& s, const FiniteGroup& g) {
  auto [A, B] = standard_generators(g);
  std::map<std::pair<int, int>, int> m;
  int k = 0;
  for (int i = 0; i < s.size(); ++i)
    for (int j = 0; j < s.size(); ++j)
      if (s.allowed(i, j)) m[{i, j}] = (k++ % 2 == 0) ? A : B;
  return Cocycle(s, g, m);
}

inline double topological_entropy(const Subshift& s) {
  const int n = s.size();
  Eigen::MatrixXd T(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) T(i, j) = s.allowed(i, j) ? 1.0 : 0.0;
  Eigen::EigenSolver<Eigen::MatrixXd> es(T, false);
  double rho = 0.0;
  for (int i = 0; i < n; ++i) rho = std::max(rho, std::abs(es.eigenvalues()(i)));
  return std::log(rho);
}

inline FlattenResult flattening_experiment(const Thermo& th, const FlattenParams& prm, std::mt19937_64& rng) {
  FlattenResult res;
  const Subshift& sh = th.shift();
  const double h = topological_entropy(sh);
  if (!(h > 0.0)) throw Error(Errc::ValidationError, "subshift has zero entropy");
  const Word x = th.cyl().word_vec(0);
  std::vector<double> lx, ly;
  for (int q : prm.levels) {
    if (q <= 1) continue;
    FiniteGroup g = level_group(prm.group_kind, q);
    Cocycle c = prm.cocycle == "constant" ? constant_cocycle(sh, g, standard_generators(g).first)
                                          : generating_cocycle(sh, g);
    FlattenLevel lv;
    lv.q = q;
    lv.order = g.order();
    lv.r = prm.r_fixed > 0 ? prm.r_fixed
                           : static_cast<int>(std::ceil(std::log(static_cast<double>(g.order())) / h)) + prm.r_extra;
    std::vector<int> gens = generating_set(c, g, sh, prm.p, 0, 0);
    lv.generates = generates(g, gens);
    if (!lv.generates) lv.warning = "generating set spans a proper subgroup";
    if (g.order() <= prm.cayley_cap) {
      CayleyGap cg = cayley_gap(CayleyGraph(g, gens));
      lv.lambda2 = cg.lambda2;
      lv.eps = cg.eps;
    } else {
      lv.lambda2 = lv.eps = std::nan("");
    }
    FlatteningMeasures m = build_flattening_measures(th, g, c, cd(0.0, prm.b), x, lv.r, lv.r + 1, Word{prm.head});
    lv.paths = m.paths;
    const double nu1 = l1_norm(m.nu);
    for (int t = 0; t < prm.trials; ++t) {
      auto phi = random_zero_sum_unit(g.order(), rng);
      double ratio = l2_norm(convolve(m.mu, phi, g)) * std::sqrt(static_cast<double>(q)) / nu1;
      lv.max_ratio = std::max(lv.max_ratio, ratio);
      res.rows.push_back({q, g.order(), lv.r, t, ratio, lv.lambda2, lv.eps});
    }
    lx.push_back(std::log(static_cast<double>(q)));
    ly.push_back(std::log(lv.max_ratio));
    res.levels.push_back(lv);
  }
  if (lx.size() >= 2) {
    LinearFit f = linear_fit(lx, ly);
    res.slope = f.slope;
    res.slope_se = f.slope_se;
  }
  return res;
}

}  // namespace umix
