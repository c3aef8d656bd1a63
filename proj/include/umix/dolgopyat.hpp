#pragma once
// Cylinder metric D, cones K_B, the partition into C/D/Z/X cells, damping
// functions beta_J and the Dolgopyat operators N_{a,J} at a finite working depth.

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "umix/congruence.hpp"
#include "umix/error.hpp"
#include "umix/flattening.hpp"
#include "umix/group.hpp"
#include "umix/sft.hpp"
#include "umix/thermo.hpp"

namespace umix {

// ---------------------------------------------------------------------------
// Hyperbolicity and cylinder contraction.

struct Hyperbolicity {
  double c0 = 1.0;
  double kappa1 = 1.0;
  double kappa2 = 1.0;
  double rho = 0.5;
  int p0 = 1;
  long pairs = 0;
};

/// Expansion constants checked on every pair of words up to depth, and the
/// best (p0, rho) for the diameter sandwich of nested cylinders.
inline Hyperbolicity measure_hyperbolicity(const Subshift& s, int depth) {
  if (depth < 3) throw Error(Errc::BadRange, "hyperbolicity needs depth >= 3");
  Hyperbolicity r;
  const double th = s.theta();
  r.kappa1 = r.kappa2 = 1.0 / th;
  Cylinders cyl(s, depth);
  const int n = depth;
  double c0 = 1.0;
  for (size_t i = 0; i < cyl.size(); ++i)
    for (size_t k = i + 1; k < cyl.size(); ++k) {
      const int* u = cyl.word(i);
      const int* v = cyl.word(k);
      int agree = first_disagreement(u, v, n);
      ++r.pairs;
      for (int j = 0; j <= agree; ++j) {
        // Shifted pair: both metrics in terms of the common prefix.
        double d0 = std::pow(th, agree), dj = std::pow(th, agree - j);
        double D0 = u[0] != v[0] ? 1.0 : s.diameter(u, agree);
        double Dj = (agree - j == 0) ? 1.0 : s.diameter(u + j, agree - j);
        double kj = std::pow(r.kappa2, j);
        c0 = std::min({c0, dj / (kj * d0), kj * d0 / dj});
        if (u[0] == v[0] && agree - j > 0) c0 = std::min({c0, Dj / (kj * D0), kj * D0 / Dj});
      }
    }
  r.c0 = c0;

  // rho = min diam(C')/diam(C) over one-step children; p0 the least lag with
  // every (l + p0)-subcylinder at most rho diam(C).
  double rho = 1.0;
  std::vector<Word> level{Word{}};
  std::vector<std::vector<Word>> by_len{level};
  for (int L = 1; L <= depth; ++L) {
    std::vector<Word> next;
    for (const auto& w : by_len.back())
      for (int a = 0; a < s.size(); ++a)
        if (w.empty() || s.allowed(w.back(), a)) {
          Word x = w;
          x.push_back(a);
          next.push_back(x);
        }
    by_len.push_back(next);
  }
  auto diam = [&](const Word& w) { return w.empty() ? 1.0 : s.diameter(w); };
  for (int L = 0; L < depth; ++L)
    for (const auto& w : by_len[L + 1]) {
      Word parent(w.begin(), w.end() - 1);
      rho = std::min(rho, diam(w) / diam(parent));
    }
  r.rho = rho;
  r.p0 = 0;
  for (int p = 1; p <= depth && r.p0 == 0; ++p) {
    double worst = 0.0;
    for (int L = 0; L + p <= depth; ++L)
      for (const auto& w : by_len[L + p]) {
        Word anc(w.begin(), w.begin() + L);
        worst = std::max(worst, diam(w) / diam(anc));
      }
    if (worst <= rho * (1.0 + 1e-12)) r.p0 = p;
  }
  if (r.p0 == 0) throw Error(Errc::InfeasibleConfig, "no lag p0 within the depth satisfies the diameter sandwich");
  return r;
}

// ---------------------------------------------------------------------------
// Constants.

struct DolgopyatInputs {
  double a = 0.0;
  double b = 2.0;
  int ell0 = 1;
  int m1 = 1;
  int m0 = 1;
  int p1 = 1;
  int u0_symbol = 0;
  double delta0 = 1.0;
  double r0 = 1.0;
  double delta1 = 1.0;
  double slack = 0.01;
};

struct DolgopyatConstants {
  DolgopyatInputs in;
  Hyperbolicity hyp;
  double T0 = 0.0, A_f = 0.0, A0 = 0.0, E = 0.0, eps1 = 0.0, mu = 0.0, b0 = 1.0;
  int m = 1;
  double eps1_terms[3] = {0, 0, 0};
  double m_terms[3] = {0, 0, 0};
  double mu_terms[3] = {0, 0, 0};
  double c1 = 0.0, c2 = 0.0, tau_bar = 0.0, delta = 0.0;
  double wdense_B = 0.0, wdense_C = 1.0, wdense_t_b = 0.0;  // t = wdense_t_b / |b|
  double eta_wdense = 0.0;  // the eta' of the dense-set inequality
  double eta_theory = 1.0;  // sqrt(e^{m A_f |a|}(1 - eta' mu e^{-m T0}))
};

/// Greedy solve in the order E, eps1, m, mu, each with the relative slack.
inline DolgopyatConstants solve_constants(const Thermo& th, const DolgopyatInputs& in) {
  if (!(in.slack > 0.0 && in.slack < 0.5)) throw Error(Errc::ValidationError, "slack must lie in (0, 0.5)");
  if (in.ell0 < 1 || in.m1 < 1 || in.m0 < 1 || in.p1 < 1)
    throw Error(Errc::ValidationError, "ell0, m1, m0 and p1 must be positive");
  if (!(in.delta0 > 0.0 && in.r0 > 0.0 && in.delta1 > 0.0))
    throw Error(Errc::ValidationError, "delta0, r0 and delta1 must be positive");
  DolgopyatConstants k;
  k.in = in;
  k.hyp = measure_hyperbolicity(th.shift(), std::max(3, th.depth()));
  const auto& h = k.hyp;
  const double up = 1.0 + in.slack, down = 1.0 - in.slack;
  k.T0 = th.constants().T0;
  k.A_f = th.constants().A_f;
  if (!(h.kappa2 > 1.0)) throw Error(Errc::InfeasibleConfig, "kappa2 must exceed 1");
  k.A0 = up * 2.0 / h.c0 * std::exp(k.T0 / (h.c0 * (h.kappa2 - 1.0))) * std::max(1.0, k.T0 / (h.kappa2 - 1.0));
  k.E = up * std::max(1.0, 2.0 * k.A0);
  const double k1m1 = std::pow(h.kappa1, in.m1);
  k.eps1_terms[0] = h.c0 * in.r0 / k1m1;
  k.eps1_terms[1] = in.delta1;
  k.eps1_terms[2] = std::numbers::pi * h.c0 * h.c0 * (h.kappa2 - 1.0) / (2.0 * k.T0 * k1m1);
  k.eps1 = down * *std::min_element(k.eps1_terms, k.eps1_terms + 3);
  k.m_terms[0] = 8.0 * k.A0;
  k.m_terms[1] = 4.0 * k.E * std::pow(h.rho, in.p1) * k1m1 * k.eps1 / (h.c0 * h.c0);
  k.m_terms[2] = 4.0 * 128.0 * k.E * k1m1 / (h.c0 * h.c0 * in.delta0 * h.rho);
  const double need = up * *std::max_element(k.m_terms, k.m_terms + 3);
  k.m = in.m0 + 1;
  while (std::pow(h.kappa2, k.m) <= need) {
    if (++k.m > 200) throw Error(Errc::InfeasibleConfig, "no m satisfies the kappa2^m constraint");
  }
  const int pp = h.p0 * in.p1;
  k.mu_terms[0] = 2.0 * k.E * k.eps1 * h.c0 * h.c0 * std::pow(h.rho, pp + 1) * std::pow(h.kappa2, in.m1) /
                  std::pow(h.kappa1, k.m);
  k.mu_terms[1] = 0.25;
  k.mu_terms[2] = std::pow(in.delta0 * h.rho * k.eps1 / 64.0, 2) / (16.0 * 16.0 * k.A0);
  k.mu = down * *std::min_element(k.mu_terms, k.mu_terms + 3);
  if (!(k.mu > 0.0)) throw Error(Errc::InfeasibleConfig, "mu underflows");

  GibbsReport g = gibbs_check(th, 1, th.depth());
  k.c1 = g.c1;
  k.c2 = g.c2;
  k.delta = th.delta();
  k.tau_bar = *std::max_element(th.tau_ext().begin(), th.tau_ext().end());
  const double rp = std::pow(h.rho, pp + 1);
  k.wdense_B = k.E * k.eps1 * h.c0 * rp * std::pow(h.kappa2, in.m1);
  k.wdense_C = k1m1 / (h.c0 * h.c0 * rp * std::pow(h.kappa2, in.m1));
  k.wdense_t_b = k.eps1 * h.c0 * rp * std::pow(h.kappa2, in.m1);
  k.eta_wdense = std::exp(-2.0 * k.wdense_B * k.wdense_C) * (k.c1 / k.c2) *
                 std::exp(-h.p0 * k.delta * k.tau_bar * (1.0 - std::log(k.wdense_C) / std::log(h.rho)));
  k.eta_theory = std::sqrt(std::exp(k.m * k.A_f * std::fabs(in.a)) *
                           (1.0 - k.eta_wdense * k.mu * std::exp(-k.m * k.T0)));
  return k;
}

// ---------------------------------------------------------------------------
// Sections and partition.

/// 2 ell0 lexicographically smallest words of length m whose last symbol may
/// precede every symbol; index (ell - 1) * 2 + (j - 1).
inline std::vector<Word> choose_sections(const Subshift& s, int m, int ell0) {
  std::vector<Word> out;
  const int need = 2 * ell0;
  detail::for_each_word(s, -1, m, -1, [&](const Word& w) {
    if (static_cast<int>(out.size()) >= need) return;
    for (int a = 0; a < s.size(); ++a)
      if (!s.allowed(w.back(), a)) return;
    out.push_back(w);
  });
  if (static_cast<int>(out.size()) < need)
    throw Error(Errc::InfeasibleConfig, "not enough section words of length " + std::to_string(m));
  return out;
}

struct PartitionXi {
  double b = 0.0;
  double cap = 0.0;  // eps1 / |b|
  int ell0 = 1;
  int m1 = 1;
  std::vector<Word> sections;
  std::vector<Word> C, D, Z, X;  // X indexed by xi_index
  std::vector<int> D_parent;     // C cell of every D cell
  std::vector<std::vector<int>> D_of_C;
  int violations = 0;
  std::vector<std::string> notes;

  int per_k() const { return 2 * ell0; }
  size_t xi_size() const { return D.size() * static_cast<size_t>(per_k()); }
  int xi_index(int k, int j, int ell) const { return k * per_k() + (ell - 1) * 2 + (j - 1); }
  int xi_k(int idx) const { return idx / per_k(); }
  int xi_j(int idx) const { return idx % 2 + 1; }
  int xi_ell(int idx) const { return (idx % per_k()) / 2 + 1; }
  const Word& section(int j, int ell) const { return sections[(ell - 1) * 2 + (j - 1)]; }
};

inline bool is_prefix(const Word& p, const Word& w) {
  return p.size() <= w.size() && std::equal(p.begin(), p.end(), w.begin());
}

inline PartitionXi build_partition_xi(double b, const DolgopyatConstants& k, const Thermo& th) {
  if (!(std::fabs(b) > k.b0)) throw Error(Errc::BadRange, "|b| must exceed b0 = 1");
  const Subshift& s = th.shift();
  const int K = th.depth();
  const auto& in = k.in;
  const auto& h = k.hyp;
  const int pp = h.p0 * in.p1;
  if (in.u0_symbol < 0 || in.u0_symbol >= s.size()) throw Error(Errc::BadIndex, "U0 symbol out of range");
  PartitionXi P;
  P.b = b;
  P.cap = k.eps1 / std::fabs(b);
  P.ell0 = in.ell0;
  P.m1 = in.m1;
  P.sections = choose_sections(s, k.m, in.ell0);

  std::function<void(const Word&)> walk = [&](const Word& w) {
    if (s.diameter(w) <= P.cap) {
      if (static_cast<int>(w.size()) + pp > K)
        throw Error(Errc::InfeasibleConfig, "cell of length " + std::to_string(w.size()) + " plus p0 p1 = " +
                                                std::to_string(pp) + " exceeds working depth " + std::to_string(K));
      P.C.push_back(w);
      return;
    }
    if (static_cast<int>(w.size()) + 1 + pp > K)
      throw Error(Errc::InfeasibleConfig, "diameter cap " + std::to_string(P.cap) + " below the deepest available cylinder");
    for (int a = 0; a < s.size(); ++a)
      if (s.allowed(w.back(), a)) {
        Word x = w;
        x.push_back(a);
        walk(x);
      }
  };
  detail::for_each_word(s, -1, in.m1, -1, [&](const Word& u0) {
    if (u0[0] != in.u0_symbol) return;
    for (int a = 0; a < s.size(); ++a)
      if (s.allowed(u0.back(), a)) {
        Word x = u0;
        x.push_back(a);
        walk(x);
      }
  });

  P.D_of_C.resize(P.C.size());
  for (size_t l = 0; l < P.C.size(); ++l) {
    const Word& c = P.C[l];
    detail::for_each_word(s, c.back(), pp, -1, [&](const Word& ext) {
      Word d = c;
      d.insert(d.end(), ext.begin(), ext.end());
      P.D_of_C[l].push_back(static_cast<int>(P.D.size()));
      P.D_parent.push_back(static_cast<int>(l));
      P.D.push_back(d);
      P.Z.emplace_back(d.begin() + in.m1, d.end());
    });
  }
  P.X.resize(P.xi_size());
  for (size_t kk = 0; kk < P.D.size(); ++kk)
    for (int ell = 1; ell <= in.ell0; ++ell)
      for (int j = 1; j <= 2; ++j) {
        Word x = P.section(j, ell);
        x.insert(x.end(), P.Z[kk].begin(), P.Z[kk].end());
        if (!s.admissible(x)) throw Error(Errc::InfeasibleConfig, "section does not extend a Z cell");
        P.X[P.xi_index(static_cast<int>(kk), j, ell)] = x;
      }

  // Diameter displays.
  const double e1b = P.cap;
  const double rp1 = std::pow(h.rho, in.p1), rpp = std::pow(h.rho, pp + 1);
  auto note = [&](const std::string& what, const Word& w, double v, double lo, double hi) {
    if (v < lo * (1.0 - 1e-12) || v > hi * (1.0 + 1e-12)) {
      ++P.violations;
      if (P.notes.size() < 20)
        P.notes.push_back(what + " diameter " + std::to_string(v) + " outside [" + std::to_string(lo) + ", " +
                          std::to_string(hi) + "] at length " + std::to_string(w.size()));
    }
  };
  for (const auto& c : P.C) note("C", c, s.diameter(c), h.rho * e1b, e1b);
  for (const auto& d : P.D) note("D", d, s.diameter(d), rpp * e1b, rp1 * e1b);
  for (const auto& z : P.Z) note("Z", z, s.diameter(z), rpp * e1b, rp1 * e1b);
  const double xlo = k.eps1 * h.c0 * h.c0 * rpp * std::pow(h.kappa2, in.m1) / (std::fabs(b) * std::pow(h.kappa1, k.m));
  const double xhi = k.eps1 * rp1 * std::pow(h.kappa1, in.m1) / (std::fabs(b) * h.c0 * h.c0 * std::pow(h.kappa2, k.m));
  for (const auto& x : P.X) note("X", x, s.diameter(x), xlo, xhi);
  // X cells pairwise disjoint.
  for (size_t i = 0; i < P.X.size(); ++i)
    for (size_t j = i + 1; j < P.X.size(); ++j)
      if (is_prefix(P.X[i], P.X[j]) || is_prefix(P.X[j], P.X[i])) {
        ++P.violations;
        if (P.notes.size() < 20) P.notes.push_back("X cells overlap");
      }
  return P;
}

// ---------------------------------------------------------------------------
// m-step branches.

/// Every m-preimage w u of every depth-K cylinder u with its weights.
class Branches {
 public:
  struct Branch {
    int w = 0;          // index into words()
    size_t tgt = 0;     // depth-K cylinder of w u
    double ef = 0.0;    // e^{f_m(w u)}
    double tau = 0.0;   // tau_m(w u)
    int cell = -1;      // X cell containing w u, or -1
    int cm = 0;         // c^m(w u)
  };

  Branches(const Thermo& th, double a, int m, const PartitionXi* part = nullptr, const Cocycle* c = nullptr,
           const FiniteGroup* g = nullptr)
      : th_(&th), m_(m) {
    const Subshift& s = th.shift();
    const Cylinders& ext = th.op().ext();
    const int K = th.depth();
    Normalized n = th.normalized(a);
    detail::for_each_word(s, -1, m, -1, [&](const Word& w) { words_.push_back(w); });
    std::map<Word, int> xcells;
    std::set<size_t> xlens;
    if (part)
      for (size_t i = 0; i < part->X.size(); ++i) {
        xcells[part->X[i]] = static_cast<int>(i);
        xlens.insert(part->X[i].size());
      }
    by_u_.resize(th.size());
    Word v(m + K);
    for (size_t u = 0; u < th.size(); ++u) {
      const int* uw = th.cyl().word(u);
      std::copy(uw, uw + K, v.begin() + m);
      for (size_t wi = 0; wi < words_.size(); ++wi) {
        const Word& w = words_[wi];
        if (!s.allowed(w.back(), uw[0])) continue;
        std::copy(w.begin(), w.end(), v.begin());
        Branch br;
        br.w = static_cast<int>(wi);
        br.tgt = th.cyl().index(v.data());
        br.ef = std::exp(detail::window_sum(ext, n.f_ext, v.data(), 0, m));
        br.tau = detail::window_sum(ext, th.tau_ext(), v.data(), 0, m);
        for (size_t L : xlens) {
          if (L > v.size()) continue;
          auto it = xcells.find(Word(v.begin(), v.begin() + L));
          if (it != xcells.end()) br.cell = it->second;
        }
        if (c && g) br.cm = cocycle_product(*c, *g, v.data(), m + 1);
        by_u_[u].push_back(br);
      }
    }
  }

  int m() const { return m_; }
  const Thermo& thermo() const { return *th_; }
  const std::vector<Word>& words() const { return words_; }
  const std::vector<Branch>& at(size_t u) const { return by_u_[u]; }
  int word_index(const Word& w) const {
    auto it = std::find(words_.begin(), words_.end(), w);
    return it == words_.end() ? -1 : static_cast<int>(it - words_.begin());
  }
  const Branch* find(size_t u, int w) const {
    for (const auto& br : by_u_[u])
      if (br.w == w) return &br;
    return nullptr;
  }

  /// N_{a,J}(h) = L_a^m(beta_J h); an empty mask gives L_a^m.
  std::vector<double> apply(const std::vector<double>& h, const std::vector<char>& inJ, double mu) const {
    std::vector<double> out(by_u_.size(), 0.0);
    for (size_t u = 0; u < by_u_.size(); ++u) {
      double acc = 0.0;
      for (const auto& br : by_u_[u]) {
        double beta = (br.cell >= 0 && !inJ.empty() && inJ[br.cell]) ? 1.0 - mu : 1.0;
        acc += br.ef * beta * h[br.tgt];
      }
      out[u] = acc;
    }
    return out;
  }

  /// M^m H with weights e^{f_m + i b tau_m} and the cocycle stored per branch.
  FiberedFunction twisted(const FiberedFunction& H, double b, const FiniteGroup& g) const {
    FiberedFunction out(H.depth, H.order, by_u_.size());
    out.zero_sum = H.zero_sum;
    for (size_t u = 0; u < by_u_.size(); ++u) {
      cd* o = out.fiber(u);
      for (const auto& br : by_u_[u]) {
        cd wgt = br.ef * std::polar(1.0, b * br.tau);
        int ci = g.inv(br.cm);
        const cd* f = H.fiber(br.tgt);
        for (int x = 0; x < H.order; ++x) o[x] += wgt * f[g.mul(x, ci)];
      }
    }
    return out;
  }

 private:
  const Thermo* th_;
  int m_;
  std::vector<Word> words_;
  std::vector<std::vector<Branch>> by_u_;
};

// ---------------------------------------------------------------------------
// Cones and Lipschitz constants in D.

/// Smallest B with h in K_B: max over prefix nodes of (max - min) / (min diam).
inline double cone_constant(const std::vector<double>& h, const Cylinders& cyl) {
  for (double v : h)
    if (!(v > 0.0)) return std::numeric_limits<double>::infinity();
  double best = 0.0;
  const Subshift& s = cyl.shift();
  for_each_node(cyl, 1, [&](int L, size_t lo, size_t hi) {
    auto [mn, mx] = std::minmax_element(h.begin() + lo, h.begin() + hi);
    best = std::max(best, (*mx - *mn) / (*mn * s.diameter(cyl.word(lo), L)));
  });
  return best;
}

inline bool in_cone(const std::vector<double>& h, double B, const Cylinders& cyl) {
  return cone_constant(h, cyl) <= B * (1.0 + 1e-12);
}

/// D-Lipschitz constant within first-symbol classes.
inline double lip_D(const std::vector<double>& v, const Cylinders& cyl) {
  double best = 0.0;
  const Subshift& s = cyl.shift();
  for_each_node(cyl, 1, [&](int L, size_t lo, size_t hi) {
    auto [mn, mx] = std::minmax_element(v.begin() + lo, v.begin() + hi);
    best = std::max(best, (*mx - *mn) / s.diameter(cyl.word(lo), L));
  });
  return best;
}

/// Random member of K_B: exp of a tree-built function, scaled to a random
/// fraction in [lo, hi] of the largest admissible amplitude.
inline std::vector<double> random_cone_function(const Cylinders& cyl, double B, std::mt19937_64& rng, double lo = 0.2,
                                                double hi = 1.0) {
  const Subshift& s = cyl.shift();
  std::uniform_real_distribution<double> u(-1.0, 1.0), frac(lo, hi), base(0.5, 2.0);
  std::vector<double> g(cyl.size(), 0.0);
  for_each_node(cyl, 1, [&](int L, size_t a, size_t b) {
    double z = u(rng) * s.diameter(cyl.word(a), L);
    for (size_t i = a; i < b; ++i) g[i] += z;
  });
  for (size_t i = 0; i < cyl.size(); ++i) g[i] += 0.1 * u(rng) * s.diameter(cyl.word(i), cyl.depth());
  // Different first symbols are unconstrained.
  std::vector<double> off(s.size());
  for (auto& o : off) o = std::log(base(rng));
  auto make = [&](double t) {
    std::vector<double> h(cyl.size());
    for (size_t i = 0; i < cyl.size(); ++i) h[i] = std::exp(off[cyl.word(i)[0]] + t * g[i]);
    return h;
  };
  double tlo = 0.0, thi = 1.0;
  while (in_cone(make(thi), B, cyl) && thi < 1e6) thi *= 2.0;
  for (int it = 0; it < 60; ++it) {
    double mid = 0.5 * (tlo + thi);
    (in_cone(make(mid), B, cyl) ? tlo : thi) = mid;
  }
  return make(tlo * frac(rng));
}

inline double weighted_norm2(const std::vector<double>& h, const std::vector<double>& nu) {
  double s = 0.0;
  for (size_t i = 0; i < h.size(); ++i) s += nu[i] * h[i] * h[i];
  return std::sqrt(s);
}

/// beta_J on words of length deep (the longest X cell).
inline std::vector<double> beta_table(const PartitionXi& P, const std::vector<int>& J, double mu, const Cylinders& deep) {
  std::vector<double> beta(deep.size(), 1.0);
  for (int idx : J) {
    const Word& x = P.X[idx];
    auto [lo, hi] = deep.prefix_range(x.data(), static_cast<int>(x.size()));
    for (size_t i = lo; i < hi; ++i) beta[i] -= mu;
  }
  return beta;
}

// ---------------------------------------------------------------------------
// Dense subsets and contraction.

inline std::vector<char> mask_of(const std::vector<int>& J, size_t n) {
  std::vector<char> m(n, 0);
  for (int i : J) {
    if (i < 0 || static_cast<size_t>(i) >= n) throw Error(Errc::BadIndex, "J index outside Xi(b)");
    m[i] = 1;
  }
  return m;
}

inline bool is_dense(const PartitionXi& P, const std::vector<int>& J) {
  std::vector<char> hit(P.C.size(), 0);
  for (int idx : J) hit[P.D_parent[P.xi_k(idx)]] = 1;
  return std::all_of(hit.begin(), hit.end(), [](char c) { return c != 0; });
}

/// One random (k, j, ell) per C cell plus a few random extras.
inline std::vector<int> random_dense_J(const PartitionXi& P, std::mt19937_64& rng) {
  std::vector<int> J;
  std::uniform_int_distribution<int> jj(1, 2), ll(1, P.ell0);
  for (size_t l = 0; l < P.C.size(); ++l) {
    const auto& ds = P.D_of_C[l];
    std::uniform_int_distribution<size_t> pick(0, ds.size() - 1);
    J.push_back(P.xi_index(ds[pick(rng)], jj(rng), ll(rng)));
  }
  std::bernoulli_distribution extra(0.25);
  for (size_t i = 0; i < P.xi_size(); ++i)
    if (extra(rng)) J.push_back(static_cast<int>(i));
  std::sort(J.begin(), J.end());
  J.erase(std::unique(J.begin(), J.end()), J.end());
  return J;
}

/// Depth-K cylinders inside the cylinder [w] (w no longer than K).
inline std::pair<size_t, size_t> points_in(const Cylinders& cyl, const Word& w) {
  return cyl.prefix_range(w.data(), static_cast<int>(w.size()));
}

struct DenseCertificate {
  bool ok = true;
  double t = 0.0;
  double S = 1.0;
  std::vector<std::string> notes;
};

/// Structure of W = union of Z cells: B_l = sigma^{m1}(C_l) disjoint, covering
/// U, diam <= t S, each containing a Z cell of diameter >= t.
inline DenseCertificate dense_certificate(const PartitionXi& P, const DolgopyatConstants& k, const Thermo& th) {
  DenseCertificate c;
  const Subshift& s = th.shift();
  c.t = k.wdense_t_b / std::fabs(P.b);
  c.S = k.wdense_C;
  std::vector<Word> B;
  for (const auto& w : P.C) B.emplace_back(w.begin() + P.m1, w.end());
  auto fail = [&](const std::string& m) {
    c.ok = false;
    if (c.notes.size() < 10) c.notes.push_back(m);
  };
  for (size_t i = 0; i < B.size(); ++i)
    for (size_t j = i + 1; j < B.size(); ++j)
      if (is_prefix(B[i], B[j]) || is_prefix(B[j], B[i])) fail("B cells overlap");
  std::vector<int> cover(th.size(), 0);
  for (const auto& w : B) {
    auto [lo, hi] = points_in(th.cyl(), w);
    for (size_t i = lo; i < hi; ++i) ++cover[i];
  }
  for (int v : cover)
    if (v != 1) {
      fail("B cells do not tile U at working depth");
      break;
    }
  for (size_t l = 0; l < B.size(); ++l) {
    if (s.diameter(B[l]) > c.t * c.S * (1.0 + 1e-12)) fail("B cell too large");
    bool found = false;
    for (int kk : P.D_of_C[l])
      if (s.diameter(P.Z[kk]) >= c.t * (1.0 - 1e-12)) found = true;
    if (!found) fail("B cell without a large Z subcell");
  }
  return c;
}

struct ContractionReport {
  int trials = 0;
  double eta_hat = 0.0;      // max ||N h|| / ||h|| over random cone samples
  double eta_const = 0.0;    // the same ratio for h = 1
  double eta_theory = 1.0;
  int cone_violations = 0;
  int wdense_failures = 0;
  int trapped_failures = 0;
  int beta_failures = 0;
  double wdense_min_ratio = 1.0;
  double eta_wdense = 0.0;
  double beta_lip_max = 0.0;
  double beta_lip_bound = 0.0;
  bool certificate_ok = false;
};

inline ContractionReport contraction_check(const Thermo& th, const PartitionXi& P, const DolgopyatConstants& k,
                                           int trials, std::mt19937_64& rng) {
  const Subshift& s = th.shift();
  const Cylinders& cyl = th.cyl();
  const double Bcone = k.E * std::fabs(P.b);
  Branches br(th, k.in.a, k.m, &P);
  const auto& nu = th.nuU();
  ContractionReport rep;
  rep.trials = trials;
  rep.eta_theory = k.eta_theory;
  rep.eta_wdense = k.eta_wdense;
  DenseCertificate cert = dense_certificate(P, k, th);
  rep.certificate_ok = cert.ok;

  size_t deep_len = 0;
  for (const auto& x : P.X) deep_len = std::max(deep_len, x.size());
  Cylinders deep(s, static_cast<int>(deep_len));
  const auto& h = k.hyp;
  rep.beta_lip_bound = k.mu * std::fabs(P.b) * std::pow(h.kappa1, k.m) /
                       (k.eps1 * h.c0 * h.c0 * std::pow(h.rho, h.p0 * k.in.p1 + 1) * std::pow(h.kappa2, k.in.m1));

  std::vector<char> inW(th.size(), 0);
  for (const auto& z : P.Z) {
    auto [lo, hi] = points_in(cyl, z);
    for (size_t i = lo; i < hi; ++i) inW[i] = 1;
  }
  std::vector<double> ones(th.size(), 1.0);
  for (int t = 0; t < trials; ++t) {
    std::vector<int> J = random_dense_J(P, rng);
    auto mask = mask_of(J, P.xi_size());
    auto hh = random_cone_function(cyl, Bcone, rng);
    auto Nh = br.apply(hh, mask, k.mu);
    rep.eta_hat = std::max(rep.eta_hat, weighted_norm2(Nh, nu) / weighted_norm2(hh, nu));
    if (!in_cone(Nh, Bcone, cyl)) ++rep.cone_violations;
    if (t == 0) rep.eta_const = weighted_norm2(br.apply(ones, mask, k.mu), nu);
    // Dense-set inequality.
    double num = 0.0, den = 0.0;
    for (size_t i = 0; i < th.size(); ++i) {
      den += nu[i] * hh[i] * hh[i];
      if (inW[i]) num += nu[i] * hh[i] * hh[i];
    }
    rep.wdense_min_ratio = std::min(rep.wdense_min_ratio, num / den);
    if (!cert.ok || num < k.eta_wdense * den) ++rep.wdense_failures;
    // h is trapped within a factor 2 on every v(Z_k).
    for (size_t kk = 0; kk < P.Z.size(); ++kk) {
      auto [lo, hi] = points_in(cyl, P.Z[kk]);
      for (const auto& sec : P.sections) {
        double mn = std::numeric_limits<double>::infinity(), mx = 0.0;
        int wi = br.word_index(sec);
        for (size_t u = lo; u < hi; ++u) {
          const auto* b = br.find(u, wi);
          if (!b) continue;
          mn = std::min(mn, hh[b->tgt]);
          mx = std::max(mx, hh[b->tgt]);
        }
        if (mx > 2.0 * mn * (1.0 + 1e-12)) ++rep.trapped_failures;
      }
    }
    // beta_J range and D-Lipschitz constant.
    auto beta = beta_table(P, J, k.mu, deep);
    auto [bmn, bmx] = std::minmax_element(beta.begin(), beta.end());
    double lb = lip_D(beta, deep);
    rep.beta_lip_max = std::max(rep.beta_lip_max, lb);
    if (*bmn < 1.0 - k.mu - 1e-15 || *bmx > 1.0 || lb > rep.beta_lip_bound * (1.0 + 1e-12)) ++rep.beta_failures;
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Domination of the twisted operator.

struct HypothesisReport {
  double max_dom = 0.0;  // max ||H(u)|| / h(u)
  double max_lip = 0.0;  // max ||H(u) - H(u')|| / (h(u) D(u, u'))
};

inline HypothesisReport hypotheses(const FiberedFunction& H, const std::vector<double>& h, const Cylinders& cyl) {
  HypothesisReport r;
  const Subshift& s = cyl.shift();
  const int K = cyl.depth();
  std::vector<cd> diff(H.order);
  for (size_t i = 0; i < cyl.size(); ++i) r.max_dom = std::max(r.max_dom, fiber_norm(H.fiber(i), H.order) / h[i]);
  for (size_t i = 0; i < cyl.size(); ++i)
    for (size_t j = 0; j < cyl.size(); ++j) {
      if (i == j || cyl.word(i)[0] != cyl.word(j)[0]) continue;
      for (int g = 0; g < H.order; ++g) diff[g] = H.fiber(i)[g] - H.fiber(j)[g];
      int agree = first_disagreement(cyl.word(i), cyl.word(j), K);
      double D = s.diameter(cyl.word(i), agree);
      r.max_lip = std::max(r.max_lip, fiber_norm(diff.data(), H.order) / (h[i] * D));
    }
  return r;
}

struct Selection {
  std::vector<int> J;
  std::vector<int> failed_cells;  // C cells where no index validated
  int alternative1 = 0;           // picks where ||H|| <= 3/4 h on v(Z_k)
  bool ok() const { return failed_cells.empty(); }
};

/// Per C cell, the first (k, j, ell) with chi_j^ell <= 1 on all of Z_k.
inline Selection select_dense_J(cd xi, const FiberedFunction& H, const std::vector<double>& h, const PartitionXi& P,
                                const DolgopyatConstants& k, const Branches& br, const FiniteGroup& g,
                                bool throw_on_fail = true) {
  const Cylinders& cyl = br.thermo().cyl();
  const double b = xi.imag();
  const double B = k.E * std::fabs(b);
  HypothesisReport hyp = hypotheses(H, h, cyl);
  if (hyp.max_dom > 1.0 + 1e-12) throw Error(Errc::HypothesesFail, "(1a) ||H|| <= h violated");
  if (hyp.max_lip > B * (1.0 + 1e-12)) throw Error(Errc::HypothesesFail, "(1b) E|b| Lipschitz bound violated");
  if (!in_cone(h, B, cyl)) throw Error(Errc::HypothesesFail, "h is not in the cone K_{E|b|}");

  Selection sel;
  std::vector<cd> acc(H.order);
  for (size_t l = 0; l < P.C.size(); ++l) {
    int chosen = -1;
    for (int kk : P.D_of_C[l]) {
      auto [lo, hi] = points_in(cyl, P.Z[kk]);
      for (int ell = 1; ell <= P.ell0 && chosen < 0; ++ell) {
        const auto* b1 = &P.section(1, ell);
        const auto* b2 = &P.section(2, ell);
        int w1 = br.word_index(*b1), w2 = br.word_index(*b2);
        for (int j = 1; j <= 2 && chosen < 0; ++j) {
          bool good = true, alt1 = true;
          for (size_t u = lo; u < hi && good; ++u) {
            const auto* v1 = br.find(u, w1);
            const auto* v2 = br.find(u, w2);
            if (!v1 || !v2) {
              good = false;
              break;
            }
            std::fill(acc.begin(), acc.end(), cd(0));
            for (const auto* v : {v1, v2}) {
              cd wgt = v->ef * std::polar(1.0, b * v->tau);
              auto t = translate(H.fiber_vec(v->tgt), v->cm, g);
              for (int x = 0; x < H.order; ++x) acc[x] += wgt * t[x];
            }
            double num = fiber_norm(acc.data(), H.order);
            double d1 = v1->ef * h[v1->tgt], d2 = v2->ef * h[v2->tgt];
            double den = j == 1 ? (1.0 - k.mu) * d1 + d2 : d1 + (1.0 - k.mu) * d2;
            if (num > den) good = false;
            const auto* vj = j == 1 ? v1 : v2;
            if (fiber_norm(H.fiber(vj->tgt), H.order) > 0.75 * h[vj->tgt]) alt1 = false;
          }
          if (good) {
            chosen = P.xi_index(kk, j, ell);
            if (alt1) ++sel.alternative1;
          }
        }
      }
      if (chosen >= 0) break;
    }
    if (chosen < 0)
      sel.failed_cells.push_back(static_cast<int>(l));
    else
      sel.J.push_back(chosen);
  }
  if (!sel.ok() && throw_on_fail)
    throw Error(Errc::SelectionFail, "no index validates on " + std::to_string(sel.failed_cells.size()) + " of " +
                                         std::to_string(P.C.size()) + " C cells");
  return sel;
}

struct DominationReport {
  int pointwise_violations = 0;
  int lip_violations = 0;
  int prelim1_violations = 0;
  int prelim2_violations = 0;
  double max_pointwise = 0.0;  // max ||M^m H(u)|| / N h(u)
  double max_lip = 0.0;        // max of the (2b) ratio
  std::vector<std::string> witnesses;
  bool ok() const { return pointwise_violations + lip_violations + prelim1_violations + prelim2_violations == 0; }
};

inline DominationReport domination_check(cd xi, const FiberedFunction& H, const std::vector<double>& h,
                                         const std::vector<int>& J, const PartitionXi& P, const DolgopyatConstants& k,
                                         const Branches& br, const FiniteGroup& g) {
  const Thermo& th = br.thermo();
  const Cylinders& cyl = th.cyl();
  const Subshift& s = th.shift();
  const double b = xi.imag();
  const double B = k.E * std::fabs(b);
  const auto& hy = k.hyp;
  auto mask = mask_of(J, P.xi_size());
  auto Nh = br.apply(h, mask, k.mu);
  auto Lh = br.apply(h, {}, 0.0);
  std::vector<double> Hn(cyl.size());
  for (size_t i = 0; i < cyl.size(); ++i) Hn[i] = fiber_norm(H.fiber(i), H.order);
  auto LHn = br.apply(Hn, {}, 0.0);
  FiberedFunction MH = br.twisted(H, b, g);
  HypothesisReport hyp = hypotheses(H, h, cyl);
  const double Bh = cone_constant(h, cyl);
  const double kap = std::pow(hy.kappa2, br.m());

  DominationReport r;
  auto witness = [&](const std::string& w) {
    if (r.witnesses.size() < 10) r.witnesses.push_back(w);
  };
  const double tol = 1.0 + 1e-10;
  for (size_t u = 0; u < cyl.size(); ++u) {
    double lhs = fiber_norm(MH.fiber(u), H.order);
    double ratio = Nh[u] > 0.0 ? lhs / Nh[u] : (lhs > 0.0 ? INFINITY : 0.0);
    r.max_pointwise = std::max(r.max_pointwise, ratio);
    if (lhs > Nh[u] * tol + 1e-300) {
      ++r.pointwise_violations;
      witness("pointwise at cylinder " + std::to_string(u));
    }
  }
  std::vector<cd> diff(H.order);
  for (size_t u = 0; u < cyl.size(); ++u)
    for (size_t v = 0; v < cyl.size(); ++v) {
      if (u == v || cyl.word(u)[0] != cyl.word(v)[0]) continue;
      int agree = first_disagreement(cyl.word(u), cyl.word(v), cyl.depth());
      double D = s.diameter(cyl.word(u), agree);
      for (int x = 0; x < H.order; ++x) diff[x] = MH.fiber(u)[x] - MH.fiber(v)[x];
      double dn = fiber_norm(diff.data(), H.order);
      double rhs = B * Nh[u] * D;
      r.max_lip = std::max(r.max_lip, rhs > 0.0 ? dn / rhs : 0.0);
      if (dn > rhs * tol) {
        ++r.lip_violations;
        witness("(2b) at pair " + std::to_string(u) + "," + std::to_string(v));
      }
      double p1 = std::fabs(Lh[u] - Lh[v]);
      if (p1 > k.A0 * (Bh / kap + 1.0) * Lh[u] * D * tol) {
        ++r.prelim1_violations;
        witness("log-Lipschitz L^m h at pair " + std::to_string(u) + "," + std::to_string(v));
      }
      if (dn > k.A0 * (hyp.max_lip / kap * Lh[u] + std::fabs(b) * LHn[u]) * D * tol) {
        ++r.prelim2_violations;
        witness("log-Lipschitz M^m H at pair " + std::to_string(u) + "," + std::to_string(v));
      }
    }
  return r;
}

/// Random (H, h) meeting (1a) and (1b): h in K_{B/2}, H = h Psi with a slowly
/// varying fiber field Psi of norm in [0.5, 1].
inline std::pair<FiberedFunction, std::vector<double>> random_dominated_pair(const Thermo& th, const FiniteGroup& g,
                                                                             double B, std::mt19937_64& rng,
                                                                             bool zero_sum = false) {
  const Cylinders& cyl = th.cyl();
  const Subshift& s = th.shift();
  auto h = random_cone_function(cyl, 0.5 * B, rng);
  const int n = g.order();
  std::normal_distribution<double> z(0.0, 1.0);
  std::uniform_real_distribution<double> r(0.5, 1.0);
  auto rnd = [&]() {
    std::vector<cd> v(n);
    for (auto& x : v) x = cd(z(rng), z(rng));
    if (zero_sum) {
      cd mean(0);
      for (auto& x : v) mean += x;
      for (auto& x : v) x -= mean / static_cast<double>(n);
    }
    return v;
  };
  std::vector<cd> base = rnd();
  std::vector<std::vector<cd>> incr(cyl.size(), std::vector<cd>(n, cd(0)));
  for_each_node(cyl, 1, [&](int L, size_t lo, size_t hi) {
    auto d = rnd();
    double sc = s.diameter(cyl.word(lo), L);
    for (size_t i = lo; i < hi; ++i)
      for (int x = 0; x < n; ++x) incr[i][x] += sc * d[x];
  });
  std::vector<double> scale(s.size());
  for (auto& v : scale) v = r(rng);
  auto make = [&](double t) {
    FiberedFunction H(cyl.depth(), n, cyl.size());
    H.zero_sum = zero_sum;
    for (size_t i = 0; i < cyl.size(); ++i) {
      std::vector<cd> f(n);
      for (int x = 0; x < n; ++x) f[x] = base[x] + t * incr[i][x];
      double nf = l2_norm(f);
      for (int x = 0; x < n; ++x) H.fiber(i)[x] = f[x] / nf * scale[cyl.word(i)[0]] * h[i];
    }
    return H;
  };
  auto fine = [&](double t) {
    HypothesisReport hr = hypotheses(make(t), h, cyl);
    return hr.max_dom <= 1.0 + 1e-12 && hr.max_lip <= B * (1.0 - 1e-9);
  };
  double lo = 0.0, hi = 1.0;
  if (fine(hi)) return {make(hi), h};
  for (int it = 0; it < 50; ++it) {
    double mid = 0.5 * (lo + hi);
    (fine(mid) ? lo : hi) = mid;
  }
  return {make(lo), h};
}

// ---------------------------------------------------------------------------
// Oscillation of the section pair.

struct SeparationReport {
  double min_separation = 0.0;  // min over C cells of the best |b| |Delta(u) - Delta(u')| over Z x Z'
  double max_variation = 0.0;   // max over C cells of |b| |Delta(u) - Delta(u')| on sigma^{m1}(C)
  double threshold = 0.0;       // delta0 rho eps1 / 16
  bool lnic_like() const { return min_separation >= threshold; }
  bool reverse_ok() const { return max_variation <= std::numbers::pi; }
};

inline SeparationReport separation_diagnostic(const PartitionXi& P, const DolgopyatConstants& k, const Branches& br) {
  const Cylinders& cyl = br.thermo().cyl();
  const double b = std::fabs(P.b);
  SeparationReport r;
  r.threshold = k.in.delta0 * k.hyp.rho * k.eps1 / 16.0;
  r.min_separation = std::numeric_limits<double>::infinity();
  auto delta = [&](size_t u, int ell) {
    const auto* v1 = br.find(u, br.word_index(P.section(1, ell)));
    const auto* v2 = br.find(u, br.word_index(P.section(2, ell)));
    return v2->tau - v1->tau;
  };
  for (size_t l = 0; l < P.C.size(); ++l) {
    double best = 0.0;
    for (int ell = 1; ell <= P.ell0; ++ell) {
      for (int ka : P.D_of_C[l])
        for (int kb : P.D_of_C[l]) {
          auto [alo, ahi] = points_in(cyl, P.Z[ka]);
          auto [blo, bhi] = points_in(cyl, P.Z[kb]);
          double mn = std::numeric_limits<double>::infinity();
          for (size_t u = alo; u < ahi; ++u)
            for (size_t v = blo; v < bhi; ++v) mn = std::min(mn, b * std::fabs(delta(u, ell) - delta(v, ell)));
          best = std::max(best, mn);
        }
      Word img(P.C[l].begin() + P.m1, P.C[l].end());
      auto [lo, hi] = points_in(cyl, img);
      for (size_t u = lo; u < hi; ++u)
        for (size_t v = lo; v < hi; ++v)
          r.max_variation = std::max(r.max_variation, b * std::fabs(delta(u, ell) - delta(v, ell)));
    }
    r.min_separation = std::min(r.min_separation, best);
  }
  if (P.C.empty()) r.min_separation = 0.0;
  return r;
}

// ---------------------------------------------------------------------------
// Strong triangle inequality.

inline double angle_between(const std::vector<double>& a, const std::vector<double>& b) {
  double ab = 0.0, aa = 0.0, bb = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  double c = ab / std::sqrt(aa * bb);
  return std::acos(std::clamp(c, -1.0, 1.0));
}

/// ||w1 + w2|| <= (1 - alpha^2 / (16 L)) ||w1|| + ||w2||, given angle >= alpha and ||w1|| / ||w2|| <= L.
inline bool strong_triangle(const std::vector<double>& w1, const std::vector<double>& w2, double alpha, double L) {
  if (w1.size() != w2.size() || w1.size() < 2) throw Error(Errc::PreconditionFail, "vectors must share a dimension >= 2");
  double n1 = l2_norm(w1), n2 = l2_norm(w2);
  if (n1 == 0.0 || n2 == 0.0) throw Error(Errc::PreconditionFail, "vectors must be nonzero");
  if (!(alpha >= 0.0 && alpha <= std::numbers::pi) || !(L >= 1.0))
    throw Error(Errc::PreconditionFail, "need alpha in [0, pi] and L >= 1");
  if (angle_between(w1, w2) < alpha - 1e-12) throw Error(Errc::PreconditionFail, "angle below alpha");
  if (n1 / n2 > L * (1.0 + 1e-12)) throw Error(Errc::PreconditionFail, "norm ratio above L");
  std::vector<double> s(w1.size());
  for (size_t i = 0; i < s.size(); ++i) s[i] = w1[i] + w2[i];
  return l2_norm(s) <= (1.0 - alpha * alpha / (16.0 * L)) * n1 + n2 + 1e-12 * (n1 + n2);
}

struct TriangleTrials {
  long pairs = 0;
  long violations = 0;
};

/// Random pairs in dimensions 2..16 with alpha and L drawn inside the preconditions.
inline TriangleTrials strong_triangle_trials(long pairs, std::mt19937_64& rng) {
  TriangleTrials r;
  std::uniform_int_distribution<int> dim(2, 16);
  std::normal_distribution<double> z(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (long i = 0; i < pairs; ++i) {
    int n = dim(rng);
    std::vector<double> w1(n), w2(n);
    for (int k = 0; k < n; ++k) {
      w1[k] = z(rng);
      w2[k] = z(rng);
    }
    double s = std::exp(3.0 * (u(rng) - 0.5));
    for (double& x : w1) x *= s;
    double alpha = angle_between(w1, w2) * u(rng);
    double L = std::max(1.0, l2_norm(w1) / l2_norm(w2)) * (1.0 + u(rng));
    ++r.pairs;
    if (!strong_triangle(w1, w2, alpha, L)) ++r.violations;
  }
  return r;
}

// ---------------------------------------------------------------------------
// Full pipeline.

struct DominationSummary {
  int pairs = 0;
  int selected = 0;
  int selection_failures = 0;
  int hypothesis_failures = 0;
  int pointwise_violations = 0;
  int lip_violations = 0;
  int prelim_violations = 0;
  double max_pointwise = 0.0;
  std::vector<std::string> witnesses;
};

/// Random hypothesis-satisfying (H, h) pairs through selection and domination.
inline DominationSummary domination_trials(const Thermo& th, const FiniteGroup& g, const Cocycle& c,
                                           const PartitionXi& P, const DolgopyatConstants& k, int pairs,
                                           std::mt19937_64& rng) {
  DominationSummary s;
  const cd xi(k.in.a, P.b);
  Branches br(th, k.in.a, k.m, &P, &c, &g);
  const double B = k.E * std::fabs(P.b);
  for (int t = 0; t < pairs; ++t) {
    ++s.pairs;
    auto [H, h] = random_dominated_pair(th, g, B, rng);
    Selection sel;
    try {
      sel = select_dense_J(xi, H, h, P, k, br, g, false);
    } catch (const Error& e) {
      ++s.hypothesis_failures;
      if (s.witnesses.size() < 10) s.witnesses.push_back(e.what());
      continue;
    }
    if (!sel.ok()) {
      ++s.selection_failures;
      continue;
    }
    ++s.selected;
    DominationReport d = domination_check(xi, H, h, sel.J, P, k, br, g);
    s.pointwise_violations += d.pointwise_violations;
    s.lip_violations += d.lip_violations;
    s.prelim_violations += d.prelim1_violations + d.prelim2_violations;
    s.max_pointwise = std::max(s.max_pointwise, d.max_pointwise);
    for (const auto& w : d.witnesses)
      if (s.witnesses.size() < 10) s.witnesses.push_back(w);
  }
  return s;
}

/// Selection on H = h times the uniform unit fiber; lattice roofs align both
/// branches and leave every C cell without a validating index.
inline Selection uniform_fiber_selection(const Thermo& th, const FiniteGroup& g, const Cocycle& c,
                                         const PartitionXi& P, const DolgopyatConstants& k, std::mt19937_64& rng) {
  Branches br(th, k.in.a, k.m, &P, &c, &g);
  auto h = random_cone_function(th.cyl(), k.E * std::fabs(P.b), rng);
  FiberedFunction H(th.depth(), g.order(), th.size());
  const double v = 1.0 / std::sqrt(static_cast<double>(g.order()));
  for (size_t u = 0; u < th.size(); ++u)
    for (int x = 0; x < g.order(); ++x) H.fiber(u)[x] = v * h[u];
  return select_dense_J(cd(k.in.a, P.b), H, h, P, k, br, g, false);
}

}  // namespace umix
