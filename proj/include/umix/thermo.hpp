#pragma once
// Transfer operators on depth-K cylinder tables, RPF eigendata, pressure,
// the Bowen root and the normalized potentials f^(a).

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "umix/error.hpp"
#include "umix/expr.hpp"
#include "umix/sft.hpp"

namespace umix {

using cd = std::complex<double>;

/// Locally constant function given by its values on admissible words of length depth.
template <class T>
struct CylinderTable {
  int depth = 0;
  std::vector<T> values;
};
using CylinderFunction = CylinderTable<double>;
using ComplexCylinderFunction = CylinderTable<cd>;

struct ThermoConfig {
  int depth = 6;
  double power_iter_tol = 1e-12;
  int power_iter_max = 100000;
  double a_window = 1.0;
  double lip_bound = 0.0;
};

inline void validate(const ThermoConfig& c) {
  if (c.depth < 1) throw Error(Errc::DepthZero, "thermo depth must be at least 1");
  if (!(c.power_iter_tol > 0.0) || c.power_iter_max < 1 || !(c.a_window > 0.0))
    throw Error(Errc::ValidationError, "thermo tolerances must be positive");
}

/// Table of an expression evaluated at the representative point of every depth-K cylinder.
inline CylinderFunction potential_table(const Expr& e, const Subshift& s, int depth) {
  Cylinders cyl(s, depth);
  CylinderFunction f{depth, std::vector<double>(cyl.size())};
  int len = std::max(depth, e.max_var() + 1);
  for (size_t i = 0; i < cyl.size(); ++i) f.values[i] = e.eval(s.rep_point(cyl.word_vec(i), len), s.theta());
  return f;
}

inline CylinderFunction potential_table(const std::string& text, const Subshift& s, int depth) {
  return potential_table(Expr::parse(text), s, depth);
}

/// Explicit table; values must follow the lexicographic cylinder order.
inline CylinderFunction table_function(const Subshift& s, int depth, std::vector<double> values) {
  Cylinders cyl(s, depth);
  if (values.size() != cyl.size())
    throw Error(Errc::LengthMismatch, "table has " + std::to_string(values.size()) + " values, expected " +
                                          std::to_string(cyl.size()));
  return {depth, std::move(values)};
}

/// Values of a shallower table on the words of cyl (by truncation).
template <class T>
std::vector<T> lift(const CylinderTable<T>& f, const Cylinders& src, const Cylinders& cyl) {
  if (f.depth > cyl.depth()) throw Error(Errc::DepthMismatch, "function deeper than target depth");
  if (src.depth() != f.depth) throw Error(Errc::DepthMismatch, "source cylinders do not match function depth");
  std::vector<T> out(cyl.size());
  for (size_t i = 0; i < cyl.size(); ++i) out[i] = f.values[src.index(cyl.word(i))];
  return out;
}

template <class T>
std::vector<T> lift(const CylinderTable<T>& f, const Cylinders& cyl) {
  if (f.depth == cyl.depth()) return f.values;
  if (f.depth > cyl.depth()) throw Error(Errc::DepthMismatch, "function deeper than target depth");
  return lift(f, Cylinders(cyl.shift(), f.depth), cyl);
}

/// Predecessor structure of the shift on depth-K cylinders. Entry e of the
/// extension list is the word a x_0 .. x_{K-1} of length K+1; it feeds the
/// value at its source (first K symbols) into its target (last K symbols).
class Transfer {
 public:
  Transfer() = default;
  Transfer(const Subshift& s, int depth) : cyl_(s, depth), ext_(s, depth + 1) {
    const size_t n = cyl_.size();
    std::vector<std::vector<std::uint32_t>> lists(n);
    src_.resize(ext_.size());
    tgt_.resize(ext_.size());
    for (size_t e = 0; e < ext_.size(); ++e) {
      const int* w = ext_.word(e);
      src_[e] = static_cast<std::uint32_t>(cyl_.index(w));
      tgt_[e] = static_cast<std::uint32_t>(cyl_.index(w + 1));
      lists[tgt_[e]].push_back(static_cast<std::uint32_t>(e));
    }
    start_.assign(n + 1, 0);
    for (size_t x = 0; x < n; ++x) start_[x + 1] = start_[x] + lists[x].size();
    order_.reserve(ext_.size());
    for (auto& l : lists) order_.insert(order_.end(), l.begin(), l.end());
  }

  const Subshift& shift() const { return cyl_.shift(); }
  const Cylinders& cyl() const { return cyl_; }
  const Cylinders& ext() const { return ext_; }
  int depth() const { return cyl_.depth(); }
  size_t size() const { return cyl_.size(); }
  size_t src(size_t e) const { return src_[e]; }
  size_t tgt(size_t e) const { return tgt_[e]; }

  /// Extension indices whose tail is the cylinder x, increasing.
  std::pair<const std::uint32_t*, const std::uint32_t*> preds(size_t x) const {
    return {order_.data() + start_[x], order_.data() + start_[x + 1]};
  }

  /// Weight function of depth <= K+1 as values per extension word.
  template <class T>
  std::vector<T> on_ext(const CylinderTable<T>& f) const {
    if (f.depth > depth() + 1) throw Error(Errc::DepthMismatch, "weight deeper than K+1");
    return lift(f, ext_);
  }

  /// out(x) = sum over predecessors e of w(e) h(src e).
  template <class W, class V>
  std::vector<V> apply(const std::vector<W>& w, const std::vector<V>& h) const {
    std::vector<V> out(size(), V(0));
    for (size_t x = 0; x < size(); ++x) {
      V acc(0);
      for (size_t k = start_[x]; k < start_[x + 1]; ++k) {
        auto e = order_[k];
        acc += w[e] * h[src_[e]];
      }
      out[x] = acc;
    }
    return out;
  }

  /// Adjoint: out(y) = sum over extensions e with source y of w(e) nu(tgt e).
  template <class W, class V>
  std::vector<V> apply_adjoint(const std::vector<W>& w, const std::vector<V>& nu) const {
    std::vector<V> out(size(), V(0));
    for (size_t e = 0; e < ext_.size(); ++e) out[src_[e]] += w[e] * nu[tgt_[e]];
    return out;
  }

 private:
  Cylinders cyl_, ext_;
  std::vector<std::uint32_t> src_, tgt_, order_;
  std::vector<size_t> start_;
};

inline std::vector<double> exp_weights(const std::vector<double>& f) {
  std::vector<double> w(f.size());
  for (size_t i = 0; i < f.size(); ++i) w[i] = std::exp(f[i]);
  return w;
}

/// Dense matrix with M(x, src) = e^{f(ext word)} over admissible predecessors.
inline Eigen::MatrixXcd transfer_matrix(const ComplexCylinderFunction& f, const Subshift& s, int depth) {
  Transfer op(s, depth);
  auto fe = op.on_ext(f);
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(static_cast<long>(op.size()), static_cast<long>(op.size()));
  for (size_t e = 0; e < op.ext().size(); ++e)
    m(static_cast<long>(op.tgt(e)), static_cast<long>(op.src(e))) += std::exp(fe[e]);
  return m;
}

inline Eigen::MatrixXcd transfer_matrix(const CylinderFunction& f, const Subshift& s, int depth) {
  ComplexCylinderFunction g{f.depth, std::vector<cd>(f.values.begin(), f.values.end())};
  return transfer_matrix(g, s, depth);
}

struct RpfData {
  double lambda = 0.0;
  std::vector<double> h;
  std::vector<double> nu;
  double residual_h = 0.0;
  double residual_nu = 0.0;
  int iterations = 0;
  double residual() const { return std::max(residual_h, residual_nu); }
};

namespace detail {

// Power iteration for a positive simple eigenvalue; v is normalized to max 1.
template <class Step>
int power_iterate(std::vector<double>& v, Step step, double tol, int max_iter, const char* what) {
  double best = std::numeric_limits<double>::infinity();
  int since_best = 0;
  for (int it = 1; it <= max_iter; ++it) {
    std::vector<double> w = step(v);
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0, mx = 0.0;
    for (size_t i = 0; i < v.size(); ++i) {
      double r = w[i] / v[i];
      lo = std::min(lo, r);
      hi = std::max(hi, r);
      mx = std::max(mx, w[i]);
    }
    if (!(mx > 0.0) || !std::isfinite(mx)) throw Error(Errc::NoConvergence, std::string(what) + " degenerated");
    for (size_t i = 0; i < v.size(); ++i) v[i] = w[i] / mx;
    double spread = (hi - lo) / (0.5 * (hi + lo));
    if (spread <= 1e-2 * tol) return it;
    if (spread < best) {
      best = spread;
      since_best = 0;
    } else if (++since_best > 25 && best <= tol) {
      return it;
    }
  }
  throw Error(Errc::NoConvergence, std::string(what) + " did not converge in " + std::to_string(max_iter) +
                                       " iterations");
}

}  // namespace detail

inline int mixing_power_cap(const Subshift& s) { return (s.size() - 1) * (s.size() - 1) + 1; }

/// Leading eigendata of L_f for weights given per extension word.
inline RpfData rpf_solve(const Transfer& op, const std::vector<double>& f_ext, const ThermoConfig& cfg,
                         const RpfData* warm = nullptr) {
  validate(cfg);
  if (!check_mixing(op.shift(), mixing_power_cap(op.shift())))
    throw Error(Errc::NotMixing, "transition matrix is not primitive");
  auto w = exp_weights(f_ext);
  const size_t n = op.size();
  RpfData r;
  r.h = warm && warm->h.size() == n ? warm->h : std::vector<double>(n, 1.0);
  r.nu = warm && warm->nu.size() == n ? warm->nu : std::vector<double>(n, 1.0);
  int i1 = detail::power_iterate(
      r.h, [&](const std::vector<double>& v) { return op.apply(w, v); }, cfg.power_iter_tol,
      cfg.power_iter_max, "eigenfunction");
  int i2 = detail::power_iterate(
      r.nu, [&](const std::vector<double>& v) { return op.apply_adjoint(w, v); }, cfg.power_iter_tol,
      cfg.power_iter_max, "eigenmeasure");
  r.iterations = std::max(i1, i2);
  double total = 0.0;
  for (double v : r.nu) total += v;
  for (double& v : r.nu) v /= total;
  double pair = 0.0;
  for (size_t i = 0; i < n; ++i) pair += r.nu[i] * r.h[i];
  for (double& v : r.h) v /= pair;
  auto lh = op.apply(w, r.h);
  double lam = 0.0;
  for (size_t i = 0; i < n; ++i) lam += r.nu[i] * lh[i];
  r.lambda = lam;
  auto ln = op.apply_adjoint(w, r.nu);
  for (size_t i = 0; i < n; ++i) {
    r.residual_h = std::max(r.residual_h, std::fabs(lh[i] - lam * r.h[i]));
    r.residual_nu += std::fabs(ln[i] - lam * r.nu[i]);
  }
  return r;
}

inline RpfData rpf_solve(const CylinderFunction& f, const Subshift& s, const ThermoConfig& cfg) {
  Transfer op(s, cfg.depth);
  return rpf_solve(op, op.on_ext(f), cfg);
}

inline double pressure(const CylinderFunction& f, const Subshift& s, const ThermoConfig& cfg) {
  return std::log(rpf_solve(f, s, cfg).lambda);
}

struct BowenResult {
  double delta = 0.0;
  double pressure_at_root = 0.0;
  int steps = 0;
  RpfData rpf;
};

inline std::vector<double> scaled(const std::vector<double>& v, double c) {
  std::vector<double> out(v.size());
  for (size_t i = 0; i < v.size(); ++i) out[i] = c * v[i];
  return out;
}

/// Root of s -> Pr(-s tau) by bisection on [0, 50 / tau_min].
inline BowenResult bowen_delta(const Transfer& op, const std::vector<double>& tau_ext, const ThermoConfig& cfg) {
  double tmin = *std::min_element(tau_ext.begin(), tau_ext.end());
  if (!(tmin > 0.0)) throw Error(Errc::NonPositiveRoof, "roof must be strictly positive");
  BowenResult out;
  RpfData at0 = rpf_solve(op, scaled(tau_ext, 0.0), cfg);
  double p0 = std::log(at0.lambda);
  if (std::fabs(p0) <= cfg.power_iter_tol) {
    out.rpf = at0;
    out.pressure_at_root = p0;
    return out;
  }
  if (p0 < 0.0) throw Error(Errc::NoSignChange, "Pr(0) is negative");
  double lo = 0.0, hi = 50.0 / tmin;
  RpfData rh = rpf_solve(op, scaled(tau_ext, -hi), cfg);
  if (std::log(rh.lambda) > 0.0) throw Error(Errc::NoSignChange, "no sign change on the bracket");
  RpfData warm = at0;
  while (hi - lo > 1e-15 * std::max(1.0, hi) && out.steps < 200) {
    double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    warm = rpf_solve(op, scaled(tau_ext, -mid), cfg, &warm);
    ++out.steps;
    if (std::log(warm.lambda) > 0.0) lo = mid;
    else hi = mid;
  }
  out.delta = 0.5 * (lo + hi);
  out.rpf = rpf_solve(op, scaled(tau_ext, -out.delta), cfg, &warm);
  out.pressure_at_root = std::log(out.rpf.lambda);
  return out;
}

inline double bowen_delta(const CylinderFunction& tau, const Subshift& s, const ThermoConfig& cfg) {
  Transfer op(s, cfg.depth);
  return bowen_delta(op, op.on_ext(tau), cfg).delta;
}

// ---------------------------------------------------------------------------
// Lipschitz data on cylinder tables.

/// Calls fn(level, lo, hi) for every prefix node of length level in [0, depth).
inline void for_each_node(const Cylinders& cyl, int min_level, const std::function<void(int, size_t, size_t)>& fn) {
  const size_t n = cyl.size();
  for (int L = min_level; L < cyl.depth(); ++L) {
    size_t lo = 0;
    while (lo < n) {
      size_t hi = lo + 1;
      while (hi < n && std::equal(cyl.word(lo), cyl.word(lo) + L, cyl.word(hi))) ++hi;
      fn(L, lo, hi);
      lo = hi;
    }
  }
}

/// Exact d_theta Lipschitz seminorm of a real table (min_level 1 gives the essential one).
inline double lip_table(const std::vector<double>& v, const Cylinders& cyl, int min_level = 0) {
  double best = 0.0, theta = cyl.shift().theta();
  for_each_node(cyl, min_level, [&](int L, size_t lo, size_t hi) {
    auto [a, b] = std::minmax_element(v.begin() + static_cast<long>(lo), v.begin() + static_cast<long>(hi));
    best = std::max(best, (*b - *a) / std::pow(theta, L));
  });
  return best;
}

inline double sup_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::fabs(x));
  return m;
}

// ---------------------------------------------------------------------------
// Normalized potentials.

struct Normalized {
  double a = 0.0;
  std::vector<double> f_ext;   // f^(a) on depth K+1 words
  double lambda = 1.0;         // leading eigenvalue of L_{-(a+delta) tau}
  double lambda_ratio = 1.0;   // lambda_a / lambda_0
  std::vector<double> eig;     // h_a / h_0, eigenfunction of L_{f^(a)} with eigenvalue 1
  double C_f = 1.0;            // max eig / min eig, bounds L_{f^(a)}^k 1
};

struct ThermoConstants {
  double T0 = 0.0;
  double A_f = 0.0;
  double C_f = 1.0;
  double tau_sup = 0.0;
  double tau_lip = 0.0;
  double tau_lip_e = 0.0;
  double f_sup = 0.0;
  double f_lip = 0.0;
  double f_lip_e = 0.0;
};

/// Everything derived from (subshift, roof) at working depth K.
class Thermo {
 public:
  Thermo() = default;
  Thermo(const Subshift& s, const CylinderFunction& tau, const ThermoConfig& cfg) : cfg_(cfg), tau_(tau) {
    validate(cfg);
    if (tau.depth > cfg.depth + 1) throw Error(Errc::DepthMismatch, "roof deeper than K+1");
    op_ = Transfer(s, cfg.depth);
    tau_cyl_ = Cylinders(s, tau.depth);
    tau_ext_ = op_.on_ext(tau);
    auto b = bowen_delta(op_, tau_ext_, cfg);
    delta_ = b.delta;
    base_ = b.rpf;
    nuU_.resize(size());
    for (size_t i = 0; i < size(); ++i) nuU_[i] = base_.h[i] * base_.nu[i];
    double t = 0.0;
    for (double v : nuU_) t += v;
    for (double& v : nuU_) v /= t;
    log_h0_.resize(size());
    for (size_t i = 0; i < size(); ++i) log_h0_[i] = std::log(base_.h[i]);
    zero_ = build(0.0, base_);
    measure_constants();
  }

  const Subshift& shift() const { return op_.shift(); }
  const Transfer& op() const { return op_; }
  const Cylinders& cyl() const { return op_.cyl(); }
  const ThermoConfig& config() const { return cfg_; }
  size_t size() const { return op_.size(); }
  int depth() const { return op_.depth(); }
  double delta() const { return delta_; }
  const RpfData& base() const { return base_; }
  const std::vector<double>& nuU() const { return nuU_; }
  const CylinderFunction& tau() const { return tau_; }
  const std::vector<double>& tau_ext() const { return tau_ext_; }
  const ThermoConstants& constants() const { return k_; }

  /// Roof on depth-K cylinders; requires depth(tau) <= K.
  std::vector<double> tau_cyl() const {
    if (tau_.depth > depth()) throw Error(Errc::DepthMismatch, "roof deeper than K");
    return lift(tau_, tau_cyl_, cyl());
  }

  /// Roof at the point whose first tau.depth symbols start at w.
  double tau_at(const int* w) const { return tau_.values[tau_cyl_.index(w)]; }

  /// Birkhoff sum tau_k at the representative point of the cylinder [w].
  double tau_sum(const Word& w, int k) const {
    Word p = shift().rep_point(w, k + tau_.depth);
    double acc = 0.0;
    for (int j = 0; j < k; ++j) acc += tau_at(p.data() + j);
    return acc;
  }

  const Normalized& normalized0() const { return zero_; }

  Normalized normalized(double a) const {
    if (std::fabs(a) > cfg_.a_window)
      throw Error(Errc::AOutOfWindow, "|a| exceeds the configured window");
    if (a == 0.0) return zero_;
    RpfData r = rpf_solve(op_, scaled(tau_ext_, -(a + delta_)), cfg_, &base_);
    return build(a, r);
  }

 private:
  Normalized build(double a, const RpfData& r) const {
    Normalized n;
    n.a = a;
    n.lambda = r.lambda;
    n.lambda_ratio = r.lambda / base_.lambda;
    n.f_ext.resize(op_.ext().size());
    const double ll = std::log(r.lambda);
    for (size_t e = 0; e < n.f_ext.size(); ++e)
      n.f_ext[e] = -(a + delta_) * tau_ext_[e] + log_h0_[op_.src(e)] - log_h0_[op_.tgt(e)] - ll;
    n.eig.resize(size());
    double mass = 0.0;
    for (size_t i = 0; i < size(); ++i) {
      n.eig[i] = r.h[i] / base_.h[i];
      mass += nuU_[i] * n.eig[i];
    }
    for (double& v : n.eig) v /= mass;
    auto [lo, hi] = std::minmax_element(n.eig.begin(), n.eig.end());
    n.C_f = *hi / *lo;
    return n;
  }

  void measure_constants() {
    const Cylinders& ext = op_.ext();
    k_.tau_sup = sup_abs(tau_ext_);
    k_.tau_lip = lip_table(tau_ext_, ext);
    k_.tau_lip_e = lip_table(tau_ext_, ext, 1);
    double T = std::max({cfg_.lip_bound, k_.tau_sup, k_.tau_lip, k_.tau_lip_e});
    const double w = cfg_.a_window;
    for (double a : {-w, -0.5 * w, 0.0, 0.5 * w, w}) {
      Normalized n = normalized(a);
      k_.f_sup = std::max(k_.f_sup, sup_abs(n.f_ext));
      k_.f_lip = std::max(k_.f_lip, lip_table(n.f_ext, ext));
      k_.f_lip_e = std::max(k_.f_lip_e, lip_table(n.f_ext, ext, 1));
      k_.C_f = std::max(k_.C_f, n.C_f);
      if (a != 0.0) {
        double d = 0.0;
        for (size_t e = 0; e < n.f_ext.size(); ++e) d = std::max(d, std::fabs(n.f_ext[e] - zero_.f_ext[e]));
        k_.A_f = std::max(k_.A_f, d / std::fabs(a));
      }
    }
    T = std::max({T, k_.f_sup, k_.f_lip, k_.f_lip_e});
    k_.T0 = T * (1.0 + 1e-9);
  }

  ThermoConfig cfg_;
  Transfer op_;
  CylinderFunction tau_;
  Cylinders tau_cyl_;
  std::vector<double> tau_ext_;
  double delta_ = 0.0;
  RpfData base_;
  std::vector<double> nuU_, log_h0_;
  Normalized zero_;
  ThermoConstants k_;
};

/// (f^(a), RPF data at a) for a roof, recomputing the Bowen root.
inline std::pair<CylinderFunction, RpfData> normalized_potential(double a, const CylinderFunction& tau,
                                                                 const Subshift& s, const ThermoConfig& cfg) {
  if (std::fabs(a) > cfg.a_window) throw Error(Errc::AOutOfWindow, "|a| exceeds the configured window");
  Thermo th(s, tau, cfg);
  Normalized n = th.normalized(a);
  RpfData r = a == 0.0 ? th.base() : rpf_solve(th.op(), scaled(th.tau_ext(), -(a + th.delta())), cfg);
  return {CylinderFunction{cfg.depth + 1, n.f_ext}, r};
}

/// Mass of every depth-k cylinder under a measure on depth-K cylinders, k <= K.
inline std::vector<double> marginal(const std::vector<double>& m, const Cylinders& cyl, const Cylinders& coarse) {
  std::vector<double> out(coarse.size(), 0.0);
  for (size_t i = 0; i < cyl.size(); ++i) out[coarse.index(cyl.word(i))] += m[i];
  return out;
}

struct GibbsReport {
  double c1 = 0.0;
  double c2 = 0.0;
};

/// min and max of nu_U(C) e^{delta tau_k(x)} over cylinders of depth kmin..kmax.
inline GibbsReport gibbs_check(const Thermo& th, int kmin, int kmax) {
  if (kmin < 1 || kmax > th.depth() || kmin > kmax) throw Error(Errc::BadRange, "depth range outside [1, K]");
  GibbsReport g{std::numeric_limits<double>::infinity(), 0.0};
  for (int k = kmin; k <= kmax; ++k) {
    Cylinders coarse(th.shift(), k);
    auto m = marginal(th.nuU(), th.cyl(), coarse);
    for (size_t i = 0; i < coarse.size(); ++i) {
      double v = m[i] * std::exp(th.delta() * th.tau_sum(coarse.word_vec(i), k));
      g.c1 = std::min(g.c1, v);
      g.c2 = std::max(g.c2, v);
    }
  }
  return g;
}

}  // namespace umix
