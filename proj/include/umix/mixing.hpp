#pragma once
// Suspension flows over the congruence cover: observables, correlation
// functions, their Laplace transforms and decay fits.

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <map>
#include <numbers>
#include <tuple>
#include <vector>

#include "umix/congruence.hpp"
#include "umix/error.hpp"
#include "umix/fit.hpp"
#include "umix/group.hpp"
#include "umix/thermo.hpp"

namespace umix {

/// Gauss-Legendre nodes and weights on [-1, 1].
inline const std::pair<std::vector<double>, std::vector<double>>& gauss_legendre(int n) {
  static std::map<int, std::pair<std::vector<double>, std::vector<double>>> cache;
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  std::vector<double> x(n), w(n);
  for (int i = 0; i < n; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    for (int it2 = 0; it2 < 100; ++it2) {
      double p0 = 1.0, p1 = z;
      for (int k = 2; k <= n; ++k) {
        double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      double dp = n * (z * p1 - p0) / (z * z - 1.0);
      double dz = p1 / dp;
      z -= dz;
      if (std::fabs(dz) < 1e-16) {
        x[i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        break;
      }
      x[i] = z;
      w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
  }
  return cache.emplace(n, std::make_pair(x, w)).first->second;
}

/// Integral of f over [lo, hi] by n-point Gauss on panels of width at most panel.
template <class F>
auto gauss_integrate(F&& f, double lo, double hi, int n = 16, double panel = 0.5) -> decltype(f(0.0)) {
  using R = decltype(f(0.0));
  R acc(0);
  if (!(hi > lo)) return acc;
  const auto& [x, w] = gauss_legendre(n);
  int panels = std::max(1, static_cast<int>(std::ceil((hi - lo) / panel)));
  double h = (hi - lo) / panels;
  for (int p = 0; p < panels; ++p) {
    double a = lo + p * h, mid = a + 0.5 * h;
    for (int i = 0; i < n; ++i) acc += w[i] * 0.5 * h * f(mid + 0.5 * h * x[i]);
  }
  return acc;
}

// ---------------------------------------------------------------------------
// Observables.

inline constexpr int kMaxTimeDegree = 4;

struct TimePiece {
  double lo = 0.0;
  double hi = std::numeric_limits<double>::infinity();
  std::vector<double> c;  // sum c_k t^k

  double eval(double t) const {
    double acc = 0.0;
    for (size_t k = c.size(); k-- > 0;) acc = acc * t + c[k];
    return acc;
  }
  double deriv(double t) const {
    double acc = 0.0;
    for (size_t k = c.size(); k-- > 1;) acc = acc * t + static_cast<double>(k) * c[k];
    return acc;
  }
};

/// phi(u, g, t) on depth-K cylinders u, group elements g and t in [0, tau(u)),
/// piecewise polynomial in t.
class Observable {
 public:
  Observable() = default;
  Observable(const Thermo& th, int order) : depth_(th.depth()), order_(order), tau_(th.tau_cyl()) {
    if (order < 1) throw Error(Errc::ValidationError, "group order must be positive");
    cells_.resize(tau_.size() * static_cast<size_t>(order));
  }

  int depth() const { return depth_; }
  int order() const { return order_; }
  size_t cylinders() const { return tau_.size(); }
  double tau(size_t u) const { return tau_[u]; }
  const std::vector<TimePiece>& pieces(size_t u, int g) const { return cells_[u * order_ + g]; }

  void add(size_t u, int g, TimePiece p) {
    if (u >= cylinders() || g < 0 || g >= order_) throw Error(Errc::BadIndex, "observable cell out of range");
    if (static_cast<int>(p.c.size()) > kMaxTimeDegree + 1)
      throw Error(Errc::ValidationError, "time profiles are limited to degree 4");
    if (!(p.hi > p.lo)) throw Error(Errc::ValidationError, "empty time piece");
    for (const auto& q : cells_[u * order_ + g])
      if (std::max(q.lo, p.lo) < std::min(q.hi, p.hi)) throw Error(Errc::ValidationError, "overlapping time pieces");
    while (!p.c.empty() && p.c.back() == 0.0) p.c.pop_back();
    if (p.c.empty()) return;
    cells_[u * order_ + g].push_back(std::move(p));
    std::sort(cells_[u * order_ + g].begin(), cells_[u * order_ + g].end(),
              [](const TimePiece& a, const TimePiece& b) { return a.lo < b.lo; });
  }

  /// Value at time t in [0, tau(u)); zero outside the pieces.
  double eval(size_t u, int g, double t) const {
    for (const auto& p : pieces(u, g))
      if (t >= p.lo && t < p.hi) return p.eval(t);
    return 0.0;
  }

  bool empty(size_t u, int g) const { return cells_[u * order_ + g].empty(); }

 private:
  int depth_ = 0;
  int order_ = 1;
  std::vector<double> tau_;
  std::vector<std::vector<TimePiece>> cells_;
};

/// spatial(u) fiber(g) p(t) on [lo, hi).
inline Observable product_observable(const Thermo& th, const std::vector<double>& spatial,
                                     const std::vector<double>& fiber, const std::vector<double>& poly, double lo = 0.0,
                                     double hi = std::numeric_limits<double>::infinity()) {
  if (spatial.size() != th.size()) throw Error(Errc::DimensionMismatch, "one spatial value per cylinder");
  Observable o(th, static_cast<int>(fiber.size()));
  for (size_t u = 0; u < th.size(); ++u)
    for (int g = 0; g < o.order(); ++g) {
      double s = spatial[u] * fiber[g];
      if (s == 0.0) continue;
      TimePiece p{lo, hi, poly};
      for (double& c : p.c) c *= s;
      o.add(u, g, p);
    }
  return o;
}

inline Observable constant_observable(const Thermo& th, int order, double v) {
  return product_observable(th, std::vector<double>(th.size(), 1.0), std::vector<double>(order, 1.0), {v});
}

/// delta_e - 1/n: the simplest fiber with zero sum.
inline std::vector<double> zero_sum_fiber(const FiniteGroup& g) {
  std::vector<double> f(g.order(), -1.0 / g.order());
  f[g.id()] += 1.0;
  return f;
}

/// Fiber sums vanish at every sampled time.
inline bool is_fiber_zero_sum(const Observable& o, double tol = 1e-12) {
  for (size_t u = 0; u < o.cylinders(); ++u) {
    std::vector<double> ts;
    for (int i = 0; i <= 16; ++i) ts.push_back(o.tau(u) * i / 16.5);
    for (int g = 0; g < o.order(); ++g)
      for (const auto& p : o.pieces(u, g))
        if (p.lo < o.tau(u)) ts.push_back(p.lo);
    for (double t : ts) {
      double s = 0.0, scale = 0.0;
      for (int g = 0; g < o.order(); ++g) {
        double v = o.eval(u, g, t);
        s += v;
        scale += std::fabs(v);
      }
      if (std::fabs(s) > tol * std::max(1.0, scale)) return false;
    }
  }
  return true;
}

/// phi-hat_xi(u)(g) = int_0^{tau(u)} phi(u, g, t) e^{-xi t} dt.
inline FiberedFunction hat_transform(const Observable& o, cd xi) {
  double tmax = 0.0;
  for (size_t u = 0; u < o.cylinders(); ++u) tmax = std::max(tmax, o.tau(u));
  if (std::fabs(xi.real()) * tmax > 700.0) throw Error(Errc::QuadratureUnderflow, "e^{-xi t} leaves double range");
  FiberedFunction H(o.depth(), o.order(), o.cylinders());
  H.zero_sum = is_fiber_zero_sum(o);
  for (size_t u = 0; u < o.cylinders(); ++u)
    for (int g = 0; g < o.order(); ++g) {
      cd acc(0);
      for (const auto& p : o.pieces(u, g))
        acc += gauss_integrate([&](double t) { return p.eval(t) * std::exp(-xi * t); }, p.lo, std::min(p.hi, o.tau(u)));
      H.fiber(u)[g] = acc;
    }
  return H;
}

/// ||phi||_inf + Lip in d_theta(u, u') + |t - t'|, on a sampled time grid.
struct BNorm {
  double sup = 0.0;
  double lip_time = 0.0;
  double lip_space = 0.0;
  double value() const { return sup + std::max(lip_time, lip_space); }
};

inline BNorm b_norm(const Observable& o, const Cylinders& cyl, int samples = 64) {
  BNorm r;
  const int K = cyl.depth();
  const double th = cyl.shift().theta();
  for (size_t u = 0; u < o.cylinders(); ++u)
    for (int g = 0; g < o.order(); ++g)
      for (int i = 0; i < samples; ++i) {
        double t = o.tau(u) * i / samples;
        r.sup = std::max(r.sup, std::fabs(o.eval(u, g, t)));
        for (const auto& p : o.pieces(u, g))
          if (t >= p.lo && t < p.hi) r.lip_time = std::max(r.lip_time, std::fabs(p.deriv(t)));
      }
  for (size_t u = 0; u < o.cylinders(); ++u)
    for (size_t v = u + 1; v < o.cylinders(); ++v) {
      double d = std::pow(th, first_disagreement(cyl.word(u), cyl.word(v), K));
      double T = std::min(o.tau(u), o.tau(v));
      for (int g = 0; g < o.order(); ++g)
        for (int i = 0; i < samples; ++i) {
          double t = T * i / samples;
          r.lip_space = std::max(r.lip_space, std::fabs(o.eval(u, g, t) - o.eval(v, g, t)) / d);
        }
    }
  return r;
}

// ---------------------------------------------------------------------------
// Forward Markov chain of nu_U.

/// nu_U is the order-K Markov measure with backward conditionals e^{f^(0)}; the
/// forward step from window w to (w_1..w_{K-1}, a) has probability
/// e^{f(w a)} nu_U(w') / nu_U(w) and multiplies the group coordinate by c(w_0, w_1).
class ForwardChain {
 public:
  struct Step {
    size_t to;
    double p;
    int c;
  };

  ForwardChain(const Thermo& th, const FiniteGroup& g, const Cocycle& c) : th_(&th), g_(&g) {
    const Subshift& s = th.shift();
    const Cylinders& cyl = th.cyl();
    const Cylinders& ext = th.op().ext();
    const int K = th.depth();
    const auto& nu = th.nuU();
    const auto& f = th.normalized0().f_ext;
    tau_ = th.tau_cyl();
    steps_.resize(cyl.size());
    Word buf(K + 1);
    for (size_t w = 0; w < cyl.size(); ++w) {
      const int* x = cyl.word(w);
      std::copy(x, x + K, buf.begin());
      for (int a = 0; a < s.size(); ++a) {
        if (!s.allowed(x[K - 1], a)) continue;
        buf[K] = a;
        size_t to = cyl.index(buf.data() + 1);
        double p = std::exp(f[ext.index(buf.data())]) * nu[to] / nu[w];
        steps_[w].push_back({to, p, c.at(buf[0], buf[1])});
      }
    }
    tau_min_ = *std::min_element(tau_.begin(), tau_.end());
    tau_max_ = *std::max_element(tau_.begin(), tau_.end());
  }

  const Thermo& thermo() const { return *th_; }
  const FiniteGroup& group() const { return *g_; }
  const std::vector<Step>& from(size_t w) const { return steps_[w]; }
  double tau(size_t w) const { return tau_[w]; }
  double tau_min() const { return tau_min_; }
  double tau_max() const { return tau_max_; }

  /// Largest deviation of the outgoing probabilities from summing to 1.
  double stochastic_defect() const {
    double worst = 0.0;
    for (const auto& row : steps_) {
      double s = 0.0;
      for (const auto& st : row) s += st.p;
      worst = std::max(worst, std::fabs(s - 1.0));
    }
    return worst;
  }

 private:
  const Thermo* th_;
  const FiniteGroup* g_;
  std::vector<double> tau_;
  std::vector<std::vector<Step>> steps_;
  double tau_min_ = 0.0, tau_max_ = 0.0;
};

inline int default_unroll_cap(double t_max, double tau_min) {
  return static_cast<int>(std::ceil(t_max / tau_min)) + 2;
}

namespace detail {

/// int over r in [lo, hi) of psi(u, g, r) phi(w, h, r + shift), split at every breakpoint.
inline double overlap_integral(const Observable& psi, size_t u, int g, const Observable& phi, size_t w, int h,
                               double shift, double lo, double hi) {
  if (!(hi > lo)) return 0.0;
  std::vector<double> cuts{lo, hi};
  for (const auto& p : psi.pieces(u, g))
    for (double e : {p.lo, p.hi})
      if (e > lo && e < hi) cuts.push_back(e);
  for (const auto& p : phi.pieces(w, h))
    for (double e : {p.lo - shift, p.hi - shift})
      if (e > lo && e < hi) cuts.push_back(e);
  std::sort(cuts.begin(), cuts.end());
  const auto& [x, wt] = gauss_legendre(8);
  double acc = 0.0;
  for (size_t i = 0; i + 1 < cuts.size(); ++i) {
    double a = cuts[i], b = cuts[i + 1];
    if (!(b > a)) continue;
    double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    for (size_t k = 0; k < x.size(); ++k) {
      double r = mid + half * x[k];
      acc += wt[k] * half * psi.eval(u, g, r) * phi.eval(w, h, r + shift);
    }
  }
  return acc;
}

}  // namespace detail

struct CorrelationValue {
  double total = 0.0;
  double upsilon0 = 0.0;  // orbits that crossed the roof at least once
  double upsilon1 = 0.0;  // r + t < tau(u)
  int steps = 0;
};

/// Upsilon(t) = sum_g int_U int_0^{tau(u)} phi(u, g, r + t) psi(u, g, r) dr dnu_U, unrolling
/// (u, g, s + tau(u)) ~ (sigma u, g c(u), s) along the forward chain. Orbit states with
/// the same (window, group element, elapsed roof time) are merged.
inline CorrelationValue correlation_direct(const ForwardChain& ch, const Observable& phi, const Observable& psi,
                                           double t, int unroll_cap = -1) {
  if (!(t >= 0.0)) throw Error(Errc::BadRange, "correlation time must be nonnegative");
  const FiniteGroup& G = ch.group();
  if (phi.order() != G.order() || psi.order() != G.order())
    throw Error(Errc::DimensionMismatch, "observables do not match the group");
  const auto& nu = ch.thermo().nuU();
  if (unroll_cap < 0) unroll_cap = default_unroll_cap(t, ch.tau_min());
  CorrelationValue out;
  using Key = std::tuple<size_t, int, long long>;
  for (size_t u = 0; u < nu.size(); ++u) {
    bool any = false;
    for (int g = 0; g < G.order() && !any; ++g) any = !psi.empty(u, g);
    if (!any) continue;
    const double tu = ch.tau(u);
    struct State {
      double T, mass;
    };
    std::map<Key, State> cur;
    cur[{u, G.id(), 0}] = {0.0, 1.0};
    for (int j = 0; !cur.empty(); ++j) {
      if (j > unroll_cap) throw Error(Errc::HorizonTooDeep, "t needs more than " + std::to_string(unroll_cap) + " roof crossings");
      out.steps = std::max(out.steps, j);
      std::map<Key, State> next;
      for (const auto& [key, st] : cur) {
        auto [w, ge, code] = key;
        (void)code;
        // r in [0, tau(u)) with r + t in [T, T + tau(w)).
        double lo = std::max(0.0, st.T - t), hi = std::min(tu, st.T + ch.tau(w) - t);
        if (hi > lo) {
          double acc = 0.0;
          for (int g = 0; g < G.order(); ++g) {
            if (psi.empty(u, g)) continue;
            int h = G.mul(g, ge);
            if (phi.empty(w, h)) continue;
            acc += detail::overlap_integral(psi, u, g, phi, w, h, t - st.T, lo, hi);
          }
          (j == 0 ? out.upsilon1 : out.upsilon0) += nu[u] * st.mass * acc;
        }
        double T2 = st.T + ch.tau(w);
        if (T2 >= t + tu) continue;
        for (const auto& sp : ch.from(w)) {
          Key k2{sp.to, G.mul(ge, sp.c), std::llround(T2 * 1e9)};
          auto it = next.find(k2);
          if (it == next.end())
            next[k2] = {T2, st.mass * sp.p};
          else
            it->second.mass += st.mass * sp.p;
        }
      }
      cur.swap(next);
    }
  }
  out.total = out.upsilon0 + out.upsilon1;
  return out;
}

struct LaplaceValue {
  cd value{0.0, 0.0};
  int terms = 0;
  double tail = 0.0;  // estimate of the neglected remainder
};

/// int_0^inf Upsilon^0(t) e^{-xi t} dt. With s = r + t - T_j the time integral over each
/// j >= 1 crossing factorizes into int psi e^{xi r} dr, e^{-xi T_j} and int phi e^{-xi s} ds;
/// the crossings are summed along the forward chain until the weight drops below tol.
inline LaplaceValue laplace_direct(const ForwardChain& ch, const Observable& phi, const Observable& psi, cd xi,
                                   double tol = 1e-17, int max_terms = 100000) {
  if (!(xi.real() > 0.0)) throw Error(Errc::NonpositiveRealPart, "Laplace transform needs Re xi > 0");
  const FiniteGroup& G = ch.group();
  const int n = G.order();
  const auto& nu = ch.thermo().nuU();
  const size_t N = nu.size();
  FiberedFunction ph = hat_transform(phi, xi);
  FiberedFunction ps = hat_transform(psi, -xi);  // int psi e^{xi r} dr
  std::vector<cd> A(N * n), B(N * n);
  for (size_t u = 0; u < N; ++u)
    for (int g = 0; g < n; ++g) A[u * n + g] = nu[u] * ps.fiber(u)[g];
  double phmax = 0.0;
  for (const auto& v : ph.v) phmax = std::max(phmax, std::abs(v));
  LaplaceValue out;
  for (int j = 1; j <= max_terms; ++j) {
    std::fill(B.begin(), B.end(), cd(0));
    for (size_t w = 0; w < N; ++w) {
      cd e = std::exp(-xi * ch.tau(w));
      for (const auto& sp : ch.from(w))
        for (int g = 0; g < n; ++g) {
          cd a = A[w * n + g];
          if (a == cd(0)) continue;
          B[sp.to * n + G.mul(g, sp.c)] += sp.p * e * a;
        }
    }
    A.swap(B);
    cd term(0);
    double mass = 0.0;
    for (size_t w = 0; w < N; ++w)
      for (int g = 0; g < n; ++g) {
        term += A[w * n + g] * ph.fiber(w)[g];
        mass += std::abs(A[w * n + g]);
      }
    out.value += term;
    out.terms = j;
    // Remaining crossings carry at most mass e^{-Re xi tau_min k} each.
    double q = std::exp(-xi.real() * ch.tau_min());
    out.tail = mass * phmax * q / (1.0 - q);
    if (out.tail <= tol * std::max(std::abs(out.value), 1e-300)) break;
  }
  return out;
}

/// sum_{k=1}^{kmax} lambda_a^k <phi-hat_xi, M_xi^k psi-hat_{-conj xi}> with lambda_a = lambda_a / lambda_0.
inline LaplaceValue laplace_series(const Thermo& th, const FiniteGroup& g, const Cocycle& c, const Observable& phi,
                                   const Observable& psi, cd xi, int kmax) {
  if (kmax < 1) throw Error(Errc::BadRange, "kmax must be positive");
  CongruenceOperator M(th, g, c, xi);
  const double lam = th.normalized(xi.real()).lambda_ratio;
  FiberedFunction ph = hat_transform(phi, xi);
  FiberedFunction H = hat_transform(psi, -std::conj(xi));
  LaplaceValue out;
  double pw = 1.0;
  cd prev(0), last(0);
  for (int k = 1; k <= kmax; ++k) {
    H = M.apply(H);
    pw *= lam;
    cd term = pw * inner(ph, H, th.nuU());
    out.value += term;
    prev = last;
    last = term;
    out.terms = k;
  }
  double r = std::abs(prev) > 0.0 ? std::abs(last) / std::abs(prev) : 0.0;
  out.tail = r < 1.0 ? std::abs(last) * r / (1.0 - r) : std::numeric_limits<double>::infinity();
  return out;
}

// ---------------------------------------------------------------------------
// Decay.

struct DecayFit {
  std::vector<double> t;
  std::vector<double> upsilon;
  double eta_hat = 0.0;
  double C_hat = 0.0;
  double residual = 0.0;  // standard error of the fitted slope
  int points = 0;
  bool all_below_floor = false;
};

/// Log-linear fit of the running envelope max_{s >= t} |Upsilon(s)| over grid points
/// past the largest roof value where the envelope exceeds floor.
inline DecayFit decay_fit(const ForwardChain& ch, const Observable& phi, const Observable& psi,
                          const std::vector<double>& t_grid, double floor = 1e-12, int unroll_cap = -1) {
  if (!is_fiber_zero_sum(psi)) throw Error(Errc::NotZeroSum, "decay fit needs a fiber-zero-sum psi");
  for (size_t i = 1; i < t_grid.size(); ++i)
    if (!(t_grid[i] > t_grid[i - 1])) throw Error(Errc::BadRange, "time grid must increase");
  DecayFit f;
  f.t = t_grid;
  for (double t : t_grid) f.upsilon.push_back(correlation_direct(ch, phi, psi, t, unroll_cap).total);
  std::vector<double> env(t_grid.size());
  double run = 0.0;
  for (size_t i = t_grid.size(); i-- > 0;) {
    run = std::max(run, std::fabs(f.upsilon[i]));
    env[i] = run;
  }
  std::vector<double> x, y;
  for (size_t i = 0; i < t_grid.size(); ++i)
    if (t_grid[i] >= ch.tau_max() && env[i] > floor) {
      x.push_back(t_grid[i]);
      y.push_back(std::log(env[i]));
    }
  f.points = static_cast<int>(x.size());
  if (x.size() < 3) {
    f.all_below_floor = true;
    return f;
  }
  LinearFit lf = linear_fit(x, y);
  f.eta_hat = -lf.slope;
  f.C_hat = std::exp(lf.intercept);
  f.residual = lf.slope_se;
  return f;
}

}  // namespace umix
