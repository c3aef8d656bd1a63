// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>

#include <Eigen/Eigenvalues>

#include "umix/congruence.hpp"
#include "umix/dolgopyat.hpp"
#include "umix/flattening.hpp"
#include "umix/mixing.hpp"
#include "umix/report.hpp"
#include "umix/run.hpp"
#include "umix/thermo.hpp"

using namespace umix;

namespace {

int failures = 0;

void report(int id, bool ok, const std::string& detail) {
  std::printf("criterion %2d: %s  %s\n", id, ok ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0, double d = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

ThermoConfig depth_cfg(int K) {
  ThermoConfig c;
  c.depth = K;
  return c;
}

const char* kRoof2 = "1 + 0.25*x0 + 0.15*x1";
const char* kDeepRoof =
    "1 + 0.3*exp(-(x0 + theta*x1 + theta^2*x2 + theta^3*x3 + theta^4*x4 + theta^5*x5 + theta^6*x6))";

void criterion1() {
  auto t0 = std::chrono::steady_clock::now();
  Subshift s = golden_mean(0.5);
  ThermoConfig c = depth_cfg(6);
  CylinderFunction f = potential_table("0", s, 1);
  Transfer op(s, 6);
  RpfData d = rpf_solve(op, op.on_ext(f), c);
  double secs = seconds_since(t0);
  Eigen::MatrixXd m = transfer_matrix(f, s, 6).real();
  Eigen::EigenSolver<Eigen::MatrixXd> es(m, false);
  double oracle = 0.0;
  for (int i = 0; i < es.eigenvalues().size(); ++i) oracle = std::max(oracle, es.eigenvalues()(i).real());
  double hmin = *std::min_element(d.h.begin(), d.h.end());
  auto ln = op.apply_adjoint(exp_weights(op.on_ext(f)), d.nu);
  double res = 0.0;
  for (size_t i = 0; i < ln.size(); ++i) res += std::fabs(ln[i] - d.lambda * d.nu[i]);
  bool ok = std::fabs(d.lambda - oracle) <= 1e-10 && std::fabs(d.lambda - (1 + std::sqrt(5.0)) / 2) <= 1e-10 &&
            hmin > 0 && res <= 1e-10 && secs < 1.0;
  report(1, ok, fmt("lambda=%.12f oracle=%.12f min h=%.3g adjoint residual=%.2e", d.lambda, oracle, hmin, res) +
                    fmt(" time=%.3fs", secs));
}

void criterion2() {
  double worst = 0.0, worst_p = 0.0;
  for (int N : {2, 3, 4})
    for (double cst : {0.5, 1.0, 2.0}) {
      Subshift s = full_shift(N, 0.5);
      Transfer op(s, 4);
      char e[32];
      std::snprintf(e, sizeof e, "%.17g", cst);
      auto tau = op.on_ext(potential_table(e, s, 1));
      BowenResult b = bowen_delta(op, tau, depth_cfg(4));
      worst = std::max(worst, std::fabs(b.delta - std::log(N) / cst));
      worst_p = std::max(worst_p, std::fabs(b.pressure_at_root));
    }
  report(2, worst <= 1e-8 && worst_p <= 1e-8, fmt("max |delta - log N / c|=%.2e max |Pr|=%.2e", worst, worst_p));
}

struct Setup {
  const char* name;
  Subshift s;
  const char* roof;
  int K;
};

std::vector<Setup> example_setups() {
  return {
      {"golden, tau=1", golden_mean(0.5), "1", 6},
      {"golden, depth-2 roof", golden_mean(0.5), kRoof2, 6},
      {"golden theta=0.2, deep roof", golden_mean(0.2), kDeepRoof, 6},
      {"full 2-shift, tau=2", full_shift(2, 0.5), "2", 6},
      {"full 3-shift, roof", full_shift(3, 0.4), "1 + 0.5*x0 - 0.2*x1", 4},
      {"3-symbol SFT", build_subshift(3, {{1, 1, 0}, {0, 1, 1}, {1, 1, 1}}, 0.5), "2 + sin(x0 + 0.5*x1)", 5},
  };
}

void criterion3() {
  double worst = 0.0;
  for (const auto& sp : example_setups()) {
    Thermo th(sp.s, potential_table(sp.roof, sp.s, std::min(sp.K + 1, 7)), depth_cfg(sp.K));
    const Normalized& n0 = th.normalized0();
    auto w = exp_weights(n0.f_ext);
    auto one = th.op().apply(w, std::vector<double>(th.size(), 1.0));
    for (double v : one) worst = std::max(worst, std::fabs(v - 1.0));
    auto nu = th.op().apply_adjoint(w, th.nuU());
    double r = 0.0;
    for (size_t i = 0; i < nu.size(); ++i) r += std::fabs(nu[i] - th.nuU()[i]);
    worst = std::max(worst, r);
    // Off a = 0 the fixed function is h_a / h_0 rather than 1.
    Normalized na = th.normalized(0.5);
    auto le = th.op().apply(exp_weights(na.f_ext), na.eig);
    for (size_t i = 0; i < le.size(); ++i) worst = std::max(worst, std::fabs(le[i] - na.eig[i]) / na.eig[i]);
  }
  report(3, worst <= 1e-10, fmt("max residual over %g example setups=%.2e", example_setups().size(), worst));
}

void criterion4() {
  Subshift g = golden_mean(0.5);
  Thermo t1(g, potential_table("1", g, 1), depth_cfg(6));
  Thermo t2(g, potential_table(kRoof2, g, 2), depth_cfg(6));
  Subshift f = full_shift(2, 0.5);
  Thermo t3(f, potential_table("1", f, 1), depth_cfg(6));
  GibbsReport a = gibbs_check(t1, 1, 6), b = gibbs_check(t2, 1, 6), u = gibbs_check(t3, 1, 6);
  bool ok = a.c1 > 0 && a.c1 <= a.c2 && std::isfinite(a.c2) && b.c1 > 0 && b.c1 <= b.c2 && std::isfinite(b.c2) &&
            std::fabs(u.c1 - 1) <= 1e-10 && std::fabs(u.c2 - 1) <= 1e-10;
  report(4, ok, fmt("tau=1 [%.4f, %.4f]  roof [%.4f, %.4f]", a.c1, a.c2, b.c1, b.c2) +
                    fmt("  uniform [%.15f, %.15f]", u.c1, u.c2));
}

void criterion5() {
  Subshift s = golden_mean(0.5);
  Thermo th(s, potential_table(kRoof2, s, 2), depth_cfg(4));
  FiniteGroup g = cyclic_group(1);
  Cocycle c = constant_cocycle(s, g, g.id());
  const cd xi(0.3, 2.5);
  CongruenceOperator M(th, g, c, xi);
  auto w = CongruenceOperator::weights(th, xi);
  std::mt19937_64 rng(5);
  std::normal_distribution<double> z;
  FiberedFunction H(th.depth(), 1, th.size());
  std::vector<cd> h(th.size());
  for (size_t u = 0; u < th.size(); ++u) H.fiber(u)[0] = h[u] = cd(z(rng), z(rng));
  bool same = true;
  for (int k = 0; k < 3; ++k) {
    H = M.apply(H);
    h = th.op().apply(w, h);
    for (size_t u = 0; u < th.size(); ++u) same = same && H.fiber(u)[0] == h[u];
  }
  report(5, same, same ? "bit-identical over 3 iterations" : "outputs differ");
}

void criterion6() {
  Subshift s = golden_mean(0.5);
  Thermo th(s, potential_table(kRoof2, s, 2), depth_cfg(4));
  FiniteGroup g = cyclic_group(7);
  Cocycle c = constant_cocycle(s, g, 1);
  CongruenceOperator M(th, g, c, cd(0.0, 0.0));
  auto chi = cyclic_character(7, 1);
  FiberedFunction H(th.depth(), 7, th.size());
  H.zero_sum = true;
  for (size_t u = 0; u < th.size(); ++u)
    for (int x = 0; x < 7; ++x) H.fiber(u)[x] = chi[x];
  GapReport r = twisted_decay(M, H, 30, th.nuU());
  report(6, std::fabs(r.eta_hat) <= 1e-6, fmt("eta_hat=%.3e", r.eta_hat));
}

void criterion7() {
  auto t0 = std::chrono::steady_clock::now();
  Subshift s = golden_mean(0.5);
  Thermo th(s, potential_table(kRoof2, s, 2), depth_cfg(4));
  std::mt19937_64 rng(7);
  double lo = INFINITY, hi = 0.0;
  std::string detail;
  for (int p : {3, 5, 7}) {
    FiniteGroup g = sl2_group(p);
    Cocycle c = generating_cocycle(s, g);
    CongruenceOperator M(th, g, c, cd(0.0, 0.0));
    FiberedFunction H(th.depth(), g.order(), th.size());
    H.zero_sum = true;
    for (size_t u = 0; u < th.size(); ++u) {
      auto v = random_zero_sum_unit(g.order(), rng);
      std::copy(v.begin(), v.end(), H.fiber(u));
    }
    GapReport r = twisted_decay(M, H, 30, th.nuU());
    lo = std::min(lo, r.eta_hat);
    hi = std::max(hi, r.eta_hat);
    detail += fmt("p=%g eta=%.4f  ", p, r.eta_hat);
  }
  double secs = seconds_since(t0);
  report(7, lo > 0 && hi <= 3 * lo && secs < 60, detail + fmt("max/min=%.3f time=%.2fs", hi / lo, secs));
}

void criterion8() {
  double worst = 0.0;
  for (int q : {5, 8, 13}) {
    FiniteGroup g = cyclic_group(q);
    CayleyGap gap = cayley_gap(CayleyGraph(g, {1}));
    worst = std::max(worst, std::fabs(gap.lambda2 - 2 * std::cos(2 * std::numbers::pi / q)));
  }
  FiniteGroup sl = sl2_group(5);
  auto [A, B] = standard_generators(sl);
  CayleyGap gap = cayley_gap(CayleyGraph(sl, {A, B}));
  report(8, worst <= 1e-10 && gap.eps > 0, fmt("max |lambda2 - 2cos(2pi/q)|=%.2e  SL2(F5) eps=%.4f", worst, gap.eps));
}

FiberedFunction random_fibered(const Thermo& th, int order, std::mt19937_64& rng) {
  std::normal_distribution<double> z;
  FiberedFunction H(th.depth(), order, th.size());
  for (auto& v : H.v) v = cd(z(rng), z(rng));
  return H;
}

Word random_word(const Subshift& s, int len, std::mt19937_64& rng) {
  Cylinders cyl(s, len);
  return cyl.word_vec(std::uniform_int_distribution<size_t>(0, cyl.size() - 1)(rng));
}

void criterion9() {
  Subshift s = golden_mean(0.5);
  Thermo th(s, potential_table(kRoof2, s, 2), depth_cfg(5));
  FiniteGroup g = sl2_group(3);
  Cocycle c = generating_cocycle(s, g);
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> ua(-0.5, 0.5), ub(-4.0, 4.0);
  std::uniform_int_distribution<int> ur(1, 4), ud(1, 3);
  int bad = 0;
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    FiberedFunction H = random_fibered(th, g.order(), rng);
    Word x = random_word(s, th.depth(), rng);
    int r = ur(rng), ss = r + ud(rng);
    DefectReport d = approximation_defect(th, g, c, cd(ua(rng), ub(rng)), H, r, ss, x);
    if (!d.ok()) ++bad;
    worst = std::max(worst, d.defect / d.bound);
  }
  report(9, bad == 0, fmt("violations=%g  max defect/bound=%.3e", bad, worst));
}

void criterion10() {
  Subshift s = golden_mean(0.5);
  Thermo th(s, potential_table(kRoof2, s, 2), depth_cfg(5));
  FiniteGroup g = sl2_group(3);
  Cocycle c = generating_cocycle(s, g);
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> ua(-0.5, 0.5), ub(-4.0, 4.0);
  std::uniform_int_distribution<int> ur(1, 6), ud(1, 3);
  int bad = 0, sandwich_bad = 0;
  for (int t = 0; t < 100; ++t) {
    Word x = random_word(s, th.depth(), rng);
    int r = ur(rng), ss = r + ud(rng);
    Word head = random_word(s, ss - r, rng);
    FlatteningMeasures m = build_flattening_measures(th, g, c, cd(ua(rng), ub(rng)), x, r, ss, head);
    if (!m.ok()) ++bad;
    NearlyFlatParams p;
    p.a = ua(rng);
    p.r = 6;
    p.l = 3;
    p.p = 1;
    p.alpha_top = std::uniform_int_distribution<int>(0, 1)(rng);
    NearlyFlatReport nf = nearly_flat_decompose(th, g, c, x, p);
    if (!nf.sandwich_ok()) ++sandwich_bad;
  }
  report(10, bad == 0 && sandwich_bad == 0, fmt("measure violations=%g  sandwich violations=%g", bad, sandwich_bad));
}

void criterion11() {
  Subshift s = golden_mean(0.5);
  Thermo th(s, potential_table(kRoof2, s, 2), depth_cfg(4));
  FlattenParams p;
  p.levels = {3, 5, 7, 11};
  p.trials = 10;
  std::mt19937_64 rng(11);
  FlattenResult gen = flattening_experiment(th, p, rng);
  p.cocycle = "constant";
  FlattenResult cst = flattening_experiment(th, p, rng);
  report(11, gen.slope <= 0.1 && cst.slope >= 0.4,
         fmt("generating slope=%.4f (se %.3f)  constant slope=%.4f (se %.2e)", gen.slope, gen.slope_se, cst.slope,
             cst.slope_se));
}

struct DolgSetup {
  Subshift s = golden_mean(0.2);
  Thermo th;
  DolgopyatConstants k;
  PartitionXi P;
  explicit DolgSetup(const char* roof) {
    th = Thermo(s, potential_table(roof, s, 7), depth_cfg(6));
    DolgopyatInputs in;
    in.b = 2.0;
    k = solve_constants(th, in);
    P = build_partition_xi(in.b, k, th);
  }
};

void criterion12() {
  DolgSetup d(kDeepRoof);
  std::mt19937_64 rng(12);
  ContractionReport r = contraction_check(d.th, d.P, d.k, 200, rng);
  TriangleTrials tt = strong_triangle_trials(100000, rng);
  bool ok = r.cone_violations == 0 && r.eta_hat <= 0.999 && r.wdense_failures == 0 && r.certificate_ok &&
            tt.violations == 0;
  report(12, ok, fmt("eta_hat=%.5f cone violations=%g WDense failures=%g", r.eta_hat, r.cone_violations,
                     r.wdense_failures) +
                     fmt(" certificate=%g triangle violations=%g/%g", r.certificate_ok, tt.violations, tt.pairs));
}

void criterion13() {
  DolgSetup d(kDeepRoof);
  FiniteGroup g = sl2_group(3);
  Cocycle c = generating_cocycle(d.s, g);
  std::mt19937_64 rng(13);
  DominationSummary ds = domination_trials(d.th, g, c, d.P, d.k, 50, rng);
  DolgSetup lat("1");
  Selection lsel;
  bool lattice_flagged = false;
  std::string how;
  try {
    lsel = uniform_fiber_selection(lat.th, g, c, lat.P, lat.k, rng);
    lattice_flagged = !lsel.ok();
    how = lattice_flagged ? "SelectionFail" : "selected";
  } catch (const Error& e) {
    lattice_flagged = e.code() == Errc::SelectionFail || e.code() == Errc::HypothesesFail;
    how = errc_name(e.code());
  }
  bool ok = ds.selected == 50 && ds.pointwise_violations == 0 && lattice_flagged;
  report(13, ok, fmt("selected=%g/50 pointwise violations=%g max ratio=%.4f", ds.selected, ds.pointwise_violations,
                     ds.max_pointwise) +
                     " lattice roof: " + how);
}

void criterion14() {
  auto t0 = std::chrono::steady_clock::now();
  Subshift s = golden_mean(0.5);
  Thermo th(s, potential_table(kRoof2, s, 2), depth_cfg(3));
  FiniteGroup triv = cyclic_group(1), c5 = cyclic_group(5);
  Cocycle ct = constant_cocycle(s, triv, 0);
  Cocycle cc(s, c5, {{{0, 0}, 1}, {{0, 1}, 2}, {{1, 0}, 1}});
  double worst = 0.0;
  int points = 0;
  for (int which = 0; which < 2; ++which) {
    const FiniteGroup& g = which ? c5 : triv;
    const Cocycle& c = which ? cc : ct;
    std::vector<double> fib = which ? zero_sum_fiber(g) : std::vector<double>{1.0};
    std::vector<double> sp(th.size());
    for (size_t u = 0; u < th.size(); ++u) sp[u] = 1.0 + 0.5 * th.cyl().word(u)[0];
    Observable phi = product_observable(th, std::vector<double>(th.size(), 1.0), fib, {1.0, 0.5});
    Observable psi = product_observable(th, sp, fib, {1.0, -0.2});
    ForwardChain ch(th, g, c);
    for (double a : {0.3, 0.6, 1.0})
      for (double b : {0.0, 1.0, -1.0}) {
        cd xi(a, b);
        LaplaceValue sr = laplace_series(th, g, c, phi, psi, xi, 60);
        LaplaceValue dr = laplace_direct(ch, phi, psi, xi);
        worst = std::max(worst, std::abs(sr.value - dr.value) / std::abs(dr.value));
        ++points;
      }
  }
  double secs = seconds_since(t0);
  report(14, worst <= 1e-5 && secs < 30, fmt("max rel err=%.3e over %g points time=%.2fs", worst, points, secs));
}

void criterion15() {
  Subshift s = golden_mean(0.5);
  Thermo th(s, potential_table(kRoof2, s, 2), depth_cfg(3));
  FiniteGroup g = sl2_group(3);
  Cocycle c = generating_cocycle(s, g);
  ForwardChain ch(th, g, c);
  auto fib = zero_sum_fiber(g);
  std::vector<double> ones(th.size(), 1.0);
  Observable phi = product_observable(th, ones, fib, {1.0, 0.5});
  Observable psi = product_observable(th, ones, fib, {1.0, -0.2});
  std::vector<double> grid;
  for (int i = 0; i <= 240; ++i) grid.push_back(0.25 * i);
  int cap = default_unroll_cap(grid.back(), ch.tau_min());
  DecayFit f = decay_fit(ch, phi, psi, grid, 1e-12, cap);
  double split = 0.0;
  for (double t : {ch.tau_max(), ch.tau_max() + 0.7, 3.0, 7.5}) {
    CorrelationValue v = correlation_direct(ch, phi, psi, t, cap);
    split = std::max(split, std::fabs(v.total - v.upsilon0));
  }
  bool ok = f.eta_hat > 0 && f.residual < 0.1 * f.eta_hat && split <= 1e-8;
  report(15, ok, fmt("eta_hat=%.4f stderr=%.2e (%.1f%%) max |Upsilon - Upsilon0| past tau_max=%.1e", f.eta_hat,
                     f.residual, 100 * f.residual / f.eta_hat, split));
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void criterion16() {
  namespace fs = std::filesystem;
  fs::path base = fs::temp_directory_path() / "umix_acceptance_determinism";
  fs::remove_all(base);
  int files = 0, diffs = 0;
  for (const char* name : {"rpf", "bowen", "twist_gap", "cayley_gap", "flatten", "dolgopyat", "mixing"}) {
    nlohmann::json j = load_config(std::string(UMIX_CONFIG_DIR) + "/" + name + ".json");
    for (int run = 0; run < 2; ++run) emit_report(umix::run(j), (base / name / std::to_string(run)).string());
    for (const auto& e : fs::directory_iterator(base / name / "0")) {
      ++files;
      if (slurp(e.path()) != slurp(base / name / "1" / e.path().filename())) ++diffs;
    }
  }
  fs::remove_all(base);
  report(16, files > 0 && diffs == 0, fmt("%g files compared, %g differ", files, diffs));
}

}  // namespace

int main() {
  const std::vector<std::function<void()>> all{criterion1,  criterion2,  criterion3,  criterion4,
                                               criterion5,  criterion6,  criterion7,  criterion8,
                                               criterion9,  criterion10, criterion11, criterion12,
                                               criterion13, criterion14, criterion15, criterion16};
  for (size_t i = 0; i < all.size(); ++i) {
    try {
      all[i]();
    } catch (const std::exception& e) {
      report(static_cast<int>(i + 1), false, std::string("exception: ") + e.what());
    }
  }
  std::printf("%d of %zu criteria failed\n", failures, all.size());
  return failures == 0 ? 0 : 1;
}
