#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>

#include "umix/congruence.hpp"
#include "umix/flattening.hpp"

using namespace umix;

namespace {

ThermoConfig depth_cfg(int K) {
  ThermoConfig c;
  c.depth = K;
  return c;
}

const char* kRoof2 = "1 + 0.25*x0 + 0.15*x1";

int element_order(const FiniteGroup& g, int x) {
  int k = 1;
  for (int y = x; y != g.id(); y = g.mul(y, x)) ++k;
  return k;
}

FiberedFunction random_fibered(int depth, int order, size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> z;
  FiberedFunction H(depth, order, n);
  for (auto& v : H.v) v = cd(z(rng), z(rng));
  return H;
}

cd dot(const std::vector<cd>& a, const std::vector<cd>& b) {
  cd s(0);
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * std::conj(b[i]);
  return s;
}

}  // namespace

TEST(Group, CyclicInverse) {
  FiniteGroup g = cyclic_group(5);
  EXPECT_EQ(g.order(), 5);
  EXPECT_EQ(g.inv(2), 3);
}

TEST(Group, Sl2Orders) {
  EXPECT_EQ(sl2_group(3).order(), 24);
  EXPECT_EQ(sl2_group(5).order(), 120);
  EXPECT_EQ(sl2_group(7).order(), 336);
  EXPECT_TRUE(verify_group(sl2_group(5)));
}

TEST(Group, Sl2RejectsNonPrimes) {
  for (int p : {2, 4, 9}) {
    try {
      sl2_group(p);
      ADD_FAILURE() << p;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), Errc::NotPrime);
    }
  }
}

TEST(Group, OrderCap) {
  try {
    sl2_group(13, 1000);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::OrderTooLarge);
  }
}

TEST(Group, ProductOfCoprimeCyclicsIsCyclic) {
  FiniteGroup g = product_group({cyclic_group(3), cyclic_group(5)});
  EXPECT_EQ(g.order(), 15);
  EXPECT_TRUE(verify_group(g));
  int best = 0;
  for (int x = 0; x < g.order(); ++x) best = std::max(best, element_order(g, x));
  EXPECT_EQ(best, 15);
  for (int x = 0; x < 15; ++x) EXPECT_EQ(g.join(g.split(x)), x);
}

TEST(Cocycle, Products) {
  Subshift s = full_shift(2, 0.5);
  FiniteGroup g = sl2_group(3);
  auto [A, B] = standard_generators(g);
  ASSERT_NE(g.mul(A, B), g.mul(B, A));
  Cocycle c(s, g, {{{0, 0}, g.id()}, {{0, 1}, A}, {{1, 0}, B}, {{1, 1}, g.id()}});
  Cocycle r(s, g, {{{0, 0}, g.id()}, {{0, 1}, B}, {{1, 0}, A}, {{1, 1}, g.id()}});
  Word one{1};
  EXPECT_EQ(cocycle_product(c, g, one), g.id());
  EXPECT_EQ(cocycle_product(c, g, Word{0, 1}), A);
  EXPECT_EQ(cocycle_product(c, g, Word{0, 1, 0}), g.mul(A, B));
  EXPECT_EQ(cocycle_product(r, g, Word{0, 1, 0}), g.mul(B, A));
}

TEST(Cocycle, MissingEdgeIsRejected) {
  Subshift s = full_shift(2, 0.5);
  FiniteGroup g = cyclic_group(3);
  EXPECT_THROW(Cocycle(s, g, {{{0, 0}, 1}}), Error);
}

TEST(Twisted, TrivialGroupIsBitIdentical) {
  Subshift s = golden_mean(0.5);
  Thermo th(s, potential_table(kRoof2, s, 2), depth_cfg(4));
  FiniteGroup g = cyclic_group(1);
  Cocycle c = constant_cocycle(s, g, g.id());
  CongruenceOperator M(th, g, c, cd(0.2, -1.5));
  auto w = CongruenceOperator::weights(th, cd(0.2, -1.5));
  std::mt19937_64 rng(1);
  FiberedFunction H = random_fibered(4, 1, th.size(), rng);
  std::vector<cd> h(H.v);
  for (int k = 0; k < 3; ++k) {
    H = M.apply(H);
    h = th.op().apply(w, h);
    for (size_t u = 0; u < th.size(); ++u) EXPECT_EQ(H.v[u], h[u]);
  }
}

TEST(Twisted, ZeroStaysZero) {
  Subshift s = golden_mean(0.5);
  Thermo th(s, potential_table(kRoof2, s, 2), depth_cfg(4));
  FiniteGroup g = sl2_group(3);
  CongruenceOperator M(th, g, generating_cocycle(s, g), cd(0.1, 2.0));
  FiberedFunction Z(4, g.order(), th.size());
  for (const auto& v : M.apply(Z).v) EXPECT_EQ(v, cd(0));
}

TEST(Twisted, CharacterSectorClosedForm) {
  Subshift s = golden_mean(0.5);
  Thermo th(s, potential_table(kRoof2, s, 2), depth_cfg(4));
  const int q = 7;
  FiniteGroup g = cyclic_group(q);
  CongruenceOperator M(th, g, constant_cocycle(s, g, 1), cd(0.0, 0.0));
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.5, 1.5);
  for (int m : {1, 3}) {
    auto chi = cyclic_character(q, m);
    std::vector<double> h(th.size());
    FiberedFunction H(4, q, th.size());
    for (size_t x = 0; x < th.size(); ++x) {
      h[x] = u(rng);
      for (int k = 0; k < q; ++k) H.fiber(x)[k] = h[x] * chi[k];
    }
    auto Lh = th.op().apply(exp_weights(th.normalized0().f_ext), h);
    FiberedFunction MH = M.apply(H);
    const cd omega = std::polar(1.0, -2.0 * std::numbers::pi * m / q);
    for (size_t x = 0; x < th.size(); ++x)
      for (int k = 0; k < q; ++k) EXPECT_NEAR(std::abs(MH.fiber(x)[k] - omega * Lh[x] * chi[k]), 0.0, 1e-13);
  }
}

TEST(TwistedDecay, ConstantCocycleHasNoGap) {
  Subshift s = golden_mean(0.5);
  Thermo th(s, potential_table(kRoof2, s, 2), depth_cfg(4));
  FiniteGroup g = cyclic_group(7);
  CongruenceOperator M(th, g, constant_cocycle(s, g, 1), cd(0.0, 0.0));
  auto chi = cyclic_character(7, 1);
  FiberedFunction H(4, 7, th.size());
  for (size_t x = 0; x < th.size(); ++x) std::copy(chi.begin(), chi.end(), H.fiber(x));
  GapReport r = twisted_decay(M, H, 30, th.nuU());
  EXPECT_LE(std::fabs(r.eta_hat), 1e-6);
}

TEST(TwistedDecay, GeneratingCocycleDecays) {
  Subshift s = golden_mean(0.5);
  Thermo th(s, potential_table(kRoof2, s, 2), depth_cfg(4));
  FiniteGroup g = sl2_group(3);
  CongruenceOperator M(th, g, generating_cocycle(s, g), cd(0.0, 0.0));
  std::mt19937_64 rng(3);
  FiberedFunction H(4, g.order(), th.size());
  for (size_t x = 0; x < th.size(); ++x) {
    auto v = random_zero_sum_unit(g.order(), rng);
    std::copy(v.begin(), v.end(), H.fiber(x));
  }
  GapReport r = twisted_decay(M, H, 30, th.nuU());
  for (size_t k = 3; k < 25; ++k) EXPECT_LT(r.norms[k], r.norms[k - 1]) << k;
  EXPECT_GT(r.eta_hat, 0.0);
}

TEST(TwistedDecay, KmaxZeroGivesOneNorm) {
  Subshift s = golden_mean(0.5);
  Thermo th(s, potential_table(kRoof2, s, 2), depth_cfg(3));
  FiniteGroup g = cyclic_group(3);
  CongruenceOperator M(th, g, constant_cocycle(s, g, 1), cd(0.0, 0.0));
  auto chi = cyclic_character(3, 1);
  FiberedFunction H(3, 3, th.size());
  for (size_t x = 0; x < th.size(); ++x) std::copy(chi.begin(), chi.end(), H.fiber(x));
  GapReport r = twisted_decay(M, H, 0, th.nuU());
  ASSERT_EQ(r.norms.size(), 1u);
  EXPECT_FALSE(r.fitted);
}

TEST(TwistedDecay, RequiresZeroSum) {
  Subshift s = golden_mean(0.5);
  Thermo th(s, potential_table(kRoof2, s, 2), depth_cfg(3));
  FiniteGroup g = cyclic_group(3);
  CongruenceOperator M(th, g, constant_cocycle(s, g, 1), cd(0.0, 0.0));
  FiberedFunction H(3, 3, th.size());
  for (auto& v : H.v) v = 1.0;
  try {
    twisted_decay(M, H, 5, th.nuU());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::NotZeroSum);
  }
}

TEST(Norms, ConstantAndScaling) {
  Subshift s = golden_mean(0.5);
  Cylinders cyl(s, 4);
  FiberedFunction C(4, 3, cyl.size());
  for (auto& v : C.v) v = cd(0.5, -0.5);
  NormReport n = norms(C, 0.0, cyl);
  EXPECT_EQ(n.lip_d, 0.0);
  EXPECT_EQ(n.lip_dtheta, 0.0);
  EXPECT_DOUBLE_EQ(n.one_b, n.sup);

  std::mt19937_64 rng(4);
  FiberedFunction H = random_fibered(4, 3, cyl.size(), rng);
  NormReport n0 = norms(H, 0.0, cyl), n10 = norms(H, 10.0, cyl);
  EXPECT_DOUBLE_EQ(n0.one_b - n0.sup, 10.0 * (n10.one_b - n10.sup));
  std::vector<double> nu(cyl.size(), 1.0 / cyl.size());
  EXPECT_LE(norm2(H, nu), n0.sup);
}

TEST(NewSpace, FullSelectionIsIdentityProjection) {
  FiniteGroup G = product_group({cyclic_group(3), cyclic_group(5)});
  NewSpace ns = new_subspace(G, {0, 1});
  EXPECT_EQ(ns.spade, 1);
  std::mt19937_64 rng(5);
  std::normal_distribution<double> z;
  std::vector<cd> f(15);
  for (auto& v : f) v = cd(z(rng), z(rng));
  auto e = ns.apply_e(f);
  EXPECT_EQ(ns.proj(e), e);
  auto ee = ns.apply_e(e);
  for (int i = 0; i < 15; ++i) EXPECT_NEAR(std::abs(ee[i] - e[i]), 0.0, 1e-14);
}

TEST(NewSpace, QuotientNormScalesBySqrtSpade) {
  FiniteGroup G = product_group({cyclic_group(3), cyclic_group(5)});
  NewSpace ns = new_subspace(G, {0});
  EXPECT_EQ(ns.spade, 5);
  std::mt19937_64 rng(6);
  std::normal_distribution<double> z;
  std::vector<cd> f(15);
  for (auto& v : f) v = cd(z(rng), z(rng));
  auto e = ns.apply_e(f);
  EXPECT_NEAR(l2_norm(e), std::sqrt(5.0) * l2_norm(ns.proj(e)), 1e-12);
}

TEST(NewSpace, DecompositionIsOrthogonal) {
  FiniteGroup G = product_group({cyclic_group(3), cyclic_group(5), cyclic_group(2)});
  std::mt19937_64 rng(7);
  std::normal_distribution<double> z;
  std::vector<cd> f(G.order());
  for (auto& v : f) v = cd(z(rng), z(rng));
  double total = 0.0;
  for (int mask = 0; mask < 8; ++mask) {
    std::vector<int> keep;
    for (int i = 0; i < 3; ++i)
      if (mask >> i & 1) keep.push_back(i);
    total += std::pow(l2_norm(new_subspace(G, keep).apply_e(f)), 2);
  }
  EXPECT_NEAR(total, std::pow(l2_norm(f), 2), 1e-10);
}

TEST(NewSpace, NeedsProductGroup) {
  try {
    new_subspace(sl2_group(3), {0});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::NotAProductGroup);
  }
}

TEST(GeneratingSet, SinglePathAndConstantCocycle) {
  Subshift gm = golden_mean(0.5);
  FiniteGroup g = sl2_group(3);
  // 1 -> 1 in three symbols on the golden mean shift has the single path 1 0 1.
  auto one = generating_set(generating_cocycle(gm, g), g, gm, 1, 1, 1);
  EXPECT_EQ(one, std::vector<int>{g.id()});
  Subshift f = full_shift(2, 0.5);
  for (int p : {1, 2, 3}) EXPECT_EQ(generating_set(constant_cocycle(f, g, 5), g, f, p, 0, 1), std::vector<int>{g.id()});
}

TEST(GeneratingSet, FullShiftBruteForce) {
  Subshift f = full_shift(2, 0.5);
  FiniteGroup g = sl2_group(3);
  auto [A, B] = standard_generators(g);
  Cocycle c(f, g, {{{0, 0}, A}, {{0, 1}, B}, {{1, 0}, g.inv(A)}, {{1, 1}, g.mul(A, B)}});
  for (int y = 0; y < 2; ++y)
    for (int z = 0; z < 2; ++z) {
      std::set<int> want;
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) {
          int pa = g.mul(c.at(y, a), c.at(a, z)), pb = g.mul(c.at(y, b), c.at(b, z));
          want.insert(g.mul(pa, g.inv(pb)));
        }
      auto got = generating_set(c, g, f, 1, y, z);
      EXPECT_EQ(std::set<int>(got.begin(), got.end()), want);
    }
}

TEST(Convolution, IdentityUniformAndAdjoint) {
  FiniteGroup g = sl2_group(3);
  std::mt19937_64 rng(8);
  std::normal_distribution<double> z;
  std::vector<cd> phi(24), psi(24), mu(24);
  for (int i = 0; i < 24; ++i) {
    phi[i] = cd(z(rng), z(rng));
    psi[i] = cd(z(rng), z(rng));
    mu[i] = cd(z(rng), z(rng));
  }
  EXPECT_EQ(convolve(delta_measure(g, g.id()), phi, g), phi);
  cd mean(0);
  for (auto v : phi) mean += v / 24.0;
  for (auto v : convolve(uniform_measure(g), phi, g)) EXPECT_NEAR(std::abs(v - mean), 0.0, 1e-14);
  cd lhs = dot(convolve(mu, phi, g), psi);
  cd rhs = dot(phi, convolve(adjoint_measure(mu, g), psi, g));
  EXPECT_NEAR(std::abs(lhs - rhs), 0.0, 1e-12);
}
