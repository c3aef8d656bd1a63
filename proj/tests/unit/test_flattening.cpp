#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "umix/flattening.hpp"

using namespace umix;

namespace {

ThermoConfig depth_cfg(int K) {
  ThermoConfig c;
  c.depth = K;
  return c;
}

const char* kRoof2 = "1 + 0.25*x0 + 0.15*x1";

Word random_word(const Subshift& s, int len, std::mt19937_64& rng) {
  Cylinders cyl(s, len);
  return cyl.word_vec(std::uniform_int_distribution<size_t>(0, cyl.size() - 1)(rng));
}

}  // namespace

TEST(CayleyGap, CyclicClosedForm) {
  for (int q : {5, 8, 13}) {
    FiniteGroup g = cyclic_group(q);
    CayleyGap gap = cayley_gap(CayleyGraph(g, {1}));
    EXPECT_EQ(gap.lambda1, 2.0);
    EXPECT_NEAR(gap.lambda2, 2.0 * std::cos(2.0 * std::numbers::pi / q), 1e-10);
  }
}

TEST(CayleyGap, CompleteGraph) {
  FiniteGroup g = sl2_group(3);
  std::vector<int> all;
  for (int x = 0; x < g.order(); ++x)
    if (x != g.id()) all.push_back(x);
  CayleyGap gap = cayley_gap(CayleyGraph(g, all));
  EXPECT_NEAR(gap.lambda2, -1.0, 1e-10);
}

TEST(CayleyGap, DisconnectedHasNoGap) {
  FiniteGroup g = cyclic_group(6);
  CayleyGap gap = cayley_gap(CayleyGraph(g, {2}));
  EXPECT_EQ(gap.lambda2, gap.lambda1);
  EXPECT_EQ(gap.eps, 0.0);
  EXPECT_FALSE(gap.connected);
}

TEST(CayleyGap, Sl2StandardGeneratorsExpand) {
  FiniteGroup g = sl2_group(5);
  auto [A, B] = standard_generators(g);
  CayleyGraph cg(g, {A, B});
  EXPECT_EQ(cg.degree(), 4);
  EXPECT_GT(cayley_gap(cg).eps, 0.0);
}

TEST(CayleyGap, EmptyGeneratorsRejected) {
  FiniteGroup g = cyclic_group(4);
  EXPECT_THROW(CayleyGraph(g, {}), Error);
}

TEST(FlatteningMeasures, TrivialGroupShortPaths) {
  Subshift s = golden_mean(0.5);
  Thermo th(s, potential_table(kRoof2, s, 2), depth_cfg(4));
  FiniteGroup g = cyclic_group(1);
  Cocycle c = constant_cocycle(s, g, 0);
  Word x = th.cyl().word_vec(0);
  FlatteningMeasures m = build_flattening_measures(th, g, c, cd(0.0, 0.0), x, 1, 2, Word{0});
  ASSERT_EQ(m.mu.size(), 1u);
  EXPECT_GT(m.mu_hat[0], 0.0);
  EXPECT_LE(l1_norm(m.nu0), th.normalized(0.0).C_f * (1 + 1e-12));
}

TEST(FlatteningMeasures, NoOscillationMeansEqualMeasures) {
  Subshift s = golden_mean(0.5);
  Thermo th(s, potential_table(kRoof2, s, 2), depth_cfg(4));
  FiniteGroup g = cyclic_group(5);
  Cocycle c = generating_cocycle(s, g);
  FlatteningMeasures m = build_flattening_measures(th, g, c, cd(0.3, 0.0), th.cyl().word_vec(2), 3, 5, Word{0, 1});
  for (int i = 0; i < 5; ++i) EXPECT_EQ(m.mu[i], cd(m.mu_hat[i], 0.0));
}

TEST(FlatteningMeasures, EntrywiseBoundsOnRandomInstances) {
  Subshift s = golden_mean(0.5);
  Thermo th(s, potential_table(kRoof2, s, 2), depth_cfg(5));
  FiniteGroup g = cyclic_group(5);
  Cocycle c = generating_cocycle(s, g);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> ua(-0.5, 0.5), ub(-5, 5);
  for (int t = 0; t < 40; ++t) {
    Word x = random_word(s, 5, rng);
    Word head = random_word(s, 2, rng);
    FlatteningMeasures m = build_flattening_measures(th, g, c, cd(ua(rng), ub(rng)), x, 2, 4, head);
    for (int i = 0; i < 5; ++i) EXPECT_LE(std::abs(m.mu[i]), m.mu_hat[i] * (1 + 1e-14));
    EXPECT_TRUE(m.ok());
  }
}

TEST(FlatteningMeasures, BadHeadIsRejected) {
  Subshift s = golden_mean(0.5);
  Thermo th(s, potential_table(kRoof2, s, 2), depth_cfg(4));
  FiniteGroup g = cyclic_group(3);
  Cocycle c = generating_cocycle(s, g);
  Word x = th.cyl().word_vec(0);
  try {
    build_flattening_measures(th, g, c, cd(0, 0), x, 2, 4, Word{1, 1});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::InadmissibleHead);
  }
}

TEST(ApproximationDefect, ConstantFunctionIsExact) {
  Subshift s = golden_mean(0.5);
  Thermo th(s, potential_table(kRoof2, s, 2), depth_cfg(4));
  FiniteGroup g = sl2_group(3);
  Cocycle c = generating_cocycle(s, g);
  FiberedFunction H(4, g.order(), th.size());
  std::mt19937_64 rng(2);
  auto f = random_zero_sum_unit(g.order(), rng);
  for (size_t u = 0; u < th.size(); ++u) std::copy(f.begin(), f.end(), H.fiber(u));
  DefectReport d = approximation_defect(th, g, c, cd(0.2, 1.5), H, 2, 4, th.cyl().word_vec(1));
  EXPECT_NEAR(d.defect, 0.0, 1e-13);
}

TEST(ApproximationDefect, BoundAtLongHeads) {
  Subshift s = golden_mean(0.5);
  Thermo th(s, potential_table(kRoof2, s, 2), depth_cfg(4));
  FiniteGroup g = cyclic_group(3);
  Cocycle c = generating_cocycle(s, g);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> z;
  FiberedFunction H(4, 3, th.size());
  for (auto& v : H.v) v = cd(z(rng), z(rng));
  double lip = norms(H, 0.0, th.cyl()).lip_dtheta;
  for (auto& v : H.v) v /= lip;
  for (int r : {1, 3}) {
    DefectReport d = approximation_defect(th, g, c, cd(0.0, 2.0), H, r, r + 6, th.cyl().word_vec(0));
    EXPECT_NEAR(d.lip, 1.0, 1e-12);
    EXPECT_LE(d.defect, d.C_f / 64.0 * (1 + 1e-9));
  }
  DefectReport loose = approximation_defect(th, g, c, cd(0.0, 2.0), H, 3, 4, th.cyl().word_vec(0));
  EXPECT_TRUE(loose.ok());
}

TEST(NearlyFlat, ConstantDataIsFlat) {
  Subshift s = full_shift(2, 0.5);
  Thermo th(s, potential_table("1", s, 1), depth_cfg(4));
  FiniteGroup g = cyclic_group(3);
  NearlyFlatParams p;
  p.r = 4;
  p.l = 2;
  NearlyFlatReport r = nearly_flat_decompose(th, g, generating_cocycle(s, g), th.cyl().word_vec(0), p);
  EXPECT_NEAR(r.flatness, 1.0, 1e-12);
}

TEST(NearlyFlat, SandwichAndConvolutionMatch) {
  Subshift s = golden_mean(0.5);
  Thermo th(s, potential_table(kRoof2, s, 2), depth_cfg(4));
  FiniteGroup g = sl2_group(3);
  Cocycle c = generating_cocycle(s, g);
  NearlyFlatParams p;
  p.r = 4;
  p.l = 2;
  for (size_t i = 0; i < th.size(); i += 3) {
    NearlyFlatReport r = nearly_flat_decompose(th, g, c, th.cyl().word_vec(i), p);
    EXPECT_TRUE(r.sandwich_ok());
    EXPECT_TRUE(r.flat_ok());
    EXPECT_TRUE(r.psd_ok());
    for (int k = 0; k < g.order(); ++k)
      EXPECT_NEAR(r.nu1_dp[k], r.nu1_direct[k], 1e-12 * std::max(1.0, r.coeff_sum));
  }
}

TEST(NearlyFlat, BlockLengthMustExceedWindow) {
  Subshift s = golden_mean(0.5);
  Thermo th(s, potential_table(kRoof2, s, 2), depth_cfg(4));
  FiniteGroup g = cyclic_group(3);
  NearlyFlatParams p;
  p.r = 4;
  p.l = 2;
  p.p = 2;
  try {
    nearly_flat_decompose(th, g, generating_cocycle(s, g), th.cyl().word_vec(0), p);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::BadFactorization);
  }
}

TEST(FlatteningExperiment, ConstantCocycleGrowsLikeSqrtQ) {
  Subshift s = golden_mean(0.5);
  Thermo th(s, potential_table(kRoof2, s, 2), depth_cfg(4));
  FlattenParams p;
  p.levels = {1, 3, 5, 7};
  p.cocycle = "constant";
  p.trials = 4;
  std::mt19937_64 rng(4);
  FlattenResult r = flattening_experiment(th, p, rng);
  ASSERT_EQ(r.levels.size(), 3u);
  for (const auto& row : r.rows) EXPECT_NE(row.q, 1);
  EXPECT_NEAR(r.slope, 0.5, 0.05);
}

TEST(FlatteningExperiment, GeneratingCocycleFlattens) {
  Subshift s = golden_mean(0.5);
  Thermo th(s, potential_table(kRoof2, s, 2), depth_cfg(4));
  FlattenParams p;
  p.levels = {3, 5, 7};
  p.trials = 6;
  std::mt19937_64 rng(5);
  FlattenResult r = flattening_experiment(th, p, rng);
  for (const auto& lv : r.levels) EXPECT_TRUE(lv.generates);
  EXPECT_LE(r.slope, 0.1);
}

TEST(NewspaceNorm, SimpleMeasures) {
  FiniteGroup g = product_group({cyclic_group(3), cyclic_group(5)});
  EXPECT_NEAR(newspace_operator_norm(delta_measure(g, g.id()), g).norm, 1.0, 1e-12);
  EXPECT_NEAR(newspace_operator_norm(uniform_measure(g), g).norm, 0.0, 1e-12);
  FiniteGroup c5 = cyclic_group(5);
  NewspaceNorm n = newspace_operator_norm(delta_measure(c5, 2), c5);
  EXPECT_NEAR(n.norm, 1.0, 1e-12);
  EXPECT_NEAR(n.bound_side, 1.0, 1e-12);
}
