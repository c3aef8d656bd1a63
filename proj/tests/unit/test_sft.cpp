#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "umix/sft.hpp"

using namespace umix;

namespace {

template <class F>
Errc code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return Errc::IoError;
}

// Brute force: every word over the alphabet, keep those without forbidden pairs.
std::vector<Word> brute_words(const IntMatrix& t, int len) {
  const int n = static_cast<int>(t.size());
  std::vector<Word> out;
  long total = 1;
  for (int i = 0; i < len; ++i) total *= n;
  for (long code = 0; code < total; ++code) {
    Word w(len);
    long c = code;
    for (int i = len - 1; i >= 0; --i) {
      w[i] = static_cast<int>(c % n);
      c /= n;
    }
    bool ok = true;
    for (int i = 0; i + 1 < len; ++i) ok = ok && t[w[i]][w[i + 1]] == 1;
    if (ok) out.push_back(w);
  }
  return out;
}

}  // namespace

TEST(Subshift, BuildsFullAndGoldenShifts) {
  Subshift f = build_subshift(2, {{1, 1}, {1, 1}}, 0.5);
  EXPECT_EQ(f.size(), 2);
  Subshift g = build_subshift(2, {{1, 1}, {1, 0}}, 0.5);
  EXPECT_TRUE(g.allowed(0, 1));
  EXPECT_FALSE(g.allowed(1, 1));
}

TEST(Subshift, RejectsBadSpecs) {
  EXPECT_EQ(code_of([] { build_subshift(2, {{1, 1}, {0, 0}}, 0.5); }), Errc::DeadSymbol);
  EXPECT_EQ(code_of([] { build_subshift(2, {{1, 0}, {1, 0}}, 0.5); }), Errc::DeadSymbol);
  EXPECT_EQ(code_of([] { build_subshift(2, {{1, 1, 1}, {1, 1, 1}}, 0.5); }), Errc::NonSquareMatrix);
  EXPECT_EQ(code_of([] { build_subshift(2, {{1, 1}, {1, 1}}, 1.0); }), Errc::ThetaOutOfRange);
  EXPECT_EQ(code_of([] { build_subshift(2, {{1, 1}, {1, 1}}, 0.0); }), Errc::ThetaOutOfRange);
}

TEST(Subshift, MixingExponents) {
  EXPECT_EQ(check_mixing(full_shift(2, 0.5), 10), 1);
  EXPECT_EQ(check_mixing(golden_mean(0.5), 10), 2);
  EXPECT_FALSE(check_mixing(build_subshift(2, {{0, 1}, {1, 0}}, 0.5), 50).has_value());
}

TEST(Subshift, CylinderCounts) {
  EXPECT_EQ(enumerate_cylinders(full_shift(2, 0.5), 3).size(), 8u);
  EXPECT_EQ(enumerate_cylinders(golden_mean(0.5), 3).size(), 5u);
  EXPECT_EQ(enumerate_cylinders(golden_mean(0.5), 1).size(), 2u);
  EXPECT_EQ(code_of([] { enumerate_cylinders(golden_mean(0.5), 0); }), Errc::DepthZero);
}

TEST(Subshift, EnumerationMatchesBruteForceInLexOrder) {
  IntMatrix t{{1, 1, 0}, {0, 1, 1}, {1, 1, 1}};
  Subshift s = build_subshift(3, t, 0.5);
  for (int len = 1; len <= 6; ++len) EXPECT_EQ(enumerate_cylinders(s, len), brute_words(t, len)) << len;
}

TEST(Subshift, CylinderIndexRoundTrip) {
  Subshift s = golden_mean(0.5);
  Cylinders cyl(s, 7);
  for (size_t i = 0; i < cyl.size(); ++i) EXPECT_EQ(cyl.index(cyl.word_vec(i)), i);
}

TEST(Metric, DThetaExamples) {
  EXPECT_DOUBLE_EQ(d_theta({0, 1, 0}, {0, 1, 0}, 0.5), 0.0);
  EXPECT_DOUBLE_EQ(d_theta({0, 1, 0}, {1, 1, 0}, 0.5), 1.0);
  EXPECT_DOUBLE_EQ(d_theta({0, 1, 0}, {0, 1, 1}, 0.5), 0.25);
}

TEST(Metric, DDominatesDThetaExhaustively) {
  for (const Subshift& s : {golden_mean(0.5), full_shift(2, 0.3)}) {
    auto ws = enumerate_cylinders(s, 5);
    for (const auto& u : ws)
      for (const auto& v : ws) EXPECT_LE(d_theta(u, v, s.theta()), metric_D(u, v, s) + 1e-15);
  }
}

TEST(Metric, DSpecialValues) {
  Subshift s = golden_mean(0.5);
  EXPECT_DOUBLE_EQ(metric_D({0, 1, 0}, {1, 0, 0}, s), 1.0);
  Word u{0, 1, 0, 0};
  EXPECT_DOUBLE_EQ(metric_D(u, u, s), s.diameter(u));
}

TEST(Metric, DiametersNest) {
  // After a 1 the golden mean forces a 0, so extending [..1] keeps the diameter.
  Subshift s = golden_mean(0.5);
  Word w{0, 1, 0, 1, 0, 0};
  for (size_t k = 1; k < w.size(); ++k) {
    double outer = s.diameter(w.data(), static_cast<int>(k)), inner = s.diameter(w.data(), static_cast<int>(k) + 1);
    if (w[k - 1] == 1)
      EXPECT_DOUBLE_EQ(inner, outer);
    else
      EXPECT_LT(inner, outer);
  }
  Subshift f = full_shift(2, 0.5);
  for (size_t k = 1; k < w.size(); ++k)
    EXPECT_DOUBLE_EQ(f.diameter(w.data(), static_cast<int>(k) + 1), 0.5 * f.diameter(w.data(), static_cast<int>(k)));
}
