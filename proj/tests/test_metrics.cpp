#include <gtest/gtest.h>

#include "macs/metrics.hpp"
#include "macs/rng.hpp"
#include "oracles.hpp"

namespace macs {
namespace {

TEST(Levenshtein, Basics) {
  EXPECT_EQ(levenshtein("GATTACA", "GATTACA"), 0u);
  EXPECT_EQ(levenshtein("GATTACA", "GATTGCA"), 1u);
  EXPECT_EQ(levenshtein("", "abc"), 3u);
  EXPECT_EQ(levenshtein("kitten", "sitting"), 3u);
  EXPECT_EQ(levenshtein(std::vector<std::string>{"a", "b"}, std::vector<std::string>{"b"}), 1u);
}

TEST(Levenshtein, MatchesDpOracleOnRandomPairs) {
  Rng rng(17);
  for (int i = 0; i < 200; ++i) {
    auto rand_str = [&](std::size_t max_len) {
      std::string s(rng.index(max_len + 1), 'A');
      for (auto& c : s) c = "ACGT"[rng.index(4)];
      return s;
    };
    // Mix of short (bit-parallel path) and long (DP path) inputs.
    const std::size_t cap = i % 4 == 0 ? 140 : 64;
    const auto a = rand_str(cap), b = rand_str(cap);
    EXPECT_EQ(levenshtein(a, b), oracle::edit_distance_dp(a, b)) << a << " / " << b;
    const std::vector<char> va(a.begin(), a.end()), vb(b.begin(), b.end());
    EXPECT_EQ(levenshtein(va, vb), oracle::edit_distance_dp(a, b));
  }
}

TEST(Levenshtein, SixtyFourBytePattern) {
  std::string a(64, 'A'), b(64, 'A');
  b[10] = 'C';
  b[63] = 'G';
  EXPECT_EQ(levenshtein(a, b), 2u);
  EXPECT_EQ(levenshtein(a, a + "T"), 1u);
}

TEST(ZTest, EqualProportions) {
  const auto t = two_prop_ztest(30, 100, 60, 200);
  EXPECT_EQ(t.z, 0.0);
  EXPECT_DOUBLE_EQ(t.p_two_sided, 1.0);
  const auto all = two_prop_ztest(10, 10, 5, 5);
  EXPECT_EQ(all.z, 0.0);
  EXPECT_EQ(all.p_two_sided, 1.0);
}

TEST(ZTest, StyleTableAnchorAgainstQuadratureOracle) {
  const auto t = two_prop_ztest(5344, 6250, 5294, 6250);
  // Hand formula for z, quadrature for the tail.
  const long double p1 = 5344.0L / 6250, p2 = 5294.0L / 6250, p = (5344.0L + 5294.0L) / 12500;
  const long double z = (p1 - p2) / std::sqrt(p * (1 - p) * (2.0L / 6250));
  EXPECT_NEAR(t.z, static_cast<double>(z), 1e-9);
  const long double p_oracle = 2 * oracle::normal_sf_quadrature(z);
  EXPECT_NEAR(t.p_two_sided, static_cast<double>(p_oracle), 1e-9);
  EXPECT_GT(t.p_two_sided, 0.19);
  EXPECT_LT(t.p_two_sided, 0.23);
}

TEST(ZTest, ExtremeCase) {
  const auto t = two_prop_ztest(100, 100, 0, 100);
  EXPECT_LT(t.p_two_sided, 1e-10);
  EXPECT_GT(t.z, 14.0);
}

TEST(ZTest, SwappingSamplesNegatesZ) {
  Rng rng(2);
  for (int i = 0; i < 200; ++i) {
    const long n1 = 1 + static_cast<long>(rng.index(500)), n2 = 1 + static_cast<long>(rng.index(500));
    const long s1 = static_cast<long>(rng.index(n1 + 1)), s2 = static_cast<long>(rng.index(n2 + 1));
    const auto a = two_prop_ztest(s1, n1, s2, n2), b = two_prop_ztest(s2, n2, s1, n1);
    EXPECT_EQ(a.z, -b.z);
    EXPECT_EQ(a.p_two_sided, b.p_two_sided);
  }
}

TEST(ZTest, Errors) {
  EXPECT_THROW(two_prop_ztest(1, 0, 1, 1), ContractError);
  EXPECT_THROW(two_prop_ztest(5, 4, 1, 1), ContractError);
  EXPECT_THROW(two_prop_ztest(-1, 4, 1, 1), ContractError);
}

TEST(NormalSf, AgreesWithQuadrature) {
  for (double z : {-3.0, -1.0, 0.0, 0.5, 1.2559, 2.0, 4.0, 6.0}) {
    EXPECT_NEAR(normal_sf(z), static_cast<double>(oracle::normal_sf_quadrature(z)), 1e-12);
  }
}

TEST(MeanStd, Population) {
  const double xs[] = {1.0, 2.0, 3.0, 4.0};
  const auto r = mean_std(xs);
  EXPECT_DOUBLE_EQ(r.mean, 2.5);
  EXPECT_DOUBLE_EQ(r.std, std::sqrt(1.25));
  EXPECT_EQ(mean_std({}).n, 0u);
}

}  // namespace
}  // namespace macs
