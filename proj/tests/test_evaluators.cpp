#include <gtest/gtest.h>

#include <thread>

#include "macs/evaluators.hpp"

namespace macs {
namespace {

TEST(ToySentiment, Examples) {
  const Lexicon lex{{"good", 1.0}, {"bad", -1.0}};
  EXPECT_DOUBLE_EQ(toy_sentiment("good good", lex), 5.0);
  EXPECT_DOUBLE_EQ(toy_sentiment("good bad", lex), 3.0);
  EXPECT_DOUBLE_EQ(toy_sentiment("bad bad bad", lex), 1.0);
  EXPECT_DOUBLE_EQ(toy_sentiment("the table was there", lex), 3.0);
  // absent tokens count as zero in the mean: (1 + 0) / 2
  EXPECT_DOUBLE_EQ(toy_sentiment("good table", lex), 4.0);
  EXPECT_THROW(toy_sentiment("   ", lex), InputError);
}

TEST(ToyComplexity, Examples) {
  EXPECT_DOUBLE_EQ(toy_complexity("abcdef ghijkl"), 0.0);
  EXPECT_DOUBLE_EQ(toy_complexity("ab cd ef"), -2.0);
  EXPECT_DOUBLE_EQ(toy_complexity("abcdefghijkl abcdefghij"), 2.0);
  EXPECT_DOUBLE_EQ(toy_complexity("a"), -2.0);  // clamped
}

TEST(ToySimilarity, Examples) {
  EXPECT_DOUBLE_EQ(toy_similarity("a b c", "a b c"), 1.0);
  EXPECT_DOUBLE_EQ(toy_similarity("a b", "c d"), 0.0);
  // half shared on equal-size sets: |{a,b}| / |{a,b,c,d,e,f}| is 1/3, so use
  // the multiset case a b c d vs a b c d e f g h -> 4/8.
  EXPECT_DOUBLE_EQ(toy_similarity("a b c d", "a b c d e f g h"), 0.5);
  EXPECT_DOUBLE_EQ(toy_similarity("a a b", "a b"), 2.0 / 3.0);
}

TEST(ToySimilarity, SymmetricBoundedAndOneIffEqualMultisets) {
  Rng rng(1);
  const char* vocab[] = {"a", "b", "c", "d"};
  for (int i = 0; i < 500; ++i) {
    std::string x, y;
    for (std::size_t k = 0, n = 1 + rng.index(5); k < n; ++k) x += std::string(vocab[rng.index(4)]) + " ";
    for (std::size_t k = 0, n = 1 + rng.index(5); k < n; ++k) y += std::string(vocab[rng.index(4)]) + " ";
    const double s = toy_similarity(x, y);
    EXPECT_EQ(s, toy_similarity(y, x));
    EXPECT_GE(s, 0.0);
    EXPECT_LE(s, 1.0);
    auto wx = split_words(x), wy = split_words(y);
    std::sort(wx.begin(), wx.end());
    std::sort(wy.begin(), wy.end());
    EXPECT_EQ(s == 1.0, wx == wy);
  }
}

TEST(ToyFluency, PenalisesAdjacentRepeats) {
  EXPECT_DOUBLE_EQ(toy_fluency("a b c"), 1.0);
  EXPECT_DOUBLE_EQ(toy_fluency("a a b"), 0.5);
  EXPECT_DOUBLE_EQ(toy_fluency("a"), 1.0);
}

class Landscape : public ::testing::Test {
 protected:
  const std::string wt = "MSKGEELFTGVVPILVELDG";
  LandscapeParams params{42, 15, 3.72, -0.1, 0.2, 0.3};
  ProteinLandscape land{wt, params};
};

TEST_F(Landscape, WildTypeScoresBase) { EXPECT_EQ(land.value(wt), 3.72); }

TEST_F(Landscape, SingleSubstitutionIsTableLookup) {
  for (std::size_t pos = 0; pos < wt.size(); ++pos) {
    for (char aa : kAminoAcids) {
      std::string m = wt;
      m[pos] = aa;
      // From the wild type a single mutation triggers no coupling.
      EXPECT_DOUBLE_EQ(land.value(m), 3.72 + land.substitution(pos, aa));
    }
  }
}

TEST_F(Landscape, SingleSubstitutionDeltaTouchesOnlyItsCouplings) {
  // Brute-force oracle: recompute every term from the tables for a random
  // background and compare the delta of one substitution.
  Rng rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    std::string bg = wt;
    for (int k = 0; k < 6; ++k) bg[rng.index(bg.size())] = kAminoAcids[rng.index(20)];
    const std::size_t p = rng.index(bg.size());
    std::string mut = bg;
    mut[p] = kAminoAcids[rng.index(20)];
    double expected = land.substitution(p, mut[p]) - land.substitution(p, bg[p]);
    for (const auto& c : land.couplings()) {
      if (c.p != p && c.q != p) continue;
      const auto on = [&](const std::string& s) { return s[c.p] != wt[c.p] && s[c.q] != wt[c.q]; };
      expected += (on(mut) ? c.weight : 0.0) - (on(bg) ? c.weight : 0.0);
    }
    EXPECT_NEAR(land.value(mut) - land.value(bg), expected, 1e-12);
  }
}

TEST_F(Landscape, DeterministicFromSeed) {
  ProteinLandscape again{wt, params};
  Rng rng(3);
  for (int i = 0; i < 100; ++i) {
    std::string s = wt;
    for (int k = 0; k < 5; ++k) s[rng.index(s.size())] = kAminoAcids[rng.index(20)];
    EXPECT_EQ(land.value(s), again.value(s));
  }
}

TEST_F(Landscape, RejectsBadInput) {
  EXPECT_THROW(land.value("MSK"), InputError);
  std::string bad = wt;
  bad[0] = 'B';
  EXPECT_THROW(land.value(bad), InputError);
}

TEST(Evaluate, ClampsAndCachesTransparently) {
  auto ev = make_evaluator("lin", AttributeSpec{"x", 0.0, 1.0},
                           [](const std::string& s) { return static_cast<double>(s.size()) / 4.0; });
  EvaluationCache cache;
  const std::vector<std::string> seqs = {"a", "ab", "abc", "abcdef", "a"};
  const auto uncached = evaluate(*ev, seqs);
  const auto first = evaluate(*ev, seqs, &cache);
  const auto second = evaluate(*ev, seqs, &cache);
  EXPECT_EQ(uncached, first);
  EXPECT_EQ(first, second);
  EXPECT_EQ(first[3], 1.0);  // 1.5 clamped
  EXPECT_GE(cache.hits(), seqs.size());
  EXPECT_TRUE(evaluate(*ev, std::vector<std::string>{}).empty());
  EXPECT_THROW(evaluate(*ev, std::string{}), InputError);
}

TEST(Evaluate, CacheIsSafeUnderConcurrentUse) {
  auto ev = make_toy_complexity(AttributeSpec{"complexity", -2.0, 2.0});
  EvaluationCache cache;
  std::vector<std::string> seqs;
  for (int i = 0; i < 200; ++i) seqs.push_back(std::string(1 + i % 13, 'x') + " yy");
  const auto expected = evaluate(*ev, seqs);
  std::vector<std::thread> threads;
  std::vector<std::vector<double>> got(4);
  for (int t = 0; t < 4; ++t) {
    threads.emplace_back([&, t] {
      for (int r = 0; r < 20; ++r) got[t] = evaluate(*ev, seqs, &cache);
    });
  }
  for (auto& th : threads) th.join();
  for (const auto& g : got) EXPECT_EQ(g, expected);
}

TEST(Scorer, ScoresAndRewards) {
  const auto space = style_space();
  Scorer scorer(space, {make_toy_sentiment(space.spec(0)), make_toy_complexity(space.spec(1))},
                style_bonuses());
  const auto a = scorer.score("great superb food");
  EXPECT_NEAR(a.attrs[0], 3.0 + 2.0 * (2.0 / 3.0), 1e-12);
  const auto bonus = scorer.bonus_values(a, a);
  ASSERT_EQ(bonus.size(), 2u);
  EXPECT_EQ(bonus[1], 1.0);
  const auto c = space.combo(space.combo_of(a.attrs));
  // Paraphrase of itself inside its own combo: k + fluency + similarity.
  EXPECT_DOUBLE_EQ(scorer.reward(a, a, c), 2.0 + 1.0 + 1.0);
}

TEST(Scorer, RejectsMisconfiguration) {
  const auto space = style_space();
  EXPECT_THROW(Scorer(space, {make_toy_sentiment(space.spec(0))}), ConfigError);
  EXPECT_THROW(Scorer(space, {make_toy_sentiment(space.spec(0)),
                              make_toy_complexity(AttributeSpec{"complexity", -3.0, 3.0})}),
               ConfigError);
}

}  // namespace
}  // namespace macs
