#include <gtest/gtest.h>

#include <map>
#include <set>

#include "fixtures.hpp"
#include "macs/editors.hpp"
#include "macs/synth.hpp"
#include "oracles.hpp"

namespace macs {
namespace {

double brute_fsum(const AttributeVector& a, const MultiConstraint& c, const AttributeSpace& space) {
  double s = 0.0;
  for (std::size_t j = 0; j < space.dims(); ++j) {
    s += oracle::window_score(a[j], c.windows[j].start, c.windows[j].end, space.spec(j).v_min, space.spec(j).v_max);
  }
  return s;
}

struct StyleFixture {
  Scorer scorer = fixture::style_scorer();
  std::vector<VariationPool> pools;
  StyleFixture() {
    synth::StyleOptions opt;
    opt.groups = 4;
    pools = synth::style_pools(scorer, 31, opt);
  }
  EditRequest request(std::size_t group, std::size_t member, std::size_t combo, std::uint64_t seed,
                      std::size_t n = 1) const {
    EditRequest r;
    r.episode_id = "e";
    r.current = pools[group].members[member];
    r.target = scorer.space().combo(combo);
    r.n_candidates = n;
    r.seed = seed;
    return r;
  }
};

TEST(PoolOracle, PZeroIsUniformOverPool) {
  StyleFixture f;
  PoolOracleEditor ed(f.pools, f.scorer.space(), 0.0);
  const auto& pool = f.pools[0];
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < pool.size(); ++i) index.emplace(pool.members[i].seq, i);
  ASSERT_EQ(index.size(), pool.size());
  std::vector<double> counts(pool.size(), 0.0);
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    const auto c = ed.propose(f.request(0, 0, 12, derive_seed(1, static_cast<std::uint64_t>(i))));
    ASSERT_EQ(c.size(), 1u);
    ++counts[index.at(c[0])];
  }
  const double e = static_cast<double>(n) / static_cast<double>(pool.size());
  double chi2 = 0.0;
  for (double c : counts) chi2 += (c - e) * (c - e) / e;
  EXPECT_LT(chi2, 52.62);  // df 25, alpha 0.001
}

TEST(PoolOracle, ImprovingSetMatchesBruteForce) {
  StyleFixture f;
  PoolOracleEditor ed(f.pools, f.scorer.space(), 1.0);
  const auto& space = f.scorer.space();
  for (std::size_t g = 0; g < f.pools.size(); ++g) {
    for (std::size_t m = 0; m < f.pools[g].size(); m += 5) {
      for (std::size_t combo = 0; combo < 25; combo += 3) {
        const auto r = f.request(g, m, combo, 9);
        std::vector<std::size_t> expect;
        const double bar = brute_fsum(r.current.attrs, r.target, space);
        for (std::size_t i = 0; i < f.pools[g].size(); ++i) {
          if (brute_fsum(f.pools[g].members[i].attrs, r.target, space) > bar) expect.push_back(i);
        }
        EXPECT_EQ(ed.improving(f.pools[g], r.current, r.target), expect);
        // p = 1 improves whenever something can improve.
        const auto c = ed.propose(r);
        const auto scored = f.scorer.score(c[0]);
        if (!expect.empty()) {
          EXPECT_GT(brute_fsum(scored.attrs, r.target, space), bar);
        }
      }
    }
  }
}

TEST(PoolOracle, ReproducibleAndErrors) {
  StyleFixture f;
  PoolOracleEditor ed(f.pools, f.scorer.space(), 0.5);
  const auto r = f.request(1, 3, 7, 42, 5);
  EXPECT_EQ(ed.propose(r), ed.propose(r));
  EXPECT_EQ(ed.propose(r).size(), 5u);
  auto stranger = r;
  stranger.current.seq = "not in any pool";
  EXPECT_THROW(ed.propose(stranger), InputError);
  auto zero = r;
  zero.n_candidates = 0;
  EXPECT_THROW(ed.propose(zero), ContractError);
  EXPECT_THROW(PoolOracleEditor(f.pools, f.scorer.space(), 1.5), ConfigError);
}

EditRequest protein_request(const std::string& seq, std::uint64_t seed, std::size_t n = 1) {
  EditRequest r;
  r.current.seq = seq;
  r.current.domain = Domain::protein;
  r.n_candidates = n;
  r.seed = seed;
  return r;
}

TEST(RandomMutation, DegenerateHistograms) {
  Rng rng(1);
  const auto wt = synth::random_protein(48, rng);
  for (std::size_t d : {1u, 2u}) {
    RandomMutationEditor ed(DistanceHistogram{{d, 1.0}});
    for (int i = 0; i < 200; ++i) {
      for (const auto& c : ed.propose(protein_request(wt, static_cast<std::uint64_t>(i), 3))) {
        EXPECT_EQ(c.size(), wt.size());
        EXPECT_TRUE(valid_sequence(c, Domain::protein));
        EXPECT_EQ(levenshtein(c, wt), d);
        EXPECT_EQ(oracle::edit_distance_dp(c, wt), d);
      }
    }
  }
}

TEST(RandomMutation, DistanceHistogramWithinTotalVariation) {
  Rng rng(2);
  const auto wt = synth::random_protein(48, rng);
  const DistanceHistogram ref{{1, 0.35}, {2, 0.25}, {3, 0.2}, {5, 0.12}, {8, 0.08}};
  RandomMutationEditor ed(ref);
  std::map<std::size_t, double> emp;
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    const auto c = ed.propose(protein_request(wt, derive_seed(5, static_cast<std::uint64_t>(i))));
    emp[levenshtein(c[0], wt)] += 1.0 / n;
  }
  std::set<std::size_t> keys;
  for (const auto& [d, _] : ref) keys.insert(d);
  for (const auto& [d, _] : emp) keys.insert(d);
  double tv = 0.0;
  for (auto d : keys) {
    const double p = ref.count(d) ? ref.at(d) : 0.0;
    const double q = emp.count(d) ? emp.at(d) : 0.0;
    tv += std::fabs(p - q);
  }
  EXPECT_LE(tv / 2, 0.05);
}

TEST(RandomMutation, HistogramValidationAndReference) {
  EXPECT_THROW(RandomMutationEditor(DistanceHistogram{}), ConfigError);
  EXPECT_THROW(RandomMutationEditor(DistanceHistogram{{1, 0.5}}), ConfigError);
  EXPECT_THROW(RandomMutationEditor(DistanceHistogram{{1, 1.5}, {2, -0.5}}), ConfigError);
  const std::string wt = "ACDEFG";
  const std::vector<std::string> ref = {"ACDEFG", "CCDEFG", "CCCEFG", "CCDEFA", "CCCCCC"};
  const auto h = distance_histogram(ref, wt);
  EXPECT_EQ(h, (DistanceHistogram{{1, 0.25}, {2, 0.5}, {5, 0.25}}));
  EXPECT_EQ(distance_histogram(std::vector<std::string>{wt}, wt), (DistanceHistogram{{1, 1.0}}));
}

TEST(Recombine, ExtremeRates) {
  Rng rng(3);
  const std::string a = "ACDEFGHIKL", b = "LKIHGFEDCA";
  const auto keep = recombine(a, b, 0.0, rng);
  EXPECT_EQ(keep.first, a);
  EXPECT_EQ(keep.second, b);
  const auto swap = recombine(a, b, 1.0, rng);
  EXPECT_EQ(swap.first, b);
  EXPECT_EQ(swap.second, a);
  EXPECT_THROW(recombine("AC", "A", 0.5, rng), InputError);
  EXPECT_THROW(recombine("AC", "AD", 1.5, rng), ConfigError);
}

TEST(Recombine, ProvenanceInvariant) {
  Rng rng(4);
  for (int t = 0; t < 10000; ++t) {
    const auto a = synth::random_protein(24, rng), b = synth::random_protein(24, rng);
    const auto o = recombine(a, b, 0.5, rng);
    ASSERT_EQ(o.first.size(), a.size());
    ASSERT_EQ(o.second.size(), a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      const bool from_a = o.first[i] == a[i] && o.second[i] == b[i];
      const bool from_b = o.first[i] == b[i] && o.second[i] == a[i];
      ASSERT_TRUE(from_a || from_b);
      // Per-position letter multiset is conserved.
      ASSERT_EQ(std::multiset<char>({o.first[i], o.second[i]}), std::multiset<char>({a[i], b[i]}));
    }
  }
}

TEST(Recombine, HalfRateParentFractionWithinBinomialBand) {
  Rng rng(5);
  const std::string a(40, 'A'), b(40, 'C');
  const int trials = 10000;
  std::size_t from_a = 0;
  for (int t = 0; t < trials; ++t) {
    const auto o = recombine(a, b, 0.5, rng);
    from_a += static_cast<std::size_t>(std::count(o.first.begin(), o.first.end(), 'A'));
  }
  const double n = static_cast<double>(trials) * 40.0;
  const double frac = static_cast<double>(from_a) / n;
  EXPECT_NEAR(frac, 0.5, 3 * std::sqrt(0.25 / n));
}

TEST(RecombineStream, CyclesThroughShuffledSeeds) {
  std::vector<std::string> seeds = {"AAAA", "CCCC", "DDDD", "EEEE", "FFFF", "GGGG"};
  RecombineStream stream(seeds, 0.0, 7);
  for (int cycle = 0; cycle < 3; ++cycle) {
    std::multiset<std::string> got;
    for (std::size_t i = 0; i < seeds.size(); ++i) got.insert(stream.next());
    EXPECT_EQ(got, std::multiset<std::string>(seeds.begin(), seeds.end()));
  }
  EXPECT_THROW(RecombineStream({}, 0.5, 1), ConfigError);
  RecombineStream x(seeds, 0.5, 9), y(seeds, 0.5, 9);
  for (int i = 0; i < 50; ++i) EXPECT_EQ(x.next(), y.next());
}

TEST(RecombineEditor, ReturnsRequestedCount) {
  RecombineEditor ed({"AAAA", "CCCC"}, 0.5, 3);
  EXPECT_EQ(ed.propose(protein_request("AAAA", 0, 3)).size(), 3u);
  EXPECT_EQ(ed.propose(protein_request("AAAA", 0, 1)).size(), 1u);
}

TEST(IdentityEditor, EchoesCurrent) {
  IdentityEditor ed;
  const auto c = ed.propose(protein_request("ACD", 1, 4));
  EXPECT_EQ(c, std::vector<std::string>(4, "ACD"));
}

}  // namespace
}  // namespace macs
