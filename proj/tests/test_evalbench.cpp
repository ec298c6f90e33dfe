#include <gtest/gtest.h>

#include <fstream>
#include <set>
#include <sstream>

#include "fixtures.hpp"
#include "macs/evalbench.hpp"

namespace macs {
namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<ScoredSequence> originals(const std::vector<VariationPool>& pools) {
  std::vector<ScoredSequence> out;
  for (const auto& p : pools) out.push_back(p.members.front());
  return out;
}

EditorFactory oracle_factory(const std::vector<VariationPool>& pools, const AttributeSpace& space, double p) {
  return [&pools, space, p] { return std::make_unique<PoolOracleEditor>(pools, space, p); };
}

StyleCampaign style_campaign(const std::vector<VariationPool>& pools, Strategy s, std::size_t budget,
                             std::uint64_t seed) {
  StyleCampaign c;
  c.items = originals(pools);
  c.episode.strategy = s;
  c.episode.budget = budget;
  c.episode.seed = seed;
  c.fluency = make_toy_fluency();
  c.similarity = std::make_shared<ToySimilarity>();
  return c;
}

TEST(ParallelFor, RunsEveryTaskAndRethrowsLowestFailure) {
  std::vector<int> hits(100, 0);
  parallel_for(hits.size(), 4, [&](std::size_t t, std::size_t) { hits[t]++; });
  EXPECT_EQ(std::count(hits.begin(), hits.end(), 1), 100);
  parallel_for(0, 3, [](std::size_t, std::size_t) { FAIL(); });
  try {
    parallel_for(10, 1, [](std::size_t t, std::size_t) {
      if (t >= 3) throw InputError("task " + std::to_string(t));
    });
    FAIL();
  } catch (const InputError& e) {
    EXPECT_STREQ(e.what(), "task 3");
  }
  EXPECT_THROW(parallel_for(1, 0, [](std::size_t, std::size_t) {}), ConfigError);
}

TEST(Budget, ReferenceConfigurations) {
  EpisodeConfig style;
  style.strategy = Strategy::prioritized;
  style.budget = 5;
  EXPECT_EQ(style_budget(250, 25, style), 31250u);
  for (auto [walks, hops] : {std::pair{3000u, 1u}, {1000u, 3u}, {300u, 10u}}) {
    EpisodeConfig d;
    d.strategy = Strategy::random_walk;
    d.budget = 3000;
    d.hops = hops;
    EXPECT_EQ(planned_budget(d), walks * hops);
    EXPECT_EQ(discovery_budget(16, d), 48000u);
  }
}

TEST(StyleCampaign, OracleReachesEveryCombo) {
  // Without bonuses the reward orders states exactly as the satisfaction sum.
  const auto scorer = fixture::style_scorer(false);
  const auto pools = fixture::covering_pools(scorer, 4, 17);
  // Every accepted step strictly raises the satisfaction sum, so 26 proposals
  // always reach a satisfying member of a 26-member pool.
  const auto c = style_campaign(pools, Strategy::prioritized, 26, 1);
  const auto r = run_style_campaign(c, scorer, oracle_factory(pools, scorer.space(), 1.0));
  ASSERT_EQ(r.combos.size(), 25u);
  EXPECT_EQ(r.rate.mean, 1.0);
  EXPECT_EQ(r.rate.std, 0.0);
  EXPECT_EQ(r.satisfied, 100u);
  ASSERT_TRUE(r.fluency && r.similarity);
  EXPECT_TRUE(r.budget.within());
  EXPECT_LT(r.budget.used, r.budget.configured);  // early stops
}

TEST(StyleCampaign, IdentityEditorNeverSatisfiesForeignCombos) {
  const auto scorer = fixture::style_scorer();
  const auto pools = fixture::covering_pools(scorer, 3, 5);
  auto c = style_campaign(pools, Strategy::naive_chain, 5, 2);
  // Combos that no item satisfies, boundaries included.
  for (std::size_t k = 0; k < 25; ++k) {
    const bool any = std::any_of(c.items.begin(), c.items.end(),
                                 [&](const auto& it) { return satisfies(it.attrs, scorer.space().combo(k)); });
    if (!any) c.combos.push_back(k);
  }
  const auto r = run_style_campaign(c, scorer, [] { return std::make_unique<IdentityEditor>(); });
  EXPECT_EQ(r.rate.mean, 0.0);
  EXPECT_EQ(r.satisfied, 0u);
  EXPECT_FALSE(r.fluency.has_value());
  EXPECT_TRUE(r.budget.exact());
  EXPECT_EQ(r.budget.used, 3 * c.combos.size() * 5);
}

TEST(StyleCampaign, MissingMetricEvaluatorsAreConfigErrors) {
  const auto scorer = fixture::style_scorer();
  const auto pools = fixture::covering_pools(scorer, 1, 5);
  auto c = style_campaign(pools, Strategy::best_of_n, 1, 2);
  c.fluency.reset();
  EXPECT_THROW(run_style_campaign(c, scorer, oracle_factory(pools, scorer.space(), 0.5)), ConfigError);
}

TEST(StyleCampaign, IndependentOfWorkerCount) {
  const auto scorer = fixture::style_scorer();
  const auto pools = synth::style_pools(scorer, 3, synth::StyleOptions{.groups = 8});
  const auto c = style_campaign(pools, Strategy::prioritized, 5, 11);
  const auto a = run_style_campaign(c, scorer, oracle_factory(pools, scorer.space(), 0.5), 1);
  const auto b = run_style_campaign(c, scorer, oracle_factory(pools, scorer.space(), 0.5), 4);
  const ReportContext ctx{11, json::object()};
  EXPECT_EQ(style_summary(a, scorer.space(), c.episode, ctx).dump(),
            style_summary(b, scorer.space(), c.episode, ctx).dump());
  ASSERT_EQ(a.results.size(), b.results.size());
  for (std::size_t i = 0; i < a.results.size(); ++i) {
    EXPECT_EQ(trace_rows(a.results[i], scorer.space()), trace_rows(b.results[i], scorer.space()));
  }
}

TEST(Report, FilesMatricesAndRecomputation) {
  const auto scorer = fixture::style_scorer();
  const auto pools = synth::style_pools(scorer, 4, synth::StyleOptions{.groups = 6});
  const auto c = style_campaign(pools, Strategy::prioritized, 5, 3);
  const auto r = run_style_campaign(c, scorer, oracle_factory(pools, scorer.space(), 0.5), 2);
  const auto dir = fixture::temp_path("report-style");
  std::filesystem::remove_all(dir);
  const auto summary = emit_report(r, scorer.space(), c.episode, ReportContext{3, json{{"k", 1}}}, dir);
  for (const char* f : {"summary.json", "traces.jsonl", "audit.json", "matrix_satisfaction.csv",
                        "matrix_fluency.csv", "matrix_similarity.csv"}) {
    EXPECT_TRUE(std::filesystem::exists(dir + "/" + f)) << f;
  }
  EXPECT_EQ(json::parse(slurp(dir + "/summary.json")), summary);
  EXPECT_EQ(summary["config"]["k"], 1);

  // Matrix: header plus one row per sentiment window, one column per
  // complexity window plus the row label.
  std::istringstream csv(slurp(dir + "/matrix_satisfaction.csv"));
  std::string line;
  std::size_t rows = 0;
  while (std::getline(csv, line)) {
    EXPECT_EQ(std::count(line.begin(), line.end(), ','), 5) << line;
    ++rows;
  }
  EXPECT_EQ(rows, 6u);

  // Every cell can be recomputed from the final rows of the traces.
  std::map<std::string, std::size_t> combo_of_episode;
  std::map<std::size_t, std::size_t> satisfied;
  read_jsonl(dir + "/traces.jsonl", "macs-traces", [&](const json& j, std::size_t) {
    const auto id = j.at("episode_id").get<std::string>();
    const auto combo = static_cast<std::size_t>(std::stoul(id.substr(6, id.find('/', 6) - 6)));
    if (j.at("kind") == "final" && j.at("satisfied").get<bool>()) ++satisfied[combo];
    combo_of_episode[id] = combo;
  });
  EXPECT_EQ(combo_of_episode.size(), 6u * 25u);
  for (const auto& row : summary["combos"]) {
    const auto combo = row["combo"].get<std::size_t>();
    EXPECT_EQ(row["satisfied"].get<std::size_t>(), satisfied[combo]);
    EXPECT_DOUBLE_EQ(row["rate"].get<double>(), static_cast<double>(satisfied[combo]) / 6.0);
  }
  const auto audit = json::parse(slurp(dir + "/audit.json"));
  EXPECT_EQ(audit["budget"]["used"], summary["budget"]["used"]);
}

TEST(Report, EmptyCampaignIsValid) {
  const auto scorer = fixture::style_scorer();
  StyleCampaign c = style_campaign({}, Strategy::prioritized, 5, 1);
  const auto r = run_style_campaign(c, scorer, [] { return std::make_unique<IdentityEditor>(); });
  EXPECT_EQ(r.episodes, 0u);
  EXPECT_EQ(r.budget.configured, 0u);
  const auto dir = fixture::temp_path("report-empty");
  const auto summary = emit_report(r, scorer.space(), c.episode, {}, dir);
  EXPECT_EQ(summary["headline"]["episodes"], 0);
  EXPECT_TRUE(summary["headline"]["fluency"].is_null());
  std::size_t lines = 0;
  read_jsonl(dir + "/traces.jsonl", "macs-traces", [&](const json&, std::size_t) { ++lines; });
  EXPECT_EQ(lines, 0u);
}

// Fixed-seed toy campaign against a checked-in summary.
TEST(Report, GoldenStyleSummary) {
  const auto scorer = fixture::style_scorer();
  const auto pools = synth::style_pools(scorer, 21, synth::StyleOptions{.groups = 4});
  const auto c = style_campaign(pools, Strategy::prioritized, 5, 21);
  const auto r = run_style_campaign(c, scorer, oracle_factory(pools, scorer.space(), 0.5));
  const auto summary = style_summary(r, scorer.space(), c.episode, ReportContext{21, json::object()});
  const std::string golden = std::string(MACS_TEST_DATA) + "/golden_style_summary.json";
  if (std::getenv("MACS_UPDATE_GOLDEN")) {
    std::ofstream(golden) << summary.dump(2) << "\n";
  }
  EXPECT_EQ(summary.dump(2) + "\n", slurp(golden));
}

// ---------------------------------------------------------------------------
// Discovery

TEST(Discovery, HandBuiltFixtureRates) {
  // 1200 distinct satisfying sequences, 150 of them in the reference set;
  // each appears twice, plus 600 unsatisfying proposals: 3000 in total.
  std::vector<Candidate> cands;
  std::unordered_set<std::string> reference;
  for (int i = 0; i < 1200; ++i) {
    const std::string s = "S" + std::to_string(i);
    cands.push_back({s, true, true});
    cands.push_back({s, true, true});
    if (i < 150) reference.insert(s);
  }
  for (int i = 0; i < 600; ++i) cands.push_back({"F" + std::to_string(i % 300), true, false});
  ASSERT_EQ(cands.size(), 3000u);
  const auto d = summarize_candidates(cands, "S0", &reference, 3000);
  EXPECT_EQ(d.successes, 1200u);
  EXPECT_EQ(d.novel, 1050u);
  EXPECT_EQ(d.total_rate, 0.40);
  EXPECT_EQ(d.unique_rate, 0.35);
  EXPECT_EQ(d.distinct, 1500u);
  EXPECT_EQ(d.duplicates, 1500u);
  const auto none = summarize_candidates(cands, "S0", nullptr, 3000);
  EXPECT_FALSE(none.unique_rate.has_value());
  EXPECT_EQ(none.total_rate, 0.40);
}

TEST(Discovery, IdenticalProposalsCountOnce) {
  std::vector<Candidate> cands(3000, Candidate{"ACDE", true, true});
  const auto d = summarize_candidates(cands, "ACDF", nullptr, 3000);
  EXPECT_EQ(d.total_rate, 1.0 / 3000.0);
  EXPECT_EQ(d.from_start.result().mean, 1.0);
  EXPECT_EQ(d.pairwise.n, 0u);
}

TEST(Discovery, EditDistanceStatistics) {
  std::vector<Candidate> cands = {{"AAAA", true, true}, {"AACC", true, true}, {"CCCC", true, true},
                                  {"AAAC", true, false}, {"XX", false, false}};
  const auto d = summarize_candidates(cands, "AAAA", nullptr, 5);
  // From start: 0, 2, 4. Pairs: 2, 4, 2.
  EXPECT_DOUBLE_EQ(d.from_start.result().mean, 2.0);
  EXPECT_NEAR(d.from_start.result().std, std::sqrt(8.0 / 3.0), 1e-12);
  EXPECT_DOUBLE_EQ(d.pairwise.result().mean, 8.0 / 3.0);
  EXPECT_EQ(d.valid, 4u);
}

struct ProteinFixture {
  synth::ProteinTask task = synth::protein_task(8);
  Scorer scorer = fixture::protein_scorer(task);
  VariationPool pool = synth::protein_pool(scorer, task.wild_type, 8, synth::ProteinOptions{.mutants = 1500});
  ScoredSequence wt = scorer.score(task.wild_type);
};

TEST(Discovery, RandomMutationWalkCampaign) {
  ProteinFixture f;
  DiscoveryCampaign c;
  c.start = f.wt;
  c.reference = f.pool.members;
  c.episode.strategy = Strategy::random_walk;
  c.episode.budget = 300;
  c.episode.hops = 3;
  c.episode.seed = 4;
  std::vector<std::string> ref;
  for (const auto& m : f.pool.members) ref.push_back(m.seq);
  const auto hist = distance_histogram(ref, f.task.wild_type);
  auto factory = [&](std::size_t) { return std::make_unique<RandomMutationEditor>(hist); };
  const auto r = run_discovery_campaign(c, f.scorer, factory, 3);
  ASSERT_EQ(r.combos.size(), 16u);
  EXPECT_TRUE(r.budget.exact());
  EXPECT_EQ(r.budget.configured, 16u * 300u);
  std::size_t successes = 0;
  for (const auto& d : r.combos) {
    EXPECT_EQ(d.proposals, 300u);
    ASSERT_TRUE(d.unique_rate.has_value());
    EXPECT_LE(*d.unique_rate, d.total_rate);
    EXPECT_LE(d.total_rate, 1.0);
    successes += d.successes;
  }
  EXPECT_GT(successes, 0u);
  const auto again = run_discovery_campaign(c, f.scorer, factory, 1);
  const ReportContext ctx{4, json::object()};
  EXPECT_EQ(discovery_summary(r, f.scorer.space(), c.episode, ctx),
            discovery_summary(again, f.scorer.space(), c.episode, ctx));

  c.reference.reset();
  const auto no_ref = run_discovery_campaign(c, f.scorer, factory);
  EXPECT_FALSE(no_ref.unique_rate.has_value());
  EXPECT_TRUE(discovery_summary(no_ref, f.scorer.space(), c.episode, ctx)["headline"]["unique_rate"].is_null());
}

TEST(Discovery, UniqueRecombineEmitsDistinctNovelSequences) {
  ProteinFixture f;
  DiscoveryCampaign c;
  c.start = f.wt;
  c.reference = f.pool.members;
  c.episode.strategy = Strategy::random_walk;
  c.episode.budget = 3000;
  c.episode.seed = 6;
  c.combos = {0, 5, 15};
  c.unique_recombine = UniqueRecombine{0.5, 0};
  const auto r = run_discovery_campaign(c, f.scorer, nullptr, 2);
  std::unordered_set<std::string> ref;
  for (const auto& m : f.pool.members) ref.insert(m.seq);
  EXPECT_TRUE(r.budget.exempt);
  for (std::size_t k = 0; k < r.combos.size(); ++k) {
    const auto& trace = r.results[k].trace;
    ASSERT_EQ(trace.size(), 3000u);
    std::set<std::string> seen;
    for (const auto& t : trace) {
      EXPECT_TRUE(seen.insert(t.proposal).second);
      EXPECT_EQ(ref.count(t.proposal), 0u);
    }
    EXPECT_EQ(r.combos[k].target_reached, true);
    EXPECT_EQ(r.combos[k].duplicates, 0u);
    EXPECT_GE(r.combos[k].budget_used, 3000u);
    // Novel by construction: unique equals total.
    EXPECT_EQ(r.combos[k].unique_rate, r.combos[k].total_rate);
  }
}

TEST(Discovery, UniqueRecombineRespectsAttemptCap) {
  const std::unordered_set<std::string> ref;
  auto [seqs, attempts] = unique_recombinants({"AAAA"}, ref, 10, 0.5, 50, 1);
  EXPECT_EQ(seqs.size(), 1u);  // a single seed only ever reproduces itself
  EXPECT_EQ(attempts, 50u);
}

TEST(Discovery, ComboSeedsFallBackToWholeReference) {
  const auto space = protein_space();
  std::vector<ScoredSequence> ref = {fixture::member("AAAA", {3.9, 10.0}), fixture::member("CCCC", {3.9, 20.0})};
  const auto [in, fb] = combo_seeds(ref, space, space.combo_count() - 1);
  EXPECT_FALSE(fb);
  EXPECT_EQ(in.size(), 2u);
  const auto [all, fb2] = combo_seeds(ref, space, 0);
  EXPECT_TRUE(fb2);
  EXPECT_EQ(all.size(), 2u);
}

TEST(Discovery, NonWalkStrategyRejected) {
  ProteinFixture f;
  DiscoveryCampaign c;
  c.start = f.wt;
  c.episode.strategy = Strategy::prioritized;
  EXPECT_THROW(run_discovery_campaign(c, f.scorer, [](std::size_t) { return std::make_unique<IdentityEditor>(); }),
               ConfigError);
}

// ---------------------------------------------------------------------------
// Comparison

TEST(Compare, PerComboAndPooledZTests) {
  json a{{"mode", "style"}, {"combos", json::array()}}, b = a;
  a["combos"].push_back({{"combo", 0}, {"label", "x"}, {"satisfied", 80}, {"episodes", 100}});
  a["combos"].push_back({{"combo", 1}, {"label", "y"}, {"satisfied", 50}, {"episodes", 100}});
  b["combos"].push_back({{"combo", 0}, {"label", "x"}, {"satisfied", 60}, {"episodes", 100}});
  b["combos"].push_back({{"combo", 1}, {"label", "y"}, {"satisfied", 50}, {"episodes", 100}});
  const auto rows = compare_reports(a, b);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[2].combo, "pooled");
  EXPECT_EQ(rows[2].s1, 130);
  EXPECT_EQ(rows[2].n2, 200);
  EXPECT_EQ(rows[1].test.z, 0.0);
  const auto swapped = compare_reports(b, a);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_DOUBLE_EQ(rows[i].test.z, -swapped[i].test.z);
    EXPECT_DOUBLE_EQ(rows[i].test.p_two_sided, swapped[i].test.p_two_sided);
  }
  b["mode"] = "discovery";
  EXPECT_THROW(compare_reports(a, b), ConfigError);
}

}  // namespace
}  // namespace macs
