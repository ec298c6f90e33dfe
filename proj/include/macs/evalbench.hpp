#pragma once

// Campaign runner for the two task shapes.
//
// Style: one episode per (test item, constraint combo); a combo's rate is the
// fraction of its episodes whose final satisfies the combo.
// Discovery: per combo, walks from a fixed start; every proposal is a
// candidate and success rates count distinct satisfying candidates against
// the per-combo budget.
//
// Work fans out to a thread pool. Reports are assembled afterwards from the
// finished episodes in canonical order, so they do not depend on the number
// of threads or on completion order.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <exception>
#include <filesystem>
#include <functional>
#include <mutex>
#include <set>
#include <string>
#include <thread>
#include <unordered_set>
#include <vector>

#include "macs/editors.hpp"
#include "macs/evaluators.hpp"
#include "macs/inference.hpp"
#include "macs/jsonl.hpp"
#include "macs/metrics.hpp"

namespace macs {

// Runs fn(task, worker) for every task in [0, n) on up to `workers` threads.
// After a failure no new tasks start; the error of the lowest failing task
// is rethrown once every thread has joined.
inline void parallel_for(std::size_t n, std::size_t workers,
                         const std::function<void(std::size_t task, std::size_t worker)>& fn) {
  if (workers == 0) throw ConfigError("worker count must be >= 1");
  workers = std::min(workers, std::max<std::size_t>(n, 1));
  std::atomic<std::size_t> next{0};
  std::atomic<bool> stop{false};
  std::mutex mu;
  std::size_t failed_task = n;
  std::exception_ptr error;
  auto body = [&](std::size_t worker) {
    while (!stop.load()) {
      const std::size_t task = next.fetch_add(1);
      if (task >= n) return;
      try {
        fn(task, worker);
      } catch (...) {
        std::lock_guard lock(mu);
        if (task < failed_task) {
          failed_task = task;
          error = std::current_exception();
        }
        stop.store(true);
      }
    }
  };
  if (workers == 1) {
    body(0);
  } else {
    std::vector<std::thread> threads;
    for (std::size_t w = 0; w < workers; ++w) threads.emplace_back(body, w);
    for (auto& t : threads) t.join();
  }
  if (error) std::rethrow_exception(error);
}

// Running mean / population std.
struct Moments {
  double sum = 0.0;
  double sum_sq = 0.0;
  std::size_t n = 0;

  void add(double x) {
    sum += x;
    sum_sq += x * x;
    ++n;
  }
  void merge(const Moments& o) {
    sum += o.sum;
    sum_sq += o.sum_sq;
    n += o.n;
  }
  MeanStd result() const {
    MeanStd r;
    r.n = n;
    if (n == 0) return r;
    r.mean = sum / static_cast<double>(n);
    r.std = std::sqrt(std::max(0.0, sum_sq / static_cast<double>(n) - r.mean * r.mean));
    return r;
  }
};

// ---------------------------------------------------------------------------
// Budget accounting

struct ComboBudget {
  std::size_t combo = 0;
  std::size_t configured = 0;
  std::size_t used = 0;
};

struct BudgetAudit {
  std::size_t configured = 0;
  std::size_t used = 0;
  bool exempt = false;  // unique-recombine may exceed the decode budget
  std::vector<ComboBudget> per_combo;

  bool exact() const noexcept { return used == configured; }
  bool within() const noexcept { return exempt || used <= configured; }
};

// Maximum editor calls of a style campaign: items x combos x per-episode budget.
inline std::size_t style_budget(std::size_t items, std::size_t combos, const EpisodeConfig& ep) {
  return items * combos * planned_budget(ep);
}

// Maximum editor calls of a discovery campaign: combos x per-combo budget.
inline std::size_t discovery_budget(std::size_t combos, const EpisodeConfig& ep) {
  return combos * planned_budget(ep);
}

inline std::vector<std::size_t> resolve_combos(const AttributeSpace& space, std::vector<std::size_t> combos) {
  if (combos.empty()) {
    combos.resize(space.combo_count());
    for (std::size_t c = 0; c < combos.size(); ++c) combos[c] = c;
  }
  std::set<std::size_t> seen;
  for (auto c : combos) {
    if (c >= space.combo_count()) throw ConfigError("combo " + std::to_string(c) + " out of range");
    if (!seen.insert(c).second) throw ConfigError("combo " + std::to_string(c) + " listed twice");
  }
  return combos;
}

// ---------------------------------------------------------------------------
// Style campaign

struct StyleCampaign {
  std::vector<ScoredSequence> items;
  std::vector<std::size_t> combos;  // empty: every combo
  EpisodeConfig episode;            // episode.seed is the campaign root seed
  std::shared_ptr<const Evaluator> fluency;
  std::shared_ptr<const PairwiseEvaluator> similarity;
};

struct StyleCombo {
  std::size_t combo = 0;
  std::size_t episodes = 0;
  std::size_t satisfied = 0;
  double rate = 0.0;
  std::optional<double> fluency;     // over satisfying finals
  std::optional<double> similarity;  // final vs start, over satisfying finals
  std::size_t budget_used = 0;
};

struct StyleReport {
  std::vector<StyleCombo> combos;
  MeanStd rate;  // across combos
  std::size_t episodes = 0;
  std::size_t satisfied = 0;
  std::optional<double> fluency;
  std::optional<double> similarity;
  BudgetAudit budget;
  std::vector<EpisodeResult> results;  // combo-major, then item
};

inline std::string style_episode_id(std::size_t combo, std::size_t item) {
  return "style/" + std::to_string(combo) + "/" + std::to_string(item);
}

inline std::uint64_t style_episode_seed(std::uint64_t root, std::size_t combo, std::size_t item) {
  return derive_seed(root, style_episode_id(combo, item));
}

// Aggregates finished episodes; results must be combo-major in `combos`
// order with `items` episodes per combo.
inline StyleReport summarize_style(std::vector<EpisodeResult> results, std::span<const std::size_t> combos,
                                   std::size_t items, const EpisodeConfig& ep, const Evaluator& fluency,
                                   const PairwiseEvaluator& similarity) {
  if (results.size() != combos.size() * items) throw ContractError("style results do not match the campaign shape");
  StyleReport rep;
  rep.budget.configured = style_budget(items, combos.size(), ep);
  Moments flu_all, sim_all;
  std::vector<double> rates;
  for (std::size_t k = 0; k < combos.size(); ++k) {
    StyleCombo sc;
    sc.combo = combos[k];
    sc.episodes = items;
    Moments flu, sim;
    for (std::size_t i = 0; i < items; ++i) {
      const auto& r = results[k * items + i];
      sc.budget_used += r.budget_used;
      if (!r.satisfied) continue;
      ++sc.satisfied;
      flu.add(evaluate(fluency, r.final.seq));
      sim.add(evaluate_pair(similarity, r.final.seq, r.start.seq));
    }
    sc.rate = items == 0 ? 0.0 : static_cast<double>(sc.satisfied) / static_cast<double>(items);
    if (flu.n > 0) {
      sc.fluency = flu.result().mean;
      sc.similarity = sim.result().mean;
    }
    flu_all.merge(flu);
    sim_all.merge(sim);
    rates.push_back(sc.rate);
    rep.episodes += sc.episodes;
    rep.satisfied += sc.satisfied;
    rep.budget.used += sc.budget_used;
    rep.budget.per_combo.push_back({sc.combo, items * planned_budget(ep), sc.budget_used});
    rep.combos.push_back(std::move(sc));
  }
  rep.rate = mean_std(rates);
  if (flu_all.n > 0) {
    rep.fluency = flu_all.result().mean;
    rep.similarity = sim_all.result().mean;
  }
  rep.results = std::move(results);
  return rep;
}

inline StyleReport run_style_campaign(const StyleCampaign& c, const Scorer& scorer, const EditorFactory& make_editor,
                                      std::size_t workers = 1) {
  if (!c.fluency || !c.similarity) {
    throw ConfigError("style campaign needs fluency and similarity evaluators for reporting");
  }
  if (!make_editor) throw ConfigError("style campaign needs an editor");
  validate(c.episode);
  const auto combos = resolve_combos(scorer.space(), c.combos);
  const std::size_t items = c.items.size();
  std::vector<EpisodeResult> results(combos.size() * items);
  std::vector<std::unique_ptr<Editor>> editors(std::max<std::size_t>(workers, 1));
  parallel_for(results.size(), workers, [&](std::size_t task, std::size_t w) {
    if (!editors[w]) editors[w] = make_editor();
    const std::size_t k = task / items, i = task % items;
    EpisodeConfig ep = c.episode;
    ep.seed = style_episode_seed(c.episode.seed, combos[k], i);
    results[task] = run_episode(*editors[w], scorer, c.items[i], scorer.space().combo(combos[k]), ep,
                                style_episode_id(combos[k], i));
  });
  return summarize_style(std::move(results), combos, items, c.episode, *c.fluency, *c.similarity);
}

// ---------------------------------------------------------------------------
// Discovery campaign

struct Candidate {
  std::string seq;
  bool valid = true;
  bool satisfied = false;
};

struct DiscoveryCombo {
  std::size_t combo = 0;
  std::size_t denominator = 0;  // per-combo proposal budget
  std::size_t proposals = 0;
  std::size_t valid = 0;
  std::size_t distinct = 0;    // distinct valid proposals
  std::size_t duplicates = 0;  // valid proposals repeating an earlier one
  std::size_t successes = 0;   // distinct satisfying proposals
  std::optional<std::size_t> novel;  // successes outside the reference set
  double total_rate = 0.0;
  std::optional<double> unique_rate;
  Moments from_start;  // edit distance of each distinct success to the start
  Moments pairwise;    // edit distance over all pairs of distinct successes
  std::size_t budget_used = 0;
  bool seed_fallback = false;   // recombine seeds taken from the whole reference set
  std::optional<bool> target_reached;  // unique-recombine only
};

// Counts distinct satisfying candidates and those outside `reference`
// (nullptr: no reference set, so the unique rate is absent).
inline DiscoveryCombo summarize_candidates(std::span<const Candidate> cands, std::string_view start,
                                           const std::unordered_set<std::string>* reference,
                                           std::size_t denominator) {
  if (denominator == 0) throw ContractError("discovery denominator must be positive");
  DiscoveryCombo d;
  d.denominator = denominator;
  d.proposals = cands.size();
  std::set<std::string> distinct, wins;
  for (const auto& c : cands) {
    if (!c.valid) continue;
    ++d.valid;
    if (!distinct.insert(c.seq).second) continue;
    if (c.satisfied) wins.insert(c.seq);
  }
  d.distinct = distinct.size();
  d.duplicates = d.valid - d.distinct;
  d.successes = wins.size();
  d.total_rate = static_cast<double>(d.successes) / static_cast<double>(denominator);
  if (reference) {
    std::size_t novel = 0;
    for (const auto& s : wins) novel += reference->count(s) == 0 ? 1 : 0;
    d.novel = novel;
    d.unique_rate = static_cast<double>(novel) / static_cast<double>(denominator);
  }
  const std::vector<std::string> w(wins.begin(), wins.end());
  for (std::size_t i = 0; i < w.size(); ++i) {
    d.from_start.add(static_cast<double>(levenshtein(w[i], start)));
    const LevenshteinFrom from(w[i]);
    for (std::size_t j = i + 1; j < w.size(); ++j) d.pairwise.add(static_cast<double>(from(w[j])));
  }
  return d;
}

inline std::vector<Candidate> candidates_of(const EpisodeResult& r) {
  std::vector<Candidate> out;
  out.reserve(r.trace.size());
  for (const auto& t : r.trace) out.push_back({t.proposal, t.valid, t.valid && satisfies(t.attrs, r.constraint)});
  return out;
}

struct UniqueRecombine {
  double kappa = 0.5;
  std::size_t max_attempts = 0;  // 0: 1000 x the per-combo budget
};

// Per-combo discovery editor. Stateful baselines (recombine) get a fresh
// instance for every combo.
using ComboEditorFactory = std::function<std::unique_ptr<Editor>(std::size_t combo)>;

struct DiscoveryCampaign {
  ScoredSequence start;
  std::optional<std::vector<ScoredSequence>> reference;  // offline set; absent -> unique rate absent
  std::vector<std::size_t> combos;
  EpisodeConfig episode;  // walk strategy; budget is the per-combo budget
  std::optional<UniqueRecombine> unique_recombine;  // replaces the walk when set
};

struct DiscoveryReport {
  std::vector<DiscoveryCombo> combos;
  MeanStd total_rate;                  // across combos
  std::optional<MeanStd> unique_rate;  // across combos
  MeanStd from_start;                  // pooled over every combo's distinct successes
  MeanStd pairwise;                    // pooled over within-combo pairs
  std::size_t duplicates = 0;
  BudgetAudit budget;
  bool unique_recombine = false;
  std::vector<EpisodeResult> results;  // one per combo, in combo order
};

// Reference members that fall inside a combo, as recombination seeds. An
// empty combo falls back to the whole reference set.
inline std::pair<std::vector<std::string>, bool> combo_seeds(std::span<const ScoredSequence> reference,
                                                             const AttributeSpace& space, std::size_t combo) {
  const auto c = space.combo(combo);
  std::vector<std::string> seeds;
  for (const auto& m : reference) {
    if (satisfies(m.attrs, c)) seeds.push_back(m.seq);
  }
  if (!seeds.empty()) return {std::move(seeds), false};
  for (const auto& m : reference) seeds.push_back(m.seq);
  return {std::move(seeds), true};
}

inline std::string discovery_episode_id(std::size_t combo) { return "discover/" + std::to_string(combo); }

// Generates recombinants until `target` distinct sequences outside the
// reference set exist or the attempt cap is hit; returns them in generation
// order together with the number of offspring drawn.
inline std::pair<std::vector<std::string>, std::size_t> unique_recombinants(
    std::vector<std::string> seeds, const std::unordered_set<std::string>& reference, std::size_t target,
    double kappa, std::size_t max_attempts, std::uint64_t seed) {
  RecombineStream stream(std::move(seeds), kappa, seed);
  std::unordered_set<std::string> seen;
  std::vector<std::string> out;
  std::size_t attempts = 0;
  while (out.size() < target && attempts < max_attempts) {
    auto s = stream.next();
    ++attempts;
    if (reference.count(s) || !seen.insert(s).second) continue;
    out.push_back(std::move(s));
  }
  return {std::move(out), attempts};
}

inline DiscoveryReport run_discovery_campaign(const DiscoveryCampaign& c, const Scorer& scorer,
                                              const ComboEditorFactory& make_editor, std::size_t workers = 1) {
  validate(c.episode);
  if (!is_walk(c.episode.strategy) && !c.unique_recombine) {
    throw ConfigError("discovery campaigns run random-walk or priority-walk episodes");
  }
  if (c.unique_recombine && !c.reference) throw ConfigError("unique-recombine needs a reference set");
  if (!c.unique_recombine && !make_editor) throw ConfigError("discovery campaign needs an editor");
  const auto& space = scorer.space();
  const auto combos = resolve_combos(space, c.combos);
  const std::size_t per_combo = planned_budget(c.episode);
  if (per_combo == 0) throw ConfigError("discovery per-combo budget must be positive");

  std::unordered_set<std::string> ref_set;
  if (c.reference) {
    for (const auto& m : *c.reference) ref_set.insert(m.seq);
  }
  struct Out {
    EpisodeResult result;
    bool fallback = false;
    std::optional<bool> reached;
  };
  std::vector<Out> outs(combos.size());
  parallel_for(combos.size(), workers, [&](std::size_t k, std::size_t) {
    const std::size_t combo = combos[k];
    const auto constraint = space.combo(combo);
    const std::uint64_t seed = derive_seed(c.episode.seed, discovery_episode_id(combo));
    if (!c.unique_recombine) {
      auto editor = make_editor(combo);
      EpisodeConfig ep = c.episode;
      ep.seed = seed;
      outs[k].result = run_episode(*editor, scorer, c.start, constraint, ep, discovery_episode_id(combo));
      return;
    }
    auto [seeds, fallback] = combo_seeds(*c.reference, space, combo);
    const std::size_t cap = c.unique_recombine->max_attempts ? c.unique_recombine->max_attempts : 1000 * per_combo;
    auto [seqs, attempts] = unique_recombinants(std::move(seeds), ref_set, per_combo, c.unique_recombine->kappa,
                                                cap, seed);
    // Recorded as one episode whose trace lists every kept recombinant.
    EpisodeResult r;
    r.episode_id = discovery_episode_id(combo);
    r.strategy = Strategy::random_walk;
    r.start = c.start;
    r.constraint = constraint;
    r.start_reward = scorer.reward(c.start, c.start, constraint);
    for (std::size_t i = 0; i < seqs.size(); ++i) {
      TraceStep t;
      t.step = i + 1;
      t.walk = i;
      t.proposal = seqs[i];
      try {
        if (!valid_sequence(seqs[i], scorer.domain())) throw InputError("invalid alphabet");
        const auto s = scorer.score(seqs[i]);
        t.attrs = s.attrs;
        t.reward = scorer.reward(s, c.start, constraint);
      } catch (const InputError&) {
        t.valid = false;
      }
      r.trace.push_back(std::move(t));
    }
    r.final = c.start;
    r.final_reward = r.start_reward;
    r.satisfied = satisfies(c.start.attrs, constraint);
    r.budget_used = attempts;
    outs[k] = Out{std::move(r), fallback, seqs.size() == per_combo};
  });

  DiscoveryReport rep;
  rep.unique_recombine = c.unique_recombine.has_value();
  rep.budget.exempt = rep.unique_recombine;
  rep.budget.configured = discovery_budget(combos.size(), c.episode);
  std::vector<double> totals, uniques;
  Moments from_start, pairwise;
  for (std::size_t k = 0; k < combos.size(); ++k) {
    auto& o = outs[k];
    const auto cands = candidates_of(o.result);
    auto d = summarize_candidates(cands, c.start.seq, c.reference ? &ref_set : nullptr, per_combo);
    d.combo = combos[k];
    d.budget_used = o.result.budget_used;
    d.seed_fallback = o.fallback;
    d.target_reached = o.reached;
    totals.push_back(d.total_rate);
    if (d.unique_rate) uniques.push_back(*d.unique_rate);
    from_start.merge(d.from_start);
    pairwise.merge(d.pairwise);
    rep.duplicates += d.duplicates;
    rep.budget.used += d.budget_used;
    rep.budget.per_combo.push_back({d.combo, per_combo, d.budget_used});
    rep.combos.push_back(std::move(d));
    rep.results.push_back(std::move(o.result));
  }
  rep.total_rate = mean_std(totals);
  if (c.reference) rep.unique_rate = mean_std(uniques);
  rep.from_start = from_start.result();
  rep.pairwise = pairwise.result();
  return rep;
}

// ---------------------------------------------------------------------------
// Reports

inline json opt_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

inline json mean_std_json(const MeanStd& m) { return json{{"mean", m.mean}, {"std", m.std}, {"n", m.n}}; }

inline json space_json(const AttributeSpace& space) {
  json arr = json::array();
  for (std::size_t j = 0; j < space.dims(); ++j) {
    json windows = json::array();
    for (const auto& w : space.partition(j).windows) {
      windows.push_back(json{{"start", w.start}, {"end", w.end}, {"label", w.label}});
    }
    arr.push_back(json{{"id", space.spec(j).id},
                       {"min", space.spec(j).v_min},
                       {"max", space.spec(j).v_max},
                       {"windows", windows}});
  }
  return arr;
}

inline json budget_json(const BudgetAudit& b) {
  json per = json::array();
  for (const auto& p : b.per_combo) per.push_back(json{{"combo", p.combo}, {"configured", p.configured}, {"used", p.used}});
  return json{{"configured", b.configured}, {"used", b.used},     {"exact", b.exact()},
              {"within", b.within()},       {"exempt", b.exempt}, {"per_combo", per}};
}

// What a run needs to label its report beyond the metrics.
struct ReportContext {
  std::uint64_t seed = 0;
  json config = json::object();  // config echo, without output or worker settings
};

inline json style_summary(const StyleReport& r, const AttributeSpace& space, const EpisodeConfig& ep,
                          const ReportContext& ctx) {
  json combos = json::array();
  for (const auto& c : r.combos) {
    combos.push_back(json{{"combo", c.combo},
                          {"label", space.combo_label(c.combo)},
                          {"episodes", c.episodes},
                          {"satisfied", c.satisfied},
                          {"rate", c.rate},
                          {"fluency", opt_json(c.fluency)},
                          {"similarity", opt_json(c.similarity)},
                          {"budget_used", c.budget_used}});
  }
  return json{{"format", "macs-report"},
              {"version", 1},
              {"mode", "style"},
              {"seed", ctx.seed},
              {"strategy", to_string(ep.strategy)},
              {"attributes", space_json(space)},
              {"headline",
               {{"satisfaction", mean_std_json(r.rate)},
                {"episodes", r.episodes},
                {"satisfied", r.satisfied},
                {"fluency", opt_json(r.fluency)},
                {"similarity", opt_json(r.similarity)}}},
              {"combos", combos},
              {"budget", budget_json(r.budget)},
              {"config", ctx.config}};
}

inline json discovery_summary(const DiscoveryReport& r, const AttributeSpace& space, const EpisodeConfig& ep,
                              const ReportContext& ctx) {
  json combos = json::array();
  for (const auto& c : r.combos) {
    json row{{"combo", c.combo},
             {"label", space.combo_label(c.combo)},
             {"denominator", c.denominator},
             {"proposals", c.proposals},
             {"valid", c.valid},
             {"distinct", c.distinct},
             {"duplicates", c.duplicates},
             {"successes", c.successes},
             {"novel", c.novel ? json(*c.novel) : json(nullptr)},
             {"total_rate", c.total_rate},
             {"unique_rate", opt_json(c.unique_rate)},
             {"distance_from_start", mean_std_json(c.from_start.result())},
             {"distance_pairwise", mean_std_json(c.pairwise.result())},
             {"budget_used", c.budget_used}};
    if (r.unique_recombine) {
      row["seed_fallback"] = c.seed_fallback;
      row["target_reached"] = c.target_reached.value_or(false);
    }
    combos.push_back(std::move(row));
  }
  return json{{"format", "macs-report"},
              {"version", 1},
              {"mode", "discovery"},
              {"seed", ctx.seed},
              {"strategy", r.unique_recombine ? std::string("unique-recombine") : std::string(to_string(ep.strategy))},
              {"hops", ep.hops},
              {"attributes", space_json(space)},
              {"headline",
               {{"total_rate", mean_std_json(r.total_rate)},
                {"unique_rate", r.unique_rate ? mean_std_json(*r.unique_rate) : json(nullptr)},
                {"distance_from_start", mean_std_json(r.from_start)},
                {"distance_pairwise", mean_std_json(r.pairwise)},
                {"duplicates", r.duplicates}}},
              {"combos", combos},
              {"budget", budget_json(r.budget)},
              {"config", ctx.config}};
}

// Rows follow the first attribute's windows, columns the combined windows of
// the remaining attributes; cells of combos absent from `values` stay empty.
inline std::string matrix_csv(const AttributeSpace& space, const std::map<std::size_t, std::optional<double>>& values) {
  const std::size_t rows = space.partition(0).size();
  const std::size_t cols = space.combo_count() / rows;
  std::string out = space.spec(0).id;
  for (std::size_t col = 0; col < cols; ++col) {
    std::string label;
    const auto w = space.combo_windows(col);
    for (std::size_t j = 1; j < space.dims(); ++j) {
      const auto& win = space.partition(j).windows[w[j]];
      if (!label.empty()) label += " & ";
      label += space.spec(j).id + " " + json(win.start).dump() + ".." + json(win.end).dump();
    }
    out += "," + (label.empty() ? std::string("rate") : label);
  }
  out += '\n';
  for (std::size_t row = 0; row < rows; ++row) {
    const auto& win = space.partition(0).windows[row];
    out += json(win.start).dump() + ".." + json(win.end).dump();
    for (std::size_t col = 0; col < cols; ++col) {
      out += ',';
      const auto it = values.find(row * cols + col);
      if (it != values.end() && it->second) out += json(*it->second).dump();
    }
    out += '\n';
  }
  return out;
}

// Run facts that vary between identical runs; kept out of summary.json.
struct RunInfo {
  std::size_t workers = 1;
  std::string started;
  std::string finished;
  double elapsed_seconds = 0.0;
};

inline std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

namespace detail {

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  auto out = open_for_write(path.string());
  out << text;
  check_written(out, path.string());
}

inline void write_report_dir(const std::string& dir, const json& summary, const BudgetAudit& budget,
                             const std::map<std::string, std::string>& matrices,
                             std::span<const EpisodeResult> results, const AttributeSpace& space,
                             const RunInfo& info) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create report directory '" + dir + "': " + ec.message());
  const std::filesystem::path root(dir);
  write_text(root / "summary.json", summary.dump(2) + "\n");
  for (const auto& [metric, csv] : matrices) write_text(root / ("matrix_" + metric + ".csv"), csv);
  {
    const auto path = (root / "traces.jsonl").string();
    auto out = open_for_write(path);
    out << dump_line(header_line("macs-traces")) << '\n';
    for (const auto& r : results) {
      for (const auto& row : trace_rows(r, space)) out << dump_line(row) << '\n';
    }
    check_written(out, path);
  }
  const json audit{{"started", info.started},
                   {"finished", info.finished},
                   {"elapsed_seconds", info.elapsed_seconds},
                   {"workers", info.workers},
                   {"budget", budget_json(budget)}};
  write_text(root / "audit.json", audit.dump(2) + "\n");
}

}  // namespace detail

// summary.json, matrix_<metric>.csv, traces.jsonl, audit.json.
inline json emit_report(const StyleReport& r, const AttributeSpace& space, const EpisodeConfig& ep,
                        const ReportContext& ctx, const std::string& dir, const RunInfo& info = {}) {
  const auto summary = style_summary(r, space, ep, ctx);
  std::map<std::size_t, std::optional<double>> rate, flu, sim;
  for (const auto& c : r.combos) {
    rate[c.combo] = c.rate;
    flu[c.combo] = c.fluency;
    sim[c.combo] = c.similarity;
  }
  detail::write_report_dir(dir, summary, r.budget,
                           {{"satisfaction", matrix_csv(space, rate)},
                            {"fluency", matrix_csv(space, flu)},
                            {"similarity", matrix_csv(space, sim)}},
                           r.results, space, info);
  return summary;
}

inline json emit_report(const DiscoveryReport& r, const AttributeSpace& space, const EpisodeConfig& ep,
                        const ReportContext& ctx, const std::string& dir, const RunInfo& info = {}) {
  const auto summary = discovery_summary(r, space, ep, ctx);
  std::map<std::size_t, std::optional<double>> total, unique, dist, pairs;
  for (const auto& c : r.combos) {
    total[c.combo] = c.total_rate;
    unique[c.combo] = c.unique_rate;
    const auto fs = c.from_start.result(), pw = c.pairwise.result();
    dist[c.combo] = fs.n ? std::optional<double>(fs.mean) : std::nullopt;
    pairs[c.combo] = pw.n ? std::optional<double>(pw.mean) : std::nullopt;
  }
  std::map<std::string, std::string> matrices{{"total_success", matrix_csv(space, total)},
                                              {"distance_from_start", matrix_csv(space, dist)},
                                              {"distance_pairwise", matrix_csv(space, pairs)}};
  if (r.unique_rate) matrices.emplace("unique_success", matrix_csv(space, unique));
  detail::write_report_dir(dir, summary, r.budget, matrices, r.results, space, info);
  return summary;
}

// ---------------------------------------------------------------------------
// Report comparison

struct CompareRow {
  std::string combo;  // combo index, or "pooled"
  std::string label;
  long s1 = 0, n1 = 0, s2 = 0, n2 = 0;
  ZTest test;
};

// Per-combo two-proportions z-tests between two summaries of the same mode:
// satisfied episodes for style reports, distinct successes over the
// per-combo budget for discovery reports. The last row pools all combos.
inline std::vector<CompareRow> compare_reports(const json& a, const json& b) {
  const auto mode = a.at("mode").get<std::string>();
  if (b.at("mode").get<std::string>() != mode) throw ConfigError("cannot compare reports of different modes");
  auto counts = [&](const json& row) -> std::pair<long, long> {
    if (mode == "style") return {row.at("satisfied").get<long>(), row.at("episodes").get<long>()};
    return {row.at("successes").get<long>(), row.at("denominator").get<long>()};
  };
  std::map<std::size_t, const json*> in_b;
  for (const auto& row : b.at("combos")) in_b[row.at("combo").get<std::size_t>()] = &row;
  std::vector<CompareRow> out;
  CompareRow pooled;
  pooled.combo = "pooled";
  for (const auto& row : a.at("combos")) {
    const auto combo = row.at("combo").get<std::size_t>();
    const auto it = in_b.find(combo);
    if (it == in_b.end()) continue;
    CompareRow r;
    r.combo = std::to_string(combo);
    r.label = row.value("label", std::string{});
    std::tie(r.s1, r.n1) = counts(row);
    std::tie(r.s2, r.n2) = counts(*it->second);
    if (r.n1 <= 0 || r.n2 <= 0) continue;
    r.test = two_prop_ztest(r.s1, r.n1, r.s2, r.n2);
    pooled.s1 += r.s1;
    pooled.n1 += r.n1;
    pooled.s2 += r.s2;
    pooled.n2 += r.n2;
    out.push_back(std::move(r));
  }
  if (pooled.n1 > 0 && pooled.n2 > 0) {
    pooled.test = two_prop_ztest(pooled.s1, pooled.n1, pooled.s2, pooled.n2);
    out.push_back(std::move(pooled));
  }
  return out;
}

}  // namespace macs
