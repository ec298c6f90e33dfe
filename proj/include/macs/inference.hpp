#pragma once

// Multi-step inference under an exact proposal budget.
//
// Every editor candidate costs one budget unit whether or not it is valid.
// Rewards are always measured against the episode start y0, including the
// pairwise similarity bonus.

#include <limits>
#include <string>
#include <vector>

#include "macs/attribute.hpp"
#include "macs/editors.hpp"
#include "macs/evaluators.hpp"
#include "macs/jsonl.hpp"
#include "macs/log.hpp"
#include "macs/rng.hpp"

namespace macs {

enum class Strategy { best_of_n, naive_chain, prioritized, random_walk, priority_walk };

inline std::string_view to_string(Strategy s) noexcept {
  switch (s) {
    case Strategy::best_of_n: return "best-of-n";
    case Strategy::naive_chain: return "naive-chain";
    case Strategy::prioritized: return "prioritized";
    case Strategy::random_walk: return "random-walk";
    case Strategy::priority_walk: return "priority-walk";
  }
  return "?";
}

inline Strategy parse_strategy(std::string_view s) {
  for (auto st : {Strategy::best_of_n, Strategy::naive_chain, Strategy::prioritized, Strategy::random_walk,
                  Strategy::priority_walk}) {
    if (s == to_string(st)) return st;
  }
  throw ConfigError("unknown strategy '" + std::string(s) + "'");
}

inline bool is_walk(Strategy s) noexcept { return s == Strategy::random_walk || s == Strategy::priority_walk; }

struct EpisodeConfig {
  Strategy strategy = Strategy::prioritized;
  std::size_t budget = 5;
  std::size_t hops = 1;  // walk length; walks run budget / hops times
  std::size_t beam = 1;
  bool anchor_conditioning = false;
  std::uint64_t seed = 0;
};

inline void validate(const EpisodeConfig& c) {
  if (c.beam == 0) throw ConfigError("beam must be >= 1");
  if (is_walk(c.strategy)) {
    if (c.hops == 0) throw ConfigError("walk hops must be positive");
    if (c.hops > c.budget) throw ConfigError("walk hops exceed the budget");
  }
}

// Proposals a configuration will spend when nothing stops it early.
inline std::size_t planned_budget(const EpisodeConfig& c) {
  return is_walk(c.strategy) ? (c.budget / c.hops) * c.hops : c.budget;
}

struct TraceStep {
  std::size_t step = 0;  // 1-based proposal index within the episode
  std::size_t walk = 0;
  std::string proposal;
  bool valid = true;
  AttributeVector attrs;  // empty when invalid
  double reward = std::numeric_limits<double>::quiet_NaN();
  bool accepted = false;
};

struct EpisodeResult {
  std::string episode_id;
  Strategy strategy = Strategy::prioritized;
  ScoredSequence start;
  double start_reward = 0.0;
  MultiConstraint constraint;
  std::vector<TraceStep> trace;
  ScoredSequence final;
  double final_reward = 0.0;
  bool satisfied = false;
  std::size_t budget_used = 0;
};

namespace detail {

struct Scored {
  ScoredSequence seq;
  double reward;
};

class EpisodeRunner {
 public:
  EpisodeRunner(Editor& editor, const Scorer& scorer, const ScoredSequence& start, const MultiConstraint& constraint,
                const EpisodeConfig& cfg, std::string id)
      : editor_(editor), scorer_(scorer), cfg_(cfg) {
    validate(cfg);
    scorer.space().check(start.attrs);
    if (constraint.size() != scorer.space().dims()) throw ContractError("constraint dimension mismatch");
    res_.episode_id = std::move(id);
    res_.strategy = cfg.strategy;
    res_.start = start;
    res_.constraint = constraint;
    res_.start_reward = scorer.reward(start, start, constraint);
  }

  // One editor call from `from`: n candidates, each recorded in the trace.
  std::vector<std::optional<Scored>> propose(const ScoredSequence& from, std::size_t n, std::size_t walk) {
    EditRequest req;
    req.episode_id = res_.episode_id;
    req.context = res_.start.context;
    if (cfg_.anchor_conditioning) req.anchor = res_.start;
    req.current = from;
    req.target = res_.constraint;
    req.n_candidates = n;
    req.seed = derive_seed(cfg_.seed, static_cast<std::uint64_t>(res_.budget_used));
    auto cands = editor_.propose(req);
    res_.budget_used += n;
    if (cands.size() != n) {
      throw ProtocolError("editor returned " + std::to_string(cands.size()) + " candidates, expected " +
                          std::to_string(n));
    }
    std::vector<std::optional<Scored>> out(n);
    for (std::size_t i = 0; i < n; ++i) {
      TraceStep t;
      t.step = res_.trace.size() + 1;
      t.walk = walk;
      t.proposal = cands[i];
      try {
        if (!valid_sequence(cands[i], scorer_.domain())) throw InputError("invalid alphabet");
        auto s = scorer_.score(cands[i]);
        s.context = res_.start.context;
        const double r = scorer_.reward(s, res_.start, res_.constraint);
        t.attrs = s.attrs;
        t.reward = r;
        out[i] = Scored{std::move(s), r};
      } catch (const InputError& e) {
        log::info("episode ", res_.episode_id, ": dropped candidate ", t.step, ": ", e.what());
        t.valid = false;
      }
      res_.trace.push_back(std::move(t));
    }
    return out;
  }

  void accept(std::size_t trace_index) { res_.trace.at(trace_index).accepted = true; }
  std::size_t trace_size() const { return res_.trace.size(); }
  std::size_t used() const { return res_.budget_used; }
  const EpisodeResult& result() const { return res_; }

  EpisodeResult finish(const ScoredSequence& final, double reward) {
    res_.final = final;
    res_.final_reward = reward;
    res_.satisfied = satisfies(final.attrs, res_.constraint);
    return std::move(res_);
  }

  Scored start() const { return Scored{res_.start, res_.start_reward}; }
  bool satisfied(const ScoredSequence& s) const { return satisfies(s.attrs, res_.constraint); }

 private:
  Editor& editor_;
  const Scorer& scorer_;
  EpisodeConfig cfg_;
  EpisodeResult res_;
};

}  // namespace detail

// N = budget independent proposals from the start in one editor call; the
// final is the highest-reward valid candidate, earliest on ties.
inline EpisodeResult best_of_n(detail::EpisodeRunner& run, std::size_t n) {
  if (n == 0) return run.finish(run.start().seq, run.start().reward);
  const auto cands = run.propose(run.result().start, n, 0);
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < cands.size(); ++i) {
    if (cands[i] && (!best || cands[i]->reward > cands[*best]->reward)) best = i;
  }
  if (!best) {
    const auto s = run.start();
    return run.finish(s.seq, s.reward);
  }
  run.accept(run.trace_size() - cands.size() + *best);
  return run.finish(cands[*best]->seq, cands[*best]->reward);
}

// Every valid proposal becomes the next state; the final is the last state.
inline EpisodeResult naive_chain(detail::EpisodeRunner& run, std::size_t steps) {
  auto state = run.start();
  for (std::size_t i = 0; i < steps; ++i) {
    auto c = run.propose(state.seq, 1, 0);
    if (!c[0]) continue;
    run.accept(run.trace_size() - 1);
    state = std::move(*c[0]);
  }
  return run.finish(state.seq, state.reward);
}

// Max-reward queue seeded with the start. Each step pops the best state,
// edits it once, keeps the proposal only if its reward strictly exceeds the
// popped state's, and truncates the queue to beam + 1 entries. Stops when
// the budget is spent or the best state satisfies the constraint; with a
// nonzero budget at least one proposal is made.
inline EpisodeResult prioritized(detail::EpisodeRunner& run, std::size_t budget, std::size_t beam) {
  struct Entry {
    detail::Scored s;
    std::size_t order;
  };
  auto better = [](const Entry& a, const Entry& b) {
    return a.s.reward != b.s.reward ? a.s.reward > b.s.reward : a.order < b.order;
  };
  std::vector<Entry> queue = {{run.start(), 0}};
  std::size_t order = 1;
  if (budget == 0) return run.finish(queue.front().s.seq, queue.front().s.reward);
  do {
    std::sort(queue.begin(), queue.end(), better);
    const Entry top = queue.front();
    auto c = run.propose(top.s.seq, 1, 0);
    if (c[0] && c[0]->reward > top.s.reward) {
      run.accept(run.trace_size() - 1);
      queue.push_back({std::move(*c[0]), order++});
      std::sort(queue.begin(), queue.end(), better);
      if (queue.size() > beam + 1) queue.resize(beam + 1);
    }
  } while (run.used() < budget && !run.satisfied(queue.front().s.seq));
  return run.finish(queue.front().s.seq, queue.front().s.reward);
}

// budget / hops walks from the start. A random walk moves to every valid
// proposal; a priority walk moves only on strict reward improvement over its
// current state. The final is the highest-reward retained state across
// walks (earliest on ties); for random walks the start itself only counts
// when no proposal was valid.
inline EpisodeResult walks(detail::EpisodeRunner& run, std::size_t budget, std::size_t hops, bool priority) {
  const std::size_t count = budget / hops;
  std::optional<detail::Scored> best;
  if (priority) best = run.start();
  for (std::size_t w = 0; w < count; ++w) {
    auto state = run.start();
    for (std::size_t h = 0; h < hops; ++h) {
      auto c = run.propose(state.seq, 1, w);
      if (!c[0]) continue;
      if (priority && !(c[0]->reward > state.reward)) continue;
      run.accept(run.trace_size() - 1);
      state = std::move(*c[0]);
      if (!best || state.reward > best->reward) best = state;
    }
  }
  if (!best) best = run.start();
  return run.finish(best->seq, best->reward);
}

inline EpisodeResult run_episode(Editor& editor, const Scorer& scorer, const ScoredSequence& start,
                                 const MultiConstraint& constraint, const EpisodeConfig& cfg,
                                 std::string episode_id = "episode") {
  detail::EpisodeRunner run(editor, scorer, start, constraint, cfg, std::move(episode_id));
  switch (cfg.strategy) {
    case Strategy::best_of_n: return best_of_n(run, cfg.budget);
    case Strategy::naive_chain: return naive_chain(run, cfg.budget);
    case Strategy::prioritized: return prioritized(run, cfg.budget, cfg.beam);
    case Strategy::random_walk: return walks(run, cfg.budget, cfg.hops, false);
    case Strategy::priority_walk: return walks(run, cfg.budget, cfg.hops, true);
  }
  throw ContractError("unknown strategy");
}

// Accepted rewards in trace order.
inline std::vector<double> accepted_rewards(const EpisodeResult& r) {
  std::vector<double> out;
  for (const auto& t : r.trace) {
    if (t.accepted) out.push_back(t.reward);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Trace serialisation: one start row, one row per proposal, one final row.

inline json attrs_or_null(const AttributeVector& a, const AttributeSpace& space) {
  return a.size() == 0 ? json(nullptr) : attrs_to_json(a, space);
}

inline std::vector<json> trace_rows(const EpisodeResult& r, const AttributeSpace& space) {
  std::vector<json> rows;
  rows.push_back(json{{"episode_id", r.episode_id},
                      {"kind", "start"},
                      {"strategy", to_string(r.strategy)},
                      {"digest", r.start.digest()},
                      {"attrs", attrs_to_json(r.start.attrs, space)},
                      {"reward", r.start_reward},
                      {"windows", constraint_to_json(r.constraint)}});
  for (const auto& t : r.trace) {
    json row{{"episode_id", r.episode_id},
             {"kind", "proposal"},
             {"step", t.step},
             {"walk", t.walk},
             {"proposal", t.proposal},
             {"proposal_digest", digest_hex(t.proposal)},
             {"valid", t.valid},
             {"attrs", attrs_or_null(t.attrs, space)},
             {"reward", t.valid ? json(t.reward) : json(nullptr)},
             {"accepted", t.accepted}};
    rows.push_back(std::move(row));
  }
  rows.push_back(json{{"episode_id", r.episode_id},
                      {"kind", "final"},
                      {"digest", r.final.digest()},
                      {"attrs", attrs_to_json(r.final.attrs, space)},
                      {"reward", r.final_reward},
                      {"satisfied", r.satisfied},
                      {"budget_used", r.budget_used}});
  return rows;
}

}  // namespace macs
