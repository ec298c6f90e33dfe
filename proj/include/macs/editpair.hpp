#pragma once

// Edit-pair mining and sampling for training-data export.
//
// A variation pool is a group of mutually paraphrasing sequences; every
// ordered pair of distinct members is a candidate (source -> target) edit.
// Three samplers draw pairs from a set of pools:
//   random          uniform over all ordered pairs,
//   knn             pick two constraint combos, a random location inside
//                   each, and choose uniformly among the k pairs whose
//                   normalised (source, target) attribute vectors lie
//                   nearest to that transition,
//   window-uniform  pick a source combo and a target combo (the latter
//                   weighted by n/tau for sparse combos) and draw one member
//                   from each.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <queue>
#include <span>
#include <string>
#include <vector>

#include "macs/attribute.hpp"
#include "macs/evaluators.hpp"
#include "macs/jsonl.hpp"
#include "macs/log.hpp"
#include "macs/rng.hpp"
#include "macs/sequence.hpp"

namespace macs {

struct VariationPool {
  std::string group_id;
  std::vector<ScoredSequence> members;
  std::vector<std::string> origins;  // parallel to members ("original", "variation", "wild-type", ...)

  std::size_t size() const noexcept { return members.size(); }
  std::size_t pair_count() const noexcept { return size() < 2 ? 0 : size() * (size() - 1); }
};

struct EditPair {
  ScoredSequence source;
  ScoredSequence target;
  std::string group_id;
};

enum class WindowStrategy { target_satisfying, nonneg_gain };
enum class WeightMode { sft, wbc };
enum class SamplerMode { random, knn, window_uniform };

struct TrainingExample {
  EditPair pair;
  MultiConstraint windows;
  std::optional<ScoredSequence> anchor;
  double reward = 0.0;
  double weight = 1.0;
  json meta = json::object();
};

struct SamplerConfig {
  SamplerMode mode = SamplerMode::knn;
  std::size_t k = 30;
  std::size_t tau = 400;
  std::uint64_t seed = 0;
  // Pair count above which the k-NN search switches from a linear scan to the
  // grid index.
  std::size_t exact_scan_limit = 20000;
};

inline WindowStrategy parse_window_strategy(std::string_view s) {
  if (s == "target-satisfying") return WindowStrategy::target_satisfying;
  if (s == "nonneg-gain") return WindowStrategy::nonneg_gain;
  throw ConfigError("unknown window strategy '" + std::string(s) + "'");
}

inline WeightMode parse_weight_mode(std::string_view s) {
  if (s == "sft") return WeightMode::sft;
  if (s == "wbc") return WeightMode::wbc;
  throw ConfigError("unknown weight mode '" + std::string(s) + "'");
}

inline SamplerMode parse_sampler_mode(std::string_view s) {
  if (s == "random") return SamplerMode::random;
  if (s == "knn") return SamplerMode::knn;
  if (s == "window-uniform") return SamplerMode::window_uniform;
  throw ConfigError("unknown sampler mode '" + std::string(s) + "'");
}

// ---------------------------------------------------------------------------
// Pool files

inline std::vector<VariationPool> read_pools(const std::string& path, const AttributeSpace& space,
                                             Domain domain) {
  std::vector<VariationPool> pools;
  std::map<std::string, std::size_t> by_group;
  read_jsonl(path, "macs-pool", [&](const json& j, std::size_t) {
    for (const auto& [key, _] : j.items()) {
      if (key != "group_id" && key != "seq" && key != "attrs" && key != "origin") {
        throw ConfigError("pool row has unknown field '" + key + "'");
      }
    }
    const auto group = j.at("group_id").get<std::string>();
    auto seq = scored_from_json(j, space, domain);
    if (!valid_sequence(seq.seq, domain)) throw ConfigError("pool row has an invalid sequence");
    auto [it, fresh] = by_group.emplace(group, pools.size());
    if (fresh) pools.push_back(VariationPool{group, {}, {}});
    auto& pool = pools[it->second];
    pool.members.push_back(std::move(seq));
    pool.origins.push_back(j.value("origin", std::string{}));
  });
  return pools;
}

inline void write_pools(const std::string& path, std::span<const VariationPool> pools,
                        const AttributeSpace& space) {
  auto out = open_for_write(path);
  out << dump_line(header_line("macs-pool")) << '\n';
  for (const auto& pool : pools) {
    for (std::size_t i = 0; i < pool.size(); ++i) {
      json row{{"group_id", pool.group_id},
               {"seq", pool.members[i].seq},
               {"attrs", attrs_to_json(pool.members[i].attrs, space)},
               {"origin", i < pool.origins.size() ? pool.origins[i] : std::string{}}};
      out << dump_line(row) << '\n';
    }
  }
  check_written(out, path);
}

// ---------------------------------------------------------------------------
// Enumeration and window assignment

// All ordered pairs of distinct members: m(m-1) for a pool of m distinct
// sequences. Pairs whose two members carry the same sequence are skipped.
inline std::vector<EditPair> enumerate_pairs(const VariationPool& pool) {
  std::vector<EditPair> out;
  if (pool.size() < 2) {
    log::warn("pool '", pool.group_id, "' has fewer than two members; no pairs");
    return out;
  }
  out.reserve(pool.pair_count());
  for (std::size_t a = 0; a < pool.size(); ++a) {
    for (std::size_t b = 0; b < pool.size(); ++b) {
      if (a == b || pool.members[a].seq == pool.members[b].seq) continue;
      out.push_back(EditPair{pool.members[a], pool.members[b], pool.group_id});
    }
  }
  return out;
}

inline MultiConstraint assign_windows(const EditPair& pair, const AttributeSpace& space,
                                      WindowStrategy strategy, Rng& rng) {
  space.check(pair.source.attrs);
  space.check(pair.target.attrs);
  MultiConstraint c;
  for (std::size_t j = 0; j < space.dims(); ++j) {
    const auto& part = space.partition(j);
    const double vb = pair.target.attrs[j];
    if (strategy == WindowStrategy::target_satisfying) {
      c.windows.push_back(part.windows[window_of(vb, part)]);
      continue;
    }
    const double va = pair.source.attrs[j];
    std::vector<std::size_t> ok;
    for (std::size_t w = 0; w < part.size(); ++w) {
      if (satisfaction_score(vb, part.windows[w], space.spec(j)) >=
          satisfaction_score(va, part.windows[w], space.spec(j))) {
        ok.push_back(w);
      }
    }
    // The window containing the target always qualifies (score 1).
    c.windows.push_back(part.windows[ok[rng.index(ok.size())]]);
  }
  return c;
}

// Per-combo sampling weights for sparse combos: 1 when a combo holds at least
// tau members, n / tau otherwise.
inline std::vector<double> window_weights(std::span<const VariationPool> pools,
                                          const AttributeSpace& space, std::size_t tau) {
  if (tau == 0) throw ConfigError("tau must be positive");
  std::vector<std::size_t> counts(space.combo_count(), 0);
  for (const auto& pool : pools) {
    for (const auto& m : pool.members) ++counts[space.combo_of(m.attrs)];
  }
  std::vector<double> w(counts.size());
  for (std::size_t c = 0; c < counts.size(); ++c) {
    w[c] = counts[c] >= tau ? 1.0 : static_cast<double>(counts[c]) / static_cast<double>(tau);
  }
  return w;
}

// ---------------------------------------------------------------------------
// Pair index for k-NN search

struct PairRef {
  std::uint32_t pool;
  std::uint32_t source;
  std::uint32_t target;
};

// Every ordered pair keyed by its transition vector: the concatenation of the
// source and target attribute vectors, each coordinate min-max normalised by
// its attribute range. Neighbour queries are exact; above `exact_scan_limit`
// pairs they run on a uniform grid with shell-by-shell expansion.
class PairIndex {
 public:
  PairIndex(std::span<const VariationPool> pools, const AttributeSpace& space,
            std::size_t exact_scan_limit = 20000)
      : dims_(2 * space.dims()) {
    for (std::uint32_t p = 0; p < pools.size(); ++p) {
      const auto& pool = pools[p];
      std::vector<std::vector<double>> norm(pool.size());
      for (std::size_t i = 0; i < pool.size(); ++i) norm[i] = normalise(pool.members[i].attrs, space);
      for (std::uint32_t a = 0; a < pool.size(); ++a) {
        for (std::uint32_t b = 0; b < pool.size(); ++b) {
          if (a == b || pool.members[a].seq == pool.members[b].seq) continue;
          refs_.push_back({p, a, b});
          keys_.insert(keys_.end(), norm[a].begin(), norm[a].end());
          keys_.insert(keys_.end(), norm[b].begin(), norm[b].end());
        }
      }
    }
    if (refs_.size() > exact_scan_limit) build_grid();
  }

  static std::vector<double> normalise(const AttributeVector& attrs, const AttributeSpace& space) {
    space.check(attrs);
    std::vector<double> out(space.dims());
    for (std::size_t j = 0; j < space.dims(); ++j) {
      out[j] = (attrs[j] - space.spec(j).v_min) / space.spec(j).width();
    }
    return out;
  }

  std::size_t size() const noexcept { return refs_.size(); }
  std::size_t dims() const noexcept { return dims_; }
  bool uses_grid() const noexcept { return bins_ > 0; }
  const PairRef& ref(std::size_t i) const { return refs_.at(i); }
  std::span<const double> key(std::size_t i) const { return {keys_.data() + i * dims_, dims_}; }

  double distance2(std::span<const double> q, std::size_t i) const {
    const double* k = keys_.data() + i * dims_;
    double d = 0.0;
    for (std::size_t t = 0; t < dims_; ++t) d += (q[t] - k[t]) * (q[t] - k[t]);
    return d;
  }

  // The min(k, size()) nearest pairs ordered by (distance, index).
  std::vector<std::size_t> nearest(std::span<const double> query, std::size_t k) const {
    if (query.size() != dims_) throw ContractError("k-NN query has the wrong dimension");
    return uses_grid() ? grid_nearest(query, k) : scan_nearest(query, k);
  }

  std::vector<std::size_t> scan_nearest(std::span<const double> query, std::size_t k) const {
    Best best(k);
    for (std::size_t i = 0; i < refs_.size(); ++i) best.offer(distance2(query, i), i);
    return best.sorted();
  }

 private:
  // Bounded max-heap over (distance², index).
  class Best {
   public:
    explicit Best(std::size_t k) : k_(k) {}
    void offer(double d, std::size_t i) {
      if (k_ == 0) return;
      if (heap_.size() < k_) {
        heap_.emplace(d, i);
      } else if (std::pair(d, i) < heap_.top()) {
        heap_.pop();
        heap_.emplace(d, i);
      }
    }
    bool full() const noexcept { return heap_.size() == k_; }
    double worst() const { return heap_.top().first; }
    std::vector<std::size_t> sorted() {
      std::vector<std::pair<double, std::size_t>> v;
      while (!heap_.empty()) {
        v.push_back(heap_.top());
        heap_.pop();
      }
      std::sort(v.begin(), v.end());
      std::vector<std::size_t> out;
      for (const auto& e : v) out.push_back(e.second);
      return out;
    }

   private:
    std::size_t k_;
    std::priority_queue<std::pair<double, std::size_t>> heap_;
  };

  std::size_t cell_coord(double x) const {
    const auto c = static_cast<long>(std::floor(x * static_cast<double>(bins_)));
    return static_cast<std::size_t>(std::clamp<long>(c, 0, static_cast<long>(bins_) - 1));
  }

  void build_grid() {
    bins_ = static_cast<std::size_t>(
        std::max(1.0, std::floor(std::pow(static_cast<double>(refs_.size()) / 8.0, 1.0 / static_cast<double>(dims_)))));
    while (std::pow(static_cast<double>(bins_), static_cast<double>(dims_)) > 4e6 && bins_ > 1) --bins_;
    std::size_t cells = 1;
    for (std::size_t d = 0; d < dims_; ++d) cells *= bins_;
    std::vector<std::size_t> cell_of(refs_.size());
    cell_start_.assign(cells + 1, 0);
    for (std::size_t i = 0; i < refs_.size(); ++i) {
      std::size_t c = 0;
      for (std::size_t d = 0; d < dims_; ++d) c = c * bins_ + cell_coord(keys_[i * dims_ + d]);
      cell_of[i] = c;
      ++cell_start_[c + 1];
    }
    for (std::size_t c = 0; c < cells; ++c) cell_start_[c + 1] += cell_start_[c];
    cell_items_.resize(refs_.size());
    auto fill = cell_start_;
    for (std::size_t i = 0; i < refs_.size(); ++i) cell_items_[fill[cell_of[i]]++] = i;
  }

  std::vector<std::size_t> grid_nearest(std::span<const double> q, std::size_t k) const {
    Best best(std::min(k, refs_.size()));
    std::vector<long> centre(dims_);
    for (std::size_t d = 0; d < dims_; ++d) centre[d] = static_cast<long>(cell_coord(q[d]));
    const double width = 1.0 / static_cast<double>(bins_);
    std::vector<long> off(dims_);
    for (long r = 0; r < static_cast<long>(bins_); ++r) {
      // Visit every cell at Chebyshev distance exactly r from the centre.
      std::fill(off.begin(), off.end(), -r);
      while (true) {
        bool on_shell = false, inside = true;
        std::size_t cell = 0;
        for (std::size_t d = 0; d < dims_; ++d) {
          on_shell |= std::labs(off[d]) == r;
          const long c = centre[d] + off[d];
          if (c < 0 || c >= static_cast<long>(bins_)) {
            inside = false;
            break;
          }
          cell = cell * bins_ + static_cast<std::size_t>(c);
        }
        if (inside && on_shell) {
          for (std::size_t t = cell_start_[cell]; t < cell_start_[cell + 1]; ++t) {
            best.offer(distance2(q, cell_items_[t]), cell_items_[t]);
          }
        }
        std::size_t d = 0;
        while (d < dims_ && off[d] == r) off[d++] = -r;
        if (d == dims_) break;
        ++off[d];
      }
      // Points beyond this shell are more than r cell widths away.
      const double bound = static_cast<double>(r) * width;
      if (best.full() && best.worst() < bound * bound) break;
    }
    return best.sorted();
  }

  std::size_t dims_;
  std::vector<PairRef> refs_;
  std::vector<double> keys_;
  std::size_t bins_ = 0;
  std::vector<std::size_t> cell_start_;
  std::vector<std::size_t> cell_items_;
};

// ---------------------------------------------------------------------------
// Samplers

// Uniform over all ordered pairs: a pool is chosen in proportion to its pair
// count, then an ordered pair of distinct members inside it.
inline EditPair sample_random(std::span<const VariationPool> pools, Rng& rng) {
  std::vector<double> weights;
  for (const auto& p : pools) weights.push_back(static_cast<double>(p.pair_count()));
  if (weights.empty() || std::all_of(weights.begin(), weights.end(), [](double w) { return w == 0.0; })) {
    throw ContractError("sample_random: no pool holds a pair");
  }
  for (int attempt = 0; attempt < 10000; ++attempt) {
    const auto& pool = pools[rng.weighted(weights)];
    const std::size_t a = rng.index(pool.size());
    std::size_t b = rng.index(pool.size() - 1);
    if (b >= a) ++b;
    if (pool.members[a].seq == pool.members[b].seq) continue;
    return EditPair{pool.members[a], pool.members[b], pool.group_id};
  }
  throw ContractError("sample_random: pools contain only duplicate members");
}

// A uniformly random location inside a combo, normalised per attribute.
inline std::vector<double> sample_location(const AttributeSpace& space, std::size_t combo, Rng& rng) {
  const auto c = space.combo(combo);
  std::vector<double> out(space.dims());
  for (std::size_t j = 0; j < space.dims(); ++j) {
    const double v = rng.uniform(c.windows[j].start, c.windows[j].end);
    out[j] = (v - space.spec(j).v_min) / space.spec(j).width();
  }
  return out;
}

// The transition query used by the k-NN sampler: two combos drawn uniformly
// at random, then a uniform location in each.
inline std::vector<double> sample_transition(const AttributeSpace& space, Rng& rng) {
  const std::size_t from = rng.index(space.combo_count());
  const std::size_t to = rng.index(space.combo_count());
  auto q = sample_location(space, from, rng);
  const auto end = sample_location(space, to, rng);
  q.insert(q.end(), end.begin(), end.end());
  return q;
}

inline EditPair materialise(std::span<const VariationPool> pools, const PairRef& r) {
  const auto& pool = pools[r.pool];
  return EditPair{pool.members[r.source], pool.members[r.target], pool.group_id};
}

inline EditPair sample_knn(std::span<const VariationPool> pools, const PairIndex& index,
                           const AttributeSpace& space, std::size_t k, Rng& rng) {
  if (index.size() == 0) throw ContractError("sample_knn: no pairs to sample");
  if (k == 0) throw ConfigError("k must be positive");
  const auto query = sample_transition(space, rng);
  const auto nn = index.nearest(query, k);
  return materialise(pools, index.ref(nn[rng.index(nn.size())]));
}

// Members bucketed by constraint combo for window-uniform sampling.
class ComboBuckets {
 public:
  struct Member {
    std::uint32_t pool, index;
  };

  ComboBuckets(std::span<const VariationPool> pools, const AttributeSpace& space, std::size_t tau)
      : buckets_(space.combo_count()), weights_(window_weights(pools, space, tau)) {
    for (std::uint32_t p = 0; p < pools.size(); ++p) {
      for (std::uint32_t i = 0; i < pools[p].size(); ++i) {
        buckets_[space.combo_of(pools[p].members[i].attrs)].push_back({p, i});
      }
    }
  }

  const std::vector<Member>& bucket(std::size_t combo) const { return buckets_.at(combo); }
  const std::vector<double>& weights() const noexcept { return weights_; }
  std::size_t occupied() const {
    return static_cast<std::size_t>(std::count_if(buckets_.begin(), buckets_.end(),
                                                  [](const auto& b) { return !b.empty(); }));
  }

 private:
  std::vector<std::vector<Member>> buckets_;
  std::vector<double> weights_;
};

inline EditPair sample_window_uniform(std::span<const VariationPool> pools, const ComboBuckets& buckets,
                                      Rng& rng) {
  std::vector<double> source_w, target_w;
  for (std::size_t c = 0; c < buckets.weights().size(); ++c) {
    const bool any = !buckets.bucket(c).empty();
    source_w.push_back(any ? 1.0 : 0.0);
    target_w.push_back(any ? buckets.weights()[c] : 0.0);
  }
  if (buckets.occupied() == 0) throw ContractError("sample_window_uniform: no members");
  for (int attempt = 0; attempt < 10000; ++attempt) {
    const auto& sb = buckets.bucket(rng.weighted(source_w));
    const auto& tb = buckets.bucket(rng.weighted(target_w));
    const auto s = sb[rng.index(sb.size())];
    const auto t = tb[rng.index(tb.size())];
    const auto& src = pools[s.pool].members[s.index];
    const auto& tgt = pools[t.pool].members[t.index];
    if (src.seq == tgt.seq) continue;
    return EditPair{src, tgt, pools[s.pool].group_id};
  }
  throw ContractError("sample_window_uniform: could not draw two distinct members");
}

// Owns the per-mode acceleration structures and draws pairs on demand.
class PairSampler {
 public:
  PairSampler(std::span<const VariationPool> pools, AttributeSpace space, SamplerConfig config)
      : pools_(pools), space_(std::move(space)), config_(config) {
    if (config_.k == 0) throw ConfigError("sampler k must be >= 1");
    if (config_.tau == 0) throw ConfigError("sampler tau must be >= 1");
    if (config_.mode == SamplerMode::knn) {
      index_.emplace(pools_, space_, config_.exact_scan_limit);
      if (index_->size() < config_.k) {
        log::warn("only ", index_->size(), " pairs available for k = ", config_.k,
                  "; using all pairs as the neighbour set");
      }
    } else if (config_.mode == SamplerMode::window_uniform) {
      buckets_.emplace(pools_, space_, config_.tau);
    }
  }

  const AttributeSpace& space() const noexcept { return space_; }
  const SamplerConfig& config() const noexcept { return config_; }
  std::span<const VariationPool> pools() const noexcept { return pools_; }
  const PairIndex* index() const noexcept { return index_ ? &*index_ : nullptr; }

  EditPair sample(Rng& rng) const {
    switch (config_.mode) {
      case SamplerMode::random:
        return sample_random(pools_, rng);
      case SamplerMode::knn:
        return sample_knn(pools_, *index_, space_, config_.k, rng);
      case SamplerMode::window_uniform:
        return sample_window_uniform(pools_, *buckets_, rng);
    }
    throw ContractError("unknown sampler mode");
  }

  const VariationPool* pool_of(const std::string& group_id) const {
    for (const auto& p : pools_) {
      if (p.group_id == group_id) return &p;
    }
    return nullptr;
  }

 private:
  std::span<const VariationPool> pools_;
  AttributeSpace space_;
  SamplerConfig config_;
  std::optional<PairIndex> index_;
  std::optional<ComboBuckets> buckets_;
};

// ---------------------------------------------------------------------------
// Anchors and examples

// Pool members whose reward against the source, under the example's windows,
// is at least that of the target. The target itself always qualifies.
inline std::vector<std::size_t> qualifying_anchors(const TrainingExample& ex, const VariationPool& pool,
                                                   const Scorer& scorer) {
  const double bar = scorer.reward(ex.pair.target, ex.pair.source, ex.windows);
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    if (scorer.reward(pool.members[i], ex.pair.source, ex.windows) >= bar) out.push_back(i);
  }
  return out;
}

inline std::optional<ScoredSequence> sample_anchor(const TrainingExample& ex, const VariationPool& pool,
                                                   const Scorer& scorer, Rng& rng) {
  const auto ok = qualifying_anchors(ex, pool, scorer);
  if (ok.empty()) return ex.pair.target;
  return pool.members[ok[rng.index(ok.size())]];
}

struct BuildOptions {
  std::size_t count = 0;
  WindowStrategy window_strategy = WindowStrategy::target_satisfying;
  bool with_anchor = false;
  WeightMode weight_mode = WeightMode::wbc;
  json meta = json::object();
};

// Draws `count` pairs and turns each into a training example: windows are
// assigned, the reward recomputed, the weight set to the reward (wBC) or 1
// (SFT), and an anchor sampled per example when requested.
inline std::vector<TrainingExample> build_examples(const PairSampler& sampler, const Scorer& scorer,
                                                   const BuildOptions& opts, Rng& rng) {
  std::vector<TrainingExample> out;
  out.reserve(opts.count);
  for (std::size_t n = 0; n < opts.count; ++n) {
    TrainingExample ex;
    ex.pair = sampler.sample(rng);
    ex.windows = assign_windows(ex.pair, sampler.space(), opts.window_strategy, rng);
    ex.reward = scorer.reward(ex.pair.target, ex.pair.source, ex.windows);
    ex.weight = opts.weight_mode == WeightMode::wbc ? ex.reward : 1.0;
    ex.meta = opts.meta;
    if (opts.with_anchor) {
      const auto* pool = sampler.pool_of(ex.pair.group_id);
      if (!pool) throw ContractError("sampled pair from unknown group '" + ex.pair.group_id + "'");
      ex.anchor = sample_anchor(ex, *pool, scorer, rng);
    }
    out.push_back(std::move(ex));
  }
  return out;
}

inline json example_to_json(const TrainingExample& ex, const AttributeSpace& space) {
  json j = json::object();
  if (ex.anchor) j["anchor"] = scored_to_json(*ex.anchor, space);
  j["group_id"] = ex.pair.group_id;
  j["source"] = scored_to_json(ex.pair.source, space);
  j["target"] = scored_to_json(ex.pair.target, space);
  j["windows"] = constraint_to_json(ex.windows);
  j["reward"] = ex.reward;
  j["weight"] = ex.weight;
  j["meta"] = ex.meta;
  return j;
}

inline TrainingExample example_from_json(const json& j, const AttributeSpace& space, Domain domain) {
  static const char* allowed[] = {"anchor", "group_id", "source", "target", "windows", "reward", "weight", "meta"};
  for (const auto& [key, _] : j.items()) {
    if (std::find(std::begin(allowed), std::end(allowed), key) == std::end(allowed)) {
      throw ConfigError("training row has unknown field '" + key + "'");
    }
  }
  TrainingExample ex;
  if (j.contains("anchor")) ex.anchor = scored_from_json(j.at("anchor"), space, domain);
  ex.pair.group_id = j.value("group_id", std::string{});
  ex.pair.source = scored_from_json(j.at("source"), space, domain);
  ex.pair.target = scored_from_json(j.at("target"), space, domain);
  ex.windows = constraint_from_json(j.at("windows"), space);
  ex.reward = j.at("reward").get<double>();
  ex.weight = j.at("weight").get<double>();
  ex.meta = j.value("meta", json::object());
  return ex;
}

inline void export_examples(std::span<const TrainingExample> examples, const AttributeSpace& space,
                            const std::string& path) {
  auto out = open_for_write(path);
  out << dump_line(header_line("macs-train")) << '\n';
  for (const auto& ex : examples) out << dump_line(example_to_json(ex, space)) << '\n';
  check_written(out, path);
}

inline std::vector<TrainingExample> import_examples(const std::string& path, const AttributeSpace& space,
                                                    Domain domain) {
  std::vector<TrainingExample> out;
  read_jsonl(path, "macs-train", [&](const json& j, std::size_t) {
    out.push_back(example_from_json(j, space, domain));
  });
  return out;
}

// ---------------------------------------------------------------------------
// Diagnostics: histogram of attribute-change vectors of sampled pairs over a
// grid spanning [-(range width), +(range width)] on the first two attributes.

struct DeltaHistogram {
  std::size_t bins = 10;
  std::vector<std::size_t> counts;  // row-major, first attribute is the row
  std::size_t total = 0;

  std::size_t occupied() const {
    return static_cast<std::size_t>(std::count_if(counts.begin(), counts.end(), [](auto c) { return c > 0; }));
  }

  double entropy() const {
    double h = 0.0;
    for (auto c : counts) {
      if (c == 0) continue;
      const double p = static_cast<double>(c) / static_cast<double>(total);
      h -= p * std::log(p);
    }
    return h;
  }
};

inline DeltaHistogram delta_histogram(const PairSampler& sampler, std::size_t draws, Rng& rng,
                                      std::size_t bins = 10) {
  const auto& space = sampler.space();
  if (space.dims() < 2) throw ConfigError("delta histogram needs at least two attributes");
  DeltaHistogram h{bins, std::vector<std::size_t>(bins * bins, 0), 0};
  auto bin = [&](double delta, const AttributeSpec& s) {
    const double x = (delta + s.width()) / (2.0 * s.width());
    return static_cast<std::size_t>(std::clamp(std::floor(x * static_cast<double>(bins)), 0.0,
                                               static_cast<double>(bins - 1)));
  };
  for (std::size_t n = 0; n < draws; ++n) {
    const auto p = sampler.sample(rng);
    const auto r = bin(p.target.attrs[0] - p.source.attrs[0], space.spec(0));
    const auto c = bin(p.target.attrs[1] - p.source.attrs[1], space.spec(1));
    ++h.counts[r * bins + c];
    ++h.total;
  }
  return h;
}

}  // namespace macs
