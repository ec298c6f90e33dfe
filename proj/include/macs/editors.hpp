#pragma once

// Editor contract and the built-in baseline editors.
//
// An editor receives the conditioning tuple (context, current sequence and its
// attributes, target windows, optional anchor) and returns n candidate
// rewrites. Built-in editors are deterministic given the request seed.

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "macs/attribute.hpp"
#include "macs/editpair.hpp"
#include "macs/errors.hpp"
#include "macs/log.hpp"
#include "macs/metrics.hpp"
#include "macs/rng.hpp"
#include "macs/sequence.hpp"

namespace macs {

struct EditRequest {
  std::string episode_id;
  std::string context;
  std::optional<ScoredSequence> anchor;
  ScoredSequence current;
  MultiConstraint target;
  std::size_t n_candidates = 1;
  std::uint64_t seed = 0;
};

inline void validate(const EditRequest& r) {
  if (r.n_candidates == 0) throw ContractError("edit request needs n_candidates >= 1");
  if (r.current.seq.empty()) throw ContractError("edit request has an empty current sequence");
}

class Editor {
 public:
  virtual ~Editor() = default;
  // Exactly request.n_candidates strings. Validity against the domain is
  // checked by the caller.
  virtual std::vector<std::string> propose(const EditRequest& request) = 0;
};

// Makes one editor instance per worker thread.
using EditorFactory = std::function<std::unique_ptr<Editor>()>;

// ---------------------------------------------------------------------------
// Pool oracle: a stand-in for a trained editor that knows the variation pool
// of the current sequence.

class PoolOracleEditor final : public Editor {
 public:
  PoolOracleEditor(std::span<const VariationPool> pools, AttributeSpace space, double p)
      : pools_(pools), space_(std::move(space)), p_(p) {
    if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("pool-oracle p must lie in [0, 1]");
    for (std::size_t g = 0; g < pools_.size(); ++g) {
      for (const auto& m : pools_[g].members) by_seq_.emplace(m.seq, g);
    }
  }

  const VariationPool& pool_for(const std::string& seq) const {
    const auto it = by_seq_.find(seq);
    if (it == by_seq_.end()) throw InputError("pool-oracle: sequence is not a member of any pool");
    return pools_[it->second];
  }

  // Members whose satisfaction sum under `target` beats that of `current`.
  std::vector<std::size_t> improving(const VariationPool& pool, const ScoredSequence& current,
                                     const MultiConstraint& target) const {
    const double bar = satisfaction_sum(current.attrs, target, space_.specs());
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < pool.size(); ++i) {
      if (satisfaction_sum(pool.members[i].attrs, target, space_.specs()) > bar) out.push_back(i);
    }
    return out;
  }

  std::vector<std::string> propose(const EditRequest& r) override {
    validate(r);
    const auto& pool = pool_for(r.current.seq);
    const auto better = improving(pool, r.current, r.target);
    Rng rng(r.seed);
    std::vector<std::string> out;
    out.reserve(r.n_candidates);
    for (std::size_t n = 0; n < r.n_candidates; ++n) {
      if (rng.bernoulli(p_) && !better.empty()) {
        out.push_back(pool.members[better[rng.index(better.size())]].seq);
      } else {
        out.push_back(pool.members[rng.index(pool.size())].seq);
      }
    }
    return out;
  }

 private:
  std::span<const VariationPool> pools_;
  AttributeSpace space_;
  double p_;
  std::unordered_map<std::string, std::size_t> by_seq_;
};

// ---------------------------------------------------------------------------
// Random mutation: substitutions whose count follows a reference histogram.

using DistanceHistogram = std::map<std::size_t, double>;

inline void validate(const DistanceHistogram& h) {
  if (h.empty()) throw ConfigError("mutation histogram is empty");
  double sum = 0.0;
  for (const auto& [d, p] : h) {
    if (!(p >= 0.0)) throw ConfigError("mutation histogram has a negative mass");
    sum += p;
  }
  if (std::fabs(sum - 1.0) > 1e-9) throw ConfigError("mutation histogram must sum to 1");
}

// Distribution of edit distances from `origin` over `reference`. Members at
// distance 0 are skipped; an empty result falls back to {1: 1}.
inline DistanceHistogram distance_histogram(std::span<const std::string> reference, const std::string& origin) {
  std::map<std::size_t, std::size_t> counts;
  std::size_t total = 0;
  for (const auto& s : reference) {
    const auto d = levenshtein(s, origin);
    if (d == 0) continue;
    ++counts[d];
    ++total;
  }
  DistanceHistogram h;
  if (total == 0) {
    log::info("no reference sequences away from the origin; mutation histogram defaults to {1: 1}");
    h[1] = 1.0;
    return h;
  }
  for (const auto& [d, c] : counts) h[d] = static_cast<double>(c) / static_cast<double>(total);
  return h;
}

// Applies `count` substitutions at distinct uniform positions, each to a
// uniformly chosen different amino acid.
inline std::string mutate(std::string seq, std::size_t count, Rng& rng) {
  count = std::min(count, seq.size());
  std::vector<std::size_t> pos(seq.size());
  for (std::size_t i = 0; i < pos.size(); ++i) pos[i] = i;
  for (std::size_t i = 0; i < count; ++i) {
    std::swap(pos[i], pos[i + rng.index(pos.size() - i)]);
    char& c = seq[pos[i]];
    const auto old = kAminoAcids.find(c);
    // Uniform over the 19 letters other than the current one.
    std::size_t k = rng.index(old == std::string_view::npos ? kAminoAcids.size() : kAminoAcids.size() - 1);
    if (old != std::string_view::npos && k >= old) ++k;
    c = kAminoAcids[k];
  }
  return seq;
}

class RandomMutationEditor final : public Editor {
 public:
  explicit RandomMutationEditor(DistanceHistogram histogram) : hist_(std::move(histogram)) {
    validate(hist_);
    for (const auto& [d, p] : hist_) {
      distances_.push_back(d);
      weights_.push_back(p);
    }
  }

  const DistanceHistogram& histogram() const noexcept { return hist_; }

  std::vector<std::string> propose(const EditRequest& r) override {
    validate(r);
    Rng rng(r.seed);
    std::vector<std::string> out;
    out.reserve(r.n_candidates);
    for (std::size_t n = 0; n < r.n_candidates; ++n) {
      out.push_back(mutate(r.current.seq, distances_[rng.weighted(weights_)], rng));
    }
    return out;
  }

 private:
  DistanceHistogram hist_;
  std::vector<std::size_t> distances_;
  std::vector<double> weights_;
};

// ---------------------------------------------------------------------------
// Recombination

struct Offspring {
  std::string first, second;
};

// Per position, with probability kappa the two letters are swapped between
// the offspring.
inline Offspring recombine(const std::string& a, const std::string& b, double kappa, Rng& rng) {
  if (a.size() != b.size()) throw InputError("recombine: parents differ in length");
  if (!(kappa >= 0.0 && kappa <= 1.0)) throw ConfigError("recombination rate must lie in [0, 1]");
  Offspring o{a, b};
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (rng.bernoulli(kappa)) std::swap(o.first[i], o.second[i]);
  }
  return o;
}

// Draws parent pairs from a seeded shuffle of the seed set, reshuffling when
// the set is exhausted, and yields both offspring of every recombination.
class RecombineStream {
 public:
  RecombineStream(std::vector<std::string> seeds, double kappa, std::uint64_t seed)
      : seeds_(std::move(seeds)), kappa_(kappa), rng_(seed) {
    if (seeds_.empty()) throw ConfigError("recombine needs a nonempty seed set");
    if (!(kappa >= 0.0 && kappa <= 1.0)) throw ConfigError("recombination rate must lie in [0, 1]");
    reshuffle();
  }

  std::string next() {
    if (pending_) {
      auto s = std::move(*pending_);
      pending_.reset();
      return s;
    }
    const auto& a = draw();
    const auto& b = draw();
    auto o = recombine(a, b, kappa_, rng_);
    pending_ = std::move(o.second);
    return std::move(o.first);
  }

 private:
  const std::string& draw() {
    if (cursor_ == order_.size()) reshuffle();
    return seeds_[order_[cursor_++]];
  }

  void reshuffle() {
    order_.resize(seeds_.size());
    for (std::size_t i = 0; i < order_.size(); ++i) order_[i] = i;
    rng_.shuffle(order_);
    cursor_ = 0;
  }

  std::vector<std::string> seeds_;
  double kappa_;
  Rng rng_;
  std::vector<std::size_t> order_;
  std::size_t cursor_ = 0;
  std::optional<std::string> pending_;
};

// Recombination behind the editor interface. The request is ignored apart
// from n_candidates: recombination does not condition on the current state.
class RecombineEditor final : public Editor {
 public:
  RecombineEditor(std::vector<std::string> seeds, double kappa, std::uint64_t seed)
      : stream_(std::move(seeds), kappa, seed) {}

  std::vector<std::string> propose(const EditRequest& r) override {
    validate(r);
    std::vector<std::string> out;
    for (std::size_t n = 0; n < r.n_candidates; ++n) out.push_back(stream_.next());
    return out;
  }

 private:
  RecombineStream stream_;
};

// Returns the current sequence unchanged; useful as a null editor.
class IdentityEditor final : public Editor {
 public:
  std::vector<std::string> propose(const EditRequest& r) override {
    validate(r);
    return std::vector<std::string>(r.n_candidates, r.current.seq);
  }
};

}  // namespace macs
