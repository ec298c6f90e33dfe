#pragma once

// Attribute evaluators. An evaluator maps a sequence to a scalar in a declared
// range; the batch call is the primitive. The toy evaluators here are
// deterministic desk-scale stand-ins for trained regressors.

#include <array>
#include <map>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "macs/attribute.hpp"
#include "macs/rng.hpp"
#include "macs/sequence.hpp"

namespace macs {

enum class EvaluatorKind { unary, pairwise };

struct EvaluatorSpec {
  std::string id;
  EvaluatorKind kind = EvaluatorKind::unary;
  AttributeSpec spec;
  bool deterministic = true;
};

// ---------------------------------------------------------------------------
// Toy scoring functions

using Lexicon = std::map<std::string, double, std::less<>>;

inline const Lexicon& default_lexicon() {
  static const Lexicon lex = {
      {"ace", 1.0},        {"good", 1.0},         {"great", 1.0},
      {"superb", 1.0},     {"excellent", 1.0},    {"magnificent", 1.0},
      {"extraordinary", 1.0},
      {"fine", 0.5},       {"pleasant", 0.5},
      {"meh", -0.5},       {"mediocre", -0.5},
      {"bad", -1.0},       {"vile", -1.0},        {"awful", -1.0},
      {"horrid", -1.0},    {"dreadful", -1.0},    {"disgusting", -1.0},
      {"disappointing", -1.0},
  };
  return lex;
}

inline std::vector<std::string> nonempty_words(std::string_view seq, const char* who) {
  auto words = split_words(seq);
  if (words.empty()) throw InputError(std::string(who) + ": empty sequence");
  return words;
}

// Mean lexicon polarity over all tokens (tokens absent from the lexicon
// count as 0), mapped from [-1, 1] onto [1, 5] as 3 + 2μ.
inline double toy_sentiment(std::string_view seq, const Lexicon& lexicon = default_lexicon()) {
  const auto words = nonempty_words(seq, "toy_sentiment");
  double sum = 0.0;
  for (const auto& w : words) {
    if (auto it = lexicon.find(w); it != lexicon.end()) sum += std::clamp(it->second, -1.0, 1.0);
  }
  const double mu = sum / static_cast<double>(words.size());
  return 3.0 + 2.0 * mu;
}

// Mean word length mapped affinely: length 2 -> -2, length 10 -> 2, clamped.
inline double toy_complexity(std::string_view seq) {
  const auto words = nonempty_words(seq, "toy_complexity");
  double total = 0.0;
  for (const auto& w : words) total += static_cast<double>(w.size());
  const double mean_len = total / static_cast<double>(words.size());
  return std::clamp(-2.0 + 4.0 * (mean_len - 2.0) / 8.0, -2.0, 2.0);
}

// Token-multiset Jaccard similarity: Σ min(count) / Σ max(count).
inline double toy_similarity(std::string_view a, std::string_view b) {
  const auto wa = nonempty_words(a, "toy_similarity");
  const auto wb = nonempty_words(b, "toy_similarity");
  std::map<std::string, std::pair<int, int>, std::less<>> counts;
  for (const auto& w : wa) ++counts[w].first;
  for (const auto& w : wb) ++counts[w].second;
  long inter = 0, uni = 0;
  for (const auto& [w, c] : counts) {
    inter += std::min(c.first, c.second);
    uni += std::max(c.first, c.second);
  }
  return static_cast<double>(inter) / static_cast<double>(uni);
}

// 1 minus the fraction of adjacent word pairs that repeat the same word.
inline double toy_fluency(std::string_view seq) {
  const auto words = nonempty_words(seq, "toy_fluency");
  if (words.size() < 2) return 1.0;
  std::size_t repeats = 0;
  for (std::size_t i = 1; i < words.size(); ++i) repeats += words[i] == words[i - 1];
  return 1.0 - static_cast<double>(repeats) / static_cast<double>(words.size() - 1);
}

// Synthetic additive-plus-epistatic fitness landscape over fixed-length
// amino-acid sequences. The wild-type letter at every position has a zero
// substitution entry, so the wild type scores exactly `base`. Each coupling
// (p, q, w) adds w when both p and q differ from the wild type.
struct LandscapeParams {
  std::uint64_t seed = 0;
  std::size_t coupling_count = 0;
  double base = 0.0;
  double substitution_mean = 0.0;
  double substitution_std = 1.0;
  double coupling_std = 0.5;
};

class ProteinLandscape {
 public:
  struct Coupling {
    std::size_t p, q;
    double weight;
  };

  ProteinLandscape(std::string wild_type, LandscapeParams params)
      : wild_type_(std::move(wild_type)), params_(params) {
    if (wild_type_.empty() || !valid_sequence(wild_type_, Domain::protein)) {
      throw ConfigError("landscape wild type must be a nonempty amino-acid sequence");
    }
    Rng rng(params_.seed);
    table_.resize(wild_type_.size());
    for (std::size_t pos = 0; pos < wild_type_.size(); ++pos) {
      for (std::size_t a = 0; a < kAminoAcids.size(); ++a) {
        const double draw = rng.normal(params_.substitution_mean, params_.substitution_std);
        table_[pos][a] = kAminoAcids[a] == wild_type_[pos] ? 0.0 : draw;
      }
    }
    if (wild_type_.size() >= 2) {
      for (std::size_t i = 0; i < params_.coupling_count; ++i) {
        std::size_t p = rng.index(wild_type_.size());
        std::size_t q = rng.index(wild_type_.size() - 1);
        if (q >= p) ++q;
        if (p > q) std::swap(p, q);
        couplings_.push_back({p, q, rng.normal(0.0, params_.coupling_std)});
      }
    }
  }

  const std::string& wild_type() const noexcept { return wild_type_; }
  std::size_t length() const noexcept { return wild_type_.size(); }
  const LandscapeParams& params() const noexcept { return params_; }
  const std::vector<Coupling>& couplings() const noexcept { return couplings_; }

  double substitution(std::size_t pos, char aa) const { return table_.at(pos)[aa_index(aa)]; }

  // Unclamped value; summation order is fixed (positions, then couplings).
  double value(std::string_view seq) const {
    check(seq);
    double v = params_.base;
    for (std::size_t pos = 0; pos < seq.size(); ++pos) v += table_[pos][aa_index(seq[pos])];
    for (const auto& c : couplings_) {
      if (seq[c.p] != wild_type_[c.p] && seq[c.q] != wild_type_[c.q]) v += c.weight;
    }
    return v;
  }

  void check(std::string_view seq) const {
    if (seq.size() != wild_type_.size()) {
      throw InputError("protein sequence length " + std::to_string(seq.size()) +
                       " differs from landscape length " + std::to_string(wild_type_.size()));
    }
    for (char c : seq) {
      if (!is_amino_acid(c)) throw InputError(std::string("invalid amino-acid letter '") + c + "'");
    }
  }

  static std::size_t aa_index(char aa) {
    const auto i = kAminoAcids.find(aa);
    if (i == std::string_view::npos) throw InputError(std::string("invalid amino-acid letter '") + aa + "'");
    return i;
  }

 private:
  std::string wild_type_;
  LandscapeParams params_;
  std::vector<std::array<double, 20>> table_;
  std::vector<Coupling> couplings_;
};

// ---------------------------------------------------------------------------
// Evaluator objects

class Evaluator {
 public:
  explicit Evaluator(EvaluatorSpec spec) : spec_(std::move(spec)) {}
  virtual ~Evaluator() = default;

  const EvaluatorSpec& spec() const noexcept { return spec_; }
  const std::string& id() const noexcept { return spec_.id; }

  // Raw values, one per input, before the range clamp.
  virtual std::vector<double> evaluate_raw(std::span<const std::string> seqs) const = 0;

 private:
  EvaluatorSpec spec_;
};

class PairwiseEvaluator {
 public:
  explicit PairwiseEvaluator(EvaluatorSpec spec) : spec_(std::move(spec)) {
    spec_.kind = EvaluatorKind::pairwise;
    if (spec_.spec.v_min != 0.0 || spec_.spec.v_max != 1.0) {
      throw ConfigError("pairwise evaluator '" + spec_.id + "' must report on [0, 1]");
    }
  }
  virtual ~PairwiseEvaluator() = default;

  const EvaluatorSpec& spec() const noexcept { return spec_; }
  const std::string& id() const noexcept { return spec_.id; }
  virtual double evaluate_raw(std::string_view a, std::string_view b) const = 0;

 private:
  EvaluatorSpec spec_;
};

// Adapts a plain function to the evaluator interface.
template <typename Fn>
class FunctionEvaluator final : public Evaluator {
 public:
  FunctionEvaluator(EvaluatorSpec spec, Fn fn) : Evaluator(std::move(spec)), fn_(std::move(fn)) {}
  std::vector<double> evaluate_raw(std::span<const std::string> seqs) const override {
    std::vector<double> out;
    out.reserve(seqs.size());
    for (const auto& s : seqs) {
      if (s.empty()) throw InputError(id() + ": empty sequence");
      out.push_back(fn_(s));
    }
    return out;
  }

 private:
  Fn fn_;
};

template <typename Fn>
std::shared_ptr<const Evaluator> make_evaluator(std::string id, AttributeSpec spec, Fn fn) {
  return std::make_shared<FunctionEvaluator<Fn>>(
      EvaluatorSpec{std::move(id), EvaluatorKind::unary, std::move(spec), true}, std::move(fn));
}

inline std::shared_ptr<const Evaluator> make_toy_sentiment(AttributeSpec spec,
                                                           Lexicon lexicon = default_lexicon()) {
  return make_evaluator("toy-sentiment", std::move(spec),
                        [lex = std::move(lexicon)](const std::string& s) { return toy_sentiment(s, lex); });
}

inline std::shared_ptr<const Evaluator> make_toy_complexity(AttributeSpec spec) {
  return make_evaluator("toy-complexity", std::move(spec),
                        [](const std::string& s) { return toy_complexity(s); });
}

inline std::shared_ptr<const Evaluator> make_toy_fluency() {
  return make_evaluator("toy-fluency", AttributeSpec{"fluency", 0.0, 1.0},
                        [](const std::string& s) { return toy_fluency(s); });
}

inline std::shared_ptr<const Evaluator> make_toy_protein(AttributeSpec spec,
                                                         std::shared_ptr<const ProteinLandscape> land) {
  std::string id = "toy-protein/" + spec.id + "/" + std::to_string(land->params().seed);
  return make_evaluator(std::move(id), std::move(spec),
                        [land = std::move(land)](const std::string& s) { return land->value(s); });
}

class ToySimilarity final : public PairwiseEvaluator {
 public:
  ToySimilarity()
      : PairwiseEvaluator({"toy-similarity", EvaluatorKind::pairwise, {"similarity", 0.0, 1.0}, true}) {}
  double evaluate_raw(std::string_view a, std::string_view b) const override {
    return toy_similarity(a, b);
  }
};

// (evaluator id, sequence digest) -> value. Entries remember their sequence so
// a digest collision can never surface a value for another sequence.
class EvaluationCache {
 public:
  std::optional<double> find(const std::string& evaluator_id, const std::string& seq) const {
    std::shared_lock lock(mu_);
    auto it = map_.find(key(evaluator_id, seq));
    if (it == map_.end() || it->second.seq != seq) return std::nullopt;
    ++hits_;
    return it->second.value;
  }

  void put(const std::string& evaluator_id, const std::string& seq, double value) {
    std::unique_lock lock(mu_);
    map_[key(evaluator_id, seq)] = Entry{seq, value};
  }

  std::size_t size() const {
    std::shared_lock lock(mu_);
    return map_.size();
  }
  std::size_t hits() const noexcept { return hits_.load(); }

 private:
  struct Entry {
    std::string seq;
    double value;
  };
  static std::string key(const std::string& id, const std::string& seq) {
    return id + '\x1f' + digest_hex(seq);
  }

  mutable std::shared_mutex mu_;
  std::unordered_map<std::string, Entry> map_;
  mutable std::atomic<std::size_t> hits_{0};
};

// Batch evaluation with the range clamp applied and deterministic results
// cached. Cached and uncached paths return bit-identical values.
inline std::vector<double> evaluate(const Evaluator& ev, std::span<const std::string> seqs,
                                    EvaluationCache* cache = nullptr) {
  std::vector<double> out(seqs.size());
  std::vector<std::size_t> missing;
  std::vector<std::string> todo;
  for (std::size_t i = 0; i < seqs.size(); ++i) {
    if (seqs[i].empty()) throw InputError(ev.id() + ": empty sequence");
    if (cache && ev.spec().deterministic) {
      if (auto hit = cache->find(ev.id(), seqs[i])) {
        out[i] = *hit;
        continue;
      }
    }
    missing.push_back(i);
    todo.push_back(seqs[i]);
  }
  if (!todo.empty()) {
    auto raw = ev.evaluate_raw(todo);
    if (raw.size() != todo.size()) {
      throw ProtocolError(ev.id() + ": evaluator returned " + std::to_string(raw.size()) +
                          " values for " + std::to_string(todo.size()) + " sequences");
    }
    for (std::size_t k = 0; k < todo.size(); ++k) {
      const double v = clamp_to_range(raw[k], ev.spec().spec);
      out[missing[k]] = v;
      if (cache && ev.spec().deterministic) cache->put(ev.id(), todo[k], v);
    }
  }
  return out;
}

inline double evaluate(const Evaluator& ev, const std::string& seq, EvaluationCache* cache = nullptr) {
  return evaluate(ev, std::span<const std::string>(&seq, 1), cache).front();
}

inline double evaluate_pair(const PairwiseEvaluator& ev, std::string_view a, std::string_view b) {
  if (a.empty() || b.empty()) throw InputError(ev.id() + ": empty sequence");
  return clamp_to_range(ev.evaluate_raw(a, b), ev.spec().spec);
}

// A bonus component added raw to the reward: either a unary score of the new
// sequence (fluency) or a pairwise score of (new, old) (similarity).
struct Bonus {
  std::string name;
  std::shared_ptr<const Evaluator> unary;
  std::shared_ptr<const PairwiseEvaluator> pairwise;
};

// Everything needed to score sequences and compute rewards for one task.
class Scorer {
 public:
  Scorer(AttributeSpace space, std::vector<std::shared_ptr<const Evaluator>> evaluators,
         std::vector<Bonus> bonuses = {}, Domain domain = Domain::text,
         std::shared_ptr<EvaluationCache> cache = std::make_shared<EvaluationCache>())
      : space_(std::move(space)),
        evaluators_(std::move(evaluators)),
        bonuses_(std::move(bonuses)),
        domain_(domain),
        cache_(std::move(cache)) {
    if (evaluators_.size() != space_.dims()) {
      throw ConfigError("need exactly one evaluator per attribute");
    }
    for (std::size_t j = 0; j < evaluators_.size(); ++j) {
      if (!evaluators_[j]) throw ConfigError("missing evaluator for '" + space_.spec(j).id + "'");
      const auto& s = evaluators_[j]->spec().spec;
      if (s.v_min != space_.spec(j).v_min || s.v_max != space_.spec(j).v_max) {
        throw ConfigError("evaluator range does not match attribute '" + space_.spec(j).id + "'");
      }
    }
    for (const auto& b : bonuses_) {
      if (static_cast<bool>(b.unary) == static_cast<bool>(b.pairwise)) {
        throw ConfigError("bonus '" + b.name + "' needs exactly one evaluator");
      }
      if (b.unary && (b.unary->spec().spec.v_min != 0.0 || b.unary->spec().spec.v_max != 1.0)) {
        throw ConfigError("bonus '" + b.name + "' must report on [0, 1]");
      }
    }
  }

  const AttributeSpace& space() const noexcept { return space_; }
  Domain domain() const noexcept { return domain_; }
  const std::vector<Bonus>& bonuses() const noexcept { return bonuses_; }
  EvaluationCache* cache() const noexcept { return cache_.get(); }

  std::vector<ScoredSequence> score(std::span<const std::string> seqs) const {
    std::vector<std::vector<double>> columns;
    columns.reserve(evaluators_.size());
    for (const auto& ev : evaluators_) columns.push_back(evaluate(*ev, seqs, cache_.get()));
    std::vector<ScoredSequence> out(seqs.size());
    for (std::size_t i = 0; i < seqs.size(); ++i) {
      out[i].seq = seqs[i];
      out[i].domain = domain_;
      out[i].attrs.values.resize(evaluators_.size());
      for (std::size_t j = 0; j < evaluators_.size(); ++j) out[i].attrs.values[j] = columns[j][i];
    }
    return out;
  }

  ScoredSequence score(const std::string& seq) const {
    return std::move(score(std::span<const std::string>(&seq, 1)).front());
  }

  std::vector<double> bonus_values(const ScoredSequence& fresh, const ScoredSequence& old) const {
    std::vector<double> out;
    out.reserve(bonuses_.size());
    for (const auto& b : bonuses_) {
      out.push_back(b.unary ? evaluate(*b.unary, fresh.seq, cache_.get())
                            : evaluate_pair(*b.pairwise, fresh.seq, old.seq));
    }
    return out;
  }

  double reward(const ScoredSequence& fresh, const ScoredSequence& old,
                const MultiConstraint& constraint) const {
    const auto bonus = bonus_values(fresh, old);
    return total_reward(fresh.attrs, old.attrs, constraint, space_.specs(), bonus);
  }

  // Looks up a bonus value by name (for reporting fluency / similarity).
  std::optional<double> bonus(std::string_view name, const ScoredSequence& fresh,
                              const ScoredSequence& old) const {
    for (const auto& b : bonuses_) {
      if (b.name != name) continue;
      return b.unary ? evaluate(*b.unary, fresh.seq, cache_.get())
                     : evaluate_pair(*b.pairwise, fresh.seq, old.seq);
    }
    return std::nullopt;
  }

  bool has_bonus(std::string_view name) const {
    return std::any_of(bonuses_.begin(), bonuses_.end(), [&](const Bonus& b) { return b.name == name; });
  }

 private:
  AttributeSpace space_;
  std::vector<std::shared_ptr<const Evaluator>> evaluators_;
  std::vector<Bonus> bonuses_;
  Domain domain_;
  std::shared_ptr<EvaluationCache> cache_;
};

inline std::vector<Bonus> style_bonuses() {
  return {Bonus{"fluency", make_toy_fluency(), nullptr},
          Bonus{"similarity", nullptr, std::make_shared<ToySimilarity>()}};
}

}  // namespace macs
