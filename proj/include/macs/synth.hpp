#pragma once

// Desk-scale task fixtures.
//
// Style pools imitate per-attribute variation sets: each group is an original
// review plus 25 variations, 5 aimed at each window of one attribute while the
// other attribute only drifts a little. Edit pairs inside a group therefore
// mostly move along one axis, which is the skew the k-NN sampler corrects.
//
// Protein pools are a wild type plus substitution mutants whose mutation count
// is geometrically distributed, so most mutants sit close to the wild type.

#include <set>
#include <string>
#include <vector>

#include "macs/editpair.hpp"
#include "macs/evaluators.hpp"
#include "macs/rng.hpp"

namespace macs::synth {

struct StyleOptions {
  std::size_t groups = 250;
  std::size_t variations_per_window = 5;
  std::size_t words = 12;
  double drift_std = 0.1;         // secondary-attribute drift of a variation
  double mixed_fraction = 0.005;  // variations that retarget both attributes
};

struct ProteinOptions {
  std::size_t length = 48;
  std::size_t mutants = 2000;
  double extra_mutation_p = 0.55;  // P(one more substitution), geometric tail
  std::size_t max_mutations = 12;
  std::size_t couplings = 40;
};

namespace detail {

struct Word {
  std::string text;
  double polarity;
};

inline const std::vector<std::string>& neutral_words() {
  static const std::vector<std::string> words = {
      "a", "i", "an", "it", "we", "so", "to", "of", "at", "is", "on", "my", "the", "and", "was",
      "our", "food", "menu", "lunch", "table", "staff", "place", "dinner", "coffee", "service",
      "waiter", "evening", "kitchen", "friends", "portions", "dessert", "appetizer", "ambience",
      "reservation", "atmosphere", "restaurant", "experience", "conversation", "presentation",
      "neighborhood", "establishment", "particularly"};
  return words;
}

// Polar words from the built-in lexicon with a polarity of exactly +1 or -1.
inline std::vector<std::string> polar_words(double sign) {
  std::vector<std::string> out;
  for (const auto& [w, p] : default_lexicon()) {
    if (p == sign) out.push_back(w);
  }
  return out;
}

// Picks a word from `pool` whose length approaches `desired`: the two closest
// lengths are candidates and one is chosen at random.
inline const std::string& pick_by_length(const std::vector<std::string>& pool, double desired, Rng& rng) {
  std::vector<std::size_t> order(pool.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::fabs(static_cast<double>(pool[a].size()) - desired) <
           std::fabs(static_cast<double>(pool[b].size()) - desired);
  });
  return pool[order[rng.index(std::min<std::size_t>(2, order.size()))]];
}

}  // namespace detail

// A sentence of `words` tokens aimed at (sentiment, complexity) under the toy
// evaluators: the count of polar words sets the mean polarity, word lengths
// are chosen greedily to reach the target mean length.
inline std::string style_text(double sentiment, double complexity, std::size_t words, Rng& rng) {
  const double mu = std::clamp((sentiment - 3.0) / 2.0, -1.0, 1.0);
  const auto polar_count = static_cast<std::size_t>(std::lround(std::fabs(mu) * static_cast<double>(words)));
  const auto polar = detail::polar_words(mu >= 0 ? 1.0 : -1.0);
  const double target_len = 2.0 + (complexity + 2.0) * 2.0;
  std::vector<bool> is_polar(words, false);
  for (std::size_t i = 0; i < polar_count; ++i) is_polar[i] = true;
  rng.shuffle(is_polar);
  std::vector<std::string> out;
  double used = 0.0;
  for (std::size_t i = 0; i < words; ++i) {
    const double desired = (target_len * static_cast<double>(words) - used) / static_cast<double>(words - i);
    const auto& w = detail::pick_by_length(is_polar[i] ? polar : detail::neutral_words(), desired, rng);
    used += static_cast<double>(w.size());
    out.push_back(w);
  }
  return join_words(out);
}

inline std::vector<VariationPool> style_pools(const Scorer& scorer, std::uint64_t seed,
                                              const StyleOptions& opt = {}) {
  const auto& space = scorer.space();
  if (space.dims() != 2) throw ConfigError("style synthesis expects two attributes");
  Rng rng(derive_seed(seed, "synth/style"));
  std::vector<VariationPool> pools;
  for (std::size_t g = 0; g < opt.groups; ++g) {
    const std::size_t primary = g % 2;  // alternate sentiment / complexity groups
    const std::size_t secondary = 1 - primary;
    std::vector<double> origin(2);
    for (std::size_t j = 0; j < 2; ++j) origin[j] = rng.uniform(space.spec(j).v_min, space.spec(j).v_max);
    VariationPool pool;
    char id[32];
    std::snprintf(id, sizeof id, "review-%04zu", g);
    pool.group_id = id;
    std::vector<std::string> texts = {style_text(origin[0], origin[1], opt.words, rng)};
    pool.origins.push_back("original");
    const auto& part = space.partition(primary);
    for (const auto& w : part.windows) {
      for (std::size_t v = 0; v < opt.variations_per_window; ++v) {
        std::vector<double> t = origin;
        if (rng.bernoulli(opt.mixed_fraction)) {
          for (std::size_t j = 0; j < 2; ++j) t[j] = rng.uniform(space.spec(j).v_min, space.spec(j).v_max);
        } else {
          t[primary] = rng.uniform(w.start, w.end);
          const auto& s = space.spec(secondary);
          t[secondary] = std::clamp(origin[secondary] + rng.normal(0.0, opt.drift_std), s.v_min, s.v_max);
        }
        texts.push_back(style_text(t[0], t[1], opt.words, rng));
        pool.origins.push_back("variation");
      }
    }
    pool.members = scorer.score(texts);
    pools.push_back(std::move(pool));
  }
  return pools;
}

inline std::string random_protein(std::size_t length, Rng& rng) {
  std::string s(length, 'A');
  for (auto& c : s) c = kAminoAcids[rng.index(kAminoAcids.size())];
  return s;
}

// Applies `count` substitutions at distinct positions, each to a different
// letter than the one it replaces.
inline std::string substitute(std::string seq, std::size_t count, Rng& rng) {
  if (count > seq.size()) throw ContractError("more substitutions than positions");
  std::vector<std::size_t> pos(seq.size());
  for (std::size_t i = 0; i < pos.size(); ++i) pos[i] = i;
  for (std::size_t i = 0; i < count; ++i) {
    std::swap(pos[i], pos[i + rng.index(pos.size() - i)]);
    const char old = seq[pos[i]];
    char next = old;
    while (next == old) next = kAminoAcids[rng.index(kAminoAcids.size())];
    seq[pos[i]] = next;
  }
  return seq;
}

struct ProteinTask {
  std::string wild_type;
  LandscapeParams fluorescence;
  LandscapeParams ddg;
};

inline ProteinTask protein_task(std::uint64_t seed, const ProteinOptions& opt = {}) {
  Rng rng(derive_seed(seed, "synth/protein/wild-type"));
  ProteinTask t;
  t.wild_type = random_protein(opt.length, rng);
  t.fluorescence = LandscapeParams{derive_seed(seed, "landscape/fluorescence"), opt.couplings, 3.72, -0.12, 0.22, 0.25};
  t.ddg = LandscapeParams{derive_seed(seed, "landscape/ddg"), opt.couplings, 0.0, 0.45, 0.9, 0.6};
  return t;
}

inline VariationPool protein_pool(const Scorer& scorer, const std::string& wild_type, std::uint64_t seed,
                                  const ProteinOptions& opt = {}) {
  Rng rng(derive_seed(seed, "synth/protein/mutants"));
  std::vector<std::string> seqs = {wild_type};
  std::vector<std::string> origins = {"wild-type"};
  std::set<std::string> seen = {wild_type};
  std::size_t attempts = 0;
  while (seqs.size() < opt.mutants + 1 && attempts++ < opt.mutants * 50) {
    std::size_t d = 1;
    while (d < opt.max_mutations && rng.bernoulli(opt.extra_mutation_p)) ++d;
    auto m = substitute(wild_type, std::min(d, wild_type.size()), rng);
    if (!seen.insert(m).second) continue;
    seqs.push_back(std::move(m));
    origins.push_back("mutant");
  }
  VariationPool pool{"gfp", scorer.score(seqs), std::move(origins)};
  return pool;
}

}  // namespace macs::synth
