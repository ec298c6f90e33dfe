#pragma once

// Small builders shared by the test binaries.

#include <filesystem>
#include <string>
#include <vector>

#include "macs/editpair.hpp"
#include "macs/evaluators.hpp"
#include "macs/synth.hpp"

namespace macs::fixture {

inline Scorer style_scorer(bool with_bonuses = true) {
  const auto space = style_space();
  return Scorer(space, {make_toy_sentiment(space.spec(0)), make_toy_complexity(space.spec(1))},
                with_bonuses ? style_bonuses() : std::vector<Bonus>{});
}

inline ScoredSequence member(std::string seq, std::vector<double> attrs) {
  ScoredSequence s;
  s.seq = std::move(seq);
  s.attrs.values = std::move(attrs);
  return s;
}

// A pool of `m` members with hand-placed attributes on the style space.
inline VariationPool grid_pool(const std::string& id, std::size_t m, double offset = 0.0) {
  VariationPool p;
  p.group_id = id;
  for (std::size_t i = 0; i < m; ++i) {
    const double s = 1.0 + std::fmod(0.37 * static_cast<double>(i) + offset, 4.0);
    const double c = -2.0 + std::fmod(0.61 * static_cast<double>(i) + 2 * offset, 4.0);
    p.members.push_back(member(id + " word" + std::to_string(i), {s, c}));
    p.origins.push_back(i == 0 ? "original" : "variation");
  }
  return p;
}

inline Scorer protein_scorer(const synth::ProteinTask& task) {
  const auto space = protein_space();
  return Scorer(space,
                {make_toy_protein(space.spec(0), std::make_shared<ProteinLandscape>(task.wild_type, task.fluorescence)),
                 make_toy_protein(space.spec(1), std::make_shared<ProteinLandscape>(task.wild_type, task.ddg))},
                {}, Domain::protein);
}

// Style pools in which every group holds a real text inside each combo, plus
// an original aimed at a random point.
inline std::vector<VariationPool> covering_pools(const Scorer& scorer, std::size_t groups, std::uint64_t seed) {
  const auto& space = scorer.space();
  Rng rng(seed);
  std::vector<VariationPool> pools;
  for (std::size_t g = 0; g < groups; ++g) {
    VariationPool pool;
    pool.group_id = "cover-" + std::to_string(g);
    std::vector<std::string> texts = {synth::style_text(rng.uniform(1.0, 5.0), rng.uniform(-2.0, 2.0), 12, rng)};
    pool.origins.push_back("original");
    for (std::size_t c = 0; c < space.combo_count(); ++c) {
      const auto w = space.combo(c);
      for (int attempt = 0;; ++attempt) {
        if (attempt == 1000) throw std::runtime_error("cannot synthesize a text for combo " + std::to_string(c));
        const double s = rng.uniform(w.windows[0].start, w.windows[0].end);
        const double x = rng.uniform(w.windows[1].start, w.windows[1].end);
        auto t = synth::style_text(s, x, 12, rng);
        if (!satisfies(scorer.score(t).attrs, w)) continue;
        texts.push_back(std::move(t));
        break;
      }
      pool.origins.push_back("variation");
    }
    pool.members = scorer.score(texts);
    pools.push_back(std::move(pool));
  }
  return pools;
}

inline std::string temp_path(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "macs-tests";
  std::filesystem::create_directories(dir);
  return (dir / name).string();
}

}  // namespace macs::fixture
