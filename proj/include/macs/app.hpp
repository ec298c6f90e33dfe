#pragma once

// Command implementations behind the `macs` executable: building scorers,
// editors and worker connections from a configuration document, synthesizing
// toy tasks, pair datasets and campaigns. Worker processes are owned here so
// the library below stays transport-agnostic.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "macs/config.hpp"
#include "macs/editpair.hpp"
#include "macs/evalbench.hpp"
#include "macs/protocol.hpp"
#include "macs/synth.hpp"

namespace macs::app {

inline constexpr const char* kTimeoutEnv = "MACS_WORKER_TIMEOUT_MS";

// Worker reply timeout; MACS_WORKER_TIMEOUT_MS overrides the 30 s default.
inline Millis worker_timeout() {
  const char* v = std::getenv(kTimeoutEnv);
  if (!v || !*v) return Millis(30000);
  char* end = nullptr;
  const long long ms = std::strtoll(v, &end, 10);
  if (*end != '\0' || ms <= 0) throw ConfigError(std::string(kTimeoutEnv) + " must be a positive integer");
  return Millis(ms);
}

inline std::shared_ptr<WorkerClient> open_worker(const WorkerConfig& w, const std::vector<std::string>& roles,
                                                 const std::vector<std::string>& attr_ids) {
  std::unique_ptr<LineChannel> chan;
  if (!w.command.empty()) {
    chan = std::make_unique<ChildProcess>(w.command, w.env);
  } else {
    chan = connect_tcp(w.address);
  }
  auto client = std::make_shared<WorkerClient>(std::move(chan), worker_timeout());
  client->handshake(roles, attr_ids);
  return client;
}

inline void close_worker(WorkerClient& c) noexcept {
  try {
    c.shutdown();
  } catch (const std::exception& e) {
    log::warn("worker shutdown failed: ", e.what());
  }
}

// An external editor that owns its connection and shuts it down on drop.
class WorkerEditor final : public Editor {
 public:
  WorkerEditor(std::shared_ptr<WorkerClient> client, AttributeSpace space)
      : client_(client), inner_(std::move(client), std::move(space)) {}
  ~WorkerEditor() override { close_worker(*client_); }
  std::vector<std::string> propose(const EditRequest& r) override { return inner_.propose(r); }

 private:
  std::shared_ptr<WorkerClient> client_;
  ExternalEditor inner_;
};

inline std::vector<std::string> attr_ids(const AttributeSpace& space) {
  std::vector<std::string> ids;
  for (const auto& s : space.specs()) ids.push_back(s.id);
  return ids;
}

// Everything a command needs from a configuration: scorer, metric
// evaluators, pools and open evaluator workers.
class Session {
 public:
  explicit Session(ConfigDocument doc) : doc_(std::move(doc)) {
    const auto& space = doc_.space;
    std::vector<std::shared_ptr<const Evaluator>> evs;
    for (const auto& spec : space.specs()) evs.push_back(unary(doc_.evaluators.at(spec.id), spec, "evaluators"));
    for (const auto& [name, cfg] : doc_.metrics) {
      if (cfg.kind == "toy-similarity") {
        similarity_ = std::make_shared<ToySimilarity>();
      } else {
        fluency_ = unary(cfg, AttributeSpec{name, 0.0, 1.0}, "metrics");
      }
    }
    std::vector<Bonus> bonuses;
    for (const auto& b : doc_.bonuses) {
      if (b == "similarity") {
        bonuses.push_back(Bonus{b, nullptr, similarity_});
      } else {
        bonuses.push_back(Bonus{b, fluency_, nullptr});
      }
    }
    scorer_.emplace(space, std::move(evs), std::move(bonuses), doc_.domain);
    if (!doc_.pools.empty()) pools_ = read_pools(doc_.pools, space, doc_.domain);
  }

  ~Session() {
    for (auto& c : clients_) close_worker(*c);
  }

  Session(const Session&) = delete;
  Session& operator=(const Session&) = delete;

  const ConfigDocument& doc() const noexcept { return doc_; }
  const Scorer& scorer() const { return *scorer_; }
  const std::vector<VariationPool>& pools() const noexcept { return pools_; }
  std::shared_ptr<const Evaluator> fluency() const { return fluency_; }
  std::shared_ptr<const PairwiseEvaluator> similarity() const { return similarity_; }

  const std::vector<VariationPool>& require_pools() const {
    if (pools_.empty()) throw ConfigError("this command needs a pool file (pools.path)");
    return pools_;
  }

 private:
  std::shared_ptr<const Evaluator> unary(const EvaluatorConfig& cfg, const AttributeSpec& spec,
                                         const std::string& section) {
    if (cfg.kind == "toy-sentiment") return make_toy_sentiment(spec);
    if (cfg.kind == "toy-complexity") return make_toy_complexity(spec);
    if (cfg.kind == "toy-fluency") return make_toy_fluency();
    if (cfg.kind == "toy-protein") {
      return make_toy_protein(spec, std::make_shared<ProteinLandscape>(cfg.wild_type, cfg.landscape));
    }
    if (cfg.kind == "external") {
      auto client = open_worker(*cfg.worker, {"evaluator"}, {spec.id});
      clients_.push_back(client);
      return std::make_shared<ExternalEvaluator>("worker/" + spec.id, spec, client, cfg.deterministic);
    }
    throw ConfigError(section + ": evaluator kind '" + cfg.kind + "' cannot score '" + spec.id + "'");
  }

  ConfigDocument doc_;
  std::vector<std::shared_ptr<WorkerClient>> clients_;
  std::shared_ptr<const Evaluator> fluency_;
  std::shared_ptr<const PairwiseEvaluator> similarity_;
  std::optional<Scorer> scorer_;
  std::vector<VariationPool> pools_;
};

// Reads a config file and applies command-line overrides before validation,
// so the report echo shows the effective values.
inline ConfigDocument load(const std::string& path, std::optional<std::uint64_t> seed = std::nullopt,
                           std::optional<std::string> strategy = std::nullopt) {
  auto in = open_for_read(path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": malformed JSON: " + e.what());
  }
  if (!j.is_object()) throw ConfigError(path + ": config must be a JSON object");
  if (seed) j["seed"] = *seed;
  if (strategy) {
    parse_strategy(*strategy);
    if (!j.contains("episode")) j["episode"] = json::object();
    j["episode"]["strategy"] = *strategy;
  }
  try {
    return parse_config(j, std::filesystem::path(path).parent_path());
  } catch (const json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Campaigns

inline std::vector<ScoredSequence> style_items(const std::vector<VariationPool>& pools, std::size_t n) {
  std::vector<ScoredSequence> items;
  for (const auto& p : pools) {
    std::size_t pick = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      if (i < p.origins.size() && p.origins[i] == "original") {
        pick = i;
        break;
      }
    }
    items.push_back(p.members.at(pick));
  }
  if (n > 0) {
    if (n > items.size()) {
      throw ConfigError("campaign.items = " + std::to_string(n) + " but the pool file has " +
                        std::to_string(items.size()) + " groups");
    }
    items.resize(n);
  }
  return items;
}

inline EditorFactory style_editor(const Session& s) {
  const auto& e = s.doc().editor;
  const auto& space = s.doc().space;
  if (e.kind == "pool-oracle") {
    const auto& pools = s.require_pools();
    const double p = e.p;
    return [&pools, space, p] { return std::make_unique<PoolOracleEditor>(pools, space, p); };
  }
  if (e.kind == "identity") return [] { return std::make_unique<IdentityEditor>(); };
  if (e.kind == "external") {
    const auto w = *e.worker;
    return [w, space]() -> std::unique_ptr<Editor> {
      return std::make_unique<WorkerEditor>(open_worker(w, {"editor"}, attr_ids(space)), space);
    };
  }
  throw ConfigError("editor kind '" + e.kind + "' is not available for style campaigns");
}

struct DiscoveryInputs {
  ScoredSequence start;
  std::optional<std::vector<ScoredSequence>> reference;
};

inline DiscoveryInputs discovery_inputs(const Session& s) {
  const auto& doc = s.doc();
  DiscoveryInputs in;
  std::string start = doc.campaign.start;
  if (start.empty()) {
    for (const auto& p : s.require_pools()) {
      for (std::size_t i = 0; i < p.size() && start.empty(); ++i) {
        if (i < p.origins.size() && p.origins[i] == "wild-type") start = p.members[i].seq;
      }
    }
    if (start.empty()) throw ConfigError("campaign.start is unset and the pool has no wild-type member");
  }
  if (!valid_sequence(start, doc.domain)) throw ConfigError("campaign.start is not a valid sequence");
  in.start = s.scorer().score(start);
  if (doc.campaign.reference && !s.pools().empty()) {
    std::vector<ScoredSequence> ref;
    for (const auto& p : s.pools()) ref.insert(ref.end(), p.members.begin(), p.members.end());
    in.reference = std::move(ref);
  }
  return in;
}

inline ComboEditorFactory discovery_editor(const Session& s, const DiscoveryInputs& in) {
  const auto& e = s.doc().editor;
  const auto& space = s.doc().space;
  const std::uint64_t root = s.doc().seed;
  const auto* ref = in.reference ? &*in.reference : nullptr;
  auto seeds_for = [ref, space](std::size_t combo, const char* who) {
    if (!ref) throw ConfigError(std::string(who) + " needs the pool as reference set");
    auto [seeds, fallback] = combo_seeds(*ref, space, combo);
    if (fallback) log::warn(who, ": no reference member in combo ", combo, "; using the whole reference set");
    return seeds;
  };
  if (e.kind == "random-mutation") {
    const auto fixed = e.histogram;
    const std::string origin = in.start.seq;
    return [fixed, origin, seeds_for](std::size_t combo) -> std::unique_ptr<Editor> {
      if (fixed) return std::make_unique<RandomMutationEditor>(*fixed);
      return std::make_unique<RandomMutationEditor>(distance_histogram(seeds_for(combo, "random-mutation"), origin));
    };
  }
  if (e.kind == "recombine") {
    const double kappa = e.kappa;
    return [kappa, root, seeds_for](std::size_t combo) -> std::unique_ptr<Editor> {
      return std::make_unique<RecombineEditor>(seeds_for(combo, "recombine"), kappa,
                                               derive_seed(root, "editor/" + std::to_string(combo)));
    };
  }
  if (e.kind == "identity") return [](std::size_t) { return std::make_unique<IdentityEditor>(); };
  if (e.kind == "external") {
    const auto w = *e.worker;
    return [w, space](std::size_t) -> std::unique_ptr<Editor> {
      return std::make_unique<WorkerEditor>(open_worker(w, {"editor"}, attr_ids(space)), space);
    };
  }
  if (e.kind == "unique-recombine") return nullptr;
  throw ConfigError("editor kind '" + e.kind + "' is not available for discovery campaigns");
}

// Runs the configured campaign and writes its report; returns the summary.
inline json run_campaign(const ConfigDocument& doc, std::size_t workers, const std::string& out_dir) {
  const auto t0 = std::chrono::steady_clock::now();
  RunInfo info;
  info.workers = workers;
  info.started = utc_timestamp();
  Session s(doc);
  const ReportContext ctx{doc.seed, config_echo(doc)};
  auto finish = [&] {
    info.finished = utc_timestamp();
    info.elapsed_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };
  if (doc.campaign.mode == "style") {
    StyleCampaign c;
    c.items = style_items(s.require_pools(), doc.campaign.items);
    c.combos = doc.campaign.combos;
    c.episode = doc.episode;
    c.fluency = s.fluency();
    c.similarity = s.similarity();
    if (!c.fluency || !c.similarity) {
      throw ConfigError("style campaigns need evaluators.metrics.fluency and evaluators.metrics.similarity");
    }
    const auto rep = run_style_campaign(c, s.scorer(), style_editor(s), workers);
    finish();
    return emit_report(rep, doc.space, doc.episode, ctx, out_dir, info);
  }
  const auto in = discovery_inputs(s);
  DiscoveryCampaign c;
  c.start = in.start;
  c.reference = in.reference;
  c.combos = doc.campaign.combos;
  c.episode = doc.episode;
  if (doc.editor.kind == "unique-recombine") c.unique_recombine = UniqueRecombine{doc.editor.kappa, doc.editor.max_attempts};
  const auto rep = run_discovery_campaign(c, s.scorer(), discovery_editor(s, in), workers);
  finish();
  return emit_report(rep, doc.space, doc.episode, ctx, out_dir, info);
}

// ---------------------------------------------------------------------------
// Synthesis

inline json style_config(std::uint64_t seed, std::size_t items) {
  return json{{"seed", seed},
              {"domain", "text"},
              {"attributes", "style"},
              {"evaluators",
               {{"attributes", {{"sentiment", {{"kind", "toy-sentiment"}}}, {"complexity", {{"kind", "toy-complexity"}}}}},
                {"metrics", {{"fluency", {{"kind", "toy-fluency"}}}, {"similarity", {{"kind", "toy-similarity"}}}}},
                {"bonuses", {"fluency", "similarity"}}}},
              {"pools", {{"path", "pools.jsonl"}}},
              {"editors", {{"kind", "pool-oracle"}, {"p", 0.5}}},
              {"episode", {{"strategy", "prioritized"}, {"budget", 5}, {"beam", 1}, {"anchor_conditioning", false}}},
              {"campaign", {{"mode", "style"}, {"items", items}, {"combos", "all"}}},
              {"output", {{"dir", "report"}}}};
}

inline json landscape_json(const LandscapeParams& p) {
  return json{{"seed", p.seed},
              {"couplings", p.coupling_count},
              {"base", p.base},
              {"substitution_mean", p.substitution_mean},
              {"substitution_std", p.substitution_std},
              {"coupling_std", p.coupling_std}};
}

inline json protein_config(std::uint64_t seed, const synth::ProteinTask& t) {
  return json{{"seed", seed},
              {"domain", "protein"},
              {"attributes", "protein"},
              {"evaluators",
               {{"attributes",
                 {{"fluorescence",
                   {{"kind", "toy-protein"}, {"wild_type", t.wild_type}, {"landscape", landscape_json(t.fluorescence)}}},
                  {"ddg", {{"kind", "toy-protein"}, {"wild_type", t.wild_type}, {"landscape", landscape_json(t.ddg)}}}}}}},
              {"pools", {{"path", "pools.jsonl"}}},
              {"editors", {{"kind", "random-mutation"}}},
              {"episode", {{"strategy", "random-walk"}, {"budget", 3000}, {"hops", 1}}},
              {"campaign", {{"mode", "discovery"}, {"combos", "all"}, {"reference", true}}},
              {"output", {{"dir", "report"}}}};
}

inline void write_json(const std::filesystem::path& path, const json& j) {
  auto out = open_for_write(path.string());
  out << j.dump(2) << '\n';
  check_written(out, path.string());
}

inline void make_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create '" + dir + "': " + ec.message());
}

// Writes <out>/pools.jsonl and <out>/config.json.
inline void synth_style(std::uint64_t seed, const synth::StyleOptions& opt, const std::string& out) {
  make_dir(out);
  auto cfg = parse_config(style_config(seed, opt.groups));
  cfg.pools.clear();  // not written yet
  const Session s(cfg);
  const auto pools = synth::style_pools(s.scorer(), seed, opt);
  write_pools((std::filesystem::path(out) / "pools.jsonl").string(), pools, cfg.space);
  write_json(std::filesystem::path(out) / "config.json", style_config(seed, opt.groups));
}

inline void synth_protein(std::uint64_t seed, const synth::ProteinOptions& opt, const std::string& out) {
  make_dir(out);
  const auto task = synth::protein_task(seed, opt);
  const auto j = protein_config(seed, task);
  auto cfg = parse_config(j);
  cfg.pools.clear();
  const Session s(cfg);
  const std::vector<VariationPool> pools = {synth::protein_pool(s.scorer(), task.wild_type, seed, opt)};
  write_pools((std::filesystem::path(out) / "pools.jsonl").string(), pools, s.doc().space);
  write_json(std::filesystem::path(out) / "config.json", j);
}

// ---------------------------------------------------------------------------
// Pair datasets

// Every ordered pair of every pool as a training example.
inline std::vector<TrainingExample> all_examples(const Session& s, WindowStrategy ws, WeightMode wm, bool anchors,
                                                 std::uint64_t seed) {
  Rng rng(derive_seed(seed, "pairs/build"));
  std::vector<TrainingExample> out;
  for (const auto& pool : s.require_pools()) {
    if (pool.size() < 2) continue;
    for (auto& pair : enumerate_pairs(pool)) {
      TrainingExample ex;
      ex.pair = std::move(pair);
      ex.windows = assign_windows(ex.pair, s.doc().space, ws, rng);
      ex.reward = s.scorer().reward(ex.pair.target, ex.pair.source, ex.windows);
      ex.weight = wm == WeightMode::wbc ? ex.reward : 1.0;
      if (anchors) ex.anchor = sample_anchor(ex, pool, s.scorer(), rng);
      out.push_back(std::move(ex));
    }
  }
  return out;
}

inline std::vector<TrainingExample> sampled_examples(const Session& s, SamplerConfig sc, const BuildOptions& opts,
                                                     std::uint64_t seed) {
  sc.seed = derive_seed(seed, "pairs/sampler");
  const PairSampler sampler(s.require_pools(), s.doc().space, sc);
  Rng rng(sc.seed);
  return build_examples(sampler, s.scorer(), opts, rng);
}

struct SamplerStats {
  std::string sampler;
  DeltaHistogram hist;
};

// Change-vector histograms of the random and k-NN samplers over the same pools.
inline std::vector<SamplerStats> pair_stats(const Session& s, std::size_t draws, std::size_t k, std::uint64_t seed) {
  std::vector<SamplerStats> out;
  for (auto mode : {SamplerMode::random, SamplerMode::knn}) {
    SamplerConfig sc;
    sc.mode = mode;
    sc.k = k;
    const PairSampler sampler(s.require_pools(), s.doc().space, sc);
    Rng rng(derive_seed(seed, mode == SamplerMode::knn ? "pairs/stats/knn" : "pairs/stats/random"));
    out.push_back({mode == SamplerMode::knn ? "knn" : "random", delta_histogram(sampler, draws, rng)});
  }
  return out;
}

inline std::string stats_csv(const std::vector<SamplerStats>& stats, const AttributeSpace& space) {
  std::string out = "sampler,bin_" + space.spec(0).id + ",bin_" + space.spec(1).id + ",count\n";
  for (const auto& st : stats) {
    for (std::size_t r = 0; r < st.hist.bins; ++r) {
      for (std::size_t c = 0; c < st.hist.bins; ++c) {
        out += st.sampler + "," + std::to_string(r) + "," + std::to_string(c) + "," +
               std::to_string(st.hist.counts[r * st.hist.bins + c]) + "\n";
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Reports

inline json read_summary(const std::string& path) {
  std::filesystem::path p(path);
  if (std::filesystem::is_directory(p)) p /= "summary.json";
  auto in = open_for_read(p.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(p.string() + ": malformed JSON: " + e.what());
  }
}

inline std::string compare_csv(const std::vector<CompareRow>& rows) {
  std::string out = "combo,label,s1,n1,s2,n2,z,p_two_sided\n";
  for (const auto& r : rows) {
    std::string label = r.label;
    std::replace(label.begin(), label.end(), ',', ';');
    out += r.combo + "," + label + "," + std::to_string(r.s1) + "," + std::to_string(r.n1) + "," +
           std::to_string(r.s2) + "," + std::to_string(r.n2) + "," + json(r.test.z).dump() + "," +
           json(r.test.p_two_sided).dump() + "\n";
  }
  return out;
}

}  // namespace macs::app
