#pragma once

// JSON configuration document shared by every campaign command.
//
//   {
//     "seed": 7,
//     "domain": "text",
//     "attributes": "style" | "protein" | [{"id", "min", "max", "boundaries", "labels"}],
//     "evaluators": {
//       "attributes": {"<attr id>": {"kind": "toy-sentiment" | "toy-complexity" | "toy-protein" | "external", ...}},
//       "metrics": {"fluency": {...}, "similarity": {...}},
//       "bonuses": ["fluency", "similarity"]
//     },
//     "pools": {"path": "pools.jsonl"},
//     "editors": {"kind": "pool-oracle" | "random-mutation" | "recombine" | "unique-recombine" | "identity" | "external", ...},
//     "episode": {"strategy", "budget", "hops", "beam", "anchor_conditioning"},
//     "campaign": {"mode": "style" | "discovery", ...},
//     "output": {"dir": "report"}
//   }
//
// Unknown keys anywhere are rejected. All randomness derives from the single
// top-level seed by name: "episodes" for episode streams, "editor/<combo>"
// for stateful discovery editors.

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "macs/attribute.hpp"
#include "macs/editors.hpp"
#include "macs/evaluators.hpp"
#include "macs/inference.hpp"
#include "macs/jsonl.hpp"

namespace macs {

struct WorkerConfig {
  std::vector<std::string> command;
  std::map<std::string, std::string> env;
  std::string address;  // host:port; used when command is empty
};

struct EvaluatorConfig {
  std::string kind;
  // toy-protein
  std::string wild_type;
  LandscapeParams landscape;
  // external
  std::optional<WorkerConfig> worker;
  bool deterministic = false;
};

struct EditorConfig {
  std::string kind = "pool-oracle";
  double p = 0.5;
  double kappa = 0.5;
  std::optional<DistanceHistogram> histogram;  // random-mutation; default: per-combo from the reference set
  std::size_t max_attempts = 0;                // unique-recombine
  std::optional<WorkerConfig> worker;
};

struct CampaignConfig {
  std::string mode = "style";
  std::size_t items = 0;            // style: first N originals; 0 = all
  std::vector<std::size_t> combos;  // empty = all
  std::string start;                // discovery: sequence; empty = the pool's wild type
  bool reference = true;            // discovery: pool is the offline reference set
};

struct ConfigDocument {
  std::uint64_t seed = 0;
  Domain domain = Domain::text;
  AttributeSpace space;
  std::map<std::string, EvaluatorConfig> evaluators;  // by attribute id
  std::map<std::string, EvaluatorConfig> metrics;     // fluency / similarity
  std::vector<std::string> bonuses;
  std::string pools;  // resolved path
  EditorConfig editor;
  EpisodeConfig episode;
  CampaignConfig campaign;
  std::string output_dir;
  json raw;  // the document as given, after command-line overrides
};

namespace detail {

inline void allow_keys(const json& j, std::initializer_list<std::string_view> keys, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [k, _] : j.items()) {
    if (std::find(keys.begin(), keys.end(), k) == keys.end()) {
      throw ConfigError("unknown key '" + k + "' in " + where);
    }
  }
}

template <typename T>
T get(const json& j, const char* key, const std::string& where) {
  const auto it = j.find(key);
  if (it == j.end()) throw ConfigError(where + " lacks '" + key + "'");
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw ConfigError(where + "." + key + " has the wrong type");
  }
}

template <typename T>
T get_or(const json& j, const char* key, T fallback, const std::string& where) {
  return j.contains(key) ? get<T>(j, key, where) : fallback;
}

inline std::size_t get_count(const json& j, const char* key, std::size_t fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  const auto& v = j.at(key);
  if (!v.is_number_integer() || (!v.is_number_unsigned() && v.get<std::int64_t>() < 0)) {
    throw ConfigError(where + "." + key + " must be a non-negative integer");
  }
  return v.get<std::size_t>();
}

inline double get_unit(const json& j, const char* key, double fallback, const std::string& where) {
  const double v = get_or<double>(j, key, fallback, where);
  if (!(v >= 0.0 && v <= 1.0)) throw ConfigError(where + "." + key + " must lie in [0, 1]");
  return v;
}

inline WorkerConfig parse_worker(const json& j, const std::string& where) {
  allow_keys(j, {"command", "env", "address"}, where);
  WorkerConfig w;
  w.command = get_or<std::vector<std::string>>(j, "command", {}, where);
  w.env = get_or<std::map<std::string, std::string>>(j, "env", {}, where);
  w.address = get_or<std::string>(j, "address", "", where);
  if (w.command.empty() == w.address.empty()) throw ConfigError(where + " needs exactly one of command or address");
  return w;
}

inline AttributeSpace parse_attributes(const json& j) {
  if (j.is_string()) {
    const auto name = j.get<std::string>();
    if (name == "style") return style_space();
    if (name == "protein") return protein_space();
    throw ConfigError("unknown attribute preset '" + name + "'");
  }
  if (!j.is_array()) throw ConfigError("attributes must be a preset name or an array");
  std::vector<AttributeSpec> specs;
  std::vector<AttributePartition> parts;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string where = "attributes[" + std::to_string(i) + "]";
    allow_keys(j[i], {"id", "min", "max", "boundaries", "labels"}, where);
    AttributeSpec s{get<std::string>(j[i], "id", where), get<double>(j[i], "min", where),
                    get<double>(j[i], "max", where)};
    validate(s);
    const auto bounds = get_or<std::vector<double>>(j[i], "boundaries", {}, where);
    const auto labels = get_or<std::vector<std::string>>(j[i], "labels", {}, where);
    if (!labels.empty() && labels.size() != bounds.size() + 1) {
      throw ConfigError(where + ".labels must name every window");
    }
    parts.push_back(make_partition(s, bounds, labels));
    specs.push_back(std::move(s));
  }
  return AttributeSpace(std::move(specs), std::move(parts));
}

inline EvaluatorConfig parse_evaluator(const json& j, const std::string& where) {
  EvaluatorConfig e;
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  e.kind = get<std::string>(j, "kind", where);
  if (e.kind == "toy-sentiment" || e.kind == "toy-complexity" || e.kind == "toy-fluency" ||
      e.kind == "toy-similarity") {
    allow_keys(j, {"kind"}, where);
  } else if (e.kind == "toy-protein") {
    allow_keys(j, {"kind", "wild_type", "landscape"}, where);
    e.wild_type = get<std::string>(j, "wild_type", where);
    const auto& l = j.at("landscape");
    const std::string lw = where + ".landscape";
    allow_keys(l, {"seed", "couplings", "base", "substitution_mean", "substitution_std", "coupling_std"}, lw);
    e.landscape.seed = get<std::uint64_t>(l, "seed", lw);
    e.landscape.coupling_count = get_count(l, "couplings", 0, lw);
    e.landscape.base = get_or<double>(l, "base", 0.0, lw);
    e.landscape.substitution_mean = get_or<double>(l, "substitution_mean", 0.0, lw);
    e.landscape.substitution_std = get_or<double>(l, "substitution_std", 1.0, lw);
    e.landscape.coupling_std = get_or<double>(l, "coupling_std", 0.5, lw);
  } else if (e.kind == "external") {
    allow_keys(j, {"kind", "worker", "deterministic"}, where);
    e.worker = parse_worker(j.at("worker"), where + ".worker");
    e.deterministic = get_or<bool>(j, "deterministic", false, where);
  } else {
    throw ConfigError(where + ": unknown evaluator kind '" + e.kind + "'");
  }
  return e;
}

inline EditorConfig parse_editor(const json& j) {
  const std::string where = "editors";
  EditorConfig e;
  e.kind = get<std::string>(j, "kind", where);
  if (e.kind == "pool-oracle") {
    allow_keys(j, {"kind", "p"}, where);
    e.p = get_unit(j, "p", 0.5, where);
  } else if (e.kind == "random-mutation") {
    allow_keys(j, {"kind", "histogram"}, where);
    if (j.contains("histogram")) {
      const auto& h = j.at("histogram");
      if (!h.is_object()) throw ConfigError("editors.histogram must be an object");
      DistanceHistogram hist;
      for (const auto& [k, v] : h.items()) {
        std::size_t pos = 0;
        unsigned long d = 0;
        try {
          d = std::stoul(k, &pos);
        } catch (const std::exception&) {
          pos = 0;
        }
        if (pos != k.size() || !v.is_number()) throw ConfigError("editors.histogram needs {\"<distance>\": probability}");
        hist[d] = v.get<double>();
      }
      validate(hist);
      e.histogram = std::move(hist);
    }
  } else if (e.kind == "recombine" || e.kind == "unique-recombine") {
    allow_keys(j, {"kind", "kappa", "max_attempts"}, where);
    e.kappa = get_unit(j, "kappa", 0.5, where);
    e.max_attempts = get_count(j, "max_attempts", 0, where);
    if (e.kind == "recombine" && j.contains("max_attempts")) {
      throw ConfigError("editors.max_attempts applies to unique-recombine only");
    }
  } else if (e.kind == "identity") {
    allow_keys(j, {"kind"}, where);
  } else if (e.kind == "external") {
    allow_keys(j, {"kind", "worker"}, where);
    e.worker = parse_worker(j.at("worker"), where + ".worker");
  } else {
    throw ConfigError("unknown editor kind '" + e.kind + "'");
  }
  return e;
}

}  // namespace detail

// Validates and resolves a configuration; relative pool paths are taken
// relative to `base_dir`.
inline ConfigDocument parse_config(const json& j, const std::filesystem::path& base_dir = {}) {
  using namespace detail;
  allow_keys(j, {"seed", "domain", "attributes", "evaluators", "pools", "editors", "episode", "campaign", "output"},
             "config");
  ConfigDocument d;
  d.raw = j;
  const auto& seed = j.contains("seed") ? j.at("seed") : json(0);
  if (!seed.is_number_integer() || (!seed.is_number_unsigned() && seed.get<std::int64_t>() < 0)) throw ConfigError("seed must be a non-negative integer");
  d.seed = seed.get<std::uint64_t>();
  d.domain = parse_domain(get_or<std::string>(j, "domain", "text", "config"));
  if (!j.contains("attributes")) throw ConfigError("config lacks 'attributes'");
  d.space = parse_attributes(j.at("attributes"));

  const auto& ev = j.contains("evaluators") ? j.at("evaluators") : json::object();
  allow_keys(ev, {"attributes", "metrics", "bonuses"}, "evaluators");
  const auto& attrs = ev.contains("attributes") ? ev.at("attributes") : json::object();
  if (!attrs.is_object()) throw ConfigError("evaluators.attributes must be an object");
  for (const auto& [k, v] : attrs.items()) {
    d.space.index_of(k);  // rejects unknown attribute ids
    d.evaluators[k] = parse_evaluator(v, "evaluators.attributes." + k);
  }
  for (const auto& s : d.space.specs()) {
    if (!d.evaluators.count(s.id)) throw ConfigError("no evaluator for attribute '" + s.id + "'");
  }
  if (ev.contains("metrics")) {
    allow_keys(ev.at("metrics"), {"fluency", "similarity"}, "evaluators.metrics");
    for (const auto& [k, v] : ev.at("metrics").items()) {
      auto e = parse_evaluator(v, "evaluators.metrics." + k);
      if (k == "similarity" && e.kind != "toy-similarity") {
        throw ConfigError("evaluators.metrics.similarity must be toy-similarity (the protocol has no pairwise eval)");
      }
      if (k == "fluency" && e.kind != "toy-fluency" && e.kind != "external") {
        throw ConfigError("evaluators.metrics.fluency must be toy-fluency or external");
      }
      d.metrics[k] = std::move(e);
    }
  }
  d.bonuses = get_or<std::vector<std::string>>(ev, "bonuses", {}, "evaluators");
  for (const auto& b : d.bonuses) {
    if (!d.metrics.count(b)) throw ConfigError("bonus '" + b + "' has no metric evaluator");
  }

  if (j.contains("pools")) {
    allow_keys(j.at("pools"), {"path"}, "pools");
    std::filesystem::path p = get<std::string>(j.at("pools"), "path", "pools");
    d.pools = (p.is_absolute() || base_dir.empty() ? p : base_dir / p).string();
  }
  d.editor = parse_editor(j.contains("editors") ? j.at("editors") : json{{"kind", "pool-oracle"}});

  const auto& ep = j.contains("episode") ? j.at("episode") : json::object();
  allow_keys(ep, {"strategy", "budget", "hops", "beam", "anchor_conditioning"}, "episode");
  d.episode.strategy = parse_strategy(get_or<std::string>(ep, "strategy", "prioritized", "episode"));
  d.episode.budget = get_count(ep, "budget", 5, "episode");
  d.episode.hops = get_count(ep, "hops", 1, "episode");
  d.episode.beam = get_count(ep, "beam", 1, "episode");
  d.episode.anchor_conditioning = get_or<bool>(ep, "anchor_conditioning", false, "episode");
  d.episode.seed = derive_seed(d.seed, "episodes");
  validate(d.episode);

  const auto& c = j.contains("campaign") ? j.at("campaign") : json::object();
  d.campaign.mode = get_or<std::string>(c, "mode", "style", "campaign");
  if (d.campaign.mode == "style") {
    allow_keys(c, {"mode", "items", "combos"}, "campaign");
  } else if (d.campaign.mode == "discovery") {
    allow_keys(c, {"mode", "combos", "start", "reference"}, "campaign");
  } else {
    throw ConfigError("campaign.mode must be style or discovery");
  }
  d.campaign.items = get_count(c, "items", 0, "campaign");
  if (c.contains("combos") && !(c.at("combos").is_string() && c.at("combos") == "all")) {
    d.campaign.combos = get<std::vector<std::size_t>>(c, "combos", "campaign");
    if (d.campaign.combos.empty()) throw ConfigError("campaign.combos is empty");
  }
  d.campaign.start = get_or<std::string>(c, "start", "", "campaign");
  d.campaign.reference = get_or<bool>(c, "reference", true, "campaign");

  const auto& out = j.contains("output") ? j.at("output") : json::object();
  allow_keys(out, {"dir"}, "output");
  d.output_dir = get_or<std::string>(out, "dir", "report", "output");
  return d;
}

inline ConfigDocument load_config(const std::string& path) {
  auto in = open_for_read(path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": malformed JSON: " + e.what());
  }
  return parse_config(j, std::filesystem::path(path).parent_path());
}

// The document echoed into reports: everything that determines results,
// nothing about where they are written.
inline json config_echo(const ConfigDocument& d) {
  json echo = d.raw;
  echo.erase("output");
  return echo;
}

}  // namespace macs
