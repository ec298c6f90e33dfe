#pragma once

// JSON Lines helpers shared by the pool, training-export, trace and report
// writers. Every file starts with a header line naming its format and version.

#include <fstream>
#include <functional>
#include <string>

#include "json.hpp"

#include "macs/attribute.hpp"
#include "macs/errors.hpp"
#include "macs/sequence.hpp"

namespace macs {

using json = nlohmann::ordered_json;

inline std::string dump_line(const json& j) { return j.dump(-1, ' ', false); }

inline json header_line(std::string_view format, int version = 1) {
  return json{{"format", format}, {"version", version}};
}

inline std::ofstream open_for_write(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  return out;
}

inline std::ifstream open_for_read(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  return in;
}

inline void check_written(std::ostream& out, const std::string& path) {
  out.flush();
  if (!out) throw IoError("write to '" + path + "' failed");
}

// Reads a versioned JSON Lines file, checking the header and handing every
// following nonblank line to `row` together with its 1-based line number.
inline void read_jsonl(const std::string& path, std::string_view format,
                       const std::function<void(const json&, std::size_t)>& row) {
  auto in = open_for_read(path);
  std::string line;
  std::size_t lineno = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ConfigError(path + ":" + std::to_string(lineno) + ": malformed JSON: " + e.what());
    }
    if (!header) {
      if (!j.is_object() || j.value("format", "") != format || j.value("version", 0) != 1) {
        throw ConfigError(path + ": expected header {\"format\":\"" + std::string(format) +
                          "\",\"version\":1}");
      }
      header = true;
      continue;
    }
    try {
      row(j, lineno);
    } catch (const json::exception& e) {
      throw ConfigError(path + ":" + std::to_string(lineno) + ": schema violation: " + e.what());
    }
  }
  if (!header) throw ConfigError(path + ": missing format header");
}

inline json attrs_to_json(const AttributeVector& attrs, const AttributeSpace& space) {
  space.check(attrs);
  json j = json::object();
  for (std::size_t i = 0; i < space.dims(); ++i) j[space.spec(i).id] = attrs[i];
  return j;
}

// Strict: every attribute of the space present, nothing else.
inline AttributeVector attrs_from_json(const json& j, const AttributeSpace& space) {
  if (!j.is_object()) throw ConfigError("attrs must be an object");
  if (j.size() != space.dims()) {
    throw ConfigError("attrs must name exactly the attributes of the space");
  }
  std::vector<double> raw(space.dims());
  for (std::size_t i = 0; i < space.dims(); ++i) {
    const auto it = j.find(space.spec(i).id);
    if (it == j.end() || !it->is_number()) {
      throw ConfigError("attrs missing numeric value for '" + space.spec(i).id + "'");
    }
    raw[i] = it->get<double>();
  }
  return space.ingest(std::move(raw));
}

inline json window_to_json(const ThresholdWindow& w) {
  return json{{"attr_id", w.attr_id}, {"start", w.start}, {"end", w.end}};
}

inline json constraint_to_json(const MultiConstraint& c) {
  json arr = json::array();
  for (const auto& w : c.windows) arr.push_back(window_to_json(w));
  return arr;
}

inline MultiConstraint constraint_from_json(const json& arr, const AttributeSpace& space) {
  if (!arr.is_array() || arr.size() != space.dims()) {
    throw ConfigError("windows must list one window per attribute");
  }
  MultiConstraint c;
  for (std::size_t i = 0; i < space.dims(); ++i) {
    const auto& w = arr[i];
    ThresholdWindow tw{w.at("attr_id").get<std::string>(), w.at("start").get<double>(),
                       w.at("end").get<double>(), {}};
    if (tw.attr_id != space.spec(i).id) throw ConfigError("windows out of attribute order");
    validate(tw, space.spec(i));
    c.windows.push_back(std::move(tw));
  }
  return c;
}

inline json scored_to_json(const ScoredSequence& s, const AttributeSpace& space) {
  return json{{"seq", s.seq}, {"attrs", attrs_to_json(s.attrs, space)}};
}

inline ScoredSequence scored_from_json(const json& j, const AttributeSpace& space, Domain domain) {
  ScoredSequence s;
  s.seq = j.at("seq").get<std::string>();
  if (s.seq.empty()) throw ConfigError("empty sequence");
  s.attrs = attrs_from_json(j.at("attrs"), space);
  s.domain = domain;
  return s;
}

}  // namespace macs
