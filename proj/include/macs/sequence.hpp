#pragma once

#include <algorithm>
#include <string>
#include <string_view>
#include <vector>

#include "macs/attribute.hpp"
#include "macs/digest.hpp"
#include "macs/errors.hpp"

namespace macs {

// Text sequences are whitespace-separated words; protein sequences are
// strings of single-letter amino-acid codes.
enum class Domain { text, protein };

inline constexpr std::string_view kAminoAcids = "ACDEFGHIKLMNPQRSTVWY";

inline std::string_view to_string(Domain d) noexcept {
  return d == Domain::text ? "text" : "protein";
}

inline Domain parse_domain(std::string_view s) {
  if (s == "text") return Domain::text;
  if (s == "protein") return Domain::protein;
  throw ConfigError("unknown domain '" + std::string(s) + "'");
}

inline std::vector<std::string> split_words(std::string_view s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    std::size_t j = i;
    while (j < s.size() && !std::isspace(static_cast<unsigned char>(s[j]))) ++j;
    if (j > i) out.emplace_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

inline std::string join_words(const std::vector<std::string>& words) {
  std::string out;
  for (const auto& w : words) {
    if (!out.empty()) out += ' ';
    out += w;
  }
  return out;
}

inline std::vector<std::string> tokenize(std::string_view seq, Domain domain) {
  if (domain == Domain::text) return split_words(seq);
  std::vector<std::string> out;
  out.reserve(seq.size());
  for (char c : seq) out.emplace_back(1, c);
  return out;
}

inline std::string detokenize(const std::vector<std::string>& tokens, Domain domain) {
  if (domain == Domain::text) return join_words(tokens);
  std::string out;
  for (const auto& t : tokens) out += t;
  return out;
}

inline bool is_amino_acid(char c) noexcept {
  return kAminoAcids.find(c) != std::string_view::npos;
}

// Whether a candidate is a usable sequence of the domain.
inline bool valid_sequence(std::string_view seq, Domain domain) {
  if (domain == Domain::text) {
    return !split_words(seq).empty() && seq.find('\n') == std::string_view::npos;
  }
  return !seq.empty() && std::all_of(seq.begin(), seq.end(), is_amino_acid);
}

struct ScoredSequence {
  std::string seq;
  AttributeVector attrs;
  Domain domain = Domain::text;
  std::string context;  // optional conditioning text carried alongside

  std::string digest() const { return digest_hex(seq); }
};

}  // namespace macs
