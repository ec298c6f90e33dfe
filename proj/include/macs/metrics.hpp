#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "macs/errors.hpp"

namespace macs {

// Unit-cost edit distance over any pair of random-access ranges, two-row DP.
template <typename A, typename B>
std::size_t levenshtein(const A& a, const B& b) {
  const std::size_t n = std::size(a), m = std::size(b);
  if (n == 0) return m;
  if (m == 0) return n;
  std::vector<std::size_t> prev(m + 1), cur(m + 1);
  std::iota(prev.begin(), prev.end(), std::size_t{0});
  for (std::size_t i = 1; i <= n; ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= m; ++j) {
      const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min(std::min(prev[j] + 1, cur[j - 1] + 1), sub);
    }
    std::swap(prev, cur);
  }
  return prev[m];
}

// Edit distance from one fixed pattern to many texts. Patterns of at most 64
// bytes use the bit-parallel algorithm of Myers / Hyyro with the match table
// built once; longer patterns fall back to the DP.
class LevenshteinFrom {
 public:
  explicit LevenshteinFrom(std::string_view pattern) : pattern_(pattern) {
    if (pattern_.size() > 64 || pattern_.empty()) return;
    for (std::size_t i = 0; i < pattern_.size(); ++i) {
      peq_[static_cast<unsigned char>(pattern_[i])] |= std::uint64_t{1} << i;
    }
  }

  std::size_t operator()(std::string_view text) const {
    const std::size_t m = pattern_.size();
    if (m == 0) return text.size();
    if (m > 64) return levenshtein<std::string_view, std::string_view>(pattern_, text);
    std::uint64_t pv = m == 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << m) - 1;
    std::uint64_t mv = 0;
    const std::uint64_t last = std::uint64_t{1} << (m - 1);
    std::size_t score = m;
    for (unsigned char c : text) {
      const std::uint64_t eq = peq_[c];
      const std::uint64_t xv = eq | mv;
      const std::uint64_t xh = (((eq & pv) + pv) ^ pv) | eq;
      std::uint64_t ph = mv | ~(xh | pv);
      std::uint64_t mh = pv & xh;
      if (ph & last) {
        ++score;
      } else if (mh & last) {
        --score;
      }
      ph = (ph << 1) | 1;
      mh <<= 1;
      pv = mh | ~(xv | ph);
      mv = ph & xv;
    }
    return score;
  }

 private:
  std::string_view pattern_;
  std::uint64_t peq_[256] = {};
};

inline std::size_t levenshtein(std::string_view a, std::string_view b) {
  if (a.size() > b.size()) std::swap(a, b);
  return LevenshteinFrom(a)(b);
}

inline std::size_t levenshtein(const std::string& a, const std::string& b) {
  return levenshtein(std::string_view(a), std::string_view(b));
}

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // population standard deviation
  std::size_t n = 0;
};

inline MeanStd mean_std(std::span<const double> xs) {
  MeanStd r;
  r.n = xs.size();
  if (xs.empty()) return r;
  double sum = 0.0;
  for (double x : xs) sum += x;
  r.mean = sum / static_cast<double>(xs.size());
  double ss = 0.0;
  for (double x : xs) ss += (x - r.mean) * (x - r.mean);
  r.std = std::sqrt(ss / static_cast<double>(xs.size()));
  return r;
}

// Upper tail of the standard normal, Q(z) = erfc(z / sqrt 2) / 2.
inline double normal_sf(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

struct ZTest {
  double z = 0.0;
  double p_two_sided = 1.0;
  // P(Z >= z): small when sample 1 has the larger proportion.
  double p_greater = 0.5;
};

// Pooled two-proportions z-test.
inline ZTest two_prop_ztest(long successes1, long n1, long successes2, long n2) {
  if (n1 <= 0 || n2 <= 0) throw ContractError("two_prop_ztest: sample sizes must be positive");
  if (successes1 < 0 || successes2 < 0 || successes1 > n1 || successes2 > n2) {
    throw ContractError("two_prop_ztest: successes must lie in [0, n]");
  }
  const double p1 = static_cast<double>(successes1) / static_cast<double>(n1);
  const double p2 = static_cast<double>(successes2) / static_cast<double>(n2);
  const double pooled = static_cast<double>(successes1 + successes2) / static_cast<double>(n1 + n2);
  const double se = std::sqrt(pooled * (1.0 - pooled) * (1.0 / static_cast<double>(n1) + 1.0 / static_cast<double>(n2)));
  ZTest t;
  if (se == 0.0) return t;  // both samples all-success or all-failure
  t.z = (p1 - p2) / se;
  t.p_two_sided = std::min(1.0, 2.0 * normal_sf(std::fabs(t.z)));
  t.p_greater = normal_sf(t.z);
  return t;
}

}  // namespace macs
