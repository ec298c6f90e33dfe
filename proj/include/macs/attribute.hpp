#pragma once

// Attribute axes, threshold windows and the constraint-satisfaction reward.
//
// A window is closed on both ends. The satisfaction score of a value is 1
// inside its window and falls linearly to 0 at the attribute range ends. The
// reward for moving from an old to a new sequence is the new score plus the
// change in score, summed over attributes, plus any raw bonus scores.

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "macs/errors.hpp"
#include "macs/log.hpp"

namespace macs {

struct AttributeSpec {
  std::string id;
  double v_min = 0.0;
  double v_max = 1.0;

  double width() const noexcept { return v_max - v_min; }
  bool contains(double v) const noexcept { return v >= v_min && v <= v_max; }
};

struct ThresholdWindow {
  std::string attr_id;
  double start = 0.0;
  double end = 0.0;
  std::string label;  // optional display name ("very negative", ...)

  bool contains(double v) const noexcept { return start <= v && v <= end; }
  friend bool operator==(const ThresholdWindow& a, const ThresholdWindow& b) noexcept {
    return a.attr_id == b.attr_id && a.start == b.start && a.end == b.end;
  }
};

// One window per attribute, in the space's canonical attribute order.
struct MultiConstraint {
  std::vector<ThresholdWindow> windows;

  std::size_t size() const noexcept { return windows.size(); }
  friend bool operator==(const MultiConstraint&, const MultiConstraint&) = default;
};

struct AttributeVector {
  std::vector<double> values;

  std::size_t size() const noexcept { return values.size(); }
  double operator[](std::size_t i) const { return values[i]; }
  friend bool operator==(const AttributeVector&, const AttributeVector&) = default;
};

// Contiguous tiling of an attribute range by windows.
struct AttributePartition {
  std::string attr_id;
  std::vector<ThresholdWindow> windows;

  std::size_t size() const noexcept { return windows.size(); }
};

inline void validate(const AttributeSpec& spec) {
  if (spec.id.empty()) throw ConfigError("attribute id must be nonempty");
  if (!std::isfinite(spec.v_min) || !std::isfinite(spec.v_max)) {
    throw ConfigError("attribute '" + spec.id + "' has a non-finite range");
  }
  if (!(spec.v_min < spec.v_max)) {
    throw ConfigError("attribute '" + spec.id + "' has a degenerate range (v_min >= v_max)");
  }
}

// Builds a window, clamping open ends (infinite or past the range) onto the
// range end they abut.
inline ThresholdWindow make_window(const AttributeSpec& spec, double start, double end,
                                   std::string label = {}) {
  validate(spec);
  if (std::isnan(start) || std::isnan(end)) throw ConfigError("window bound is NaN");
  start = std::max(start, spec.v_min);
  end = std::min(end, spec.v_max);
  if (!(start <= end) || start > spec.v_max || end < spec.v_min) {
    throw ConfigError("window [" + std::to_string(start) + ", " + std::to_string(end) +
                      "] is empty inside the range of '" + spec.id + "'");
  }
  return ThresholdWindow{spec.id, start, end, std::move(label)};
}

inline void validate(const ThresholdWindow& w, const AttributeSpec& spec) {
  if (w.attr_id != spec.id) {
    throw ContractError("window for '" + w.attr_id + "' applied to attribute '" + spec.id + "'");
  }
  if (!(spec.v_min <= w.start && w.start <= w.end && w.end <= spec.v_max)) {
    throw ContractError("window outside the range of '" + spec.id + "'");
  }
}

inline void validate(const AttributePartition& p, const AttributeSpec& spec) {
  if (p.attr_id != spec.id) throw ConfigError("partition attribute mismatch for '" + spec.id + "'");
  if (p.windows.empty()) throw ConfigError("partition for '" + spec.id + "' is empty");
  if (p.windows.front().start != spec.v_min || p.windows.back().end != spec.v_max) {
    throw ConfigError("partition for '" + spec.id + "' does not cover its range");
  }
  for (std::size_t i = 0; i < p.windows.size(); ++i) {
    const auto& w = p.windows[i];
    if (w.attr_id != spec.id || !(w.start < w.end)) {
      throw ConfigError("partition for '" + spec.id + "' has an invalid window");
    }
    if (i + 1 < p.windows.size() && w.end != p.windows[i + 1].start) {
      throw ConfigError("partition for '" + spec.id + "' is not contiguous");
    }
  }
}

// Ingestion policy for evaluator outputs: values past the range are clamped
// onto it and the clamp is logged. NaN is rejected.
inline double clamp_to_range(double value, const AttributeSpec& spec) {
  if (std::isnan(value)) throw InputError("evaluator for '" + spec.id + "' returned NaN");
  if (value < spec.v_min || value > spec.v_max) {
    const double clamped = std::min(std::max(value, spec.v_min), spec.v_max);
    log::info("clamped ", spec.id, " value ", value, " to ", clamped);
    return clamped;
  }
  return value;
}

// Piecewise-linear proximity of a value to its window: 1 on the closed
// window, ramping to 0 at v_min (below) and v_max (above).
inline double satisfaction_score(double value, const ThresholdWindow& window,
                                 const AttributeSpec& spec) {
  validate(spec);
  validate(window, spec);
  if (!spec.contains(value)) {
    throw ContractError("value " + std::to_string(value) + " outside the range of '" + spec.id +
                        "'");
  }
  if (value < window.start) {
    // value >= v_min here, so start > v_min: the ramp denominator is positive.
    return (value - spec.v_min) / (window.start - spec.v_min);
  }
  if (value <= window.end) return 1.0;
  return (spec.v_max - value) / (spec.v_max - window.end);
}

// Score of the new value plus its change against the old value.
inline double attribute_reward(double new_value, double old_value, const ThresholdWindow& window,
                               const AttributeSpec& spec) {
  const double f_new = satisfaction_score(new_value, window, spec);
  const double f_old = satisfaction_score(old_value, window, spec);
  return f_new + (f_new - f_old);
}

namespace detail {
inline void check_aligned(std::size_t n_new, std::size_t n_old, const MultiConstraint& c,
                          std::span<const AttributeSpec> specs) {
  if (n_new != c.size() || n_old != c.size() || specs.size() != c.size()) {
    throw ContractError("attribute dimension mismatch: new=" + std::to_string(n_new) +
                        " old=" + std::to_string(n_old) + " constraint=" +
                        std::to_string(c.size()) + " specs=" + std::to_string(specs.size()));
  }
}
}  // namespace detail

// Sum of per-attribute satisfaction scores; the new-sequence-dependent part
// of total_reward up to a factor of two.
inline double satisfaction_sum(const AttributeVector& attrs, const MultiConstraint& constraint,
                               std::span<const AttributeSpec> specs) {
  detail::check_aligned(attrs.size(), attrs.size(), constraint, specs);
  double sum = 0.0;
  for (std::size_t j = 0; j < attrs.size(); ++j) {
    sum += satisfaction_score(attrs[j], constraint.windows[j], specs[j]);
  }
  return sum;
}

// Multi-attribute reward: Σ_j attribute_reward_j + Σ bonuses. Bonus scores
// are added raw, without a change term.
inline double total_reward(const AttributeVector& new_attrs, const AttributeVector& old_attrs,
                           const MultiConstraint& constraint, std::span<const AttributeSpec> specs,
                           std::span<const double> bonuses = {}) {
  detail::check_aligned(new_attrs.size(), old_attrs.size(), constraint, specs);
  double sum = 0.0;
  for (std::size_t j = 0; j < new_attrs.size(); ++j) {
    sum += attribute_reward(new_attrs[j], old_attrs[j], constraint.windows[j], specs[j]);
  }
  for (double b : bonuses) sum += b;
  return sum;
}

inline bool satisfies(const AttributeVector& attrs, const MultiConstraint& constraint) {
  if (attrs.size() != constraint.size()) {
    throw ContractError("attribute dimension mismatch in satisfies()");
  }
  for (std::size_t j = 0; j < attrs.size(); ++j) {
    if (!constraint.windows[j].contains(attrs[j])) return false;
  }
  return true;
}

// Index of the partition window holding value. A value on a shared interior
// boundary belongs to the lower window.
inline std::size_t window_of(double value, const AttributePartition& partition) {
  for (std::size_t i = 0; i < partition.windows.size(); ++i) {
    if (partition.windows[i].contains(value)) return i;
  }
  throw ContractError("value " + std::to_string(value) + " outside the partition of '" +
                      partition.attr_id + "'");
}

// The attribute axes of a task with one partition per axis. Constraint
// combinations enumerate the cross product of partitions with the first
// attribute varying slowest.
class AttributeSpace {
 public:
  AttributeSpace() = default;
  AttributeSpace(std::vector<AttributeSpec> specs, std::vector<AttributePartition> partitions)
      : specs_(std::move(specs)), partitions_(std::move(partitions)) {
    if (specs_.empty()) throw ConfigError("attribute space has no attributes");
    if (partitions_.size() != specs_.size()) {
      throw ConfigError("attribute space needs exactly one partition per attribute");
    }
    for (std::size_t i = 0; i < specs_.size(); ++i) {
      validate(specs_[i]);
      for (std::size_t j = 0; j < i; ++j) {
        if (specs_[j].id == specs_[i].id) throw ConfigError("duplicate attribute id '" + specs_[i].id + "'");
      }
      validate(partitions_[i], specs_[i]);
    }
  }

  std::size_t dims() const noexcept { return specs_.size(); }
  std::span<const AttributeSpec> specs() const noexcept { return specs_; }
  const AttributeSpec& spec(std::size_t j) const { return specs_.at(j); }
  const AttributePartition& partition(std::size_t j) const { return partitions_.at(j); }
  std::span<const AttributePartition> partitions() const noexcept { return partitions_; }

  std::size_t index_of(const std::string& id) const {
    for (std::size_t i = 0; i < specs_.size(); ++i) {
      if (specs_[i].id == id) return i;
    }
    throw ConfigError("unknown attribute '" + id + "'");
  }

  std::size_t combo_count() const noexcept {
    std::size_t n = 1;
    for (const auto& p : partitions_) n *= p.size();
    return n;
  }

  // Per-attribute window indices of a combo.
  std::vector<std::size_t> combo_windows(std::size_t combo) const {
    std::vector<std::size_t> idx(dims());
    for (std::size_t j = dims(); j-- > 0;) {
      idx[j] = combo % partitions_[j].size();
      combo /= partitions_[j].size();
    }
    return idx;
  }

  MultiConstraint combo(std::size_t index) const {
    if (index >= combo_count()) throw ContractError("combo index out of range");
    MultiConstraint c;
    const auto idx = combo_windows(index);
    for (std::size_t j = 0; j < dims(); ++j) c.windows.push_back(partitions_[j].windows[idx[j]]);
    return c;
  }

  std::size_t combo_index(std::span<const std::size_t> window_indices) const {
    std::size_t index = 0;
    for (std::size_t j = 0; j < dims(); ++j) index = index * partitions_[j].size() + window_indices[j];
    return index;
  }

  // The combo whose windows contain attrs (lower-window tie-break per axis).
  std::size_t combo_of(const AttributeVector& attrs) const {
    check(attrs);
    std::vector<std::size_t> idx(dims());
    for (std::size_t j = 0; j < dims(); ++j) idx[j] = window_of(attrs[j], partitions_[j]);
    return combo_index(idx);
  }

  std::string combo_label(std::size_t index) const {
    const auto c = combo(index);
    std::string out;
    for (const auto& w : c.windows) {
      if (!out.empty()) out += " | ";
      out += w.attr_id + ":" + (w.label.empty() ? "[" + fmt(w.start) + "," + fmt(w.end) + "]" : w.label);
    }
    return out;
  }

  void check(const AttributeVector& attrs) const {
    if (attrs.size() != dims()) {
      throw ContractError("attribute vector has " + std::to_string(attrs.size()) +
                          " values, space has " + std::to_string(dims()));
    }
  }

  // Applies the ingestion clamp to every coordinate.
  AttributeVector ingest(std::vector<double> raw) const {
    AttributeVector v{std::move(raw)};
    check(v);
    for (std::size_t j = 0; j < dims(); ++j) v.values[j] = clamp_to_range(v.values[j], specs_[j]);
    return v;
  }

 private:
  static std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
  }

  std::vector<AttributeSpec> specs_;
  std::vector<AttributePartition> partitions_;
};

inline AttributePartition make_partition(const AttributeSpec& spec,
                                         std::span<const double> interior_boundaries,
                                         std::span<const std::string> labels = {}) {
  AttributePartition p{spec.id, {}};
  double lo = spec.v_min;
  for (std::size_t i = 0; i <= interior_boundaries.size(); ++i) {
    const double hi = i < interior_boundaries.size() ? interior_boundaries[i] : spec.v_max;
    p.windows.push_back(make_window(spec, lo, hi, i < labels.size() ? labels[i] : std::string{}));
    lo = hi;
  }
  validate(p, spec);
  return p;
}

// Sentiment in [1,5] and complexity in [-2,2], five windows each.
inline AttributeSpace style_space() {
  const AttributeSpec sentiment{"sentiment", 1.0, 5.0};
  const AttributeSpec complexity{"complexity", -2.0, 2.0};
  const double sb[] = {1.5, 2.5, 3.5, 4.5};
  const std::string sl[] = {"very negative", "negative", "neutral", "positive", "very positive"};
  const double cb[] = {-1.5, -0.5, 0.5, 1.5};
  const std::string cl[] = {"very simple", "simple", "normal", "complex", "very complex"};
  return AttributeSpace({sentiment, complexity},
                        {make_partition(sentiment, sb, sl), make_partition(complexity, cb, cl)});
}

// Log fluorescence in [1.28, 4.12] and ddG in [-5.66, 60.75], four windows
// each; the open-ended outer windows are clamped onto the range ends.
inline AttributeSpace protein_space() {
  const AttributeSpec fluorescence{"fluorescence", 1.28, 4.12};
  const AttributeSpec ddg{"ddg", -5.66, 60.75};
  const double fb[] = {3.0, 3.4, 3.7};
  const std::string fl[] = {"very low", "low", "medium", "bright"};
  const double db[] = {0.0, 0.5, 2.0};
  const std::string dl[] = {"more stable", "as stable", "slightly destabilized",
                            "highly destabilized"};
  return AttributeSpace({fluorescence, ddg},
                        {make_partition(fluorescence, fb, fl), make_partition(ddg, db, dl)});
}

}  // namespace macs
