// Copyright 2026 The Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <istream>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "hmilx/error.hpp"
#include "hmilx/rng.hpp"
#include "hmilx/schema.hpp"

namespace hmilx {

// Concept shapes: number of fragments times paths merged into each fragment.
enum class ConceptKind { I = 1, II, III, IV, V, VI, VII };

struct ConceptShape {
  std::size_t fragments;
  std::size_t paths;
};

inline constexpr std::array<ConceptKind, 7> kAllConceptKinds = {
    ConceptKind::I, ConceptKind::II, ConceptKind::III, ConceptKind::IV,
    ConceptKind::V, ConceptKind::VI, ConceptKind::VII};

inline ConceptShape shape_of(ConceptKind kind) {
  static constexpr std::array<ConceptShape, 7> kShapes = {
      {{1, 1}, {2, 1}, {5, 1}, {1, 2}, {1, 5}, {2, 2}, {2, 5}}};
  return kShapes[static_cast<std::size_t>(kind) - 1];
}

inline std::string_view to_string(ConceptKind kind) {
  static constexpr std::array<std::string_view, 7> kNames = {"i", "ii", "iii", "iv", "v", "vi", "vii"};
  return kNames[static_cast<std::size_t>(kind) - 1];
}

inline ConceptKind concept_kind_from_string(std::string_view s) {
  for (ConceptKind k : kAllConceptKinds) {
    if (to_string(k) == s) return k;
  }
  throw Error("unknown concept kind '" + std::string(s) + "' (expected i..vii)");
}

struct Concept {
  ConceptKind kind = ConceptKind::I;
  std::vector<json> fragments;

  json to_json() const { return {{"kind", std::string(to_string(kind))}, {"fragments", fragments}}; }
  static Concept from_json(const json& j) {
    try {
      Concept c;
      c.kind = concept_kind_from_string(j.at("kind").get<std::string>());
      for (const auto& f : j.at("fragments")) c.fragments.push_back(f);
      return c;
    } catch (const json::exception& e) {
      throw ParseError(std::string("malformed concept: ") + e.what());
    }
  }
};

struct LabeledSample {
  json sample;
  bool positive = false;
  std::optional<json> inserted;

  json to_json() const {
    return {{"sample", sample}, {"label", positive ? "pos" : "neg"}, {"inserted", inserted ? *inserted : json()}};
  }
  static LabeledSample from_json(const json& j) {
    try {
      LabeledSample s;
      s.sample = j.at("sample");
      const auto label = j.at("label").get<std::string>();
      if (label != "pos" && label != "neg") throw ParseError("label must be pos or neg");
      s.positive = label == "pos";
      if (j.contains("inserted") && !j["inserted"].is_null()) s.inserted = j["inserted"];
      return s;
    } catch (const json::exception& e) {
      throw ParseError(std::string("malformed labeled sample: ") + e.what());
    }
  }
};

namespace detail {

template <class Rng>
std::size_t draw_weighted(const std::vector<double>& weights, Rng& rng) {
  std::discrete_distribution<std::size_t> d(weights.begin(), weights.end());
  return d(rng);
}

// A value from the histogram, weighted by count; uniform over the stored
// values once the histogram is capped. `avoid` is excluded when given.
template <class Rng>
std::optional<Value> draw_value(const SchemaNode& s, Rng& rng, const std::optional<Value>& avoid = {}) {
  std::vector<const Value*> values;
  std::vector<double> weights;
  for (const auto& [v, count] : s.value_histogram) {
    if (avoid && v == *avoid) continue;
    values.push_back(&v);
    weights.push_back(s.capped ? 1.0 : static_cast<double>(count));
  }
  if (values.empty()) return std::nullopt;
  return *values[draw_weighted(weights, rng)];
}

template <class Rng>
json sample_node(const SchemaNode& s, Rng& rng, const std::string& where) {
  switch (s.kind) {
    case SchemaKind::Atomic: {
      auto v = draw_value(s, rng);
      if (!v) throw EmptyStats("no values observed at " + where);
      return v->to_json();
    }
    case SchemaKind::Dictionary: {
      if (s.node_count == 0) throw EmptyStats("dictionary never observed at " + where);
      json out = json::object();
      for (const auto& [key, child] : s.children) {
        const auto it = s.key_presence.find(key);
        const double p = it == s.key_presence.end()
                             ? 0.0
                             : static_cast<double>(it->second) / static_cast<double>(s.node_count);
        if (std::bernoulli_distribution(std::min(1.0, p))(rng)) {
          out[key] = sample_node(*child, rng, join_path(where, key));
        }
      }
      return out;
    }
    case SchemaKind::List: {
      if (s.length_histogram.empty()) throw EmptyStats("no list lengths observed at " + where);
      std::vector<std::size_t> lengths;
      std::vector<double> weights;
      for (const auto& [len, count] : s.length_histogram) {
        lengths.push_back(len);
        weights.push_back(static_cast<double>(count));
      }
      const std::size_t len = lengths[draw_weighted(weights, rng)];
      json out = json::array();
      if (len > 0 && !s.item) throw EmptyStats("list items never observed at " + where);
      for (std::size_t i = 0; i < len; ++i) out.push_back(sample_node(*s.item, rng, join_path(where, "[]")));
      return out;
    }
  }
  return json();
}

inline void place_on_path(json& at, const std::vector<PathStep>& steps, std::size_t i, const json& value) {
  if (i == steps.size()) {
    at = value;
    return;
  }
  if (steps[i].key) {
    if (!at.is_object()) at = json::object();
    place_on_path(at[*steps[i].key], steps, i + 1, value);
  } else {
    if (!at.is_array() || at.empty()) at = json::array({json()});
    place_on_path(at[0], steps, i + 1, value);
  }
}

inline bool atomic_equal(const json& a, const json& b) {
  const auto x = Value::from_json(a);
  const auto y = Value::from_json(b);
  return x && y && *x == *y;
}

// Kuhn's augmenting paths over a boolean compatibility matrix.
inline std::size_t max_matching(const std::vector<std::vector<bool>>& ok, std::size_t right) {
  std::vector<std::size_t> owner(right, SIZE_MAX);
  std::size_t matched = 0;
  for (std::size_t l = 0; l < ok.size(); ++l) {
    std::vector<bool> seen(right, false);
    std::function<bool(std::size_t)> augment = [&](std::size_t u) {
      for (std::size_t r = 0; r < right; ++r) {
        if (!ok[u][r] || seen[r]) continue;
        seen[r] = true;
        if (owner[r] == SIZE_MAX || augment(owner[r])) {
          owner[r] = u;
          return true;
        }
      }
      return false;
    };
    if (augment(l)) ++matched;
  }
  return matched;
}

inline void collect_fragment_leaves(const json& f, std::vector<PathStep>& prefix,
                                    std::vector<std::pair<std::vector<PathStep>, json>>& out) {
  if (f.is_object()) {
    for (const auto& [k, v] : f.items()) {
      if (v.is_null()) continue;
      prefix.push_back({k});
      collect_fragment_leaves(v, prefix, out);
      prefix.pop_back();
    }
  } else if (f.is_array()) {
    prefix.push_back({std::nullopt});
    for (const auto& v : f) collect_fragment_leaves(v, prefix, out);
    prefix.pop_back();
  } else if (!f.is_null()) {
    out.emplace_back(prefix, f);
  }
}

inline void nodes_on_path(json& at, const std::vector<PathStep>& steps, std::size_t i, std::vector<json*>& out) {
  if (i == steps.size()) {
    out.push_back(&at);
    return;
  }
  if (steps[i].key) {
    if (at.is_object() && at.contains(*steps[i].key)) nodes_on_path(at[*steps[i].key], steps, i + 1, out);
  } else if (at.is_array()) {
    for (auto& item : at) nodes_on_path(item, steps, i + 1, out);
  }
}

inline const SchemaNode* schema_at(const SchemaNode& schema, const std::vector<PathStep>& steps) {
  const SchemaNode* s = &schema;
  for (const auto& step : steps) {
    if (step.key) {
      s = s->kind == SchemaKind::Dictionary ? s->child(*step.key) : nullptr;
    } else {
      s = s->kind == SchemaKind::List ? s->item.get() : nullptr;
    }
    if (!s) return nullptr;
  }
  return s;
}

}  // namespace detail

// Draws a document following the schema's presence, length and value
// statistics.
template <class Rng>
json sample_from_schema(const SchemaNode& schema, Rng& rng) {
  return detail::sample_node(schema, rng, "");
}

// True iff the fragment maps into the sample: keys to the same keys, each
// list item to a distinct sample item, leaves to equal values.
inline bool contains_subtree(const json& sample, const json& fragment) {
  if (fragment.is_null()) return true;
  if (fragment.is_object()) {
    if (!sample.is_object()) return false;
    for (const auto& [k, v] : fragment.items()) {
      if (v.is_null()) continue;
      const auto it = sample.find(k);
      if (it == sample.end() || it->is_null() || !contains_subtree(*it, v)) return false;
    }
    return true;
  }
  if (fragment.is_array()) {
    if (!sample.is_array() || sample.size() < fragment.size()) return false;
    std::vector<std::vector<bool>> ok(fragment.size(), std::vector<bool>(sample.size()));
    for (std::size_t i = 0; i < fragment.size(); ++i) {
      for (std::size_t j = 0; j < sample.size(); ++j) ok[i][j] = contains_subtree(sample[j], fragment[i]);
    }
    return detail::max_matching(ok, sample.size()) == fragment.size();
  }
  return detail::atomic_equal(sample, fragment);
}

// Largest number of fragment leaves a single injective matching places in
// the document.
inline std::size_t matched_leaves(const json& doc, const json& fragment) {
  if (fragment.is_object()) {
    if (!doc.is_object()) return 0;
    std::size_t n = 0;
    for (const auto& [k, v] : fragment.items()) {
      const auto it = doc.find(k);
      if (it != doc.end()) n += matched_leaves(*it, v);
    }
    return n;
  }
  if (fragment.is_array()) {
    if (!doc.is_array()) return 0;
    std::vector<std::vector<std::size_t>> w(fragment.size(), std::vector<std::size_t>(doc.size()));
    for (std::size_t i = 0; i < fragment.size(); ++i) {
      for (std::size_t j = 0; j < doc.size(); ++j) w[i][j] = matched_leaves(doc[j], fragment[i]);
    }
    std::vector<bool> used(doc.size(), false);
    std::function<std::size_t(std::size_t)> best = [&](std::size_t i) -> std::size_t {
      if (i == fragment.size()) return 0;
      std::size_t top = best(i + 1);
      for (std::size_t j = 0; j < doc.size(); ++j) {
        if (used[j] || w[i][j] == 0) continue;
        used[j] = true;
        top = std::max(top, w[i][j] + best(i + 1));
        used[j] = false;
      }
      return top;
    };
    return best(0);
  }
  return detail::atomic_equal(doc, fragment) ? 1 : 0;
}

inline std::size_t count_atomic_leaves(const json& doc) {
  if (doc.is_object() || doc.is_array()) {
    std::size_t n = 0;
    for (const auto& v : doc) n += count_atomic_leaves(v);
    return n;
  }
  return doc.is_null() ? 0 : 1;
}

// Leaves of the explanation that the fragment does not account for.
inline std::size_t excess_leaves(const json& explanation, const json& fragment) {
  return count_atomic_leaves(explanation) - matched_leaves(explanation, fragment);
}

// Merges the fragment in: dictionary keys overwrite, list items are
// appended. A fragment already contained leaves the sample untouched.
inline void insert_fragment(json& sample, const json& fragment) {
  if (contains_subtree(sample, fragment)) return;
  std::function<void(json&, const json&)> merge = [&](json& s, const json& f) {
    if (f.is_object() && s.is_object()) {
      for (const auto& [k, v] : f.items()) {
        if (v.is_null()) continue;
        if (s.contains(k) && !s[k].is_null() && (v.is_object() || v.is_array())) {
          merge(s[k], v);
        } else {
          s[k] = v;
        }
      }
    } else if (f.is_array() && s.is_array()) {
      for (const auto& item : f) s.push_back(item);
    } else {
      s = f;
    }
  };
  merge(sample, fragment);
}

// Paths a concept may use: atomic nodes with at least two observed values,
// so that negatives can always avoid the planted value.
inline std::vector<SchemaPath> concept_paths(const SchemaNode& schema) {
  std::vector<SchemaPath> out;
  for (auto& p : enumerate_paths(schema)) {
    if (p.terminal->value_histogram.size() >= 2) out.push_back(std::move(p));
  }
  return out;
}

template <class Rng>
Concept make_concept(const SchemaNode& schema, ConceptKind kind, Rng& rng) {
  const ConceptShape shape = shape_of(kind);
  auto paths = concept_paths(schema);
  const std::size_t need = shape.fragments * shape.paths;
  if (paths.size() < need) {
    throw InsufficientPaths("concept kind " + std::string(to_string(kind)) + " needs " + std::to_string(need) +
                            " distinct paths with two or more values; schema has " + std::to_string(paths.size()));
  }
  std::shuffle(paths.begin(), paths.end(), rng);
  Concept c;
  c.kind = kind;
  for (std::size_t f = 0; f < shape.fragments; ++f) {
    json fragment;
    for (std::size_t p = 0; p < shape.paths; ++p) {
      const SchemaPath& path = paths[f * shape.paths + p];
      detail::place_on_path(fragment, path.steps, 0, detail::draw_value(*path.terminal, rng)->to_json());
    }
    c.fragments.push_back(std::move(fragment));
  }
  return c;
}

inline bool contains_any(const json& sample, const Concept& target) {
  return std::any_of(target.fragments.begin(), target.fragments.end(),
                     [&](const json& f) { return contains_subtree(sample, f); });
}

struct GenerationLimits {
  std::size_t repair_rounds = 200;
};

// Positives carry one uniformly chosen fragment; negatives are repaired by
// moving a matched leaf to another observed value until no fragment fits.
// Sample i draws from its own stream derive_seed(seed, i).
inline std::vector<LabeledSample> generate_dataset(const SchemaNode& schema, const Concept& target, std::size_t n,
                                                   double positive_fraction, std::uint64_t seed,
                                                   const GenerationLimits& limits = {}) {
  if (!(positive_fraction > 0.0 && positive_fraction < 1.0)) throw Error("positive_fraction must lie in (0, 1)");
  if (target.fragments.empty()) throw Error("concept has no fragments");
  const auto n_pos = static_cast<std::size_t>(std::llround(static_cast<double>(n) * positive_fraction));
  std::vector<bool> positive(n, false);
  std::fill(positive.begin(), positive.begin() + static_cast<std::ptrdiff_t>(n_pos), true);
  std::mt19937_64 order_rng(seed);
  std::shuffle(positive.begin(), positive.end(), order_rng);

  std::vector<LabeledSample> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::mt19937_64 rng(derive_seed(seed, i));
    LabeledSample ls;
    ls.sample = sample_from_schema(schema, rng);
    ls.positive = positive[i];
    if (ls.positive) {
      const json& f = target.fragments[std::uniform_int_distribution<std::size_t>(0, target.fragments.size() - 1)(rng)];
      insert_fragment(ls.sample, f);
      ls.inserted = f;
    } else {
      std::size_t rounds = 0;
      for (;;) {
        const json* hit = nullptr;
        for (const auto& f : target.fragments) {
          if (contains_subtree(ls.sample, f)) {
            hit = &f;
            break;
          }
        }
        if (!hit) break;
        if (++rounds > limits.repair_rounds) throw GenerationStall("negative repair did not converge for sample " + std::to_string(i));
        std::vector<std::pair<std::vector<PathStep>, json>> leaves;
        std::vector<PathStep> prefix;
        detail::collect_fragment_leaves(*hit, prefix, leaves);
        const auto& [steps, value] = leaves[std::uniform_int_distribution<std::size_t>(0, leaves.size() - 1)(rng)];
        const SchemaNode* at = detail::schema_at(schema, steps);
        std::vector<json*> targets;
        detail::nodes_on_path(ls.sample, steps, 0, targets);
        for (json* t : targets) {
          if (!detail::atomic_equal(*t, value)) continue;
          const auto other = at ? detail::draw_value(*at, rng, Value::from_json(value)) : std::nullopt;
          if (!other) throw GenerationStall("no alternative value for a concept leaf");
          *t = other->to_json();
        }
      }
    }
    if (contains_any(ls.sample, target) != ls.positive) {
      throw GenerationStall("label verification failed for sample " + std::to_string(i));
    }
    out.push_back(std::move(ls));
  }
  return out;
}

inline void write_dataset(std::ostream& out, const std::vector<LabeledSample>& data) {
  for (const auto& s : data) out << s.to_json().dump() << '\n';
}

inline std::vector<LabeledSample> read_dataset(std::istream& in) {
  std::vector<LabeledSample> out;
  for (const json& j : read_json_lines(in)) out.push_back(LabeledSample::from_json(j));
  return out;
}

}  // namespace hmilx
