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
#include <cstddef>
#include <istream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "hmilx/error.hpp"
#include "hmilx/value.hpp"

namespace hmilx {

enum class SchemaKind { Dictionary, List, Atomic };

inline std::string_view to_string(SchemaKind kind) {
  switch (kind) {
    case SchemaKind::Dictionary: return "Dictionary";
    case SchemaKind::List: return "List";
    case SchemaKind::Atomic: return "Atomic";
  }
  return "?";
}

// Distinct values kept per atomic node. Past the cap only unique_count grows.
inline constexpr std::size_t kHistogramCap = 10000;

// Recursive union of structure and value statistics over a corpus.
//
// node_count is the number of times the node was observed: documents for the
// root, list items for a list's item schema, dictionaries carrying the key for
// a child. For atomic nodes it doubles as the observation count.
struct SchemaNode {
  SchemaKind kind = SchemaKind::Atomic;
  std::size_t node_count = 0;

  // Dictionary
  std::map<std::string, Box<SchemaNode>> children;
  std::map<std::string, std::size_t> key_presence;

  // List. `item` stays empty while only empty lists were observed.
  Box<SchemaNode> item;
  std::map<std::size_t, std::size_t> length_histogram;

  // Atomic
  ValueKind value_kind = ValueKind::Number;
  std::map<Value, std::size_t> value_histogram;
  std::size_t unique_count = 0;
  bool capped = false;

  static SchemaNode dictionary() { return of_kind(SchemaKind::Dictionary); }
  static SchemaNode list() { return of_kind(SchemaKind::List); }
  static SchemaNode atomic(ValueKind vk) {
    SchemaNode s = of_kind(SchemaKind::Atomic);
    s.value_kind = vk;
    return s;
  }
  static SchemaNode of_kind(SchemaKind k) {
    SchemaNode s;
    s.kind = k;
    return s;
  }

  std::size_t observation_count() const { return node_count; }

  const SchemaNode* child(const std::string& key) const {
    auto it = children.find(key);
    return it == children.end() ? nullptr : it->second.get();
  }

  friend bool operator==(const SchemaNode&, const SchemaNode&) = default;
};

namespace detail {

inline std::string join_path(const std::string& base, std::string_view step) {
  if (base.empty()) return std::string(step);
  return base + "/" + std::string(step);
}

inline std::string describe_json_kind(const json& j) {
  if (j.is_object()) return "Dictionary";
  if (j.is_array()) return "List";
  if (j.is_string()) return "String";
  if (j.is_boolean()) return "Boolean";
  if (j.is_number()) return "Number";
  return "null";
}

inline SchemaNode fresh_schema_for(const json& j) {
  if (j.is_object()) return SchemaNode::dictionary();
  if (j.is_array()) return SchemaNode::list();
  return SchemaNode::atomic(Value::from_json(j)->kind());
}

inline void observe_value(SchemaNode& s, const Value& v) {
  auto it = s.value_histogram.find(v);
  if (it != s.value_histogram.end()) {
    ++it->second;
  } else if (s.value_histogram.size() < kHistogramCap) {
    s.value_histogram.emplace(v, 1);
    ++s.unique_count;
  } else {
    // Overflow values are not remembered; unique_count is an upper bound.
    ++s.unique_count;
    s.capped = true;
  }
}

inline void absorb(SchemaNode& s, const json& j, const std::string& path) {
  const std::string where = path.empty() ? "<root>" : path;
  switch (s.kind) {
    case SchemaKind::Dictionary:
      if (!j.is_object()) {
        throw MixedTypeError("mixed types at " + where + ": Dictionary vs " + describe_json_kind(j));
      }
      ++s.node_count;
      for (const auto& [key, value] : j.items()) {
        if (value.is_null()) continue;
        auto& slot = s.children[key];
        if (!slot) slot = Box<SchemaNode>(fresh_schema_for(value));
        ++s.key_presence[key];
        absorb(*slot, value, join_path(path, key));
      }
      return;
    case SchemaKind::List: {
      if (!j.is_array()) {
        throw MixedTypeError("mixed types at " + where + ": List vs " + describe_json_kind(j));
      }
      ++s.node_count;
      std::size_t length = 0;
      for (const auto& value : j) {
        if (value.is_null()) continue;
        ++length;
        if (!s.item) s.item = Box<SchemaNode>(fresh_schema_for(value));
        absorb(*s.item, value, join_path(path, "[]"));
      }
      ++s.length_histogram[length];
      return;
    }
    case SchemaKind::Atomic: {
      auto v = Value::from_json(j);
      if (!v || v->kind() != s.value_kind) {
        throw MixedTypeError("mixed types at " + where + ": " + std::string(to_string(s.value_kind)) +
                             " vs " + describe_json_kind(j));
      }
      ++s.node_count;
      observe_value(s, *v);
      return;
    }
  }
}

inline void merge_into(SchemaNode& a, const SchemaNode& b, const std::string& path) {
  const std::string where = path.empty() ? "<root>" : path;
  if (a.kind != b.kind) {
    throw MixedTypeError("mixed types at " + where + ": " + std::string(to_string(a.kind)) + " vs " +
                         std::string(to_string(b.kind)));
  }
  a.node_count += b.node_count;
  switch (a.kind) {
    case SchemaKind::Dictionary:
      for (const auto& [key, count] : b.key_presence) a.key_presence[key] += count;
      for (const auto& [key, child] : b.children) {
        auto& slot = a.children[key];
        if (!slot) {
          slot = child;
        } else {
          merge_into(*slot, *child, join_path(path, key));
        }
      }
      return;
    case SchemaKind::List:
      for (const auto& [len, count] : b.length_histogram) a.length_histogram[len] += count;
      if (b.item) {
        if (!a.item) {
          a.item = b.item;
        } else {
          merge_into(*a.item, *b.item, join_path(path, "[]"));
        }
      }
      return;
    case SchemaKind::Atomic: {
      if (a.value_kind != b.value_kind) {
        throw MixedTypeError("mixed types at " + where + ": " + std::string(to_string(a.value_kind)) +
                             " vs " + std::string(to_string(b.value_kind)));
      }
      std::size_t shared = 0;
      for (const auto& [value, count] : b.value_histogram) {
        auto [it, inserted] = a.value_histogram.emplace(value, count);
        if (!inserted) {
          it->second += count;
          ++shared;
        }
      }
      a.capped = a.capped || b.capped;
      if (!a.capped && a.value_histogram.size() <= kHistogramCap) {
        a.unique_count = a.value_histogram.size();
      } else {
        a.unique_count = a.unique_count + b.unique_count - shared;
        a.capped = true;
        while (a.value_histogram.size() > kHistogramCap) {
          a.value_histogram.erase(std::prev(a.value_histogram.end()));
        }
      }
      return;
    }
  }
}

}  // namespace detail

// Folds one more document into an existing schema.
inline void absorb(SchemaNode& schema, const json& document) { detail::absorb(schema, document, ""); }

// Throws Error("empty corpus") on an empty range.
inline SchemaNode infer_schema(const std::vector<json>& corpus) {
  if (corpus.empty()) throw Error("empty corpus");
  if (corpus.front().is_null()) throw ParseError("document is null");
  SchemaNode schema = detail::fresh_schema_for(corpus.front());
  for (const auto& doc : corpus) absorb(schema, doc);
  return schema;
}

inline SchemaNode merge_schema(const SchemaNode& a, const SchemaNode& b) {
  SchemaNode out = a;
  detail::merge_into(out, b, "");
  return out;
}

// Same structure, all statistics cleared. The identity element of merge_schema.
inline SchemaNode zeroed(const SchemaNode& s) {
  SchemaNode out;
  out.kind = s.kind;
  out.value_kind = s.value_kind;
  for (const auto& [key, child] : s.children) {
    out.children.emplace(key, Box<SchemaNode>(zeroed(*child)));
    out.key_presence.emplace(key, 0);
  }
  if (s.item) out.item = Box<SchemaNode>(zeroed(*s.item));
  return out;
}

// Reads one JSON document per non-blank line. Line numbers in errors are 1-based.
inline std::vector<json> read_json_lines(std::istream& in) {
  std::vector<json> docs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      docs.push_back(json::parse(line));
    } catch (const json::parse_error& e) {
      throw ParseError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return docs;
}

// ---------------------------------------------------------------------------
// Validation

struct Violation {
  enum class Kind { UnknownKey, KindMismatch, UnknownItem };
  Kind kind;
  std::string path;
  std::string detail;

  friend bool operator==(const Violation&, const Violation&) = default;
};

namespace detail {

inline void validate_into(const json& j, const SchemaNode& s, const std::string& path,
                          std::vector<Violation>& out) {
  const std::string where = path.empty() ? "<root>" : path;
  if (j.is_null()) return;
  switch (s.kind) {
    case SchemaKind::Dictionary:
      if (!j.is_object()) {
        out.push_back({Violation::Kind::KindMismatch, where, "expected Dictionary, found " + describe_json_kind(j)});
        return;
      }
      for (const auto& [key, value] : j.items()) {
        if (value.is_null()) continue;
        const SchemaNode* child = s.child(key);
        if (!child) {
          out.push_back({Violation::Kind::UnknownKey, where, key});
          continue;
        }
        validate_into(value, *child, join_path(path, key), out);
      }
      return;
    case SchemaKind::List:
      if (!j.is_array()) {
        out.push_back({Violation::Kind::KindMismatch, where, "expected List, found " + describe_json_kind(j)});
        return;
      }
      for (const auto& value : j) {
        if (value.is_null()) continue;
        if (!s.item) {
          out.push_back({Violation::Kind::UnknownItem, where, "schema has no item type"});
          return;
        }
        validate_into(value, *s.item, join_path(path, "[]"), out);
      }
      return;
    case SchemaKind::Atomic: {
      auto v = Value::from_json(j);
      if (!v || v->kind() != s.value_kind) {
        out.push_back({Violation::Kind::KindMismatch, where,
                       "expected " + std::string(to_string(s.value_kind)) + ", found " + describe_json_kind(j)});
      }
      return;
    }
  }
}

}  // namespace detail

// Missing keys are fine; unknown keys and kind changes are reported.
inline std::vector<Violation> validate(const json& sample, const SchemaNode& schema) {
  std::vector<Violation> out;
  detail::validate_into(sample, schema, "", out);
  return out;
}

// ---------------------------------------------------------------------------
// Paths

struct PathStep {
  std::optional<std::string> key;  // nullopt: descend into list items

  bool is_list_descent() const { return !key.has_value(); }
  friend bool operator==(const PathStep&, const PathStep&) = default;
};

struct SchemaPath {
  std::vector<PathStep> steps;
  const SchemaNode* terminal = nullptr;

  std::string to_string() const {
    std::string out;
    for (const auto& step : steps) {
      out = detail::join_path(out, step.key ? *step.key : std::string("[]"));
    }
    return out;
  }
};

namespace detail {

inline void collect_paths(const SchemaNode& s, std::vector<PathStep>& prefix, std::vector<SchemaPath>& out) {
  switch (s.kind) {
    case SchemaKind::Atomic:
      out.push_back({prefix, &s});
      return;
    case SchemaKind::Dictionary:
      for (const auto& [key, child] : s.children) {
        prefix.push_back({key});
        collect_paths(*child, prefix, out);
        prefix.pop_back();
      }
      return;
    case SchemaKind::List:
      if (s.item) {
        prefix.push_back({std::nullopt});
        collect_paths(*s.item, prefix, out);
        prefix.pop_back();
      }
      return;
  }
}

}  // namespace detail

// One path per atomic node, keys in lexicographic order.
inline std::vector<SchemaPath> enumerate_paths(const SchemaNode& schema) {
  std::vector<SchemaPath> out;
  std::vector<PathStep> prefix;
  detail::collect_paths(schema, prefix, out);
  return out;
}

inline std::size_t count_schema_nodes(const SchemaNode& s) {
  std::size_t n = 1;
  for (const auto& [key, child] : s.children) n += count_schema_nodes(*child);
  if (s.item) n += count_schema_nodes(*s.item);
  return n;
}

// ---------------------------------------------------------------------------
// Serialization

inline json to_json(const SchemaNode& s) {
  json j;
  j["node_count"] = s.node_count;
  switch (s.kind) {
    case SchemaKind::Dictionary: {
      j["kind"] = "dictionary";
      json children = json::object();
      for (const auto& [key, child] : s.children) children[key] = to_json(*child);
      j["children"] = std::move(children);
      json presence = json::object();
      for (const auto& [key, count] : s.key_presence) presence[key] = count;
      j["key_presence"] = std::move(presence);
      break;
    }
    case SchemaKind::List: {
      j["kind"] = "list";
      j["item"] = s.item ? to_json(*s.item) : json();
      json lengths = json::object();
      for (const auto& [len, count] : s.length_histogram) lengths[std::to_string(len)] = count;
      j["length_histogram"] = std::move(lengths);
      break;
    }
    case SchemaKind::Atomic: {
      j["kind"] = "atomic";
      j["value_kind"] = to_string(s.value_kind);
      j["unique_count"] = s.unique_count;
      j["capped"] = s.capped;
      json values = json::array();
      for (const auto& [value, count] : s.value_histogram) values.push_back(json::array({value.to_json(), count}));
      j["value_histogram"] = std::move(values);
      break;
    }
  }
  return j;
}

inline SchemaNode schema_from_json(const json& j) {
  try {
    SchemaNode s;
    const auto kind = j.at("kind").get<std::string>();
    s.node_count = j.at("node_count").get<std::size_t>();
    if (kind == "dictionary") {
      s.kind = SchemaKind::Dictionary;
      for (const auto& [key, child] : j.at("children").items()) {
        s.children.emplace(key, Box<SchemaNode>(schema_from_json(child)));
      }
      for (const auto& [key, count] : j.at("key_presence").items()) s.key_presence[key] = count.get<std::size_t>();
    } else if (kind == "list") {
      s.kind = SchemaKind::List;
      if (!j.at("item").is_null()) s.item = Box<SchemaNode>(schema_from_json(j.at("item")));
      for (const auto& [len, count] : j.at("length_histogram").items()) {
        s.length_histogram[std::stoul(len)] = count.get<std::size_t>();
      }
    } else if (kind == "atomic") {
      s.kind = SchemaKind::Atomic;
      auto vk = value_kind_from_string(j.at("value_kind").get<std::string>());
      if (!vk) throw ParseError("unknown value_kind");
      s.value_kind = *vk;
      s.unique_count = j.at("unique_count").get<std::size_t>();
      s.capped = j.value("capped", false);
      for (const auto& pair : j.at("value_histogram")) {
        auto v = Value::from_json(pair.at(0));
        if (!v) throw ParseError("histogram value is not atomic");
        s.value_histogram[*v] = pair.at(1).get<std::size_t>();
      }
    } else {
      throw ParseError("unknown schema kind '" + kind + "'");
    }
    return s;
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed schema: ") + e.what());
  }
}

// Indented listing in the style "key: String (12 unique out of 340)".
inline void pretty_print(std::ostream& os, const SchemaNode& s, int indent = 0, const std::string& key = {}) {
  os << std::string(static_cast<std::size_t>(indent) * 2, ' ');
  if (!key.empty()) os << key << ": ";
  switch (s.kind) {
    case SchemaKind::Dictionary:
      os << "[Dict] (present " << s.node_count << " times)\n";
      for (const auto& [k, child] : s.children) pretty_print(os, *child, indent + 1, k);
      return;
    case SchemaKind::List:
      os << "[List] (present " << s.node_count << " times)\n";
      if (s.item) pretty_print(os, *s.item, indent + 1);
      return;
    case SchemaKind::Atomic:
      os << to_string(s.value_kind) << " (";
      if (s.capped) {
        os << kHistogramCap << "+";
      } else {
        os << s.unique_count;
      }
      os << " unique out of " << s.node_count << ")\n";
      return;
  }
}

inline std::string pretty_string(const SchemaNode& s) {
  std::ostringstream os;
  pretty_print(os, s);
  return os.str();
}

// FNV-1a over the structure only (kinds and keys), so statistics may change
// without invalidating a model.
inline std::string structural_fingerprint(const SchemaNode& s) {
  std::string text;
  auto walk = [&text](auto&& self, const SchemaNode& n) -> void {
    switch (n.kind) {
      case SchemaKind::Dictionary:
        text += "D{";
        for (const auto& [key, child] : n.children) {
          text += std::to_string(key.size()) + ":" + key;
          self(self, *child);
        }
        text += "}";
        return;
      case SchemaKind::List:
        text += "L[";
        if (n.item) self(self, *n.item);
        text += "]";
        return;
      case SchemaKind::Atomic:
        text += "A";
        text += to_string(n.value_kind);
        return;
    }
  };
  walk(walk, s);
  std::uint64_t hash = 14695981039346656037ull;
  for (unsigned char c : text) {
    hash ^= c;
    hash *= 1099511628211ull;
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = kHex[hash & 0xF];
    hash >>= 4;
  }
  return out;
}

}  // namespace hmilx
