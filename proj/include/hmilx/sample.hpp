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

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "hmilx/error.hpp"
#include "hmilx/value.hpp"

namespace hmilx {

using NodeId = std::uint32_t;
inline constexpr NodeId kNoNode = std::numeric_limits<NodeId>::max();

enum class NodeKind { Dictionary, List, Leaf };

struct SampleNode {
  NodeKind kind = NodeKind::Leaf;
  NodeId parent = kNoNode;
  std::uint32_t depth = 0;
  std::string key;               // key under a parent dictionary
  std::uint32_t item_index = 0;  // position under a parent list
  std::vector<NodeId> children;  // dictionaries: key order; lists: item order
  std::optional<Value> value;    // leaves only
  NodeId subtree_end = 0;        // descendants occupy (id, subtree_end)
};

// A single tree-structured sample indexed in preorder. The root has id 0 and
// every subtree occupies a contiguous id range. Dictionary children follow
// lexicographic key order; null values are treated as absent.
class Sample {
 public:
  Sample() = default;

  static Sample from_json(const json& document) {
    if (document.is_null()) throw ParseError("sample is null");
    Sample s;
    s.add(document, kNoNode, 0, {}, 0);
    return s;
  }

  std::size_t size() const { return nodes_.size(); }
  const SampleNode& node(NodeId id) const { return nodes_[id]; }
  const std::vector<SampleNode>& nodes() const { return nodes_; }

  bool is_leaf(NodeId id) const { return nodes_[id].children.empty(); }
  bool is_ancestor(NodeId ancestor, NodeId id) const {
    return ancestor < id && id < nodes_[ancestor].subtree_end;
  }

  std::uint32_t max_depth() const {
    std::uint32_t d = 0;
    for (const auto& n : nodes_) d = std::max(d, n.depth);
    return d;
  }

  // Every node except the root.
  std::vector<NodeId> maskable() const {
    std::vector<NodeId> out;
    for (NodeId i = 1; i < nodes_.size(); ++i) out.push_back(i);
    return out;
  }

  // Non-root nodes without children (atomic values and empty containers).
  std::vector<NodeId> leaves() const {
    std::vector<NodeId> out;
    for (NodeId i = 1; i < nodes_.size(); ++i) {
      if (nodes_[i].children.empty()) out.push_back(i);
    }
    return out;
  }

  // Human-readable location such as "upnp/0/model_name". Root is "".
  std::string path_string(NodeId id) const {
    std::vector<std::string> parts;
    for (NodeId cur = id; cur != 0 && cur != kNoNode; cur = nodes_[cur].parent) {
      const auto& n = nodes_[cur];
      parts.push_back(nodes_[n.parent].kind == NodeKind::List ? std::to_string(n.item_index) : n.key);
    }
    std::string out;
    for (auto it = parts.rbegin(); it != parts.rend(); ++it) {
      if (!out.empty()) out += '/';
      out += *it;
    }
    return out;
  }

  json to_json() const { return subtree_json(0, nullptr); }

  // Subtree rooted at `id`, skipping nodes whose bit in `keep` is clear.
  json subtree_json(NodeId id, const std::vector<bool>* keep) const {
    const auto& n = nodes_[id];
    switch (n.kind) {
      case NodeKind::Leaf: return n.value->to_json();
      case NodeKind::Dictionary: {
        json j = json::object();
        for (NodeId c : n.children) {
          if (keep && !(*keep)[c]) continue;
          j[nodes_[c].key] = subtree_json(c, keep);
        }
        return j;
      }
      case NodeKind::List: {
        json j = json::array();
        for (NodeId c : n.children) {
          if (keep && !(*keep)[c]) continue;
          j.push_back(subtree_json(c, keep));
        }
        return j;
      }
    }
    return json();
  }

 private:
  NodeId add(const json& j, NodeId parent, std::uint32_t depth, std::string key, std::uint32_t item_index) {
    const NodeId id = static_cast<NodeId>(nodes_.size());
    nodes_.push_back({});
    {
      auto& n = nodes_.back();
      n.parent = parent;
      n.depth = depth;
      n.key = std::move(key);
      n.item_index = item_index;
    }
    if (j.is_object()) {
      nodes_[id].kind = NodeKind::Dictionary;
      // nlohmann objects iterate in sorted key order.
      for (const auto& [k, v] : j.items()) {
        if (v.is_null()) continue;
        NodeId c = add(v, id, depth + 1, k, 0);
        nodes_[id].children.push_back(c);
      }
    } else if (j.is_array()) {
      nodes_[id].kind = NodeKind::List;
      std::uint32_t index = 0;
      for (const auto& v : j) {
        if (v.is_null()) continue;
        NodeId c = add(v, id, depth + 1, {}, index++);
        nodes_[id].children.push_back(c);
      }
    } else {
      nodes_[id].kind = NodeKind::Leaf;
      nodes_[id].value = Value::from_json(j);
    }
    nodes_[id].subtree_end = static_cast<NodeId>(nodes_.size());
    return id;
  }

  std::vector<SampleNode> nodes_;
};

// A subset of a sample's node ids.
class NodeSet {
 public:
  NodeSet() = default;
  explicit NodeSet(std::size_t n, bool all = false) : bits_(n, all) {}

  static NodeSet full(const Sample& s) { return NodeSet(s.size(), true); }
  static NodeSet root_only(const Sample& s) {
    NodeSet out(s.size());
    if (s.size() > 0) out.insert(0);
    return out;
  }
  static NodeSet of(const Sample& s, const std::vector<NodeId>& ids) {
    NodeSet out(s.size());
    for (NodeId id : ids) out.insert(id);
    return out;
  }

  std::size_t universe() const { return bits_.size(); }
  bool contains(NodeId id) const { return bits_[id]; }
  void insert(NodeId id) { bits_[id] = true; }
  void erase(NodeId id) { bits_[id] = false; }
  void set(NodeId id, bool on) { bits_[id] = on; }

  std::size_t count() const {
    std::size_t n = 0;
    for (bool b : bits_) n += b ? 1 : 0;
    return n;
  }

  std::vector<NodeId> ids() const {
    std::vector<NodeId> out;
    for (NodeId i = 0; i < bits_.size(); ++i) {
      if (bits_[i]) out.push_back(i);
    }
    return out;
  }

  const std::vector<bool>& bits() const { return bits_; }

  friend bool operator==(const NodeSet&, const NodeSet&) = default;

 private:
  std::vector<bool> bits_;
};

// Keeps the nodes whose whole ancestor chain is in `set`; always keeps the root.
inline NodeSet reachable_closure(const Sample& sample, const NodeSet& set) {
  NodeSet out(sample.size());
  if (sample.size() == 0) return out;
  out.insert(0);
  for (NodeId i = 1; i < sample.size(); ++i) {
    if (set.contains(i) && out.contains(sample.node(i).parent)) out.insert(i);
  }
  return out;
}

// Adds every ancestor of every member, and the root.
inline NodeSet ancestor_closure(const Sample& sample, const NodeSet& set) {
  NodeSet out(sample.size());
  if (sample.size() == 0) return out;
  out.insert(0);
  for (NodeId i = 1; i < sample.size(); ++i) {
    if (!set.contains(i)) continue;
    for (NodeId cur = i; cur != kNoNode && !out.contains(cur); cur = sample.node(cur).parent) out.insert(cur);
  }
  return out;
}

inline bool is_prefix_closed(const Sample& sample, const NodeSet& set) {
  if (sample.size() == 0) return true;
  if (!set.contains(0)) return false;
  for (NodeId i = 1; i < sample.size(); ++i) {
    if (set.contains(i) && !set.contains(sample.node(i).parent)) return false;
  }
  return true;
}

// The document restricted to the reachable part of `keep`.
inline json pruned_json(const Sample& sample, const NodeSet& keep) {
  const NodeSet closed = reachable_closure(sample, keep);
  return sample.subtree_json(0, &closed.bits());
}

// Atomic values in the reachable part of `set`.
inline std::size_t atomic_leaf_count(const Sample& sample, const NodeSet& set) {
  const NodeSet closed = reachable_closure(sample, set);
  std::size_t n = 0;
  for (NodeId i = 0; i < sample.size(); ++i) {
    if (closed.contains(i) && sample.node(i).kind == NodeKind::Leaf) ++n;
  }
  return n;
}

}  // namespace hmilx
