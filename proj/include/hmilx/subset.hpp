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
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <vector>

#include "hmilx/error.hpp"
#include "hmilx/ranking.hpp"
#include "hmilx/sample.hpp"

namespace hmilx {

// Value of a candidate subset; the caller decides how a subset becomes a mask.
using EvalFn = std::function<double(const NodeSet&)>;

namespace detail {

inline std::vector<NodeId> sorted_ids(std::span<const NodeId> ids) {
  std::vector<NodeId> out(ids.begin(), ids.end());
  std::sort(out.begin(), out.end());
  return out;
}

// Adds the candidate outside `s` that maximizes v (lowest id on ties). Returns
// false when no candidate is left.
inline bool add_best(NodeSet& s, const std::vector<NodeId>& candidates, const EvalFn& v, double& value) {
  NodeId best = kNoNode;
  double best_value = 0.0;
  for (NodeId c : candidates) {
    if (s.contains(c)) continue;
    s.insert(c);
    const double x = v(s);
    s.erase(c);
    if (best == kNoNode || x > best_value) {
      best = c;
      best_value = x;
    }
  }
  if (best == kNoNode) return false;
  s.insert(best);
  value = best_value;
  return true;
}

// Drops the member of `s` whose removal keeps v highest (lowest id on ties),
// provided the result stays at or above tau.
inline bool remove_least_damaging(NodeSet& s, const EvalFn& v, double tau, double& value) {
  NodeId best = kNoNode;
  double best_value = 0.0;
  for (NodeId c : s.ids()) {
    s.erase(c);
    const double x = v(s);
    s.insert(c);
    if (best == kNoNode || x > best_value) {
      best = c;
      best_value = x;
    }
  }
  if (best == kNoNode || best_value < tau) return false;
  s.erase(best);
  value = best_value;
  return true;
}

}  // namespace detail

// Starts from the empty set and adds, one per round, the candidate with the
// largest value until tau is reached.
inline NodeSet greedy_add(std::span<const NodeId> candidates, std::size_t universe, const EvalFn& v, double tau) {
  const auto pool = detail::sorted_ids(candidates);
  NodeSet s(universe);
  double value = v(s);
  while (value < tau) {
    if (!detail::add_best(s, pool, v, value)) throw UnreachableThreshold("greedy addition exhausted its candidates");
  }
  return s;
}

// Adds candidates in ranking order until tau is reached.
inline NodeSet heuristic_add(std::span<const NodeId> candidates, std::size_t universe, const RankingScores& scores,
                             const EvalFn& v, double tau) {
  NodeSet s(universe);
  if (v(s) >= tau) return s;
  for (NodeId c : scores.order({candidates.begin(), candidates.end()})) {
    s.insert(c);
    if (v(s) >= tau) return s;
  }
  throw UnreachableThreshold("heuristic addition exhausted its candidates");
}

// Tries members for removal in shuffled order; after every successful removal
// starts over with a fresh permutation. Ends 1-minimal.
inline NodeSet random_removal(NodeSet s, const EvalFn& v, double tau, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  bool removed = true;
  while (removed) {
    removed = false;
    std::vector<NodeId> order = s.ids();
    std::shuffle(order.begin(), order.end(), rng);
    for (NodeId c : order) {
      s.erase(c);
      if (v(s) >= tau) {
        removed = true;
        break;
      }
      s.insert(c);
    }
  }
  return s;
}

// Oscillating refinement: greedily add `l` candidates, then remove the least
// damaging members while the value stays at or above tau. A strictly smaller
// result is kept and `l` resets to 1; otherwise `l` grows until it passes
// min(5, 2|S|).
inline NodeSet fine_tune(NodeSet s, std::span<const NodeId> candidates, const EvalFn& v, double tau) {
  const auto pool = detail::sorted_ids(candidates);
  std::size_t l = 1;
  while (l <= std::min<std::size_t>(5, 2 * s.count())) {
    NodeSet t = s;
    double value = 0.0;
    for (std::size_t j = 0; j < l; ++j) {
      if (!detail::add_best(t, pool, v, value)) break;
    }
    while (detail::remove_least_damaging(t, v, tau, value)) {
    }
    // Shrinking needs at least one removal, and removals keep v >= tau.
    if (t.count() < s.count()) {
      s = std::move(t);
      l = 1;
    } else {
      ++l;
    }
  }
  return s;
}

}  // namespace hmilx
