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

#include <chrono>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "hmilx/model.hpp"
#include "hmilx/ranking.hpp"
#include "hmilx/subset.hpp"
#include "hmilx/train.hpp"

namespace hmilx {

enum class SearchMode { Flat, Leafs, LevelByLevel };
enum class RankerKind { Greedy, Grad, Banz, Gnn, Gnn2, Rand };

struct Stages {
  bool add = true;
  bool rr = false;
  bool ft = false;
  friend bool operator==(const Stages&, const Stages&) = default;
};

inline std::string_view to_string(SearchMode m) {
  switch (m) {
    case SearchMode::Flat: return "flat";
    case SearchMode::Leafs: return "leafs";
    case SearchMode::LevelByLevel: return "lbyl";
  }
  return "?";
}

inline std::string_view to_string(RankerKind r) {
  switch (r) {
    case RankerKind::Greedy: return "greedy";
    case RankerKind::Grad: return "grad";
    case RankerKind::Banz: return "banz";
    case RankerKind::Gnn: return "gnn";
    case RankerKind::Gnn2: return "gnn2";
    case RankerKind::Rand: return "rand";
  }
  return "?";
}

// `<search>-<ranking>-<stages>`, e.g. "lbyl-banz-add-rr-ft".
struct MethodSpec {
  SearchMode search = SearchMode::Flat;
  RankerKind ranker = RankerKind::Greedy;
  Stages stages;

  static MethodSpec parse(std::string_view text) {
    std::vector<std::string> parts;
    std::stringstream in{std::string(text)};
    for (std::string part; std::getline(in, part, '-');) parts.push_back(part);
    auto fail = [&](const std::string& why) { return Error("bad method '" + std::string(text) + "': " + why); };
    if (parts.size() < 3) throw fail("expected <search>-<ranking>-<stages>");
    MethodSpec m;
    if (parts[0] == "flat") m.search = SearchMode::Flat;
    else if (parts[0] == "leafs") m.search = SearchMode::Leafs;
    else if (parts[0] == "lbyl") m.search = SearchMode::LevelByLevel;
    else throw fail("unknown search '" + parts[0] + "'");
    bool known = false;
    for (RankerKind r : {RankerKind::Greedy, RankerKind::Grad, RankerKind::Banz, RankerKind::Gnn, RankerKind::Gnn2,
                         RankerKind::Rand}) {
      if (parts[1] == hmilx::to_string(r)) {
        m.ranker = r;
        known = true;
      }
    }
    if (!known) throw fail("unknown ranking '" + parts[1] + "'");
    m.stages = {false, false, false};
    int last = -1;
    for (std::size_t i = 2; i < parts.size(); ++i) {
      const int at = parts[i] == "add" ? 0 : parts[i] == "rr" ? 1 : parts[i] == "ft" ? 2 : -1;
      if (at < 0) throw fail("unknown stage '" + parts[i] + "'");
      if (at <= last) throw fail("stages must be a subset of add, rr, ft in that order");
      last = at;
      (at == 0 ? m.stages.add : at == 1 ? m.stages.rr : m.stages.ft) = true;
    }
    return m;
  }

  std::string to_string() const {
    std::string s = std::string(hmilx::to_string(search)) + "-" + std::string(hmilx::to_string(ranker));
    if (stages.add) s += "-add";
    if (stages.rr) s += "-rr";
    if (stages.ft) s += "-ft";
    return s;
  }

  friend bool operator==(const MethodSpec&, const MethodSpec&) = default;
};

struct ExplainOptions {
  double tau = 0.0;
  std::uint64_t seed = 0;
  std::size_t banzhaf_samples = 200;
  std::size_t gnn_steps = 200;
};

struct Explanation {
  NodeSet nodes;  // prefix-closed
  json pruned;
  double confidence = 0.0;
  std::size_t leaf_count = 0;  // atomic values kept
  MethodSpec method;
  double tau = 0.0;
  std::uint64_t seed = 0;
  double seconds = 0.0;
  CounterSnapshot counters;

  json metadata() const {
    return {{"method", method.to_string()}, {"tau", tau},           {"seed", seed},
            {"confidence", confidence},     {"leaf_count", leaf_count}, {"seconds", seconds},
            {"inferences", counters.inferences}, {"gradients", counters.gradients}};
  }
};

// Scores for every maskable node, or nothing for plain greedy addition.
inline std::optional<RankingScores> compute_ranking(Evaluator& ev, RankerKind ranker, const ExplainOptions& opt) {
  switch (ranker) {
    case RankerKind::Greedy: return std::nullopt;
    case RankerKind::Grad: return rank_gradient(ev);
    case RankerKind::Banz: return rank_banzhaf(ev, opt.banzhaf_samples, opt.seed);
    case RankerKind::Gnn: {
      GnnConfig c = GnnConfig::standard();
      c.steps = opt.gnn_steps;
      return rank_gnn_mask(ev, c);
    }
    case RankerKind::Gnn2: {
      GnnConfig c = GnnConfig::sparse();
      c.steps = opt.gnn_steps;
      return rank_gnn_mask(ev, c);
    }
    case RankerKind::Rand: return rank_random(ev.sample(), opt.seed);
  }
  return std::nullopt;
}

namespace detail {

// Addition (greedy or ranked), then optional removal and fine tuning. The fine
// tuned set is kept only if `cost` does not grow.
template <class Cost>
NodeSet run_stages(std::span<const NodeId> candidates, std::size_t universe, const EvalFn& v, double tau,
                   const std::optional<RankingScores>& scores, const Stages& stages, std::uint64_t seed, Cost&& cost) {
  NodeSet s(universe);
  if (!stages.add) {
    for (NodeId c : candidates) s.insert(c);
  } else if (scores) {
    s = heuristic_add(candidates, universe, *scores, v, tau);
  } else {
    s = greedy_add(candidates, universe, v, tau);
  }
  if (stages.rr) s = random_removal(std::move(s), v, tau, seed);
  if (stages.ft) {
    NodeSet t = fine_tune(s, candidates, v, tau);
    if (cost(t) <= cost(s)) s = std::move(t);
  }
  return s;
}

class Session {
 public:
  Session(const Model& model, const Sample& sample, const MethodSpec& method, const ExplainOptions& opt)
      : ev_(model, sample), method_(method), opt_(opt), start_(std::chrono::steady_clock::now()) {
    if (ev_.classify_full().confidence < opt.tau) {
      throw InconsistentInput("full-sample confidence is below the threshold");
    }
    scores_ = compute_ranking(ev_, method.ranker, opt);
  }

  Evaluator& ev() { return ev_; }
  const Sample& sample() const { return ev_.sample(); }
  const std::optional<RankingScores>& scores() const { return scores_; }

  Explanation finish(const NodeSet& keep) {
    Explanation e;
    e.nodes = reachable_closure(sample(), keep);
    e.confidence = ev_.confidence(e.nodes);
    e.pruned = pruned_json(sample(), e.nodes);
    e.leaf_count = atomic_leaf_count(sample(), e.nodes);
    e.method = method_;
    e.tau = opt_.tau;
    e.seed = opt_.seed;
    e.counters = ev_.counters();
    e.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    return e;
  }

 private:
  Evaluator ev_;
  MethodSpec method_;
  ExplainOptions opt_;
  std::chrono::steady_clock::time_point start_;
  std::optional<RankingScores> scores_;
};

}  // namespace detail

// Removal stages draw their permutations from derive_seed(seed, level), the
// flat and leaf searches counting as a single level 1.

// Every non-root node is a separate element; unreachable members contribute
// nothing and are pruned at the end.
inline Explanation search_flat(const Model& model, const Sample& sample, RankerKind ranker, const Stages& stages,
                               const ExplainOptions& opt) {
  detail::Session session(model, sample, {SearchMode::Flat, ranker, stages}, opt);
  const auto candidates = sample.maskable();
  const EvalFn v = [&](const NodeSet& s) {
    NodeSet mask = s;
    mask.insert(0);
    return session.ev().confidence(mask);
  };
  auto cost = [&](const NodeSet& s) { return atomic_leaf_count(sample, s); };
  NodeSet s = detail::run_stages(candidates, sample.size(), v, opt.tau, session.scores(), stages,
                                 derive_seed(opt.seed, 1), cost);
  s.insert(0);
  return session.finish(s);
}

// Elements are the nodes without children; a kept leaf brings its ancestors.
inline Explanation search_leafs(const Model& model, const Sample& sample, RankerKind ranker, const Stages& stages,
                                const ExplainOptions& opt) {
  detail::Session session(model, sample, {SearchMode::Leafs, ranker, stages}, opt);
  const auto candidates = sample.leaves();
  const EvalFn v = [&](const NodeSet& s) { return session.ev().confidence(ancestor_closure(sample, s)); };
  auto cost = [&](const NodeSet& s) { return atomic_leaf_count(sample, ancestor_closure(sample, s)); };
  const NodeSet s = detail::run_stages(candidates, sample.size(), v, opt.tau, session.scores(), stages,
                                       derive_seed(opt.seed, 1), cost);
  return session.finish(ancestor_closure(sample, s));
}

// One depth at a time: a candidate child is toggled together with all of its
// descendants while shallower selections stay fixed.
inline Explanation search_level_by_level(const Model& model, const Sample& sample, RankerKind ranker,
                                         const Stages& stages, const ExplainOptions& opt) {
  detail::Session session(model, sample, {SearchMode::LevelByLevel, ranker, stages}, opt);
  const std::size_t n = sample.size();
  NodeSet kept = NodeSet::root_only(sample);
  for (std::uint32_t depth = 1; depth <= sample.max_depth(); ++depth) {
    std::vector<NodeId> candidates;
    for (NodeId i = 1; i < n; ++i) {
      if (sample.node(i).depth == depth && kept.contains(sample.node(i).parent)) candidates.push_back(i);
    }
    if (candidates.empty()) break;
    const EvalFn v = [&](const NodeSet& s) {
      NodeSet mask = kept;
      for (NodeId c : s.ids()) {
        for (NodeId d = c; d < sample.node(c).subtree_end; ++d) mask.insert(d);
      }
      return session.ev().confidence(mask);
    };
    auto cost = [](const NodeSet& s) { return s.count(); };
    const NodeSet s = detail::run_stages(candidates, n, v, opt.tau, session.scores(), stages,
                                         derive_seed(opt.seed, depth), cost);
    for (NodeId c : s.ids()) kept.insert(c);
  }
  return session.finish(kept);
}

inline Explanation explain(const Model& model, const Sample& sample, const MethodSpec& method,
                           const ExplainOptions& opt) {
  switch (method.search) {
    case SearchMode::Flat: return search_flat(model, sample, method.ranker, method.stages, opt);
    case SearchMode::Leafs: return search_leafs(model, sample, method.ranker, method.stages, opt);
    case SearchMode::LevelByLevel: return search_level_by_level(model, sample, method.ranker, method.stages, opt);
  }
  throw Error("unknown search mode");
}

}  // namespace hmilx
