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
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "hmilx/model.hpp"

namespace hmilx {

enum class RankingMethod { Gradient, Banzhaf, GnnMask, Random };

inline std::string_view to_string(RankingMethod m) {
  switch (m) {
    case RankingMethod::Gradient: return "Grad";
    case RankingMethod::Banzhaf: return "Banzhaf";
    case RankingMethod::GnnMask: return "GnnMask";
    case RankingMethod::Random: return "Random";
  }
  return "?";
}

// One score per maskable node. `score` is indexed by node id; the root entry
// is unused and held at zero.
struct RankingScores {
  RankingMethod method = RankingMethod::Random;
  std::vector<double> score;
  std::vector<NodeId> degenerate;  // Banzhaf nodes with an empty bucket

  double operator[](NodeId id) const { return score[id]; }

  // `ids` sorted by descending score; ties go to the lowest id.
  std::vector<NodeId> order(std::vector<NodeId> ids) const {
    std::stable_sort(ids.begin(), ids.end(), [&](NodeId a, NodeId b) {
      if (score[a] != score[b]) return score[a] > score[b];
      return a < b;
    });
    return ids;
  }

  json to_json(const Sample& sample) const {
    json j = json::object();
    for (NodeId i = 1; i < sample.size(); ++i) j[sample.path_string(i)] = score[i];
    return j;
  }
};

inline RankingScores rank_gradient(Evaluator& ev) {
  const std::size_t k = ev.model().k();
  const auto dh = ev.subtree_gradients();
  RankingScores r{RankingMethod::Gradient, std::vector<double>(ev.sample().size(), 0.0), {}};
  for (NodeId i = 1; i < ev.sample().size(); ++i) {
    double sum = 0.0;
    for (std::size_t d = 0; d < k; ++d) sum += dh[i * k + d];
    r.score[i] = std::abs(sum);
  }
  return r;
}

inline RankingScores rank_gradient(const Model& model, const Sample& sample) {
  Evaluator ev(model, sample);
  return rank_gradient(ev);
}

// Monte-Carlo Banzhaf values over nodes 1..n-1 of a universe of size n: each
// of `n_samples` coalitions includes every node by a fair coin; `value` maps a
// coalition (root always included) to a payoff.
template <class ValueFn>
RankingScores banzhaf_scores(std::size_t n, ValueFn&& value, std::size_t n_samples, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<double> in_sum(n, 0.0), out_sum(n, 0.0);
  std::vector<std::size_t> in_count(n, 0), out_count(n, 0);
  NodeSet mask(n);
  if (n > 0) mask.insert(0);
  for (std::size_t t = 0; t < n_samples; ++t) {
    for (NodeId i = 1; i < n; ++i) mask.set(i, (rng() >> 63) != 0);
    const double v = value(mask);
    for (NodeId i = 1; i < n; ++i) {
      if (mask.contains(i)) {
        in_sum[i] += v;
        ++in_count[i];
      } else {
        out_sum[i] += v;
        ++out_count[i];
      }
    }
  }
  RankingScores r{RankingMethod::Banzhaf, std::vector<double>(n, 0.0), {}};
  for (NodeId i = 1; i < n; ++i) {
    if (in_count[i] == 0 || out_count[i] == 0) {
      r.degenerate.push_back(i);
      continue;
    }
    r.score[i] = in_sum[i] / static_cast<double>(in_count[i]) - out_sum[i] / static_cast<double>(out_count[i]);
  }
  return r;
}

inline RankingScores rank_banzhaf(Evaluator& ev, std::size_t n_samples = 200, std::uint64_t seed = 0) {
  return banzhaf_scores(
      ev.sample().size(), [&](const NodeSet& mask) { return ev.confidence(mask); }, n_samples, seed);
}

inline RankingScores rank_banzhaf(const Model& model, const Sample& sample, std::size_t n_samples = 200,
                                  std::uint64_t seed = 0) {
  Evaluator ev(model, sample);
  return rank_banzhaf(ev, n_samples, seed);
}

struct GnnConfig {
  std::size_t steps = 200;
  double alpha = 1.0;    // entropy penalty
  double beta = 0.005;   // mass penalty
  double lr = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  static GnnConfig standard() { return {}; }
  static GnnConfig sparse() {
    GnnConfig c;
    c.beta = 0.1;
    return c;
  }
};

// Edge-mask explainer: learns a sigmoid weight per parent-child edge by
// ascending confidence - alpha * entropy - beta * mass.
inline RankingScores rank_gnn_mask(Evaluator& ev, const GnnConfig& cfg = {}) {
  const std::size_t n = ev.sample().size();
  std::vector<double> logit(n, 0.0), mask(n, 0.5), grad(n, 0.0), m1(n, 0.0), m2(n, 0.0);
  mask[0] = 1.0;
  double p1 = 1.0, p2 = 1.0;
  for (std::size_t step = 0; step < cfg.steps; ++step) {
    ev.weighted_confidence(mask, grad);
    p1 *= cfg.beta1;
    p2 *= cfg.beta2;
    for (NodeId i = 1; i < n; ++i) {
      const double m = mask[i];
      const double mc = std::clamp(m, 1e-12, 1.0 - 1e-12);
      const double d_obj = grad[i] - cfg.alpha * std::log((1.0 - mc) / mc) - cfg.beta;
      const double g = d_obj * m * (1.0 - m);
      m1[i] = cfg.beta1 * m1[i] + (1.0 - cfg.beta1) * g;
      m2[i] = cfg.beta2 * m2[i] + (1.0 - cfg.beta2) * g * g;
      logit[i] += cfg.lr * (m1[i] / (1.0 - p1)) / (std::sqrt(m2[i] / (1.0 - p2)) + cfg.epsilon);
      mask[i] = 1.0 / (1.0 + std::exp(-logit[i]));
    }
  }
  RankingScores r{RankingMethod::GnnMask, std::vector<double>(n, 0.0), {}};
  for (NodeId i = 1; i < n; ++i) r.score[i] = mask[i];
  return r;
}

inline RankingScores rank_gnn_mask(const Model& model, const Sample& sample, const GnnConfig& cfg = {}) {
  Evaluator ev(model, sample);
  return rank_gnn_mask(ev, cfg);
}

inline RankingScores rank_random(const Sample& sample, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  RankingScores r{RankingMethod::Random, std::vector<double>(sample.size(), 0.0), {}};
  for (NodeId i = 1; i < sample.size(); ++i) {
    double u = 0.0;
    while (u == 0.0) u = unit(rng);
    r.score[i] = u;
  }
  return r;
}

}  // namespace hmilx
