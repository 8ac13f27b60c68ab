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

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "hmilx/model.hpp"
#include "hmilx/rng.hpp"

namespace hmilx {

struct TrainingExample {
  Sample sample;
  bool positive = false;
};

// ADAM with the usual defaults over random minibatches.
struct TrainConfig {
  std::size_t steps = 2000;
  std::size_t batch_size = 100;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t seed = 0;
};

struct TrainHistory {
  std::vector<double> loss;  // mean minibatch cross-entropy per step
};

// Softmax cross-entropy of one sample, accumulating its parameter gradient
// scaled by `scale` into `grad`.
inline double cross_entropy_step(const Model& model, const BoundSample& b, bool positive, detail::Workspace& ws,
                                 std::span<double> grad, double scale) {
  const Prediction pr = model.forward(b, ws, nullptr);
  const double hi = std::max(pr.logit_pos, pr.logit_neg);
  const double ep = std::exp(pr.logit_pos - hi);
  const double en = std::exp(pr.logit_neg - hi);
  const double pp = ep / (ep + en);
  const double pn = en / (ep + en);
  const double dl[2] = {scale * (pp - (positive ? 1.0 : 0.0)), scale * (pn - (positive ? 0.0 : 1.0))};
  if (!grad.empty()) model.backward(b, ws, dl, grad);
  const double chosen = positive ? pr.logit_pos : pr.logit_neg;
  return -(chosen - hi - std::log(ep + en));
}

inline double mean_cross_entropy(const Model& model, std::span<const BoundSample> data, std::span<const char> labels) {
  detail::Workspace ws;
  double total = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) total += cross_entropy_step(model, data[i], labels[i], ws, {}, 1.0);
  return data.empty() ? 0.0 : total / static_cast<double>(data.size());
}

inline TrainHistory train(Model& model, std::span<const TrainingExample> dataset, const TrainConfig& config = {}) {
  TrainHistory history;
  if (dataset.empty() || config.steps == 0) return history;
  std::vector<BoundSample> bound;
  bound.reserve(dataset.size());
  for (const auto& ex : dataset) bound.push_back(model.bind(ex.sample));

  auto& params = model.parameters();
  const std::size_t n = params.size();
  std::vector<double> grad(n, 0.0), m1(n, 0.0), m2(n, 0.0);
  std::mt19937_64 rng(config.seed);
  std::uniform_int_distribution<std::size_t> pick(0, dataset.size() - 1);
  detail::Workspace ws;
  const std::size_t batch = std::max<std::size_t>(1, config.batch_size);
  double b1t = 1.0, b2t = 1.0;
  for (std::size_t step = 0; step < config.steps; ++step) {
    std::fill(grad.begin(), grad.end(), 0.0);
    double loss = 0.0;
    const double scale = 1.0 / static_cast<double>(batch);
    for (std::size_t t = 0; t < batch; ++t) {
      const std::size_t i = pick(rng);
      loss += cross_entropy_step(model, bound[i], dataset[i].positive, ws, grad, scale);
    }
    history.loss.push_back(loss * scale);
    b1t *= config.beta1;
    b2t *= config.beta2;
    const double c1 = 1.0 / (1.0 - b1t);
    const double c2 = 1.0 / (1.0 - b2t);
    for (std::size_t j = 0; j < n; ++j) {
      const double g = grad[j];
      m1[j] = config.beta1 * m1[j] + (1.0 - config.beta1) * g;
      m2[j] = config.beta2 * m2[j] + (1.0 - config.beta2) * g * g;
      params[j] -= config.learning_rate * (m1[j] * c1) / (std::sqrt(m2[j] * c2) + config.epsilon);
    }
  }
  return history;
}

inline double training_accuracy(const Model& model, std::span<const TrainingExample> dataset) {
  if (dataset.empty()) return 0.0;
  std::size_t correct = 0;
  detail::Workspace ws;
  for (const auto& ex : dataset) {
    const BoundSample b = model.bind(ex.sample);
    if (model.forward(b, ws, nullptr).positive() == ex.positive) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(dataset.size());
}

struct CandidateReport {
  std::uint64_t seed = 0;
  double empty_confidence = 0.0;
  double mean_concept_confidence = 0.0;
  double final_loss = 0.0;
};

struct SelectionResult {
  Model model;
  std::size_t chosen = 0;
  bool warning = false;  // no candidate classified the empty sample negative
  std::vector<CandidateReport> candidates;
  TrainHistory history;  // of the chosen candidate
};

// Trains `n_models` candidates and keeps the one that classifies the empty
// sample negative and gives the concepts the highest mean confidence. Falls
// back to the most negative empty-sample confidence (with a warning) when no
// candidate qualifies.
inline SelectionResult select_best_model(const SchemaNode& schema, std::span<const TrainingExample> dataset,
                                         std::span<const Sample> concepts, std::size_t n_models, std::size_t k,
                                         const TrainConfig& config = {}, const CategoricalRule& rule = {}) {
  if (n_models == 0) throw Error("n_models must be positive");
  const Sample empty = empty_sample(schema);
  SelectionResult result;
  std::optional<std::size_t> best;
  double best_score = -std::numeric_limits<double>::infinity();
  std::optional<Model> best_model;
  TrainHistory best_history;
  std::size_t fallback = 0;
  double fallback_empty = std::numeric_limits<double>::infinity();
  std::optional<Model> fallback_model;
  TrainHistory fallback_history;

  for (std::size_t c = 0; c < n_models; ++c) {
    const std::uint64_t seed = derive_seed(config.seed, c);
    Model model = build_model(schema, k, seed, rule);
    TrainConfig cfg = config;
    cfg.seed = derive_seed(seed, 0);
    TrainHistory history = train(model, dataset, cfg);

    CandidateReport report;
    report.seed = seed;
    report.final_loss = history.loss.empty() ? 0.0 : history.loss.back();
    detail::Workspace ws;
    report.empty_confidence = model.forward(model.bind(empty), ws, nullptr).confidence;
    double sum = 0.0;
    for (const auto& concept_sample : concepts) sum += model.forward(model.bind(concept_sample), ws, nullptr).confidence;
    report.mean_concept_confidence = concepts.empty() ? 0.0 : sum / static_cast<double>(concepts.size());
    result.candidates.push_back(report);

    if (report.empty_confidence < 0.0 && report.mean_concept_confidence > best_score) {
      best_score = report.mean_concept_confidence;
      best = c;
      best_model = model;
      best_history = history;
    }
    if (report.empty_confidence < fallback_empty) {
      fallback_empty = report.empty_confidence;
      fallback = c;
      fallback_model = std::move(model);
      fallback_history = std::move(history);
    }
  }
  if (best) {
    result.chosen = *best;
    result.model = std::move(*best_model);
    result.history = std::move(best_history);
  } else {
    result.chosen = fallback;
    result.warning = true;
    result.model = std::move(*fallback_model);
    result.history = std::move(fallback_history);
  }
  return result;
}

}  // namespace hmilx
