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

// Minimal end-to-end walk through the library: infer a schema from a handful
// of documents, plant a concept, train a classifier and explain one positive.

#include <iostream>
#include <random>
#include <vector>

#include "hmilx/hmilx.hpp"

int main() {
  using namespace hmilx;

  std::mt19937_64 rng(1);
  const std::vector<std::string> vendors = {"acme", "globex", "initech", "umbrella"};
  const std::vector<std::string> kinds = {"sensor", "switch", "camera"};
  std::vector<json> corpus;
  for (int i = 0; i < 300; ++i) {
    json d = {{"vendor", vendors[rng() % vendors.size()]}, {"kind", kinds[rng() % kinds.size()]}};
    json ports = json::array();
    for (std::uint64_t p = rng() % 3; p > 0; --p) ports.push_back({{"port", (rng() % 2) ? 80 : 443}, {"tls", rng() % 2 == 0}});
    d["ports"] = ports;
    corpus.push_back(d);
  }
  const SchemaNode schema = infer_schema(corpus);
  std::cout << pretty_string(schema);

  const Concept target = make_concept(schema, ConceptKind::I, rng);
  std::cout << "planted concept: " << target.to_json().dump() << '\n';
  const auto data = generate_dataset(schema, target, 1000, 0.5, 2);

  std::vector<TrainingExample> examples;
  for (const auto& ls : data) examples.push_back({Sample::from_json(ls.sample), ls.positive});
  TrainConfig cfg;
  cfg.steps = 1000;
  const SelectionResult trained = select_best_model(schema, examples, concept_samples(data, target), 3, 5, cfg);
  std::cout << "training accuracy: " << training_accuracy(trained.model, examples) << '\n';

  for (const auto& ls : data) {
    if (!ls.positive) continue;
    const Sample s = Sample::from_json(ls.sample);
    const double confidence = classify(trained.model, s).confidence;
    if (confidence <= 0.0) continue;
    ExplainOptions opt;
    opt.tau = 0.9 * confidence;
    const Explanation e = explain(trained.model, s, MethodSpec::parse("flat-banz-add-rr-ft"), opt);
    std::cout << "sample:      " << ls.sample.dump() << '\n'
              << "explanation: " << e.pruned.dump() << '\n'
              << "details:     " << e.metadata().dump() << '\n';
    break;
  }
  return 0;
}
