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

// Command-line front end: infer-schema, gen-data, train, explain, evaluate.

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>

#include "hmilx/harness.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Train hierarchical multiple-instance classifiers on JSON data and explain their decisions."};
  app.require_subcommand(1);

  std::string input, out;
  auto* infer = app.add_subcommand("infer-schema", "Infer a schema with statistics from a JSON-lines corpus");
  infer->add_option("--input,input", input, "JSON-lines corpus")->required();
  infer->add_option("--out", out, "schema JSON to write")->required();

  hmilx::GenDataArgs gen;
  std::string kind = "i";
  auto* gen_cmd = app.add_subcommand("gen-data", "Generate a labeled synthetic dataset with a planted concept");
  gen_cmd->add_option("--schema", gen.schema, "schema JSON")->required();
  gen_cmd->add_option("--kind", kind, "concept kind i..vii")->capture_default_str();
  gen_cmd->add_option("--n", gen.n, "number of samples")->capture_default_str();
  gen_cmd->add_option("--positive-fraction", gen.positive_fraction, "share of positives")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  gen_cmd->add_option("--seed", gen.seed, "random seed")->capture_default_str();
  gen_cmd->add_option("--out", gen.out, "dataset JSON-lines to write (concept goes to <out>.concept.json)")
      ->required();

  hmilx::TrainArgs tr;
  std::string train_concept;
  auto* train_cmd = app.add_subcommand("train", "Train candidate models and keep the best one");
  train_cmd->add_option("--schema", tr.schema, "schema JSON")->required();
  train_cmd->add_option("--dataset", tr.dataset, "labeled dataset")->required();
  train_cmd->add_option("--concept", train_concept, "concept file used for model selection");
  train_cmd->add_option("--k", tr.k, "embedding width")->capture_default_str();
  train_cmd->add_option("--steps", tr.steps, "optimizer steps per candidate")->capture_default_str();
  train_cmd->add_option("--n-models", tr.n_models, "candidates to train")->capture_default_str();
  train_cmd->add_option("--seed", tr.seed, "random seed")->capture_default_str();
  train_cmd->add_option("--out", tr.out, "model file to write (report goes to <out>.report.json)")->required();

  hmilx::ExplainArgs ex;
  auto* explain_cmd = app.add_subcommand("explain", "Explain the positive classification of one sample");
  explain_cmd->add_option("--model", ex.model, "model file")->required();
  explain_cmd->add_option("--sample", ex.sample, "JSON document")->required();
  explain_cmd->add_option("--method", ex.method, "<search>-<ranking>-<stages>")->capture_default_str();
  explain_cmd->add_option("--tau-factor", ex.tau_factor, "threshold as a fraction of the full confidence")
      ->capture_default_str();
  explain_cmd->add_option("--seed", ex.seed, "random seed")->capture_default_str();
  explain_cmd->add_option("--out", ex.out, "pruned JSON to write (metadata goes to <out>.meta.json)")->required();

  hmilx::EvaluateArgs ev;
  std::string eval_concept;
  auto* eval_cmd = app.add_subcommand("evaluate", "Explain many positives and report excess leaves and costs");
  eval_cmd->add_option("--model", ev.model, "model file")->required();
  eval_cmd->add_option("--dataset", ev.dataset, "labeled dataset")->required();
  eval_cmd->add_option("--concept", eval_concept, "concept file for excess-leaf scoring");
  eval_cmd->add_option("--method,--methods", ev.methods, "comma-separated method specs, or 'all'")
      ->capture_default_str();
  eval_cmd->add_option("--n-explanations", ev.n_explanations, "samples to explain")->capture_default_str();
  eval_cmd->add_option("--tau-factor", ev.tau_factor, "threshold as a fraction of the full confidence")
      ->capture_default_str();
  eval_cmd->add_option("--seed", ev.seed, "random seed")->capture_default_str();
  eval_cmd->add_option("--out", ev.out, "report JSON to write (table goes to <out>.txt)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*infer) {
      hmilx::cmd_infer_schema(input, out, std::cout);
    } else if (*gen_cmd) {
      gen.kind = hmilx::concept_kind_from_string(kind);
      hmilx::cmd_gen_data(gen, std::cout);
    } else if (*train_cmd) {
      if (!train_concept.empty()) tr.concept_file = train_concept;
      hmilx::cmd_train(tr, std::cout);
    } else if (*explain_cmd) {
      hmilx::cmd_explain(ex, std::cout);
    } else if (*eval_cmd) {
      if (!eval_concept.empty()) ev.concept_file = eval_concept;
      const auto report = hmilx::cmd_evaluate(ev, std::cout);
      if (!report.valid()) return 2;
    }
  } catch (const hmilx::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
