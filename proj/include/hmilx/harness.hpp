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
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <iomanip>
#include <limits>
#include <optional>
#include <ostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "hmilx/explain.hpp"
#include "hmilx/schema.hpp"
#include "hmilx/synthgen.hpp"
#include "hmilx/train.hpp"

namespace hmilx {

// ---- files ---------------------------------------------------------------

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  out << text;
  if (!out) throw Error("write failed for '" + path + "'");
}

inline json read_json_file(const std::string& path) {
  try {
    return json::parse(read_text_file(path));
  } catch (const json::parse_error& e) {
    throw ParseError("'" + path + "': " + e.what());
  }
}

inline std::vector<json> read_json_lines_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  return read_json_lines(in);
}

inline std::vector<LabeledSample> read_dataset_file(const std::string& path) {
  std::vector<LabeledSample> out;
  for (const json& j : read_json_lines_file(path)) out.push_back(LabeledSample::from_json(j));
  return out;
}

inline void write_dataset_file(const std::string& path, const std::vector<LabeledSample>& data) {
  std::ostringstream ss;
  write_dataset(ss, data);
  write_text_file(path, ss.str());
}

inline std::string concept_path_for(const std::string& dataset_path) { return dataset_path + ".concept.json"; }

// ---- statistics ------------------------------------------------------------

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;  // sample standard deviation / sqrt(n)
};

inline MeanSe mean_se(const std::vector<double>& xs) {
  MeanSe r;
  if (xs.empty()) return r;
  for (double x : xs) r.mean += x;
  r.mean /= static_cast<double>(xs.size());
  if (xs.size() < 2) return r;
  double ss = 0.0;
  for (double x : xs) ss += (x - r.mean) * (x - r.mean);
  r.se = std::sqrt(ss / static_cast<double>(xs.size() - 1)) / std::sqrt(static_cast<double>(xs.size()));
  return r;
}

// ---- evaluation --------------------------------------------------------------

struct EvalConfig {
  std::vector<MethodSpec> methods;
  std::size_t n_explanations = 100;
  std::uint64_t seed = 0;
  double tau_factor = 0.9;
  std::size_t banzhaf_samples = 200;
  std::size_t gnn_steps = 200;

  json to_json() const {
    json m = json::array();
    for (const auto& x : methods) m.push_back(x.to_string());
    const GnnConfig g1 = GnnConfig::standard(), g2 = GnnConfig::sparse();
    return {{"methods", m},
            {"n_explanations", n_explanations},
            {"seed", seed},
            {"tau_factor", tau_factor},
            {"banzhaf_samples", banzhaf_samples},
            {"gnn_steps", gnn_steps},
            {"gnn", {{"alpha", g1.alpha}, {"beta", g1.beta}, {"lr", g1.lr}}},
            {"gnn2", {{"alpha", g2.alpha}, {"beta", g2.beta}, {"lr", g2.lr}}}};
  }
};

struct MethodRow {
  std::string method;
  std::size_t n = 0;
  MeanSe excess;
  MeanSe seconds;
  MeanSe leaves;
  double inferences = 0.0;  // means per explanation
  double gradients = 0.0;
  double consistency = 0.0;  // fraction with confidence >= tau and prefix closure
  std::vector<double> per_sample_excess;
};

struct EvalReport {
  EvalConfig config;
  std::size_t eligible = 0;  // correctly classified positives available
  std::vector<std::size_t> explained;  // dataset indices
  double mean_input_leaves = 0.0;
  std::vector<MethodRow> rows;

  bool valid() const {
    return std::all_of(rows.begin(), rows.end(), [](const MethodRow& r) { return r.consistency == 1.0; });
  }

  const MethodRow& row(const std::string& method) const {
    for (const auto& r : rows) {
      if (r.method == method) return r;
    }
    throw Error("no report row for " + method);
  }

  json to_json() const {
    json rs = json::array();
    for (const auto& r : rows) {
      rs.push_back({{"method", r.method},
                    {"n", r.n},
                    {"excess_leaves", {{"mean", r.excess.mean}, {"se", r.excess.se}}},
                    {"seconds", {{"mean", r.seconds.mean}, {"se", r.seconds.se}}},
                    {"explanation_leaves", {{"mean", r.leaves.mean}, {"se", r.leaves.se}}},
                    {"inferences", r.inferences},
                    {"gradients", r.gradients},
                    {"consistency", r.consistency}});
    }
    return {{"config", config.to_json()}, {"eligible", eligible},          {"explained", explained},
            {"input_leaves", mean_input_leaves}, {"valid", valid()}, {"rows", rs}};
  }

  std::string table() const {
    auto pm = [](const MeanSe& x, int prec) {
      std::ostringstream s;
      s << std::fixed << std::setprecision(prec) << x.mean << "±" << x.se;
      return s.str();
    };
    std::vector<std::array<std::string, 7>> cells;
    cells.push_back({"method", "excess", "seconds", "leaves", "#inferences", "#gradients", "consistent"});
    for (const auto& r : rows) {
      std::ostringstream inf, grad, cons;
      inf << std::fixed << std::setprecision(1) << r.inferences;
      grad << std::fixed << std::setprecision(1) << r.gradients;
      cons << std::fixed << std::setprecision(3) << r.consistency;
      cells.push_back({r.method, pm(r.excess, 2), pm(r.seconds, 4), pm(r.leaves, 2), inf.str(), grad.str(), cons.str()});
    }
    // Widths count code points so the ± sign does not skew alignment.
    auto width = [](const std::string& s) {
      return static_cast<std::size_t>(std::count_if(s.begin(), s.end(), [](char c) { return (c & 0xC0) != 0x80; }));
    };
    std::array<std::size_t, 7> w{};
    for (const auto& row : cells) {
      for (std::size_t c = 0; c < 7; ++c) w[c] = std::max(w[c], width(row[c]));
    }
    std::ostringstream out;
    for (std::size_t i = 0; i < cells.size(); ++i) {
      for (std::size_t c = 0; c < 7; ++c) {
        const std::string& s = cells[i][c];
        const std::string pad(w[c] - width(s), ' ');
        out << (c == 0 ? s + pad : "  " + pad + s);
      }
      out << '\n';
      if (i == 0) {
        std::size_t total = 0;
        for (std::size_t c = 0; c < 7; ++c) total += w[c] + (c ? 2 : 0);
        out << std::string(total, '-') << '\n';
      }
    }
    out << "explained " << explained.size() << " of " << eligible << " correctly classified positives; "
        << (valid() ? "valid" : "INVALID: inconsistent explanations") << '\n';
    return out.str();
  }
};

// Leaves of the explanation outside the planted concept. With the concept at
// hand the best-matching fragment counts; otherwise the inserted one.
inline std::size_t concept_excess(const json& pruned, const LabeledSample& ls, const std::optional<Concept>& target) {
  if (target && !target->fragments.empty()) {
    std::size_t best = std::numeric_limits<std::size_t>::max();
    for (const auto& f : target->fragments) best = std::min(best, excess_leaves(pruned, f));
    return best;
  }
  return ls.inserted ? excess_leaves(pruned, *ls.inserted) : count_atomic_leaves(pruned);
}

// Explains `n_explanations` randomly chosen correctly classified positives
// with every requested method.
inline EvalReport evaluate(const Model& model, const std::vector<LabeledSample>& data,
                           const std::optional<Concept>& target, const EvalConfig& cfg,
                           const std::function<void(std::size_t, std::size_t)>& progress = {}) {
  EvalReport report;
  report.config = cfg;
  std::vector<std::size_t> eligible;
  std::vector<Sample> samples(data.size());
  std::vector<double> full_conf(data.size(), 0.0);
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (!data[i].positive) continue;
    samples[i] = Sample::from_json(data[i].sample);
    full_conf[i] = classify(model, samples[i]).confidence;
    if (full_conf[i] > 0.0) eligible.push_back(i);
  }
  report.eligible = eligible.size();
  std::mt19937_64 rng(cfg.seed);
  std::shuffle(eligible.begin(), eligible.end(), rng);
  eligible.resize(std::min(eligible.size(), cfg.n_explanations));
  std::sort(eligible.begin(), eligible.end());
  report.explained = eligible;

  struct Acc {
    std::vector<double> excess, seconds, leaves;
    double inferences = 0.0, gradients = 0.0, consistent = 0.0;
  };
  std::vector<Acc> acc(cfg.methods.size());
  double input_leaves = 0.0;
  for (std::size_t t = 0; t < eligible.size(); ++t) {
    const std::size_t i = eligible[t];
    const Sample& s = samples[i];
    input_leaves += static_cast<double>(atomic_leaf_count(s, NodeSet::full(s)));
    ExplainOptions opt;
    opt.tau = cfg.tau_factor * full_conf[i];
    opt.seed = derive_seed(cfg.seed, i);
    opt.banzhaf_samples = cfg.banzhaf_samples;
    opt.gnn_steps = cfg.gnn_steps;
    for (std::size_t m = 0; m < cfg.methods.size(); ++m) {
      const Explanation e = explain(model, s, cfg.methods[m], opt);
      const bool ok = classify(model, s, e.nodes).confidence >= opt.tau && is_prefix_closed(s, e.nodes);
      acc[m].excess.push_back(static_cast<double>(concept_excess(e.pruned, data[i], target)));
      acc[m].seconds.push_back(e.seconds);
      acc[m].leaves.push_back(static_cast<double>(e.leaf_count));
      acc[m].inferences += static_cast<double>(e.counters.inferences);
      acc[m].gradients += static_cast<double>(e.counters.gradients);
      acc[m].consistent += ok ? 1.0 : 0.0;
    }
    if (progress) progress(t + 1, eligible.size());
  }
  const double n = static_cast<double>(std::max<std::size_t>(eligible.size(), 1));
  report.mean_input_leaves = input_leaves / n;
  for (std::size_t m = 0; m < cfg.methods.size(); ++m) {
    MethodRow r;
    r.method = cfg.methods[m].to_string();
    r.n = eligible.size();
    r.excess = mean_se(acc[m].excess);
    r.seconds = mean_se(acc[m].seconds);
    r.leaves = mean_se(acc[m].leaves);
    r.inferences = acc[m].inferences / n;
    r.gradients = acc[m].gradients / n;
    r.consistency = eligible.empty() ? 1.0 : acc[m].consistent / n;
    r.per_sample_excess = acc[m].excess;
    report.rows.push_back(std::move(r));
  }
  return report;
}

inline std::vector<MethodSpec> parse_methods(const std::string& list) {
  std::vector<MethodSpec> out;
  std::stringstream in(list);
  for (std::string item; std::getline(in, item, ',');) {
    if (!item.empty()) out.push_back(MethodSpec::parse(item));
  }
  if (out.empty()) throw Error("no methods given");
  return out;
}

// Every (search x ranking x stage set) combination of the main table.
inline std::vector<MethodSpec> full_method_matrix() {
  std::vector<MethodSpec> out;
  for (SearchMode s : {SearchMode::Flat, SearchMode::Leafs, SearchMode::LevelByLevel}) {
    for (RankerKind r : {RankerKind::Greedy, RankerKind::Grad, RankerKind::Banz, RankerKind::Gnn, RankerKind::Gnn2,
                         RankerKind::Rand}) {
      for (Stages st : {Stages{true, false, false}, Stages{true, true, false}, Stages{true, true, true}}) {
        out.push_back({s, r, st});
      }
    }
  }
  return out;
}

// ---- commands --------------------------------------------------------------

inline void cmd_infer_schema(const std::string& input, const std::string& output, std::ostream& log) {
  const SchemaNode schema = infer_schema(read_json_lines_file(input));
  write_text_file(output, to_json(schema).dump(2) + "\n");
  log << pretty_string(schema);
}

struct GenDataArgs {
  std::string schema;
  ConceptKind kind = ConceptKind::I;
  std::size_t n = 1000;
  double positive_fraction = 0.5;
  std::uint64_t seed = 0;
  std::string out;
};

// The concept draws from a generator seeded with `seed`; the samples from
// streams derived from derive_seed(seed, 1).
inline void cmd_gen_data(const GenDataArgs& a, std::ostream& log) {
  const SchemaNode schema = schema_from_json(read_json_file(a.schema));
  std::mt19937_64 rng(a.seed);
  const Concept c = make_concept(schema, a.kind, rng);
  const auto data = generate_dataset(schema, c, a.n, a.positive_fraction, derive_seed(a.seed, 1));
  write_dataset_file(a.out, data);
  write_text_file(concept_path_for(a.out), c.to_json().dump(2) + "\n");
  const auto pos = static_cast<std::size_t>(std::count_if(data.begin(), data.end(), [](const auto& s) {
    return s.positive;
  }));
  log << "concept " << to_string(c.kind) << ": " << c.to_json()["fragments"].dump() << '\n'
      << "wrote " << data.size() << " samples (" << pos << " pos / " << data.size() - pos << " neg) to " << a.out
      << '\n';
}

struct TrainArgs {
  std::string schema;
  std::string dataset;
  std::optional<std::string> concept_file;
  std::size_t k = 5;
  std::size_t steps = 2000;
  std::size_t n_models = 10;
  std::uint64_t seed = 0;
  std::string out;
};

// Concept samples used by model selection: the concept's fragments, or the
// distinct inserted fragments found in the dataset.
inline std::vector<Sample> concept_samples(const std::vector<LabeledSample>& data, const std::optional<Concept>& c) {
  std::vector<Sample> out;
  if (c) {
    for (const auto& f : c->fragments) out.push_back(Sample::from_json(f));
    return out;
  }
  std::set<std::string> seen;
  for (const auto& ls : data) {
    if (ls.inserted && seen.insert(ls.inserted->dump()).second) out.push_back(Sample::from_json(*ls.inserted));
  }
  return out;
}

inline SelectionResult cmd_train(const TrainArgs& a, std::ostream& log) {
  const SchemaNode schema = schema_from_json(read_json_file(a.schema));
  const auto data = read_dataset_file(a.dataset);
  std::optional<Concept> c;
  if (a.concept_file) c = Concept::from_json(read_json_file(*a.concept_file));
  std::vector<TrainingExample> examples;
  for (const auto& ls : data) examples.push_back({Sample::from_json(ls.sample), ls.positive});
  const auto concepts = concept_samples(data, c);
  TrainConfig cfg;
  cfg.steps = a.steps;
  cfg.seed = a.seed;
  SelectionResult r = select_best_model(schema, examples, concepts, a.n_models, a.k, cfg);
  const double accuracy = training_accuracy(r.model, examples);
  write_text_file(a.out, r.model.to_json().dump() + "\n");
  json cands = json::array();
  for (const auto& x : r.candidates) {
    cands.push_back({{"seed", x.seed},
                     {"empty_confidence", x.empty_confidence},
                     {"mean_concept_confidence", x.mean_concept_confidence},
                     {"final_loss", x.final_loss}});
  }
  const json report = {{"config",
                        {{"k", a.k}, {"steps", a.steps}, {"n_models", a.n_models}, {"seed", a.seed},
                         {"batch_size", cfg.batch_size}, {"learning_rate", cfg.learning_rate}}},
                       {"chosen", r.chosen},
                       {"warning", r.warning},
                       {"training_accuracy", accuracy},
                       {"candidates", cands},
                       {"loss_history", r.history.loss}};
  write_text_file(a.out + ".report.json", report.dump(2) + "\n");
  const auto& best = r.candidates[r.chosen];
  log << "chose candidate " << r.chosen << " of " << r.candidates.size() << ": empty-sample confidence "
      << best.empty_confidence << ", mean concept confidence " << best.mean_concept_confidence
      << ", training accuracy " << accuracy << '\n';
  if (r.warning) log << "warning: no candidate classified the empty sample as negative\n";
  return r;
}

struct ExplainArgs {
  std::string model;
  std::string sample;
  std::string method = "flat-banz-add-rr-ft";
  double tau_factor = 0.9;
  std::uint64_t seed = 0;
  std::string out;
};

inline Explanation cmd_explain(const ExplainArgs& a, std::ostream& log) {
  if (!(a.tau_factor > 0.0 && a.tau_factor <= 1.0)) throw Error("tau-factor must lie in (0, 1]");
  const Model model = Model::from_json(read_json_file(a.model));
  const Sample s = Sample::from_json(read_json_file(a.sample));
  const MethodSpec method = MethodSpec::parse(a.method);
  const double conf = classify(model, s).confidence;
  if (conf <= 0.0) throw Error("sample not classified positive (confidence " + std::to_string(conf) + ")");
  ExplainOptions opt;
  opt.tau = a.tau_factor * conf;
  opt.seed = a.seed;
  const Explanation e = explain(model, s, method, opt);
  write_text_file(a.out, e.pruned.dump(2) + "\n");
  write_text_file(a.out + ".meta.json", e.metadata().dump(2) + "\n");
  log << "explanation keeps " << e.leaf_count << " of " << atomic_leaf_count(s, NodeSet::full(s))
      << " leaves, confidence " << e.confidence << " (tau " << opt.tau << ")\n";
  return e;
}

struct EvaluateArgs {
  std::string model;
  std::string dataset;
  std::optional<std::string> concept_file;
  std::string methods = "flat-banz-add";
  std::size_t n_explanations = 100;
  double tau_factor = 0.9;
  std::uint64_t seed = 0;
  std::string out;
};

inline EvalReport cmd_evaluate(const EvaluateArgs& a, std::ostream& log) {
  if (!(a.tau_factor > 0.0 && a.tau_factor <= 1.0)) throw Error("tau-factor must lie in (0, 1]");
  const Model model = Model::from_json(read_json_file(a.model));
  const auto data = read_dataset_file(a.dataset);
  std::optional<Concept> c;
  if (a.concept_file) c = Concept::from_json(read_json_file(*a.concept_file));
  EvalConfig cfg;
  cfg.methods = a.methods == "all" ? full_method_matrix() : parse_methods(a.methods);
  cfg.n_explanations = a.n_explanations;
  cfg.tau_factor = a.tau_factor;
  cfg.seed = a.seed;
  const EvalReport report = evaluate(model, data, c, cfg);
  json j = report.to_json();
  j["config"]["model"] = a.model;
  j["config"]["dataset"] = a.dataset;
  if (a.concept_file) j["config"]["concept"] = *a.concept_file;
  if (!a.out.empty()) {
    write_text_file(a.out, j.dump(2) + "\n");
    write_text_file(a.out + ".txt", report.table());
  }
  log << report.table();
  return report;
}

}  // namespace hmilx
