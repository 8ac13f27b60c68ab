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

#include <gtest/gtest.h>

#include <cmath>

#include "fixtures.hpp"
#include "gradcheck.hpp"
#include "hmilx/model.hpp"
#include "hmilx/train.hpp"

namespace hmilx {
namespace {

SchemaNode schema_of(std::initializer_list<const char*> texts) {
  std::vector<json> docs;
  for (const char* t : texts) docs.push_back(json::parse(t));
  return infer_schema(docs);
}

Sample sample_of(const char* text) { return Sample::from_json(json::parse(text)); }

// Random init leaves many units dead; nudging biases up keeps gradients alive.
Model lively_model(const SchemaNode& schema, std::size_t k, std::uint64_t seed) {
  Model m = build_model(schema, k, seed);
  std::mt19937_64 rng(seed + 1);
  std::uniform_real_distribution<double> u(0.05, 0.3);
  for (const auto& t : m.tensors()) {
    if (t.shape.size() == 1) {
      for (std::size_t i = 0; i < t.size(); ++i) m.parameters()[t.offset + i] = u(rng);
    }
  }
  return m;
}

TEST(BuildModel, ShapeBookkeeping) {
  const SchemaNode schema = schema_of({R"({"a":1})"});
  const Model m = build_model(schema, 5, 1);
  ASSERT_EQ(m.blocks().size(), 2u);
  EXPECT_EQ(m.blocks()[0].kind, SchemaKind::Dictionary);
  EXPECT_EQ(m.blocks()[1].kind, SchemaKind::Atomic);
  EXPECT_EQ(m.tensor("$/a#embed.W")->shape, (std::vector<std::size_t>{5, 1}));
  EXPECT_EQ(m.tensor("$#phi[a].W")->shape, (std::vector<std::size_t>{5, 5}));
  EXPECT_EQ(m.tensor("$#imputation[a]")->shape, (std::vector<std::size_t>{5}));
  EXPECT_EQ(m.tensor("$#combine.W")->shape, (std::vector<std::size_t>{5, 5}));
  EXPECT_EQ(m.tensor("head.hidden.W")->shape, (std::vector<std::size_t>{5, 5}));
  EXPECT_EQ(m.tensor("head.output.W")->shape, (std::vector<std::size_t>{2, 5}));
  for (std::size_t i = 0; i < 5; ++i) EXPECT_EQ(m.parameters()[m.tensor("$#imputation[a]")->offset + i], 0.0);
}

TEST(BuildModel, WidthFollowsK) {
  const Model m = build_model(schema_of({R"({"a":1,"l":[{"b":"x"}]})"}), 10, 1);
  EXPECT_EQ(m.tensor("$#combine.W")->shape, (std::vector<std::size_t>{10, 20}));
  EXPECT_EQ(m.tensor("$/l#aggregate.W")->shape, (std::vector<std::size_t>{10, 20}));
  EXPECT_EQ(m.tensor("$/l#imputation")->shape, (std::vector<std::size_t>{10}));
  EXPECT_EQ(m.tensor("head.output.W")->shape, (std::vector<std::size_t>{2, 10}));
}

TEST(BuildModel, OneBlockPerSchemaNode) {
  const SchemaNode schema = infer_schema(testing::device_corpus(200, 1));
  const Model m = build_model(schema, 5, 3);
  EXPECT_EQ(m.blocks().size(), count_schema_nodes(schema));
  // root 1; device_class, ip, mac 3; services list/item/port/protocol 4;
  // mdns list/item 2; upnp list/item/manufacturer/model_name/secure/services
  // list/item 7; dhcp list/item/classid/paramlist 4.
  EXPECT_EQ(m.blocks().size(), 21u);
}

TEST(BuildModel, GlorotLimits) {
  const Model m = build_model(infer_schema(testing::device_corpus(100, 1)), 5, 3);
  for (const auto& t : m.tensors()) {
    if (t.shape.size() != 2) continue;
    const double limit = std::sqrt(6.0 / static_cast<double>(t.shape[0] + t.shape[1]));
    for (std::size_t i = 0; i < t.size(); ++i) EXPECT_LE(std::fabs(m.parameters()[t.offset + i]), limit);
  }
}

TEST(Classify, ConfidenceFromLogits) {
  EXPECT_NEAR(confidence_from_logits(2.0, 0.0), std::exp(2.0) / (std::exp(2.0) + 1) - 1 / (std::exp(2.0) + 1),
              1e-15);
  EXPECT_NEAR(confidence_from_logits(2.0, 0.0), 0.7616, 1e-4);
  for (double t : {-30.0, -1.0, 0.0, 2.5, 400.0}) EXPECT_EQ(confidence_from_logits(t, t), 0.0);
}

class ModelOnDevices : public ::testing::Test {
 protected:
  void SetUp() override {
    corpus = testing::device_corpus(300, 21);
    schema = infer_schema(corpus);
    model = lively_model(schema, 5, 4);
  }
  std::vector<json> corpus;
  SchemaNode schema;
  Model model;
};

TEST_F(ModelOnDevices, RootOnlyMaskEqualsEmptySample) {
  for (std::size_t i = 0; i < 20; ++i) {
    const Sample s = Sample::from_json(corpus[i]);
    const auto a = embed(model, s, NodeSet::root_only(s));
    const Sample empty = empty_sample(schema);
    const auto b = embed(model, empty, NodeSet::full(empty));
    EXPECT_EQ(a, b);
    EXPECT_EQ(classify(model, s, NodeSet::root_only(s)).confidence, classify(model, empty).confidence);
  }
}

TEST_F(ModelOnDevices, FullMaskIsPlainForward) {
  const Sample s = Sample::from_json(corpus[3]);
  detail::Workspace ws;
  const BoundSample b = model.bind(s);
  const double plain = model.forward(b, ws, nullptr).confidence;
  EXPECT_EQ(classify(model, s, NodeSet::full(s)).confidence, plain);
}

TEST_F(ModelOnDevices, MaskingEqualsDeleting) {
  std::mt19937_64 rng(5);
  for (std::size_t i = 0; i < 60; ++i) {
    const Sample s = Sample::from_json(corpus[i]);
    NodeSet mask = NodeSet::full(s);
    for (NodeId n = 1; n < s.size(); ++n) mask.set(n, std::bernoulli_distribution(0.6)(rng));
    const Sample pruned = Sample::from_json(pruned_json(s, mask));
    EXPECT_EQ(embed(model, s, mask), embed(model, pruned, NodeSet::full(pruned))) << s.to_json().dump();
  }
}

TEST_F(ModelOnDevices, ListItemPermutationInvariance) {
  for (std::size_t i = 0; i < 60; ++i) {
    json doc = corpus[i];
    if (!doc.contains("services") || doc["services"].size() < 2) continue;
    json reversed = doc;
    std::reverse(reversed["services"].begin(), reversed["services"].end());
    const Sample a = Sample::from_json(doc), b = Sample::from_json(reversed);
    const auto ea = embed(model, a, NodeSet::full(a));
    const auto eb = embed(model, b, NodeSet::full(b));
    for (std::size_t d = 0; d < ea.size(); ++d) EXPECT_NEAR(ea[d], eb[d], 1e-12);
  }
}

TEST_F(ModelOnDevices, SingleIncludedItemAggregatesAlone) {
  const Sample s = sample_of(R"({"services":[{"port":80,"protocol":"tcp"},{"port":443,"protocol":"udp"}]})");
  NodeSet mask = NodeSet::full(s);
  // ids: 0 root, 1 services, 2 item0, 3 port, 4 protocol, 5 item1, ...
  mask.erase(5);
  const Sample only_first = sample_of(R"({"services":[{"port":80,"protocol":"tcp"}]})");
  EXPECT_EQ(embed(model, s, mask), embed(model, only_first, NodeSet::full(only_first)));
}

TEST_F(ModelOnDevices, EmptyListUsesListImputation) {
  const Sample s = sample_of(R"({"services":[{"port":80}]})");
  NodeSet mask = NodeSet::full(s);
  mask.erase(2);
  const Sample empty_list = sample_of(R"({"services":[]})");
  EXPECT_EQ(embed(model, s, mask), embed(model, empty_list, NodeSet::full(empty_list)));
  EXPECT_NE(embed(model, empty_list, NodeSet::full(empty_list)),
            embed(model, empty_sample(schema), NodeSet::full(empty_sample(schema))));
}

TEST_F(ModelOnDevices, CountersAdvanceOncePerCall) {
  const Sample s = Sample::from_json(corpus[0]);
  Evaluator ev(model, s);
  const auto before = model.counters().snapshot();
  ev.classify(NodeSet::full(s));
  EXPECT_EQ(ev.counters(), (CounterSnapshot{1, 0}));
  ev.embed(NodeSet::full(s));
  ev.subtree_gradients();
  EXPECT_EQ(ev.counters(), (CounterSnapshot{2, 1}));
  EXPECT_EQ(model.counters().snapshot() - before, (CounterSnapshot{2, 1}));
}

TEST_F(ModelOnDevices, SchemaMismatchOnUnknownKey) {
  EXPECT_THROW(model.bind(sample_of(R"({"nope":1})")), SchemaMismatch);
  EXPECT_THROW(model.bind(sample_of(R"({"mac":5})")), SchemaMismatch);
  EXPECT_THROW(model.bind(sample_of(R"({"services":{"port":1}})")), SchemaMismatch);
}

TEST_F(ModelOnDevices, SubtreeGradientsMatchFiniteDifferences) {
  std::size_t checked = 0;
  for (std::size_t i = 0; i < corpus.size() && checked < 8; ++i) {
    const Sample s = Sample::from_json(corpus[i]);
    const BoundSample b = model.bind(s);
    if (testing::kink_margin(model, b) < 1e-3) continue;
    ++checked;
    Evaluator ev(model, s);
    const auto grads = ev.subtree_gradients();
    for (NodeId n = 0; n < s.size(); ++n) {
      for (std::size_t d = 0; d < model.k(); ++d) {
        const double fd = testing::fd_subtree(model, b, n, d, 1e-4);
        EXPECT_TRUE(testing::close(grads[n * model.k() + d], fd, 1e-4))
            << "node " << n << " dim " << d << " analytic " << grads[n * model.k() + d] << " fd " << fd;
      }
    }
  }
  EXPECT_GE(checked, 4u);
}

TEST_F(ModelOnDevices, ParameterGradientsMatchFiniteDifferences) {
  std::size_t checked = 0;
  for (std::size_t i = 0; i < corpus.size() && checked < 2; ++i) {
    const Sample s = Sample::from_json(corpus[i]);
    const BoundSample b = model.bind(s);
    if (s.size() < 8 || testing::kink_margin(model, b) < 1e-3) continue;
    ++checked;
    for (bool positive : {true, false}) {
      detail::Workspace ws;
      std::vector<double> grad(model.parameters().size(), 0.0);
      cross_entropy_step(model, b, positive, ws, grad, 1.0);
      for (std::size_t j = 0; j < grad.size(); ++j) {
        const double fd = testing::fd_param(model, j, 1e-4, [&](const Model& m) {
          detail::Workspace w;
          return cross_entropy_step(m, b, positive, w, {}, 1.0);
        });
        ASSERT_TRUE(testing::close(grad[j], fd, 1e-4)) << "param " << j << " analytic " << grad[j] << " fd " << fd;
      }
    }
  }
  EXPECT_EQ(checked, 2u);
}

TEST_F(ModelOnDevices, IdenticalItemsGetIdenticalGradients) {
  const Sample s = sample_of(R"({"mdns_services":["_ipp._tcp","_ipp._tcp"]})");
  EXPECT_EQ(grad_wrt_subtree(model, s, 2), grad_wrt_subtree(model, s, 3));
  const Sample t = sample_of(R"({"services":[{"port":80},{"port":80}]})");
  EXPECT_EQ(grad_wrt_subtree(model, t, 2), grad_wrt_subtree(model, t, 4));
  EXPECT_EQ(grad_wrt_subtree(model, t, 3), grad_wrt_subtree(model, t, 5));
}

TEST_F(ModelOnDevices, RootGradientIsNonzero) {
  const Sample s = Sample::from_json(corpus[1]);
  const auto g = grad_wrt_subtree(model, s, 0);
  double norm = 0.0;
  for (double x : g) norm += x * x;
  EXPECT_GT(norm, 0.0);
}

TEST_F(ModelOnDevices, JsonRoundTripPreservesPredictions) {
  const Model back = Model::from_json(json::parse(model.to_json().dump()), &schema);
  EXPECT_EQ(back.parameters(), model.parameters());
  for (std::size_t i = 0; i < 10; ++i) {
    const Sample s = Sample::from_json(corpus[i]);
    EXPECT_EQ(classify(back, s).confidence, classify(model, s).confidence);
  }
}

TEST_F(ModelOnDevices, LoadRejectsForeignSchema) {
  const SchemaNode other = schema_of({R"({"a":1})"});
  EXPECT_THROW(Model::from_json(model.to_json(), &other), ModelFormatError);
  json tampered = model.to_json();
  tampered["schema_fingerprint"] = "0000000000000000";
  EXPECT_THROW(Model::from_json(tampered), ModelFormatError);
}

}  // namespace
}  // namespace hmilx
