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
#include <functional>
#include <set>
#include <sstream>

#include "fixtures.hpp"
#include "hmilx/synthgen.hpp"
#include "oracles.hpp"

namespace hmilx {
namespace {

std::size_t leaf_count(const json& j) {
  if (j.is_object() || j.is_array()) {
    std::size_t n = 0;
    for (const auto& v : j) n += leaf_count(v);
    return n;
  }
  return 1;
}

class SynthOnDevices : public ::testing::Test {
 protected:
  static void SetUpTestSuite() { schema_ = new SchemaNode(infer_schema(testing::device_corpus(2000, 3))); }
  static void TearDownTestSuite() { delete schema_; }
  static SchemaNode* schema_;
  const SchemaNode& schema() const { return *schema_; }
};
SchemaNode* SynthOnDevices::schema_ = nullptr;

TEST(SampleFromSchema, CertainKeyAlwaysPresent) {
  const SchemaNode s = infer_schema({json::parse(R"({"a":1,"b":2})"), json::parse(R"({"a":3})")});
  std::mt19937_64 rng(1);
  std::size_t with_b = 0;
  for (int i = 0; i < 200; ++i) {
    const json d = sample_from_schema(s, rng);
    EXPECT_TRUE(d.contains("a"));
    with_b += d.contains("b") ? 1 : 0;
  }
  EXPECT_GT(with_b, 60u);
  EXPECT_LT(with_b, 140u);
}

TEST(SampleFromSchema, SingleObservedLength) {
  const SchemaNode s = infer_schema({json::parse(R"({"l":["x"]})"), json::parse(R"({"l":["y"]})")});
  std::mt19937_64 rng(2);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(sample_from_schema(s, rng)["l"].size(), 1u);
}

TEST(SampleFromSchema, EmptyStatisticsThrow) {
  std::mt19937_64 rng(3);
  EXPECT_THROW(sample_from_schema(SchemaNode::atomic(ValueKind::String), rng), EmptyStats);
  EXPECT_THROW(sample_from_schema(SchemaNode::dictionary(), rng), EmptyStats);
  SchemaNode list = SchemaNode::list();
  list.node_count = 1;
  EXPECT_THROW(sample_from_schema(list, rng), EmptyStats);
}

TEST_F(SynthOnDevices, GeneratedDocumentsValidate) {
  std::mt19937_64 rng(4);
  for (int i = 0; i < 500; ++i) EXPECT_TRUE(validate(sample_from_schema(schema(), rng), schema()).empty());
}

// Re-infers the schema of 10,000 draws and compares every dictionary key's
// frequency with its source probability under a 3-sigma binomial bound.
TEST_F(SynthOnDevices, KeyPresenceWithinBinomialBounds) {
  std::mt19937_64 rng(5);
  std::vector<json> docs;
  for (int i = 0; i < 10000; ++i) docs.push_back(sample_from_schema(schema(), rng));
  const SchemaNode observed = infer_schema(docs);
  std::size_t checked = 0;
  std::function<void(const SchemaNode&, const SchemaNode&, const std::string&)> walk =
      [&](const SchemaNode& src, const SchemaNode& obs, const std::string& where) {
        if (src.kind == SchemaKind::Dictionary) {
          for (const auto& [key, child] : src.children) {
            const double p = static_cast<double>(src.key_presence.at(key)) / static_cast<double>(src.node_count);
            const double n = static_cast<double>(obs.node_count);
            const auto it = obs.key_presence.find(key);
            const double got = it == obs.key_presence.end() ? 0.0 : static_cast<double>(it->second);
            const double sigma = std::sqrt(n * p * (1.0 - p));
            EXPECT_LE(std::abs(got - n * p), 3.0 * sigma + 1e-9) << where << "/" << key;
            ++checked;
            if (const SchemaNode* oc = obs.child(key)) walk(*child, *oc, where + "/" + key);
          }
        } else if (src.kind == SchemaKind::List && src.item && obs.item) {
          walk(*src.item, *obs.item, where + "/[]");
        }
      };
  walk(schema(), observed, "");
  EXPECT_GE(checked, 15u);
}

TEST_F(SynthOnDevices, ConceptShapes) {
  std::mt19937_64 rng(6);
  for (ConceptKind kind : kAllConceptKinds) {
    const Concept c = make_concept(schema(), kind, rng);
    const ConceptShape shape = shape_of(kind);
    ASSERT_EQ(c.fragments.size(), shape.fragments) << to_string(kind);
    std::set<std::string> seen;
    for (const auto& f : c.fragments) {
      EXPECT_EQ(leaf_count(f), shape.paths) << f.dump();
      EXPECT_TRUE(validate(f, schema()).empty()) << f.dump();
      seen.insert(f.dump());
    }
    EXPECT_EQ(seen.size(), c.fragments.size());
  }
}

TEST_F(SynthOnDevices, SinglePathConceptLooksLikeAPath) {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 30; ++i) {
    const json f = make_concept(schema(), ConceptKind::I, rng).fragments.at(0);
    json cur = f;
    while (cur.is_object() || cur.is_array()) {
      ASSERT_EQ(cur.size(), 1u) << f.dump();
      cur = cur.is_object() ? cur.begin().value() : cur[0];
    }
  }
}

TEST_F(SynthOnDevices, MergedPathsShareListItems) {
  std::mt19937_64 rng(8);
  for (int i = 0; i < 50; ++i) {
    const json f = make_concept(schema(), ConceptKind::V, rng).fragments.at(0);
    std::function<void(const json&)> check = [&](const json& j) {
      if (j.is_array()) {
        EXPECT_EQ(j.size(), 1u) << f.dump();
      }
      if (j.is_object() || j.is_array()) {
        for (const auto& v : j) check(v);
      }
    };
    check(f);
  }
}

TEST(MakeConcept, InsufficientPaths) {
  const SchemaNode s = infer_schema({json::parse(R"({"a":1,"b":"x"})"), json::parse(R"({"a":2,"b":"y"})")});
  std::mt19937_64 rng(1);
  EXPECT_NO_THROW(make_concept(s, ConceptKind::IV, rng));
  EXPECT_THROW(make_concept(s, ConceptKind::III, rng), InsufficientPaths);
}

TEST(ContainsSubtree, PaperTwoLeafExample) {
  const json f = json::parse(R"({"upnp":[{"model_name":"Sonos Play 3","manufacturer":"Sonos, Inc."}]})");
  const json one = json::parse(R"({"upnp":[{"model_name":"Sonos Play 3"}],"ip":"10.0.0.1"})");
  const json split = json::parse(R"({"upnp":[{"model_name":"Sonos Play 3"},{"manufacturer":"Sonos, Inc."}]})");
  const json both = json::parse(R"({"upnp":[{"x":1},{"model_name":"Sonos Play 3","manufacturer":"Sonos, Inc."}]})");
  EXPECT_FALSE(contains_subtree(one, f));
  EXPECT_FALSE(contains_subtree(split, f));
  EXPECT_TRUE(contains_subtree(both, f));
}

TEST(ContainsSubtree, ListItemsMatchInjectively) {
  const json f = json::parse(R"({"l":[{"a":1},{"b":2}]})");
  EXPECT_FALSE(contains_subtree(json::parse(R"({"l":[{"a":1,"b":2}]})"), f));
  EXPECT_FALSE(testing::oracle_contains(json::parse(R"({"l":[{"a":1,"b":2}]})"), f));
  // Needs an augmenting path: the first item fits both fragment items.
  EXPECT_TRUE(contains_subtree(json::parse(R"({"l":[{"a":1,"b":2},{"a":1}]})"), f));
  EXPECT_TRUE(contains_subtree(json::parse(R"({"n":1.0})"), json::parse(R"({"n":1})")));
  EXPECT_FALSE(contains_subtree(json::parse(R"({"n":"1"})"), json::parse(R"({"n":1})")));
}

TEST_F(SynthOnDevices, InsertionImpliesContainmentAndIsIdempotent) {
  std::mt19937_64 rng(9);
  for (int i = 0; i < 200; ++i) {
    const Concept c = make_concept(schema(), kAllConceptKinds[i % 7], rng);
    json s = sample_from_schema(schema(), rng);
    for (const auto& f : c.fragments) {
      insert_fragment(s, f);
      EXPECT_TRUE(contains_subtree(s, f));
      EXPECT_TRUE(testing::oracle_contains(s, f));
      const json before = s;
      insert_fragment(s, f);
      EXPECT_EQ(s, before);
    }
    EXPECT_TRUE(validate(s, schema()).empty());
  }
}

TEST_F(SynthOnDevices, BalancedVerifiedDataset) {
  std::mt19937_64 rng(10);
  for (ConceptKind kind : kAllConceptKinds) {
    const Concept c = make_concept(schema(), kind, rng);
    const auto data = generate_dataset(schema(), c, 100, 0.5, 77);
    std::size_t pos = 0;
    for (const auto& ls : data) {
      pos += ls.positive ? 1 : 0;
      bool any = false;
      for (const auto& f : c.fragments) any = any || testing::oracle_contains(ls.sample, f);
      EXPECT_EQ(any, ls.positive);
      EXPECT_EQ(ls.inserted.has_value(), ls.positive);
      if (ls.inserted) {
        EXPECT_TRUE(testing::oracle_contains(ls.sample, *ls.inserted));
      }
    }
    EXPECT_EQ(pos, 50u) << to_string(kind);
  }
}

TEST_F(SynthOnDevices, DatasetIsDeterministicAndRoundTrips) {
  std::mt19937_64 rng(11);
  const Concept c = make_concept(schema(), ConceptKind::VI, rng);
  const auto a = generate_dataset(schema(), c, 60, 0.3, 5);
  const auto b = generate_dataset(schema(), c, 60, 0.3, 5);
  std::ostringstream sa, sb;
  write_dataset(sa, a);
  write_dataset(sb, b);
  EXPECT_EQ(sa.str(), sb.str());
  std::istringstream in(sa.str());
  const auto back = read_dataset(in);
  ASSERT_EQ(back.size(), a.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(back[i].to_json(), a[i].to_json());
  EXPECT_EQ(Concept::from_json(c.to_json()).to_json(), c.to_json());
  EXPECT_THROW(generate_dataset(schema(), c, 10, 1.0, 5), Error);
}

TEST(ExcessLeaves, CountsUnmatchedLeaves) {
  const json f = json::parse(R"({"upnp":[{"model_name":"Sonos Play 3"}]})");
  EXPECT_EQ(excess_leaves(f, f), 0u);
  EXPECT_EQ(excess_leaves(json::parse(R"({"upnp":[{"model_name":"Sonos Play 3"}],"ip":"1.2.3.4"})"), f), 1u);
  EXPECT_EQ(excess_leaves(json::parse(R"({"ip":"1.2.3.4","mac":"aa"})"), f), 2u);
  EXPECT_EQ(excess_leaves(json::parse(R"({"upnp":[{"model_name":"Sonos Play 3"},{"model_name":"Sonos Play 3"}]})"), f),
            1u);
  EXPECT_EQ(excess_leaves(json::object(), f), 0u);
}

}  // namespace
}  // namespace hmilx
